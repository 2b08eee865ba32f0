#include "affectlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "affectlab/tensor.hpp"

namespace affectlab::metrics {

using nlohmann::json;

namespace {

template <typename T>
T field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw std::invalid_argument(fmt::format("missing field \"{}\"", key));
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument(fmt::format("field \"{}\" has the wrong type", key));
    }
}

void require_nonempty(const char* op, bool empty) {
    if (empty) throw std::invalid_argument(fmt::format("{}: empty input", op));
}

}  // namespace

TraceParseError::TraceParseError(std::size_t line, const std::string& what)
    : std::runtime_error(fmt::format("line {}: {}", line, what)), line_(line) {}

json to_json(const TurnRecord& t) {
    return json{{"episode", t.episode},
                {"turn", t.turn},
                {"emotion", t.emotion},
                {"intent", t.intent},
                {"engagement", t.engagement},
                {"strategy", t.strategy},
                {"tone", t.tone},
                {"r_immediate", t.r_immediate},
                {"r_engagement", t.r_engagement},
                {"r_conversion", t.r_conversion},
                {"done", t.done},
                {"kb_weights", t.kb_weights},
                {"pi", t.pi},
                {"hidden_need", t.hidden_need},
                {"best_strategy", t.best_strategy},
                {"max_turns", t.max_turns}};
}

TurnRecord turn_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("expected a JSON object");
    TurnRecord t;
    t.episode = field<std::size_t>(j, "episode");
    t.turn = field<std::size_t>(j, "turn");
    const auto emotion = field<std::vector<double>>(j, "emotion");
    if (emotion.size() != sim::kEmotionClasses) throw std::invalid_argument("emotion must have 6 entries");
    std::copy(emotion.begin(), emotion.end(), t.emotion.begin());
    t.intent = field<double>(j, "intent");
    t.engagement = field<double>(j, "engagement");
    t.strategy = field<std::size_t>(j, "strategy");
    t.tone = field<double>(j, "tone");
    t.r_immediate = field<double>(j, "r_immediate");
    t.r_engagement = field<double>(j, "r_engagement");
    t.r_conversion = field<double>(j, "r_conversion");
    t.done = field<bool>(j, "done");
    t.kb_weights = field<std::vector<double>>(j, "kb_weights");
    t.pi = field<std::vector<double>>(j, "pi");
    t.hidden_need = field<std::size_t>(j, "hidden_need");
    t.best_strategy = field<std::size_t>(j, "best_strategy");
    t.max_turns = field<std::size_t>(j, "max_turns");
    if (t.max_turns == 0) throw std::invalid_argument("max_turns must be positive");
    return t;
}

void write_jsonl(std::ostream& out, const std::vector<EpisodeTrace>& episodes) {
    for (const auto& ep : episodes)
        for (const auto& t : ep.turns) out << to_json(t).dump() << '\n';
}

std::vector<EpisodeTrace> read_jsonl(std::istream& in) {
    std::vector<EpisodeTrace> episodes;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        TurnRecord t;
        try {
            t = turn_from_json(json::parse(line));
        } catch (const std::exception& e) {
            throw TraceParseError(line_no, e.what());
        }
        if (episodes.empty() || episodes.back().episode != t.episode) {
            episodes.push_back({t.episode, {}});
        }
        episodes.back().turns.push_back(std::move(t));
    }
    return episodes;
}

sim::EmotionVector response_embedding(double tone) {
    std::size_t nearest = 0;
    for (std::size_t c = 1; c < sim::kEmotionClasses; ++c) {
        if (std::abs(sim::valence(c) - tone) < std::abs(sim::valence(nearest) - tone)) nearest = c;
    }
    sim::EmotionVector e;
    e.fill(kResponseLabelSmoothing / static_cast<double>(sim::kEmotionClasses));
    e[nearest] += 1.0 - kResponseLabelSmoothing;
    return e;
}

double emotional_consistency(const std::vector<EmotionPair>& pairs) {
    require_nonempty("emotional_consistency", pairs.empty());
    double acc = 0.0;
    for (const auto& p : pairs) acc += cosine_similarity(p.e_user, p.e_response);
    return acc / static_cast<double>(pairs.size());
}

double emotional_consistency(const EpisodeTrace& trace) {
    std::vector<EmotionPair> pairs;
    pairs.reserve(trace.turns.size());
    for (const auto& t : trace.turns) pairs.push_back({t.emotion, response_embedding(t.tone)});
    return emotional_consistency(pairs);
}

double engagement_score(const EpisodeTrace& trace) {
    require_nonempty("engagement_score", trace.turns.empty());
    double acc = 0.0;
    for (const auto& t : trace.turns) acc += t.engagement;
    const double n = static_cast<double>(trace.turns.size());
    return 0.5 * (n / static_cast<double>(trace.turns.front().max_turns)) + 0.5 * (acc / n);
}

double persuasive_success_rate(const std::vector<bool>& conversions) {
    require_nonempty("persuasive_success_rate", conversions.empty());
    const auto wins = std::count(conversions.begin(), conversions.end(), true);
    return static_cast<double>(wins) / static_cast<double>(conversions.size());
}

double persuasive_success_rate(const std::vector<EpisodeTrace>& traces) {
    std::vector<bool> conversions;
    conversions.reserve(traces.size());
    for (const auto& t : traces) conversions.push_back(t.converted());
    return persuasive_success_rate(conversions);
}

double eiq(const std::vector<EpisodeTrace>& traces) {
    std::array<std::size_t, sim::kEmotionClasses> seen{}, matched{};
    for (const auto& ep : traces)
        for (const auto& t : ep.turns) {
            const std::size_t c = sim::dominant(t.emotion);
            ++seen[c];
            if (t.strategy == t.best_strategy) ++matched[c];
        }
    double acc = 0.0;
    std::size_t classes = 0;
    for (std::size_t c = 0; c < sim::kEmotionClasses; ++c) {
        if (seen[c] == 0) continue;
        acc += static_cast<double>(matched[c]) / static_cast<double>(seen[c]);
        ++classes;
    }
    require_nonempty("eiq", classes == 0);
    return acc / static_cast<double>(classes);
}

double knowledge_integration_accuracy(const std::vector<EpisodeTrace>& traces) {
    std::size_t turns = 0, hits = 0;
    for (const auto& ep : traces)
        for (const auto& t : ep.turns) {
            ++turns;
            if (t.kb_weights.empty()) continue;
            const auto slot = static_cast<std::size_t>(std::max_element(t.kb_weights.begin(), t.kb_weights.end()) -
                                                       t.kb_weights.begin());
            if (slot == t.hidden_need) ++hits;
        }
    require_nonempty("knowledge_integration_accuracy", turns == 0);
    return static_cast<double>(hits) / static_cast<double>(turns);
}

double session_objective(double emotional, double persuasive, double engagement, double alpha, double beta,
                         double gamma) {
    if (alpha < 0.0 || beta < 0.0 || gamma < 0.0) throw std::invalid_argument("objective weights must be nonnegative");
    return alpha * emotional + beta * persuasive + gamma * engagement;
}

json MetricsSummary::to_json() const {
    return json{{"episodes", episodes},
                {"emotional_consistency", emotional_consistency},
                {"emotional_consistency_x100", emotional_consistency * 100.0},
                {"persuasive_success_rate", persuasive_success_rate},
                {"engagement", engagement},
                {"eiq", eiq},
                {"kia", kia},
                {"objective", objective}};
}

MetricsSummary summarize(const std::vector<EpisodeTrace>& traces, const ObjectiveWeights& weights) {
    require_nonempty("summarize", traces.empty());
    MetricsSummary s;
    s.episodes = traces.size();
    double ec = 0.0, eng = 0.0;
    for (const auto& t : traces) {
        ec += emotional_consistency(t);
        eng += engagement_score(t);
    }
    const double n = static_cast<double>(traces.size());
    s.emotional_consistency = ec / n;
    s.engagement = eng / n;
    s.persuasive_success_rate = persuasive_success_rate(traces);
    s.eiq = eiq(traces);
    s.kia = knowledge_integration_accuracy(traces);
    s.objective = session_objective(s.emotional_consistency, s.persuasive_success_rate, s.engagement, weights.alpha,
                                    weights.beta, weights.gamma);
    return s;
}

BootstrapInterval paired_bootstrap(const std::vector<double>& a, const std::vector<double>& b, std::size_t resamples,
                                   std::uint64_t seed) {
    if (a.size() != b.size()) throw std::invalid_argument("paired_bootstrap: samples must have equal length");
    require_nonempty("paired_bootstrap", a.empty() || resamples == 0);
    const std::size_t n = a.size();
    std::vector<double> diff(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += (diff[i] = a[i] - b[i]);

    Rng rng(seed);
    std::vector<double> means(resamples);
    for (auto& m : means) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += diff[rng.below(n)];
        m = acc / static_cast<double>(n);
    }
    std::sort(means.begin(), means.end());
    auto quantile = [&](double q) {
        const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(resamples - 1)));
        return means[idx];
    };
    return {total / static_cast<double>(n), quantile(0.025), quantile(0.975)};
}

}  // namespace affectlab::metrics
