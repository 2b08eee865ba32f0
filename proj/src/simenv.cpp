#include "affectlab/simenv.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "affectlab/tensor.hpp"

namespace affectlab::sim {

namespace {

constexpr std::array<std::string_view, kEmotionClasses> kEmotionNames = {"joy",  "sadness",  "anger",
                                                                        "fear", "surprise", "disgust"};
constexpr std::array<double, kEmotionClasses> kValence = {1.0, -0.5, -1.0, -0.6, 0.3, -0.8};
constexpr std::array<std::string_view, 4> kStrategyNames = {"logical_appeal", "emotional_appeal", "social_proof",
                                                           "urgency"};

std::pair<UserState, ObservationBundle> reset_with(const Scenario& scenario, Rng& rng) {
    const auto& cfg = scenario.config();
    UserState s;
    // Dirichlet-like draw concentrated on one class
    const std::size_t focus = rng.below(kEmotionClasses);
    double total = 0.0;
    for (std::size_t c = 0; c < kEmotionClasses; ++c) {
        s.emotion[c] = c == focus ? 1.0 + rng.uniform() : 0.3 * rng.uniform();
        total += s.emotion[c];
    }
    for (double& e : s.emotion) e /= total;
    s.intent = rng.uniform(0.1, 0.4);
    s.engagement = 0.8;
    s.hidden_need = rng.below(cfg.catalog_size);
    s.turn = 0;
    auto obs = scenario.emit(s, rng);
    return {s, std::move(obs)};
}

}  // namespace

std::string_view emotion_name(std::size_t index) { return kEmotionNames.at(index); }

std::optional<std::size_t> parse_emotion(std::string_view name) {
    for (std::size_t i = 0; i < kEmotionClasses; ++i) {
        if (kEmotionNames[i] == name) return i;
    }
    return std::nullopt;
}

double valence(std::size_t emotion_index) { return kValence.at(emotion_index); }

std::size_t dominant(const EmotionVector& emotion) {
    return static_cast<std::size_t>(std::max_element(emotion.begin(), emotion.end()) - emotion.begin());
}

std::string strategy_name(std::size_t index) {
    if (index < kStrategyNames.size()) return std::string(kStrategyNames[index]);
    return fmt::format("strategy_{}", index);
}

std::vector<std::vector<double>> ScenarioConfig::default_compatibility() {
    // Every column sums to zero, so no strategy wins without reading the user.
    //        logical emotional social urgency
    return {
        {-0.50, 0.00, -0.50, 1.00},   // joy
        {-0.25, 1.00, -0.25, -0.50},  // sadness
        {1.00, -0.75, -0.50, -0.50},  // anger
        {-0.50, 0.00, 1.00, -0.25},   // fear
        {1.00, 0.25, -0.75, 0.25},    // surprise
        {-0.75, -0.50, 1.00, 0.00},   // disgust
    };
}

ScenarioConfig ScenarioConfig::affect_promo() {
    ScenarioConfig cfg;
    cfg.max_turns = 22;
    return cfg;
}

std::size_t ScenarioConfig::best_strategy(std::size_t emotion_index) const {
    const auto& row = compatibility.at(emotion_index);
    return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

void ScenarioConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("env: " + msg); };
    if (d_text == 0 || d_vision == 0 || d_audio == 0 || d_query == 0 || d_behavior == 0 || d_context == 0) {
        fail("feature dimensions must be positive");
    }
    if (affect_slice == 0 || affect_slice > std::min({d_text, d_vision, d_audio})) {
        fail("affect_slice must lie in [1, min(d_text, d_vision, d_audio)]");
    }
    if (!(noise_std >= 0.0)) fail("noise_std must be nonnegative");
    if (!(conversion_threshold > 0.0 && conversion_threshold < 1.0)) fail("conversion_threshold must lie in (0,1)");
    if (catalog_size == 0 || catalog_dim == 0) fail("catalog_size and catalog_dim must be positive");
    if (num_strategies == 0) fail("num_strategies must be positive");
    if (max_turns == 0) fail("max_turns must be positive");
    if (emotion_mix < 0.0 || emotion_mix > 1.0) fail("emotion_mix must lie in [0,1]");
    if (compatibility.size() != kEmotionClasses) fail("compatibility must have 6 rows");
    for (std::size_t c = 0; c < kEmotionClasses; ++c) {
        const auto& row = compatibility[c];
        if (row.size() != num_strategies) {
            fail(fmt::format("compatibility row {} has {} entries, expected {}", c, row.size(), num_strategies));
        }
        const double mx = *std::max_element(row.begin(), row.end());
        if (std::count(row.begin(), row.end(), mx) != 1) {
            fail(fmt::format("compatibility row {} ({}) has a tied maximum", c, emotion_name(c)));
        }
        for (double v : row) {
            if (!std::isfinite(v)) fail("compatibility entries must be finite");
        }
    }
}

Scenario::Scenario(ScenarioConfig config) : config_(std::move(config)) {
    config_.validate();
    Rng rng(config_.scenario_seed);
    const std::size_t latent = latent_dim();

    auto block_matrix = [&](std::size_t rows, const ModalityGains& g) {
        Emission e{rows, latent, std::vector<double>(rows * latent)};
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < latent; ++c) {
                const double gain = c < kEmotionClasses ? g.emotion : (c < kEmotionClasses + 2 ? g.drive : g.need);
                e.m[r * latent + c] = rng.uniform(-1.0, 1.0) * gain;
            }
        }
        return e;
    };
    auto drive_matrix = [&](std::size_t rows) {
        Emission e{rows, 3, std::vector<double>(rows * 3)};
        for (double& v : e.m) v = rng.uniform(-1.0, 1.0);
        return e;
    };
    text_ = block_matrix(config_.d_text, config_.text_gains);
    vision_ = block_matrix(config_.d_vision, config_.vision_gains);
    audio_ = block_matrix(config_.d_audio, config_.audio_gains);
    query_ = drive_matrix(config_.d_query);
    behavior_ = drive_matrix(config_.d_behavior);
    context_ = drive_matrix(config_.d_context);

    // unit-norm catalog embeddings
    catalog_.assign(config_.catalog_size, std::vector<double>(config_.catalog_dim));
    for (auto& item : catalog_) {
        double norm = 0.0;
        for (double& v : item) {
            v = rng.normal();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (double& v : item) v /= norm;
    }
}

std::size_t Scenario::nearest_catalog_entry(const std::vector<double>& info) const {
    if (info.size() != config_.catalog_dim) {
        throw DimensionError(fmt::format("information_content has {} entries, catalog_dim is {}", info.size(),
                                         config_.catalog_dim));
    }
    std::size_t best = 0;
    double best_dot = -INFINITY;
    for (std::size_t j = 0; j < catalog_.size(); ++j) {
        double dot = 0.0;
        for (std::size_t i = 0; i < info.size(); ++i) dot += info[i] * catalog_[j][i];
        if (dot > best_dot) {
            best_dot = dot;
            best = j;
        }
    }
    return best;
}

std::vector<double> Scenario::apply(const Emission& e, const std::vector<double>& x, Rng& rng) const {
    std::vector<double> out(e.rows, 0.0);
    for (std::size_t r = 0; r < e.rows; ++r) {
        for (std::size_t c = 0; c < e.cols; ++c) out[r] += e.m[r * e.cols + c] * x[c];
        if (config_.noise_std > 0.0) out[r] += config_.noise_std * rng.normal();
    }
    return out;
}

ObservationBundle Scenario::emit(const UserState& state, Rng& rng) const {
    std::vector<double> latent(latent_dim(), 0.0);
    std::copy(state.emotion.begin(), state.emotion.end(), latent.begin());
    latent[kEmotionClasses] = state.intent;
    latent[kEmotionClasses + 1] = state.engagement;
    latent.at(kEmotionClasses + 2 + state.hidden_need) = 1.0;
    const std::vector<double> drive = {state.intent, state.engagement,
                                       static_cast<double>(state.turn) / static_cast<double>(config_.max_turns)};

    ObservationBundle obs;
    obs.f_text = apply(text_, latent, rng);
    obs.f_vision = apply(vision_, latent, rng);
    obs.f_audio = apply(audio_, latent, rng);
    const auto k = static_cast<std::ptrdiff_t>(config_.affect_slice);
    obs.f_facial.assign(obs.f_vision.begin(), obs.f_vision.begin() + k);
    obs.f_prosodic.assign(obs.f_audio.begin(), obs.f_audio.begin() + k);
    obs.f_linguistic.assign(obs.f_text.begin(), obs.f_text.begin() + k);
    obs.f_query = apply(query_, drive, rng);
    obs.f_behavior = apply(behavior_, drive, rng);
    obs.f_context = apply(context_, drive, rng);
    return obs;
}

std::pair<UserState, ObservationBundle> reset(const Scenario& scenario, std::uint64_t seed) {
    Rng rng(seed);
    return reset_with(scenario, rng);
}

Transition step(const UserState& state, const Action& action, const Scenario& scenario, Rng& rng) {
    const auto& cfg = scenario.config();
    if (state.done || state.turn >= cfg.max_turns) throw StateError("step called on a finished episode");
    if (action.strategy >= cfg.num_strategies) {
        throw std::invalid_argument(fmt::format("strategy {} out of range [0, {})", action.strategy, cfg.num_strategies));
    }
    if (!std::isfinite(action.emotion_tone)) throw std::invalid_argument("emotion_tone must be finite");
    for (double v : action.information_content) {
        if (!std::isfinite(v)) throw std::invalid_argument("information_content must be finite");
    }

    Transition t;
    UserState& next = t.state;
    next = state;
    const std::size_t dom = dominant(state.emotion);
    const double r = cfg.compatibility[dom][action.strategy] - cfg.kappa * std::abs(action.emotion_tone - valence(dom));
    const bool need_match = scenario.nearest_catalog_entry(action.information_content) == state.hidden_need;

    next.intent = std::clamp(state.intent + cfg.eta_reward * r + (need_match ? cfg.eta_need : 0.0), 0.0, 1.0);
    next.engagement = std::clamp(state.engagement + cfg.eta_engagement * r - cfg.engagement_decay, 0.0, 1.0);

    // Emotion drift: toward joy after a well-received turn, toward anger/sadness after a poor one.
    EmotionVector target{};
    if (r > 0.0) {
        target[static_cast<std::size_t>(Emotion::joy)] = 1.0;
    } else {
        target[static_cast<std::size_t>(Emotion::anger)] = 0.5;
        target[static_cast<std::size_t>(Emotion::sadness)] = 0.5;
    }
    const double mix = cfg.emotion_mix * std::min(1.0, std::abs(r));
    double total = 0.0;
    for (std::size_t c = 0; c < kEmotionClasses; ++c) {
        double e = (1.0 - mix) * state.emotion[c] + mix * target[c];
        e *= std::exp(cfg.emotion_jitter * rng.normal());
        next.emotion[c] = e;
        total += e;
    }
    for (double& e : next.emotion) e /= total;

    next.turn = state.turn + 1;
    next.done = next.turn == cfg.max_turns || next.engagement < cfg.disengage_threshold;

    auto& fb = t.feedback;
    fb.r_immediate = r;
    fb.r_engagement = next.engagement;
    fb.done = next.done;
    fb.converted = next.done && next.intent >= cfg.conversion_threshold;
    fb.r_conversion = fb.converted ? 1.0 : 0.0;
    fb.need_matched = need_match;

    t.observation = scenario.emit(next, rng);
    return t;
}

SimEnv::SimEnv(std::shared_ptr<const Scenario> scenario) : scenario_(std::move(scenario)) {
    state_.done = true;
}

const ObservationBundle& SimEnv::reset(std::uint64_t seed) {
    rng_ = Rng(seed);
    std::tie(state_, observation_) = reset_with(*scenario_, rng_);
    return observation_;
}

const Transition& SimEnv::step(const Action& action) {
    last_ = sim::step(state_, action, *scenario_, rng_);
    state_ = last_.state;
    observation_ = last_.observation;
    return last_;
}

Action random_action(const ScenarioConfig& config, Rng& rng) {
    Action a;
    a.strategy = rng.below(config.num_strategies);
    a.emotion_tone = rng.uniform(-1.0, 1.0);
    a.information_content.resize(config.catalog_dim);
    for (double& v : a.information_content) v = rng.normal();
    return a;
}

Action oracle_action(const UserState& state, const Scenario& scenario) {
    const std::size_t dom = dominant(state.emotion);
    return {scenario.config().best_strategy(dom), valence(dom), scenario.catalog().at(state.hidden_need)};
}

namespace {

template <typename Policy>
PolicyRollout rollout(const Scenario& scenario, std::size_t episodes, std::uint64_t seed, Policy policy) {
    PolicyRollout out;
    for (std::size_t i = 0; i < episodes; ++i) {
        const std::uint64_t episode_seed = Rng::derive(seed, i);
        Rng policy_rng(Rng::derive(episode_seed, 1));
        Rng env_rng(episode_seed);
        auto [state, obs] = reset_with(scenario, env_rng);
        while (!state.done) {
            auto t = step(state, policy(state, policy_rng), scenario, env_rng);
            state = t.state;
            if (t.feedback.converted) ++out.conversions;
        }
        ++out.episodes;
    }
    return out;
}

}  // namespace

PolicyRollout random_policy_baseline(const Scenario& scenario, std::size_t episodes, std::uint64_t seed) {
    return rollout(scenario, episodes, seed,
                   [&](const UserState&, Rng& rng) { return random_action(scenario.config(), rng); });
}

PolicyRollout oracle_policy_rollout(const Scenario& scenario, std::size_t episodes, std::uint64_t seed) {
    return rollout(scenario, episodes, seed, [&](const UserState& s, Rng&) { return oracle_action(s, scenario); });
}

}  // namespace affectlab::sim
