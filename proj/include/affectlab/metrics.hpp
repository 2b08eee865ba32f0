#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "affectlab/simenv.hpp"

namespace affectlab::metrics {

/// One dialogue turn as logged. `emotion` is the user's emotion when the agent
/// acted; `intent` and `engagement` are the values after the user responded.
struct TurnRecord {
    std::size_t episode = 0;
    std::size_t turn = 0;
    sim::EmotionVector emotion{};
    double intent = 0.0;
    double engagement = 0.0;
    std::size_t strategy = 0;
    double tone = 0.0;
    double r_immediate = 0.0;
    double r_engagement = 0.0;
    double r_conversion = 0.0;
    bool done = false;
    std::vector<double> kb_weights;  // empty when knowledge grounding is disabled
    std::vector<double> pi;
    std::size_t hidden_need = 0;
    std::size_t best_strategy = 0;  // compatibility argmax for the user's dominant emotion
    std::size_t max_turns = 0;
};

struct EpisodeTrace {
    std::size_t episode = 0;
    std::vector<TurnRecord> turns;

    bool converted() const { return !turns.empty() && turns.back().r_conversion == 1.0; }
};

nlohmann::json to_json(const TurnRecord& turn);
/// Throws std::invalid_argument on missing or mistyped fields.
TurnRecord turn_from_json(const nlohmann::json& j);

void write_jsonl(std::ostream& out, const std::vector<EpisodeTrace>& episodes);
/// Groups consecutive lines by episode id. Malformed input throws
/// TraceParseError carrying the 1-based line number.
std::vector<EpisodeTrace> read_jsonl(std::istream& in);

class TraceParseError : public std::runtime_error {
   public:
    TraceParseError(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

   private:
    std::size_t line_;
};

struct EmotionPair {
    sim::EmotionVector e_user{};
    sim::EmotionVector e_response{};
};

inline constexpr double kResponseLabelSmoothing = 0.05;

/// Smoothed one-hot of the class whose valence is nearest to `tone`.
sim::EmotionVector response_embedding(double tone);

/// Mean cosine similarity of user and response emotion vectors.
double emotional_consistency(const std::vector<EmotionPair>& pairs);
double emotional_consistency(const EpisodeTrace& trace);

/// 0.5 * turns/max_turns + 0.5 * mean engagement.
double engagement_score(const EpisodeTrace& trace);

double persuasive_success_rate(const std::vector<EpisodeTrace>& traces);
double persuasive_success_rate(const std::vector<bool>& conversions);

/// Macro-average over emotion classes (by dominant user emotion) of the rate at
/// which the chosen strategy is that class's best strategy. Classes never seen
/// are skipped.
double eiq(const std::vector<EpisodeTrace>& traces);

/// Fraction of turns whose most-attended knowledge slot is the hidden-need slot.
double knowledge_integration_accuracy(const std::vector<EpisodeTrace>& traces);

double session_objective(double emotional, double persuasive, double engagement, double alpha, double beta,
                         double gamma);

struct ObjectiveWeights {
    double alpha = 1.0 / 3.0;
    double beta = 1.0 / 3.0;
    double gamma = 1.0 / 3.0;
};

struct MetricsSummary {
    std::size_t episodes = 0;
    double emotional_consistency = 0.0;
    double persuasive_success_rate = 0.0;
    double engagement = 0.0;
    double eiq = 0.0;
    double kia = 0.0;
    double objective = 0.0;

    nlohmann::json to_json() const;
    bool operator==(const MetricsSummary&) const = default;
};

MetricsSummary summarize(const std::vector<EpisodeTrace>& traces, const ObjectiveWeights& weights = {});

struct BootstrapInterval {
    double mean_difference = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

/// Paired bootstrap over episodes of mean(a - b), percentile 95% interval.
BootstrapInterval paired_bootstrap(const std::vector<double>& a, const std::vector<double>& b,
                                   std::size_t resamples, std::uint64_t seed);

}  // namespace affectlab::metrics
