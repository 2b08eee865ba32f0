#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "affectlab/rng.hpp"

namespace affectlab::sim {

inline constexpr std::size_t kEmotionClasses = 6;

/// Class order is fixed: joy, sadness, anger, fear, surprise, disgust.
enum class Emotion : std::size_t { joy = 0, sadness, anger, fear, surprise, disgust };

std::string_view emotion_name(std::size_t index);
std::optional<std::size_t> parse_emotion(std::string_view name);
/// Per-class valence: joy +1, surprise +0.3, sadness -0.5, fear -0.6, disgust -0.8, anger -1.
double valence(std::size_t emotion_index);

using EmotionVector = std::array<double, kEmotionClasses>;
std::size_t dominant(const EmotionVector& emotion);

/// How strongly each latent block drives a modality's emission.
struct ModalityGains {
    double emotion = 1.0;
    double drive = 1.0;  // intent and engagement
    double need = 1.0;   // hidden-need one-hot
};

struct ScenarioConfig {
    std::size_t d_text = 8;
    std::size_t d_vision = 8;
    std::size_t d_audio = 8;
    /// Width of the facial/prosodic/linguistic sub-slices (leading entries of vision/audio/text).
    std::size_t affect_slice = 4;
    std::size_t d_query = 4;
    std::size_t d_behavior = 4;
    std::size_t d_context = 4;

    ModalityGains text_gains{0.5, 1.0, 0.5};
    ModalityGains vision_gains{4.0, 0.25, 1.0};
    ModalityGains audio_gains{4.0, 1.0, 0.25};

    double noise_std = 0.1;
    double kappa = 0.5;                 // tone-mismatch penalty
    double eta_reward = 0.05;           // intent gain per unit immediate reward
    double eta_need = 0.15;             // intent gain on a need match
    double eta_engagement = 0.05;       // engagement gain per unit immediate reward
    double engagement_decay = 0.02;
    double disengage_threshold = 0.05;  // episode ends below this engagement
    double conversion_threshold = 0.6;
    double emotion_mix = 0.2;           // emotion drift rate toward the reward-favoured target
    double emotion_jitter = 0.1;        // log-normal noise on the emotion drift

    std::size_t catalog_size = 8;
    std::size_t catalog_dim = 16;
    std::size_t num_strategies = 4;
    std::size_t max_turns = 15;

    /// [emotion class][strategy] immediate-reward coefficient; each row has a unique max.
    std::vector<std::vector<double>> compatibility = default_compatibility();

    /// Seeds the emission matrices and catalog embeddings (not the episodes).
    std::uint64_t scenario_seed = 2024;

    static std::vector<std::vector<double>> default_compatibility();
    /// Longer sessions: 22 turns.
    static ScenarioConfig affect_promo();

    std::size_t best_strategy(std::size_t emotion_index) const;
    void validate() const;
};

/// Ordered strategy names for the default 4-strategy set.
std::string strategy_name(std::size_t index);

struct UserState {
    EmotionVector emotion{};
    double intent = 0.0;
    double engagement = 0.0;
    std::size_t hidden_need = 0;
    std::size_t turn = 0;
    bool done = false;
};

struct ObservationBundle {
    std::vector<double> f_text, f_vision, f_audio;
    std::vector<double> f_facial, f_prosodic, f_linguistic;
    std::vector<double> f_query, f_behavior, f_context;
};

struct Action {
    std::size_t strategy = 0;
    double emotion_tone = 0.0;
    std::vector<double> information_content;
};

struct UserFeedback {
    double r_immediate = 0.0;
    double r_engagement = 0.0;
    double r_conversion = 0.0;
    bool done = false;
    bool converted = false;
    bool need_matched = false;
};

/// Immutable scenario: config plus the seeded emission matrices and catalog.
/// Shared read-only across environment instances.
class Scenario {
   public:
    explicit Scenario(ScenarioConfig config);

    const ScenarioConfig& config() const { return config_; }
    std::size_t latent_dim() const { return kEmotionClasses + 2 + config_.catalog_size; }
    const std::vector<std::vector<double>>& catalog() const { return catalog_; }

    /// Index of the catalog entry with the largest inner product with `info` (lowest index on ties).
    std::size_t nearest_catalog_entry(const std::vector<double>& info) const;

    ObservationBundle emit(const UserState& state, Rng& rng) const;

   private:
    struct Emission {
        std::size_t rows = 0, cols = 0;
        std::vector<double> m;
    };
    std::vector<double> apply(const Emission& e, const std::vector<double>& x, Rng& rng) const;

    ScenarioConfig config_;
    Emission text_, vision_, audio_, query_, behavior_, context_;
    std::vector<std::vector<double>> catalog_;
};

/// Initial user state and first observation for an episode seed.
std::pair<UserState, ObservationBundle> reset(const Scenario& scenario, std::uint64_t seed);

struct Transition {
    UserState state;
    ObservationBundle observation;
    UserFeedback feedback;
};

/// One user turn in response to `action`. Throws StateError when the episode is over.
Transition step(const UserState& state, const Action& action, const Scenario& scenario, Rng& rng);

/// Stateful single-episode wrapper over reset/step with its own rng stream.
class SimEnv {
   public:
    explicit SimEnv(std::shared_ptr<const Scenario> scenario);

    const ObservationBundle& reset(std::uint64_t seed);
    const Transition& step(const Action& action);

    const UserState& state() const { return state_; }
    const Scenario& scenario() const { return *scenario_; }

   private:
    std::shared_ptr<const Scenario> scenario_;
    Rng rng_;
    UserState state_;
    ObservationBundle observation_;
    Transition last_;
};

/// Uniform strategy, tone ~ U[-1,1], information ~ N(0, I).
Action random_action(const ScenarioConfig& config, Rng& rng);
/// Best-compatibility strategy, valence-matched tone, and the hidden need's catalog vector.
Action oracle_action(const UserState& state, const Scenario& scenario);

struct PolicyRollout {
    std::size_t episodes = 0;
    std::size_t conversions = 0;
    double conversion_rate() const {
        return episodes ? static_cast<double>(conversions) / static_cast<double>(episodes) : 0.0;
    }
};

/// Monte-Carlo conversion rate of the random policy; episode i uses seed derive(seed, i).
PolicyRollout random_policy_baseline(const Scenario& scenario, std::size_t episodes, std::uint64_t seed);
PolicyRollout oracle_policy_rollout(const Scenario& scenario, std::size_t episodes, std::uint64_t seed);

}  // namespace affectlab::sim
