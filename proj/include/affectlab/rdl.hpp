#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "affectlab/checkpoint.hpp"
#include "affectlab/eiam.hpp"
#include "affectlab/metrics.hpp"
#include "affectlab/optim.hpp"
#include "affectlab/pkgn.hpp"
#include "affectlab/simenv.hpp"

namespace affectlab::rdl {

struct ModelConfig {
    std::size_t d_k = 16;
    std::size_t d_e = 16;
    std::size_t d_s = 32;
    std::size_t heads = 2;
    std::size_t slots_a = 6;
    std::size_t hidden = 32;  // policy trunk and critic width
    double init_log_std_tone = 0.0;
    double init_log_std_info = 1.0;
    bool learn_log_std = false;  // true makes the exploration scales trainable

    void validate() const;
};

/// Component switches for the ablation study.
struct AblationFlags {
    bool disable_pkgn = false;
    bool disable_eiam = false;
    bool disable_rdl = false;  // myopic credit assignment: gamma = lambda = 0
    bool text_only = false;
    bool static_knowledge = false;  // knowledge updated on the first turn only

    bool operator==(const AblationFlags&) const = default;
};

struct RewardWeights {
    double immediate = 0.5;
    double engagement = 0.3;
    double conversion = 0.2;

    /// Nonnegative and summing to 1 (within 1e-9).
    void validate() const;
};

double aggregate_reward(const sim::UserFeedback& feedback, const RewardWeights& weights);

/// Turn-level context features: [turn/max_turns, mean r_immediate so far,
/// one-hot of the previous strategy, last observed engagement].
class ConversationContext {
   public:
    ConversationContext(std::size_t num_strategies, std::size_t max_turns);

    Tensor features() const;
    void record(std::size_t strategy, const sim::UserFeedback& feedback);
    std::size_t turn() const { return turn_; }
    static std::size_t dim(std::size_t num_strategies) { return 3 + num_strategies; }

   private:
    std::size_t num_strategies_;
    std::size_t max_turns_;
    std::size_t turn_ = 0;
    double reward_sum_ = 0.0;
    std::optional<std::size_t> last_strategy_;
    double last_engagement_ = 0.0;
};

/// s_t = [S_t; C_t; mean-over-slots(K_f); mean-over-slots(K_a)]. A null
/// knowledge state contributes zeros.
Tensor compose_state(const Tensor& user_state, const Tensor& context, const pkgn::KnowledgeState* knowledge,
                     std::size_t d_k);

struct PolicyOutput {
    eiam::StrategyDistribution strategy;
    Tensor tone_mean;        // scalar, pre-tanh
    Tensor tone_log_std;     // scalar
    Tensor info_mean;        // [d_k]
    Tensor info_log_std;     // scalar, shared over dims
};

struct SampledAction {
    sim::Action action;
    Tensor log_prob;          // scalar on the tape
    double strategy_log_prob = 0.0;
    double pre_tanh_tone = 0.0;
};

/// Draws (or, if deterministic, takes the mode of) the hybrid action:
/// categorical strategy, tanh-squashed Gaussian tone, diagonal Gaussian
/// information vector. log_prob sums the component log densities.
SampledAction sample_action(const PolicyOutput& policy, Rng& rng, bool deterministic);

/// Log density of `action` under `policy` (tone via its pre-tanh value).
Tensor action_log_prob(const PolicyOutput& policy, std::size_t strategy, double pre_tanh_tone,
                       const std::vector<double>& info);

/// Per-turn record kept for the update.
struct Trajectory {
    std::vector<Tensor> states;     // s_t
    std::vector<sim::Action> actions;
    std::vector<Tensor> log_probs;  // scalars on the tape
    std::vector<Tensor> values;     // V(s_t), scalars on the tape
    std::vector<double> rewards;    // aggregated R_t
    std::vector<double> r_immediate, r_engagement, r_conversion;
    bool terminal = false;
    double bootstrap_value = 0.0;  // V(s_T); zero when terminal

    std::vector<double> advantages;  // filled by finalize
    std::vector<double> returns;

    std::size_t size() const { return rewards.size(); }
    std::vector<double> value_estimates() const;
    bool finalized() const { return advantages.size() == rewards.size() && !rewards.empty(); }
};

struct GaeResult {
    std::vector<double> advantages;
    std::vector<double> returns;
};

/// delta_t = R_t + gamma V_{t+1} - V_t, A_t = sum_k (gamma lambda)^k delta_{t+k},
/// returns_t = A_t + V_t, with V_T = bootstrap.
GaeResult gae_advantages(const std::vector<double>& rewards, const std::vector<double>& values, double bootstrap,
                         double gamma, double lambda);
void finalize(Trajectory& trajectory, double gamma, double lambda);

/// The sequential decision environment the agent talks to.
class Environment {
   public:
    virtual ~Environment() = default;
    virtual const sim::ObservationBundle& reset(std::uint64_t seed) = 0;
    virtual const sim::Transition& step(const sim::Action& action) = 0;
    virtual const sim::UserState& state() const = 0;
    virtual const std::vector<std::vector<double>>& catalog() const = 0;
    virtual std::size_t max_turns() const = 0;
    virtual std::size_t best_strategy(std::size_t emotion_index) const = 0;
};

class SimEnvironment : public Environment {
   public:
    explicit SimEnvironment(std::shared_ptr<const sim::Scenario> scenario) : env_(std::move(scenario)) {}

    const sim::ObservationBundle& reset(std::uint64_t seed) override { return env_.reset(seed); }
    const sim::Transition& step(const sim::Action& action) override { return env_.step(action); }
    const sim::UserState& state() const override { return env_.state(); }
    const std::vector<std::vector<double>>& catalog() const override { return env_.scenario().catalog(); }
    std::size_t max_turns() const override { return env_.scenario().config().max_turns; }
    std::size_t best_strategy(std::size_t emotion_index) const override {
        return env_.scenario().config().best_strategy(emotion_index);
    }

   private:
    sim::SimEnv env_;
};

/// Single-turn sanity environment: strategy `rewarding_arm` pays r_immediate = 1,
/// every other strategy pays 0. Observations are fixed.
class BanditEnvironment : public Environment {
   public:
    BanditEnvironment(const sim::ScenarioConfig& dims, std::size_t rewarding_arm);

    const sim::ObservationBundle& reset(std::uint64_t seed) override;
    const sim::Transition& step(const sim::Action& action) override;
    const sim::UserState& state() const override { return state_; }
    const std::vector<std::vector<double>>& catalog() const override { return catalog_; }
    std::size_t max_turns() const override { return 1; }
    std::size_t best_strategy(std::size_t) const override { return arm_; }

   private:
    std::size_t arm_;
    sim::ObservationBundle obs_;
    sim::UserState state_;
    sim::Transition last_;
    std::vector<std::vector<double>> catalog_;
};

struct RolloutMode {
    bool deterministic = false;
    bool training = false;  // enables dropout
    double dropout_rate = 0.0;
};

struct EpisodeRecord {
    Trajectory trajectory;
    metrics::EpisodeTrace trace;
    bool converted = false;
};

/// Everything learnable: knowledge grounding, emotion-intent alignment,
/// policy heads (rdl.policy.*, rdl.query) and the critic (rdl.value.*).
class Agent {
   public:
    Agent(const sim::ScenarioConfig& env, const ModelConfig& model, const AblationFlags& flags, std::uint64_t seed);

    /// Processes one observation, returning the policy, value and state.
    struct Step {
        Tensor state;
        PolicyOutput policy;
        Tensor value;
        std::optional<pkgn::Selection> selection;
    };

    /// Per-episode recurrent state (knowledge banks and context).
    struct Memory {
        std::optional<pkgn::KnowledgeState> knowledge;
        ConversationContext context;
    };

    Memory begin_episode(const std::vector<std::vector<double>>& catalog, std::size_t max_turns) const;
    Step forward(Memory& memory, const sim::ObservationBundle& obs, const RolloutMode& mode, Rng& rng) const;

    EpisodeRecord run_episode(Environment& env, std::uint64_t seed, std::size_t episode_index,
                              const RolloutMode& mode, const RewardWeights& weights) const;

    ParameterSet& params() { return params_; }
    const ParameterSet& params() const { return params_; }
    std::vector<Tensor> policy_parameters() const;
    std::vector<Tensor> value_parameters() const;
    const AblationFlags& flags() const { return flags_; }
    const pkgn::Pkgn& knowledge() const { return pkgn_; }
    const eiam::Eiam& alignment() const { return eiam_; }
    std::size_t state_dim() const;

   private:
    sim::ScenarioConfig env_;
    ModelConfig model_;
    AblationFlags flags_;
    ParameterSet params_;
    pkgn::Pkgn pkgn_;
    eiam::Eiam eiam_;
    Linear query_;
    Linear trunk_;
    Linear tone_head_;
    Linear info_head_;
    Tensor tone_log_std_;
    Tensor info_log_std_;
    FeedForward critic_;
};

struct LossReport {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double mean_reward = 0.0;
    std::size_t transitions = 0;
    double policy_grad_norm = 0.0;  // before clipping
    double value_grad_norm = 0.0;
};

struct UpdateOptions {
    double policy_lr = 2e-5;
    double value_lr = 2e-5;
    bool normalize_advantages = true;
    double max_grad_norm = 0.0;  // per group; 0 disables
};

/// policy loss = -mean(log_prob * A) with A held constant, value loss =
/// mean((returns - V)^2); one backward, then one descent step on each parameter
/// group. Throws std::runtime_error naming the episode if a loss is not finite.
LossReport actor_critic_update(std::vector<EpisodeRecord>& batch, Agent& agent, const UpdateOptions& options);

/// Builds the two losses without stepping; exposed for gradient tests.
struct Losses {
    Tensor policy;
    Tensor value;
};
Losses build_losses(const std::vector<EpisodeRecord>& batch, bool normalize_advantages);

struct TrainConfig {
    OptimizerConfig optimizer;
    std::size_t episodes = 5000;
    std::uint64_t seed = 1;
    double gamma = 0.95;
    double lambda = 0.95;
    RewardWeights rewards;
    bool normalize_advantages = true;
    std::size_t checkpoint_every = 0;  // batches; 0 writes only the final checkpoint
    std::size_t jobs = 1;

    void validate() const;
    std::size_t total_batches() const;
};

struct BatchReport {
    std::size_t batch = 0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double mean_R = 0.0;
    double conversion_rate = 0.0;
    double lr = 0.0;

    nlohmann::json to_json() const;
};

struct TrainOutputs {
    std::optional<std::filesystem::path> checkpoint_dir;
    std::optional<std::filesystem::path> log_dir;  // episodes.jsonl, train_report.jsonl
    bool keep_traces = false;
};

struct TrainResult {
    std::size_t steps = 0;
    std::vector<BatchReport> reports;
    std::vector<metrics::EpisodeTrace> traces;  // when keep_traces
    std::optional<std::filesystem::path> final_checkpoint;
};

using EnvironmentFactory = std::function<std::unique_ptr<Environment>()>;

/// Episode-batched actor-critic training. Episode i draws its seed from
/// Rng::derive(config.seed, i), so results do not depend on `jobs` and a run
/// resumed from a checkpoint at step k matches the uninterrupted run.
TrainResult train(Agent& agent, const EnvironmentFactory& make_env, const TrainConfig& config,
                  const TrainOutputs& outputs = {}, const std::optional<Checkpoint>& resume = std::nullopt);

/// Deterministic-policy evaluation; episode i uses seed Rng::derive(seed, i).
std::vector<metrics::EpisodeTrace> evaluate(const Agent& agent, const EnvironmentFactory& make_env,
                                            std::size_t episodes, std::uint64_t seed, std::size_t jobs = 1);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace affectlab::rdl
