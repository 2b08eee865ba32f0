#include "affectlab/rdl.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <thread>

#include <fmt/format.h>

namespace affectlab::rdl {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

// log(1 - tanh(u)^2), stable for large |u|
double log_tanh_jacobian(double u) {
    const double x = std::abs(u);
    return std::log(4.0) - 2.0 * x - 2.0 * std::log1p(std::exp(-2.0 * x));
}

Tensor as_tensor(const std::vector<double>& v) { return Tensor::vector(v); }

bool finite(double v) { return std::isfinite(v); }

}  // namespace

// ---------------------------------------------------------------------------
// configuration

void ModelConfig::validate() const {
    if (d_k == 0 || d_e == 0 || d_s == 0 || hidden == 0) throw ConfigError("model: dimensions must be positive");
    if (heads == 0 || d_k % heads != 0) {
        throw ConfigError(fmt::format("model: d_k {} must be divisible by heads {}", d_k, heads));
    }
    if (slots_a == 0) throw ConfigError("model: slots_a must be positive");
    if (!finite(init_log_std_tone) || !finite(init_log_std_info)) throw ConfigError("model: log-std init must be finite");
}

void RewardWeights::validate() const {
    if (immediate < 0.0 || engagement < 0.0 || conversion < 0.0) {
        throw ConfigError("train.reward_weights: weights must be nonnegative");
    }
    if (std::abs(immediate + engagement + conversion - 1.0) > 1e-9) {
        throw ConfigError(fmt::format("train.reward_weights: weights sum to {}, expected 1",
                                      immediate + engagement + conversion));
    }
}

double aggregate_reward(const sim::UserFeedback& f, const RewardWeights& w) {
    return w.immediate * f.r_immediate + w.engagement * f.r_engagement + w.conversion * f.r_conversion;
}

void TrainConfig::validate() const {
    if (episodes == 0) throw ConfigError("train.episodes must be positive");
    if (gamma < 0.0 || gamma > 1.0) throw ConfigError("train.gamma must lie in [0,1]");
    if (lambda < 0.0 || lambda > 1.0) throw ConfigError("train.lambda must lie in [0,1]");
    if (jobs == 0) throw ConfigError("train.jobs must be positive");
    rewards.validate();
    OptimizerConfig o = optimizer;
    o.total_steps = total_batches();
    o.validate();
}

std::size_t TrainConfig::total_batches() const {
    const std::size_t b = std::max<std::size_t>(optimizer.batch_size, 1);
    return (episodes + b - 1) / b;
}

// ---------------------------------------------------------------------------
// state composition

ConversationContext::ConversationContext(std::size_t num_strategies, std::size_t max_turns)
    : num_strategies_(num_strategies), max_turns_(max_turns) {}

Tensor ConversationContext::features() const {
    std::vector<double> f(dim(num_strategies_), 0.0);
    f[0] = static_cast<double>(turn_) / static_cast<double>(max_turns_);
    f[1] = turn_ ? reward_sum_ / static_cast<double>(turn_) : 0.0;
    if (last_strategy_) f[2 + *last_strategy_] = 1.0;
    f[2 + num_strategies_] = last_engagement_;
    return Tensor::vector(std::move(f));
}

void ConversationContext::record(std::size_t strategy, const sim::UserFeedback& feedback) {
    ++turn_;
    reward_sum_ += feedback.r_immediate;
    last_strategy_ = strategy;
    last_engagement_ = feedback.r_engagement;
}

Tensor compose_state(const Tensor& user_state, const Tensor& context, const pkgn::KnowledgeState* knowledge,
                     std::size_t d_k) {
    if (knowledge == nullptr) return concat({user_state, context, Tensor::zeros({2 * d_k})});
    if (knowledge->factual.dim(1) != d_k || knowledge->affective.dim(1) != d_k) {
        throw DimensionError(fmt::format("compose_state: knowledge width differs from d_k {}", d_k));
    }
    return concat({user_state, context, mean_rows(knowledge->factual), mean_rows(knowledge->affective)});
}

// ---------------------------------------------------------------------------
// hybrid action distribution

Tensor action_log_prob(const PolicyOutput& policy, std::size_t strategy, double pre_tanh_tone,
                       const std::vector<double>& info) {
    Tensor lp_strategy = pick(log_softmax(policy.strategy.logits), strategy);

    Tensor tone_z2 = scale_by(square(sub(Tensor::scalar(pre_tanh_tone), policy.tone_mean)),
                              exp(scale(policy.tone_log_std, -2.0)));
    Tensor lp_tone = sub(scale(tone_z2, -0.5), policy.tone_log_std);

    const double d = static_cast<double>(info.size());
    Tensor info_z2 =
        scale_by(sum(square(sub(as_tensor(info), policy.info_mean))), exp(scale(policy.info_log_std, -2.0)));
    Tensor lp_info = sub(scale(info_z2, -0.5), scale(policy.info_log_std, d));

    // constants: Gaussian normalizers and the tanh change of variables
    const double constant = -(1.0 + d) * kHalfLog2Pi - log_tanh_jacobian(pre_tanh_tone);
    Tensor total = sum(concat({lp_strategy, lp_tone, lp_info}));
    return add(total, Tensor::scalar(constant));
}

SampledAction sample_action(const PolicyOutput& policy, Rng& rng, bool deterministic) {
    const auto probs = policy.strategy.probabilities.data();
    SampledAction out;
    auto& a = out.action;
    const double mu_tone = policy.tone_mean.item();
    const auto mu_info = policy.info_mean.data();
    if (deterministic) {
        a.strategy = static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
        out.pre_tanh_tone = mu_tone;
        a.information_content.assign(mu_info.begin(), mu_info.end());
    } else {
        const double u = rng.uniform();
        double cdf = 0.0;
        a.strategy = probs.size() - 1;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            cdf += probs[i];
            if (u < cdf) {
                a.strategy = i;
                break;
            }
        }
        out.pre_tanh_tone = rng.normal(mu_tone, std::exp(policy.tone_log_std.item()));
        const double info_std = std::exp(policy.info_log_std.item());
        a.information_content.resize(mu_info.size());
        for (std::size_t i = 0; i < mu_info.size(); ++i) a.information_content[i] = rng.normal(mu_info[i], info_std);
    }
    a.emotion_tone = std::tanh(out.pre_tanh_tone);
    out.log_prob = action_log_prob(policy, a.strategy, out.pre_tanh_tone, a.information_content);
    out.strategy_log_prob = std::log(probs[a.strategy]);
    return out;
}

// ---------------------------------------------------------------------------
// advantages

std::vector<double> Trajectory::value_estimates() const {
    std::vector<double> v;
    v.reserve(values.size());
    for (const auto& t : values) v.push_back(t.item());
    return v;
}

GaeResult gae_advantages(const std::vector<double>& rewards, const std::vector<double>& values, double bootstrap,
                         double gamma, double lambda) {
    if (rewards.empty()) throw std::invalid_argument("gae_advantages: empty trajectory");
    if (rewards.size() != values.size()) {
        throw DimensionError(fmt::format("gae_advantages: {} rewards vs {} values", rewards.size(), values.size()));
    }
    const std::size_t n = rewards.size();
    GaeResult out{std::vector<double>(n), std::vector<double>(n)};
    double running = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        const double next_value = i + 1 < n ? values[i + 1] : bootstrap;
        const double delta = rewards[i] + gamma * next_value - values[i];
        running = delta + gamma * lambda * running;
        out.advantages[i] = running;
        out.returns[i] = running + values[i];
    }
    return out;
}

void finalize(Trajectory& trajectory, double gamma, double lambda) {
    const double bootstrap = trajectory.terminal ? 0.0 : trajectory.bootstrap_value;
    auto gae = gae_advantages(trajectory.rewards, trajectory.value_estimates(), bootstrap, gamma, lambda);
    trajectory.advantages = std::move(gae.advantages);
    trajectory.returns = std::move(gae.returns);
}

// ---------------------------------------------------------------------------
// bandit sanity environment

BanditEnvironment::BanditEnvironment(const sim::ScenarioConfig& dims, std::size_t rewarding_arm) : arm_(rewarding_arm) {
    if (rewarding_arm >= dims.num_strategies) throw ConfigError("bandit: rewarding arm out of range");
    auto constant = [](std::size_t n) { return std::vector<double>(n, 0.5); };
    obs_.f_text = constant(dims.d_text);
    obs_.f_vision = constant(dims.d_vision);
    obs_.f_audio = constant(dims.d_audio);
    obs_.f_facial = constant(dims.affect_slice);
    obs_.f_prosodic = constant(dims.affect_slice);
    obs_.f_linguistic = constant(dims.affect_slice);
    obs_.f_query = constant(dims.d_query);
    obs_.f_behavior = constant(dims.d_behavior);
    obs_.f_context = constant(dims.d_context);
    catalog_.assign(dims.catalog_size, std::vector<double>(dims.catalog_dim, 0.0));
    for (std::size_t i = 0; i < dims.catalog_size; ++i) catalog_[i][i % dims.catalog_dim] = 1.0;
}

const sim::ObservationBundle& BanditEnvironment::reset(std::uint64_t) {
    state_ = {};
    state_.emotion[0] = 1.0;
    state_.engagement = 1.0;
    return obs_;
}

const sim::Transition& BanditEnvironment::step(const sim::Action& action) {
    if (state_.done) throw StateError("bandit episode already finished");
    state_.turn = 1;
    state_.done = true;
    last_.state = state_;
    last_.observation = obs_;
    last_.feedback = {};
    last_.feedback.r_immediate = action.strategy == arm_ ? 1.0 : 0.0;
    last_.feedback.r_engagement = 1.0;
    last_.feedback.done = true;
    return last_;
}

// ---------------------------------------------------------------------------
// agent

namespace {

pkgn::PkgnConfig pkgn_config(const sim::ScenarioConfig& env, const ModelConfig& m) {
    return {env.d_text, env.d_vision, env.d_audio, m.d_k, m.heads, env.catalog_size, m.slots_a};
}

eiam::EiamConfig eiam_config(const sim::ScenarioConfig& env, const ModelConfig& m) {
    return {env.affect_slice, env.affect_slice, env.affect_slice, env.d_query, env.d_behavior,
            env.d_context,    m.d_e,            m.d_s,            env.num_strategies};
}

const ModelConfig& checked(const sim::ScenarioConfig& env, const ModelConfig& m) {
    m.validate();
    if (m.d_k != env.catalog_dim) {
        throw ConfigError(fmt::format("model.d_k ({}) must equal env.catalog_dim ({})", m.d_k, env.catalog_dim));
    }
    return m;
}

}  // namespace

Agent::Agent(const sim::ScenarioConfig& env, const ModelConfig& model, const AblationFlags& flags, std::uint64_t seed)
    : env_(env),
      model_(checked(env, model)),
      flags_(flags),
      pkgn_([&]() -> pkgn::Pkgn {
          Rng rng(Rng::derive(seed, 101));
          return pkgn::Pkgn(params_, pkgn_config(env, model), rng);
      }()),
      eiam_([&]() -> eiam::Eiam {
          Rng rng(Rng::derive(seed, 102));
          return eiam::Eiam(params_, eiam_config(env, model), rng);
      }()) {
    Rng rng(Rng::derive(seed, 103));
    const std::size_t c_dim = ConversationContext::dim(env.num_strategies);
    query_ = Linear(params_, "rdl.query", model.d_s + c_dim, model.d_k, rng);
    trunk_ = Linear(params_, "rdl.policy.trunk", state_dim(), model.hidden, rng);
    tone_head_ = Linear(params_, "rdl.policy.tone", model.hidden, 1, rng);
    info_head_ = Linear(params_, "rdl.policy.info", model.hidden, model.d_k, rng);
    if (model.learn_log_std) {
        tone_log_std_ = params_.add("rdl.policy.log_std_tone", Tensor::scalar(model.init_log_std_tone));
        info_log_std_ = params_.add("rdl.policy.log_std_info", Tensor::scalar(model.init_log_std_info));
    } else {
        tone_log_std_ = Tensor::scalar(model.init_log_std_tone);
        info_log_std_ = Tensor::scalar(model.init_log_std_info);
    }
    critic_ = FeedForward(params_, "rdl.value", state_dim(), model.hidden, 1, rng, false);
}

std::size_t Agent::state_dim() const {
    return model_.d_s + ConversationContext::dim(env_.num_strategies) + 2 * model_.d_k;
}

std::vector<Tensor> Agent::policy_parameters() const {
    std::vector<Tensor> out;
    for (const auto& [name, t] : params_) {
        if (!name.starts_with("rdl.value.")) out.push_back(t);
    }
    return out;
}

std::vector<Tensor> Agent::value_parameters() const { return params_.with_prefix("rdl.value."); }

Agent::Memory Agent::begin_episode(const std::vector<std::vector<double>>& catalog, std::size_t max_turns) const {
    Memory m{std::nullopt, ConversationContext(env_.num_strategies, max_turns)};
    if (!flags_.disable_pkgn) m.knowledge = pkgn_.initial_state(catalog);
    return m;
}

Agent::Step Agent::forward(Memory& memory, const sim::ObservationBundle& obs, const RolloutMode& mode,
                           Rng& rng) const {
    const Tensor text = as_tensor(obs.f_text);
    if (!flags_.disable_pkgn) {
        const bool update = !flags_.static_knowledge || memory.context.turn() == 0;
        if (update) {
            auto fusion = flags_.text_only ? pkgn_.fuse_text_only(text)
                                           : pkgn_.fuse(text, as_tensor(obs.f_vision), as_tensor(obs.f_audio));
            memory.knowledge = pkgn_.update(*memory.knowledge, fusion.fused);
        }
    }

    const Tensor facial = flags_.text_only ? Tensor::zeros({obs.f_facial.size()}) : as_tensor(obs.f_facial);
    const Tensor prosodic = flags_.text_only ? Tensor::zeros({obs.f_prosodic.size()}) : as_tensor(obs.f_prosodic);
    const Tensor linguistic = as_tensor(obs.f_linguistic);
    const Tensor q = as_tensor(obs.f_query), b = as_tensor(obs.f_behavior), c = as_tensor(obs.f_context);

    Tensor user_state;
    if (flags_.disable_eiam) {
        user_state = eiam_.bypass_state(concat({facial, prosodic, linguistic, q, b, c}));
    } else {
        const eiam::EncodeMode em{mode.training, mode.dropout_rate, &rng};
        user_state = eiam_.fuse_state(eiam_.encode_emotion(facial, prosodic, linguistic, em),
                                      eiam_.encode_intent(q, b, c, em));
    }

    Step out;
    const Tensor context = memory.context.features();
    const pkgn::KnowledgeState* knowledge = memory.knowledge ? &*memory.knowledge : nullptr;
    out.state = compose_state(user_state, context, knowledge, model_.d_k);
    if (knowledge) out.selection = pkgn_.select(query_(concat({user_state, context})), *knowledge);

    out.policy.strategy = eiam_.strategy_policy(user_state);
    const Tensor h = tanh(trunk_(out.state));
    out.policy.tone_mean = tone_head_(h);
    out.policy.tone_log_std = tone_log_std_;
    out.policy.info_mean = out.selection ? add(out.selection->output, info_head_(h)) : info_head_(h);
    out.policy.info_log_std = info_log_std_;
    out.value = critic_(out.state.detach());
    return out;
}

EpisodeRecord Agent::run_episode(Environment& env, std::uint64_t seed, std::size_t episode_index,
                                 const RolloutMode& mode, const RewardWeights& weights) const {
    Rng rng(Rng::derive(seed, 1));
    sim::ObservationBundle obs = env.reset(seed);
    Memory memory = begin_episode(env.catalog(), env.max_turns());

    EpisodeRecord rec;
    rec.trace.episode = episode_index;
    auto& traj = rec.trajectory;
    while (true) {
        const sim::UserState before = env.state();
        Step step = forward(memory, obs, mode, rng);
        SampledAction sampled = sample_action(step.policy, rng, mode.deterministic);
        const sim::Transition& t = env.step(sampled.action);
        const auto& fb = t.feedback;

        traj.states.push_back(step.state);
        traj.actions.push_back(sampled.action);
        traj.log_probs.push_back(sampled.log_prob);
        traj.values.push_back(step.value);
        traj.rewards.push_back(aggregate_reward(fb, weights));
        traj.r_immediate.push_back(fb.r_immediate);
        traj.r_engagement.push_back(fb.r_engagement);
        traj.r_conversion.push_back(fb.r_conversion);
        memory.context.record(sampled.action.strategy, fb);

        metrics::TurnRecord turn;
        turn.episode = episode_index;
        turn.turn = before.turn;
        turn.emotion = before.emotion;
        turn.intent = t.state.intent;
        turn.engagement = t.state.engagement;
        turn.strategy = sampled.action.strategy;
        turn.tone = sampled.action.emotion_tone;
        turn.r_immediate = fb.r_immediate;
        turn.r_engagement = fb.r_engagement;
        turn.r_conversion = fb.r_conversion;
        turn.done = fb.done;
        if (step.selection) turn.kb_weights = step.selection->weights.to_vector();
        turn.pi = step.policy.strategy.probabilities.to_vector();
        turn.hidden_need = before.hidden_need;
        turn.best_strategy = env.best_strategy(sim::dominant(before.emotion));
        turn.max_turns = env.max_turns();
        rec.trace.turns.push_back(std::move(turn));

        if (fb.done) {
            rec.converted = fb.converted;
            break;
        }
        obs = t.observation;
    }
    traj.terminal = true;
    traj.bootstrap_value = 0.0;
    return rec;
}

// ---------------------------------------------------------------------------
// update

Losses build_losses(const std::vector<EpisodeRecord>& batch, bool normalize_advantages) {
    if (batch.empty()) throw std::invalid_argument("actor_critic_update: empty batch");
    std::vector<double> adv;
    for (const auto& rec : batch) {
        if (!rec.trajectory.finalized()) throw StateError("actor_critic_update: trajectory not finalized");
        adv.insert(adv.end(), rec.trajectory.advantages.begin(), rec.trajectory.advantages.end());
    }
    const double n = static_cast<double>(adv.size());
    if (normalize_advantages) {
        double mean = 0.0;
        for (double a : adv) mean += a;
        mean /= n;
        double var = 0.0;
        for (double a : adv) var += (a - mean) * (a - mean);
        const double sd = std::sqrt(var / n);
        for (double& a : adv) a = sd > 1e-8 ? (a - mean) / sd : a - mean;
    }

    std::vector<Tensor> policy_terms, value_terms;
    policy_terms.reserve(adv.size());
    value_terms.reserve(adv.size());
    std::size_t k = 0;
    for (const auto& rec : batch) {
        const auto& traj = rec.trajectory;
        for (std::size_t t = 0; t < traj.size(); ++t, ++k) {
            policy_terms.push_back(scale(traj.log_probs[t], adv[k]));
            value_terms.push_back(square(sub(traj.values[t], Tensor::scalar(traj.returns[t]))));
        }
    }
    return {scale(sum(concat(policy_terms)), -1.0 / n), scale(sum(concat(value_terms)), 1.0 / n)};
}

LossReport actor_critic_update(std::vector<EpisodeRecord>& batch, Agent& agent, const UpdateOptions& options) {
    Losses losses = build_losses(batch, options.normalize_advantages);
    LossReport report;
    report.policy_loss = losses.policy.item();
    report.value_loss = losses.value.item();
    for (const auto& rec : batch) {
        report.transitions += rec.trajectory.size();
        for (double r : rec.trajectory.rewards) report.mean_reward += r;
    }
    report.mean_reward /= static_cast<double>(report.transitions);

    if (!finite(report.policy_loss) || !finite(report.value_loss)) {
        for (const auto& rec : batch) {
            const auto& traj = rec.trajectory;
            for (std::size_t t = 0; t < traj.size(); ++t) {
                if (!finite(traj.log_probs[t].item()) || !finite(traj.values[t].item()) || !finite(traj.rewards[t])) {
                    throw std::runtime_error(fmt::format("non-finite loss: episode {} turn {} (log_prob {}, value {}, R {})",
                                                         rec.trace.episode, t, traj.log_probs[t].item(),
                                                         traj.values[t].item(), traj.rewards[t]));
                }
            }
        }
        throw std::runtime_error(fmt::format("non-finite loss in batch starting at episode {}", batch.front().trace.episode));
    }

    add(losses.policy, losses.value).backward();
    auto policy = agent.policy_parameters();
    auto value = agent.value_parameters();
    if (options.max_grad_norm > 0.0) {
        report.policy_grad_norm = clip_grad_norm(policy, options.max_grad_norm);
        report.value_grad_norm = clip_grad_norm(value, options.max_grad_norm);
    }
    sgd_step(policy, options.policy_lr);
    sgd_step(value, options.value_lr);
    return report;
}

// ---------------------------------------------------------------------------
// training loop

nlohmann::json BatchReport::to_json() const {
    return {{"batch", batch},   {"policy_loss", policy_loss},         {"value_loss", value_loss},
            {"mean_R", mean_R}, {"conversion_rate", conversion_rate}, {"lr", lr}};
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < std::min(jobs, n); ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& w : workers) w.join();
    if (error) std::rethrow_exception(error);
}

namespace {

std::ofstream open_log(const std::filesystem::path& path, bool append) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open log file " + path.string());
    return out;
}

}  // namespace

TrainResult train(Agent& agent, const EnvironmentFactory& make_env, const TrainConfig& config,
                  const TrainOutputs& outputs, const std::optional<Checkpoint>& resume) {
    config.validate();
    const std::size_t total = config.total_batches();
    const std::size_t batch_size = config.optimizer.batch_size;
    const bool myopic = agent.flags().disable_rdl;
    const double gamma = myopic ? 0.0 : config.gamma;
    const double lambda = myopic ? 0.0 : config.lambda;

    std::size_t start = 0;
    if (resume) {
        resume->restore(agent.params());
        start = resume->step;
        if (start > total) throw ConfigError(fmt::format("checkpoint step {} exceeds the {} planned batches", start, total));
    }

    std::ofstream episode_log, report_log;
    if (outputs.log_dir) {
        episode_log = open_log(*outputs.log_dir / "episodes.jsonl", resume.has_value());
        report_log = open_log(*outputs.log_dir / "train_report.jsonl", resume.has_value());
    }

    TrainResult result;
    const RolloutMode mode{false, true, config.optimizer.dropout_rate};
    for (std::size_t step = start; step < total; ++step) {
        const std::size_t first = step * batch_size;
        const std::size_t count = std::min(batch_size, config.episodes - first);
        std::vector<EpisodeRecord> batch(count);
        parallel_for(count, config.jobs, [&](std::size_t i) {
            auto env = make_env();
            batch[i] = agent.run_episode(*env, Rng::derive(config.seed, first + i), first + i, mode, config.rewards);
            finalize(batch[i].trajectory, gamma, lambda);
        });

        UpdateOptions options;
        options.policy_lr = cosine_annealed_lr(config.optimizer.base_learning_rate, step, total);
        options.value_lr = cosine_annealed_lr(config.optimizer.value_learning_rate, step, total);
        options.normalize_advantages = config.normalize_advantages;
        options.max_grad_norm = config.optimizer.max_grad_norm;
        const LossReport loss = actor_critic_update(batch, agent, options);

        BatchReport report;
        report.batch = step;
        report.policy_loss = loss.policy_loss;
        report.value_loss = loss.value_loss;
        report.mean_R = loss.mean_reward;
        report.conversion_rate = static_cast<double>(std::count_if(batch.begin(), batch.end(),
                                                                   [](const EpisodeRecord& r) { return r.converted; })) /
                                 static_cast<double>(count);
        report.lr = options.policy_lr;
        result.reports.push_back(report);

        std::vector<metrics::EpisodeTrace> traces;
        traces.reserve(count);
        for (auto& rec : batch) traces.push_back(std::move(rec.trace));
        if (episode_log.is_open()) {
            metrics::write_jsonl(episode_log, traces);
            report_log << report.to_json().dump() << '\n';
        }
        if (outputs.keep_traces) {
            for (auto& t : traces) result.traces.push_back(std::move(t));
        }
        result.steps = step + 1;

        if (outputs.checkpoint_dir && config.checkpoint_every > 0 && (step + 1) % config.checkpoint_every == 0 &&
            step + 1 < total) {
            Checkpoint::capture(agent.params(), step + 1)
                .save(*outputs.checkpoint_dir / fmt::format("step_{:06}.json", step + 1));
        }
    }
    result.steps = std::max(result.steps, start);
    if (episode_log.is_open()) {
        episode_log.flush();
        report_log.flush();
    }
    if (outputs.checkpoint_dir) {
        result.final_checkpoint = *outputs.checkpoint_dir / "final.json";
        Checkpoint::capture(agent.params(), result.steps).save(*result.final_checkpoint);
    }
    return result;
}

std::vector<metrics::EpisodeTrace> evaluate(const Agent& agent, const EnvironmentFactory& make_env,
                                            std::size_t episodes, std::uint64_t seed, std::size_t jobs) {
    if (episodes == 0) throw std::invalid_argument("episodes must be positive");
    std::vector<metrics::EpisodeTrace> traces(episodes);
    const RolloutMode mode{true, false, 0.0};
    parallel_for(episodes, jobs, [&](std::size_t i) {
        auto env = make_env();
        traces[i] = agent.run_episode(*env, Rng::derive(seed, i), i, mode, RewardWeights{}).trace;
    });
    return traces;
}

}  // namespace affectlab::rdl
