#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <spdlog/spdlog.h>

#include "affectlab/lab.hpp"

namespace affectlab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Bad input from the user (as opposed to a failure while running).
class UsageError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

struct CommonOptions {
    std::optional<fs::path> config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> episodes;
    std::optional<std::size_t> jobs;
    std::optional<fs::path> out;
    rdl::AblationFlags flags;
};

void add_config_option(CLI::App& cmd, CommonOptions& o) {
    cmd.add_option("--config", o.config, "JSON run configuration (defaults to the built-in lab config)");
}

void add_run_options(CLI::App& cmd, CommonOptions& o) {
    add_config_option(cmd, o);
    cmd.add_option("--seed", o.seed, "Training seed");
    cmd.add_option("--episodes", o.episodes, "Training episodes");
    cmd.add_option("--jobs", o.jobs, "Rollout threads (results do not depend on it)");
    cmd.add_option("--out", o.out, "Output directory; holds checkpoints/ and logs/");
}

void add_ablation_flags(CLI::App& cmd, CommonOptions& o) {
    cmd.add_flag("--disable-pkgn", o.flags.disable_pkgn, "Drop knowledge grounding");
    cmd.add_flag("--disable-eiam", o.flags.disable_eiam, "Replace emotion-intent alignment with a linear bypass");
    cmd.add_flag("--disable-rdl", o.flags.disable_rdl, "Myopic credit assignment");
    cmd.add_flag("--text-only", o.flags.text_only, "Text modality only");
    cmd.add_flag("--static-knowledge", o.flags.static_knowledge, "Knowledge updated on the first turn only");
}

config::RunConfig load_config(const CommonOptions& o, bool apply_episodes) {
    config::RunConfig c = o.config ? config::load(*o.config) : config::default_run_config();
    if (o.seed) c.train.seed = *o.seed;
    if (apply_episodes && o.episodes) c.train.episodes = *o.episodes;
    if (o.jobs) c.train.jobs = *o.jobs;
    if (o.out) {
        c.paths.checkpoint_dir = *o.out / "checkpoints";
        c.paths.log_dir = *o.out / "logs";
    }
    c.ablation.disable_pkgn |= o.flags.disable_pkgn;
    c.ablation.disable_eiam |= o.flags.disable_eiam;
    c.ablation.disable_rdl |= o.flags.disable_rdl;
    c.ablation.text_only |= o.flags.text_only;
    c.ablation.static_knowledge |= o.flags.static_knowledge;
    c.validate();
    return c;
}

void write_json(const fs::path& path, const json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path);
    f << j.dump(2) << '\n';
    if (!f) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
}

constexpr const char* kRunConfigFile = "run_config.json";

/// The config a checkpoint was trained with: --config if given, else the
/// run_config.json written next to it by `train`, else the lab defaults.
config::RunConfig config_for_checkpoint(CommonOptions o, const fs::path& checkpoint) {
    if (!o.config) {
        const fs::path beside = checkpoint.parent_path() / kRunConfigFile;
        if (fs::exists(beside)) o.config = beside;
    }
    o.out.reset();
    return load_config(o, false);
}

rdl::Agent load_agent(const config::RunConfig& c, const fs::path& checkpoint) {
    if (!fs::exists(checkpoint)) throw UsageError(fmt::format("checkpoint not found: {}", checkpoint.string()));
    rdl::Agent agent = lab::make_agent(c);
    Checkpoint::load(checkpoint).restore(agent.params());
    return agent;
}

// ---------------------------------------------------------------------------

int cmd_train(const CommonOptions& o, const std::optional<fs::path>& resume, std::ostream& out) {
    const config::RunConfig c = load_config(o, true);
    std::optional<Checkpoint> ckpt;
    if (resume) {
        if (!fs::exists(*resume)) throw UsageError(fmt::format("checkpoint not found: {}", resume->string()));
        ckpt = Checkpoint::load(*resume);
    }
    fs::create_directories(c.paths.checkpoint_dir);
    fs::create_directories(c.paths.log_dir);
    write_json(c.paths.checkpoint_dir / kRunConfigFile, config::to_json(c));

    spdlog::info("training {} episodes, seed {}, {} batches", c.train.episodes, c.train.seed, c.train.total_batches());
    rdl::Agent agent = lab::make_agent(c);
    rdl::TrainOutputs outputs{c.paths.checkpoint_dir, c.paths.log_dir, false};
    const auto result = rdl::train(agent, lab::env_factory(lab::make_scenario(c)), c.train, outputs, ckpt);
    spdlog::info("training done after {} batches", result.steps);

    // The summary is recomputed from the full log so a resumed run reports
    // the same numbers as an uninterrupted one.
    std::ifstream log(c.paths.log_dir / "episodes.jsonl");
    const auto summary = metrics::summarize(metrics::read_jsonl(log)).to_json();
    write_json(c.paths.log_dir / "summary.json", summary);
    out << summary.dump(2) << '\n';
    out << fmt::format("checkpoint: {}\n", result.final_checkpoint->string());
    return kExitOk;
}

int cmd_eval(const CommonOptions& o, const fs::path& checkpoint, std::ostream& out) {
    const config::RunConfig c = config_for_checkpoint(o, checkpoint);
    const std::size_t episodes = o.episodes.value_or(500);
    if (episodes == 0) throw UsageError("episodes must be positive");
    const std::uint64_t seed = o.seed.value_or(c.eval_seed());
    const rdl::Agent agent = load_agent(c, checkpoint);
    const auto traces = rdl::evaluate(agent, lab::env_factory(lab::make_scenario(c)), episodes, seed, c.train.jobs);
    const auto summary = metrics::summarize(traces).to_json();
    if (o.out) {
        write_json(*o.out / "eval_summary.json", summary);
        std::ofstream log(*o.out / "eval_episodes.jsonl");
        metrics::write_jsonl(log, traces);
    }
    out << summary.dump(2) << '\n';
    return kExitOk;
}

int cmd_ablate(const CommonOptions& o, std::size_t eval_episodes, std::ostream& out) {
    if (eval_episodes == 0) throw UsageError("episodes must be positive");
    const config::RunConfig c = load_config(o, true);
    json rows = json::array();
    out << fmt::format("{:<18} {:>22} {:>24} {:>11}\n", "variant", "emotional_consistency",
                       "persuasive_success_rate", "engagement");
    for (const auto& variant : lab::ablation_variants()) {
        spdlog::info("ablation variant {}", variant.name);
        const auto r = lab::run_variant(c, variant, eval_episodes);
        out << fmt::format("{:<18} {:>22.4f} {:>24.4f} {:>11.4f}\n", variant.name, r.summary.emotional_consistency,
                           r.summary.persuasive_success_rate, r.summary.engagement);
        out.flush();
        json row = r.summary.to_json();
        row["variant"] = variant.name;
        rows.push_back(row);
    }
    if (o.out) write_json(*o.out / "ablation.json", rows);
    return kExitOk;
}

int cmd_replay(const fs::path& log_path, const std::optional<fs::path>& expect, std::ostream& out) {
    std::ifstream in(log_path);
    if (!in) throw UsageError(fmt::format("cannot open log {}", log_path.string()));
    const auto traces = metrics::read_jsonl(in);
    if (traces.empty()) throw UsageError(fmt::format("{}: no episodes", log_path.string()));
    const auto summary = metrics::summarize(traces).to_json();
    out << summary.dump(2) << '\n';
    if (expect) {
        std::ifstream f(*expect);
        if (!f) throw UsageError(fmt::format("cannot open summary {}", expect->string()));
        const json online = json::parse(f);
        if (online != summary) {
            out << "replayed summary differs from " << expect->string() << '\n';
            return kExitRuntime;
        }
        out << "matches " << expect->string() << '\n';
    }
    return kExitOk;
}

int cmd_baseline(const CommonOptions& o, std::ostream& out) {
    const config::RunConfig c = load_config(o, false);
    const std::size_t episodes = o.episodes.value_or(1000);
    if (episodes == 0) throw UsageError("episodes must be positive");
    const auto scenario = lab::make_scenario(c);
    const auto random = sim::random_policy_baseline(*scenario, episodes, c.eval_seed());
    const auto oracle = sim::oracle_policy_rollout(*scenario, episodes, c.eval_seed());
    out << json{{"episodes", episodes},
                {"random_conversion_rate", random.conversion_rate()},
                {"oracle_conversion_rate", oracle.conversion_rate()}}
               .dump(2)
        << '\n';
    return kExitOk;
}

std::string slot_label(std::size_t index, std::size_t factual_slots) {
    return index < factual_slots ? fmt::format("factual:{}", index)
                                 : fmt::format("affective:{}", index - factual_slots);
}

int cmd_interact(const CommonOptions& o, const fs::path& checkpoint, std::istream& in, std::ostream& out) {
    const config::RunConfig c = config_for_checkpoint(o, checkpoint);
    const rdl::Agent agent = load_agent(c, checkpoint);
    const auto scenario = lab::make_scenario(c);
    Rng rng(Rng::derive(c.eval_seed(), 0x7265706cULL));
    const rdl::RolloutMode mode{true, false, 0.0};

    sim::UserState user;
    std::optional<rdl::Agent::Memory> memory;
    auto new_session = [&] {
        user = sim::UserState{};
        user.engagement = 0.5;
        user.hidden_need = rng.below(c.env.catalog_size);
        memory.emplace(agent.begin_episode(scenario->catalog(), c.env.max_turns));
    };
    new_session();

    std::string names;
    for (std::size_t k = 0; k < sim::kEmotionClasses; ++k) names += fmt::format("{}{}", k ? "|" : "", sim::emotion_name(k));
    out << fmt::format("type '<{}> <intent 0-1>' per turn, or 'quit'\n", names);

    std::string line;
    while (std::getline(in, line)) {
        std::istringstream words(line);
        std::string emotion_word, intent_word, extra;
        if (!(words >> emotion_word)) continue;
        if (emotion_word == "quit" || emotion_word == "exit") return kExitOk;

        const auto emotion = sim::parse_emotion(emotion_word);
        double intent = -1.0;
        if (words >> intent_word) {
            try {
                std::size_t used = 0;
                intent = std::stod(intent_word, &used);
                if (used != intent_word.size()) intent = -1.0;
            } catch (const std::exception&) {
                intent = -1.0;
            }
        }
        if (!emotion || intent < 0.0 || intent > 1.0 || (words >> extra)) {
            out << fmt::format("expected '<{}> <intent 0-1>'\n", names);
            continue;
        }

        user.emotion.fill(0.0);
        user.emotion[*emotion] = 1.0;
        user.intent = intent;
        const sim::ObservationBundle obs = scenario->emit(user, rng);
        const auto step = agent.forward(*memory, obs, mode, rng);
        const auto sampled = rdl::sample_action(step.policy, rng, true);
        const sim::Transition t = sim::step(user, sampled.action, *scenario, rng);
        memory->context.record(sampled.action.strategy, t.feedback);

        std::string slot = "none";
        if (step.selection) {
            const auto w = step.selection->weights.to_vector();
            const auto best = static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
            slot = slot_label(best, scenario->catalog().size());
        }
        out << fmt::format("strategy={} tone={:+.3f} slot={} r_immediate={:+.3f} engagement={:.3f}\n",
                           sim::strategy_name(sampled.action.strategy), sampled.action.emotion_tone, slot,
                           t.feedback.r_immediate, t.state.engagement);
        if (t.feedback.done) {
            out << (t.feedback.converted ? "session over: converted\n" : "session over: no conversion\n");
            new_session();
        } else {
            user.turn = t.state.turn;
            user.engagement = t.state.engagement;
        }
    }
    return kExitOk;
}

void set_log_level() {
    const char* env = std::getenv("AFFECTLAB_LOG_LEVEL");
    const std::string level = env ? env : "info";
    if (level == "error") {
        spdlog::set_level(spdlog::level::err);
    } else if (level == "info") {
        spdlog::set_level(spdlog::level::info);
    } else if (level == "debug") {
        spdlog::set_level(spdlog::level::debug);
    } else {
        throw UsageError(fmt::format("AFFECTLAB_LOG_LEVEL must be error, info or debug (got '{}')", level));
    }
}

}  // namespace

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Affect-aware persuasive dialogue lab"};
    app.require_subcommand(1);

    CommonOptions o;
    std::optional<fs::path> resume, expect;
    fs::path checkpoint, log_path;
    std::size_t eval_episodes = 500;

    auto* train = app.add_subcommand("train", "Train an agent; writes checkpoints and JSONL logs");
    add_run_options(*train, o);
    add_ablation_flags(*train, o);
    train->add_option("--resume", resume, "Continue from a checkpoint written by an identical config");

    auto* eval = app.add_subcommand("eval", "Deterministic-policy evaluation of a checkpoint");
    eval->add_option("checkpoint", checkpoint, "Checkpoint file")->required();
    add_config_option(*eval, o);
    eval->add_option("--episodes", o.episodes, "Evaluation episodes (default 500)");
    eval->add_option("--seed", o.seed, "Evaluation seed (default derived from the training seed)");
    eval->add_option("--jobs", o.jobs, "Rollout threads");
    eval->add_option("--out", o.out, "Directory for eval_summary.json and eval_episodes.jsonl");
    add_ablation_flags(*eval, o);

    auto* ablate = app.add_subcommand("ablate", "Train and evaluate the six ablation variants");
    add_run_options(*ablate, o);
    ablate->add_option("--eval-episodes", eval_episodes, "Evaluation episodes per variant");

    auto* replay = app.add_subcommand("replay", "Recompute the metrics summary from an episode log");
    replay->add_option("log", log_path, "episodes.jsonl")->required();
    replay->add_option("--expect", expect, "Summary JSON the replay must reproduce exactly");

    auto* interact = app.add_subcommand("interact", "Play the customer against a checkpoint");
    interact->add_option("checkpoint", checkpoint, "Checkpoint file")->required();
    add_config_option(*interact, o);
    add_ablation_flags(*interact, o);

    auto* baseline = app.add_subcommand("baseline", "Random and oracle policy conversion rates");
    add_config_option(*baseline, o);
    baseline->add_option("--episodes", o.episodes, "Monte-Carlo episodes (default 1000)");
    baseline->add_option("--seed", o.seed, "Training seed the evaluation stream derives from");

    auto* show = app.add_subcommand("show-config", "Print the resolved configuration as JSON");
    add_run_options(*show, o);
    add_ablation_flags(*show, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        set_log_level();
        if (*train) return cmd_train(o, resume, out);
        if (*eval) return cmd_eval(o, checkpoint, out);
        if (*ablate) return cmd_ablate(o, eval_episodes, out);
        if (*replay) return cmd_replay(log_path, expect, out);
        if (*interact) return cmd_interact(o, checkpoint, in, out);
        if (*baseline) return cmd_baseline(o, out);
        if (*show) {
            out << config::to_json(load_config(o, true)).dump(2) << '\n';
            return kExitOk;
        }
    } catch (const metrics::TraceParseError& e) {
        err << "error: " << e.what() << '\n';  // the message leads with the line number
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        // ConfigError, DimensionError and UsageError all land here.
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace affectlab::cli
