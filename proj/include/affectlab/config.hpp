#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "affectlab/rdl.hpp"

namespace affectlab::config {

struct Paths {
    std::filesystem::path checkpoint_dir = "runs/checkpoints";
    std::filesystem::path log_dir = "runs/logs";
};

/// Everything a run needs. Sections: env, model, train, ablation, paths.
struct RunConfig {
    sim::ScenarioConfig env;
    rdl::ModelConfig model;
    rdl::TrainConfig train;
    rdl::AblationFlags ablation;
    Paths paths;

    /// Validates every section plus the cross-section constraints.
    void validate() const;
    /// Model parameters are seeded from the training seed.
    std::uint64_t model_seed() const;
    /// Evaluation episodes use a stream disjoint from the training episodes.
    std::uint64_t eval_seed() const;
};

/// The lab defaults: library hyperparameters where they survive desk scale,
/// tuned optimizer settings where they do not (see README).
RunConfig default_run_config();

/// Tiny dims and 20 episodes, for pipeline checks.
RunConfig smoke_run_config();

/// Strict load: every key must be known. Keys not given keep their defaults.
/// Throws ConfigError whose message starts with the offending key path.
RunConfig from_json(const nlohmann::json& j, const RunConfig& base = default_run_config());
/// Throws ConfigError naming the path when the file is missing or unparsable.
RunConfig load(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& config);

}  // namespace affectlab::config
