#pragma once

#include <memory>
#include <string>
#include <vector>

#include "affectlab/config.hpp"

namespace affectlab::lab {

std::shared_ptr<const sim::Scenario> make_scenario(const config::RunConfig& config);
rdl::EnvironmentFactory env_factory(std::shared_ptr<const sim::Scenario> scenario);
/// Agent with parameters seeded from config.model_seed() and the config's ablation flags.
rdl::Agent make_agent(const config::RunConfig& config);

struct Variant {
    std::string name;
    rdl::AblationFlags flags;
};

/// The six ablation rows in report order: full, then one row per flag.
std::vector<Variant> ablation_variants();

struct VariantResult {
    Variant variant;
    metrics::MetricsSummary summary;
    std::vector<metrics::EpisodeTrace> traces;  // evaluation episodes
};

/// Trains a fresh agent for `variant` (flags replace the config's) and
/// evaluates it deterministically on `eval_episodes` episodes from config.eval_seed().
VariantResult run_variant(const config::RunConfig& config, const Variant& variant, std::size_t eval_episodes);

/// Per-episode conversion indicators (1 or 0), for paired comparisons.
std::vector<double> conversions(const std::vector<metrics::EpisodeTrace>& traces);
/// Per-episode emotional consistency.
std::vector<double> consistencies(const std::vector<metrics::EpisodeTrace>& traces);

}  // namespace affectlab::lab
