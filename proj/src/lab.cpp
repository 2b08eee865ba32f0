#include "affectlab/lab.hpp"

namespace affectlab::lab {

std::shared_ptr<const sim::Scenario> make_scenario(const config::RunConfig& config) {
    return std::make_shared<const sim::Scenario>(config.env);
}

rdl::EnvironmentFactory env_factory(std::shared_ptr<const sim::Scenario> scenario) {
    return [scenario = std::move(scenario)] { return std::make_unique<rdl::SimEnvironment>(scenario); };
}

rdl::Agent make_agent(const config::RunConfig& config) {
    return rdl::Agent(config.env, config.model, config.ablation, config.model_seed());
}

std::vector<Variant> ablation_variants() {
    std::vector<Variant> v(6);
    v[0].name = "full";
    v[1].name = "disable_pkgn";
    v[1].flags.disable_pkgn = true;
    v[2].name = "disable_eiam";
    v[2].flags.disable_eiam = true;
    v[3].name = "disable_rdl";
    v[3].flags.disable_rdl = true;
    v[4].name = "text_only";
    v[4].flags.text_only = true;
    v[5].name = "static_knowledge";
    v[5].flags.static_knowledge = true;
    return v;
}

VariantResult run_variant(const config::RunConfig& config, const Variant& variant, std::size_t eval_episodes) {
    config::RunConfig c = config;
    c.ablation = variant.flags;
    c.validate();
    const auto make_env = env_factory(make_scenario(c));
    rdl::Agent agent = make_agent(c);
    rdl::train(agent, make_env, c.train);
    VariantResult r{variant, {}, rdl::evaluate(agent, make_env, eval_episodes, c.eval_seed(), c.train.jobs)};
    r.summary = metrics::summarize(r.traces);
    return r;
}

std::vector<double> conversions(const std::vector<metrics::EpisodeTrace>& traces) {
    std::vector<double> out;
    out.reserve(traces.size());
    for (const auto& t : traces) out.push_back(t.converted() ? 1.0 : 0.0);
    return out;
}

std::vector<double> consistencies(const std::vector<metrics::EpisodeTrace>& traces) {
    std::vector<double> out;
    out.reserve(traces.size());
    for (const auto& t : traces) out.push_back(metrics::emotional_consistency(t));
    return out;
}

}  // namespace affectlab::lab
