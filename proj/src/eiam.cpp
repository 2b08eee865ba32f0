#include "affectlab/eiam.hpp"

#include <fmt/format.h>

namespace affectlab::eiam {

namespace {

void check_dim(const char* what, const Tensor& t, std::size_t expected) {
    if (t.rank() != 1 || t.numel() != expected) {
        throw DimensionError(fmt::format("eiam: {} has shape {}, expected [{}]", what, shape_to_string(t.shape()), expected));
    }
}

}  // namespace

void EiamConfig::validate() const {
    if (d_e == 0 || d_s == 0) throw ConfigError("eiam: d_e and d_s must be positive");
    if (num_strategies < 2) throw ConfigError("eiam: need at least two strategies");
    if (emotion_input() == 0 || intent_input() == 0) throw ConfigError("eiam: encoder inputs must be nonempty");
}

Eiam::Eiam(ParameterSet& params, const EiamConfig& config, Rng& rng) : config_(config) {
    config_.validate();
    const std::size_t de = config_.d_e;
    emotion_encoder_ = FeedForward(params, "eiam.emotion_encoder", config_.emotion_input(), de, de, rng, true);
    intent_encoder_ = FeedForward(params, "eiam.intent_encoder", config_.intent_input(), de, de, rng, true);
    fusion_ = FeedForward(params, "eiam.fusion", 3 * de, config_.d_s, config_.d_s, rng, false);
    policy_ = Linear(params, "eiam.policy", config_.d_s, config_.num_strategies, rng);
    bypass_ = Linear(params, "eiam.bypass", config_.emotion_input() + config_.intent_input(), config_.d_s, rng);
}

Tensor Eiam::encode_emotion(const Tensor& f_facial, const Tensor& f_prosodic, const Tensor& f_linguistic,
                            const EncodeMode& mode) const {
    check_dim("f_facial", f_facial, config_.d_facial);
    check_dim("f_prosodic", f_prosodic, config_.d_prosodic);
    check_dim("f_linguistic", f_linguistic, config_.d_linguistic);
    return emotion_encoder_(concat({f_facial, f_prosodic, f_linguistic}), mode.dropout_rate, mode.training, mode.rng);
}

Tensor Eiam::encode_intent(const Tensor& f_query, const Tensor& f_behavior, const Tensor& f_context,
                           const EncodeMode& mode) const {
    check_dim("f_query", f_query, config_.d_query);
    check_dim("f_behavior", f_behavior, config_.d_behavior);
    check_dim("f_context", f_context, config_.d_context);
    return intent_encoder_(concat({f_query, f_behavior, f_context}), mode.dropout_rate, mode.training, mode.rng);
}

Tensor Eiam::fuse_state(const Tensor& emotion, const Tensor& intent) const {
    check_dim("E_t", emotion, config_.d_e);
    check_dim("I_t", intent, config_.d_e);
    return fusion_(concat({emotion, intent, mul(emotion, intent)}));
}

StrategyDistribution Eiam::strategy_policy(const Tensor& user_state) const {
    check_dim("S_t", user_state, config_.d_s);
    Tensor logits = policy_(user_state);
    return {logits, softmax(logits)};
}

Tensor Eiam::bypass_state(const Tensor& raw_features) const {
    check_dim("raw features", raw_features, config_.emotion_input() + config_.intent_input());
    return bypass_(raw_features);
}

}  // namespace affectlab::eiam
