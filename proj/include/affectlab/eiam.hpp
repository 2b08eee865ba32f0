#pragma once

#include "affectlab/nn.hpp"

namespace affectlab::eiam {

struct EiamConfig {
    std::size_t d_facial = 4;
    std::size_t d_prosodic = 4;
    std::size_t d_linguistic = 4;
    std::size_t d_query = 4;
    std::size_t d_behavior = 4;
    std::size_t d_context = 4;
    std::size_t d_e = 16;
    std::size_t d_s = 32;
    std::size_t num_strategies = 4;

    std::size_t emotion_input() const { return d_facial + d_prosodic + d_linguistic; }
    std::size_t intent_input() const { return d_query + d_behavior + d_context; }
    void validate() const;
};

struct StrategyDistribution {
    Tensor logits;         // [S]
    Tensor probabilities;  // [S]
};

/// Runtime switches for the encoders.
struct EncodeMode {
    bool training = false;
    double dropout_rate = 0.0;
    Rng* rng = nullptr;
};

/// Emotion-intent alignment: parallel encoders, interaction fusion, strategy head.
class Eiam {
   public:
    Eiam(ParameterSet& params, const EiamConfig& config, Rng& rng);

    Tensor encode_emotion(const Tensor& f_facial, const Tensor& f_prosodic, const Tensor& f_linguistic,
                          const EncodeMode& mode = {}) const;
    Tensor encode_intent(const Tensor& f_query, const Tensor& f_behavior, const Tensor& f_context,
                         const EncodeMode& mode = {}) const;
    /// FusionNetwork([E; I; E * I]).
    Tensor fuse_state(const Tensor& emotion, const Tensor& intent) const;
    /// softmax(W S + b).
    StrategyDistribution strategy_policy(const Tensor& user_state) const;

    /// Stand-in user state when the alignment model is ablated: one linear map
    /// of all six raw feature vectors concatenated.
    Tensor bypass_state(const Tensor& raw_features) const;

    const EiamConfig& config() const { return config_; }
    const FeedForward& emotion_encoder() const { return emotion_encoder_; }
    const FeedForward& intent_encoder() const { return intent_encoder_; }
    const FeedForward& fusion() const { return fusion_; }
    const Linear& policy_head() const { return policy_; }

   private:
    EiamConfig config_;
    FeedForward emotion_encoder_;
    FeedForward intent_encoder_;
    FeedForward fusion_;
    Linear policy_;
    Linear bypass_;
};

}  // namespace affectlab::eiam
