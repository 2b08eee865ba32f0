#pragma once

#include <vector>

#include "affectlab/nn.hpp"

namespace affectlab::pkgn {

struct PkgnConfig {
    std::size_t d_text = 8;
    std::size_t d_vision = 8;
    std::size_t d_audio = 8;
    std::size_t d_k = 16;
    std::size_t heads = 2;
    std::size_t slots_f = 8;  // one per catalog entry
    std::size_t slots_a = 6;  // one per emotion class

    void validate() const;
};

/// Factual and affective slot matrices carried across turns.
struct KnowledgeState {
    Tensor factual;    // [slots_f x d_k]
    Tensor affective;  // [slots_a x d_k]
    std::size_t turn = 0;

    /// [K_f; K_a], the row-stacked knowledge matrix.
    Tensor stacked() const { return concat({factual, affective}, 0); }
};

struct UpdateRates {
    Tensor factual;    // scalar
    Tensor affective;  // scalar
};

struct FusionResult {
    Tensor fused;                         // [d_k]
    std::vector<Tensor> attention;        // per head, [3 x 3]
};

struct Selection {
    Tensor output;   // [d_k]
    Tensor weights;  // [slots_f + slots_a], sums to 1
};

/// Knowledge grounding: multimodal attention fusion, gated residual slot
/// updates with learnable rates, and single-query slot selection.
class Pkgn {
   public:
    Pkgn(ParameterSet& params, const PkgnConfig& config, Rng& rng);

    /// Projects each modality to d_k, self-attends over the three rows, mean-pools.
    FusionResult fuse(const Tensor& f_text, const Tensor& f_vision, const Tensor& f_audio) const;
    /// Vision and audio rows replaced by learned constants.
    FusionResult fuse_text_only(const Tensor& f_text) const;

    /// K_f rows start at the catalog embeddings, K_a at zero.
    KnowledgeState initial_state(const std::vector<std::vector<double>>& catalog) const;

    /// K^t = K^{t-1} + rate * sigmoid(gate) (x) FF(fused), per bank.
    KnowledgeState update(const KnowledgeState& prev, const Tensor& fused) const;
    KnowledgeState update(const KnowledgeState& prev, const Tensor& fused, const UpdateRates& rates) const;

    Selection select(const Tensor& query, const KnowledgeState& state) const;

    const PkgnConfig& config() const { return config_; }
    UpdateRates rates() const { return {rate_f_, rate_a_}; }
    const FeedForward& factual_ff() const { return ff_f_; }
    const FeedForward& affective_ff() const { return ff_a_; }

   private:
    FusionResult fuse_rows(const Tensor& rows) const;

    PkgnConfig config_;
    Linear proj_text_, proj_vision_, proj_audio_;
    Tensor const_vision_, const_audio_;
    MultiHeadAttention mha_;
    FeedForward ff_f_, ff_a_;
    Tensor rate_f_, rate_a_;
    Tensor gate_f_, gate_a_;
    Tensor select_wk_, select_wv_;
};

}  // namespace affectlab::pkgn
