#include "affectlab/pkgn.hpp"

#include <cmath>

#include <fmt/format.h>

namespace affectlab::pkgn {

void PkgnConfig::validate() const {
    if (d_k == 0 || heads == 0 || d_k % heads != 0) {
        throw ConfigError(fmt::format("pkgn: d_k {} must be a positive multiple of heads {}", d_k, heads));
    }
    if (slots_f == 0) throw ConfigError("pkgn: slots_f must be positive");
    if (d_text == 0 || d_vision == 0 || d_audio == 0) throw ConfigError("pkgn: modality dims must be positive");
}

Pkgn::Pkgn(ParameterSet& params, const PkgnConfig& config, Rng& rng) : config_(config) {
    config_.validate();
    const std::size_t d = config_.d_k;
    proj_text_ = Linear(params, "pkgn.fuse.proj_text", config_.d_text, d, rng);
    proj_vision_ = Linear(params, "pkgn.fuse.proj_vision", config_.d_vision, d, rng);
    proj_audio_ = Linear(params, "pkgn.fuse.proj_audio", config_.d_audio, d, rng);
    const_vision_ = params.add_uniform("pkgn.fuse.const_vision", {d}, d, rng);
    const_audio_ = params.add_uniform("pkgn.fuse.const_audio", {d}, d, rng);
    mha_ = MultiHeadAttention(params, "pkgn.fuse.mha", d, config_.heads, rng);
    ff_f_ = FeedForward(params, "pkgn.update.ff_f", d, d, d, rng, false);
    ff_a_ = FeedForward(params, "pkgn.update.ff_a", d, d, d, rng, false);
    rate_f_ = params.add("pkgn.update.rate_f", Tensor::scalar(0.1));
    rate_a_ = params.add("pkgn.update.rate_a", Tensor::scalar(0.1));
    gate_f_ = params.add("pkgn.update.gate_f", Tensor::zeros({config_.slots_f}));
    if (config_.slots_a > 0) gate_a_ = params.add("pkgn.update.gate_a", Tensor::zeros({config_.slots_a}));
    select_wk_ = params.add_uniform("pkgn.select.Wk", {d, d}, d, rng);
    // values start as the slots themselves
    std::vector<double> eye(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) eye[i * d + i] = 1.0;
    select_wv_ = params.add("pkgn.select.Wv", Tensor::matrix(d, d, std::move(eye)));
}

FusionResult Pkgn::fuse_rows(const Tensor& rows) const {
    auto attn = mha_(rows, rows, rows);
    return {mean_rows(attn.output), std::move(attn.weights)};
}

FusionResult Pkgn::fuse(const Tensor& f_text, const Tensor& f_vision, const Tensor& f_audio) const {
    return fuse_rows(stack({proj_text_(f_text), proj_vision_(f_vision), proj_audio_(f_audio)}));
}

FusionResult Pkgn::fuse_text_only(const Tensor& f_text) const {
    return fuse_rows(stack({proj_text_(f_text), const_vision_, const_audio_}));
}

KnowledgeState Pkgn::initial_state(const std::vector<std::vector<double>>& catalog) const {
    if (catalog.size() != config_.slots_f) {
        throw DimensionError(fmt::format("pkgn: catalog has {} entries, slots_f is {}", catalog.size(), config_.slots_f));
    }
    std::vector<double> rows;
    for (const auto& item : catalog) {
        if (item.size() != config_.d_k) {
            throw DimensionError(fmt::format("pkgn: catalog entry has {} dims, d_k is {}", item.size(), config_.d_k));
        }
        rows.insert(rows.end(), item.begin(), item.end());
    }
    KnowledgeState s;
    s.factual = Tensor::matrix(config_.slots_f, config_.d_k, std::move(rows));
    if (config_.slots_a > 0) s.affective = Tensor::zeros({config_.slots_a, config_.d_k});
    return s;
}

KnowledgeState Pkgn::update(const KnowledgeState& prev, const Tensor& fused) const {
    return update(prev, fused, rates());
}

KnowledgeState Pkgn::update(const KnowledgeState& prev, const Tensor& fused, const UpdateRates& rates) const {
    if (fused.rank() != 1 || fused.numel() != config_.d_k) {
        throw DimensionError(fmt::format("pkgn.update: fused {} vs d_k {}", shape_to_string(fused.shape()), config_.d_k));
    }
    if (prev.factual.shape() != Shape{config_.slots_f, config_.d_k}) {
        throw DimensionError("pkgn.update: factual bank shape " + shape_to_string(prev.factual.shape()));
    }
    KnowledgeState next;
    next.turn = prev.turn + 1;
    Tensor delta_f = outer(sigmoid(gate_f_), ff_f_(fused));
    next.factual = add(prev.factual, scale_by(delta_f, rates.factual));
    if (config_.slots_a > 0) {
        Tensor delta_a = outer(sigmoid(gate_a_), ff_a_(fused));
        next.affective = add(prev.affective, scale_by(delta_a, rates.affective));
    }
    return next;
}

Selection Pkgn::select(const Tensor& query, const KnowledgeState& state) const {
    const std::size_t d = config_.d_k;
    if (query.rank() != 1 || query.numel() != d) {
        throw DimensionError(fmt::format("pkgn.select: query {} vs d_k {}", shape_to_string(query.shape()), d));
    }
    Tensor slots = config_.slots_a > 0 ? state.stacked() : state.factual;
    const std::size_t n = slots.dim(0);
    Tensor keys = matmul(slots, select_wk_);
    Tensor values = matmul(slots, select_wv_);
    Tensor scores = reshape(matmul(keys, reshape(query, {d, 1})), {n});
    Tensor weights = softmax(scale(scores, 1.0 / std::sqrt(static_cast<double>(d))));
    Tensor output = reshape(matmul(reshape(weights, {1, n}), values), {d});
    return {output, weights};
}

}  // namespace affectlab::pkgn
