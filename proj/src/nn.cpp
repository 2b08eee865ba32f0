#include "affectlab/nn.hpp"

#include <cmath>

#include <fmt/format.h>

namespace affectlab {

Tensor& ParameterSet::add(const std::string& name, Tensor value) {
    if (params_.count(name)) throw ConfigError("duplicate parameter name: " + name);
    value.node()->requires_grad = true;
    return params_.emplace(name, std::move(value)).first->second;
}

Tensor& ParameterSet::add_uniform(const std::string& name, Shape shape, std::size_t fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<double> values(shape_numel(shape));
    for (double& v : values) v = rng.uniform(-bound, bound);
    return add(name, Tensor(std::move(shape), std::move(values)));
}

Tensor& ParameterSet::get(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second;
}

const Tensor& ParameterSet::get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second;
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : params_) n += t.numel();
    return n;
}

std::vector<Tensor> ParameterSet::with_prefix(const std::string& prefix) const {
    std::vector<Tensor> out;
    for (const auto& [name, t] : params_) {
        if (name.starts_with(prefix)) out.push_back(t);
    }
    return out;
}

void ParameterSet::zero_grad() {
    for (auto& [_, t] : params_) t.zero_grad();
}

Linear::Linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng, bool bias)
    : in_(in), out_(out) {
    weight_ = params.add_uniform(name + ".W", {in, out}, in, rng);
    if (bias) bias_ = params.add_uniform(name + ".b", {out}, in, rng);
}

Tensor Linear::operator()(const Tensor& x) const {
    if (x.rank() == 1) {
        if (x.numel() != in_) {
            throw DimensionError(fmt::format("linear: input {} does not match in_features {}",
                                             shape_to_string(x.shape()), in_));
        }
        Tensor y = reshape(matmul(reshape(x, {1, in_}), weight_), {out_});
        return bias_.defined() ? add(y, bias_) : y;
    }
    Tensor y = matmul(x, weight_);
    return bias_.defined() ? add(y, bias_) : y;
}

FeedForward::FeedForward(ParameterSet& params, const std::string& name, std::size_t in, std::size_t hidden,
                         std::size_t out, Rng& rng, bool tanh_output)
    : hidden_(params, name + ".l1", in, hidden, rng),
      output_(params, name + ".l2", hidden, out, rng),
      tanh_output_(tanh_output) {}

Tensor FeedForward::operator()(const Tensor& x, double dropout_rate, bool training, Rng* rng) const {
    Tensor h = tanh(hidden_(x));
    if (training && dropout_rate > 0.0) {
        if (rng == nullptr) throw StateError("feed-forward dropout in training mode needs an rng");
        h = dropout(h, dropout_rate, true, *rng);
    }
    Tensor y = output_(h);
    return tanh_output_ ? tanh(y) : y;
}

AttentionResult multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                                     const Tensor& wq, const Tensor& wk, const Tensor& wv, const Tensor& wo) {
    if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2) {
        throw DimensionError("multi_head_attention: Q, K, V must be matrices");
    }
    const std::size_t d = q.dim(1);
    if (heads == 0 || d % heads != 0) {
        throw ConfigError(fmt::format("multi_head_attention: model dim {} not divisible by {} heads", d, heads));
    }
    if (k.dim(1) != d || v.dim(1) != d || k.dim(0) != v.dim(0)) {
        throw DimensionError(fmt::format("multi_head_attention: Q {} K {} V {} disagree", shape_to_string(q.shape()),
                                         shape_to_string(k.shape()), shape_to_string(v.shape())));
    }
    const std::size_t dh = d / heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

    Tensor qp = matmul(q, wq);
    Tensor kp = matmul(k, wk);
    Tensor vp = matmul(v, wv);

    AttentionResult result;
    std::vector<Tensor> head_outputs;
    for (std::size_t h = 0; h < heads; ++h) {
        Tensor qh = heads == 1 ? qp : slice_cols(qp, h * dh, (h + 1) * dh);
        Tensor kh = heads == 1 ? kp : slice_cols(kp, h * dh, (h + 1) * dh);
        Tensor vh = heads == 1 ? vp : slice_cols(vp, h * dh, (h + 1) * dh);
        Tensor weights = softmax(scale(matmul(qh, transpose(kh)), inv_sqrt));
        head_outputs.push_back(matmul(weights, vh));
        result.weights.push_back(weights);
    }
    Tensor merged = heads == 1 ? head_outputs[0] : concat(head_outputs, 1);
    result.output = matmul(merged, wo);
    return result;
}

MultiHeadAttention::MultiHeadAttention(ParameterSet& params, const std::string& name, std::size_t d_model,
                                       std::size_t heads, Rng& rng)
    : d_model_(d_model), heads_(heads) {
    if (heads == 0 || d_model % heads != 0) {
        throw ConfigError(fmt::format("{}: model dim {} not divisible by {} heads", name, d_model, heads));
    }
    wq_ = params.add_uniform(name + ".Wq", {d_model, d_model}, d_model, rng);
    wk_ = params.add_uniform(name + ".Wk", {d_model, d_model}, d_model, rng);
    wv_ = params.add_uniform(name + ".Wv", {d_model, d_model}, d_model, rng);
    wo_ = params.add_uniform(name + ".Wo", {d_model, d_model}, d_model, rng);
}

AttentionResult MultiHeadAttention::operator()(const Tensor& q, const Tensor& k, const Tensor& v) const {
    return multi_head_attention(q, k, v, heads_, wq_, wk_, wv_, wo_);
}

}  // namespace affectlab
