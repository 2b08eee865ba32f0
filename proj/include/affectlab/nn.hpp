#pragma once

#include <map>
#include <string>
#include <vector>

#include "affectlab/rng.hpp"
#include "affectlab/tensor.hpp"

namespace affectlab {

/// Named learnable tensors, enumerated in lexicographic order.
class ParameterSet {
   public:
    /// Registers a fresh parameter; throws ConfigError on a duplicate name.
    Tensor& add(const std::string& name, Tensor value);
    /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
    Tensor& add_uniform(const std::string& name, Shape shape, std::size_t fan_in, Rng& rng);

    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;
    bool contains(const std::string& name) const { return params_.count(name) != 0; }
    std::size_t size() const { return params_.size(); }
    std::size_t scalar_count() const;

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    /// Parameters whose name starts with `prefix`.
    std::vector<Tensor> with_prefix(const std::string& prefix) const;
    void zero_grad();

   private:
    std::map<std::string, Tensor> params_;
};

/// y = x W + b. Accepts a vector [in] or a matrix [rows x in].
class Linear {
   public:
    Linear() = default;
    Linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng,
           bool bias = true);

    Tensor operator()(const Tensor& x) const;
    std::size_t in_features() const { return in_; }
    std::size_t out_features() const { return out_; }
    const Tensor& weight() const { return weight_; }
    const Tensor& bias() const { return bias_; }

   private:
    Tensor weight_;
    Tensor bias_;
    std::size_t in_ = 0;
    std::size_t out_ = 0;
};

/// Two linear layers with a tanh between them; optional tanh on the output
/// and dropout on the hidden activations.
class FeedForward {
   public:
    FeedForward() = default;
    FeedForward(ParameterSet& params, const std::string& name, std::size_t in, std::size_t hidden,
                std::size_t out, Rng& rng, bool tanh_output);

    Tensor operator()(const Tensor& x, double dropout_rate = 0.0, bool training = false,
                      Rng* rng = nullptr) const;
    const Linear& hidden_layer() const { return hidden_; }
    const Linear& output_layer() const { return output_; }

   private:
    Linear hidden_;
    Linear output_;
    bool tanh_output_ = false;
};

struct AttentionResult {
    Tensor output;                // [q x d]
    std::vector<Tensor> weights;  // one [q x s] matrix per head
};

/// Multi-head scaled dot-product attention with bias-free projections.
class MultiHeadAttention {
   public:
    MultiHeadAttention() = default;
    MultiHeadAttention(ParameterSet& params, const std::string& name, std::size_t d_model,
                       std::size_t heads, Rng& rng);

    AttentionResult operator()(const Tensor& q, const Tensor& k, const Tensor& v) const;
    std::size_t heads() const { return heads_; }
    std::size_t d_model() const { return d_model_; }

   private:
    Tensor wq_, wk_, wv_, wo_;
    std::size_t d_model_ = 0;
    std::size_t heads_ = 1;
};

/// Functional form used by layers and tests alike: explicit projection matrices.
AttentionResult multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                                     const Tensor& wq, const Tensor& wk, const Tensor& wv, const Tensor& wo);

}  // namespace affectlab
