#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace affectlab {

class Rng;

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

/// Raised when operand shapes are incompatible.
class DimensionError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a module is configured inconsistently (e.g. d not divisible by heads).
class ConfigError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an operation is called in the wrong state (missing grads, stepping a finished episode).
class StateError : public std::logic_error {
   public:
    using std::logic_error::logic_error;
};

struct TensorNode {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until a gradient reaches this node
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward_fn;

    std::vector<double>& grad_buffer();
};

/// Dense row-major float64 tensor participating in a reverse-mode tape.
///
/// A Tensor is a handle: copies share the same node, so the graph built by
/// the free-function ops below records every handle it was built from. Leaf
/// tensors with requires_grad are the learnable parameters; everything else
/// is an intermediate result whose data never changes after construction.
class Tensor {
   public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    static Tensor vector(std::vector<double> values, bool requires_grad = false);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                         bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t numel() const;

    std::span<const double> data() const;
    /// Direct write access; only meaningful on leaves (parameters, inputs).
    std::span<double> mutable_data();
    double item() const;
    double operator[](std::size_t flat_index) const;
    double at(std::size_t row, std::size_t col) const;
    std::vector<double> to_vector() const;

    bool requires_grad() const;
    bool has_grad() const;
    std::span<const double> grad() const;
    std::span<double> mutable_grad();
    void zero_grad();

    /// Reverse-mode sweep from a scalar; accumulates into every reachable grad.
    void backward() const;

    /// Same data, cut from the tape.
    Tensor detach() const;

    const std::shared_ptr<TensorNode>& node() const { return node_; }
    explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

   private:
    std::shared_ptr<TensorNode> node_;
};

// Elementwise and reduction ops. Binary elementwise ops require equal shapes,
// except add/sub which also accept a [m x n] lhs with a [n] rhs (row broadcast).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
/// a * s where s is a one-element tensor (learnable scalar).
Tensor scale_by(const Tensor& a, const Tensor& s);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor square(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// [m x n] -> [n], mean over rows.
Tensor mean_rows(const Tensor& a);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
/// Outer product of [m] and [n] -> [m x n].
Tensor outer(const Tensor& a, const Tensor& b);

/// Softmax over a vector, or row-wise over a matrix.
Tensor softmax(const Tensor& x);
Tensor log_softmax(const Tensor& x);

/// Concatenate along axis 0 (vectors or row-stacking matrices) or axis 1 (matrices).
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis = 0);
/// Rows-of-vectors to matrix.
Tensor stack(const std::vector<Tensor>& rows);
/// Contiguous slice [begin, end) of a vector.
Tensor slice(const Tensor& a, std::size_t begin, std::size_t end);
/// Column slice [begin, end) of a matrix.
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
Tensor row(const Tensor& a, std::size_t index);
/// One element of a vector as a scalar tensor.
Tensor pick(const Tensor& a, std::size_t index);

/// Inverted dropout: identity when !training; otherwise zeroes with prob `rate`
/// and scales survivors by 1/(1-rate).
Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng);

/// Plain-number cosine similarity; throws std::invalid_argument on a zero vector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);
double cosine_similarity(const Tensor& a, const Tensor& b);

}  // namespace affectlab
