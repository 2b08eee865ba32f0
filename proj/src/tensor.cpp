#include "affectlab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include <fmt/format.h>

#include "affectlab/rng.hpp"

namespace affectlab {

namespace {

using NodePtr = std::shared_ptr<TensorNode>;

[[noreturn]] void dim_error(const char* op, const Shape& a, const Shape& b) {
    throw DimensionError(
        fmt::format("{}: incompatible shapes {} and {}", op, shape_to_string(a), shape_to_string(b)));
}

// Builds a result node. Parents and the backward closure are only recorded
// when some parent is on the tape.
Tensor make_result(Shape shape, std::vector<double> data, std::vector<NodePtr> parents,
                   std::function<void(TensorNode&)> backward_fn) {
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    const bool tracked =
        std::any_of(parents.begin(), parents.end(), [](const NodePtr& p) { return p->requires_grad; });
    if (tracked) {
        node->requires_grad = true;
        node->parents = std::move(parents);
        node->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(node));
}

bool is_row_broadcast(const Shape& a, const Shape& b) {
    return a.size() == 2 && b.size() == 1 && a[1] == b[0];
}

void require_rank(const char* op, const Tensor& t, std::size_t rank) {
    if (t.rank() != rank) {
        throw DimensionError(fmt::format("{}: expected rank {} tensor, got {}", op, rank,
                                         shape_to_string(t.shape())));
    }
}

template <typename Forward, typename Derivative>
Tensor unary(const Tensor& a, Forward f, Derivative df) {
    const auto& in = a.node()->data;
    std::vector<double> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
    return make_result(a.shape(), out, {a.node()}, [df](TensorNode& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * df(p.data[i], self.data[i]);
    });
}

}  // namespace

std::string shape_to_string(const Shape& shape) { return fmt::format("[{}]", fmt::join(shape, "x")); }

std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::vector<double>& TensorNode::grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    return grad;
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
    if (shape.empty()) shape = {1};
    for (auto d : shape) {
        if (d == 0) throw DimensionError("tensor dimensions must be positive: " + shape_to_string(shape));
    }
    if (shape_numel(shape) != data.size()) {
        throw DimensionError(fmt::format("shape {} does not match {} data elements", shape_to_string(shape),
                                         data.size()));
    }
    node_ = std::make_shared<TensorNode>();
    node_->shape = std::move(shape);
    node_->data = std::move(data);
    node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    const auto n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor({1}, {value}, requires_grad); }

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
    const auto n = values.size();
    return Tensor({n}, std::move(values), requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values, bool requires_grad) {
    return Tensor({rows, cols}, std::move(values), requires_grad);
}

const Shape& Tensor::shape() const {
    if (!node_) throw StateError("use of undefined tensor");
    return node_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
    const auto& s = shape();
    if (axis >= s.size()) throw DimensionError(fmt::format("axis {} out of range for {}", axis, shape_to_string(s)));
    return s[axis];
}

std::size_t Tensor::numel() const { return node_ ? node_->data.size() : 0; }

std::span<const double> Tensor::data() const { return node_->data; }
std::span<double> Tensor::mutable_data() { return node_->data; }

double Tensor::item() const {
    if (numel() != 1) throw DimensionError("item() on non-scalar " + shape_to_string(shape()));
    return node_->data[0];
}

double Tensor::operator[](std::size_t flat_index) const { return node_->data.at(flat_index); }

double Tensor::at(std::size_t r, std::size_t c) const {
    require_rank("at", *this, 2);
    return node_->data.at(r * node_->shape[1] + c);
}

std::vector<double> Tensor::to_vector() const { return node_->data; }

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }
std::span<const double> Tensor::grad() const { return node_->grad; }
std::span<double> Tensor::mutable_grad() { return node_->grad_buffer(); }

void Tensor::zero_grad() {
    if (node_) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::backward() const {
    if (numel() != 1) {
        throw std::invalid_argument("backward() requires a scalar loss, got " + shape_to_string(shape()));
    }
    if (!node_->requires_grad) return;

    // iterative post-order DFS -> topological order
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> visited;
    std::vector<std::pair<TensorNode*, std::size_t>> stack{{node_.get(), 0}};
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            TensorNode* p = n->parents[next++].get();
            if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    node_->grad_buffer()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode* n = *it;
        if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
    }
}

Tensor Tensor::detach() const { return Tensor(shape(), node_->data, false); }

// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    if (a.shape() == b.shape()) {
        std::vector<double> out(a.numel());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
        return make_result(a.shape(), std::move(out), {a.node(), b.node()}, [](TensorNode& self) {
            for (auto& p : self.parents) {
                if (!p->requires_grad) continue;
                auto& g = p->grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
            }
        });
    }
    if (!is_row_broadcast(a.shape(), b.shape())) dim_error("add", a.shape(), b.shape());
    const std::size_t rows = a.dim(0), cols = a.dim(1);
    std::vector<double> out(a.numel());
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = a[r * cols + c] + b[c];
    return make_result(a.shape(), std::move(out), {a.node(), b.node()}, [rows, cols](TensorNode& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
            auto& g = pa.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (pb.requires_grad) {
            auto& g = pb.grad_buffer();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c) g[c] += self.grad[r * cols + c];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) dim_error("mul", a.shape(), b.shape());
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
    return make_result(a.shape(), std::move(out), {a.node(), b.node()}, [](TensorNode& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
            auto& g = pa.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.data[i];
        }
        if (pb.requires_grad) {
            auto& g = pb.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.data[i];
        }
    });
}

Tensor scale(const Tensor& a, double factor) {
    return unary(a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Tensor scale_by(const Tensor& a, const Tensor& s) {
    if (s.numel() != 1) throw DimensionError("scale_by: factor must have one element, got " + shape_to_string(s.shape()));
    const double k = s.item();
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * k;
    return make_result(a.shape(), std::move(out), {a.node(), s.node()}, [](TensorNode& self) {
        auto& pa = *self.parents[0];
        auto& ps = *self.parents[1];
        if (pa.requires_grad) {
            auto& g = pa.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * ps.data[0];
        }
        if (ps.requires_grad) {
            double acc = 0.0;
            for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i] * pa.data[i];
            ps.grad_buffer()[0] += acc;
        }
    });
}

Tensor tanh(const Tensor& a) {
    return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
    return unary(
        a,
        [](double x) {
            if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
            const double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
    return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor square(const Tensor& a) {
    return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor sum(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.data()) acc += v;
    return make_result({1}, {acc}, {a.node()}, [](TensorNode& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (double& v : g) v += self.grad[0];
    });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor mean_rows(const Tensor& a) {
    require_rank("mean_rows", a, 2);
    const std::size_t rows = a.dim(0), cols = a.dim(1);
    std::vector<double> out(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out[c] += a[r * cols + c];
    for (double& v : out) v /= static_cast<double>(rows);
    return make_result({cols}, std::move(out), {a.node()}, [rows, cols](TensorNode& self) {
        auto& g = self.parents[0]->grad_buffer();
        const double inv = 1.0 / static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += self.grad[c] * inv;
    });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) dim_error("matmul", a.shape(), b.shape());
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    const double* A = a.data().data();
    const double* B = b.data().data();
    std::vector<double> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = A[i * k + p];
            for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * B[p * n + j];
        }
    return make_result({m, n}, std::move(out), {a.node(), b.node()}, [m, k, n](TensorNode& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        const double* G = self.grad.data();
        if (pa.requires_grad) {
            // dA = G * B^T
            auto& ga = pa.grad_buffer();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) acc += G[i * n + j] * pb.data[p * n + j];
                    ga[i * k + p] += acc;
                }
        }
        if (pb.requires_grad) {
            // dB = A^T * G
            auto& gb = pb.grad_buffer();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double aip = pa.data[i * k + p];
                    for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * G[i * n + j];
                }
        }
    });
}

Tensor transpose(const Tensor& a) {
    require_rank("transpose", a, 2);
    const std::size_t rows = a.dim(0), cols = a.dim(1);
    std::vector<double> out(a.numel());
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = a[r * cols + c];
    return make_result({cols, rows}, std::move(out), {a.node()}, [rows, cols](TensorNode& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += self.grad[c * rows + r];
    });
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.numel()) dim_error("reshape", a.shape(), shape);
    return make_result(std::move(shape), a.to_vector(), {a.node()}, [](TensorNode& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    });
}

Tensor outer(const Tensor& a, const Tensor& b) {
    require_rank("outer", a, 1);
    require_rank("outer", b, 1);
    const std::size_t m = a.numel(), n = b.numel();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = a[i] * b[j];
    return make_result({m, n}, std::move(out), {a.node(), b.node()}, [m, n](TensorNode& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
            auto& g = pa.grad_buffer();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) g[i] += self.grad[i * n + j] * pb.data[j];
        }
        if (pb.requires_grad) {
            auto& g = pb.grad_buffer();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j] * pa.data[i];
        }
    });
}

namespace {

// rows x cols view of x for softmax purposes; vectors are a single row
std::pair<std::size_t, std::size_t> softmax_layout(const Tensor& x) {
    if (x.rank() == 1) return {1, x.numel()};
    if (x.rank() == 2) return {x.dim(0), x.dim(1)};
    throw DimensionError("softmax: expected vector or matrix, got " + shape_to_string(x.shape()));
}

}  // namespace

Tensor softmax(const Tensor& x) {
    if (!x.defined() || x.numel() == 0) throw std::invalid_argument("softmax: empty input");
    const auto [rows, cols] = softmax_layout(x);
    std::vector<double> out(x.numel());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = x.data().data() + r * cols;
        double* o = out.data() + r * cols;
        const double mx = *std::max_element(in, in + cols);
        double z = 0.0;
        for (std::size_t c = 0; c < cols; ++c) z += (o[c] = std::exp(in[c] - mx));
        for (std::size_t c = 0; c < cols; ++c) o[c] /= z;
    }
    return make_result(x.shape(), std::move(out), {x.node()}, [rows, cols](TensorNode& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* y = self.data.data() + r * cols;
            const double* gy = self.grad.data() + r * cols;
            double dot = 0.0;
            for (std::size_t c = 0; c < cols; ++c) dot += gy[c] * y[c];
            for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += y[c] * (gy[c] - dot);
        }
    });
}

Tensor log_softmax(const Tensor& x) {
    if (!x.defined() || x.numel() == 0) throw std::invalid_argument("log_softmax: empty input");
    const auto [rows, cols] = softmax_layout(x);
    std::vector<double> out(x.numel());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = x.data().data() + r * cols;
        const double mx = *std::max_element(in, in + cols);
        double z = 0.0;
        for (std::size_t c = 0; c < cols; ++c) z += std::exp(in[c] - mx);
        const double lse = mx + std::log(z);
        for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = in[c] - lse;
    }
    return make_result(x.shape(), std::move(out), {x.node()}, [rows, cols](TensorNode& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t r = 0; r < rows; ++r) {
            double gsum = 0.0;
            for (std::size_t c = 0; c < cols; ++c) gsum += self.grad[r * cols + c];
            for (std::size_t c = 0; c < cols; ++c) {
                const double p = std::exp(self.data[r * cols + c]);
                g[r * cols + c] += self.grad[r * cols + c] - p * gsum;
            }
        }
    });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw std::invalid_argument("concat: no tensors");
    std::vector<NodePtr> nodes;
    nodes.reserve(parts.size());
    for (const auto& p : parts) nodes.push_back(p.node());

    const std::size_t rank = parts[0].rank();
    for (const auto& p : parts) {
        if (p.rank() != rank) dim_error("concat", parts[0].shape(), p.shape());
    }
    if (axis == 0) {
        Shape shape = parts[0].shape();
        shape[0] = 0;
        std::vector<double> out;
        for (const auto& p : parts) {
            if (rank == 2 && p.dim(1) != parts[0].dim(1)) dim_error("concat", parts[0].shape(), p.shape());
            shape[0] += p.dim(0);
            out.insert(out.end(), p.data().begin(), p.data().end());
        }
        return make_result(std::move(shape), std::move(out), std::move(nodes), [](TensorNode& self) {
            std::size_t offset = 0;
            for (auto& p : self.parents) {
                const std::size_t n = p->data.size();
                if (p->requires_grad) {
                    auto& g = p->grad_buffer();
                    for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[offset + i];
                }
                offset += n;
            }
        });
    }
    if (axis != 1 || rank != 2) throw DimensionError("concat: axis 1 requires matrices");
    const std::size_t rows = parts[0].dim(0);
    std::size_t cols = 0;
    for (const auto& p : parts) {
        if (p.dim(0) != rows) dim_error("concat", parts[0].shape(), p.shape());
        cols += p.dim(1);
    }
    std::vector<double> out(rows * cols);
    std::size_t col0 = 0;
    for (const auto& p : parts) {
        const std::size_t pc = p.dim(1);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < pc; ++c) out[r * cols + col0 + c] = p[r * pc + c];
        col0 += pc;
    }
    return make_result({rows, cols}, std::move(out), std::move(nodes), [rows, cols](TensorNode& self) {
        std::size_t c0 = 0;
        for (auto& p : self.parents) {
            const std::size_t pc = p->shape[1];
            if (p->requires_grad) {
                auto& g = p->grad_buffer();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < pc; ++c) g[r * pc + c] += self.grad[r * cols + c0 + c];
            }
            c0 += pc;
        }
    });
}

Tensor stack(const std::vector<Tensor>& rows) {
    if (rows.empty()) throw std::invalid_argument("stack: no tensors");
    std::vector<Tensor> as_rows;
    as_rows.reserve(rows.size());
    for (const auto& r : rows) {
        require_rank("stack", r, 1);
        as_rows.push_back(reshape(r, {1, r.numel()}));
    }
    return concat(as_rows, 0);
}

Tensor slice(const Tensor& a, std::size_t begin, std::size_t end) {
    require_rank("slice", a, 1);
    if (begin >= end || end > a.numel()) {
        throw DimensionError(fmt::format("slice: range [{}, {}) invalid for {}", begin, end, shape_to_string(a.shape())));
    }
    std::vector<double> out(a.data().begin() + begin, a.data().begin() + end);
    return make_result({end - begin}, std::move(out), {a.node()}, [begin](TensorNode& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin + i] += self.grad[i];
    });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
    require_rank("slice_cols", a, 2);
    const std::size_t rows = a.dim(0), cols = a.dim(1);
    if (begin >= end || end > cols) {
        throw DimensionError(fmt::format("slice_cols: range [{}, {}) invalid for {}", begin, end, shape_to_string(a.shape())));
    }
    const std::size_t w = end - begin;
    std::vector<double> out(rows * w);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < w; ++c) out[r * w + c] = a[r * cols + begin + c];
    return make_result({rows, w}, std::move(out), {a.node()}, [rows, cols, begin, w](TensorNode& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < w; ++c) g[r * cols + begin + c] += self.grad[r * w + c];
    });
}

Tensor row(const Tensor& a, std::size_t index) {
    require_rank("row", a, 2);
    const std::size_t cols = a.dim(1);
    return slice(reshape(a, {a.numel()}), index * cols, (index + 1) * cols);
}

Tensor pick(const Tensor& a, std::size_t index) {
    require_rank("pick", a, 1);
    return slice(a, index, index + 1);
}

Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument(fmt::format("dropout: rate {} outside [0,1)", rate));
    if (!training || rate == 0.0) return x;
    const double keep_scale = 1.0 / (1.0 - rate);
    std::vector<double> mask(x.numel());
    for (double& m : mask) m = rng.uniform() < rate ? 0.0 : keep_scale;
    return mul(x, Tensor(x.shape(), std::move(mask)));
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionError(fmt::format("cosine_similarity: lengths {} and {} differ", a.size(), b.size()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine_similarity: zero vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double cosine_similarity(const Tensor& a, const Tensor& b) { return cosine_similarity(a.data(), b.data()); }

}  // namespace affectlab
