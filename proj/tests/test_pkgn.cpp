#include <doctest.h>

#include <cmath>

#include "affectlab/optim.hpp"
#include "affectlab/pkgn.hpp"
#include "test_util.hpp"

using namespace affectlab;
using namespace affectlab::pkgn;
using namespace affectlab::testing;

namespace {

using Mat = std::vector<std::vector<double>>;

Mat to_mat(const Tensor& t) {
    Mat m(t.dim(0), std::vector<double>(t.dim(1)));
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = 0; j < m[i].size(); ++j) m[i][j] = t.at(i, j);
    }
    return m;
}

std::vector<double> vec_mat(const std::vector<double>& x, const Mat& w) {
    std::vector<double> y(w[0].size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = 0; j < y.size(); ++j) y[j] += x[i] * w[i][j];
    }
    return y;
}

std::vector<double> softmax_of(const std::vector<double>& s) {
    double mx = s[0];
    for (double v : s) mx = std::max(mx, v);
    double z = 0.0;
    std::vector<double> p(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) z += p[i] = std::exp(s[i] - mx);
    for (double& v : p) v /= z;
    return p;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

PkgnConfig toy_config(std::size_t d_k, std::size_t heads, std::size_t slots_f, std::size_t slots_a) {
    PkgnConfig c;
    c.d_text = c.d_vision = c.d_audio = 3;
    c.d_k = d_k;
    c.heads = heads;
    c.slots_f = slots_f;
    c.slots_a = slots_a;
    return c;
}

std::vector<std::vector<double>> toy_catalog(std::size_t n, std::size_t d, Rng& rng) {
    std::vector<std::vector<double>> cat(n);
    for (auto& row : cat) row = random_vector(d, rng);
    return cat;
}

}  // namespace

TEST_CASE("fusion matches a step-by-step oracle (d_k = 4, one head)") {
    Rng rng(7);
    ParameterSet params;
    const Pkgn pkgn(params, toy_config(4, 1, 2, 1), rng);
    const auto ft = random_vector(3, rng), fv = random_vector(3, rng), fa = random_vector(3, rng);

    auto project = [&](const std::string& name, const std::vector<double>& x) {
        auto y = vec_mat(x, to_mat(params.get(name + ".W")));
        const auto b = params.get(name + ".b").to_vector();
        for (std::size_t j = 0; j < y.size(); ++j) y[j] += b[j];
        return y;
    };
    const Mat rows{project("pkgn.fuse.proj_text", ft), project("pkgn.fuse.proj_vision", fv),
                   project("pkgn.fuse.proj_audio", fa)};
    const Mat wq = to_mat(params.get("pkgn.fuse.mha.Wq")), wk = to_mat(params.get("pkgn.fuse.mha.Wk"));
    const Mat wv = to_mat(params.get("pkgn.fuse.mha.Wv")), wo = to_mat(params.get("pkgn.fuse.mha.Wo"));
    Mat q, k, v;
    for (const auto& r : rows) {
        q.push_back(vec_mat(r, wq));
        k.push_back(vec_mat(r, wk));
        v.push_back(vec_mat(r, wv));
    }
    std::vector<double> pooled(4, 0.0);
    Mat weights;
    for (std::size_t i = 0; i < 3; ++i) {
        std::vector<double> s(3);
        for (std::size_t j = 0; j < 3; ++j) s[j] = dot(q[i], k[j]) / 2.0;  // sqrt(4)
        const auto w = softmax_of(s);
        weights.push_back(w);
        std::vector<double> h(4, 0.0);
        for (std::size_t j = 0; j < 3; ++j) {
            for (std::size_t c = 0; c < 4; ++c) h[c] += w[j] * v[j][c];
        }
        const auto o = vec_mat(h, wo);
        for (std::size_t c = 0; c < 4; ++c) pooled[c] += o[c] / 3.0;
    }

    const auto r = pkgn.fuse(Tensor::vector(ft), Tensor::vector(fv), Tensor::vector(fa));
    CHECK(max_abs_diff(r.fused, pooled) < 1e-10);
    for (std::size_t i = 0; i < 3; ++i) CHECK(max_abs_diff(row(r.attention[0], i), weights[i]) < 1e-10);
}

TEST_CASE("fusion of identical modality rows is uniform") {
    Rng rng(9);
    ParameterSet params;
    const Pkgn pkgn(params, toy_config(4, 2, 2, 1), rng);
    // tie the three projections
    for (const char* m : {"pkgn.fuse.proj_vision", "pkgn.fuse.proj_audio"}) {
        assign(params.get(std::string(m) + ".W"), params.get("pkgn.fuse.proj_text.W").to_vector());
        assign(params.get(std::string(m) + ".b"), params.get("pkgn.fuse.proj_text.b").to_vector());
    }
    const Tensor x = Tensor::vector(random_vector(3, rng));
    const auto r = pkgn.fuse(x, x, x);
    for (const auto& w : r.attention) {
        for (double p : w.data()) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    }
    const auto proj = add(matmul(reshape(x, {1, 3}), params.get("pkgn.fuse.proj_text.W")),
                          params.get("pkgn.fuse.proj_text.b"));
    const auto expected =
        matmul(matmul(proj, params.get("pkgn.fuse.mha.Wv")), params.get("pkgn.fuse.mha.Wo")).to_vector();
    CHECK(max_abs_diff(r.fused, expected) < 1e-12);
}

TEST_CASE("text-only fusion ignores vision and audio") {
    Rng rng(10);
    ParameterSet params;
    const Pkgn pkgn(params, toy_config(4, 2, 2, 1), rng);
    const Tensor x = Tensor::vector(random_vector(3, rng));
    const auto r = pkgn.fuse_text_only(x);
    CHECK(r.fused.shape() == Shape{4});
    for (double v : r.fused.data()) CHECK(std::isfinite(v));
    CHECK(params.contains("pkgn.fuse.const_vision"));
    CHECK(pkgn.fuse_text_only(x).fused.to_vector() == r.fused.to_vector());
}

TEST_CASE("zero update rates leave the knowledge unchanged") {
    Rng rng(11);
    ParameterSet params;
    const Pkgn pkgn(params, toy_config(4, 2, 3, 2), rng);
    const auto state = pkgn.initial_state(toy_catalog(3, 4, rng));
    const KnowledgeState warm = pkgn.update(state, Tensor::vector(random_vector(4, rng)));
    const UpdateRates zero{Tensor::scalar(0.0), Tensor::scalar(0.0)};
    const auto next = pkgn.update(warm, Tensor::vector(random_vector(4, rng)), zero);
    CHECK(next.factual.to_vector() == warm.factual.to_vector());
    CHECK(next.affective.to_vector() == warm.affective.to_vector());
    CHECK(next.turn == warm.turn + 1);
}

TEST_CASE("zeroed feed-forward output leaves the knowledge unchanged") {
    Rng rng(12);
    ParameterSet params;
    const Pkgn pkgn(params, toy_config(4, 2, 3, 2), rng);
    for (const char* bank : {"pkgn.update.ff_f", "pkgn.update.ff_a"}) {
        fill(params.get(std::string(bank) + ".l2.W"), 0.0);
        fill(params.get(std::string(bank) + ".l2.b"), 0.0);
    }
    fill(params.get("pkgn.update.rate_f"), 3.7);
    const auto state = pkgn.initial_state(toy_catalog(3, 4, rng));
    const auto next = pkgn.update(state, Tensor::vector(random_vector(4, rng)));
    CHECK(next.factual.to_vector() == state.factual.to_vector());
    CHECK(next.affective.to_vector() == state.affective.to_vector());
}

TEST_CASE("one-slot update matches hand arithmetic") {
    Rng rng(13);
    ParameterSet params;
    const Pkgn pkgn(params, toy_config(2, 1, 1, 0), rng);
    assign(params.get("pkgn.update.ff_f.l1.W"), {0.5, -0.2, 0.1, 0.4});
    assign(params.get("pkgn.update.ff_f.l1.b"), {0.05, -0.1});
    assign(params.get("pkgn.update.ff_f.l2.W"), {1.0, 0.3, -0.6, 0.2});
    assign(params.get("pkgn.update.ff_f.l2.b"), {0.0, 0.1});
    assign(params.get("pkgn.update.rate_f"), {0.25});
    assign(params.get("pkgn.update.gate_f"), {0.4});

    const double x0 = 0.8, x1 = -0.3;
    const double h0 = std::tanh(x0 * 0.5 + x1 * 0.1 + 0.05);
    const double h1 = std::tanh(x0 * -0.2 + x1 * 0.4 - 0.1);
    const double y0 = h0 * 1.0 + h1 * -0.6 + 0.0;
    const double y1 = h0 * 0.3 + h1 * 0.2 + 0.1;
    const double g = 0.25 * sigmoid_of(0.4);

    const auto state = pkgn.initial_state({{0.6, -1.2}});
    const auto next = pkgn.update(state, Tensor::vector({x0, x1}));
    CHECK(max_abs_diff(next.factual, {0.6 + g * y0, -1.2 + g * y1}) < 1e-12);
}

TEST_CASE("selection over a single slot") {
    Rng rng(14);
    ParameterSet params;
    const Pkgn pkgn(params, toy_config(4, 2, 1, 0), rng);
    const auto slot = random_vector(4, rng);
    assign(params.get("pkgn.select.Wv"), random_vector(16, rng));
    const auto state = pkgn.initial_state({slot});
    const auto sel = pkgn.select(Tensor::vector(random_vector(4, rng)), state);
    CHECK(sel.weights.to_vector() == std::vector<double>{1.0});
    CHECK(max_abs_diff(sel.output, vec_mat(slot, to_mat(params.get("pkgn.select.Wv")))) < 1e-12);
}

TEST_CASE("selection over identical slots is uniform") {
    Rng rng(15);
    ParameterSet params;
    const Pkgn pkgn(params, toy_config(4, 2, 3, 2), rng);
    const auto slot = random_vector(4, rng);
    KnowledgeState s;
    s.factual = Tensor::matrix(3, 4, [&] {
        std::vector<double> v;
        for (int i = 0; i < 3; ++i) v.insert(v.end(), slot.begin(), slot.end());
        return v;
    }());
    s.affective = Tensor::matrix(2, 4, [&] {
        std::vector<double> v;
        for (int i = 0; i < 2; ++i) v.insert(v.end(), slot.begin(), slot.end());
        return v;
    }());
    const auto sel = pkgn.select(Tensor::vector(random_vector(4, rng)), s);
    for (double w : sel.weights.data()) CHECK(w == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("three-slot selection matches the formula") {
    Rng rng(16);
    ParameterSet params;
    const Pkgn pkgn(params, toy_config(2, 1, 2, 1), rng);
    const Mat wk{{0.7, -0.3}, {0.2, 0.9}};
    const Mat wv{{1.1, 0.4}, {-0.5, 0.6}};
    assign(params.get("pkgn.select.Wk"), {0.7, -0.3, 0.2, 0.9});
    assign(params.get("pkgn.select.Wv"), {1.1, 0.4, -0.5, 0.6});
    const Mat slots{{1.0, 0.5}, {-0.4, 0.8}, {0.3, -1.0}};
    KnowledgeState s;
    s.factual = Tensor::matrix(2, 2, {1.0, 0.5, -0.4, 0.8});
    s.affective = Tensor::matrix(1, 2, {0.3, -1.0});
    const std::vector<double> q{0.6, -0.2};

    std::vector<double> scores;
    for (const auto& slot : slots) scores.push_back(dot(vec_mat(slot, wk), q) / std::sqrt(2.0));
    const auto w = softmax_of(scores);
    std::vector<double> out(2, 0.0);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto v = vec_mat(slots[i], wv);
        for (std::size_t c = 0; c < 2; ++c) out[c] += w[i] * v[c];
    }
    const auto sel = pkgn.select(Tensor::vector(q), s);
    CHECK(max_abs_diff(sel.weights, w) < 1e-10);
    CHECK(max_abs_diff(sel.output, out) < 1e-10);
    CHECK(sum_of(sel.weights.data()) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("initial state and shape checks") {
    Rng rng(17);
    ParameterSet params;
    const Pkgn pkgn(params, toy_config(4, 2, 3, 2), rng);
    const auto cat = toy_catalog(3, 4, rng);
    const auto s = pkgn.initial_state(cat);
    CHECK(s.factual.shape() == Shape{3, 4});
    CHECK(s.affective.to_vector() == std::vector<double>(8, 0.0));
    CHECK(s.stacked().shape() == Shape{5, 4});
    CHECK_THROWS_AS(pkgn.initial_state(toy_catalog(2, 4, rng)), DimensionError);
    CHECK_THROWS_AS(pkgn.update(s, Tensor::vector({1, 2})), DimensionError);
    CHECK_THROWS_AS(pkgn.select(Tensor::vector({1, 2, 3}), s), DimensionError);

    ParameterSet other;
    CHECK_THROWS_AS(Pkgn(other, toy_config(6, 4, 3, 2), rng), ConfigError);
}

TEST_CASE("knowledge updates are differentiable end to end") {
    Rng rng(18);
    ParameterSet params;
    const Pkgn pkgn(params, toy_config(4, 2, 3, 2), rng);
    const auto cat = toy_catalog(3, 4, rng);
    const Tensor ft = Tensor::vector(random_vector(3, rng)), fv = Tensor::vector(random_vector(3, rng)),
                 fa = Tensor::vector(random_vector(3, rng)), q = Tensor::vector(random_vector(4, rng));
    std::vector<Tensor> all;
    for (auto& [name, t] : params) all.push_back(t);
    auto loss = [&] {
        auto s = pkgn.initial_state(cat);
        for (int t = 0; t < 2; ++t) s = pkgn.update(s, pkgn.fuse(ft, fv, fa).fused);
        return sum(square(pkgn.select(q, s).output));
    };
    CHECK(grad_check(loss, all) < 1e-4);
}
