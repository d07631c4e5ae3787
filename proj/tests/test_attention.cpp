// Dense multi-head attention (tied and untied projections), checked against a
// from-scratch per-head composition built on independent matmul/softmax
// oracles.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "attnlab/attention.hpp"
#include "attnlab/errors.hpp"
#include "attnlab/rng.hpp"

using namespace attnlab;

namespace {

Matrix oracle_matmul(const Matrix& a, const Matrix& b) {
    REQUIRE(a.cols == b.rows);
    Matrix out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.cols; ++j) {
            double acc = 0.0;
            for (int k = 0; k < a.cols; ++k) acc += a(i, k) * b(k, j);
            out(i, j) = acc;
        }
    return out;
}

Matrix oracle_softmax(const Matrix& m) {
    Matrix out(m.rows, m.cols);
    for (int i = 0; i < m.rows; ++i) {
        double mx = m(i, 0);
        for (int j = 1; j < m.cols; ++j) mx = std::max(mx, m(i, j));
        double total = 0.0;
        for (int j = 0; j < m.cols; ++j) total += std::exp(m(i, j) - mx);
        for (int j = 0; j < m.cols; ++j) out(i, j) = std::exp(m(i, j) - mx) / total;
    }
    return out;
}

// Full multi-head attention recomposed step by step, independent of the
// library's fused loops.
AttentionResult oracle_full_attention(const Matrix& x, const ProjectionWeights& w) {
    const int heads = w.heads();
    const int head_dim = w.wq[0].cols;
    AttentionResult result;
    result.output = Matrix(x.rows, heads * head_dim);
    for (int h = 0; h < heads; ++h) {
        const Matrix q = oracle_matmul(x, w.query_weight(h));
        const Matrix k = oracle_matmul(x, w.key_weight(h));
        const Matrix v = oracle_matmul(x, w.value_weight(h));
        Matrix scores = oracle_matmul(q, transpose(k));
        for (double& s : scores.data) s /= std::sqrt(static_cast<double>(head_dim));
        const Matrix weights = oracle_softmax(scores);
        const Matrix out_h = oracle_matmul(weights, v);
        for (int i = 0; i < x.rows; ++i)
            for (int j = 0; j < head_dim; ++j) result.output(i, h * head_dim + j) = out_h(i, j);
        result.weights.head.push_back(weights);
    }
    return result;
}

Matrix random_matrix(int rows, int cols, Rng& rng) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = rng.gaussian();
    return m;
}

}  // namespace

TEST_CASE("variant tags round-trip and enumerate all thirteen variants") {
    const auto& all = all_variants();
    CHECK(all.size() == 13);
    for (Variant v : all) CHECK(parse_variant(variant_tag(v)) == v);
    CHECK(parse_variant("baseline-qk") == Variant::BaselineQK);
    CHECK(parse_variant("ours") == Variant::Ours);
    CHECK_THROWS_AS(parse_variant("frobnicate"), ParseError);
    CHECK_THROWS_AS(parse_variant(""), ParseError);
}

TEST_CASE("variant family predicates") {
    CHECK_FALSE(variant_uses_shared_qk(Variant::BaselineQK));
    CHECK(variant_uses_shared_qk(Variant::BaselineQ));
    for (Variant v : {Variant::SparseStrided, Variant::SparseFixed}) {
        CHECK(variant_is_sparse(v));
        CHECK(variant_uses_shared_qk(v));
    }
    for (Variant v :
         {Variant::SignALSH, Variant::XBox, Variant::XBoxQNF, Variant::SimpleLSH,
          Variant::SimpleALSH}) {
        CHECK(variant_is_lsh(v));
        CHECK(variant_uses_shared_qk(v));
    }
    for (Variant v : {Variant::SynDense, Variant::SynDenseMH, Variant::SynRandom, Variant::Ours}) {
        CHECK(variant_is_synth(v));
        CHECK_FALSE(variant_uses_shared_qk(v));
    }
}

TEST_CASE("ceil_sqrt and config defaults") {
    CHECK(ceil_sqrt(1) == 1);
    CHECK(ceil_sqrt(4) == 2);
    CHECK(ceil_sqrt(5) == 3);
    CHECK(ceil_sqrt(500) == 23);

    AttentionConfig cfg;
    cfg.seq_len = 500;
    CHECK(cfg.effective_stride() == 23);
    CHECK(cfg.effective_block() == 23);
    cfg.stride = 7;
    CHECK(cfg.effective_stride() == 7);

    AttentionConfig bad;
    bad.model_dim = 64;
    bad.heads = 12;  // 64 % 12 != 0
    CHECK_THROWS_AS(bad.head_dim(), ConfigError);

    AttentionConfig ok;
    ok.model_dim = 60;
    ok.heads = 12;
    CHECK(ok.head_dim() == 5);
    CHECK_NOTHROW(ok.validate_for_model());

    AttentionConfig neg;
    neg.seq_len = 0;
    CHECK_THROWS_AS(neg.validate(), ConfigError);
}

TEST_CASE("scaled_scores divides the raw products by sqrt(head_dim)") {
    const Matrix q = {{1, 2}, {3, 4}};
    const Matrix k = {{1, 0}, {0, 1}};
    const Matrix s = scaled_scores(q, k);
    const double r = std::sqrt(2.0);
    CHECK(s(0, 0) == doctest::Approx(1.0 / r).epsilon(1e-12));
    CHECK(s(0, 1) == doctest::Approx(2.0 / r).epsilon(1e-12));
    CHECK(s(1, 0) == doctest::Approx(3.0 / r).epsilon(1e-12));
    CHECK(s(1, 1) == doctest::Approx(4.0 / r).epsilon(1e-12));

    // orthonormal rows at head_dim 4: q k^T = I, scaled to 0.5 I
    const Matrix e4 = Matrix::identity(4);
    const Matrix s4 = scaled_scores(e4, e4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(s4(i, j) == doctest::Approx(i == j ? 0.5 : 0.0).epsilon(1e-12));

    CHECK_THROWS_AS(scaled_scores(Matrix(2, 3), Matrix(2, 4)), ShapeError);
}

TEST_CASE("single-token attention returns that token's value row") {
    Rng rng(31);
    AttentionConfig cfg;
    cfg.seq_len = 1;
    cfg.model_dim = 6;
    cfg.heads = 2;
    cfg.candidates = 1;
    cfg.variant = Variant::BaselineQK;
    const ProjectionWeights w = random_projection_weights(cfg, false, rng);
    const Matrix x = random_matrix(1, 6, rng);
    const AttentionResult r = full_attention_forward(x, w, cfg);
    REQUIRE(r.weights.head.size() == 2);
    for (const Matrix& hw : r.weights.head) {
        REQUIRE(hw.rows == 1);
        CHECK(hw(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    }
    for (int h = 0; h < 2; ++h) {
        const Matrix vh = matmul(x, w.value_weight(h));
        for (int j = 0; j < 3; ++j) CHECK(r.output(0, h * 3 + j) == doctest::Approx(vh(0, j)));
    }
}

TEST_CASE("identity value projection exposes the attention weights directly") {
    Rng rng(32);
    const int n = 6;
    AttentionConfig cfg;
    cfg.seq_len = n;
    cfg.model_dim = n;
    cfg.heads = 1;
    cfg.candidates = n;
    cfg.variant = Variant::BaselineQK;
    ProjectionWeights w = random_projection_weights(cfg, false, rng);
    w.wv[0] = Matrix::identity(n);
    // identity input keeps the values at the identity, so the output IS the
    // row-stochastic weight matrix
    const Matrix x = Matrix::identity(n);
    const AttentionResult r = full_attention_forward(x, w, cfg);
    CHECK(max_abs_diff(r.output, r.weights.head[0]) <= 1e-15);
}

TEST_CASE("full attention matches the step-by-step oracle") {
    Rng rng(33);
    for (int trial = 0; trial < 30; ++trial) {
        AttentionConfig cfg;
        cfg.heads = 1 + rng.index(4);
        cfg.seq_len = 1 + rng.index(12);
        cfg.model_dim = cfg.heads * (1 + rng.index(5));
        cfg.candidates = 1;
        cfg.variant = Variant::BaselineQK;
        const ProjectionWeights w = random_projection_weights(cfg, false, rng);
        const Matrix x = random_matrix(cfg.seq_len, cfg.model_dim, rng);
        const AttentionResult got = full_attention_forward(x, w, cfg);
        const AttentionResult want = oracle_full_attention(x, w);
        CHECK(max_abs_diff(got.output, want.output) <= 1e-12);
        REQUIRE(got.weights.head.size() == want.weights.head.size());
        for (std::size_t h = 0; h < got.weights.head.size(); ++h)
            CHECK(max_abs_diff(got.weights.head[h], want.weights.head[h]) <= 1e-12);
    }
}

TEST_CASE("attention weights are row-stochastic (property)") {
    Rng rng(34);
    for (int trial = 0; trial < 100; ++trial) {
        AttentionConfig cfg;
        cfg.heads = 1 + rng.index(3);
        cfg.seq_len = 1 + rng.index(10);
        cfg.model_dim = cfg.heads * (1 + rng.index(4));
        cfg.candidates = 1;
        const bool tied = rng.uniform() < 0.5;
        cfg.variant = tied ? Variant::BaselineQ : Variant::BaselineQK;
        const ProjectionWeights w = random_projection_weights(cfg, tied, rng);
        const Matrix x = random_matrix(cfg.seq_len, cfg.model_dim, rng);
        const AttentionResult r = full_attention_forward(x, w, cfg);
        for (const Matrix& hw : r.weights.head)
            for (int i = 0; i < hw.rows; ++i) {
                double total = 0.0;
                for (int j = 0; j < hw.cols; ++j) {
                    CHECK(hw(i, j) >= 0.0);
                    total += hw(i, j);
                }
                CHECK(std::abs(total - 1.0) <= 1e-9);
            }
    }
}

TEST_CASE("tied projections reproduce the untied path when W_Q equals W_K") {
    Rng rng(35);
    AttentionConfig cfg;
    cfg.seq_len = 9;
    cfg.model_dim = 12;
    cfg.heads = 3;
    cfg.candidates = 4;
    cfg.variant = Variant::BaselineQK;
    ProjectionWeights untied = random_projection_weights(cfg, false, rng);
    untied.wk = untied.wq;  // numerically tied

    ProjectionWeights tied;
    tied.shared_qk = true;
    tied.wq = untied.wq;
    tied.wv = untied.wv;

    const Matrix x = random_matrix(cfg.seq_len, cfg.model_dim, rng);
    const AttentionResult a = full_attention_forward(x, untied, cfg);
    AttentionConfig tied_cfg = cfg;
    tied_cfg.variant = Variant::BaselineQ;
    const AttentionResult b = full_attention_forward(x, tied, tied_cfg);
    CHECK(exactly_equal(a.output, b.output));
    for (std::size_t h = 0; h < a.weights.head.size(); ++h)
        CHECK(exactly_equal(a.weights.head[h], b.weights.head[h]));
}

TEST_CASE("permuting the input rows permutes outputs and conjugates weights") {
    Rng rng(36);
    AttentionConfig cfg;
    cfg.seq_len = 8;
    cfg.model_dim = 8;
    cfg.heads = 2;
    cfg.candidates = 2;
    cfg.variant = Variant::BaselineQK;
    const ProjectionWeights w = random_projection_weights(cfg, false, rng);
    const Matrix x = random_matrix(cfg.seq_len, cfg.model_dim, rng);

    std::vector<int> perm(static_cast<std::size_t>(cfg.seq_len));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = cfg.seq_len - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);

    Matrix px(cfg.seq_len, cfg.model_dim);
    for (int i = 0; i < cfg.seq_len; ++i)
        for (int j = 0; j < cfg.model_dim; ++j) px(i, j) = x(perm[i], j);

    const AttentionResult base = full_attention_forward(x, w, cfg);
    const AttentionResult permuted = full_attention_forward(px, w, cfg);
    for (int i = 0; i < cfg.seq_len; ++i)
        for (int j = 0; j < cfg.model_dim; ++j)
            CHECK(permuted.output(i, j) == doctest::Approx(base.output(perm[i], j)).epsilon(1e-9));
    for (std::size_t h = 0; h < base.weights.head.size(); ++h)
        for (int i = 0; i < cfg.seq_len; ++i)
            for (int j = 0; j < cfg.seq_len; ++j)
                CHECK(permuted.weights.head[h](i, j) ==
                      doctest::Approx(base.weights.head[h](perm[i], perm[j])).epsilon(1e-9));
}

TEST_CASE("full_attention_forward rejects mismatched configs") {
    Rng rng(37);
    AttentionConfig cfg;
    cfg.seq_len = 4;
    cfg.model_dim = 4;
    cfg.heads = 2;
    cfg.candidates = 2;
    cfg.variant = Variant::BaselineQK;
    const ProjectionWeights w = random_projection_weights(cfg, false, rng);
    const Matrix x = random_matrix(4, 4, rng);

    AttentionConfig sparse_cfg = cfg;
    sparse_cfg.variant = Variant::SparseStrided;
    CHECK_THROWS_AS(full_attention_forward(x, w, sparse_cfg), ConfigError);

    AttentionConfig tied_cfg = cfg;
    tied_cfg.variant = Variant::BaselineQ;  // w is untied
    CHECK_THROWS_AS(full_attention_forward(x, w, tied_cfg), ConfigError);

    const Matrix wrong_width = random_matrix(4, 5, rng);
    CHECK_THROWS_AS(full_attention_forward(wrong_width, w, cfg), ShapeError);
}

TEST_CASE("random_projection_weights: shapes, tie flag, determinism") {
    AttentionConfig cfg;
    cfg.seq_len = 4;
    cfg.model_dim = 8;
    cfg.heads = 2;
    cfg.candidates = 2;

    Rng r1(99), r2(99), r3(100);
    const ProjectionWeights a = random_projection_weights(cfg, false, r1);
    const ProjectionWeights b = random_projection_weights(cfg, false, r2);
    const ProjectionWeights c = random_projection_weights(cfg, false, r3);
    CHECK(a.heads() == 2);
    CHECK(a.wq[0].rows == 8);
    CHECK(a.wq[0].cols == 4);
    CHECK(a.wk.size() == 2);
    CHECK(exactly_equal(a.wq[0], b.wq[0]));
    CHECK(exactly_equal(a.wv[1], b.wv[1]));
    CHECK(max_abs_diff(a.wq[0], c.wq[0]) > 0.0);

    Rng r4(99);
    const ProjectionWeights tied = random_projection_weights(cfg, true, r4);
    CHECK(tied.shared_qk);
    CHECK(tied.wk.empty());
    CHECK(&tied.key_weight(0) == &tied.query_weight(0));
}
