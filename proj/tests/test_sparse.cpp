// Sparse mask layouts and masked attention, checked against a dense oracle
// that fills forbidden scores with -infinity before an independent softmax.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <deque>
#include <limits>

#include "attnlab/attention.hpp"
#include "attnlab/errors.hpp"
#include "attnlab/rng.hpp"
#include "attnlab/sparse.hpp"

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

// Independent masked attention: -inf fill, plain softmax, no shared kernels.
Matrix oracle_masked_attention_weights(const Matrix& q, const Matrix& k,
                                       const AttentionMask& mask) {
    const double ninf = -std::numeric_limits<double>::infinity();
    Matrix scores = oracle_matmul(q, transpose(k));
    const double root = std::sqrt(static_cast<double>(q.cols));
    for (int i = 0; i < scores.rows; ++i)
        for (int j = 0; j < scores.cols; ++j) {
            scores(i, j) /= root;
            if (!mask.at(i, j)) scores(i, j) = ninf;
        }
    Matrix weights(scores.rows, scores.cols);
    for (int i = 0; i < scores.rows; ++i) {
        double mx = ninf;
        for (int j = 0; j < scores.cols; ++j) mx = std::max(mx, scores(i, j));
        double total = 0.0;
        for (int j = 0; j < scores.cols; ++j) total += std::exp(scores(i, j) - mx);
        for (int j = 0; j < scores.cols; ++j) weights(i, j) = std::exp(scores(i, j) - mx) / total;
    }
    return weights;
}

Matrix random_matrix(int rows, int cols, Rng& rng) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = rng.gaussian();
    return m;
}

// Longest hop count needed to reach any node from any other in the union of
// the two mask graphs (edges i -> j wherever either mask permits).
int union_graph_eccentricity(const AttentionMask& a, const AttentionMask& b) {
    const int n = a.rows;
    int worst = 0;
    for (int start = 0; start < n; ++start) {
        std::vector<int> dist(static_cast<std::size_t>(n), -1);
        std::deque<int> queue{start};
        dist[static_cast<std::size_t>(start)] = 0;
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop_front();
            for (int v = 0; v < n; ++v)
                if (dist[static_cast<std::size_t>(v)] < 0 && (a.at(u, v) || b.at(u, v))) {
                    dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
                    queue.push_back(v);
                }
        }
        for (int v = 0; v < n; ++v) {
            REQUIRE(dist[static_cast<std::size_t>(v)] >= 0);
            worst = std::max(worst, dist[static_cast<std::size_t>(v)]);
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("strided mask hand examples") {
    // stride = len: the local window covers everything
    const AttentionMask full_local = strided_mask(4, 4, HeadPattern::PatternOne);
    CHECK(full_local.total_count() == 16);

    // stride 2, pattern two, row 3 attends columns {1, 3}
    const AttentionMask p2 = strided_mask(4, 2, HeadPattern::PatternTwo);
    CHECK_FALSE(p2.at(3, 0));
    CHECK(p2.at(3, 1));
    CHECK_FALSE(p2.at(3, 2));
    CHECK(p2.at(3, 3));

    // stride 1: local window degenerates to the diagonal, strided columns to full
    const AttentionMask diag = strided_mask(5, 1, HeadPattern::PatternOne);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) CHECK(diag.at(i, j) == (i == j));
    CHECK(strided_mask(5, 1, HeadPattern::PatternTwo).total_count() == 25);

    CHECK_THROWS_AS(strided_mask(4, 0, HeadPattern::PatternOne), ConfigError);
    CHECK_THROWS_AS(strided_mask(4, 5, HeadPattern::PatternOne), ConfigError);
    CHECK_THROWS_AS(strided_mask(0, 1, HeadPattern::PatternOne), ConfigError);
}

TEST_CASE("fixed mask hand examples") {
    // block = len: one block, pattern one covers everything
    CHECK(fixed_mask(4, 4, 1, HeadPattern::PatternOne).total_count() == 16);

    // len 4, block 2, summary width 1: pattern two keeps columns {1, 3}
    const AttentionMask p2 = fixed_mask(4, 2, 1, HeadPattern::PatternTwo);
    for (int i = 0; i < 4; ++i) {
        CHECK_FALSE(p2.at(i, 0));
        CHECK(p2.at(i, 1));
        CHECK_FALSE(p2.at(i, 2));
        CHECK(p2.at(i, 3));
    }

    // summary width = block: pattern two covers everything
    CHECK(fixed_mask(6, 3, 3, HeadPattern::PatternTwo).total_count() == 36);

    // pattern one groups whole blocks
    const AttentionMask p1 = fixed_mask(6, 3, 1, HeadPattern::PatternOne);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) CHECK(p1.at(i, j) == (i / 3 == j / 3));

    CHECK_THROWS_AS(fixed_mask(4, 2, 3, HeadPattern::PatternTwo), ConfigError);
    CHECK_THROWS_AS(fixed_mask(4, 2, 0, HeadPattern::PatternTwo), ConfigError);
    CHECK_THROWS_AS(fixed_mask(4, 5, 1, HeadPattern::PatternOne), ConfigError);
}

TEST_CASE("strided mask row counts obey the closed-form bounds (property)") {
    Rng rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        const int len = 1 + rng.index(40);
        const int stride = 1 + rng.index(len);
        const AttentionMask p1 = strided_mask(len, stride, HeadPattern::PatternOne);
        const AttentionMask p2 = strided_mask(len, stride, HeadPattern::PatternTwo);
        const int cap = (len + stride - 1) / stride;  // ceil(len / stride)
        for (int i = 0; i < len; ++i) {
            CHECK(p1.row_count(i) <= 2 * stride - 1);
            // local window truncated at the edges
            const int lo = std::max(0, i - stride + 1);
            const int hi = std::min(len - 1, i + stride - 1);
            CHECK(p1.row_count(i) == hi - lo + 1);
            // strided columns: exactly the j = i mod stride residue class
            const int expect = (len - i % stride + stride - 1) / stride;
            CHECK(p2.row_count(i) == expect);
            CHECK(p2.row_count(i) <= cap);
            CHECK(p1.at(i, i));  // the diagonal always survives
            CHECK(p2.at(i, i));
        }
        CHECK(p1.all_rows_nonempty());
        CHECK(p2.all_rows_nonempty());
    }
}

TEST_CASE("fixed mask row counts and diagonal coverage (property)") {
    Rng rng(42);
    for (int trial = 0; trial < 100; ++trial) {
        const int len = 1 + rng.index(40);
        const int block = 1 + rng.index(len);
        const int sw = 1 + rng.index(block);
        const AttentionMask p1 = fixed_mask(len, block, sw, HeadPattern::PatternOne);
        const AttentionMask p2 = fixed_mask(len, block, sw, HeadPattern::PatternTwo);
        for (int i = 0; i < len; ++i) {
            CHECK(p1.row_count(i) <= block);
            CHECK(p1.at(i, i));
            CHECK(p2.row_count(i) <= sw * ((len + block - 1) / block));
        }
        CHECK(p1.all_rows_nonempty());
        // pattern two rows can only be empty when no column reaches a summary
        // position, which needs len smaller than the first summary column
        if (len >= block) CHECK(p2.all_rows_nonempty());
    }
}

TEST_CASE("union of the two strided patterns reaches every token within two hops") {
    for (int len : {4, 9, 16, 25, 37, 64, 100}) {
        const int stride = ceil_sqrt(len);
        const AttentionMask p1 = strided_mask(len, stride, HeadPattern::PatternOne);
        const AttentionMask p2 = strided_mask(len, stride, HeadPattern::PatternTwo);
        CHECK(union_graph_eccentricity(p1, p2) <= 2);
    }
}

TEST_CASE("mask_to_pbm renders a plain P1 bitmap") {
    AttentionMask m(2, 3);
    m.set(0, 0, true);
    m.set(1, 2, true);
    CHECK(mask_to_pbm(m) == "P1\n3 2\n1 0 0\n0 0 1\n");
    CHECK(mask_to_pbm(AttentionMask::full(1)) == "P1\n1 1\n1\n");
}

TEST_CASE("default_head_masks splits heads between the two patterns") {
    AttentionConfig cfg;
    cfg.variant = Variant::SparseStrided;
    cfg.seq_len = 16;
    cfg.model_dim = 48;
    cfg.heads = 12;
    cfg.candidates = 4;
    const auto masks = default_head_masks(cfg);
    REQUIRE(masks.size() == 12);
    for (int h = 0; h < 6; ++h) CHECK(masks[h].pattern == HeadPattern::PatternOne);
    for (int h = 6; h < 12; ++h) CHECK(masks[h].pattern == HeadPattern::PatternTwo);
    // stride defaults to ceil(sqrt(16)) = 4
    CHECK(masks[0].row_count(0) == 4);

    AttentionConfig one_head = cfg;
    one_head.heads = 1;
    one_head.model_dim = 48;
    CHECK(default_head_masks(one_head)[0].pattern == HeadPattern::PatternOne);

    AttentionConfig fixed_cfg = cfg;
    fixed_cfg.variant = Variant::SparseFixed;
    const auto fixed_masks = default_head_masks(fixed_cfg);
    CHECK(fixed_masks[0].pattern == HeadPattern::PatternOne);
    CHECK(fixed_masks[11].pattern == HeadPattern::PatternTwo);

    AttentionConfig dense_cfg = cfg;
    dense_cfg.variant = Variant::BaselineQK;
    CHECK_THROWS_AS(default_head_masks(dense_cfg), ConfigError);
}

TEST_CASE("sparse forward matches the -inf dense oracle (property)") {
    Rng rng(43);
    for (int trial = 0; trial < 50; ++trial) {
        AttentionConfig cfg;
        cfg.variant = rng.uniform() < 0.5 ? Variant::SparseStrided : Variant::SparseFixed;
        cfg.heads = 1 + rng.index(4);
        cfg.seq_len = 2 + rng.index(31);  // <= 32
        cfg.model_dim = cfg.heads * (1 + rng.index(4));
        cfg.candidates = 1;
        cfg.stride = 1 + rng.index(cfg.seq_len);
        cfg.block = 1 + rng.index(cfg.seq_len);
        cfg.summary_width = 1 + rng.index(cfg.effective_block());
        const ProjectionWeights w = random_projection_weights(cfg, true, rng);
        const Matrix x = random_matrix(cfg.seq_len, cfg.model_dim, rng);
        const auto masks = default_head_masks(cfg);
        const AttentionResult got = sparse_attention_forward(x, w, cfg, masks);

        const auto qkv = project_qkv(x, w);
        const int hd = cfg.head_dim();
        for (int h = 0; h < cfg.heads; ++h) {
            const Matrix want = oracle_masked_attention_weights(qkv[h].q, qkv[h].k, masks[h]);
            CHECK(max_abs_diff(got.weights.head[h], want) <= 1e-9);
            // forbidden positions carry exactly zero weight
            for (int i = 0; i < cfg.seq_len; ++i)
                for (int j = 0; j < cfg.seq_len; ++j)
                    if (!masks[h].at(i, j)) CHECK(got.weights.head[h](i, j) == 0.0);
            const Matrix out_h = oracle_matmul(want, qkv[h].v);
            for (int i = 0; i < cfg.seq_len; ++i)
                for (int j = 0; j < hd; ++j)
                    CHECK(std::abs(got.output(i, h * hd + j) - out_h(i, j)) <= 1e-9);
        }
    }
}

TEST_CASE("full masks collapse sparse attention onto the dense baseline exactly") {
    Rng rng(44);
    AttentionConfig cfg;
    cfg.variant = Variant::SparseStrided;
    cfg.seq_len = 10;
    cfg.model_dim = 12;
    cfg.heads = 3;
    cfg.candidates = 2;
    const ProjectionWeights w = random_projection_weights(cfg, true, rng);
    const Matrix x = random_matrix(cfg.seq_len, cfg.model_dim, rng);
    const std::vector<AttentionMask> full(static_cast<std::size_t>(cfg.heads),
                                          AttentionMask::full(cfg.seq_len));
    const AttentionResult sparse = sparse_attention_forward(x, w, cfg, full);

    AttentionConfig dense_cfg = cfg;
    dense_cfg.variant = Variant::BaselineQ;
    const AttentionResult dense = full_attention_forward(x, w, dense_cfg);
    CHECK(exactly_equal(sparse.output, dense.output));
    for (int h = 0; h < cfg.heads; ++h)
        CHECK(exactly_equal(sparse.weights.head[h], dense.weights.head[h]));
}

TEST_CASE("diagonal masks make sparse attention return the values unchanged") {
    Rng rng(45);
    AttentionConfig cfg;
    cfg.variant = Variant::SparseStrided;
    cfg.seq_len = 7;
    cfg.model_dim = 8;
    cfg.heads = 2;
    cfg.candidates = 1;
    cfg.stride = 1;
    const ProjectionWeights w = random_projection_weights(cfg, true, rng);
    const Matrix x = random_matrix(cfg.seq_len, cfg.model_dim, rng);
    const std::vector<AttentionMask> diag(static_cast<std::size_t>(cfg.heads),
                                          strided_mask(cfg.seq_len, 1, HeadPattern::PatternOne));
    const AttentionResult r = sparse_attention_forward(x, w, cfg, diag);
    const auto qkv = project_qkv(x, w);
    const int hd = cfg.head_dim();
    for (int h = 0; h < cfg.heads; ++h)
        for (int i = 0; i < cfg.seq_len; ++i)
            for (int j = 0; j < hd; ++j)
                CHECK(r.output(i, h * hd + j) == doctest::Approx(qkv[h].v(i, j)).epsilon(1e-12));
}

TEST_CASE("sparse forward validates weights, masks, and shapes") {
    Rng rng(46);
    AttentionConfig cfg;
    cfg.variant = Variant::SparseStrided;
    cfg.seq_len = 6;
    cfg.model_dim = 6;
    cfg.heads = 2;
    cfg.candidates = 2;
    const ProjectionWeights tied = random_projection_weights(cfg, true, rng);
    const ProjectionWeights untied = random_projection_weights(cfg, false, rng);
    const Matrix x = random_matrix(6, 6, rng);
    const auto masks = default_head_masks(cfg);

    CHECK_THROWS_AS(sparse_attention_forward(x, untied, cfg, masks), ConfigError);

    std::vector<AttentionMask> too_few(1, masks[0]);
    CHECK_THROWS_AS(sparse_attention_forward(x, tied, cfg, too_few), ConfigError);

    AttentionConfig dense_cfg = cfg;
    dense_cfg.variant = Variant::BaselineQK;
    CHECK_THROWS_AS(sparse_attention_forward(x, tied, dense_cfg, masks), ConfigError);

    CHECK_THROWS_AS(sparse_attention_forward(random_matrix(5, 6, rng), tied, cfg, masks),
                    ShapeError);
}
