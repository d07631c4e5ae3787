#include "attnlab/synthesizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace attnlab {

namespace {

constexpr double kDiagonalStrength = 5.0;
constexpr double kRampSpan = 3.0;
constexpr double kSparseNoise = 0.02;

int clamp_col(int c, int len) { return std::min(std::max(c, 0), len - 1); }

void check_synth_cfg(const AttentionConfig& cfg, bool dense) {
    if (dense) {
        if (cfg.variant != Variant::SynDense && cfg.variant != Variant::SynDenseMH)
            throw ConfigError("synthesizer_forward: variant must be syn-dense or syn-dense-mh");
    } else {
        if (cfg.variant != Variant::SynRandom && cfg.variant != Variant::Ours)
            throw ConfigError("synthesizer_forward: variant must be syn-random or ours");
    }
    cfg.validate();
}

AttentionResult apply_heads(const Matrix& x, const std::vector<Matrix>& value_weights,
                            std::vector<Matrix> logits_per_head) {
    int heads = static_cast<int>(logits_per_head.size());
    int vdim = x.cols / heads;
    AttentionResult result;
    result.output = Matrix(x.rows, x.cols);
    for (int h = 0; h < heads; ++h) {
        Matrix a = row_softmax(logits_per_head[h]);
        Matrix v = matmul(x, value_weights[h]);
        Matrix o = matmul(a, v);
        for (int i = 0; i < x.rows; ++i)
            for (int j = 0; j < vdim; ++j) result.output(i, h * vdim + j) = o(i, j);
        result.weights.head.push_back(std::move(a));
    }
    return result;
}

void check_value_weights(const std::vector<Matrix>& value_weights, int heads, int model_dim) {
    if (static_cast<int>(value_weights.size()) != heads)
        throw ConfigError("synthesizer_forward: expected " + std::to_string(heads) +
                          " value projections, got " + std::to_string(value_weights.size()));
    if (model_dim % heads != 0)
        throw ConfigError("synthesizer_forward: model_dim " + std::to_string(model_dim) +
                          " is not divisible by " + std::to_string(heads) + " heads");
    int vdim = model_dim / heads;
    for (const Matrix& w : value_weights)
        if (w.rows != model_dim || w.cols != vdim)
            throw ShapeError("synthesizer_forward: value projection must be " +
                             std::to_string(model_dim) + "x" + std::to_string(vdim));
}

}  // namespace

PatternSpec diagonal_pattern(int shift) {
    PatternSpec s;
    s.kind = PatternKind::Diagonal;
    s.shift = shift;
    s.strength = kDiagonalStrength;
    return s;
}

PatternSpec increasing_pattern() {
    PatternSpec s;
    s.kind = PatternKind::Increasing;
    s.strength = kRampSpan;
    return s;
}

PatternSpec decreasing_pattern() {
    PatternSpec s;
    s.kind = PatternKind::Decreasing;
    s.strength = kRampSpan;
    return s;
}

PatternSpec sparse_pattern() {
    PatternSpec s;
    s.kind = PatternKind::SparseRandom;
    s.noise_scale = kSparseNoise;
    return s;
}

Matrix make_pattern(const PatternSpec& spec, int len, std::uint64_t seed) {
    if (len < 1) throw ConfigError("make_pattern: len must be >= 1");
    if (spec.kind == PatternKind::Diagonal) {
        if (spec.shift < -2 || spec.shift > 2)
            throw ConfigError("make_pattern: diagonal shift must be in [-2, 2]");
        if (spec.shift != 0 && len < 3)
            throw ConfigError("make_pattern: shifted diagonals need len >= 3");
    }
    Matrix m(len, len);
    switch (spec.kind) {
        case PatternKind::Diagonal:
            for (int i = 0; i < len; ++i) m(i, clamp_col(i + spec.shift, len)) = spec.strength;
            break;
        case PatternKind::Increasing:
            for (int i = 0; i < len; ++i)
                for (int j = 0; j < len; ++j)
                    m(i, j) = len > 1 ? spec.strength * j / (len - 1) : 0.0;
            break;
        case PatternKind::Decreasing:
            for (int i = 0; i < len; ++i)
                for (int j = 0; j < len; ++j)
                    m(i, j) = len > 1 ? spec.strength * (len - 1 - j) / (len - 1) : 0.0;
            break;
        case PatternKind::SparseRandom: {
            Rng rng(seed);
            for (double& v : m.data) v = rng.gaussian(0.0, spec.noise_scale);
            break;
        }
    }
    return m;
}

RandomSynthLogits make_random_logits(int heads, int size_limit, std::uint64_t seed,
                                     double noise_scale) {
    if (heads < 1) throw ConfigError("make_random_logits: heads must be >= 1");
    if (size_limit < 1) throw ConfigError("make_random_logits: size_limit must be >= 1");
    RandomSynthLogits out;
    out.size_limit = size_limit;
    for (int h = 0; h < heads; ++h) {
        Rng rng(derive_seed(seed, "synth/logits/" + std::to_string(h)));
        Matrix m(size_limit, size_limit);
        for (double& v : m.data) v = rng.gaussian(0.0, noise_scale);
        out.head_logits.push_back(std::move(m));
    }
    return out;
}

RandomSynthLogits build_fixed_init(int heads, int size_limit, std::uint64_t seed,
                                   bool generalize) {
    if (heads < 1) throw ConfigError("build_fixed_init: heads must be >= 1");
    if (size_limit < 3) throw ConfigError("build_fixed_init: size_limit must be >= 3");
    if (heads != 12 && !generalize)
        throw ConfigError("build_fixed_init: layout is defined for 12 heads; got " +
                          std::to_string(heads) + " (pass generalize to scale the proportions)");

    // 5:1:1:5 split via largest remainder, exact for twelve heads.
    constexpr std::array<int, 4> quota = {5, 1, 1, 5};  // diag, inc, dec, sparse
    std::array<int, 4> count;
    std::array<double, 4> frac;
    int assigned = 0;
    for (int c = 0; c < 4; ++c) {
        double exact = static_cast<double>(heads) * quota[c] / 12.0;
        count[c] = static_cast<int>(exact);
        frac[c] = exact - count[c];
        assigned += count[c];
    }
    while (assigned < heads) {
        int best = 0;
        for (int c = 1; c < 4; ++c)
            if (frac[c] > frac[best]) best = c;
        ++count[best];
        frac[best] = -1.0;
        ++assigned;
    }

    constexpr std::array<int, 5> shifts = {0, -1, -2, 1, 2};
    RandomSynthLogits out;
    out.size_limit = size_limit;
    int head = 0;
    for (int d = 0; d < count[0]; ++d, ++head)
        out.head_logits.push_back(make_pattern(diagonal_pattern(shifts[d % 5]), size_limit, 0));
    for (int i = 0; i < count[1]; ++i, ++head)
        out.head_logits.push_back(make_pattern(increasing_pattern(), size_limit, 0));
    for (int i = 0; i < count[2]; ++i, ++head)
        out.head_logits.push_back(make_pattern(decreasing_pattern(), size_limit, 0));
    for (int s = 0; s < count[3]; ++s, ++head)
        out.head_logits.push_back(make_pattern(
            sparse_pattern(), size_limit, derive_seed(seed, "fixed-init/sparse/" + std::to_string(head))));
    return out;
}

DenseSynthWeights make_dense_synth_weights(int heads, int model_dim, int hidden, int size_limit,
                                           std::uint64_t seed) {
    if (heads < 1 || model_dim < 1 || hidden < 1 || size_limit < 1)
        throw ConfigError("make_dense_synth_weights: all dimensions must be >= 1");
    DenseSynthWeights w;
    w.hidden = hidden;
    w.size_limit = size_limit;
    for (int h = 0; h < heads; ++h) {
        Rng rng(derive_seed(seed, "synth/dense/" + std::to_string(h)));
        Matrix w1(model_dim, hidden);
        for (double& v : w1.data) v = rng.gaussian(0.0, 1.0 / std::sqrt(model_dim));
        Matrix w2(hidden, size_limit);
        for (double& v : w2.data) v = rng.gaussian(0.0, 1.0 / std::sqrt(hidden));
        w.w1.push_back(std::move(w1));
        w.b1.push_back(Matrix(1, hidden));
        w.w2.push_back(std::move(w2));
        w.b2.push_back(Matrix(1, size_limit));
    }
    return w;
}

Matrix dense_synth_logits(const Matrix& x, const DenseSynthWeights& w, int head) {
    if (head < 0 || head >= w.heads())
        throw ConfigError("dense_synth_logits: head index out of range");
    if (x.rows > w.size_limit)
        throw ConfigError("dense_synth_logits: sequence length " + std::to_string(x.rows) +
                          " exceeds table size " + std::to_string(w.size_limit));
    Matrix hidden = relu(linear_forward(x, w.w1[head], w.b1[head]));
    Matrix full = linear_forward(hidden, w.w2[head], w.b2[head]);
    Matrix out(x.rows, x.rows);
    for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < x.rows; ++j) out(i, j) = full(i, j);
    return out;
}

Matrix random_synth_logits_slice(const RandomSynthLogits& logits, int head, int len) {
    if (head < 0 || head >= logits.heads())
        throw ConfigError("random_synth_logits_slice: head index out of range");
    if (len < 1 || len > logits.size_limit)
        throw ConfigError("random_synth_logits_slice: length " + std::to_string(len) +
                          " outside table size " + std::to_string(logits.size_limit));
    const Matrix& src = logits.head_logits[head];
    Matrix out(len, len);
    for (int i = 0; i < len; ++i)
        for (int j = 0; j < len; ++j) out(i, j) = src(i, j);
    return out;
}

int synth_heads(const AttentionConfig& cfg) {
    return cfg.variant == Variant::SynDense ? 1 : cfg.heads;
}

std::vector<Matrix> make_value_weights(int heads_used, int model_dim, std::uint64_t seed) {
    if (heads_used < 1 || model_dim % heads_used != 0)
        throw ConfigError("make_value_weights: model_dim must divide by heads");
    int vdim = model_dim / heads_used;
    std::vector<Matrix> out;
    for (int h = 0; h < heads_used; ++h) {
        Rng rng(derive_seed(seed, "synth/value/" + std::to_string(h)));
        Matrix m(model_dim, vdim);
        for (double& v : m.data) v = rng.gaussian(0.0, 1.0 / std::sqrt(model_dim));
        out.push_back(std::move(m));
    }
    return out;
}

AttentionResult synthesizer_forward(const Matrix& x, const std::vector<Matrix>& value_weights,
                                    const AttentionConfig& cfg, const DenseSynthWeights& w) {
    check_synth_cfg(cfg, true);
    int heads = synth_heads(cfg);
    if (w.heads() != heads)
        throw ConfigError("synthesizer_forward: weights hold " + std::to_string(w.heads()) +
                          " heads, config wants " + std::to_string(heads));
    if (x.rows != cfg.seq_len || x.cols != cfg.model_dim)
        throw ShapeError("synthesizer_forward: input must be " + std::to_string(cfg.seq_len) +
                         "x" + std::to_string(cfg.model_dim));
    check_value_weights(value_weights, heads, cfg.model_dim);
    std::vector<Matrix> logits;
    logits.reserve(heads);
    for (int h = 0; h < heads; ++h) logits.push_back(dense_synth_logits(x, w, h));
    return apply_heads(x, value_weights, std::move(logits));
}

AttentionResult synthesizer_forward(const Matrix& x, const std::vector<Matrix>& value_weights,
                                    const AttentionConfig& cfg, const RandomSynthLogits& table) {
    check_synth_cfg(cfg, false);
    int heads = synth_heads(cfg);
    if (table.heads() != heads)
        throw ConfigError("synthesizer_forward: table holds " + std::to_string(table.heads()) +
                          " heads, config wants " + std::to_string(heads));
    if (x.rows != cfg.seq_len || x.cols != cfg.model_dim)
        throw ShapeError("synthesizer_forward: input must be " + std::to_string(cfg.seq_len) +
                         "x" + std::to_string(cfg.model_dim));
    check_value_weights(value_weights, heads, cfg.model_dim);
    std::vector<Matrix> logits;
    logits.reserve(heads);
    for (int h = 0; h < heads; ++h)
        logits.push_back(random_synth_logits_slice(table, h, cfg.seq_len));
    return apply_heads(x, value_weights, std::move(logits));
}

}  // namespace attnlab
