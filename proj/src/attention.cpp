#include "attnlab/attention.hpp"

#include <cmath>

namespace attnlab {

namespace {

struct TagEntry {
    Variant variant;
    const char* tag;
};

constexpr TagEntry kTags[] = {
    {Variant::BaselineQK, "baseline-qk"},
    {Variant::BaselineQ, "baseline-q"},
    {Variant::SparseStrided, "sparse-strided"},
    {Variant::SparseFixed, "sparse-fixed"},
    {Variant::SignALSH, "sign-alsh"},
    {Variant::XBox, "xbox"},
    {Variant::XBoxQNF, "xbox-qnf"},
    {Variant::SimpleLSH, "simple-lsh"},
    {Variant::SimpleALSH, "simple-alsh"},
    {Variant::SynDense, "syn-dense"},
    {Variant::SynDenseMH, "syn-dense-mh"},
    {Variant::SynRandom, "syn-random"},
    {Variant::Ours, "ours"},
};

}  // namespace

const char* variant_tag(Variant v) {
    for (const TagEntry& e : kTags)
        if (e.variant == v) return e.tag;
    throw Error("variant_tag: unhandled variant");
}

Variant parse_variant(std::string_view tag) {
    for (const TagEntry& e : kTags)
        if (tag == e.tag) return e.variant;
    std::string valid;
    for (const TagEntry& e : kTags) {
        if (!valid.empty()) valid += ", ";
        valid += e.tag;
    }
    throw ParseError("unknown variant '" + std::string(tag) + "' (expected one of: " + valid + ")");
}

const std::vector<Variant>& all_variants() {
    static const std::vector<Variant> all = [] {
        std::vector<Variant> v;
        for (const TagEntry& e : kTags) v.push_back(e.variant);
        return v;
    }();
    return all;
}

bool variant_is_lsh(Variant v) {
    return v == Variant::SignALSH || v == Variant::XBox || v == Variant::XBoxQNF ||
           v == Variant::SimpleLSH || v == Variant::SimpleALSH;
}

bool variant_is_sparse(Variant v) {
    return v == Variant::SparseStrided || v == Variant::SparseFixed;
}

bool variant_is_synth(Variant v) {
    return v == Variant::SynDense || v == Variant::SynDenseMH || v == Variant::SynRandom ||
           v == Variant::Ours;
}

bool variant_uses_shared_qk(Variant v) {
    return v == Variant::BaselineQ || variant_is_sparse(v) || variant_is_lsh(v);
}

int ceil_sqrt(int n) {
    int r = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    while (r > 1 && static_cast<long long>(r - 1) * (r - 1) >= n) --r;
    while (static_cast<long long>(r) * r < n) ++r;
    return r;
}

int AttentionConfig::head_dim() const {
    if (heads < 1) throw ConfigError("heads must be >= 1");
    if (model_dim % heads != 0)
        throw ConfigError("model_dim " + std::to_string(model_dim) +
                          " is not divisible by heads " + std::to_string(heads));
    return model_dim / heads;
}

int AttentionConfig::effective_stride() const { return stride > 0 ? stride : ceil_sqrt(seq_len); }

int AttentionConfig::effective_block() const { return block > 0 ? block : ceil_sqrt(seq_len); }

void AttentionConfig::validate() const {
    if (seq_len < 1) throw ConfigError("L must be >= 1");
    if (model_dim < 1) throw ConfigError("D must be >= 1");
    if (heads < 1) throw ConfigError("H must be >= 1");
    if (candidates < 1) throw ConfigError("C must be >= 1");
    if (synth_hidden < 1) throw ConfigError("N must be >= 1");
    if (alsh_scale <= 0.0 || alsh_scale > 1.0) throw ConfigError("U must be in (0, 1]");
    if (alsh_order < 1) throw ConfigError("m must be >= 1");
    if (stride < 0 || stride > seq_len) throw ConfigError("stride must be in [1, L] (0 = auto)");
    if (block < 0 || block > seq_len) throw ConfigError("block must be in [1, L] (0 = auto)");
    if (summary_width < 1 || summary_width > effective_block())
        throw ConfigError("summary_width must be in [1, block]");
}

void AttentionConfig::validate_for_model() const {
    validate();
    head_dim();
    if (variant_is_lsh(variant) && candidates > seq_len)
        throw ConfigError("C " + std::to_string(candidates) + " exceeds L " +
                          std::to_string(seq_len));
}

ProjectionWeights random_projection_weights(const AttentionConfig& cfg, bool shared_qk, Rng& rng) {
    cfg.validate_for_model();
    int hd = cfg.head_dim();
    double sd = 1.0 / std::sqrt(static_cast<double>(cfg.model_dim));
    auto draw = [&] {
        Matrix m(cfg.model_dim, hd);
        for (double& v : m.data) v = rng.gaussian(0.0, sd);
        return m;
    };
    ProjectionWeights w;
    w.shared_qk = shared_qk;
    for (int h = 0; h < cfg.heads; ++h) {
        w.wq.push_back(draw());
        if (!shared_qk) w.wk.push_back(draw());
        w.wv.push_back(draw());
    }
    return w;
}

std::vector<HeadQKV> project_qkv(const Matrix& x, const ProjectionWeights& w) {
    if (w.heads() < 1) throw ConfigError("project_qkv: weights hold no heads");
    if (x.cols != w.wq[0].rows)
        throw ShapeError("project_qkv: input dim " + std::to_string(x.cols) +
                         " does not match projection rows " + std::to_string(w.wq[0].rows));
    std::vector<HeadQKV> out;
    out.reserve(w.heads());
    for (int h = 0; h < w.heads(); ++h) {
        HeadQKV qkv;
        qkv.q = matmul(x, w.query_weight(h));
        qkv.k = w.shared_qk ? qkv.q : matmul(x, w.key_weight(h));
        qkv.v = matmul(x, w.value_weight(h));
        out.push_back(std::move(qkv));
    }
    return out;
}

Matrix scaled_scores(const Matrix& q, const Matrix& k) {
    if (q.cols != k.cols)
        throw ShapeError("scaled_scores: query dim " + std::to_string(q.cols) +
                         " does not match key dim " + std::to_string(k.cols));
    if (q.cols < 1) throw ShapeError("scaled_scores: head dim must be >= 1");
    Matrix s = matmul_transpose_b(q, k);
    double inv = 1.0 / std::sqrt(static_cast<double>(q.cols));
    for (double& v : s.data) v *= inv;
    return s;
}

AttentionResult full_attention_forward(const Matrix& x, const ProjectionWeights& w,
                                       const AttentionConfig& cfg) {
    if (cfg.variant != Variant::BaselineQK && cfg.variant != Variant::BaselineQ)
        throw ConfigError("full_attention_forward: variant must be baseline-qk or baseline-q");
    if ((cfg.variant == Variant::BaselineQ) != w.shared_qk)
        throw ConfigError("full_attention_forward: variant and shared_qk flag disagree");
    cfg.validate_for_model();
    if (x.rows != cfg.seq_len || x.cols != cfg.model_dim)
        throw ShapeError("full_attention_forward: input must be " + std::to_string(cfg.seq_len) +
                         "x" + std::to_string(cfg.model_dim));
    std::vector<HeadQKV> qkv = project_qkv(x, w);
    AttentionResult result;
    result.output = Matrix(cfg.seq_len, cfg.model_dim);
    int hd = cfg.head_dim();
    for (int h = 0; h < cfg.heads; ++h) {
        Matrix a = row_softmax(scaled_scores(qkv[h].q, qkv[h].k));
        Matrix o = matmul(a, qkv[h].v);
        for (int i = 0; i < cfg.seq_len; ++i)
            for (int j = 0; j < hd; ++j) result.output(i, h * hd + j) = o(i, j);
        result.weights.head.push_back(std::move(a));
    }
    return result;
}

}  // namespace attnlab
