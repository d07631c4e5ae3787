#include "attnlab/sparse.hpp"

namespace attnlab {

std::vector<AttentionMask> default_head_masks(const AttentionConfig& cfg) {
    if (!variant_is_sparse(cfg.variant))
        throw ConfigError("default_head_masks: variant must be sparse-strided or sparse-fixed");
    cfg.validate();
    std::vector<AttentionMask> masks;
    masks.reserve(cfg.heads);
    int first_half = cfg.heads / 2;
    if (first_half == 0) first_half = 1;  // a single head keeps the local pattern
    for (int h = 0; h < cfg.heads; ++h) {
        HeadPattern p = h < first_half ? HeadPattern::PatternOne : HeadPattern::PatternTwo;
        masks.push_back(cfg.variant == Variant::SparseStrided
                            ? strided_mask(cfg.seq_len, cfg.effective_stride(), p)
                            : fixed_mask(cfg.seq_len, cfg.effective_block(), cfg.summary_width, p));
    }
    return masks;
}

AttentionResult sparse_attention_forward(const Matrix& x, const ProjectionWeights& w,
                                         const AttentionConfig& cfg,
                                         const std::vector<AttentionMask>& masks) {
    if (!variant_is_sparse(cfg.variant))
        throw ConfigError("sparse_attention_forward: variant must be sparse-strided or sparse-fixed");
    if (!w.shared_qk)
        throw ConfigError("sparse_attention_forward: sparse variants tie the query/key projection");
    cfg.validate_for_model();
    if (static_cast<int>(masks.size()) != cfg.heads)
        throw ConfigError("sparse_attention_forward: expected " + std::to_string(cfg.heads) +
                          " masks, got " + std::to_string(masks.size()));
    if (x.rows != cfg.seq_len || x.cols != cfg.model_dim)
        throw ShapeError("sparse_attention_forward: input must be " + std::to_string(cfg.seq_len) +
                         "x" + std::to_string(cfg.model_dim));
    std::vector<HeadQKV> qkv = project_qkv(x, w);
    AttentionResult result;
    result.output = Matrix(cfg.seq_len, cfg.model_dim);
    int hd = cfg.head_dim();
    for (int h = 0; h < cfg.heads; ++h) {
        Matrix a = masked_row_softmax(scaled_scores(qkv[h].q, qkv[h].k), masks[h]);
        Matrix o = matmul(a, qkv[h].v);
        for (int i = 0; i < cfg.seq_len; ++i)
            for (int j = 0; j < hd; ++j) result.output(i, h * hd + j) = o(i, j);
        result.weights.head.push_back(std::move(a));
    }
    return result;
}

}  // namespace attnlab
