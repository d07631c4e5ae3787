#include "attnlab/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "attnlab/errors.hpp"
#include "attnlab/sparse.hpp"

namespace attnlab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::string head_key(const char* prefix, int h) { return std::string(prefix) + std::to_string(h); }

}  // namespace

Matrix make_synthetic_frames(int len, int dim, Rng& rng) {
    if (len < 1 || dim < 1) throw ConfigError("make_synthetic_frames: sizes must be positive");
    Matrix frames(len, dim);
    constexpr int kSources = 3;
    double freq[kSources], amp[kSources], phase[kSources];
    for (int c = 0; c < kSources; ++c) {
        freq[c] = rng.uniform(0.5, 2.5);  // cycles over the whole sequence
        amp[c] = rng.uniform(0.4, 1.0);
        phase[c] = rng.uniform(0.0, kTwoPi);
    }
    // The channels share the sources through unit mixing rows that are fixed
    // across sequences (channel geometry is a property of the generator, the
    // way a filterbank's is), while the source parameters above are redrawn
    // per sequence. A stable low-dimensional latent is what makes masked rows
    // reconstructible through narrow per-head value projections.
    Rng mix_rng(derive_seed(0x6672616d6573ULL, "frames/mix"));
    Matrix mix(dim, kSources);
    for (int j = 0; j < dim; ++j) {
        double norm = 0.0;
        for (int c = 0; c < kSources; ++c) {
            mix(j, c) = mix_rng.gaussian();
            norm += mix(j, c) * mix(j, c);
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) {
            mix(j, 0) = 1.0;
            norm = 1.0;
        }
        for (int c = 0; c < kSources; ++c) mix(j, c) /= norm;
    }
    for (int i = 0; i < len; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(len);
        double source[kSources];
        for (int c = 0; c < kSources; ++c)
            source[c] = amp[c] * std::sin(kTwoPi * freq[c] * t + phase[c]);
        for (int j = 0; j < dim; ++j) {
            double v = 0.0;
            for (int c = 0; c < kSources; ++c) v += mix(j, c) * source[c];
            frames(i, j) = v + rng.gaussian(0.0, 0.01);
        }
    }
    return frames;
}

std::vector<std::uint8_t> mam_mask(int len, double ratio, int chunk_width, Rng& rng) {
    if (len < 1) throw ConfigError("mam_mask: len must be positive");
    if (!(ratio >= 0.0 && ratio <= 1.0)) throw DomainError("mam_mask: ratio must lie in [0, 1]");
    if (chunk_width < 1) throw ConfigError("mam_mask: chunk_width must be positive");
    std::vector<std::uint8_t> flags(static_cast<std::size_t>(len), 0);
    int target = static_cast<int>(std::llround(ratio * len));
    if (target < 1) return flags;
    target = std::min(target, len);
    int width = std::min(chunk_width, len);

    int covered = 0;
    auto span_free = [&](int start, int w) {
        for (int i = start; i < start + w; ++i)
            if (flags[static_cast<std::size_t>(i)]) return false;
        return true;
    };
    auto place = [&](int start, int w) {
        for (int i = start; i < start + w; ++i) flags[static_cast<std::size_t>(i)] = 1;
        covered += w;
    };
    auto place_spans = [&](int w) {
        std::vector<int> starts(static_cast<std::size_t>(len - w + 1));
        std::iota(starts.begin(), starts.end(), 0);
        for (std::size_t i = starts.size(); i > 1; --i)
            std::swap(starts[i - 1], starts[static_cast<std::size_t>(rng.index(static_cast<int>(i)))]);
        for (int s : starts) {
            if (covered + w > target) return;
            if (span_free(s, w)) place(s, w);
        }
    };

    place_spans(width);
    // Fragmentation can leave the count short of the target with no free span
    // of full width; top the count up with a narrower span, then single rows.
    int remaining = target - covered;
    if (remaining > 0 && remaining < width) place_spans(remaining);
    for (int i = 0; i < len && covered < target; ++i) {
        if (!flags[static_cast<std::size_t>(i)]) place(i, 1);
    }
    return flags;
}

SequenceBatch apply_mask(const Matrix& frames, std::vector<std::uint8_t> masked) {
    if (static_cast<int>(masked.size()) != frames.rows)
        throw ShapeError("apply_mask: one flag per frame row required");
    SequenceBatch batch;
    batch.target = frames;
    batch.input = frames;
    for (int i = 0; i < frames.rows; ++i) {
        if (!masked[static_cast<std::size_t>(i)]) continue;
        for (int j = 0; j < frames.cols; ++j) batch.input(i, j) = 0.0;
    }
    batch.masked = std::move(masked);
    return batch;
}

SequenceBatch make_synthetic_batch(int len, int dim, double ratio, int chunk_width, Rng& rng) {
    Matrix frames = make_synthetic_frames(len, dim, rng);
    std::vector<std::uint8_t> flags = mam_mask(len, ratio, chunk_width, rng);
    return apply_mask(frames, std::move(flags));
}

double reconstruction_loss(const Matrix& pred, const Matrix& target,
                           const std::vector<std::uint8_t>& masked) {
    if (!pred.same_shape(target)) throw ShapeError("reconstruction_loss: shape mismatch");
    if (static_cast<int>(masked.size()) != pred.rows)
        throw ShapeError("reconstruction_loss: one flag per row required");
    long long rows = 0;
    double total = 0.0;
    for (int i = 0; i < pred.rows; ++i) {
        if (!masked[static_cast<std::size_t>(i)]) continue;
        ++rows;
        for (int j = 0; j < pred.cols; ++j) total += std::abs(pred(i, j) - target(i, j));
    }
    if (rows == 0) throw DegenerateRowError("reconstruction_loss: no masked rows");
    return total / (static_cast<double>(rows) * pred.cols);
}

ToyModel::ToyModel(const AttentionConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate_for_model();
    const int L = cfg_.seq_len;
    const int D = cfg_.model_dim;

    if (variant_is_synth(cfg_.variant)) {
        const int used = synth_heads(cfg_);
        std::vector<Matrix> values = make_value_weights(used, D, seed);
        for (int h = 0; h < used; ++h)
            params_.emplace(head_key("wv/", h), std::move(values[static_cast<std::size_t>(h)]));
        if (cfg_.variant == Variant::SynDense || cfg_.variant == Variant::SynDenseMH) {
            DenseSynthWeights dw =
                make_dense_synth_weights(used, D, cfg_.synth_hidden, L, seed);
            for (int h = 0; h < used; ++h) {
                params_.emplace(head_key("syn/w1/", h), dw.w1[static_cast<std::size_t>(h)]);
                params_.emplace(head_key("syn/b1/", h), dw.b1[static_cast<std::size_t>(h)]);
                params_.emplace(head_key("syn/w2/", h), dw.w2[static_cast<std::size_t>(h)]);
                params_.emplace(head_key("syn/b2/", h), dw.b2[static_cast<std::size_t>(h)]);
            }
        } else {
            RandomSynthLogits tables =
                cfg_.variant == Variant::SynRandom
                    ? make_random_logits(cfg_.heads, L, seed)
                    : build_fixed_init(cfg_.heads, L, seed, /*generalize=*/cfg_.heads != 12);
            for (int h = 0; h < tables.heads(); ++h)
                params_.emplace(head_key("logits/", h),
                                std::move(tables.head_logits[static_cast<std::size_t>(h)]));
        }
    } else {
        Rng proj_rng(derive_seed(seed, "toy/proj"));
        ProjectionWeights w =
            random_projection_weights(cfg_, variant_uses_shared_qk(cfg_.variant), proj_rng);
        for (int h = 0; h < cfg_.heads; ++h) {
            params_.emplace(head_key("wq/", h), w.wq[static_cast<std::size_t>(h)]);
            if (!w.shared_qk) params_.emplace(head_key("wk/", h), w.wk[static_cast<std::size_t>(h)]);
            params_.emplace(head_key("wv/", h), w.wv[static_cast<std::size_t>(h)]);
        }
        if (variant_is_sparse(cfg_.variant)) {
            sparse_masks_ = default_head_masks(cfg_);
        } else if (variant_is_lsh(cfg_.variant)) {
            spec_ = make_transform_spec(cfg_);
            directions_ = make_head_hash_directions(cfg_, spec_, seed);
        }
    }

    Rng out_rng(derive_seed(seed, "toy/out"));
    Matrix w_out(D, D);
    const double sd = 1.0 / std::sqrt(static_cast<double>(D));
    for (double& v : w_out.data) v = out_rng.gaussian(0.0, sd);
    params_.emplace("w_out", std::move(w_out));
    params_.emplace("b_out", Matrix(1, D));
}

std::vector<std::string> ToyModel::parameter_names() const {
    std::vector<std::string> names;
    names.reserve(params_.size());
    for (const auto& [name, value] : params_) names.push_back(name);
    return names;
}

const Matrix& ToyModel::parameter(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw UnknownParameterError("no such parameter: " + name);
    return it->second;
}

void ToyModel::set_parameter(const std::string& name, Matrix value) {
    auto it = params_.find(name);
    if (it == params_.end()) throw UnknownParameterError("no such parameter: " + name);
    if (!it->second.same_shape(value))
        throw ShapeError("set_parameter: shape mismatch for " + name);
    it->second = std::move(value);
}

std::vector<AttentionMask> ToyModel::head_masks_for(const Matrix& input) const {
    if (variant_is_sparse(cfg_.variant)) return sparse_masks_;
    if (!variant_is_lsh(cfg_.variant)) return {};
    if (pinned_) return pinned_masks_;
    std::vector<AttentionMask> masks;
    masks.reserve(static_cast<std::size_t>(cfg_.heads));
    for (int h = 0; h < cfg_.heads; ++h) {
        const Matrix q = matmul(input, params_.at(head_key("wq/", h)));
        const CandidateSet cands =
            select_candidates(q, q, spec_, directions_[static_cast<std::size_t>(h)],
                              cfg_.candidates);
        AttentionMask m(input.rows, input.rows, false);
        for (int i = 0; i < input.rows; ++i)
            for (int j : cands.per_query[static_cast<std::size_t>(i)]) m.set(i, j, true);
        masks.push_back(std::move(m));
    }
    return masks;
}

void ToyModel::pin_candidates(const Matrix& input) {
    if (!variant_is_lsh(cfg_.variant)) return;
    pinned_ = false;  // recompute from the live weights
    pinned_masks_ = head_masks_for(input);
    pinned_ = true;
}

void ToyModel::unpin_candidates() {
    pinned_ = false;
    pinned_masks_.clear();
}

Matrix ToyModel::predict(const Matrix& input) const {
    const Matrix attended = [&] {
        AttentionWeights ignored;
        return attend_output(input, &ignored);
    }();
    return linear_forward(attended, params_.at("w_out"), params_.at("b_out"));
}

AttentionWeights ToyModel::probe_weights(const Matrix& input) const {
    AttentionWeights weights;
    attend_output(input, &weights);
    return weights;
}

Matrix ToyModel::attend_output(const Matrix& input, AttentionWeights* weights) const {
    const int D = cfg_.model_dim;
    if (input.cols != D) throw ShapeError("attend: input columns must match model_dim");
    const int L = input.rows;

    std::vector<Matrix> heads_out;
    std::vector<Matrix> heads_attn;
    if (variant_is_synth(cfg_.variant)) {
        const int used = synth_heads(cfg_);
        if (L > cfg_.seq_len) throw ShapeError("attend: sequence longer than the logit tables");
        for (int h = 0; h < used; ++h) {
            Matrix logits;
            if (cfg_.variant == Variant::SynDense || cfg_.variant == Variant::SynDenseMH) {
                const Matrix hidden = relu(linear_forward(input, params_.at(head_key("syn/w1/", h)),
                                                          params_.at(head_key("syn/b1/", h))));
                const Matrix full = linear_forward(hidden, params_.at(head_key("syn/w2/", h)),
                                                   params_.at(head_key("syn/b2/", h)));
                logits = Matrix(L, L);
                for (int i = 0; i < L; ++i)
                    for (int j = 0; j < L; ++j) logits(i, j) = full(i, j);
            } else {
                const Matrix& table = params_.at(head_key("logits/", h));
                logits = Matrix(L, L);
                for (int i = 0; i < L; ++i)
                    for (int j = 0; j < L; ++j) logits(i, j) = table(i, j);
            }
            const Matrix a = row_softmax(logits);
            const Matrix v = matmul(input, params_.at(head_key("wv/", h)));
            heads_out.push_back(matmul(a, v));
            heads_attn.push_back(a);
        }
    } else {
        const bool shared = variant_uses_shared_qk(cfg_.variant);
        const bool dense = cfg_.variant == Variant::BaselineQK || cfg_.variant == Variant::BaselineQ;
        const std::vector<AttentionMask> masks = dense ? std::vector<AttentionMask>{}
                                                       : head_masks_for(input);
        for (int h = 0; h < cfg_.heads; ++h) {
            const Matrix q = matmul(input, params_.at(head_key("wq/", h)));
            const Matrix k = shared ? q : matmul(input, params_.at(head_key("wk/", h)));
            const Matrix v = matmul(input, params_.at(head_key("wv/", h)));
            const Matrix scores = scaled_scores(q, k);
            const Matrix a = dense ? row_softmax(scores)
                                   : masked_row_softmax(scores, masks[static_cast<std::size_t>(h)]);
            heads_out.push_back(matmul(a, v));
            heads_attn.push_back(a);
        }
    }

    Matrix out(L, D);
    int col = 0;
    for (const Matrix& part : heads_out) {
        for (int i = 0; i < L; ++i)
            for (int j = 0; j < part.cols; ++j) out(i, col + j) = part(i, j);
        col += part.cols;
    }
    if (col != D) throw ShapeError("attend: head outputs do not cover model_dim");
    if (weights) weights->head = std::move(heads_attn);
    return out;
}

double ToyModel::loss(const SequenceBatch& batch) const {
    return reconstruction_loss(predict(batch.input), batch.target, batch.masked);
}

Tape::NodeId ToyModel::build_loss(Tape& tape, const SequenceBatch& batch) const {
    const int D = cfg_.model_dim;
    if (batch.input.cols != D) throw ShapeError("build_loss: input columns must match model_dim");
    const int L = batch.input.rows;
    const Tape::NodeId x = tape.constant(batch.input);

    std::vector<Tape::NodeId> heads;
    if (variant_is_synth(cfg_.variant)) {
        if (L > cfg_.seq_len) throw ShapeError("build_loss: sequence longer than the logit tables");
        const int used = synth_heads(cfg_);
        for (int h = 0; h < used; ++h) {
            Tape::NodeId logits;
            if (cfg_.variant == Variant::SynDense || cfg_.variant == Variant::SynDenseMH) {
                const Tape::NodeId w1 =
                    tape.parameter(head_key("syn/w1/", h), params_.at(head_key("syn/w1/", h)));
                const Tape::NodeId b1 =
                    tape.parameter(head_key("syn/b1/", h), params_.at(head_key("syn/b1/", h)));
                const Tape::NodeId w2 =
                    tape.parameter(head_key("syn/w2/", h), params_.at(head_key("syn/w2/", h)));
                const Tape::NodeId b2 =
                    tape.parameter(head_key("syn/b2/", h), params_.at(head_key("syn/b2/", h)));
                const Tape::NodeId hidden = tape.relu(tape.linear(x, w1, b1));
                logits = tape.slice_top_left(tape.linear(hidden, w2, b2), L, L);
            } else {
                const Tape::NodeId table =
                    tape.parameter(head_key("logits/", h), params_.at(head_key("logits/", h)));
                logits = tape.slice_top_left(table, L, L);
            }
            const Tape::NodeId a = tape.row_softmax(logits);
            const Tape::NodeId wv =
                tape.parameter(head_key("wv/", h), params_.at(head_key("wv/", h)));
            heads.push_back(tape.matmul(a, tape.matmul(x, wv)));
        }
    } else {
        const bool shared = variant_uses_shared_qk(cfg_.variant);
        const bool dense = cfg_.variant == Variant::BaselineQK || cfg_.variant == Variant::BaselineQ;
        const std::vector<AttentionMask> masks = dense ? std::vector<AttentionMask>{}
                                                       : head_masks_for(batch.input);
        const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(cfg_.head_dim()));
        for (int h = 0; h < cfg_.heads; ++h) {
            const Tape::NodeId wq = tape.parameter(head_key("wq/", h), params_.at(head_key("wq/", h)));
            const Tape::NodeId q = tape.matmul(x, wq);
            Tape::NodeId k = q;
            if (!shared) {
                const Tape::NodeId wk =
                    tape.parameter(head_key("wk/", h), params_.at(head_key("wk/", h)));
                k = tape.matmul(x, wk);
            }
            const Tape::NodeId scores = tape.scale(tape.matmul_transpose_b(q, k), inv_sqrt);
            const Tape::NodeId a = dense
                                       ? tape.row_softmax(scores)
                                       : tape.masked_row_softmax(scores,
                                                                 masks[static_cast<std::size_t>(h)]);
            const Tape::NodeId wv = tape.parameter(head_key("wv/", h), params_.at(head_key("wv/", h)));
            heads.push_back(tape.matmul(a, tape.matmul(x, wv)));
        }
    }

    const Tape::NodeId attended = heads.size() == 1 ? heads.front() : tape.concat_cols(heads);
    const Tape::NodeId w_out = tape.parameter("w_out", params_.at("w_out"));
    const Tape::NodeId b_out = tape.parameter("b_out", params_.at("b_out"));
    const Tape::NodeId pred = tape.linear(attended, w_out, b_out);
    const Tape::NodeId target = tape.constant(batch.target);
    return tape.l1_masked(pred, target, batch.masked);
}

std::vector<Gradient> ToyModel::gradients(const SequenceBatch& batch) const {
    Tape tape;
    const Tape::NodeId loss_node = build_loss(tape, batch);
    tape.backward(loss_node);
    return tape.gradients(parameter_names());
}

TrainResult train(ToyModel& model, const TrainConfig& tc) {
    if (tc.steps < 0) throw ConfigError("train: steps must be >= 0");
    if (tc.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (!(tc.learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
    if (!(tc.momentum >= 0.0 && tc.momentum < 1.0))
        throw ConfigError("train: momentum must lie in [0, 1)");
    const AttentionConfig& cfg = model.config();
    TrainResult result;
    if (tc.steps == 0) {
        model.freeze_tables();
        return result;
    }
    if (std::llround(tc.mask_ratio * cfg.seq_len) < 1)
        throw ConfigError("train: mask_ratio covers no rows at this sequence length");

    Rng data_rng(derive_seed(tc.seed, "train/data"));
    Rng mask_rng(derive_seed(tc.seed, "train/mask"));

    std::map<std::string, Matrix> velocity;
    for (const std::string& name : model.parameter_names()) {
        const Matrix& p = model.parameter(name);
        velocity.emplace(name, Matrix(p.rows, p.cols));
    }

    for (int step = 0; step < tc.steps; ++step) {
        std::map<std::string, Matrix> grad_sum;
        double loss_sum = 0.0;
        for (int b = 0; b < tc.batch_size; ++b) {
            Matrix frames = make_synthetic_frames(cfg.seq_len, cfg.model_dim, data_rng);
            std::vector<std::uint8_t> flags =
                mam_mask(cfg.seq_len, tc.mask_ratio, tc.chunk_width, mask_rng);
            const SequenceBatch batch = apply_mask(frames, std::move(flags));

            Tape tape;
            const Tape::NodeId loss_node = model.build_loss(tape, batch);
            tape.backward(loss_node);
            loss_sum += tape.value(loss_node)(0, 0);
            for (const std::string& name : model.parameter_names()) {
                Matrix g = tape.grad_of(name);
                auto it = grad_sum.find(name);
                if (it == grad_sum.end())
                    grad_sum.emplace(name, std::move(g));
                else
                    it->second = add(it->second, g);
            }
        }
        const double mean_loss = loss_sum / tc.batch_size;
        if (!std::isfinite(mean_loss))
            throw TrainDivergedError(step + 1, "train: non-finite loss at step " +
                                                   std::to_string(step + 1));
        result.losses.push_back(mean_loss);

        const double inv_batch = 1.0 / tc.batch_size;
        for (auto& [name, vel] : velocity) {
            const Matrix g = scale(grad_sum.at(name), inv_batch);
            vel = sub(scale(vel, tc.momentum), scale(g, tc.learning_rate));
            model.set_parameter(name, add(model.parameter(name), vel));
        }
    }

    model.freeze_tables();
    return result;
}

Matrix flatten_attention(const AttentionWeights& weights) {
    if (weights.head.empty()) throw ShapeError("flatten_attention: no heads");
    const Matrix& first = weights.head.front();
    for (const Matrix& h : weights.head)
        if (!h.same_shape(first)) throw ShapeError("flatten_attention: heads differ in shape");
    Matrix flat(static_cast<int>(weights.head.size()), first.rows * first.cols);
    for (int h = 0; h < flat.rows; ++h) {
        const Matrix& m = weights.head[static_cast<std::size_t>(h)];
        std::copy(m.data.begin(), m.data.end(), flat.row(h));
    }
    return flat;
}

namespace {

// Largest eigenvector of the symmetric matrix s by power iteration; the
// iterate stays put when s is (numerically) zero, which deflation then makes
// harmless: the final Gram-Schmidt pass restores orthonormality.
std::vector<double> power_iterate(const Matrix& s, Rng& rng) {
    const int n = s.rows;
    std::vector<double> v(static_cast<std::size_t>(n));
    double norm = 0.0;
    for (double& x : v) {
        x = rng.gaussian();
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;

    std::vector<double> next(static_cast<std::size_t>(n));
    for (int iter = 0; iter < 1000; ++iter) {
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += s(i, j) * v[static_cast<std::size_t>(j)];
            next[static_cast<std::size_t>(i)] = acc;
        }
        double next_norm = 0.0;
        for (double x : next) next_norm += x * x;
        next_norm = std::sqrt(next_norm);
        if (next_norm < 1e-300) break;  // eigenvalue ~ 0, keep the current direction
        double delta = 0.0;
        for (int i = 0; i < n; ++i) {
            const double scaled = next[static_cast<std::size_t>(i)] / next_norm;
            // Sign flips every step for negative eigenvalues; track the
            // aligned difference so convergence still registers.
            delta = std::max(delta, std::abs(std::abs(scaled) -
                                             std::abs(v[static_cast<std::size_t>(i)])));
            v[static_cast<std::size_t>(i)] = scaled;
        }
        if (delta < 1e-13 && iter > 2) break;
    }
    return v;
}

double quad_form(const Matrix& s, const std::vector<double>& v) {
    double acc = 0.0;
    for (int i = 0; i < s.rows; ++i) {
        double row = 0.0;
        for (int j = 0; j < s.cols; ++j) row += s(i, j) * v[static_cast<std::size_t>(j)];
        acc += v[static_cast<std::size_t>(i)] * row;
    }
    return acc;
}

void orthonormalize_rows(Matrix& basis) {
    for (int r = 0; r < basis.rows; ++r) {
        for (int pass = 0; pass < 2; ++pass) {
            for (int p = 0; p < r; ++p) {
                double dot = 0.0;
                for (int c = 0; c < basis.cols; ++c) dot += basis(r, c) * basis(p, c);
                for (int c = 0; c < basis.cols; ++c) basis(r, c) -= dot * basis(p, c);
            }
        }
        double norm = 0.0;
        for (int c = 0; c < basis.cols; ++c) norm += basis(r, c) * basis(r, c);
        norm = std::sqrt(norm);
        if (norm < 1e-12) {
            // Degenerate direction (rank ran out): substitute the first basis
            // vector that stays independent of the rows above.
            for (int e = 0; e < basis.cols; ++e) {
                for (int c = 0; c < basis.cols; ++c) basis(r, c) = c == e ? 1.0 : 0.0;
                for (int p = 0; p < r; ++p) {
                    double dot = 0.0;
                    for (int c = 0; c < basis.cols; ++c) dot += basis(r, c) * basis(p, c);
                    for (int c = 0; c < basis.cols; ++c) basis(r, c) -= dot * basis(p, c);
                }
                double enorm = 0.0;
                for (int c = 0; c < basis.cols; ++c) enorm += basis(r, c) * basis(r, c);
                enorm = std::sqrt(enorm);
                if (enorm > 1e-6) {
                    for (int c = 0; c < basis.cols; ++c) basis(r, c) /= enorm;
                    norm = 1.0;
                    break;
                }
            }
            if (norm < 1e-12) throw DomainError("pca: cannot complete an orthonormal basis");
        } else {
            for (int c = 0; c < basis.cols; ++c) basis(r, c) /= norm;
        }
    }
}

}  // namespace

PcaResult pca_project(const Matrix& data, int out_dim, std::uint64_t seed) {
    const int n = data.rows;
    const int d = data.cols;
    if (n < 1 || d < 1) throw ShapeError("pca_project: empty data");
    if (out_dim < 1 || out_dim > std::min(n, d))
        throw ConfigError("pca_project: out_dim must lie in [1, min(rows, cols)]");

    Matrix centered(n, d);
    for (int j = 0; j < d; ++j) {
        double mean = 0.0;
        for (int i = 0; i < n; ++i) mean += data(i, j);
        mean /= n;
        for (int i = 0; i < n; ++i) centered(i, j) = data(i, j) - mean;
    }
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;

    Matrix components(out_dim, d);
    if (d <= n) {
        Matrix s = scale(matmul(transpose(centered), centered), 1.0 / denom);
        for (int c = 0; c < out_dim; ++c) {
            Rng rng(derive_seed(seed, "pca/component/" + std::to_string(c)));
            const std::vector<double> v = power_iterate(s, rng);
            const double lambda = quad_form(s, v);
            for (int j = 0; j < d; ++j) components(c, j) = v[static_cast<std::size_t>(j)];
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    s(i, j) -= lambda * v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)];
        }
    } else {
        // Gram trick: eigenvectors u of X X^T / denom map to feature-space
        // directions X^T u.
        Matrix g = scale(matmul_transpose_b(centered, centered), 1.0 / denom);
        for (int c = 0; c < out_dim; ++c) {
            Rng rng(derive_seed(seed, "pca/component/" + std::to_string(c)));
            const std::vector<double> u = power_iterate(g, rng);
            const double lambda = quad_form(g, u);
            std::vector<double> v(static_cast<std::size_t>(d), 0.0);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < d; ++j)
                    v[static_cast<std::size_t>(j)] += centered(i, j) * u[static_cast<std::size_t>(i)];
            double norm = 0.0;
            for (double x : v) norm += x * x;
            norm = std::sqrt(norm);
            for (int j = 0; j < d; ++j)
                components(c, j) = norm > 1e-300 ? v[static_cast<std::size_t>(j)] / norm : 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    g(i, j) -= lambda * u[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(j)];
        }
    }

    orthonormalize_rows(components);

    Matrix scores = matmul_transpose_b(centered, components);
    std::vector<double> variances(static_cast<std::size_t>(out_dim), 0.0);
    for (int c = 0; c < out_dim; ++c) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += scores(i, c) * scores(i, c);
        variances[static_cast<std::size_t>(c)] = acc / denom;
    }

    std::vector<int> order(static_cast<std::size_t>(out_dim));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return variances[static_cast<std::size_t>(a)] > variances[static_cast<std::size_t>(b)];
    });

    PcaResult result;
    result.scores = Matrix(n, out_dim);
    result.components = Matrix(out_dim, d);
    result.variances.resize(static_cast<std::size_t>(out_dim));
    for (int c = 0; c < out_dim; ++c) {
        const int src = order[static_cast<std::size_t>(c)];
        result.variances[static_cast<std::size_t>(c)] = variances[static_cast<std::size_t>(src)];
        for (int i = 0; i < n; ++i) result.scores(i, c) = scores(i, src);
        for (int j = 0; j < d; ++j) result.components(c, j) = components(src, j);
    }
    return result;
}

const char* pattern_class_tag(PatternClass c) {
    switch (c) {
        case PatternClass::Diagonal: return "Diagonal";
        case PatternClass::Increasing: return "Increasing";
        case PatternClass::Decreasing: return "Decreasing";
        case PatternClass::Sparse: return "Sparse";
    }
    throw Error("unhandled pattern class");
}

PatternLabel classify_pattern(const Matrix& attention) {
    const int n = attention.rows;
    if (n != attention.cols) throw ShapeError("classify_pattern: matrix must be square");
    if (n < 2) throw ShapeError("classify_pattern: need at least two rows");
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            const double w = attention(i, j);
            if (w < -1e-9 || !std::isfinite(w))
                throw DomainError("classify_pattern: weights must be non-negative and finite");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-6)
            throw DomainError("classify_pattern: rows must sum to one");
    }

    // Mean distance between each row's argmax and the main diagonal.
    double dev = 0.0;
    for (int i = 0; i < n; ++i) {
        int arg = 0;
        for (int j = 1; j < n; ++j)
            if (attention(i, j) > attention(i, arg)) arg = j;  // ties keep the lower index
        dev += std::abs(arg - i);
    }
    dev /= n;

    // Pearson correlation between the column means and the column index.
    double corr = 0.0;
    {
        std::vector<double> col_mean(static_cast<std::size_t>(n), 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) col_mean[static_cast<std::size_t>(j)] += attention(i, j);
        double m_mean = 0.0;
        for (double& m : col_mean) {
            m /= n;
            m_mean += m;
        }
        m_mean /= n;
        const double j_mean = (n - 1) / 2.0;
        double cov = 0.0, var_m = 0.0, var_j = 0.0;
        for (int j = 0; j < n; ++j) {
            const double dm = col_mean[static_cast<std::size_t>(j)] - m_mean;
            const double dj = j - j_mean;
            cov += dm * dj;
            var_m += dm * dm;
            var_j += dj * dj;
        }
        corr = var_m > 1e-24 ? cov / std::sqrt(var_m * var_j) : 0.0;
    }

    PatternLabel label;
    label.scores = {(2.0 - dev) / 2.0, (corr - 0.8) / 0.2, (-corr - 0.8) / 0.2, 0.0};
    // The rule has precedence: a diagonal verdict wins outright, then the
    // correlation verdicts, and Sparse is the fallback.
    if (dev <= 2.0)
        label.label = PatternClass::Diagonal;
    else if (corr > 0.8)
        label.label = PatternClass::Increasing;
    else if (corr < -0.8)
        label.label = PatternClass::Decreasing;
    else
        label.label = PatternClass::Sparse;
    // Evidence values top out at 1, so a +2 precedence margin on the chosen
    // class keeps the argmax-equals-label invariant exact.
    label.scores[static_cast<std::size_t>(label.label)] += 2.0;
    return label;
}

}  // namespace attnlab
