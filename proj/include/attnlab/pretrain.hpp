#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "attnlab/attention.hpp"
#include "attnlab/lsh.hpp"
#include "attnlab/mask.hpp"
#include "attnlab/synthesizer.hpp"
#include "attnlab/tape.hpp"

namespace attnlab {

// One masked-reconstruction training example: the model sees `input` (the
// clean frames with every masked row zeroed) and is scored on how well it
// reproduces `target` on the masked rows.
struct SequenceBatch {
    Matrix input;
    Matrix target;
    std::vector<std::uint8_t> masked;  // one flag per row
};

struct TrainConfig {
    int steps = 200;
    int batch_size = 8;
    double learning_rate = 1e-3;
    double momentum = 0.9;
    double mask_ratio = 0.15;
    int chunk_width = 3;
    std::uint64_t seed = 0;
};

// Smooth synthetic frames: a few shared low-frequency sinusoid sources are
// mixed into the columns through random unit mixing rows, plus light noise.
// Columns co-vary (as filterbank channels do), so masked rows are predictable
// from their neighbours even through narrow per-head value projections.
Matrix make_synthetic_frames(int len, int dim, Rng& rng);

// Chunked masking: non-overlapping spans of `chunk_width` rows are flagged
// until round(ratio * len) rows are covered (a final narrower span tops the
// count up exactly). A target below one row yields an all-false mask.
std::vector<std::uint8_t> mam_mask(int len, double ratio, int chunk_width, Rng& rng);

// Zeroes the flagged rows of `frames` into `input`, keeps the clean copy as
// `target`.
SequenceBatch apply_mask(const Matrix& frames, std::vector<std::uint8_t> masked);

SequenceBatch make_synthetic_batch(int len, int dim, double ratio, int chunk_width, Rng& rng);

// Mean absolute error over the flagged rows (all columns); the numeric twin
// of the tape's l1_masked node. DegenerateRowError when nothing is flagged.
double reconstruction_loss(const Matrix& pred, const Matrix& target,
                           const std::vector<std::uint8_t>& masked);

// A one-layer reconstruction model around any of the attention variants:
// prediction = attention(input) * w_out + b_out. Every learnable tensor lives
// in a name -> Matrix map so the trainer and the finite-difference oracle see
// the same parameterization. Candidate selection for the lsh variants is a
// discrete choice and happens outside the tape; the tape differentiates the
// attention computation for the selected candidates.
class ToyModel {
public:
    ToyModel(const AttentionConfig& cfg, std::uint64_t seed);

    const AttentionConfig& config() const { return cfg_; }

    const std::map<std::string, Matrix>& parameters() const { return params_; }
    std::vector<std::string> parameter_names() const;
    const Matrix& parameter(const std::string& name) const;
    void set_parameter(const std::string& name, Matrix value);

    // Reconstruction (L x D) from library forwards only; no tape involved.
    Matrix predict(const Matrix& input) const;
    // Numeric loss; the function the finite-difference oracle probes.
    double loss(const SequenceBatch& batch) const;

    // Builds the loss into `tape` and returns the loss node.
    Tape::NodeId build_loss(Tape& tape, const SequenceBatch& batch) const;

    // Tape gradients of the loss with respect to every parameter.
    std::vector<Gradient> gradients(const SequenceBatch& batch) const;

    // Post-softmax attention matrices at the current weights.
    AttentionWeights probe_weights(const Matrix& input) const;

    // Freezes the lsh candidate masks at the current weights. The loss is
    // piecewise smooth in the weights with the selection constant on each
    // piece; pinning keeps finite differences on one piece so they probe the
    // same branch the tape differentiates. No-op for non-lsh variants.
    void pin_candidates(const Matrix& input);
    void unpin_candidates();

    // Marks the logit tables of syn-random / ours as fixed (training over).
    void freeze_tables() { table_frozen_ = true; }
    bool tables_frozen() const { return table_frozen_; }

private:
    std::vector<AttentionMask> head_masks_for(const Matrix& input) const;
    // Attention output (L x D); fills `weights` with the per-head matrices.
    Matrix attend_output(const Matrix& input, AttentionWeights* weights) const;

    AttentionConfig cfg_;
    std::map<std::string, Matrix> params_;
    std::vector<AttentionMask> sparse_masks_;
    TransformSpec spec_;
    std::vector<HashDirection> directions_;
    std::vector<AttentionMask> pinned_masks_;
    bool pinned_ = false;
    bool table_frozen_ = false;
};

struct TrainResult {
    std::vector<double> losses;  // batch-averaged loss per step
};

// Plain SGD with momentum over synthetic masked batches. Raises
// TrainDivergedError (with the 1-based step) on a non-finite loss. steps = 0
// leaves the model untouched and returns no losses. Freezes logit tables on
// completion.
TrainResult train(ToyModel& model, const TrainConfig& tc);

// One row per attention head: the head's L x L attention matrix flattened
// row-major, ready for embedding.
Matrix flatten_attention(const AttentionWeights& weights);

struct PcaResult {
    Matrix scores;                  // n x out_dim projected coordinates
    Matrix components;              // out_dim x d, rows orthonormal
    std::vector<double> variances;  // descending, one per component
};

// Principal components by power iteration with deflation (Gram trick when
// there are fewer samples than features). out_dim must be within
// min(rows, cols). Deterministic for a fixed seed.
PcaResult pca_project(const Matrix& data, int out_dim, std::uint64_t seed);

enum class PatternClass { Diagonal, Increasing, Decreasing, Sparse };

const char* pattern_class_tag(PatternClass c);

struct PatternLabel {
    PatternClass label = PatternClass::Sparse;
    // Per-class evidence, same order as PatternClass; the chosen class also
    // carries a +2 precedence margin, so the label is always the argmax.
    std::array<double, 4> scores{};
};

// Labels a row-stochastic attention matrix by shape: diagonal when row
// argmaxes hug the main diagonal (mean offset <= 2), increasing / decreasing
// when the column means correlate with the column index (|Pearson r| > 0.8),
// sparse otherwise.
PatternLabel classify_pattern(const Matrix& attention);

}  // namespace attnlab
