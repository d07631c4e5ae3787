#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "attnlab/attention.hpp"
#include "attnlab/lsh.hpp"
#include "attnlab/mask.hpp"
#include "attnlab/synthesizer.hpp"

namespace attnlab {

struct BenchRecord {
    Variant variant;
    int L = 0, D = 0, H = 0, C = 0, N = 0;
    int batches = 0;
    double seconds = 0.0;
    std::uint64_t seed = 0;
};

// A variant instantiated with seeded random weights, ready to time. Table
// variants (syn-random / ours) are benchmarked in their deployed form: the
// row softmax of the logit table is precomputed once here, since those
// weights are fixed after training and need no per-batch work.
class BenchModel {
public:
    static BenchModel build(const AttentionConfig& cfg, std::uint64_t seed);

    // Output only; this is the call the benchmark times.
    Matrix forward_output(const Matrix& x) const;
    // Output plus per-head attention matrices, for inspection and tests.
    AttentionResult forward(const Matrix& x) const;

    const AttentionConfig& config() const { return cfg_; }

private:
    AttentionConfig cfg_;
    ProjectionWeights proj_;                // qkv variants
    std::vector<AttentionMask> masks_;      // sparse variants
    TransformSpec spec_;                    // lsh variants
    std::vector<HashDirection> directions_; // lsh variants
    DenseSynthWeights dense_;               // syn-dense variants
    RandomSynthLogits table_;               // syn-random / ours
    std::vector<Matrix> values_;            // synthesizer value projections
    std::vector<Matrix> frozen_weights_;    // precomputed softmax of table logits
};

// Times `batches` forward passes of the variant over one fixed random input,
// after one untimed warm-up pass. Single-threaded.
BenchRecord run_benchmark(Variant v, AttentionConfig cfg, int batches, std::uint64_t seed);

void write_bench_csv(const std::vector<BenchRecord>& records, std::ostream& out);
void write_bench_csv(const std::vector<BenchRecord>& records, const std::string& path);

}  // namespace attnlab
