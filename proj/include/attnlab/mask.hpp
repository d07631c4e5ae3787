#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace attnlab {

// Which of the two complementary sparse layouts a mask carries. Pattern one
// is the local component (window / same block); pattern two is the global
// component (strided columns / block-summary columns).
enum class HeadPattern { PatternOne, PatternTwo };

// Boolean attention mask over query rows x key columns. True = attend.
struct AttentionMask {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> on;
    HeadPattern pattern = HeadPattern::PatternOne;

    AttentionMask() = default;
    AttentionMask(int r, int c, bool fill = false, HeadPattern p = HeadPattern::PatternOne);

    bool at(int r, int c) const { return on[static_cast<std::size_t>(r) * cols + c] != 0; }
    void set(int r, int c, bool v) { on[static_cast<std::size_t>(r) * cols + c] = v ? 1 : 0; }

    // Number of true entries in one row.
    int row_count(int r) const;
    // Total number of true entries.
    long long total_count() const;
    // Every row permits at least one key.
    bool all_rows_nonempty() const;

    static AttentionMask full(int n);
};

// Strided mask. Pattern one: local window, row i attends j with |i - j| < stride.
// Pattern two: strided columns, row i attends j with (i - j) mod stride == 0.
AttentionMask strided_mask(int len, int stride, HeadPattern pattern);

// Block-local mask (pattern one: same block as i) or block-summary mask
// (pattern two: last `summary_width` columns of every block).
AttentionMask fixed_mask(int len, int block, int summary_width, HeadPattern pattern);

// Plain-text portable bitmap (P1) rendering of the mask.
std::string mask_to_pbm(const AttentionMask& mask);

}  // namespace attnlab
