#include "attnlab/mask.hpp"

#include <cmath>
#include <cstdlib>

#include "attnlab/errors.hpp"

namespace attnlab {

AttentionMask::AttentionMask(int r, int c, bool fill, HeadPattern p) {
    if (r < 0 || c < 0) throw ShapeError("mask dimensions must be non-negative");
    rows = r;
    cols = c;
    pattern = p;
    on.assign(static_cast<std::size_t>(r) * c, fill ? 1 : 0);
}

int AttentionMask::row_count(int r) const {
    int n = 0;
    for (int c = 0; c < cols; ++c) n += at(r, c) ? 1 : 0;
    return n;
}

long long AttentionMask::total_count() const {
    long long n = 0;
    for (std::uint8_t v : on) n += v;
    return n;
}

bool AttentionMask::all_rows_nonempty() const {
    for (int r = 0; r < rows; ++r)
        if (row_count(r) == 0) return false;
    return true;
}

AttentionMask AttentionMask::full(int n) { return AttentionMask(n, n, true); }

AttentionMask strided_mask(int len, int stride, HeadPattern pattern) {
    if (len < 1) throw ConfigError("strided_mask: sequence length must be >= 1");
    if (stride < 1 || stride > len)
        throw ConfigError("strided_mask: stride must be in [1, len], got " + std::to_string(stride));
    AttentionMask mask(len, len, false, pattern);
    for (int i = 0; i < len; ++i) {
        for (int j = 0; j < len; ++j) {
            bool attend = pattern == HeadPattern::PatternOne ? std::abs(i - j) < stride
                                                             : (i - j) % stride == 0;
            if (attend) mask.set(i, j, true);
        }
    }
    return mask;
}

AttentionMask fixed_mask(int len, int block, int summary_width, HeadPattern pattern) {
    if (len < 1) throw ConfigError("fixed_mask: sequence length must be >= 1");
    if (block < 1 || block > len)
        throw ConfigError("fixed_mask: block must be in [1, len], got " + std::to_string(block));
    if (summary_width < 1 || summary_width > block)
        throw ConfigError("fixed_mask: summary width must be in [1, block], got " +
                          std::to_string(summary_width));
    AttentionMask mask(len, len, false, pattern);
    for (int i = 0; i < len; ++i) {
        for (int j = 0; j < len; ++j) {
            bool attend = pattern == HeadPattern::PatternOne
                              ? j / block == i / block
                              : j % block >= block - summary_width;
            if (attend) mask.set(i, j, true);
        }
    }
    return mask;
}

std::string mask_to_pbm(const AttentionMask& mask) {
    std::string out = "P1\n";
    out += std::to_string(mask.cols) + " " + std::to_string(mask.rows) + "\n";
    for (int i = 0; i < mask.rows; ++i) {
        for (int j = 0; j < mask.cols; ++j) {
            if (j > 0) out += ' ';
            out += mask.at(i, j) ? '1' : '0';
        }
        out += '\n';
    }
    return out;
}

}  // namespace attnlab
