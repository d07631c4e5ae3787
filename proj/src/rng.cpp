#include "attnlab/rng.hpp"

namespace attnlab {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : stream) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    Rng mixer(seed ^ h);
    return mixer.next_u64();
}

}  // namespace attnlab
