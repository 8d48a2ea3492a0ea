#pragma once

#include <cstdint>
#include <iterator>
#include <random>
#include <utility>

namespace provnet {

inline constexpr const char* tool_version = "0.1.0";

// Fisher-Yates driven directly by mt19937_64 output, so the permutation for a
// given seed does not depend on the standard library's distribution code.
template <typename RandomIt>
void seeded_shuffle(RandomIt first, RandomIt last, std::mt19937_64& rng) {
    const auto n = static_cast<std::uint64_t>(std::distance(first, last));
    for (std::uint64_t i = n; i > 1; --i) {
        const std::uint64_t j = rng() % i;
        using std::swap;
        swap(first[static_cast<std::ptrdiff_t>(i - 1)], first[static_cast<std::ptrdiff_t>(j)]);
    }
}

} // namespace provnet
