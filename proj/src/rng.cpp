#include "bankbench/rng.hpp"

#include <algorithm>
#include <numeric>

namespace bankbench {

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng& rng) {
    k = std::min(k, n);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // partial Fisher-Yates: the first k slots end up a uniform sample
    for (std::size_t i = 0; i < k; ++i) {
        std::swap(idx[i], idx[i + rng.below(n - i)]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace bankbench
