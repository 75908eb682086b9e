#pragma once

#include <cstddef>
#include <span>

namespace lgan {

// Exact-order pairwise summation. Used wherever a reduction feeds a
// reported number, so results do not depend on thread count or chunking.
template <typename T>
double pairwise_sum(std::span<const T> v) {
    const std::size_t n = v.size();
    if (n <= 16) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += static_cast<double>(v[i]);
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

template <typename T>
double pairwise_mean(std::span<const T> v) {
    return v.empty() ? 0.0 : pairwise_sum(v) / static_cast<double>(v.size());
}

} // namespace lgan
