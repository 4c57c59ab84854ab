#pragma once

#include "easynet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

namespace easynet::test {

inline Tensor random_tensor(Shape s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(s);
    std::uniform_real_distribution<double> u(lo, hi);
    for (real& v : t.data()) v = static_cast<real>(u(rng));
    return t;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(double(a[i]) - double(b[i])));
    return m;
}

inline double max_abs(const Tensor& a) {
    double m = 0.0;
    for (real v : a.data()) m = std::max(m, std::abs(double(v)));
    return m;
}

inline bool bit_equal(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

} // namespace easynet::test
