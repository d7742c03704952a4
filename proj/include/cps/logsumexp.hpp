#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace cps {

inline double log_sum_exp(std::span<const double> xs) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : xs) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

// Normalizes log-weights into a probability vector in place.
inline std::vector<double> softmax(std::span<const double> log_w) {
    double lz = log_sum_exp(log_w);
    std::vector<double> p(log_w.size());
    for (std::size_t i = 0; i < log_w.size(); ++i) p[i] = std::exp(log_w[i] - lz);
    return p;
}

}  // namespace cps
