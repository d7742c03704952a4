#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

// Regularized upper incomplete gamma Q(a, x), series + continued fraction
// (used for chi-square p-values in tests only).
inline double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) return 1.0;
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) {
        // P(a,x) by series, return 1 - P
        double ap = a, sum = 1.0 / a, del = sum;
        for (int n = 0; n < 500; ++n) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-15) break;
        }
        return 1.0 - sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    // Q(a,x) by Lentz continued fraction
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// p-value of a chi-square statistic against expected counts.
inline double chi_square_pvalue(const std::vector<std::size_t>& observed,
                                const std::vector<double>& expected) {
    double stat = 0.0;
    int df = -1;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (expected[i] <= 0.0) continue;
        double diff = static_cast<double>(observed[i]) - expected[i];
        stat += diff * diff / expected[i];
        ++df;
    }
    if (df <= 0) return 1.0;
    return gamma_q(0.5 * df, 0.5 * stat);
}
