#pragma once
// Independent reference implementations used only by the tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nslab/nslab.hpp"

namespace oracle {

/// Arc length by adaptive Gauss-Kronrod quadrature of a*sqrt(t^2+1).
inline double arc_length(double t1, double t2, double a) {
    auto speed = [a](double t) { return a * std::sqrt(t * t + 1.0); };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(speed, t1, t2, 15, 1e-14);
}

/// Curve parameter whose quadrature arc length is s, by plain bisection.
inline double invert_arc_length(double s, double a, double t_max) {
    double lo = 0.0, hi = t_max;
    for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
        const double mid = 0.5 * (lo + hi);
        (arc_length(0.0, mid, a) < s ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Brute force: all distances to the other pool entries and the archive,
/// sorted, mean of the first k. The pairwise distance itself is the
/// library's; it is checked against quadrature elsewhere.
inline double novelty(std::size_t subject, std::span<const nslab::Individual> pool,
                      std::span<const nslab::Individual> archive, std::size_t k, nslab::Metric metric,
                      const nslab::SpiralParams& params) {
    auto distance = [&](const nslab::BehaviorPoint& p, const nslab::BehaviorPoint& q) {
        return nslab::behavior_distance(p, q, metric, params);
    };
    std::vector<double> d;
    for (std::size_t j = 0; j < pool.size(); ++j)
        if (j != subject) d.push_back(distance(pool[subject].behavior, pool[j].behavior));
    for (const auto& m : archive) d.push_back(distance(pool[subject].behavior, m.behavior));
    std::sort(d.begin(), d.end());
    const std::size_t n = std::min(k, d.size());
    if (n == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += d[i];
    return sum / static_cast<double>(n);
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

/// Samples of A exp(-lambda g) cos(omega g + phi) + c for g = 0..n-1.
inline std::vector<double> damped_cosine(std::size_t n, double A, double lambda, double omega, double phi,
                                         double c) {
    std::vector<double> h(n);
    for (std::size_t g = 0; g < n; ++g)
        h[g] = A * std::exp(-lambda * static_cast<double>(g)) * std::cos(omega * static_cast<double>(g) + phi) + c;
    return h;
}

} // namespace oracle
