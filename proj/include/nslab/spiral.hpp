#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "nslab/errors.hpp"

namespace nslab {

/// Archimedean spiral gamma(t) = (a t cos t, a t sin t) for t in [0, alpha*pi].
struct SpiralParams {
    double a = 0.01;
    double alpha = 30.0;

    double t_max() const noexcept { return alpha * std::numbers::pi; }

    void validate() const {
        if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("spiral pitch a must be > 0");
        if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("spiral alpha must be > 0");
    }

    friend bool operator==(const SpiralParams&, const SpiralParams&) = default;
};

enum class GenotypeSpace { AngleSpace, ArcLengthSpace };

struct Genotype {
    double value = 0.0;
    GenotypeSpace space = GenotypeSpace::AngleSpace;

    friend bool operator==(const Genotype&, const Genotype&) = default;
};

/// A point on the spiral together with the curve parameter that produced it.
struct BehaviorPoint {
    double x = 0.0;
    double y = 0.0;
    double t = 0.0;

    friend bool operator==(const BehaviorPoint&, const BehaviorPoint&) = default;
};

inline const char* to_string(GenotypeSpace s) noexcept {
    return s == GenotypeSpace::AngleSpace ? "AngleSpace" : "ArcLengthSpace";
}

namespace detail {

inline void check_curve_parameter(double t, const SpiralParams& params, const char* what) {
    if (!(t >= 0.0 && t <= params.t_max())) {
        throw DomainError(std::string(what) + ": curve parameter " + std::to_string(t) +
                          " outside [0, " + std::to_string(params.t_max()) + "]");
    }
}

/// Antiderivative of a*sqrt(t^2+1); log(t + sqrt(t^2+1)) is asinh(t).
inline double arc_primitive(double t, double a) noexcept {
    return 0.5 * a * (t * std::sqrt(t * t + 1.0) + std::asinh(t));
}

} // namespace detail

inline BehaviorPoint spiral_point(double t, const SpiralParams& params) {
    detail::check_curve_parameter(t, params, "spiral_point");
    return {params.a * t * std::cos(t), params.a * t * std::sin(t), t};
}

/// Signed arc length S(t1, t2) from t1 to t2.
inline double arc_length(double t1, double t2, const SpiralParams& params) {
    detail::check_curve_parameter(t1, params, "arc_length");
    detail::check_curve_parameter(t2, params, "arc_length");
    return detail::arc_primitive(t2, params.a) - detail::arc_primitive(t1, params.a);
}

inline double total_arc_length(const SpiralParams& params) {
    return arc_length(0.0, params.t_max(), params);
}

/// Solves S(0, t) = s for t.
///
/// Newton on the closed form with derivative a*sqrt(t^2+1), kept inside a
/// shrinking bracket; any Newton step that leaves the bracket is replaced by
/// bisection. Converges when |S(0,t) - s| <= 1e-9.
inline double invert_arc_length(double s, const SpiralParams& params) {
    const double t_max = params.t_max();
    const double s_max = detail::arc_primitive(t_max, params.a);
    if (!(s >= 0.0 && s <= s_max)) {
        throw DomainError("invert_arc_length: arc length " + std::to_string(s) + " outside [0, " +
                          std::to_string(s_max) + "]");
    }
    constexpr double tolerance = 1e-9;
    constexpr int max_steps = 200;

    if (s == 0.0) return 0.0;
    if (s == s_max) return t_max;

    double lo = 0.0;
    double hi = t_max;
    // S(0,t) ~ a t^2 / 2 for large t
    double t = std::clamp(std::sqrt(2.0 * s / params.a), lo, hi);
    for (int step = 0; step < max_steps; ++step) {
        const double f = detail::arc_primitive(t, params.a) - s;
        if (std::abs(f) <= tolerance) return t;
        if (f > 0.0) hi = t; else lo = t;
        const double slope = params.a * std::sqrt(t * t + 1.0);
        double next = t - f / slope;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == t) return t;
        t = next;
    }
    throw NumericalError("invert_arc_length: no convergence within 200 steps for s=" +
                         std::to_string(s));
}

inline double euclidean_distance(const BehaviorPoint& p, const BehaviorPoint& q) noexcept {
    const double dx = p.x - q.x;
    const double dy = p.y - q.y;
    return std::sqrt(dx * dx + dy * dy);
}

/// Distance along the curve, |S(0, p.t) - S(0, q.t)|. Uses the stored curve
/// parameters; recovering t from (x, y) is ill-posed near the centre.
inline double geodesic_distance(const BehaviorPoint& p, const BehaviorPoint& q,
                                const SpiralParams& params) {
    return std::abs(arc_length(0.0, p.t, params) - arc_length(0.0, q.t, params));
}

inline double genotype_upper_bound(GenotypeSpace space, const SpiralParams& params) {
    return space == GenotypeSpace::AngleSpace ? params.t_max() : total_arc_length(params);
}

inline Genotype clamp_genotype(Genotype g, const SpiralParams& params) {
    g.value = std::clamp(g.value, 0.0, genotype_upper_bound(g.space, params));
    return g;
}

/// Curve parameter a genotype maps to.
inline double genotype_curve_parameter(const Genotype& g, const SpiralParams& params) {
    const double upper = genotype_upper_bound(g.space, params);
    if (!(g.value >= 0.0 && g.value <= upper)) {
        throw DomainError(std::string("map_genotype: ") + to_string(g.space) + " value " +
                          std::to_string(g.value) + " outside [0, " + std::to_string(upper) + "]");
    }
    return g.space == GenotypeSpace::AngleSpace ? g.value : invert_arc_length(g.value, params);
}

/// phi_b for angle genotypes, phi_u (through the arc-length inverse) for
/// arc-length genotypes.
inline BehaviorPoint map_genotype(const Genotype& g, const SpiralParams& params) {
    return spiral_point(genotype_curve_parameter(g, params), params);
}

/// Genotype in `space` whose image is gamma(t).
inline Genotype genotype_for_curve_parameter(double t, GenotypeSpace space,
                                             const SpiralParams& params) {
    detail::check_curve_parameter(t, params, "genotype_for_curve_parameter");
    if (space == GenotypeSpace::AngleSpace) return {t, space};
    return {arc_length(0.0, t, params), space};
}

} // namespace nslab
