#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nslab/errors.hpp"
#include "nslab/ns_core.hpp"
#include "nslab/spiral.hpp"

namespace nslab {

/// Arc-length change of every offspring of one generation.
struct MutationDeltaRecord {
    int generation = 0;
    /// S(0, child t) - S(0, parent t); positive moves outward.
    std::vector<double> deltas;
    /// Parallel to `deltas`: whether the child entered the next population.
    std::vector<bool> selected;

    std::vector<double> selected_deltas() const {
        std::vector<double> out;
        for (std::size_t i = 0; i < deltas.size(); ++i)
            if (selected[i]) out.push_back(deltas[i]);
        return out;
    }
};

inline MutationDeltaRecord mutation_deltas(std::span<const LineageEntry> lineage, int generation,
                                           const SpiralParams& params) {
    MutationDeltaRecord record;
    record.generation = generation;
    for (const auto& e : lineage) {
        if (e.generation != generation) continue;
        record.deltas.push_back(arc_length(0.0, e.child_t, params) - arc_length(0.0, e.parent_t, params));
        record.selected.push_back(e.selected);
    }
    if (record.deltas.empty())
        throw ConsistencyError("mutation_deltas: no lineage entries for generation " +
                               std::to_string(generation));
    return record;
}

/// Splits a lineage log (ordered by generation) into one record per generation.
inline std::vector<MutationDeltaRecord> all_mutation_deltas(std::span<const LineageEntry> lineage,
                                                            const SpiralParams& params) {
    std::vector<MutationDeltaRecord> records;
    for (const auto& e : lineage) {
        if (records.empty() || records.back().generation != e.generation) {
            if (!records.empty() && e.generation < records.back().generation)
                throw ConsistencyError("lineage log is not ordered by generation");
            records.push_back({e.generation, {}, {}});
        }
        records.back().deltas.push_back(arc_length(0.0, e.child_t, params) -
                                        arc_length(0.0, e.parent_t, params));
        records.back().selected.push_back(e.selected);
    }
    return records;
}

/// Median with the mean-of-middle-two convention; 0 for an empty sample.
inline double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

enum class DeltaSelection {
    /// Only mutations whose child survived selection.
    Selected,
    All,
};

/// Per-generation medians H_G. With DeltaSelection::Selected a generation in
/// which no child survived contributes 0.
inline std::vector<double> median_history(std::span<const MutationDeltaRecord> records,
                                          DeltaSelection which = DeltaSelection::Selected) {
    std::vector<double> history;
    history.reserve(records.size());
    for (const auto& r : records)
        history.push_back(median(which == DeltaSelection::Selected ? r.selected_deltas() : r.deltas));
    return history;
}

/// A exp(-lambda g) cos(omega g + phi) + c.
struct OscillatorFit {
    double amplitude = 0.0;
    double decay = 0.0;
    double omega = 0.0;
    double phase = 0.0;
    double offset = 0.0;
    /// Root-mean-square error over the fitted samples.
    double residual = 0.0;

    double operator()(double g) const noexcept {
        return amplitude * std::exp(-decay * g) * std::cos(omega * g + phase) + offset;
    }
};

namespace detail {

inline double oscillator_rms(const OscillatorFit& f, std::span<const double> h) {
    double sse = 0.0;
    for (std::size_t g = 0; g < h.size(); ++g) {
        const double r = h[g] - f(static_cast<double>(g));
        sse += r * r;
    }
    return std::sqrt(sse / static_cast<double>(h.size()));
}

/// Best (A cos phi, -A sin phi, c) given the sampled envelope exp(-decay g)
/// and the sampled cos(omega g), sin(omega g).
inline OscillatorFit linear_oscillator_fit(std::span<const double> h, std::span<const double> env,
                                           std::span<const double> cosine, std::span<const double> sine,
                                           double decay, double omega) {
    double cc = 0, cs = 0, c1 = 0, ss = 0, s1 = 0, hc = 0, hs = 0, h1 = 0, hh = 0;
    for (std::size_t g = 0; g < h.size(); ++g) {
        const double bc = env[g] * cosine[g];
        const double bs = env[g] * sine[g];
        cc += bc * bc;
        cs += bc * bs;
        c1 += bc;
        ss += bs * bs;
        s1 += bs;
        hc += h[g] * bc;
        hs += h[g] * bs;
        h1 += h[g];
        hh += h[g] * h[g];
    }
    Eigen::Matrix3d normal;
    normal << cc, cs, c1, cs, ss, s1, c1, s1, static_cast<double>(h.size());
    const Eigen::Vector3d rhs(hc, hs, h1);
    const Eigen::Vector3d coef = normal.completeOrthogonalDecomposition().solve(rhs);
    OscillatorFit fit;
    fit.decay = decay;
    fit.omega = omega;
    fit.amplitude = std::hypot(coef[0], coef[1]);
    fit.phase = std::atan2(-coef[1], coef[0]);
    fit.offset = coef[2];
    // least-squares identity: SSE = |h|^2 - coef . rhs
    fit.residual = std::sqrt(std::max(0.0, hh - coef.dot(rhs)) / static_cast<double>(h.size()));
    return fit;
}

inline void normalize_oscillator(OscillatorFit& f) {
    if (f.amplitude < 0.0) {
        f.amplitude = -f.amplitude;
        f.phase += std::numbers::pi;
    }
    f.phase = std::remainder(f.phase, 2.0 * std::numbers::pi);
}

/// Levenberg-Marquardt on all five parameters, keeping decay >= 0 and
/// omega > 0.
inline OscillatorFit refine_oscillator(OscillatorFit start, std::span<const double> h) {
    using Vec5 = Eigen::Matrix<double, 5, 1>;
    using Mat5 = Eigen::Matrix<double, 5, 5>;
    auto pack = [](const OscillatorFit& f) {
        Vec5 p;
        p << f.amplitude, f.decay, f.omega, f.phase, f.offset;
        return p;
    };
    auto unpack = [](const Vec5& p) {
        OscillatorFit f;
        f.amplitude = p[0];
        f.decay = std::max(0.0, p[1]);
        f.omega = std::max(1e-12, p[2]);
        f.phase = p[3];
        f.offset = p[4];
        return f;
    };

    OscillatorFit best = start;
    best.residual = oscillator_rms(best, h);
    double damping = 1e-3;
    for (int iter = 0; iter < 200; ++iter) {
        Mat5 jtj = Mat5::Zero();
        Vec5 jtr = Vec5::Zero();
        for (std::size_t g = 0; g < h.size(); ++g) {
            const double x = static_cast<double>(g);
            const double env = std::exp(-best.decay * x);
            const double arg = best.omega * x + best.phase;
            const double c = std::cos(arg);
            const double s = std::sin(arg);
            Vec5 grad;
            grad << env * c, -x * best.amplitude * env * c, -x * best.amplitude * env * s,
                -best.amplitude * env * s, 1.0;
            const double r = h[g] - best(x);
            jtj += grad * grad.transpose();
            jtr += grad * r;
        }
        bool improved = false;
        for (int attempt = 0; attempt < 12 && !improved; ++attempt) {
            Mat5 lhs = jtj;
            for (int i = 0; i < 5; ++i) lhs(i, i) += damping * (jtj(i, i) + 1e-12);
            const Vec5 step = lhs.ldlt().solve(jtr);
            if (!step.allFinite()) {
                damping *= 10.0;
                continue;
            }
            OscillatorFit trial = unpack(pack(best) + step);
            trial.residual = oscillator_rms(trial, h);
            if (trial.residual < best.residual) {
                const double gain = best.residual - trial.residual;
                best = trial;
                damping = std::max(1e-12, damping * 0.3);
                improved = true;
                if (gain <= 1e-15 * std::max(1.0, best.residual)) return best;
            } else {
                damping *= 10.0;
            }
        }
        if (!improved) break;
    }
    return best;
}

} // namespace detail

/// Least-squares fit of a damped cosine with offset.
///
/// A coarse grid over (decay, frequency) solves the linear part exactly at
/// every node; the best node is then refined by Levenberg-Marquardt over all
/// five parameters. Frequencies span half a cycle over the series up to the
/// Nyquist limit; decays span 0 up to 20 e-foldings over the series.
inline OscillatorFit fit_damped_oscillator(std::span<const double> h) {
    if (h.size() < 20)
        throw InsufficientDataError("fit_damped_oscillator: need at least 20 samples, got " +
                                    std::to_string(h.size()));
    const double n = static_cast<double>(h.size());
    constexpr int omega_steps = 240;
    constexpr int decay_steps = 32;
    const double omega_lo = std::numbers::pi / n;
    const double omega_hi = std::numbers::pi;

    std::vector<double> decays(decay_steps);
    std::vector<std::vector<double>> envelopes(decay_steps, std::vector<double>(h.size()));
    for (int j = 0; j < decay_steps; ++j) {
        decays[j] = j == 0 ? 0.0 : (0.01 / n) * std::pow(2000.0, (j - 1) / double(decay_steps - 2));
        for (std::size_t g = 0; g < h.size(); ++g) envelopes[j][g] = std::exp(-decays[j] * static_cast<double>(g));
    }

    OscillatorFit best;
    best.residual = std::numeric_limits<double>::infinity();
    std::vector<double> cosine(h.size()), sine(h.size());
    for (int i = 0; i < omega_steps; ++i) {
        const double omega = omega_lo * std::pow(omega_hi / omega_lo, i / double(omega_steps - 1));
        for (std::size_t g = 0; g < h.size(); ++g) {
            cosine[g] = std::cos(omega * static_cast<double>(g));
            sine[g] = std::sin(omega * static_cast<double>(g));
        }
        for (int j = 0; j < decay_steps; ++j) {
            OscillatorFit candidate =
                detail::linear_oscillator_fit(h, envelopes[j], cosine, sine, decays[j], omega);
            if (candidate.residual < best.residual) best = candidate;
        }
    }
    OscillatorFit refined = detail::refine_oscillator(best, h);
    if (refined.residual <= best.residual) best = refined;
    detail::normalize_oscillator(best);
    best.residual = detail::oscillator_rms(best, h);
    return best;
}

enum class PhaseKind { Expansion, Retraction };

inline const char* to_string(PhaseKind k) noexcept {
    return k == PhaseKind::Expansion ? "Expansion" : "Retraction";
}

struct Phase {
    std::size_t start = 0;
    std::size_t end = 0; // inclusive
    PhaseKind kind = PhaseKind::Expansion;

    friend bool operator==(const Phase&, const Phase&) = default;
};

/// Centred moving median; the window shrinks symmetrically near the ends so
/// it always holds an odd number of samples.
inline std::vector<double> moving_median(std::span<const double> h, std::size_t window) {
    if (window == 0 || window % 2 == 0) throw DomainError("moving_median: window must be odd and >= 1");
    const std::size_t half = window / 2;
    std::vector<double> out(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        const std::size_t reach = std::min({half, i, h.size() - 1 - i});
        out[i] = median(std::vector<double>(h.begin() + static_cast<std::ptrdiff_t>(i - reach),
                                            h.begin() + static_cast<std::ptrdiff_t>(i + reach + 1)));
    }
    return out;
}

/// Maximal runs of positive (Expansion) and negative (Retraction) smoothed
/// medians. Zeros join the preceding phase; leading zeros join the first one.
inline std::vector<Phase> segment_phases(std::span<const double> h, std::size_t window) {
    const std::vector<double> smooth = moving_median(h, window);
    std::vector<Phase> phases;
    std::size_t pending_zeros = 0;
    for (std::size_t i = 0; i < smooth.size(); ++i) {
        if (smooth[i] == 0.0) {
            if (phases.empty()) ++pending_zeros; else phases.back().end = i;
            continue;
        }
        const PhaseKind kind = smooth[i] > 0.0 ? PhaseKind::Expansion : PhaseKind::Retraction;
        if (!phases.empty() && phases.back().kind == kind) {
            phases.back().end = i;
        } else {
            phases.push_back({phases.empty() ? i - pending_zeros : i, i, kind});
        }
    }
    return phases;
}

inline std::size_t sign_changes(std::span<const Phase> phases) noexcept {
    return phases.empty() ? 0 : phases.size() - 1;
}

struct CoverageReport {
    std::size_t bins = 0;
    std::vector<bool> covered;
    double fraction = 0.0;

    /// Covered share of bins [first, last).
    double fraction_of(std::size_t first, std::size_t last) const {
        if (last <= first) return 0.0;
        std::size_t n = 0;
        for (std::size_t i = first; i < last; ++i) n += covered[i] ? 1 : 0;
        return static_cast<double>(n) / static_cast<double>(last - first);
    }
};

/// Accumulates which equal-arc-length bins of the spiral have been visited.
class CoverageTracker {
public:
    CoverageTracker(std::size_t bins, const SpiralParams& params)
        : params_(params), total_(total_arc_length(params)), covered_(bins, false) {
        if (bins < 1) throw DomainError("coverage: need at least one bin");
    }

    std::size_t bin_of(double t) const {
        const double s = arc_length(0.0, t, params_);
        const auto b = static_cast<std::size_t>(std::floor(static_cast<double>(covered_.size()) * s / total_));
        return std::min(b, covered_.size() - 1);
    }

    void add(double t) {
        const std::size_t b = bin_of(t);
        if (!covered_[b]) {
            covered_[b] = true;
            ++count_;
        }
    }

    void merge(const CoverageTracker& other) {
        for (std::size_t i = 0; i < covered_.size(); ++i)
            if (other.covered_[i] && !covered_[i]) {
                covered_[i] = true;
                ++count_;
            }
    }

    double fraction() const noexcept {
        return static_cast<double>(count_) / static_cast<double>(covered_.size());
    }

    CoverageReport report() const { return {covered_.size(), covered_, fraction()}; }

private:
    SpiralParams params_;
    double total_;
    std::vector<bool> covered_;
    std::size_t count_ = 0;
};

inline CoverageReport coverage(std::span<const BehaviorPoint> behaviors, std::size_t bins,
                               const SpiralParams& params) {
    CoverageTracker tracker(bins, params);
    for (const auto& b : behaviors) tracker.add(b.t);
    return tracker.report();
}

} // namespace nslab
