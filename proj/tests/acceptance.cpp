// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Statistical criteria run the full-size named scenarios with base seed 1.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "nslab/nslab.hpp"
#include "oracles.hpp"

namespace {

using namespace nslab;

// Tolerances and thresholds, frozen.
constexpr double kQuadratureTol = 1e-8;
constexpr double kRoundTripTol = 1e-6;
constexpr double kEuclidExpected = 0.0628;
constexpr double kEuclidTol = 5e-4;
constexpr double kGeodesicExpected = 4.146;
constexpr double kGeodesicTol = 5e-3;
constexpr double kMinMetricRatio = 50.0;
constexpr double kFullCoverage = 0.95;
constexpr double kFig2Gap = 0.25;
constexpr double kInwardMax = 0.5;
constexpr std::size_t kMinSignChanges = 3;
constexpr int kOscillationSeeds = 10;
constexpr int kOscillationPasses = 8;
constexpr double kSmallArchiveMaxRate = 0.20;
constexpr double kLargeArchiveMinRate = 0.90;
constexpr double kGuidedMinRate = 0.90;
constexpr std::uint64_t kBaseSeed = 1;

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

BatchResult batch_of(Scenario s) {
    ExperimentConfig c = scenario_config(s);
    c.base_seed = kBaseSeed;
    return run_batch(c, {.write_files = false});
}

double success_rate(const BatchResult& b) {
    std::size_t n = 0;
    for (const auto& s : b.summaries) n += s.success ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(b.summaries.size());
}

double median_coverage(const BatchResult& b) {
    std::vector<double> v;
    for (const auto& s : b.summaries) v.push_back(s.final_coverage);
    return median(v);
}

void criterion1() {
    const SpiralParams p;
    double worst_quad = 0.0, worst_trip = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double t = p.t_max() * (i / 49.0);
        worst_quad = std::max(worst_quad, std::abs(arc_length(0.0, t, p) - oracle::arc_length(0.0, t, p.a)));
    }
    const double total = total_arc_length(p);
    for (int i = 0; i <= 1000; ++i) {
        const double s = total * (i / 1000.0);
        worst_trip = std::max(worst_trip, std::abs(arc_length(0.0, invert_arc_length(s, p), p) - s));
        const double t = p.t_max() * (i / 1000.0);
        worst_trip = std::max(worst_trip, std::abs(invert_arc_length(arc_length(0.0, t, p), p) - t));
    }
    report(1, worst_quad <= kQuadratureTol && worst_trip <= kRoundTripTol,
           fmt("closed form vs quadrature max err %.2e (tol %.0e); inversion round trip max err %.2e (tol %.0e)",
               worst_quad, kQuadratureTol, worst_trip, kRoundTripTol));
}

void criterion2() {
    const SpiralParams p;
    const double t1 = 20 * std::numbers::pi, t2 = 22 * std::numbers::pi;
    const BehaviorPoint a = spiral_point(t1, p), b = spiral_point(t2, p);
    const double eu = euclidean_distance(a, b), geo = geodesic_distance(a, b, p);
    // oracle values: chord from the parametrisation, arc from quadrature
    const double eu_oracle = p.a * (t2 - t1);
    const double geo_oracle = oracle::arc_length(t1, t2, p.a);
    const bool pass = std::abs(eu - eu_oracle) < 1e-12 && std::abs(geo - geo_oracle) < 1e-9 &&
                      std::abs(eu - kEuclidExpected) <= kEuclidTol && std::abs(geo - kGeodesicExpected) <= kGeodesicTol &&
                      geo / eu > kMinMetricRatio;
    report(2, pass, fmt("euclidean %.6f (oracle %.6f), geodesic %.6f (oracle %.6f), ratio %.1f (> %.0f)", eu,
                        eu_oracle, geo, geo_oracle, geo / eu, kMinMetricRatio));
}

void criterion3() {
    const BatchResult a = batch_of(Scenario::Fig2a), b = batch_of(Scenario::Fig2b), c = batch_of(Scenario::Fig2c),
                      d = batch_of(Scenario::Fig2d);
    const std::size_t half = a.cumulative.bins / 2;
    const double ca = a.cumulative.fraction, cb = b.cumulative.fraction, cc = c.cumulative.fraction,
                 cd = d.cumulative.fraction;
    const double in_a = a.cumulative.fraction_of(0, half), in_c = c.cumulative.fraction_of(0, half);
    const bool pass = cd >= kFullCoverage && ca <= cd - kFig2Gap && cb <= cd - kFig2Gap && cc <= cd - kFig2Gap &&
                      in_a < kInwardMax && in_c < kInwardMax;
    report(3, pass,
           fmt("cumulative coverage (a) %.2f (b) %.2f (c) %.2f (d) %.2f; need (d) >= %.2f and others <= (d) - %.2f; "
               "inward half (a) %.2f (c) %.2f (< %.2f)",
               ca, cb, cc, cd, kFullCoverage, kFig2Gap, in_a, in_c, kInwardMax));
}

void criterion4() {
    const BatchResult r = batch_of(Scenario::Fig3a);
    int oscillating = 0, converging = 0;
    for (int i = 0; i < kOscillationSeeds; ++i) {
        const auto& h = r.runs[static_cast<std::size_t>(i)].median_history;
        const auto phases = segment_phases(h, 11);
        if (sign_changes(phases) >= kMinSignChanges) ++oscillating;
        const OscillatorFit fit = fit_damped_oscillator(h);
        const std::size_t q = h.size() / 4;
        double early = 0.0, late = 0.0;
        for (std::size_t g = 0; g < q; ++g) {
            early += std::abs(h[g]);
            late += std::abs(h[h.size() - q + g]);
        }
        if (fit.decay > 0.0 && late < early) ++converging;
    }
    const double cum = r.cumulative.fraction;
    report(4, cum >= kFullCoverage && oscillating >= kOscillationPasses && converging >= kOscillationPasses,
           fmt("cumulative coverage %.2f (>= %.2f); >= %zu sign changes in %d/%d seeds; lambda > 0 and late < early "
               "|H| in %d/%d seeds (need %d)",
               cum, kFullCoverage, kMinSignChanges, oscillating, kOscillationSeeds, converging, kOscillationSeeds,
               kOscillationPasses));
}

void criterion5() {
    const double r50 = success_rate(batch_of(Scenario::Fig3e)), r100 = success_rate(batch_of(Scenario::Fig3c)),
                 r200 = success_rate(batch_of(Scenario::Fig3f)), r3000 = success_rate(batch_of(Scenario::Fig3g));
    const bool pass = r50 <= kSmallArchiveMaxRate && r100 <= kSmallArchiveMaxRate && r200 <= kSmallArchiveMaxRate &&
                      r3000 >= kLargeArchiveMinRate;
    report(5, pass,
           fmt("success rate A_max=50 %.2f, 100 %.2f, 200 %.2f (<= %.2f); A_max=3000 %.2f (>= %.2f)", r50, r100, r200,
               kSmallArchiveMaxRate, r3000, kLargeArchiveMinRate));
}

void criterion6() {
    const BatchResult h = batch_of(Scenario::Fig3h), k = batch_of(Scenario::Fig3k), l = batch_of(Scenario::Fig3l);
    const double mh = median_coverage(h), mk = median_coverage(k), ml = median_coverage(l);
    const double rate = success_rate(l);
    report(6, ml > mk && ml > mh && rate >= kGuidedMinRate,
           fmt("median coverage guided %.2f, random resampling %.2f, no resampling %.2f; guided success %.2f (>= %.2f)",
               ml, mk, mh, rate, kGuidedMinRate));
}

void criterion7() {
    const BatchResult i = batch_of(Scenario::Fig3i), j = batch_of(Scenario::Fig3j);
    const double mi = median_coverage(i), mj = median_coverage(j);
    report(7, i.evaluations() == j.evaluations() && i.runs.size() == 5 && j.runs.size() == 5 && mi >= mj,
           fmt("evaluations %llu vs %llu over %zu runs each; median coverage resampling %.2f >= large population %.2f",
               static_cast<unsigned long long>(i.evaluations()), static_cast<unsigned long long>(j.evaluations()),
               i.runs.size(), mi, mj));
}

void criterion8() {
    const SpiralParams params;
    Rng rng(20240601);
    std::vector<std::string> failed;

    // novelty vs brute force
    bool novelty_ok = true;
    for (int inst = 0; inst < 100; ++inst) {
        const std::size_t n = 2 + rng.below(40), na = rng.below(11);
        const Metric metric = inst % 2 ? Metric::Geodesic : Metric::Euclidean;
        const std::size_t k = 1 + rng.below(15);
        std::vector<Individual> pool, archive;
        for (std::size_t i = 0; i < n + na; ++i) {
            Individual ind;
            ind.id = i;
            ind.behavior = spiral_point(rng.uniform() * params.t_max(), params);
            (i < n ? pool : archive).push_back(ind);
        }
        const auto scores = score_pool(pool, archive, k, metric, params);
        for (std::size_t i = 0; i < n; ++i) {
            const double expect = oracle::novelty(i, pool, archive, k, metric, params);
            novelty_ok &= scores[i] == expect &&
                          novelty_score(pool[i], pool, archive, k, metric, params) == expect;
        }
    }
    if (!novelty_ok) failed.push_back("novelty");

    // archive capacity
    bool capacity_ok = true;
    {
        UnstructuredArchive bounded{{}, 50, 6};
        std::vector<Individual> pop(30);
        for (std::size_t i = 0; i < pop.size(); ++i) pop[i].id = i;
        for (int g = 1; g <= 40; ++g) {
            unstructured_update(bounded, pop, rng);
            capacity_ok &= bounded.members.size() == std::min<std::size_t>(50, 6 * static_cast<std::size_t>(g));
        }
        GridArchive grid = GridArchive::for_spiral(params, 50, 0.05);
        for (int i = 0; i < 5000; ++i) {
            Individual ind;
            ind.id = static_cast<IndividualId>(i);
            ind.behavior = spiral_point(rng.uniform() * params.t_max(), params);
            grid_insert(grid, ind, rng);
            capacity_ok &= grid.occupied <= 2500;
        }
        std::size_t filled = 0;
        for (const auto& c : grid.cells) filled += c ? 1 : 0;
        capacity_ok &= filled == grid.occupied;
    }
    if (!capacity_ok) failed.push_back("capacity");

    // eta shares
    bool eta_ok = true;
    for (int inst = 0; inst < 100; ++inst) {
        std::vector<Individual> parents(1 + rng.below(10));
        for (std::size_t i = 0; i < parents.size(); ++i) {
            parents[i].id = i;
            parents[i].eta = rng.uniform();
        }
        std::vector<OffspringDiscovery> off(1 + rng.below(30));
        bool any = false;
        for (auto& o : off) {
            o.parent_id = rng.below(parents.size());
            o.kappa = rng.bernoulli(0.3);
            any |= o.kappa;
        }
        const auto shares = discovery_shares(parents, off);
        double sum = 0.0;
        for (const auto& [id, s] : shares) sum += s;
        if (any) eta_ok &= std::abs(sum - 1.0) < 1e-12;
        update_discovery_scores(parents, off, 0.5);
        for (const auto& p : parents) eta_ok &= p.eta >= 0.0 && p.eta <= 1.0;
    }
    if (!eta_ok) failed.push_back("eta");

    // median oracle
    bool median_ok = true;
    for (int inst = 0; inst < 200; ++inst) {
        std::vector<double> v(1 + rng.below(60));
        for (auto& x : v) x = rng.normal();
        median_ok &= median(v) == oracle::median(v);
    }
    if (!median_ok) failed.push_back("median");

    // determinism
    {
        ExperimentConfig c = scenario_config(Scenario::Fig3l);
        c.runs = 2;
        c.evolution.g_max = 200;
        c.scenario = Scenario::Custom;
        const BatchResult x = run_batch(c, {.write_files = false, .threads = 1});
        const BatchResult y = run_batch(c, {.write_files = false, .threads = 2});
        bool same = true;
        for (int i = 0; i < 2; ++i)
            same &= telemetry_csv(x.runs[i], c) == telemetry_csv(y.runs[i], c) &&
                    lineage_csv(x.runs[i], c) == lineage_csv(y.runs[i], c);
        same &= summary_csv(x) == summary_csv(y);
        if (!same) failed.push_back("determinism");
    }

    // oscillator recovery
    {
        const auto h = oracle::damped_cosine(1000, 0.8, 0.003, 0.04, 0.7, 0.05);
        const OscillatorFit f = fit_damped_oscillator(h);
        const bool ok = std::abs(f.decay / 0.003 - 1.0) < 0.01 && std::abs(f.omega / 0.04 - 1.0) < 0.01;
        if (!ok) failed.push_back("oscillator");
    }

    std::string detail = "novelty brute force (100 instances), archive capacity, eta normalisation, median oracle, "
                         "bit-identical reruns, oscillator recovery";
    if (!failed.empty()) {
        detail += "; failed:";
        for (const auto& f : failed) detail += " " + f;
    }
    report(8, failed.empty(), detail);
}

} // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%d of 8 criteria failed (%.0f s)\n", failures, secs);
    return failures == 0 ? 0 : 1;
}
