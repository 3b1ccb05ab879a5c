#pragma once

#include <algorithm>
#include <array>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nslab/analysis.hpp"
#include "nslab/archive.hpp"
#include "nslab/errors.hpp"
#include "nslab/ns_core.hpp"

namespace nslab {

inline constexpr const char* tool_name = "nslab";
inline constexpr const char* tool_version = "0.1.0";

/// Default start point. The curve parameter where every run begins; chosen
/// in the outer part of the spiral so the outward bias is visible before the
/// boundary is reached.
inline constexpr double default_init_t0 = 27.0 * std::numbers::pi;

enum class Scenario {
    Fig2a, Fig2b, Fig2c, Fig2d,
    Fig3a, Fig3c, Fig3e, Fig3f, Fig3g, Fig3h, Fig3i, Fig3j, Fig3k, Fig3l,
    Custom,
};

inline constexpr std::array<std::pair<Scenario, std::string_view>, 15> scenario_names{{
    {Scenario::Fig2a, "Fig2a"}, {Scenario::Fig2b, "Fig2b"}, {Scenario::Fig2c, "Fig2c"},
    {Scenario::Fig2d, "Fig2d"}, {Scenario::Fig3a, "Fig3a"}, {Scenario::Fig3c, "Fig3c"},
    {Scenario::Fig3e, "Fig3e"}, {Scenario::Fig3f, "Fig3f"}, {Scenario::Fig3g, "Fig3g"},
    {Scenario::Fig3h, "Fig3h"}, {Scenario::Fig3i, "Fig3i"}, {Scenario::Fig3j, "Fig3j"},
    {Scenario::Fig3k, "Fig3k"}, {Scenario::Fig3l, "Fig3l"}, {Scenario::Custom, "Custom"},
}};

inline std::string_view to_string(Scenario s) noexcept {
    for (const auto& [value, name] : scenario_names)
        if (value == s) return name;
    return "?";
}

struct ExperimentConfig {
    Scenario scenario = Scenario::Custom;
    EvolutionConfig evolution;
    ArchiveConfig archive;
    SamplingStrategy sampling;
    int runs = 20;
    std::uint64_t base_seed = 1;
    std::string output_dir = "out";
    std::size_t coverage_bins = 100;
    std::size_t smoothing_window = 11;
    double success_threshold = 0.95;

    ExperimentConfig() { evolution.init_t0 = default_init_t0; }

    /// Individuals evaluated by one run: the initial population plus every
    /// offspring.
    std::uint64_t evaluations_per_run() const noexcept {
        return evolution.pop_size + static_cast<std::uint64_t>(evolution.g_max) * evolution.offspring_size;
    }
};

/// Population and offspring sizes for an archive-free run with the same
/// evaluation budget M + g_max N as the reference, over the same number of
/// generations: one offspring slot is traded for g_max extra population
/// members.
inline std::pair<std::size_t, std::size_t> budget_matched_population(std::size_t m, std::size_t n, int g_max) {
    if (n < 2) throw ConfigError("evolution.offspring_size", "budget matching needs at least 2 offspring");
    return {m + static_cast<std::size_t>(g_max), n - 1};
}

namespace detail {

/// Shortest text that parses back to exactly `v`.
inline std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), end);
}

/// Fields every named scenario fixes to the published setting.
inline std::map<std::string, std::string> scenario_pins(Scenario s) {
    if (s == Scenario::Custom) return {};
    std::map<std::string, std::string> pins{
        {"spiral.a", "0.01"},
        {"spiral.alpha", "30"},
        {"evolution.pop_size", "30"},
        {"evolution.offspring_size", "30"},
        {"evolution.k", "10"},
        {"evolution.sigma", "0.3"},
        {"evolution.g_max", "1000"},
        {"evolution.metric", "Euclidean"},
        {"evolution.genotype_space", "AngleSpace"},
        {"archive.kind", "None"},
        {"sampling.mode", "PopulationOnly"},
    };
    auto bounded = [&](const char* size) {
        pins["archive.kind"] = "UnstructuredBounded";
        pins["archive.max_size"] = size;
    };
    switch (s) {
        case Scenario::Fig2a: break;
        case Scenario::Fig2b: pins["evolution.genotype_space"] = "ArcLengthSpace"; break;
        case Scenario::Fig2c: pins["evolution.metric"] = "Geodesic"; break;
        case Scenario::Fig2d:
            pins["evolution.metric"] = "Geodesic";
            pins["evolution.genotype_space"] = "ArcLengthSpace";
            break;
        case Scenario::Fig3a: pins["archive.kind"] = "UnstructuredUnbounded"; break;
        case Scenario::Fig3c: bounded("100"); break;
        case Scenario::Fig3e: bounded("50"); break;
        case Scenario::Fig3f: bounded("200"); break;
        case Scenario::Fig3g: bounded("3000"); break;
        case Scenario::Fig3h: pins["archive.kind"] = "Grid"; break;
        case Scenario::Fig3i:
            bounded("200");
            pins["sampling.mode"] = "MixedRandom";
            break;
        case Scenario::Fig3j: {
            const auto [m, n] = budget_matched_population(30, 30, 1000);
            pins["evolution.pop_size"] = std::to_string(m);
            pins["evolution.offspring_size"] = std::to_string(n);
            break;
        }
        case Scenario::Fig3k:
            pins["archive.kind"] = "Grid";
            pins["sampling.mode"] = "MixedRandom";
            break;
        case Scenario::Fig3l:
            pins["archive.kind"] = "Grid";
            pins["sampling.mode"] = "MixedGuided";
            break;
        case Scenario::Custom: break;
    }
    return pins;
}

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

inline double parse_number(const std::string& key, const std::string& text) {
    std::string body = text;
    double scale = 1.0;
    // "27pi" or "27*pi" for curve parameters
    if (body.size() > 2 && body.ends_with("pi")) {
        body.resize(body.size() - 2);
        if (!body.empty() && body.back() == '*') body.pop_back();
        scale = std::numbers::pi;
    }
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(body.c_str(), &end);
    if (body.empty() || end != body.c_str() + body.size() || errno == ERANGE || !std::isfinite(v))
        throw ConfigError(key, "expected a number, got '" + text + "'");
    return v * scale;
}

inline std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
    std::uint64_t v = 0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (text.empty() || ec != std::errc{} || ptr != last)
        throw ConfigError(key, "expected a non-negative integer, got '" + text + "'");
    return v;
}

template <typename Enum, std::size_t N>
Enum parse_enum(const std::string& key, const std::string& text,
                const std::array<std::pair<Enum, std::string_view>, N>& names) {
    for (const auto& [value, name] : names)
        if (name == text) return value;
    std::string options;
    for (const auto& [value, name] : names) options += (options.empty() ? "" : ", ") + std::string(name);
    throw ConfigError(key, "unknown value '" + text + "' (expected one of " + options + ")");
}

inline constexpr std::array<std::pair<Metric, std::string_view>, 2> metric_names{
    {{Metric::Euclidean, "Euclidean"}, {Metric::Geodesic, "Geodesic"}}};
inline constexpr std::array<std::pair<GenotypeSpace, std::string_view>, 2> space_names{
    {{GenotypeSpace::AngleSpace, "AngleSpace"}, {GenotypeSpace::ArcLengthSpace, "ArcLengthSpace"}}};
inline constexpr std::array<std::pair<ArchiveKind, std::string_view>, 4> archive_kind_names{
    {{ArchiveKind::None, "None"},
     {ArchiveKind::UnstructuredUnbounded, "UnstructuredUnbounded"},
     {ArchiveKind::UnstructuredBounded, "UnstructuredBounded"},
     {ArchiveKind::Grid, "Grid"}}};
inline constexpr std::array<std::pair<SamplingMode, std::string_view>, 3> sampling_mode_names{
    {{SamplingMode::PopulationOnly, "PopulationOnly"},
     {SamplingMode::MixedRandom, "MixedRandom"},
     {SamplingMode::MixedGuided, "MixedGuided"}}};

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

inline const std::map<std::string, Setter>& config_setters() {
    static const std::map<std::string, Setter> setters{
        {"runs", [](auto& c, auto& k, auto& v) { c.runs = static_cast<int>(parse_unsigned(k, v)); }},
        {"base_seed", [](auto& c, auto& k, auto& v) { c.base_seed = parse_unsigned(k, v); }},
        {"output_dir", [](auto& c, auto&, auto& v) { c.output_dir = v; }},
        {"coverage_bins", [](auto& c, auto& k, auto& v) { c.coverage_bins = parse_unsigned(k, v); }},
        {"smoothing_window", [](auto& c, auto& k, auto& v) { c.smoothing_window = parse_unsigned(k, v); }},
        {"success_threshold", [](auto& c, auto& k, auto& v) { c.success_threshold = parse_number(k, v); }},
        {"spiral.a", [](auto& c, auto& k, auto& v) { c.evolution.spiral.a = parse_number(k, v); }},
        {"spiral.alpha", [](auto& c, auto& k, auto& v) { c.evolution.spiral.alpha = parse_number(k, v); }},
        {"evolution.pop_size", [](auto& c, auto& k, auto& v) { c.evolution.pop_size = parse_unsigned(k, v); }},
        {"evolution.offspring_size",
         [](auto& c, auto& k, auto& v) { c.evolution.offspring_size = parse_unsigned(k, v); }},
        {"evolution.k", [](auto& c, auto& k, auto& v) { c.evolution.k = parse_unsigned(k, v); }},
        {"evolution.sigma", [](auto& c, auto& k, auto& v) { c.evolution.sigma = parse_number(k, v); }},
        {"evolution.g_max",
         [](auto& c, auto& k, auto& v) { c.evolution.g_max = static_cast<int>(parse_unsigned(k, v)); }},
        {"evolution.metric",
         [](auto& c, auto& k, auto& v) { c.evolution.metric = parse_enum(k, v, metric_names); }},
        {"evolution.genotype_space",
         [](auto& c, auto& k, auto& v) { c.evolution.genotype_space = parse_enum(k, v, space_names); }},
        {"evolution.init_t0", [](auto& c, auto& k, auto& v) { c.evolution.init_t0 = parse_number(k, v); }},
        {"archive.kind", [](auto& c, auto& k, auto& v) { c.archive.kind = parse_enum(k, v, archive_kind_names); }},
        {"archive.max_size", [](auto& c, auto& k, auto& v) { c.archive.max_size = parse_unsigned(k, v); }},
        {"archive.additions_per_generation",
         [](auto& c, auto& k, auto& v) { c.archive.additions_per_generation = parse_unsigned(k, v); }},
        {"archive.grid_resolution",
         [](auto& c, auto& k, auto& v) { c.archive.grid_resolution = static_cast<int>(parse_unsigned(k, v)); }},
        {"archive.epsilon", [](auto& c, auto& k, auto& v) { c.archive.epsilon = parse_number(k, v); }},
        {"sampling.mode",
         [](auto& c, auto& k, auto& v) { c.sampling.mode = parse_enum(k, v, sampling_mode_names); }},
        {"sampling.archive_fraction",
         [](auto& c, auto& k, auto& v) { c.sampling.archive_fraction = parse_number(k, v); }},
        {"sampling.tau", [](auto& c, auto& k, auto& v) { c.sampling.tau = parse_number(k, v); }},
    };
    return setters;
}

} // namespace detail

/// Every effective parameter as (key, value), in a fixed order. Keys are the
/// ones parse_config accepts, so the echo parses back to the same config.
inline std::vector<std::pair<std::string, std::string>> echo_config(const ExperimentConfig& c) {
    using detail::format_double;
    return {
        {"scenario", std::string(to_string(c.scenario))},
        {"runs", std::to_string(c.runs)},
        {"base_seed", std::to_string(c.base_seed)},
        {"output_dir", c.output_dir},
        {"coverage_bins", std::to_string(c.coverage_bins)},
        {"smoothing_window", std::to_string(c.smoothing_window)},
        {"success_threshold", format_double(c.success_threshold)},
        {"spiral.a", format_double(c.evolution.spiral.a)},
        {"spiral.alpha", format_double(c.evolution.spiral.alpha)},
        {"evolution.pop_size", std::to_string(c.evolution.pop_size)},
        {"evolution.offspring_size", std::to_string(c.evolution.offspring_size)},
        {"evolution.k", std::to_string(c.evolution.k)},
        {"evolution.sigma", format_double(c.evolution.sigma)},
        {"evolution.g_max", std::to_string(c.evolution.g_max)},
        {"evolution.metric", to_string(c.evolution.metric)},
        {"evolution.genotype_space", to_string(c.evolution.genotype_space)},
        {"evolution.init_t0", format_double(c.evolution.init_t0)},
        {"archive.kind", to_string(c.archive.kind)},
        {"archive.max_size", std::to_string(c.archive.max_size)},
        {"archive.additions_per_generation", std::to_string(c.archive.additions_per_generation)},
        {"archive.grid_resolution", std::to_string(c.archive.grid_resolution)},
        {"archive.epsilon", format_double(c.archive.epsilon)},
        {"sampling.mode", to_string(c.sampling.mode)},
        {"sampling.archive_fraction", format_double(c.sampling.archive_fraction)},
        {"sampling.tau", format_double(c.sampling.tau)},
    };
}

inline void validate(const ExperimentConfig& c) {
    try {
        c.evolution.spiral.validate();
    } catch (const DomainError& e) {
        throw ConfigError("spiral", e.what());
    }
    c.evolution.validate();
    if (c.runs < 1) throw ConfigError("runs", "must be >= 1");
    if (c.coverage_bins < 1) throw ConfigError("coverage_bins", "must be >= 1");
    if (c.smoothing_window < 1 || c.smoothing_window % 2 == 0)
        throw ConfigError("smoothing_window", "must be odd and >= 1");
    if (!(c.success_threshold >= 0.0 && c.success_threshold <= 1.0))
        throw ConfigError("success_threshold", "must lie in [0, 1]");
    if (c.archive.max_size < 1) throw ConfigError("archive.max_size", "must be >= 1");
    if (c.archive.grid_resolution < 1) throw ConfigError("archive.grid_resolution", "must be >= 1");
    if (!(c.archive.epsilon >= 0.0 && c.archive.epsilon <= 1.0))
        throw ConfigError("archive.epsilon", "must lie in [0, 1]");
    if (!(c.sampling.archive_fraction >= 0.0 && c.sampling.archive_fraction <= 1.0))
        throw ConfigError("sampling.archive_fraction", "must lie in [0, 1]");
    if (!(c.sampling.tau >= 0.0 && c.sampling.tau <= 1.0)) throw ConfigError("sampling.tau", "must lie in [0, 1]");
    if (c.sampling.mode != SamplingMode::PopulationOnly && c.archive.kind == ArchiveKind::None)
        throw ConfigError("sampling.mode", "archive resampling requires an archive");
}

/// Config for a named scenario with every default resolved.
inline ExperimentConfig scenario_config(Scenario s) {
    ExperimentConfig c;
    c.scenario = s;
    for (const auto& [key, value] : detail::scenario_pins(s)) detail::config_setters().at(key)(c, key, value);
    // the resampling vs large-population pair is compared over 5 runs
    if (s == Scenario::Fig3i || s == Scenario::Fig3j) c.runs = 5;
    return c;
}

/// Parses a flat `key = value` document. `#` starts a comment line. The
/// scenario key selects the base config; overriding a field that the named
/// scenario fixes is an error unless the value matches.
inline ExperimentConfig parse_config(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::map<std::string, std::string> seen;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = detail::trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no), "expected key = value, got '" + body + "'");
        std::string key = detail::trim(std::string_view(body).substr(0, eq));
        std::string value = detail::trim(std::string_view(body).substr(eq + 1));
        if (key != "scenario" && !detail::config_setters().contains(key))
            throw ConfigError(key, "unknown key");
        if (seen.contains(key)) throw ConfigError(key, "duplicate key");
        seen[key] = value;
        entries.emplace_back(std::move(key), std::move(value));
    }

    Scenario scenario = Scenario::Custom;
    if (auto it = seen.find("scenario"); it != seen.end())
        scenario = detail::parse_enum("scenario", it->second, scenario_names);
    ExperimentConfig config = scenario_config(scenario);
    const auto pins = detail::scenario_pins(scenario);

    for (const auto& [key, value] : entries) {
        if (key == "scenario") continue;
        if (auto pin = pins.find(key); pin != pins.end()) {
            ExperimentConfig probe = config;
            detail::config_setters().at(key)(probe, key, value);
            const auto pinned = echo_config(config);
            const auto requested = echo_config(probe);
            if (pinned != requested)
                throw ConfigError(key, "scenario " + std::string(to_string(scenario)) + " fixes this field to " +
                                           pin->second + "; use scenario = Custom to change it");
            continue;
        }
        detail::config_setters().at(key)(config, key, value);
    }
    validate(config);
    return config;
}

/// One row per generation of a run.
struct GenerationRow {
    int generation = 0;
    double coverage_fraction = 0.0;
    double median_delta = 0.0;
    std::size_t archive_size = 0;
    std::size_t grid_occupied = 0;
    double max_novelty = 0.0;

    friend bool operator==(const GenerationRow&, const GenerationRow&) = default;
};

struct RunTelemetry {
    int run_index = 0;
    std::uint64_t seed = 0;
    std::vector<GenerationRow> rows;
    std::vector<LineageEntry> lineage;
    std::vector<Individual> final_population;
    std::vector<Individual> final_archive;
    /// Median history H_G over selected mutations, one entry per generation.
    std::vector<double> median_history;
    /// Curve parameters of every evaluated individual: the shared start
    /// point followed by each offspring in evaluation order.
    std::vector<double> evaluated_t;
    CoverageReport coverage;
    std::uint64_t evaluations = 0;
};

inline std::uint64_t run_seed(const ExperimentConfig& c, int run_index) noexcept {
    return c.base_seed + static_cast<std::uint64_t>(run_index);
}

/// Executes one seeded run and collects its telemetry.
inline RunTelemetry run_single(const ExperimentConfig& config, int run_index) {
    validate(config);
    EvolutionConfig evo = config.evolution;
    evo.seed = run_seed(config, run_index);
    const SpiralParams& params = evo.spiral;

    RunTelemetry out;
    out.run_index = run_index;
    out.seed = evo.seed;
    EvolutionState state = init_population(evo, config.archive);
    CoverageTracker tracker(config.coverage_bins, params);
    out.evaluated_t.reserve(1 + static_cast<std::size_t>(evo.g_max) * evo.offspring_size);
    out.evaluated_t.push_back(evo.init_t0);
    tracker.add(evo.init_t0);
    out.evaluations = evo.pop_size;

    out.rows.reserve(static_cast<std::size_t>(evo.g_max));
    out.median_history.reserve(static_cast<std::size_t>(evo.g_max));
    for (int g = 0; g < evo.g_max; ++g) {
        const std::size_t log_start = state.lineage_log.size();
        step_generation(state, evo, config.sampling);
        out.evaluations += state.last_offspring_t.size();
        for (double t : state.last_offspring_t) {
            tracker.add(t);
            out.evaluated_t.push_back(t);
        }
        const auto tail = std::span(state.lineage_log).subspan(log_start);
        const MutationDeltaRecord record = mutation_deltas(tail, state.generation, params);
        const double h = median(record.selected_deltas());
        out.median_history.push_back(h);

        GenerationRow row;
        row.generation = state.generation;
        row.coverage_fraction = tracker.fraction();
        row.median_delta = h;
        row.archive_size = archive_size(state.archive);
        if (const auto* grid = std::get_if<GridArchive>(&state.archive)) row.grid_occupied = grid->occupied;
        for (const auto& p : state.population) row.max_novelty = std::max(row.max_novelty, p.novelty);
        out.rows.push_back(row);
    }
    out.lineage = std::move(state.lineage_log);
    out.final_population = std::move(state.population);
    out.final_archive = archive_members(state.archive);
    out.coverage = tracker.report();
    return out;
}

/// Per-run analysis summarised for the batch summary.
struct RunSummary {
    int run_index = 0;
    std::uint64_t seed = 0;
    double final_coverage = 0.0;
    bool success = false;
    std::optional<OscillatorFit> fit;
    std::size_t phase_count = 0;
};

inline RunSummary summarize_run(const RunTelemetry& run, const ExperimentConfig& config) {
    RunSummary s;
    s.run_index = run.run_index;
    s.seed = run.seed;
    s.final_coverage = run.coverage.fraction;
    s.success = run.coverage.fraction >= config.success_threshold;
    if (run.median_history.size() >= 20) s.fit = fit_damped_oscillator(run.median_history);
    if (!run.median_history.empty())
        s.phase_count = segment_phases(run.median_history, config.smoothing_window).size();
    return s;
}

struct BatchResult {
    ExperimentConfig config;
    std::vector<RunTelemetry> runs;
    std::vector<RunSummary> summaries;
    /// Union of every run's covered bins.
    CoverageReport cumulative;

    std::uint64_t evaluations() const noexcept {
        std::uint64_t n = 0;
        for (const auto& r : runs) n += r.evaluations;
        return n;
    }
};

} // namespace nslab
