#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nslab/analysis.hpp"
#include "nslab/experiment.hpp"

namespace nslab {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Column sets of the emitted CSV files. Fixed per file kind.
inline constexpr const char* telemetry_columns =
    "generation,coverage_fraction,median_delta,archive_size,grid_occupied,max_novelty";
inline constexpr const char* lineage_columns = "generation,child_id,parent_id,child_t,parent_t,selected";
inline constexpr const char* snapshot_columns =
    "set,id,genotype_space,genotype,t,x,y,novelty,eta,parent_id,birth_generation";
inline constexpr const char* summary_columns =
    "row,seed,final_coverage,success,fit_amplitude,fit_decay,fit_omega,fit_phase,fit_offset,fit_residual,"
    "phase_count,cumulative_coverage,min_coverage,max_coverage,success_rate,evaluations";
inline constexpr const char* fit_columns =
    "coverage_fraction,fit_amplitude,fit_decay,fit_omega,fit_phase,fit_offset,fit_residual,phase_count";
inline constexpr const char* phase_columns = "index,start_generation,end_generation,kind";

namespace detail {

inline std::string num(double v) { return format_double(v); }

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << content;
    if (!out.flush()) throw IoError("write failed for " + path.string());
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

} // namespace detail

/// Comment header: tool and version, optional run metadata, then every
/// effective config value.
inline void write_header(std::ostream& out, const ExperimentConfig& config, const RunTelemetry* run = nullptr) {
    out << "# " << tool_name << ' ' << tool_version << '\n';
    if (run) {
        out << "# run.index=" << run->run_index << '\n';
        out << "# run.seed=" << run->seed << '\n';
    }
    for (const auto& [key, value] : echo_config(config)) out << "# " << key << '=' << value << '\n';
}

inline std::string telemetry_csv(const RunTelemetry& run, const ExperimentConfig& config) {
    std::ostringstream out;
    write_header(out, config, &run);
    out << telemetry_columns << '\n';
    for (const auto& r : run.rows) {
        out << r.generation << ',' << detail::num(r.coverage_fraction) << ',' << detail::num(r.median_delta) << ','
            << r.archive_size << ',' << r.grid_occupied << ',' << detail::num(r.max_novelty) << '\n';
    }
    return out.str();
}

inline std::string lineage_csv(const RunTelemetry& run, const ExperimentConfig& config) {
    std::ostringstream out;
    write_header(out, config, &run);
    out << lineage_columns << '\n';
    for (const auto& e : run.lineage) {
        out << e.generation << ',' << e.child_id << ',' << e.parent_id << ',' << detail::num(e.child_t) << ','
            << detail::num(e.parent_t) << ',' << (e.selected ? 1 : 0) << '\n';
    }
    return out.str();
}

inline std::string snapshot_csv(const RunTelemetry& run, const ExperimentConfig& config) {
    std::ostringstream out;
    write_header(out, config, &run);
    out << snapshot_columns << '\n';
    auto emit = [&](const char* set, const Individual& ind) {
        out << set << ',' << ind.id << ',' << to_string(ind.genotype.space) << ',' << detail::num(ind.genotype.value)
            << ',' << detail::num(ind.behavior.t) << ',' << detail::num(ind.behavior.x) << ','
            << detail::num(ind.behavior.y) << ',' << detail::num(ind.novelty) << ',' << detail::num(ind.eta) << ',';
        if (ind.parent_id) out << *ind.parent_id;
        out << ',' << ind.birth_generation << '\n';
    };
    for (const auto& p : run.final_population) emit("population", p);
    for (const auto& a : run.final_archive) emit("archive", a);
    return out.str();
}

/// One row per run plus an aggregate row.
inline std::string summary_csv(const BatchResult& batch) {
    if (batch.summaries.empty()) throw std::invalid_argument("summary_csv: empty batch");
    std::ostringstream out;
    write_header(out, batch.config);
    out << summary_columns << '\n';
    double lo = 1.0, hi = 0.0;
    std::size_t successes = 0;
    for (const auto& s : batch.summaries) {
        out << s.run_index << ',' << s.seed << ',' << detail::num(s.final_coverage) << ',' << (s.success ? 1 : 0);
        if (s.fit) {
            out << ',' << detail::num(s.fit->amplitude) << ',' << detail::num(s.fit->decay) << ','
                << detail::num(s.fit->omega) << ',' << detail::num(s.fit->phase) << ','
                << detail::num(s.fit->offset) << ',' << detail::num(s.fit->residual);
        } else {
            out << ",,,,,,";
        }
        out << ',' << s.phase_count << ",,,,,\n";
        lo = std::min(lo, s.final_coverage);
        hi = std::max(hi, s.final_coverage);
        successes += s.success ? 1 : 0;
    }
    const double n = static_cast<double>(batch.summaries.size());
    // mean as an offset from the minimum, exact when every run agrees
    double excess = 0.0;
    for (const auto& s : batch.summaries) excess += s.final_coverage - lo;
    out << "aggregate,," << detail::num(lo + excess / n) << ",,,,,,,,," << detail::num(batch.cumulative.fraction) << ','
        << detail::num(lo) << ',' << detail::num(hi) << ',' << detail::num(static_cast<double>(successes) / n) << ','
        << batch.evaluations() << '\n';
    return out.str();
}

/// A parsed CSV file written by this tool: header metadata plus rows.
struct CsvDocument {
    ExperimentConfig config;
    int run_index = 0;
    std::uint64_t seed = 0;
    std::string columns;
    std::vector<std::vector<std::string>> rows;
};

inline CsvDocument parse_csv_document(std::istream& in, const std::string& origin) {
    CsvDocument doc;
    std::string config_text;
    std::string line;
    bool have_tool = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.starts_with("#")) {
            std::string body = detail::trim(std::string_view(line).substr(1));
            if (!have_tool) {
                if (!body.starts_with(tool_name)) throw IoError(origin + ": not an nslab file");
                have_tool = true;
            } else if (body.starts_with("run.index=")) {
                doc.run_index = std::stoi(body.substr(10));
            } else if (body.starts_with("run.seed=")) {
                doc.seed = std::stoull(body.substr(9));
            } else {
                config_text += body + '\n';
            }
            continue;
        }
        if (doc.columns.empty()) {
            doc.columns = line;
            continue;
        }
        if (!line.empty()) doc.rows.push_back(detail::split_csv(line));
    }
    if (!have_tool) throw IoError(origin + ": missing nslab header");
    doc.config = parse_config(config_text);
    return doc;
}

inline CsvDocument read_csv_document(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_csv_document(in, path.string());
}

inline std::vector<LineageEntry> lineage_from_document(const CsvDocument& doc) {
    if (doc.columns != lineage_columns) throw IoError("not a lineage file (columns: " + doc.columns + ")");
    std::vector<LineageEntry> out;
    out.reserve(doc.rows.size());
    for (const auto& f : doc.rows) {
        if (f.size() != 6) throw IoError("lineage row with " + std::to_string(f.size()) + " fields");
        LineageEntry e;
        e.generation = std::stoi(f[0]);
        e.child_id = std::stoull(f[1]);
        e.parent_id = std::stoull(f[2]);
        e.child_t = std::stod(f[3]);
        e.parent_t = std::stod(f[4]);
        e.selected = f[5] == "1";
        out.push_back(e);
    }
    return out;
}

/// Recomputed analysis of one run from its lineage log alone.
struct LineageAnalysis {
    std::vector<double> median_history;
    std::optional<OscillatorFit> fit;
    std::vector<Phase> phases;
    CoverageReport coverage;
    std::vector<double> evaluated_t;
};

inline LineageAnalysis analyze_lineage(std::span<const LineageEntry> lineage, const ExperimentConfig& config) {
    const SpiralParams& params = config.evolution.spiral;
    LineageAnalysis a;
    a.median_history = median_history(all_mutation_deltas(lineage, params));
    if (a.median_history.size() >= 20) a.fit = fit_damped_oscillator(a.median_history);
    if (!a.median_history.empty()) a.phases = segment_phases(a.median_history, config.smoothing_window);
    a.evaluated_t.push_back(config.evolution.init_t0);
    for (const auto& e : lineage) a.evaluated_t.push_back(e.child_t);
    CoverageTracker tracker(config.coverage_bins, params);
    for (double t : a.evaluated_t) tracker.add(t);
    a.coverage = tracker.report();
    return a;
}

inline std::string fit_csv(const LineageAnalysis& a, const ExperimentConfig& config) {
    std::ostringstream out;
    write_header(out, config);
    out << fit_columns << '\n' << detail::num(a.coverage.fraction);
    if (a.fit) {
        out << ',' << detail::num(a.fit->amplitude) << ',' << detail::num(a.fit->decay) << ','
            << detail::num(a.fit->omega) << ',' << detail::num(a.fit->phase) << ',' << detail::num(a.fit->offset)
            << ',' << detail::num(a.fit->residual);
    } else {
        out << ",,,,,,";
    }
    out << ',' << a.phases.size() << '\n';
    return out.str();
}

/// Phases with generation numbers (H_G index i is generation i + 1).
inline std::string phases_csv(const LineageAnalysis& a, const ExperimentConfig& config) {
    std::ostringstream out;
    write_header(out, config);
    out << phase_columns << '\n';
    for (std::size_t i = 0; i < a.phases.size(); ++i) {
        out << i << ',' << a.phases[i].start + 1 << ',' << a.phases[i].end + 1 << ',' << to_string(a.phases[i].kind)
            << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// SVG

struct SvgLayout {
    double size_px = 480.0;
    double margin_px = 12.0;
    /// Curve sampling step for the spiral polyline, in radians.
    double curve_step = 0.05;
};

struct PixelDot {
    int x = 0;
    int y = 0;
    friend auto operator<=>(const PixelDot&, const PixelDot&) = default;
};

/// Maps the spiral's bounding box onto the square canvas, y pointing up.
inline std::pair<double, double> svg_map(double x, double y, const SpiralParams& params, const SvgLayout& layout) {
    const double r = params.a * params.t_max();
    const double scale = (layout.size_px - 2.0 * layout.margin_px) / (2.0 * r);
    const double centre = layout.size_px / 2.0;
    return {centre + x * scale, centre - y * scale};
}

/// Distinct whole-pixel positions of the given curve parameters, sorted.
inline std::vector<PixelDot> svg_dot_positions(std::span<const double> ts, const SpiralParams& params,
                                               const SvgLayout& layout = {}) {
    std::set<PixelDot> dots;
    for (double t : ts) {
        const BehaviorPoint b = spiral_point(t, params);
        const auto [px, py] = svg_map(b.x, b.y, params, layout);
        dots.insert({static_cast<int>(std::lround(px)), static_cast<int>(std::lround(py))});
    }
    return {dots.begin(), dots.end()};
}

/// Spiral polyline, one grey dot per visited pixel, and the start point in
/// red. Output bytes depend only on the inputs.
inline std::string render_svg(std::span<const double> visited_t, double start_t, const SpiralParams& params,
                              const std::string& title, const SvgLayout& layout = {}) {
    std::ostringstream out;
    char buf[96];
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    std::snprintf(buf, sizeof buf, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" ",
                  layout.size_px, layout.size_px);
    out << buf;
    std::snprintf(buf, sizeof buf, "viewBox=\"0 0 %.0f %.0f\">\n", layout.size_px, layout.size_px);
    out << buf;
    out << "<!-- " << tool_name << ' ' << tool_version << " -->\n";
    out << "<title>" << title << "</title>\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    out << "<polyline fill=\"none\" stroke=\"#9aa5b1\" stroke-width=\"0.6\" points=\"";
    const double t_max = params.t_max();
    const int steps = static_cast<int>(std::ceil(t_max / layout.curve_step));
    for (int i = 0; i <= steps; ++i) {
        const double t = std::min(t_max, i * layout.curve_step);
        const BehaviorPoint b = spiral_point(t, params);
        const auto [px, py] = svg_map(b.x, b.y, params, layout);
        std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i == 0 ? "" : " ", px, py);
        out << buf;
    }
    out << "\"/>\n";

    out << "<g fill=\"#1f4e79\">\n";
    for (const auto& d : svg_dot_positions(visited_t, params, layout)) {
        std::snprintf(buf, sizeof buf, "<circle cx=\"%d\" cy=\"%d\" r=\"1.2\"/>\n", d.x, d.y);
        out << buf;
    }
    out << "</g>\n";

    const BehaviorPoint s = spiral_point(start_t, params);
    const auto [sx, sy] = svg_map(s.x, s.y, params, layout);
    std::snprintf(buf, sizeof buf, "<circle id=\"start\" cx=\"%.2f\" cy=\"%.2f\" r=\"4\" fill=\"red\"/>\n", sx, sy);
    out << buf;
    out << "</svg>\n";
    return out.str();
}

} // namespace nslab
