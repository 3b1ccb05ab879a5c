// nslab command line: run / batch / analyze / plot.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nslab/nslab.hpp"

namespace {

namespace fs = std::filesystem;

/// Flags that map one-to-one onto config keys.
const std::vector<std::pair<std::string, std::string>> kFieldFlags{
    {"--pop-size", "evolution.pop_size"},
    {"--offspring-size", "evolution.offspring_size"},
    {"--k", "evolution.k"},
    {"--sigma", "evolution.sigma"},
    {"--g-max", "evolution.g_max"},
    {"--metric", "evolution.metric"},
    {"--genotype-space", "evolution.genotype_space"},
    {"--init-t0", "evolution.init_t0"},
    {"--spiral-a", "spiral.a"},
    {"--spiral-alpha", "spiral.alpha"},
    {"--archive-kind", "archive.kind"},
    {"--archive-max-size", "archive.max_size"},
    {"--archive-additions", "archive.additions_per_generation"},
    {"--grid-resolution", "archive.grid_resolution"},
    {"--epsilon", "archive.epsilon"},
    {"--sampling", "sampling.mode"},
    {"--archive-fraction", "sampling.archive_fraction"},
    {"--tau", "sampling.tau"},
    {"--bins", "coverage_bins"},
    {"--smoothing-window", "smoothing_window"},
    {"--success-threshold", "success_threshold"},
};

struct ExperimentArgs {
    std::string scenario;
    std::string config_file;
    std::optional<std::string> seed;
    std::optional<std::string> runs;
    std::optional<std::string> out;
    std::vector<std::string> sets;
    std::map<std::string, std::optional<std::string>> fields;
};

void add_experiment_options(CLI::App* cmd, ExperimentArgs& args, bool with_runs) {
    cmd->add_option("--scenario", args.scenario, "Named scenario (Fig2a..Fig3l) or Custom");
    cmd->add_option("--config", args.config_file, "Flat key = value config file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", args.seed, "Base seed; run i uses seed + i (default 1)");
    if (with_runs) cmd->add_option("--runs", args.runs, "Number of runs (default 20, Fig3i and Fig3j 5)");
    cmd->add_option("--out", args.out, "Output directory (default out)");
    cmd->add_option("--set", args.sets, "Extra key=value override, repeatable");
    for (const auto& [flag, key] : kFieldFlags) cmd->add_option(flag, args.fields[key], "Sets " + key);
}

nslab::ExperimentConfig resolve_config(const ExperimentArgs& args, bool single_run) {
    std::ostringstream text;
    if (!args.config_file.empty()) {
        std::ifstream in(args.config_file);
        text << in.rdbuf() << '\n';
    }
    std::map<std::string, std::string> overrides;
    if (!args.scenario.empty()) overrides["scenario"] = args.scenario;
    if (args.seed) overrides["base_seed"] = *args.seed;
    if (args.runs) overrides["runs"] = *args.runs;
    if (single_run) overrides["runs"] = "1";
    if (args.out) overrides["output_dir"] = *args.out;
    for (const auto& [key, value] : args.fields)
        if (value) overrides[key] = *value;
    for (const auto& kv : args.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw nslab::ConfigError(kv, "--set expects key=value");
        overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
    }

    // command-line values replace same-named keys from the file
    std::ostringstream merged;
    std::istringstream file_lines(text.str());
    std::string line;
    while (std::getline(file_lines, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) {
            const std::string key = nslab::detail::trim(std::string_view(line).substr(0, eq));
            if (overrides.contains(key)) continue;
        }
        merged << line << '\n';
    }
    for (const auto& [key, value] : overrides) merged << key << " = " << value << '\n';
    return nslab::parse_config(merged.str());
}

void print_config(const nslab::ExperimentConfig& config) {
    std::cout << "# " << nslab::tool_name << ' ' << nslab::tool_version << '\n';
    for (const auto& [key, value] : nslab::echo_config(config)) std::cout << "# " << key << '=' << value << '\n';
}

int run_experiment(const ExperimentArgs& args, bool single_run) {
    const nslab::ExperimentConfig config = resolve_config(args, single_run);
    print_config(config);
    const nslab::BatchResult batch = nslab::run_batch(config);
    for (const auto& s : batch.summaries) {
        std::printf("run %d seed %llu coverage %.3f %s\n", s.run_index, static_cast<unsigned long long>(s.seed),
                    s.final_coverage, s.success ? "success" : "fail");
    }
    std::size_t successes = 0;
    for (const auto& s : batch.summaries) successes += s.success ? 1 : 0;
    std::printf("cumulative coverage %.3f, success %zu/%zu, evaluations %llu\n", batch.cumulative.fraction, successes,
                batch.summaries.size(), static_cast<unsigned long long>(batch.evaluations()));
    std::printf("wrote %s\n", config.output_dir.c_str());
    return 0;
}

int analyze(const std::vector<std::string>& lineage_files, const std::string& out_dir) {
    if (!out_dir.empty()) nslab::prepare_output_dir(out_dir);
    std::cout << nslab::fit_columns << ",file\n";
    for (const auto& file : lineage_files) {
        const nslab::CsvDocument doc = nslab::read_csv_document(file);
        const auto lineage = nslab::lineage_from_document(doc);
        const nslab::LineageAnalysis a = nslab::analyze_lineage(lineage, doc.config);
        const std::string fit = nslab::fit_csv(a, doc.config);
        // last line of the fit file is its single data row
        const auto row_start = fit.rfind('\n', fit.size() - 2) + 1;
        std::cout << fit.substr(row_start, fit.size() - row_start - 1) << ',' << file << '\n';
        if (!out_dir.empty()) {
            std::string stem = fs::path(file).stem().string();
            if (stem.ends_with("_lineage")) stem.resize(stem.size() - 8);
            nslab::detail::write_text_file(fs::path(out_dir) / (stem + "_fit.csv"), fit);
            nslab::detail::write_text_file(fs::path(out_dir) / (stem + "_phases.csv"), nslab::phases_csv(a, doc.config));
        }
    }
    return 0;
}

int plot(const std::vector<std::string>& lineage_files, const std::string& out_file) {
    std::vector<double> visited;
    std::optional<nslab::ExperimentConfig> config;
    for (const auto& file : lineage_files) {
        const nslab::CsvDocument doc = nslab::read_csv_document(file);
        if (config && (config->evolution.spiral != doc.config.evolution.spiral ||
                       config->evolution.init_t0 != doc.config.evolution.init_t0))
            throw nslab::IoError(file + ": spiral or start point differs from the other inputs");
        config = doc.config;
        const nslab::LineageAnalysis a = nslab::analyze_lineage(nslab::lineage_from_document(doc), doc.config);
        visited.insert(visited.end(), a.evaluated_t.begin(), a.evaluated_t.end());
    }
    const std::string title = std::string(nslab::to_string(config->scenario)) + ", " +
                              std::to_string(lineage_files.size()) + " run(s)";
    const fs::path out(out_file);
    if (out.has_parent_path()) nslab::prepare_output_dir(out.parent_path());
    nslab::detail::write_text_file(
        out, nslab::render_svg(visited, config->evolution.init_t0, config->evolution.spiral, title));
    std::printf("wrote %s\n", out_file.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Novelty search on an Archimedean spiral: runs, batches, analysis and plots"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(nslab::tool_name) + ' ' + nslab::tool_version);

    ExperimentArgs run_args;
    auto* run = app.add_subcommand("run", "One seeded run of a scenario");
    add_experiment_options(run, run_args, false);

    ExperimentArgs batch_args;
    auto* batch = app.add_subcommand("batch", "A scenario over consecutive seeds");
    add_experiment_options(batch, batch_args, true);

    std::vector<std::string> analyze_files;
    std::string analyze_out;
    auto* analyze_cmd = app.add_subcommand("analyze", "Recompute H_G fit, phases and coverage from lineage CSVs");
    analyze_cmd->add_option("lineage", analyze_files, "Lineage CSV files")->required()->check(CLI::ExistingFile);
    analyze_cmd->add_option("--out", analyze_out, "Directory for <run>_fit.csv and <run>_phases.csv");

    std::vector<std::string> plot_files;
    std::string plot_out = "coverage.svg";
    auto* plot_cmd = app.add_subcommand("plot", "Cumulative SVG of the behaviours in lineage CSVs");
    plot_cmd->add_option("lineage", plot_files, "Lineage CSV files")->required()->check(CLI::ExistingFile);
    plot_cmd->add_option("--out", plot_out, "Output SVG path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return run_experiment(run_args, true);
        if (*batch) return run_experiment(batch_args, false);
        if (*analyze_cmd) return analyze(analyze_files, analyze_out);
        if (*plot_cmd) return plot(plot_files, plot_out);
    } catch (const nslab::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
