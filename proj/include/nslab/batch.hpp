#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "nslab/experiment.hpp"
#include "nslab/io.hpp"

namespace nslab {

struct BatchOptions {
    /// Write per-run CSVs, the summary and the cumulative SVG.
    bool write_files = true;
    /// 0 picks std::thread::hardware_concurrency().
    unsigned threads = 0;
};

inline std::string run_file_stem(const ExperimentConfig& config, int run_index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "_run%03d", run_index);
    return std::string(to_string(config.scenario)) + buf;
}

/// Creates the output directory and proves it is writable.
inline void prepare_output_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw IoError("cannot create output directory " + dir.string() + (ec ? ": " + ec.message() : ""));
    const auto probe = dir / ".nslab_write_probe";
    detail::write_text_file(probe, "");
    std::filesystem::remove(probe, ec);
}

inline void write_run_files(const RunTelemetry& run, const ExperimentConfig& config) {
    const std::filesystem::path dir(config.output_dir);
    const std::string stem = run_file_stem(config, run.run_index);
    detail::write_text_file(dir / (stem + ".csv"), telemetry_csv(run, config));
    detail::write_text_file(dir / (stem + "_lineage.csv"), lineage_csv(run, config));
    detail::write_text_file(dir / (stem + "_final.csv"), snapshot_csv(run, config));
}

/// Runs `config.runs` independent seeded runs (seed base_seed + index).
/// Runs may execute on several threads; each run owns its state, so the
/// results and every written byte are independent of scheduling.
inline BatchResult run_batch(const ExperimentConfig& config, const BatchOptions& options = {}) {
    validate(config);
    if (options.write_files) prepare_output_dir(config.output_dir);

    BatchResult batch;
    batch.config = config;
    batch.runs.resize(static_cast<std::size_t>(config.runs));
    batch.summaries.resize(batch.runs.size());

    unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(batch.runs.size()));

    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (int i = next++; i < config.runs; i = next++) {
            try {
                RunTelemetry run = run_single(config, i);
                batch.summaries[static_cast<std::size_t>(i)] = summarize_run(run, config);
                if (options.write_files) write_run_files(run, config);
                batch.runs[static_cast<std::size_t>(i)] = std::move(run);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    CoverageTracker cumulative(config.coverage_bins, config.evolution.spiral);
    for (const auto& run : batch.runs)
        for (double t : run.evaluated_t) cumulative.add(t);
    batch.cumulative = cumulative.report();

    if (options.write_files) {
        const std::filesystem::path dir(config.output_dir);
        const std::string name(to_string(config.scenario));
        detail::write_text_file(dir / (name + "_summary.csv"), summary_csv(batch));
        std::vector<double> all_t;
        for (const auto& run : batch.runs) all_t.insert(all_t.end(), run.evaluated_t.begin(), run.evaluated_t.end());
        detail::write_text_file(dir / (name + ".svg"),
                                render_svg(all_t, config.evolution.init_t0, config.evolution.spiral,
                                           name + " cumulative, " + std::to_string(config.runs) + " runs"));
    }
    return batch;
}

} // namespace nslab
