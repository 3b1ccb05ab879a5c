#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "nslab/errors.hpp"
#include "nslab/individual.hpp"
#include "nslab/rng.hpp"
#include "nslab/spiral.hpp"

namespace nslab {

/// Flat multiset of individuals. Growth copies random population members;
/// when bounded, overflow is removed by uniformly random eviction.
struct UnstructuredArchive {
    std::vector<Individual> members;
    std::optional<std::size_t> max_size;
    std::size_t additions_per_generation = 6;
};

struct CellIndex {
    int row = 0;
    int col = 0;

    friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Uniform resolution x resolution partition of the box [lo, hi]^2, at most
/// one occupant per cell. Cells are half-open [lo + i w, lo + (i+1) w), except
/// that the upper edge of the box belongs to the last cell.
struct GridArchive {
    double lo = 0.0;
    double hi = 0.0;
    int resolution = 50;
    double epsilon = 0.05;
    std::vector<std::optional<Individual>> cells;
    std::size_t occupied = 0;

    GridArchive() = default;

    GridArchive(double lower, double upper, int res, double eps)
        : lo(lower), hi(upper), resolution(res), epsilon(eps),
          cells(static_cast<std::size_t>(res) * static_cast<std::size_t>(res)) {
        if (!(upper > lower)) throw DomainError("grid archive: empty bounds");
        if (res < 1) throw DomainError("grid archive: resolution must be >= 1");
        if (!(eps >= 0.0 && eps <= 1.0)) throw DomainError("grid archive: epsilon outside [0, 1]");
    }

    /// Grid covering the bounding box of the whole spiral.
    static GridArchive for_spiral(const SpiralParams& params, int res, double eps) {
        const double r = params.a * params.t_max();
        return GridArchive(-r, r, res, eps);
    }

    double cell_width() const noexcept { return (hi - lo) / resolution; }

    std::size_t flat(CellIndex c) const noexcept {
        return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(resolution) +
               static_cast<std::size_t>(c.col);
    }
};

namespace detail {

inline int grid_axis_index(double v, double lo, double hi, int resolution) noexcept {
    const double scaled = (v - lo) / (hi - lo) * resolution;
    if (!(scaled >= 0.0)) return 0;
    if (scaled >= resolution) return resolution - 1;
    return std::min(static_cast<int>(std::floor(scaled)), resolution - 1);
}

} // namespace detail

/// Row indexes y, column indexes x. Points outside the box map to edge cells.
inline CellIndex cell_index(const BehaviorPoint& b, const GridArchive& grid) noexcept {
    return {detail::grid_axis_index(b.y, grid.lo, grid.hi, grid.resolution),
            detail::grid_axis_index(b.x, grid.lo, grid.hi, grid.resolution)};
}

/// Inserts into an empty cell, otherwise replaces the occupant with
/// probability epsilon. Returns true only if the cell was empty.
inline bool grid_insert(GridArchive& grid, const Individual& candidate, Rng& rng) {
    auto& slot = grid.cells[grid.flat(cell_index(candidate.behavior, grid))];
    if (!slot) {
        slot = candidate;
        ++grid.occupied;
        return true;
    }
    // draw only when replacement is possible so epsilon = 0 leaves the stream untouched
    if (grid.epsilon > 0.0 && rng.bernoulli(grid.epsilon)) slot = candidate;
    return false;
}

/// Copies `additions_per_generation` distinct random population members into
/// the archive, then evicts uniformly random members down to max_size.
inline void unstructured_update(UnstructuredArchive& archive, std::span<const Individual> population,
                                Rng& rng) {
    if (population.empty()) throw DomainError("unstructured_update: empty population");
    const std::size_t r = std::min(archive.additions_per_generation, population.size());

    // partial Fisher-Yates over indices
    std::vector<std::size_t> order(population.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 0; i < r; ++i) {
        const std::size_t j = i + rng.below(order.size() - i);
        std::swap(order[i], order[j]);
        archive.members.push_back(population[order[i]]);
    }

    if (archive.max_size) {
        while (archive.members.size() > *archive.max_size) {
            const std::size_t victim = rng.below(archive.members.size());
            archive.members[victim] = std::move(archive.members.back());
            archive.members.pop_back();
        }
    }
}

enum class ArchiveKind { None, UnstructuredUnbounded, UnstructuredBounded, Grid };

inline const char* to_string(ArchiveKind k) noexcept {
    switch (k) {
        case ArchiveKind::None: return "None";
        case ArchiveKind::UnstructuredUnbounded: return "UnstructuredUnbounded";
        case ArchiveKind::UnstructuredBounded: return "UnstructuredBounded";
        case ArchiveKind::Grid: return "Grid";
    }
    return "?";
}

struct ArchiveConfig {
    ArchiveKind kind = ArchiveKind::None;
    std::size_t max_size = 3000;
    std::size_t additions_per_generation = 6;
    int grid_resolution = 50;
    double epsilon = 0.05;
};

using Archive = std::variant<std::monostate, UnstructuredArchive, GridArchive>;

inline Archive make_archive(const ArchiveConfig& config, const SpiralParams& params) {
    switch (config.kind) {
        case ArchiveKind::None: return std::monostate{};
        case ArchiveKind::UnstructuredUnbounded:
            return UnstructuredArchive{{}, std::nullopt, config.additions_per_generation};
        case ArchiveKind::UnstructuredBounded:
            return UnstructuredArchive{{}, config.max_size, config.additions_per_generation};
        case ArchiveKind::Grid:
            return GridArchive::for_spiral(params, config.grid_resolution, config.epsilon);
    }
    return std::monostate{};
}

/// Archive contents in a deterministic order (insertion order, or cell order
/// for grids).
inline std::vector<Individual> archive_members(const Archive& archive) {
    std::vector<Individual> out;
    if (const auto* u = std::get_if<UnstructuredArchive>(&archive)) {
        out = u->members;
    } else if (const auto* g = std::get_if<GridArchive>(&archive)) {
        out.reserve(g->occupied);
        for (const auto& cell : g->cells)
            if (cell) out.push_back(*cell);
    }
    return out;
}

inline std::size_t archive_size(const Archive& archive) noexcept {
    if (const auto* u = std::get_if<UnstructuredArchive>(&archive)) return u->members.size();
    if (const auto* g = std::get_if<GridArchive>(&archive)) return g->occupied;
    return 0;
}

enum class SamplingMode { PopulationOnly, MixedRandom, MixedGuided };

inline const char* to_string(SamplingMode m) noexcept {
    switch (m) {
        case SamplingMode::PopulationOnly: return "PopulationOnly";
        case SamplingMode::MixedRandom: return "MixedRandom";
        case SamplingMode::MixedGuided: return "MixedGuided";
    }
    return "?";
}

struct SamplingStrategy {
    SamplingMode mode = SamplingMode::PopulationOnly;
    /// Fraction of parent slots drawn from the archive.
    double archive_fraction = 0.5;
    /// Mixing rate of the discovery score update.
    double tau = 0.5;

    double effective_fraction() const noexcept {
        return mode == SamplingMode::PopulationOnly ? 0.0 : archive_fraction;
    }

    std::size_t archive_slots(std::size_t n) const noexcept {
        return static_cast<std::size_t>(std::floor(effective_fraction() * static_cast<double>(n)));
    }
};

/// Draws `n` parents with replacement. floor(rho n) slots come from the
/// archive (uniformly, or proportionally to eta when guided; uniform if every
/// eta is zero), the rest uniformly from the population. An empty archive
/// sends every draw to the population.
inline std::vector<Individual> sample_parents(const SamplingStrategy& strategy,
                                              std::span<const Individual> population,
                                              std::span<const Individual> archive, std::size_t n,
                                              Rng& rng) {
    if (population.empty()) throw DomainError("sample_parents: empty population");
    std::vector<Individual> parents;
    parents.reserve(n);

    const std::size_t from_archive = archive.empty() ? 0 : std::min(n, strategy.archive_slots(n));
    if (from_archive > 0) {
        std::vector<double> cumulative;
        if (strategy.mode == SamplingMode::MixedGuided) {
            cumulative.reserve(archive.size());
            double running = 0.0;
            for (const auto& m : archive) cumulative.push_back(running += std::max(0.0, m.eta));
            if (running <= 0.0) cumulative.clear();
        }
        for (std::size_t i = 0; i < from_archive; ++i) {
            if (cumulative.empty()) {
                parents.push_back(archive[rng.below(archive.size())]);
            } else {
                const double target = rng.uniform() * cumulative.back();
                auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
                if (it == cumulative.end()) --it;
                parents.push_back(archive[static_cast<std::size_t>(it - cumulative.begin())]);
            }
        }
    }
    while (parents.size() < n) parents.push_back(population[rng.below(population.size())]);
    return parents;
}

struct OffspringDiscovery {
    IndividualId parent_id = 0;
    bool kappa = false;
};

/// Fresh term of the discovery update: each parent's share of all
/// discoveries (offspring landing in an empty cell) this generation. Shares
/// sum to 1 when there is at least one discovery and are all 0 otherwise.
inline std::unordered_map<IndividualId, double> discovery_shares(
    std::span<const Individual> parents, std::span<const OffspringDiscovery> offspring) {
    std::unordered_map<IndividualId, double> counts;
    for (const auto& p : parents) counts.emplace(p.id, 0.0);
    double total = 0.0;
    for (const auto& o : offspring) {
        auto it = counts.find(o.parent_id);
        if (it == counts.end()) {
            throw ConsistencyError("discovery update: offspring parent " + std::to_string(o.parent_id) +
                                   " is not in the parent population");
        }
        if (o.kappa) {
            it->second += 1.0;
            total += 1.0;
        }
    }
    for (auto& [id, c] : counts) c = total > 0.0 ? c / total : 0.0;
    return counts;
}

/// eta <- tau * eta + (1 - tau) * share, applied to every parent.
inline void update_discovery_scores(std::vector<Individual>& parents,
                                    std::span<const OffspringDiscovery> offspring, double tau) {
    const auto shares = discovery_shares(parents, offspring);
    for (auto& p : parents) p.eta = tau * p.eta + (1.0 - tau) * shares.at(p.id);
}

} // namespace nslab
