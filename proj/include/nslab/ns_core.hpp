#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "nslab/archive.hpp"
#include "nslab/errors.hpp"
#include "nslab/individual.hpp"
#include "nslab/rng.hpp"
#include "nslab/spiral.hpp"

namespace nslab {

struct EvolutionConfig {
    SpiralParams spiral;
    std::size_t pop_size = 30;       // M
    std::size_t offspring_size = 30; // N
    std::size_t k = 10;
    double sigma = 0.3;
    int g_max = 1000;
    Metric metric = Metric::Euclidean;
    GenotypeSpace genotype_space = GenotypeSpace::AngleSpace;
    double init_t0 = 15.0 * std::numbers::pi;
    std::uint64_t seed = 0;

    void validate() const {
        spiral.validate();
        if (pop_size < 1) throw ConfigError("evolution.pop_size", "must be >= 1");
        if (offspring_size < 1) throw ConfigError("evolution.offspring_size", "must be >= 1");
        if (k < 1) throw ConfigError("evolution.k", "must be >= 1");
        if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("evolution.sigma", "must be > 0");
        if (g_max < 0) throw ConfigError("evolution.g_max", "must be >= 0");
        if (!(init_t0 >= 0.0 && init_t0 <= spiral.t_max()))
            throw ConfigError("evolution.init_t0", "must lie in [0, alpha*pi]");
    }
};

/// One offspring of one generation, with the curve parameters of both ends.
struct LineageEntry {
    int generation = 0;
    IndividualId child_id = 0;
    IndividualId parent_id = 0;
    double child_t = 0.0;
    double parent_t = 0.0;
    /// Whether the child survived into the next population.
    bool selected = false;

    friend bool operator==(const LineageEntry&, const LineageEntry&) = default;
};

struct EvolutionState {
    int generation = 0;
    std::vector<Individual> population;
    Archive archive;
    Rng rng;
    std::vector<LineageEntry> lineage_log;
    IndividualId next_id = 0;
    /// Curve parameters of the offspring evaluated in the last step.
    std::vector<double> last_offspring_t;
};

/// All M individuals start at the genotype whose image is gamma(init_t0).
inline EvolutionState init_population(const EvolutionConfig& config, const ArchiveConfig& archive = {}) {
    config.validate();
    EvolutionState state;
    state.rng = Rng(config.seed);
    state.archive = make_archive(archive, config.spiral);
    const Genotype g0 = genotype_for_curve_parameter(config.init_t0, config.genotype_space, config.spiral);
    const BehaviorPoint b0 = map_genotype(g0, config.spiral);
    state.population.reserve(config.pop_size);
    for (std::size_t i = 0; i < config.pop_size; ++i) {
        Individual ind;
        ind.id = state.next_id++;
        ind.genotype = g0;
        ind.behavior = b0;
        state.population.push_back(ind);
    }
    return state;
}

/// Adds N(0, sigma^2) noise and clamps into the genotype space.
inline Genotype mutate(const Genotype& g, double sigma, const SpiralParams& params, Rng& rng) {
    Genotype out = g;
    out.value += sigma * rng.normal();
    return clamp_genotype(out, params);
}

inline double behavior_distance(const BehaviorPoint& p, const BehaviorPoint& q, Metric metric,
                                const SpiralParams& params) {
    return metric == Metric::Euclidean ? euclidean_distance(p, q) : geodesic_distance(p, q, params);
}

namespace detail {

/// Running set of the k smallest values, kept sorted ascending.
class KSmallest {
public:
    explicit KSmallest(std::size_t k) : k_(k) { values_.reserve(k + 1); }

    void offer(double d) {
        if (values_.size() == k_ && !(d < values_.back())) return;
        values_.insert(std::upper_bound(values_.begin(), values_.end(), d), d);
        if (values_.size() > k_) values_.pop_back();
    }

    /// Mean, accumulated in ascending order.
    double mean() const noexcept {
        if (values_.empty()) return 0.0;
        double sum = 0.0;
        for (double v : values_) sum += v;
        return sum / static_cast<double>(values_.size());
    }

private:
    std::size_t k_;
    std::vector<double> values_;
};

} // namespace detail

/// Mean distance from `subject` to its k nearest neighbours among
/// population and archive members. The subject's own population entry (same
/// id) is skipped; archive members are separate snapshots and always count.
/// Averages over whatever is available when fewer than k candidates exist;
/// 0 with no candidates.
inline double novelty_score(const Individual& subject, std::span<const Individual> population,
                            std::span<const Individual> archive_members, std::size_t k, Metric metric,
                            const SpiralParams& params) {
    detail::KSmallest best(k);
    for (const auto& other : population) {
        if (other.id == subject.id) continue;
        best.offer(behavior_distance(subject.behavior, other.behavior, metric, params));
    }
    for (const auto& other : archive_members)
        best.offer(behavior_distance(subject.behavior, other.behavior, metric, params));
    return best.mean();
}

/// Scores every member of `pool` (ids unique) against pool and archive.
/// Produces exactly the values of novelty_score, with arc lengths computed
/// once per member.
inline std::vector<double> score_pool(std::span<const Individual> pool,
                                      std::span<const Individual> archive_members, std::size_t k,
                                      Metric metric, const SpiralParams& params) {
    std::vector<const Individual*> candidates;
    candidates.reserve(pool.size() + archive_members.size());
    for (const auto& p : pool) candidates.push_back(&p);
    for (const auto& m : archive_members) candidates.push_back(&m);

    std::vector<double> arc;
    if (metric == Metric::Geodesic) {
        arc.reserve(candidates.size());
        for (const auto* c : candidates) arc.push_back(arc_length(0.0, c->behavior.t, params));
    }

    std::vector<double> scores(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        detail::KSmallest best(k);
        const Individual& subject = pool[i];
        for (std::size_t j = 0; j < candidates.size(); ++j) {
            if (j == i) continue;
            const double d = metric == Metric::Geodesic
                                 ? std::abs(arc[i] - arc[j])
                                 : euclidean_distance(subject.behavior, candidates[j]->behavior);
            best.offer(d);
        }
        scores[i] = best.mean();
    }
    return scores;
}

/// Orders survivors: higher novelty first, then newer birth generation, then
/// larger (newer) id.
inline bool survives_before(const Individual& lhs, const Individual& rhs) noexcept {
    if (lhs.novelty != rhs.novelty) return lhs.novelty > rhs.novelty;
    if (lhs.birth_generation != rhs.birth_generation) return lhs.birth_generation > rhs.birth_generation;
    return lhs.id > rhs.id;
}

/// One generation: sample parents, mutate each once, score population and
/// offspring against each other and the archive, keep the M most novel,
/// update the archive and (when guided) the discovery scores.
///
/// Offspring start with their parent's discovery score. Grid archives receive
/// every offspring, and an offspring counts as a discovery iff its cell was
/// empty when it was inserted. Unstructured archives receive random members
/// of the new population.
inline void step_generation(EvolutionState& state, const EvolutionConfig& config,
                            const SamplingStrategy& sampling) {
    const SpiralParams& params = config.spiral;
    const int next_generation = state.generation + 1;

    const std::vector<Individual> archived = archive_members(state.archive);
    const std::vector<Individual> parents =
        sample_parents(sampling, state.population, archived, config.offspring_size, state.rng);

    std::vector<Individual> offspring;
    offspring.reserve(parents.size());
    for (const auto& parent : parents) {
        Individual child;
        child.id = state.next_id++;
        child.genotype = mutate(parent.genotype, config.sigma, params, state.rng);
        child.behavior = map_genotype(child.genotype, params);
        child.eta = parent.eta;
        child.parent_id = parent.id;
        child.birth_generation = next_generation;
        offspring.push_back(child);
    }

    std::vector<Individual> pool;
    pool.reserve(state.population.size() + offspring.size());
    pool.insert(pool.end(), state.population.begin(), state.population.end());
    pool.insert(pool.end(), offspring.begin(), offspring.end());
    const std::vector<double> scores = score_pool(pool, archived, config.k, config.metric, params);
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i].novelty = scores[i];

    if (auto* grid = std::get_if<GridArchive>(&state.archive)) {
        std::vector<OffspringDiscovery> discoveries;
        discoveries.reserve(offspring.size());
        for (std::size_t i = 0; i < offspring.size(); ++i) {
            const Individual& child = pool[state.population.size() + i];
            discoveries.push_back({*child.parent_id, grid_insert(*grid, child, state.rng)});
        }
        if (sampling.mode == SamplingMode::MixedGuided) {
            // parent population: current members plus parents drawn from the archive
            std::vector<Individual> parent_set(state.population);
            std::unordered_set<IndividualId> seen;
            for (const auto& p : parent_set) seen.insert(p.id);
            for (const auto& p : parents)
                if (seen.insert(p.id).second) parent_set.push_back(p);
            update_discovery_scores(parent_set, discoveries, sampling.tau);

            std::unordered_map<IndividualId, double> eta;
            for (const auto& p : parent_set) eta[p.id] = p.eta;
            for (std::size_t i = 0; i < state.population.size(); ++i) pool[i].eta = eta.at(pool[i].id);
            for (auto& cell : grid->cells) {
                if (!cell) continue;
                if (auto it = eta.find(cell->id); it != eta.end()) cell->eta = it->second;
            }
        }
    }

    std::sort(pool.begin(), pool.end(), survives_before);
    pool.resize(config.pop_size);

    std::unordered_set<IndividualId> survivors;
    for (const auto& p : pool) survivors.insert(p.id);
    state.last_offspring_t.clear();
    for (std::size_t i = 0; i < offspring.size(); ++i) {
        const Individual& child = offspring[i];
        const Individual& parent = parents[i];
        state.lineage_log.push_back({next_generation, child.id, parent.id, child.behavior.t,
                                     parent.behavior.t, survivors.contains(child.id)});
        state.last_offspring_t.push_back(child.behavior.t);
    }

    state.population = std::move(pool);
    if (auto* u = std::get_if<UnstructuredArchive>(&state.archive))
        unstructured_update(*u, state.population, state.rng);
    state.generation = next_generation;
}

} // namespace nslab
