#include <cmath>
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "nslab/nslab.hpp"
#include "oracles.hpp"

using namespace nslab;
using std::numbers::pi;

namespace {

Individual at(double t, IndividualId id, const SpiralParams& p = {}) {
    Individual ind;
    ind.id = id;
    ind.genotype = genotype_for_curve_parameter(t, GenotypeSpace::AngleSpace, p);
    ind.behavior = spiral_point(t, p);
    return ind;
}

} // namespace

TEST(InitPopulation, IdenticalStart) {
    EvolutionConfig c;
    c.init_t0 = 15 * pi;
    const EvolutionState s = init_population(c);
    ASSERT_EQ(s.population.size(), 30u);
    std::set<IndividualId> ids;
    for (const auto& ind : s.population) {
        EXPECT_EQ(ind.behavior.t, 15 * pi);
        EXPECT_EQ(ind.behavior.x, s.population[0].behavior.x);
        ids.insert(ind.id);
    }
    EXPECT_EQ(ids.size(), 30u);
}

TEST(InitPopulation, OriginAndSingleton) {
    EvolutionConfig c;
    c.init_t0 = 0.0;
    c.pop_size = 1;
    c.genotype_space = GenotypeSpace::ArcLengthSpace;
    const EvolutionState s = init_population(c);
    ASSERT_EQ(s.population.size(), 1u);
    EXPECT_EQ(s.population[0].behavior.x, 0.0);
    EXPECT_EQ(s.population[0].behavior.y, 0.0);
    EXPECT_EQ(novelty_score(s.population[0], s.population, {}, 10, Metric::Euclidean, c.spiral), 0.0);
}

TEST(EvolutionConfig, Validation) {
    EvolutionConfig c;
    c.sigma = -1.0;
    try {
        c.validate();
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(e.key().find("sigma"), std::string::npos);
    }
    c = {};
    c.init_t0 = 100.0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Mutate, SmallSigmaIsIdentity) {
    const SpiralParams p;
    Rng rng(1);
    const Genotype g{10.0, GenotypeSpace::AngleSpace};
    EXPECT_NEAR(mutate(g, 1e-300, p, rng).value, 10.0, 1e-290);
}

TEST(Mutate, InteriorStatistics) {
    const SpiralParams p;
    Rng rng(2);
    const Genotype g{40.0, GenotypeSpace::AngleSpace};
    const double sigma = 0.3;
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = mutate(g, sigma, p, rng).value - g.value;
        sum += d;
        sq += d * d;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    EXPECT_LT(std::abs(mean), 3 * sigma / std::sqrt(double(n)));
    EXPECT_NEAR(sd / sigma, 1.0, 0.02);
}

TEST(Mutate, StaysInBounds) {
    const SpiralParams p;
    Rng rng(3);
    for (auto space : {GenotypeSpace::AngleSpace, GenotypeSpace::ArcLengthSpace}) {
        Genotype lo{0.01, space}, hi{genotype_upper_bound(space, p) - 0.01, space};
        for (int i = 0; i < 1000; ++i) {
            lo = mutate(lo, 1.0, p, rng);
            hi = mutate(hi, 1.0, p, rng);
            EXPECT_GE(lo.value, 0.0);
            EXPECT_LE(hi.value, genotype_upper_bound(space, p));
        }
    }
}

TEST(Novelty, CoincidentNeighbour) {
    const SpiralParams p;
    const std::vector<Individual> pop{at(5.0, 0), at(5.0, 1)};
    EXPECT_EQ(novelty_score(pop[0], pop, {}, 1, Metric::Euclidean, p), 0.0);
}

TEST(Novelty, ThreePointConfiguration) {
    const SpiralParams p;
    const std::vector<Individual> pop{at(0.0, 0), at(pi / 2, 1), at(pi, 2)};
    // |gamma(pi/2)| = a pi/2, |gamma(pi)| = a pi
    const double expected = (0.01 * pi / 2 + 0.01 * pi) / 2;
    EXPECT_NEAR(novelty_score(pop[0], pop, {}, 2, Metric::Euclidean, p), expected, 1e-15);
    EXPECT_NEAR(score_pool(pop, {}, 2, Metric::Euclidean, p)[0], expected, 1e-15);
}

TEST(Novelty, TruncatesToAvailableNeighbours) {
    const SpiralParams p;
    const std::vector<Individual> pop{at(0.0, 0), at(pi, 1)};
    EXPECT_NEAR(novelty_score(pop[0], pop, {}, 10, Metric::Euclidean, p), 0.01 * pi, 1e-15);
}

TEST(Novelty, BruteForceOracleExact) {
    const SpiralParams p;
    Rng rng(42);
    for (int inst = 0; inst < 100; ++inst) {
        const std::size_t n = 2 + rng.below(35);
        const std::size_t na = rng.below(50 - n + 1);
        const std::size_t k = 1 + rng.below(20);
        const Metric metric = inst % 2 ? Metric::Geodesic : Metric::Euclidean;
        std::vector<Individual> pool, archive;
        for (std::size_t i = 0; i < n; ++i) pool.push_back(at(rng.uniform() * p.t_max(), i));
        for (std::size_t i = 0; i < na; ++i) {
            // archive snapshots may share ids with pool members
            archive.push_back(rng.bernoulli(0.3) ? pool[rng.below(n)] : at(rng.uniform() * p.t_max(), 1000 + i));
        }
        const auto scores = score_pool(pool, archive, k, metric, p);
        for (std::size_t i = 0; i < n; ++i) {
            const double expect = oracle::novelty(i, pool, archive, k, metric, p);
            EXPECT_EQ(scores[i], expect) << "instance " << inst << " subject " << i;
            EXPECT_EQ(novelty_score(pool[i], pool, archive, k, metric, p), expect);
        }
    }
}

TEST(Selection, SingleParentSingleChild) {
    EvolutionConfig c;
    c.pop_size = 1;
    c.offspring_size = 1;
    c.k = 1;
    c.seed = 9;
    EvolutionState s = init_population(c);
    step_generation(s, c, {});
    ASSERT_EQ(s.population.size(), 1u);
    ASSERT_EQ(s.lineage_log.size(), 1u);
    // parent and child see only each other: equal novelty, child wins the tie
    EXPECT_EQ(s.population[0].id, s.lineage_log[0].child_id);
    EXPECT_TRUE(s.lineage_log[0].selected);
}

TEST(Selection, TieBreakPrefersNewer) {
    Individual a, b;
    a.novelty = b.novelty = 1.0;
    a.birth_generation = 3;
    b.birth_generation = 2;
    a.id = 1;
    b.id = 7;
    EXPECT_TRUE(survives_before(a, b));
    b.birth_generation = 3;
    EXPECT_TRUE(survives_before(b, a));
    b.novelty = 0.5;
    EXPECT_TRUE(survives_before(a, b));
}

TEST(StepGeneration, StructuralPostconditions) {
    EvolutionConfig c;
    c.seed = 5;
    EvolutionState s = init_population(c, {ArchiveKind::UnstructuredUnbounded});
    for (int g = 1; g <= 25; ++g) {
        const auto before = s.population;
        step_generation(s, c, {});
        EXPECT_EQ(s.generation, g);
        EXPECT_EQ(s.population.size(), c.pop_size);
        EXPECT_EQ(s.lineage_log.size(), c.offspring_size * static_cast<std::size_t>(g));
        EXPECT_EQ(archive_size(s.archive), 6u * static_cast<std::size_t>(g));

        // behaviour always equals the image of the genotype
        for (const auto& ind : s.population) {
            const BehaviorPoint b = map_genotype(ind.genotype, c.spiral);
            EXPECT_EQ(b.t, ind.behavior.t);
            EXPECT_EQ(b.x, ind.behavior.x);
        }

        // survivors are the M most novel of the pool, so none outranks a discarded member
        std::set<IndividualId> kept;
        for (const auto& ind : s.population) kept.insert(ind.id);
        std::size_t selected = 0;
        for (std::size_t i = s.lineage_log.size() - c.offspring_size; i < s.lineage_log.size(); ++i) {
            const auto& e = s.lineage_log[i];
            EXPECT_EQ(e.selected, kept.contains(e.child_id));
            selected += e.selected ? 1 : 0;
            EXPECT_EQ(e.generation, g);
        }
        std::size_t carried = 0;
        for (const auto& ind : before) carried += kept.contains(ind.id) ? 1 : 0;
        EXPECT_EQ(carried + selected, c.pop_size);
    }
}

TEST(StepGeneration, SelectionIsTruncation) {
    // rescoring the pool reproduces the survivors as the top M
    EvolutionConfig c;
    c.seed = 17;
    EvolutionState s = init_population(c);
    for (int g = 0; g < 40; ++g) step_generation(s, c, {});
    const auto before = s.population;
    const auto rng_before = s.rng;
    step_generation(s, c, {});

    Rng rng = rng_before;
    const auto parents = sample_parents({}, before, {}, c.offspring_size, rng);
    std::vector<Individual> pool(before);
    IndividualId next = s.lineage_log[s.lineage_log.size() - c.offspring_size].child_id;
    for (const auto& par : parents) {
        Individual child;
        child.id = next++;
        child.genotype = mutate(par.genotype, c.sigma, c.spiral, rng);
        child.behavior = map_genotype(child.genotype, c.spiral);
        child.birth_generation = s.generation;
        pool.push_back(child);
    }
    for (std::size_t i = 0; i < pool.size(); ++i)
        pool[i].novelty = oracle::novelty(i, pool, {}, c.k, c.metric, c.spiral);
    std::sort(pool.begin(), pool.end(), survives_before);
    ASSERT_EQ(s.population.size(), c.pop_size);
    for (std::size_t i = 0; i < c.pop_size; ++i) {
        EXPECT_EQ(s.population[i].id, pool[i].id);
        EXPECT_EQ(s.population[i].novelty, pool[i].novelty);
    }
}

TEST(StepGeneration, Deterministic) {
    EvolutionConfig c;
    c.seed = 77;
    c.metric = Metric::Geodesic;
    c.genotype_space = GenotypeSpace::ArcLengthSpace;
    const SamplingStrategy guided{SamplingMode::MixedGuided};
    EvolutionState x = init_population(c, {ArchiveKind::Grid}), y = init_population(c, {ArchiveKind::Grid});
    for (int g = 0; g < 60; ++g) {
        step_generation(x, c, guided);
        step_generation(y, c, guided);
    }
    EXPECT_EQ(x.lineage_log, y.lineage_log);
    EXPECT_TRUE(x.rng == y.rng);
    ASSERT_EQ(x.population.size(), y.population.size());
    for (std::size_t i = 0; i < x.population.size(); ++i) {
        EXPECT_EQ(x.population[i].id, y.population[i].id);
        EXPECT_EQ(x.population[i].eta, y.population[i].eta);
    }
}

TEST(StepGeneration, GuidedEtaStaysNormalised) {
    EvolutionConfig c;
    c.seed = 8;
    const SamplingStrategy guided{SamplingMode::MixedGuided};
    EvolutionState s = init_population(c, {ArchiveKind::Grid});
    for (int g = 0; g < 200; ++g) {
        step_generation(s, c, guided);
        for (const auto& ind : s.population) {
            EXPECT_GE(ind.eta, 0.0);
            EXPECT_LE(ind.eta, 1.0);
        }
        for (const auto& m : archive_members(s.archive)) {
            EXPECT_GE(m.eta, 0.0);
            EXPECT_LE(m.eta, 1.0);
        }
    }
}

TEST(Rng, StreamIsReproducible) {
    Rng a(123), b(123), c(124);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
    EXPECT_NE(a(), c());
    Rng r(5);
    for (int i = 0; i < 10000; ++i) {
        EXPECT_LT(r.below(7), 7u);
        const double u = r.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
}
