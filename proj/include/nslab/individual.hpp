#pragma once

#include <cstdint>
#include <optional>

#include "nslab/spiral.hpp"

namespace nslab {

using IndividualId = std::uint64_t;

struct Individual {
    IndividualId id = 0;
    Genotype genotype;
    BehaviorPoint behavior;
    double novelty = 0.0;
    /// Temporary discovery score, in [0, 1].
    double eta = 0.0;
    std::optional<IndividualId> parent_id;
    int birth_generation = 0;

    friend bool operator==(const Individual&, const Individual&) = default;
};

enum class Metric { Euclidean, Geodesic };

inline const char* to_string(Metric m) noexcept {
    return m == Metric::Euclidean ? "Euclidean" : "Geodesic";
}

} // namespace nslab
