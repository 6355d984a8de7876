#pragma once

#include <array>
#include <string_view>

namespace dbn {

struct Interval {
    double start = 0.0;
    double end = 0.0;
};

/// The thirteen qualitative relations between two proper intervals.
enum class AllenRelation {
    Precedes,
    PrecededBy,
    Meets,
    MetBy,
    Overlaps,
    OverlappedBy,
    Starts,
    StartedBy,
    During,
    Contains,
    Finishes,
    FinishedBy,
    Equals,
};

inline constexpr std::array<AllenRelation, 13> kAllAllenRelations = {
    AllenRelation::Precedes,     AllenRelation::PrecededBy, AllenRelation::Meets,
    AllenRelation::MetBy,        AllenRelation::Overlaps,   AllenRelation::OverlappedBy,
    AllenRelation::Starts,       AllenRelation::StartedBy,  AllenRelation::During,
    AllenRelation::Contains,     AllenRelation::Finishes,   AllenRelation::FinishedBy,
    AllenRelation::Equals,
};

/// Relation of x to y. Throws InvalidIntervalError unless start < end for both.
AllenRelation allen_relation(const Interval& x, const Interval& y);

/// Relation r' such that r(x, y) implies r'(y, x).
AllenRelation inverse(AllenRelation r);

std::string_view to_string(AllenRelation r);

}  // namespace dbn
