#include "dbn/allen.hpp"

#include <string>

#include "dbn/errors.hpp"

namespace dbn {

namespace {

void require_proper(const Interval& i, const char* which) {
    if (!(i.start < i.end)) {
        throw InvalidIntervalError(std::string(which) + ": start " + std::to_string(i.start) +
                                   " is not before end " + std::to_string(i.end));
    }
}

}  // namespace

AllenRelation allen_relation(const Interval& x, const Interval& y) {
    require_proper(x, "x");
    require_proper(y, "y");

    if (x.end < y.start) return AllenRelation::Precedes;
    if (y.end < x.start) return AllenRelation::PrecededBy;
    if (x.end == y.start) return AllenRelation::Meets;
    if (y.end == x.start) return AllenRelation::MetBy;

    // The intervals now share a stretch of positive length.
    if (x.start == y.start) {
        if (x.end == y.end) return AllenRelation::Equals;
        return x.end < y.end ? AllenRelation::Starts : AllenRelation::StartedBy;
    }
    if (x.end == y.end) {
        return x.start > y.start ? AllenRelation::Finishes : AllenRelation::FinishedBy;
    }
    if (x.start < y.start) {
        return x.end < y.end ? AllenRelation::Overlaps : AllenRelation::Contains;
    }
    return x.end < y.end ? AllenRelation::During : AllenRelation::OverlappedBy;
}

AllenRelation inverse(AllenRelation r) {
    switch (r) {
        case AllenRelation::Precedes: return AllenRelation::PrecededBy;
        case AllenRelation::PrecededBy: return AllenRelation::Precedes;
        case AllenRelation::Meets: return AllenRelation::MetBy;
        case AllenRelation::MetBy: return AllenRelation::Meets;
        case AllenRelation::Overlaps: return AllenRelation::OverlappedBy;
        case AllenRelation::OverlappedBy: return AllenRelation::Overlaps;
        case AllenRelation::Starts: return AllenRelation::StartedBy;
        case AllenRelation::StartedBy: return AllenRelation::Starts;
        case AllenRelation::During: return AllenRelation::Contains;
        case AllenRelation::Contains: return AllenRelation::During;
        case AllenRelation::Finishes: return AllenRelation::FinishedBy;
        case AllenRelation::FinishedBy: return AllenRelation::Finishes;
        case AllenRelation::Equals: return AllenRelation::Equals;
    }
    return r;
}

std::string_view to_string(AllenRelation r) {
    switch (r) {
        case AllenRelation::Precedes: return "precedes";
        case AllenRelation::PrecededBy: return "preceded-by";
        case AllenRelation::Meets: return "meets";
        case AllenRelation::MetBy: return "met-by";
        case AllenRelation::Overlaps: return "overlaps";
        case AllenRelation::OverlappedBy: return "overlapped-by";
        case AllenRelation::Starts: return "starts";
        case AllenRelation::StartedBy: return "started-by";
        case AllenRelation::During: return "during";
        case AllenRelation::Contains: return "contains";
        case AllenRelation::Finishes: return "finishes";
        case AllenRelation::FinishedBy: return "finished-by";
        case AllenRelation::Equals: return "equals";
    }
    return "unknown";
}

}  // namespace dbn
