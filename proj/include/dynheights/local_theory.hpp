#pragma once
// Local escape rates, canonical heights, and per-place critical data.
//
// Everything here returns certified objects. At a finite place the escape rate
// is an exact formal log once the orbit leaves the escape radius, exactly zero
// under a boundedness certificate, and otherwise an upper bound that shrinks
// like d^-cap. At the archimedean place results are enclosing intervals of
// requested width, except where a rational invariant interval or a revisit
// proves the value is exactly zero.

#include <optional>
#include <vector>

#include "dynheights/dynamics.hpp"
#include "dynheights/newton.hpp"

namespace dynheights {

struct LocalEscape {
    enum class Kind {
        Exact,         // value holds the number itself
        BoundedAbove,  // true value lies in [0, value]; value is a formal bound
        ArchEnclosure  // value.arch is a certified interval containing the number
    };

    Place v = Place::arch();
    Kind kind = Kind::Exact;
    ExactLog value;
    long iterations = 0;

    bool exact() const { return kind == Kind::Exact; }
};

// Escape rate of the orbit of P at the place v. tol controls archimedean
// interval width; cap bounds the iteration count before the bounded-above
// fallback. Exact outcomes: escape past the local radius, a revisit, a good
// place (where no orbit can escape), or an invariant-interval certificate.
LocalEscape escape_rate(const PolyMap& f, const FieldElement& P, const Place& v,
                        double tol = 1e-9, long cap = 64);

// Sum of r_v * escape_rate over all places. The formal part collects the exact
// finite contributions; the interval slot absorbs the archimedean enclosure
// and any bounded-above slack. Exactly zero iff the orbit is preperiodic.
ExactLog canonical_height(const PolyMap& f, const FieldElement& P,
                          double tol = 1e-9, long cap = 64);

// Largest escape rate over the critical points of f, at one place. Critical
// points are never constructed: at finite places the size of the largest n-th
// critical value is read off the Newton polygon of the critical-value char
// poly, at the archimedean place off two-sided coefficient bounds for the same
// polynomial carried in interval arithmetic (rational critical points, when f'
// splits, are handled exactly instead).
LocalEscape lambda_crit_local(const PolyMap& f, const Place& v,
                              double tol = 1e-9, long cap = 64);

struct PlaceCritical {
    Place v;
    LocalEscape lambda;
    bool is_bad = false;   // lambda_crit known exactly positive
    bool in_sd = false;    // residue characteristic divides some k <= degree
    std::optional<ExactLog> g_v;  // splitting radius; recorded only off S_d
};

struct CriticalHeightReport {
    Mode mode = Mode::Q;
    long degree = 0;
    std::vector<PlaceCritical> entries;      // finite places, sorted
    std::optional<LocalEscape> arch;         // present over Q
    ExactLog h_crit;
    std::vector<Place> bad_places;
};

CriticalHeightReport critical_report(const PolyMap& f, double tol = 1e-9, long cap = 64);

// Exact comparison sum_{S'} lambda_crit >= delta * sum_S lambda_crit, where S
// is the bad set of the report away from S_d. Throws if s_prime is not
// contained in S.
struct DeltaSlice {
    Rat delta;
    std::vector<Place> s_prime;
    ExactLog slice_sum;
    ExactLog total_sum;
    bool holds = false;
};

DeltaSlice delta_slice(const CriticalHeightReport& rep,
                       const std::vector<Place>& s_prime, const Rat& delta);
bool delta_slice_check(const CriticalHeightReport& rep,
                       const std::vector<Place>& s_prime, const Rat& delta);

// Over Q(t): true iff the critical escape rate vanishes at every place, which
// this decides exactly (residue characteristic zero is tame, so vanishing at v
// is equivalent to the centered-monic model being integral at v). Throws over Q.
bool is_isotrivial(const PolyMap& f);

}  // namespace dynheights
