#pragma once

#include <stdexcept>
#include <vector>

#include "dynheights/places.hpp"
#include "dynheights/rational.hpp"

namespace dynheights {

// Lower Newton polygon of a polynomial, given the valuations of its
// coefficients (index i = valuation of the coefficient of x^i, infinity for a
// zero coefficient; the leading entry must be finite). A segment of slope mu
// and horizontal length L accounts for L roots of valuation -mu, in any field
// where the polynomial splits. Segments are stored with strictly increasing
// slopes; roots at zero show up as zero_roots, not as a segment.
struct NewtonSegment {
    Rat slope;
    long length;
};

struct NewtonPolygon {
    long zero_roots = 0;
    std::vector<NewtonSegment> segments;

    long degree() const {
        long n = zero_roots;
        for (const auto& s : segments) n += s.length;
        return n;
    }

    bool all_roots_zero() const { return segments.empty(); }

    // valuation of the smallest-valuation (largest) roots
    Rat min_root_valuation() const {
        if (segments.empty())
            throw std::logic_error("newton polygon: every root is zero");
        return -segments.back().slope;
    }

    // number of roots z with v(z) >= gamma (zero roots always count)
    long count_valuation_at_least(const Rat& gamma) const {
        long n = zero_roots;
        for (const auto& s : segments)
            if (-s.slope >= gamma) n += s.length;
        return n;
    }
};

inline NewtonPolygon newton_polygon(const std::vector<ValExt>& vals) {
    if (vals.empty() || vals.back().inf)
        throw std::invalid_argument("newton polygon: leading coefficient must be nonzero");

    long deg = static_cast<long>(vals.size()) - 1;
    long i0 = 0;
    while (vals[i0].inf) ++i0;

    NewtonPolygon out;
    out.zero_roots = i0;
    if (i0 == deg) return out;

    // monotone chain over the finite points (i, v_i), keeping the lower hull
    std::vector<std::pair<long, Rat>> hull;
    for (long i = i0; i <= deg; ++i) {
        if (vals[i].inf) continue;
        std::pair<long, Rat> pt{i, vals[i].v};
        while (hull.size() >= 2) {
            const auto& a = hull[hull.size() - 2];
            const auto& b = hull[hull.size() - 1];
            // pop b unless slope(a,b) < slope(b,pt)
            Rat lhs = (b.second - a.second) * Rat(pt.first - b.first);
            Rat rhs = (pt.second - b.second) * Rat(b.first - a.first);
            if (lhs < rhs) break;
            hull.pop_back();
        }
        hull.push_back(pt);
    }

    for (size_t k = 0; k + 1 < hull.size(); ++k) {
        Rat slope = (hull[k + 1].second - hull[k].second) / Rat(hull[k + 1].first - hull[k].first);
        out.segments.push_back({slope, hull[k + 1].first - hull[k].first});
    }
    return out;
}

}  // namespace dynheights
