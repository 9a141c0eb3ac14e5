#pragma once
// Adelically good differences, split quadruples across maximally separated
// disk components, cross-ratio tuples on the hyperplane sum(Y_i) = 0, and
// height-gap comparisons against the critical height. Verdicts involving
// archimedean data are three-valued; rounding never fabricates a pass.

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "dynheights/berkovich.hpp"
#include "dynheights/heights.hpp"
#include "dynheights/local_theory.hpp"

namespace dynheights {

// Two-condition goodness test for a nonzero alpha against a map f. With
// a_d the lead coefficient, s the symbolic scale (s^(d-1) = a_d), and vs the
// scale valuation, the test asks
//   sum over good finite places of (v(alpha) + vs) N_v    <=  eps h_crit
//   sum over S_d and archimedean places of r_v log|s alpha|_v >= -eps h_crit
// The first sum is an exact formal log. Over Q the second is too, since the
// archimedean log factors through the factorization of s^(d-1) alpha^(d-1).
struct AdelicGoodReport {
    FieldElement alpha;
    Rat eps;
    ExactLog good_sum;
    ExactLog s22_sum;
    ExactLog h_crit;
    Verdict good_places_ok = Verdict::Undetermined;
    Verdict wild_arch_ok = Verdict::Undetermined;
    Verdict verdict = Verdict::Undetermined;
};

// Evaluates the report against a precomputed critical-height report (shared
// across many alphas) or from scratch. Throws std::invalid_argument for
// alpha = 0 or eps < 0, and std::runtime_error if a support place cannot be
// classified exactly as good or bad.
AdelicGoodReport adelically_good(const CriticalHeightReport& rep, const PolyMap& f,
                                 const FieldElement& alpha, const Rat& eps);
AdelicGoodReport adelically_good(const PolyMap& f, const FieldElement& alpha,
                                 const Rat& eps, double tol = 1e-9);

struct PairGoodness {
    std::size_t i = 0;
    std::size_t j = 0;
    Verdict verdict = Verdict::Undetermined;
};

// Scan of all ordered pairs (i, j), i != j, testing P_i - P_j. Undetermined
// pairs count as not good, so the fraction is a certified lower bound.
struct GoodPairFraction {
    Rat fraction;
    long total = 0;
    long good = 0;
    long undetermined = 0;
    std::vector<PairGoodness> pairs;
};

GoodPairFraction good_pair_fraction(const PolyMap& f, const std::vector<FieldElement>& T,
                                    const Rat& eps, double tol = 1e-9);

// Quadruples (a, b, c, d) with a, b sample points in one level-1 component,
// c, d in another, where the two components sit at the full splitting radius:
// the monic-frame distance exponent of the anchors equals the radius exponent.
// Deterministic order: component pairs by census order, members by sample
// index, both pair slots ordered. limit < 0 means unlimited. Place errors
// (good reduction, wild or archimedean place) propagate from the radius
// computation.
std::vector<std::array<FieldElement, 4>> find_split_quadruples(
    const PolyMap& f, const std::vector<FieldElement>& T, const Place& v,
    long limit = -1);

// x = m (a-d)(c-b) / ((a-b)(c-d)), its complement m - x computed through the
// three-term product identity
//   (a-c)(b-d) = (a-b)(c-d) + (a-d)(b-c),
// and the identity residual, returned so callers can observe it vanish.
// Inputs must be pairwise distinct and m nonzero.
struct CrossRatio {
    FieldElement x;
    FieldElement complement;  // m - x
    FieldElement residual;    // always exactly zero
};

CrossRatio plucker_cross_ratio(const FieldElement& a, const FieldElement& b,
                               const FieldElement& c, const FieldElement& d,
                               const FieldElement& m);

// (x_1, m_1 - x_1, ..., x_k, m_k - x_k, -sum m_j): a point on the hyperplane
// sum(Y_i) = 0 assembled from cross-ratios of the given quadruples. Heights
// and the radical come from the tuple report; gap = h - rad.
struct AbcdPoint {
    std::vector<FieldElement> coords;
    long k = 0;
    std::vector<long> multipliers;
    std::vector<std::array<FieldElement, 4>> sources;
    TupleHeightReport heights;
    ExactLog gap;
};

// multipliers empty means all 1; otherwise one positive integer per quadruple.
// Throws std::invalid_argument on degenerate inputs (zero coordinate,
// nonpositive multiplier, size mismatch, no quadruples).
AbcdPoint build_abcd_point(const std::vector<std::array<FieldElement, 4>>& quads,
                           const std::vector<long>& multipliers = {});

// Certified comparison gap >= ((1 - 4 eps) / 2) h_crit.
struct QualityReport {
    Rat eps;
    ExactLog gap;
    ExactLog threshold;
    Interval gap_box;
    Interval threshold_box;
    Verdict verdict = Verdict::Undetermined;
};

QualityReport quality_report(const AbcdPoint& P, const PolyMap& f, const Rat& eps,
                             double tol = 1e-9);

// Archimedean preimage-gap measurement: over the complex roots,
//   max over y in f^-3(alpha) of min over beta in f^-3(0) of log|y - beta|,
// as a certified interval from a root solve with residual-based inclusion
// disks. slack is the measured excess over -(1/(d-1)) lambda_crit at the
// archimedean place. Requires rational mode, degree <= 8, and an orbit check
// that 0 does not escape faster than the critical locus. alpha = 0 makes the
// two root sets coincide; the result is flagged and value is -infinity.
struct PreimageGap {
    bool coincident = false;
    Interval value;
    Interval slack;
    long degree = 0;           // degree of the iterated polynomial
    double max_radius = 0.0;   // largest certified inclusion radius
};

PreimageGap min_preimage_gap_arch(const PolyMap& f, const FieldElement& alpha,
                                  double tol = 1e-9);

std::string to_json_string(const AdelicGoodReport& rep);
std::string to_json_string(const GoodPairFraction& gp);
std::string to_json_string(const AbcdPoint& P);
std::string to_json_string(const QualityReport& q);

}  // namespace dynheights
