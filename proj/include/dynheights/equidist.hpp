#pragma once
// Empirical equidistribution statistics of finite sample sets at bad places:
// how a sample T distributes over the level-m components of the iterated
// preimage of the minimal enclosing disk, the exact pairwise log-distance
// statistic measured against the splitting radius, and a global report
// combining per-place verdicts, a delta-slice check over the passing places,
// and a certified enclosure of the average-height ratio.

#include <optional>
#include <string>
#include <vector>

#include "dynheights/berkovich.hpp"
#include "dynheights/local_theory.hpp"

namespace dynheights {

struct ComponentCluster {
    FieldElement anchor;
    long count = 0;   // sample points in this component
    long degree = 1;  // covering degree onto the enclosing disk
    Rat log_radius;   // monic frame, units L_v
};

struct ComponentStats {
    Place v;
    long m = 1;
    long map_degree = 2;
    Rat g_hat;
    std::vector<ComponentCluster> clusters;
    long total = 0;       // |T|
    long unresolved = 0;  // samples outside the level-m set
    long census_degree() const;  // sum of cluster degrees, at most d^m
    bool complete() const;       // every component anchored and every sample resolved
};

// Partition T by level-m component, attaching covering degree and radius per
// cluster. Points outside the level-m set are counted, not rejected; place
// preconditions (bad reduction, residue characteristic above the degree) are
// enforced by the underlying component machinery.
ComponentStats component_stats(const PolyMap& f, const std::vector<FieldElement>& T,
                               const Place& v, long m);

// Pass: every component satisfies the strict two-sided count bounds
// (1-eps)(deg_i/d^m)|T| < count_i < (1+eps)(deg_i/d^m)|T|. Incomplete: the
// census misses components (degrees sum below d^m) or some samples are
// unresolved, so no strict verdict is possible. Fail: complete data violating
// a bound.
enum class EquidistVerdict { Pass, Fail, Incomplete };

EquidistVerdict equidist_verdict(const ComponentStats& stats, const Rat& eps);
bool is_eps_equidistributed(const ComponentStats& stats, const Rat& eps);

// Component masses k_i = count_i / (|T| * deg_i), normalized so that
// sum_i deg_i * k_i = 1 exactly when the census is complete.
std::vector<Rat> k_vector(const ComponentStats& stats);

// Exact pairwise log-distance statistic at a finite bad place: the mean
// pairwise log-distance of T and its ratio to the splitting radius.
struct PairwiseStat {
    Place v;
    ExactLog log_diameter;
    Rat g_hat;
    Rat ratio;
};

PairwiseStat pairwise_stat(const PolyMap& f, const std::vector<FieldElement>& T,
                           const Place& v);

struct PlaceEquidist {
    Place v;
    ComponentStats stats;
    EquidistVerdict verdict = EquidistVerdict::Incomplete;
    std::optional<PairwiseStat> pairwise;  // present when |T| >= 2
};

struct GlobalEquidistReport {
    Rat eps;
    Rat delta;
    long m0 = 1;
    long total = 0;
    bool empty_reference = false;  // no bad places outside S_d to test against
    std::vector<PlaceEquidist> places;
    std::vector<Place> passing;
    bool slice_holds = false;            // delta-slice over the passing places
    std::optional<Interval> kappa;       // (1/|T|) sum h_f(P) / h_crit enclosure
};

// Measure T against every bad place outside S_d at level m0: per-place
// verdicts, the exact delta-slice comparison over the passing places, and the
// average-height ratio as a certified interval (absent when T is empty or the
// critical height enclosure straddles zero).
GlobalEquidistReport global_report(const PolyMap& f, const std::vector<FieldElement>& T,
                                   const Rat& eps, const Rat& delta, long m0,
                                   double tol = 1e-9);

const char* verdict_name(EquidistVerdict v);

std::string to_json_string(const ComponentStats& stats);
std::string to_json_string(const GlobalEquidistReport& rep);
// one CSV row per (place, component)
std::string to_csv(const GlobalEquidistReport& rep);

}  // namespace dynheights
