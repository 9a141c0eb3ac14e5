#include "dynheights/equidist.hpp"

#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dynheights {

namespace {

Rat dpow(long d, long m) { return Rat(pow_int(Int(d), static_cast<unsigned long>(m))); }

Rat coeff_at(const ExactLog& e, const Place& v) {
    auto it = e.formal.find(v);
    return it == e.formal.end() ? Rat(0) : it->second;
}

nlohmann::ordered_json stats_json(const ComponentStats& s) {
    nlohmann::ordered_json j;
    j["place"] = s.v.name();
    j["level"] = s.m;
    j["map_degree"] = s.map_degree;
    j["splitting_radius"] = nlohmann::ordered_json::array({s.v.name(), rat_to_string(s.g_hat)});
    j["total"] = s.total;
    j["unresolved"] = s.unresolved;
    auto arr = nlohmann::ordered_json::array();
    for (const ComponentCluster& c : s.clusters) {
        nlohmann::ordered_json cj;
        cj["anchor"] = field_to_string(c.anchor);
        cj["count"] = c.count;
        cj["degree"] = c.degree;
        cj["log_radius"] = rat_to_string(c.log_radius);
        arr.push_back(cj);
    }
    j["clusters"] = arr;
    return j;
}

}  // namespace

long ComponentStats::census_degree() const {
    long s = 0;
    for (const ComponentCluster& c : clusters) s += c.degree;
    return s;
}

bool ComponentStats::complete() const {
    return unresolved == 0 && Rat(census_degree()) == dpow(map_degree, m);
}

ComponentStats component_stats(const PolyMap& f, const std::vector<FieldElement>& T,
                               const Place& v, long m) {
    ComponentCensus census = components(f, T, m, v);
    ComponentStats s;
    s.v = v;
    s.m = m;
    s.map_degree = f.degree();
    s.g_hat = census.g_hat;
    s.total = static_cast<long>(T.size());
    s.unresolved = static_cast<long>(census.outside.size());
    for (const ComponentEntry& e : census.entries)
        s.clusters.push_back(ComponentCluster{e.anchor, static_cast<long>(e.members.size()),
                                              e.degree, e.log_radius});
    return s;
}

EquidistVerdict equidist_verdict(const ComponentStats& stats, const Rat& eps) {
    if (eps <= 0) throw std::invalid_argument("tolerance must be positive");
    if (!stats.complete()) return EquidistVerdict::Incomplete;
    Rat dm = dpow(stats.map_degree, stats.m);
    Rat total = Rat(stats.total);
    for (const ComponentCluster& c : stats.clusters) {
        Rat share = Rat(c.degree) / dm * total;
        Rat count = Rat(c.count);
        if (!((Rat(1) - eps) * share < count && count < (Rat(1) + eps) * share))
            return EquidistVerdict::Fail;
    }
    return EquidistVerdict::Pass;
}

bool is_eps_equidistributed(const ComponentStats& stats, const Rat& eps) {
    return equidist_verdict(stats, eps) == EquidistVerdict::Pass;
}

std::vector<Rat> k_vector(const ComponentStats& stats) {
    if (stats.total == 0) throw std::invalid_argument("empty sample");
    std::vector<Rat> k;
    for (const ComponentCluster& c : stats.clusters)
        k.push_back(Rat(c.count) / (Rat(stats.total) * Rat(c.degree)));
    return k;
}

PairwiseStat pairwise_stat(const PolyMap& f, const std::vector<FieldElement>& T,
                           const Place& v) {
    PairwiseStat p;
    p.v = v;
    p.g_hat = splitting_radius_exponent(f, v);
    p.log_diameter = pairwise_diameter(T, v);
    p.ratio = coeff_at(p.log_diameter, v) / p.g_hat;
    return p;
}

GlobalEquidistReport global_report(const PolyMap& f, const std::vector<FieldElement>& T,
                                   const Rat& eps, const Rat& delta, long m0, double tol) {
    GlobalEquidistReport out;
    out.eps = eps;
    out.delta = delta;
    out.m0 = m0;
    out.total = static_cast<long>(T.size());

    CriticalHeightReport rep = critical_report(f, tol);
    std::vector<Place> ref;
    for (const PlaceCritical& e : rep.entries)
        if (e.is_bad && !e.in_sd) ref.push_back(e.v);
    out.empty_reference = ref.empty();

    for (const Place& v : ref) {
        PlaceEquidist pe;
        pe.v = v;
        pe.stats = component_stats(f, T, v, m0);
        pe.verdict = equidist_verdict(pe.stats, eps);
        if (T.size() >= 2) pe.pairwise = pairwise_stat(f, T, v);
        if (pe.verdict == EquidistVerdict::Pass) out.passing.push_back(v);
        out.places.push_back(std::move(pe));
    }
    out.slice_holds = delta_slice_check(rep, out.passing, delta);

    if (!T.empty()) {
        ExactLog sum = ExactLog::zero();
        for (const FieldElement& P : T) sum += canonical_height(f, P, tol);
        ExactLog avg = (Rat(1) / Rat(out.total)) * sum;
        Interval den = rep.h_crit.enclosure();
        if (!den.contains_zero()) out.kappa = avg.enclosure() / den;
    }
    return out;
}

const char* verdict_name(EquidistVerdict v) {
    switch (v) {
        case EquidistVerdict::Pass: return "pass";
        case EquidistVerdict::Fail: return "fail";
        case EquidistVerdict::Incomplete: return "incomplete";
    }
    return "?";
}

std::string to_json_string(const ComponentStats& stats) { return stats_json(stats).dump(); }

std::string to_json_string(const GlobalEquidistReport& rep) {
    nlohmann::ordered_json j;
    j["eps"] = rat_to_string(rep.eps);
    j["delta"] = rat_to_string(rep.delta);
    j["level"] = rep.m0;
    j["total"] = rep.total;
    j["empty_reference"] = rep.empty_reference;
    j["slice_holds"] = rep.slice_holds;
    if (rep.kappa)
        j["kappa"] = nlohmann::ordered_json::array({rep.kappa->lo, rep.kappa->hi});
    else
        j["kappa"] = nullptr;
    auto passing = nlohmann::ordered_json::array();
    for (const Place& v : rep.passing) passing.push_back(v.name());
    j["passing"] = passing;
    auto places = nlohmann::ordered_json::array();
    for (const PlaceEquidist& pe : rep.places) {
        nlohmann::ordered_json pj;
        pj["place"] = pe.v.name();
        pj["verdict"] = verdict_name(pe.verdict);
        if (pe.pairwise) pj["pairwise_ratio"] = rat_to_string(pe.pairwise->ratio);
        pj["stats"] = stats_json(pe.stats);
        places.push_back(pj);
    }
    j["places"] = places;
    return j.dump();
}

std::string to_csv(const GlobalEquidistReport& rep) {
    std::ostringstream out;
    out << "place,level,anchor,count,degree,log_radius,verdict\n";
    for (const PlaceEquidist& pe : rep.places)
        for (const ComponentCluster& c : pe.stats.clusters)
            out << pe.v.name() << ',' << pe.stats.m << ',' << field_to_string(c.anchor) << ','
                << c.count << ',' << c.degree << ',' << rat_to_string(c.log_radius) << ','
                << verdict_name(pe.verdict) << '\n';
    return out.str();
}

}  // namespace dynheights
