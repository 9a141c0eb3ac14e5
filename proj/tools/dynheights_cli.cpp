// Command-line driver: heights, orbits, preperiodic censuses, critical data,
// component/equidistribution statistics, abcd-tuple reports, parameter sweeps,
// and an invariant selftest. Every command renders an aligned text report to
// stdout and a JSON document to --out (a path, or "-" for stdout instead of
// the text). Exit codes: 0 success, 2 bad flags/config/preconditions, 3 when
// --strict is set and some verdict came back undetermined or incomplete.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dynheights/abcd.hpp"
#include "dynheights/berkovich.hpp"
#include "dynheights/dynamics.hpp"
#include "dynheights/equidist.hpp"
#include "dynheights/heights.hpp"
#include "dynheights/local_theory.hpp"
#include "dynheights/polyfactor.hpp"

using namespace dynheights;
using nlohmann::ordered_json;

namespace {

struct Opts {
    std::string mode = "Q";
    std::string map;
    std::string eps = "1/10";
    std::string delta = "1/2";
    long level = 1;
    double tol = 1e-9;
    long cap = 64;
    bool cap_given = false;
    std::string out;
    bool csv = false;
    bool strict = false;
    unsigned long long seed = 20260816ull;
    std::string points;
    std::string place;
    std::string alpha;
    std::vector<std::string> quads;
    std::vector<long> ms;
    bool pairs = false;
    std::vector<std::string> coords;  // heights positional
    std::string point;                // orbit positional
    long sweep_degree = 2;
    long sweep_den = 4;
    long sweep_min = -8;
    long sweep_max = 8;
};

// ---------------------------------------------------------------- parsing --

Mode parse_mode(const std::string& s) {
    if (s == "Q") return Mode::Q;
    if (s == "Qt" || s == "Q(t)") return Mode::Qt;
    throw std::invalid_argument("mode: expected Q or Q(t), got '" + s + "'");
}

Rat parse_rat(const std::string& s, const std::string& what) {
    try {
        return rat_from_string(s);
    } catch (const std::exception&) {
        throw std::invalid_argument(what + ": '" + s + "' is not a rational");
    }
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<FieldElement> parse_points(const std::string& s, Mode mode) {
    if (s.empty()) throw std::invalid_argument("points: empty list");
    std::vector<FieldElement> out;
    for (const std::string& tok : split(s, ',')) out.push_back(parse_field(tok, mode));
    return out;
}

Place parse_place(const std::string& s, Mode mode) {
    if (s.empty()) throw std::invalid_argument("place: empty name");
    if (s == "arch") {
        if (mode != Mode::Q) throw std::invalid_argument("place: no archimedean place over Q(t)");
        return Place::arch();
    }
    if (mode == Mode::Q) {
        Int p;
        try {
            p = Int(s);
        } catch (const std::exception&) {
            throw std::invalid_argument("place: '" + s + "' is not a prime (mode Q)");
        }
        if (p < 2 || mpz_probab_prime_p(p.get_mpz_t(), 30) == 0)
            throw std::invalid_argument("place: " + s + " is not prime");
        return Place::prime(p);
    }
    if (s == "t-inf") return Place::ff_inf();
    QPoly pi = parse_qpoly(s);
    if (pi.degree() < 1 || pi.lead() != 1)
        throw std::invalid_argument("place: '" + s + "' must be a monic polynomial in t");
    auto fac = factor_qpoly(pi);
    if (fac.size() != 1 || fac[0].second != 1 || !(fac[0].first == pi))
        throw std::invalid_argument("place: '" + s + "' is not irreducible");
    return Place::ff(pi);
}

PolyMap need_map(const Opts& o) {
    if (o.map.empty()) throw std::invalid_argument("map: --map is required for this command");
    return PolyMap::parse(o.map, parse_mode(o.mode));
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw std::invalid_argument("config: " + key + ": expected a boolean, got '" + v + "'");
}

long parse_long(const std::string& v, const std::string& key) {
    try {
        size_t used = 0;
        long x = std::stol(v, &used);
        if (used != v.size()) throw std::invalid_argument("");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: " + key + ": expected an integer, got '" + v + "'");
    }
}

// single-document key=value file; '#' comments; values may be double-quoted;
// 'quad' may repeat. Keys mirror the long flag names. Unknown keys rejected.
void load_config(const std::string& path, Opts& o) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("config: cannot open '" + path + "'");
    std::string line;
    long lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        ": expected key=value");
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        if (val.size() >= 2 && val.front() == '"' && val.back() == '"')
            val = val.substr(1, val.size() - 2);
        if (key == "mode") o.mode = val;
        else if (key == "map") o.map = val;
        else if (key == "eps") o.eps = val;
        else if (key == "delta") o.delta = val;
        else if (key == "level") o.level = parse_long(val, key);
        else if (key == "tol") o.tol = std::stod(val);
        else if (key == "cap") { o.cap = parse_long(val, key); o.cap_given = true; }
        else if (key == "out") o.out = val;
        else if (key == "csv") o.csv = parse_bool(val, key);
        else if (key == "strict") o.strict = parse_bool(val, key);
        else if (key == "seed") o.seed = std::stoull(val);
        else if (key == "points") o.points = val;
        else if (key == "place") o.place = val;
        else if (key == "alpha") o.alpha = val;
        else if (key == "quad") o.quads.push_back(val);
        else if (key == "m") {
            o.ms.clear();
            for (const std::string& tok : split(val, ',')) o.ms.push_back(parse_long(tok, key));
        }
        else if (key == "pairs") o.pairs = parse_bool(val, key);
        else if (key == "sweep-degree") o.sweep_degree = parse_long(val, key);
        else if (key == "sweep-den") o.sweep_den = parse_long(val, key);
        else if (key == "sweep-min") o.sweep_min = parse_long(val, key);
        else if (key == "sweep-max") o.sweep_max = parse_long(val, key);
        else
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        ": unknown key '" + key + "'");
    }
}

// -------------------------------------------------------------- rendering --

std::string fmt_g(double x) {
    char b[48];
    std::snprintf(b, sizeof b, "%.10g", x);
    return b;
}

std::string iv_str(const Interval& x) { return "[" + fmt_g(x.lo) + ", " + fmt_g(x.hi) + "]"; }

// exact symbolic form of an ExactLog: rational multiples of log p at Q-primes,
// rational multiples of the unit length L(pi) at function-field places, plus
// any archimedean interval (zero markers suppressed in text, kept in JSON)
std::string el_exact(const ExactLog& e) {
    std::vector<std::string> parts;
    for (const auto& [v, q] : e.formal) {
        if (q == 0) continue;
        std::string unit = v.kind == PlaceKind::FinitePrime ? "log " + v.name() : "L(" + v.name() + ")";
        parts.push_back(rat_to_string(q) + "·" + unit);
    }
    if (e.arch && !e.arch->is_zero()) parts.push_back(iv_str(*e.arch));
    if (parts.empty()) return "0";
    std::string out = parts[0];
    for (size_t i = 1; i < parts.size(); ++i) {
        if (parts[i][0] == '-')
            out += " - " + parts[i].substr(1);
        else
            out += " + " + parts[i];
    }
    return out;
}

std::string el_text(const ExactLog& e) {
    std::string exact = el_exact(e);
    Interval enc = e.enclosure();
    if (exact == "0" && enc.is_zero()) return "0";
    bool formal_empty = true;
    for (const auto& [v, q] : e.formal) formal_empty = formal_empty && q == 0;
    if (formal_empty) return iv_str(enc);  // the interval is already the exact content
    return exact + "  ≈ " + iv_str(enc);
}

ordered_json iv_json(const Interval& x) { return ordered_json::array({x.lo, x.hi}); }

ordered_json el_json(const ExactLog& e) {
    ordered_json j;
    auto formal = ordered_json::array();
    for (const auto& [v, q] : e.formal)
        if (q != 0) formal.push_back(ordered_json::array({v.name(), rat_to_string(q)}));
    j["formal"] = formal;
    j["arch"] = e.arch ? iv_json(*e.arch) : ordered_json();
    j["enclosure"] = iv_json(e.enclosure());
    return j;
}

size_t glyphs(const std::string& s) {
    size_t n = 0;
    for (unsigned char c : s)
        if ((c & 0xC0) != 0x80) ++n;
    return n;
}

struct Table {
    std::vector<std::vector<std::string>> rows;
    void add(std::vector<std::string> r) { rows.push_back(std::move(r)); }
    std::string render(int indent = 2) const {
        std::vector<size_t> w;
        for (const auto& r : rows) {
            if (w.size() < r.size()) w.resize(r.size(), 0);
            for (size_t i = 0; i < r.size(); ++i) w[i] = std::max(w[i], glyphs(r[i]));
        }
        std::string out;
        for (const auto& r : rows) {
            out.append(static_cast<size_t>(indent), ' ');
            for (size_t i = 0; i < r.size(); ++i) {
                out += r[i];
                if (i + 1 < r.size()) out.append(w[i] - glyphs(r[i]) + 2, ' ');
            }
            out += '\n';
        }
        return out;
    }
};

std::string join_places(const std::vector<Place>& ps, const char* sep = ", ") {
    if (ps.empty()) return "(none)";
    std::string out;
    for (size_t i = 0; i < ps.size(); ++i) {
        if (i) out += sep;
        out += ps[i].name();
    }
    return out;
}

std::string join_fields(const std::vector<FieldElement>& xs, const char* sep = ", ") {
    std::string out;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (i) out += sep;
        out += field_to_string(xs[i]);
    }
    return out;
}

int emit(const Opts& o, const ordered_json& j, const std::string& text) {
    if (o.out == "-") {
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    std::cout << text;
    if (!o.out.empty()) {
        std::ofstream f(o.out);
        if (!f) throw std::invalid_argument("out: cannot open '" + o.out + "'");
        f << j.dump(2) << "\n";
    }
    return 0;
}

const char* escape_kind_name(LocalEscape::Kind k) {
    switch (k) {
        case LocalEscape::Kind::Exact: return "exact";
        case LocalEscape::Kind::BoundedAbove: return "bounded-above";
        default: return "enclosure";
    }
}

// --------------------------------------------------------------- commands --

int cmd_heights(const Opts& o) {
    Mode mode = parse_mode(o.mode);
    std::vector<std::string> raw = o.coords;
    if (raw.empty() && !o.points.empty()) raw = split(o.points, ',');
    if (raw.empty())
        throw std::invalid_argument("heights: needs coordinate arguments or --points");
    std::vector<FieldElement> z;
    for (const std::string& s : raw) z.push_back(parse_field(s, mode));
    TupleHeightReport rep = height_tuple(z, mode);

    ordered_json j;
    j["command"] = "heights";
    j["mode"] = mode_name(mode);
    auto tup = ordered_json::array();
    for (const auto& x : rep.tuple) tup.push_back(field_to_string(x));
    j["tuple"] = tup;
    j["h"] = el_json(rep.h);
    j["finite_part"] = el_json(rep.finite_part);
    j["arch_part"] = el_json(rep.arch_part);
    auto sup = ordered_json::array();
    for (const auto& v : rep.support) sup.push_back(v.name());
    j["support"] = sup;
    j["rad"] = rep.rad ? el_json(*rep.rad) : ordered_json();
    j["gap"] = rep.rad ? el_json(rep.h - *rep.rad) : ordered_json();

    Table t;
    t.add({"tuple", "(" + join_fields(rep.tuple) + ")"});
    t.add({"h", el_text(rep.h)});
    t.add({"finite part", el_text(rep.finite_part)});
    t.add({"arch part", el_text(rep.arch_part)});
    t.add({"support I(P)", join_places(rep.support)});
    t.add({"rad", rep.rad ? el_text(*rep.rad) : "(zero coordinate)"});
    if (rep.rad) t.add({"gap h - rad", el_text(rep.h - *rep.rad)});
    std::string text = "tuple height report (mode " + std::string(mode_name(mode)) + ")\n" + t.render();
    return emit(o, j, text);
}

int cmd_orbit(const Opts& o) {
    PolyMap f = need_map(o);
    std::string raw = o.point.empty() ? o.points : o.point;
    if (raw.empty()) throw std::invalid_argument("orbit: needs a point argument or --points");
    FieldElement P = parse_field(raw, f.mode());
    OrbitCertificate cert = classify_orbit(f, P);
    ExactLog hhat = canonical_height(f, P, o.tol, o.cap);

    ordered_json j;
    j["command"] = "orbit";
    j["map"] = o.map;
    j["mode"] = mode_name(f.mode());
    j["point"] = field_to_string(P);
    j["kind"] = cert.preperiodic() ? "preperiodic" : "divergent";
    if (cert.preperiodic()) {
        j["tail"] = cert.tail;
        j["period"] = cert.period;
    } else {
        j["witness_place"] = cert.witness_place.name();
        j["witness_index"] = cert.witness_index;
    }
    auto orb = ordered_json::array();
    for (const auto& x : cert.orbit) orb.push_back(field_to_string(x));
    j["orbit"] = orb;
    j["canonical_height"] = el_json(hhat);

    Table t;
    t.add({"point", field_to_string(P)});
    t.add({"kind", cert.preperiodic() ? "preperiodic" : "divergent"});
    if (cert.preperiodic()) {
        t.add({"tail", std::to_string(cert.tail)});
        t.add({"period", std::to_string(cert.period)});
    } else {
        t.add({"witness place", cert.witness_place.name()});
        t.add({"witness index", std::to_string(cert.witness_index)});
    }
    std::string orbit_str;
    size_t shown = std::min<size_t>(cert.orbit.size(), 12);
    for (size_t i = 0; i < shown; ++i) {
        if (i) orbit_str += " -> ";
        orbit_str += field_to_string(cert.orbit[i]);
    }
    if (shown < cert.orbit.size()) orbit_str += " -> ...";
    t.add({"orbit", orbit_str});
    t.add({"canonical height", el_text(hhat)});
    std::string text = "orbit report  map " + o.map + "\n" + t.render();
    return emit(o, j, text);
}

int cmd_preperiodic(const Opts& o) {
    PolyMap f = need_map(o);
    Int cap = o.cap_given ? Int(o.cap) : Int(1000000);
    PreperiodicCensus census = enumerate_preperiodic(f, cap);

    ordered_json j;
    j["command"] = "preperiodic";
    j["map"] = o.map;
    j["mode"] = mode_name(f.mode());
    j["denominator_bound"] = census.denominator_bound.get_str();
    j["arch_bound"] = rat_to_string(census.arch_bound);
    j["candidate_count"] = census.candidate_count.get_str();
    j["count"] = census.points.size();
    auto pts = ordered_json::array();
    for (const auto& [p, cert] : census.points) {
        ordered_json e;
        e["point"] = field_to_string(p);
        e["tail"] = cert.tail;
        e["period"] = cert.period;
        auto orb = ordered_json::array();
        for (const auto& x : cert.orbit) orb.push_back(field_to_string(x));
        e["orbit"] = orb;
        pts.push_back(e);
    }
    j["points"] = pts;

    Table head;
    head.add({"denominator bound", census.denominator_bound.get_str()});
    head.add({"archimedean bound", rat_to_string(census.arch_bound)});
    head.add({"candidates searched", census.candidate_count.get_str()});
    head.add({"preperiodic points", std::to_string(census.points.size())});
    Table t;
    t.add({"point", "tail", "period"});
    for (const auto& [p, cert] : census.points)
        t.add({field_to_string(p), std::to_string(cert.tail), std::to_string(cert.period)});
    std::string text = "preperiodic census  map " + o.map + "\n" + head.render() + "\n" + t.render();
    return emit(o, j, text);
}

int cmd_crit(const Opts& o) {
    PolyMap f = need_map(o);
    CriticalHeightReport rep = critical_report(f, o.tol, o.cap);

    ordered_json j;
    j["command"] = "crit";
    j["map"] = o.map;
    j["mode"] = mode_name(rep.mode);
    j["degree"] = rep.degree;
    auto entries = ordered_json::array();
    for (const auto& e : rep.entries) {
        ordered_json ej;
        ej["place"] = e.v.name();
        ej["lambda"] = el_json(e.lambda.value);
        ej["kind"] = escape_kind_name(e.lambda.kind);
        ej["bad"] = e.is_bad;
        ej["in_sd"] = e.in_sd;
        ej["g_v"] = e.g_v ? el_json(*e.g_v) : ordered_json();
        entries.push_back(ej);
    }
    j["entries"] = entries;
    if (rep.arch) {
        ordered_json aj;
        aj["lambda"] = el_json(rep.arch->value);
        aj["kind"] = escape_kind_name(rep.arch->kind);
        j["arch"] = aj;
    } else {
        j["arch"] = ordered_json();
    }
    j["h_crit"] = el_json(rep.h_crit);
    auto bad = ordered_json::array();
    for (const auto& v : rep.bad_places) bad.push_back(v.name());
    j["bad_places"] = bad;

    Table t;
    t.add({"place", "lambda", "kind", "bad", "in_S_d", "g_v"});
    for (const auto& e : rep.entries)
        t.add({e.v.name(), el_text(e.lambda.value), escape_kind_name(e.lambda.kind),
               e.is_bad ? "yes" : "no", e.in_sd ? "yes" : "no",
               e.g_v ? el_exact(*e.g_v) : "-"});
    if (rep.arch)
        t.add({"arch", el_text(rep.arch->value), escape_kind_name(rep.arch->kind), "-", "-", "-"});
    Table s;
    s.add({"h_crit", el_text(rep.h_crit)});
    s.add({"bad places", join_places(rep.bad_places)});
    std::string text = "critical height report  map " + o.map + " (mode " +
                       mode_name(rep.mode) + ", degree " + std::to_string(rep.degree) + ")\n" +
                       t.render() + "\n" + s.render();
    return emit(o, j, text);
}

int cmd_components(const Opts& o) {
    PolyMap f = need_map(o);
    if (o.place.empty()) throw std::invalid_argument("components: --place is required");
    if (o.points.empty()) throw std::invalid_argument("components: --points is required");
    Place v = parse_place(o.place, f.mode());
    std::vector<FieldElement> T = parse_points(o.points, f.mode());
    ComponentCensus census = components(f, T, o.level, v);

    ordered_json j;
    j["command"] = "components";
    j["map"] = o.map;
    j["place"] = v.name();
    j["level"] = census.m;
    j["g_hat"] = rat_to_string(census.g_hat);
    auto entries = ordered_json::array();
    for (const auto& e : census.entries) {
        ordered_json ej;
        ej["anchor"] = field_to_string(e.anchor);
        ej["log_radius"] = rat_to_string(e.log_radius);
        ej["degree"] = e.degree;
        ej["members"] = e.members;
        entries.push_back(ej);
    }
    j["entries"] = entries;
    j["outside"] = census.outside;
    j["total_degree"] = census.total_degree();

    std::string text;
    if (o.csv) {
        std::string csv = "place,level,anchor,count,degree,log_radius\n";
        for (const auto& e : census.entries)
            csv += v.name() + "," + std::to_string(census.m) + "," + field_to_string(e.anchor) +
                   "," + std::to_string(e.members.size()) + "," + std::to_string(e.degree) +
                   "," + rat_to_string(e.log_radius) + "\n";
        text = csv;
    } else {
        Table head;
        head.add({"place", v.name()});
        head.add({"level", std::to_string(census.m)});
        head.add({"splitting radius g", rat_to_string(census.g_hat)});
        head.add({"total degree", std::to_string(census.total_degree())});
        Table t;
        t.add({"anchor", "log radius", "degree", "members"});
        for (const auto& e : census.entries) {
            std::string mem;
            for (size_t i = 0; i < e.members.size(); ++i) {
                if (i) mem += ",";
                mem += std::to_string(e.members[i]);
            }
            t.add({field_to_string(e.anchor), rat_to_string(e.log_radius),
                   std::to_string(e.degree), mem});
        }
        text = "component census  map " + o.map + "\n" + head.render() + "\n" + t.render();
        if (!census.outside.empty()) {
            std::string outs;
            for (size_t i = 0; i < census.outside.size(); ++i) {
                if (i) outs += ", ";
                outs += field_to_string(T[census.outside[i]]);
            }
            text += "  outside the level-" + std::to_string(census.m) + " set: " + outs + "\n";
        }
    }
    return emit(o, j, text);
}

int cmd_equidist(const Opts& o) {
    PolyMap f = need_map(o);
    Rat eps = parse_rat(o.eps, "eps");
    Rat delta = parse_rat(o.delta, "delta");
    std::vector<FieldElement> T;
    if (!o.points.empty()) {
        T = parse_points(o.points, f.mode());
    } else {
        for (const auto& [p, cert] : enumerate_preperiodic(f).points) T.push_back(p);
    }

    bool undetermined = false;
    ordered_json j;
    std::string text;

    if (!o.place.empty()) {
        Place v = parse_place(o.place, f.mode());
        ComponentStats stats = component_stats(f, T, v, o.level);
        EquidistVerdict verdict = equidist_verdict(stats, eps);
        undetermined = verdict == EquidistVerdict::Incomplete;
        j = ordered_json::parse(to_json_string(stats));
        j["eps"] = rat_to_string(eps);
        j["verdict"] = verdict_name(verdict);
        if (stats.complete()) {
            auto kv = ordered_json::array();
            for (const Rat& k : k_vector(stats)) kv.push_back(rat_to_string(k));
            j["k_vector"] = kv;
        }
        if (T.size() >= 2) {
            PairwiseStat pw = pairwise_stat(f, T, v);
            ordered_json pj;
            pj["log_diameter"] = el_json(pw.log_diameter);
            pj["g_hat"] = rat_to_string(pw.g_hat);
            pj["ratio"] = rat_to_string(pw.ratio);
            j["pairwise"] = pj;
        }
        if (o.csv) {
            text = "place,level,anchor,count,degree,log_radius,verdict\n";
            for (const auto& cl : stats.clusters)
                text += v.name() + "," + std::to_string(stats.m) + "," +
                        field_to_string(cl.anchor) + "," + std::to_string(cl.count) + "," +
                        std::to_string(cl.degree) + "," + rat_to_string(cl.log_radius) + "," +
                        verdict_name(verdict) + "\n";
        } else {
            Table head;
            head.add({"place", v.name()});
            head.add({"level", std::to_string(stats.m)});
            head.add({"samples", std::to_string(stats.total)});
            head.add({"unresolved", std::to_string(stats.unresolved)});
            head.add({"eps", rat_to_string(eps)});
            head.add({"verdict", verdict_name(verdict)});
            Table t;
            t.add({"anchor", "count", "degree", "log radius"});
            for (const auto& cl : stats.clusters)
                t.add({field_to_string(cl.anchor), std::to_string(cl.count),
                       std::to_string(cl.degree), rat_to_string(cl.log_radius)});
            text = "equidistribution census  map " + o.map + "\n" + head.render() + "\n" + t.render();
        }
    } else {
        GlobalEquidistReport rep = global_report(f, T, eps, delta, o.level, o.tol);
        for (const auto& pe : rep.places)
            if (pe.verdict == EquidistVerdict::Incomplete) undetermined = true;
        j = ordered_json::parse(to_json_string(rep));
        if (o.csv) {
            text = to_csv(rep);
        } else {
            Table head;
            head.add({"samples", std::to_string(rep.total)});
            head.add({"eps", rat_to_string(rep.eps)});
            head.add({"delta", rat_to_string(rep.delta)});
            head.add({"level", std::to_string(rep.m0)});
            if (rep.empty_reference) head.add({"note", "no bad places outside S_d to test"});
            Table t;
            t.add({"place", "verdict", "components", "pairwise ratio"});
            for (const auto& pe : rep.places)
                t.add({pe.v.name(), verdict_name(pe.verdict),
                       std::to_string(pe.stats.clusters.size()),
                       pe.pairwise ? rat_to_string(pe.pairwise->ratio) : "-"});
            Table tail;
            tail.add({"passing places", join_places(rep.passing)});
            tail.add({"delta slice holds", rep.slice_holds ? "yes" : "no"});
            tail.add({"height ratio kappa", rep.kappa ? iv_str(*rep.kappa) : "(unavailable)"});
            text = "equidistribution report  map " + o.map + "\n" + head.render() + "\n" +
                   t.render() + "\n" + tail.render();
        }
    }
    int rc = emit(o, j, text);
    if (rc == 0 && o.strict && undetermined) return 3;
    return rc;
}

int cmd_abcd(const Opts& o) {
    Rat eps = parse_rat(o.eps, "eps");
    bool undetermined = false;
    ordered_json j;
    std::string text;

    if (!o.quads.empty()) {
        Mode mode = parse_mode(o.mode);
        std::vector<std::array<FieldElement, 4>> quads;
        for (const std::string& qs : o.quads) {
            std::vector<std::string> parts = split(qs, ',');
            if (parts.size() != 4)
                throw std::invalid_argument("quad: '" + qs + "' must have four entries");
            quads.push_back({parse_field(parts[0], mode), parse_field(parts[1], mode),
                             parse_field(parts[2], mode), parse_field(parts[3], mode)});
        }
        AbcdPoint P = build_abcd_point(quads, o.ms);
        j = ordered_json::parse(to_json_string(P));
        j["command"] = "abcd";

        Table t;
        t.add({"tuple", "(" + join_fields(P.coords) + ")"});
        t.add({"quadruples", std::to_string(P.k)});
        t.add({"h", el_text(P.heights.h)});
        t.add({"rad", el_text(*P.heights.rad)});
        t.add({"gap h - rad", el_text(P.gap)});
        text = "abcd tuple report\n" + t.render();

        if (!o.map.empty()) {
            PolyMap f = need_map(o);
            QualityReport q = quality_report(P, f, eps, o.tol);
            undetermined = q.verdict == Verdict::Undetermined;
            j["quality"] = ordered_json::parse(to_json_string(q));
            Table qt;
            qt.add({"eps", rat_to_string(eps)});
            qt.add({"threshold (1-4eps)/2 · h_crit", el_text(q.threshold)});
            qt.add({"gap >= threshold", verdict_name(q.verdict)});
            text += "\n" + qt.render();
        }
    } else if (!o.alpha.empty()) {
        PolyMap f = need_map(o);
        FieldElement alpha = parse_field(o.alpha, f.mode());
        AdelicGoodReport rep = adelically_good(f, alpha, eps, o.tol);
        undetermined = rep.verdict == Verdict::Undetermined;
        j = ordered_json::parse(to_json_string(rep));
        j["command"] = "abcd";

        Table t;
        t.add({"alpha", field_to_string(rep.alpha)});
        t.add({"eps", rat_to_string(rep.eps)});
        t.add({"good-place sum", el_text(rep.good_sum)});
        t.add({"S_d and infinite sum", el_text(rep.s22_sum)});
        t.add({"h_crit", el_text(rep.h_crit)});
        t.add({"good places small", verdict_name(rep.good_places_ok)});
        t.add({"wild/arch controlled", verdict_name(rep.wild_arch_ok)});
        t.add({"adelically good", verdict_name(rep.verdict)});
        text = "adelic goodness report  map " + o.map + "\n" + t.render();
    } else if (o.pairs) {
        PolyMap f = need_map(o);
        std::vector<FieldElement> T;
        if (!o.points.empty()) {
            T = parse_points(o.points, f.mode());
        } else {
            for (const auto& [p, cert] : enumerate_preperiodic(f).points) T.push_back(p);
        }
        GoodPairFraction gp = good_pair_fraction(f, T, eps, o.tol);
        undetermined = gp.undetermined > 0;
        j = ordered_json::parse(to_json_string(gp));
        j["command"] = "abcd";

        Table t;
        t.add({"sample points", std::to_string(T.size())});
        t.add({"eps", rat_to_string(eps)});
        t.add({"ordered pairs", std::to_string(gp.total)});
        t.add({"adelically good", std::to_string(gp.good)});
        t.add({"undetermined", std::to_string(gp.undetermined)});
        t.add({"fraction", rat_to_string(gp.fraction)});
        text = "pair goodness report  map " + o.map + "\n" + t.render();
    } else {
        throw std::invalid_argument("abcd: needs --quad, --alpha, or --pairs");
    }
    int rc = emit(o, j, text);
    if (rc == 0 && o.strict && undetermined) return 3;
    return rc;
}

int cmd_sweep(const Opts& o) {
    if (parse_mode(o.mode) != Mode::Q)
        throw std::invalid_argument("sweep: only the rational family z^d + c is supported");
    if (o.sweep_degree < 2 || o.sweep_degree > 8)
        throw std::invalid_argument("sweep: degree must be between 2 and 8");
    if (o.sweep_den < 1) throw std::invalid_argument("sweep: denominator must be positive");
    if (o.sweep_min > o.sweep_max)
        throw std::invalid_argument("sweep: empty numerator range");
    if (o.sweep_max - o.sweep_min + 1 > 10000)
        throw std::invalid_argument("sweep: more than 10000 grid cells");

    std::string csv = "c,degree,h_crit_lo,h_crit_hi,n_bad,bad_places\n";
    ordered_json cells = ordered_json::array();
    for (long n = o.sweep_min; n <= o.sweep_max; ++n) {
        Rat c = Rat(n) / Rat(o.sweep_den);
        std::vector<FieldElement> coeffs(static_cast<size_t>(o.sweep_degree) + 1, FieldElement(0));
        coeffs[0] = FieldElement(c);
        coeffs.back() = FieldElement(1);
        PolyMap f(coeffs, Mode::Q);
        CriticalHeightReport rep = critical_report(f, o.tol, o.cap);
        Interval h = rep.h_crit.enclosure();
        std::string bad;
        for (size_t i = 0; i < rep.bad_places.size(); ++i) {
            if (i) bad += ";";
            bad += rep.bad_places[i].name();
        }
        csv += rat_to_string(c) + "," + std::to_string(o.sweep_degree) + "," + fmt_g(h.lo) +
               "," + fmt_g(h.hi) + "," + std::to_string(rep.bad_places.size()) + "," + bad + "\n";
        ordered_json cj;
        cj["c"] = rat_to_string(c);
        cj["degree"] = o.sweep_degree;
        cj["h_crit"] = el_json(rep.h_crit);
        auto bj = ordered_json::array();
        for (const auto& v : rep.bad_places) bj.push_back(v.name());
        cj["bad_places"] = bj;
        cells.push_back(cj);
    }
    ordered_json j;
    j["command"] = "sweep";
    j["family"] = "z^" + std::to_string(o.sweep_degree) + " + c";
    j["denominator"] = o.sweep_den;
    j["cells"] = cells;
    return emit(o, j, csv);
}

// ---------------------------------------------------------------- selftest --

int cmd_selftest(const Opts& o) {
    long failures = 0;
    std::ostringstream txt;
    ordered_json checks = ordered_json::array();
    auto check = [&](bool ok, const std::string& name) {
        txt << (ok ? "  ok    " : "  FAIL  ") << name << "\n";
        ordered_json c;
        c["name"] = name;
        c["ok"] = ok;
        checks.push_back(c);
        if (!ok) ++failures;
    };
    std::mt19937_64 rng(o.seed);

    {  // product formula over Q: single elements and pairwise diameters
        std::uniform_int_distribution<long> num(-1000000, 1000000);
        std::uniform_int_distribution<long> den(1, 1000000);
        bool ok = true;
        for (int i = 0; i < 200; ++i) {
            long n = num(rng);
            if (n == 0) n = 1;
            FieldElement x(Rat(n) / Rat(den(rng)));
            ok = ok && product_formula_check(x, Mode::Q);
        }
        check(ok, "product formula on 200 random rationals");

        std::uniform_int_distribution<long> small(-50, 50);
        std::uniform_int_distribution<long> dsmall(1, 20);
        std::uniform_int_distribution<int> size(2, 10);
        ok = true;
        for (int s = 0; s < 20; ++s) {
            std::vector<FieldElement> T;
            while (static_cast<int>(T.size()) < size(rng)) {
                FieldElement x(Rat(small(rng)) / Rat(dsmall(rng)));
                bool dup = false;
                for (const auto& y : T) dup = dup || x == y;
                if (!dup) T.push_back(x);
            }
            ok = ok && pairwise_diameter_global(T, Mode::Q).formal_is_zero();
        }
        check(ok, "pairwise log-distance sums vanish on 20 random point sets");

        ok = true;
        for (const char* s : {"t", "(t+1)/(t^2)", "t^2-1", "(3*t-2)/(t^3+t+1)"})
            ok = ok && product_formula_check(parse_field(s, Mode::Qt), Mode::Qt);
        check(ok, "product formula over Q(t)");
    }

    {  // preperiodic censuses with exact canonical height zero
        auto points_of = [](const char* map) {
            std::vector<std::string> out;
            PolyMap f = PolyMap::parse(map, Mode::Q);
            for (const auto& [p, cert] : enumerate_preperiodic(f).points)
                out.push_back(field_to_string(p));
            return out;
        };
        check(points_of("0,0,1") == std::vector<std::string>({"-1", "0", "1"}),
              "census of z^2 is {0, +-1}");
        check(points_of("-1,0,1") == std::vector<std::string>({"-1", "0", "1"}),
              "census of z^2 - 1 is {0, +-1}");
        check(points_of("-2,0,1") == std::vector<std::string>({"-2", "-1", "0", "1", "2"}),
              "census of z^2 - 2 is {0, +-1, +-2}");
        PolyMap f = PolyMap::parse("-29/16,0,1", Mode::Q);
        PreperiodicCensus census = enumerate_preperiodic(f);
        bool ok = census.points.size() == 8;
        for (const auto& [p, cert] : census.points)
            ok = ok && canonical_height(f, p).is_exact_zero();
        check(ok, "z^2 - 29/16 has 8 preperiodic points, canonical height exactly 0");
    }

    {  // critical data of z^2 - 25/9 at 3
        PolyMap f = PolyMap::parse("-25/9,0,1", Mode::Q);
        CriticalHeightReport rep = critical_report(f, o.tol);
        bool ok = rep.bad_places.size() == 1 && rep.bad_places[0] == Place::prime(3);
        for (const auto& e : rep.entries)
            if (e.v == Place::prime(3)) {
                auto it = e.lambda.value.formal.find(e.v);
                ok = ok && e.lambda.exact() && e.is_bad && it != e.lambda.value.formal.end() &&
                     it->second == 1;
                ok = ok && e.g_v.has_value();
            }
        check(ok, "z^2 - 25/9: lambda_crit,3 = log 3 exactly, bad set {3}");
    }

    {  // capacity chain and refinement energies
        PolyMap f = PolyMap::parse("-25/9,0,1", Mode::Q);
        Place v3 = Place::prime(3);
        auto fe = [](long n, long d) {
            Rat q(n, d);
            q.canonicalize();
            return FieldElement(q);
        };
        CapacityResult r1 =
            capacity_union(kernel_from_census(components(f, {fe(5, 3), fe(-5, 3)}, 1, v3), f));
        CapacityResult r2 = capacity_union(kernel_from_census(
            components(f, {fe(1, 3), fe(-1, 3), fe(2, 3), fe(-2, 3)}, 2, v3), f));
        bool uniform = true;
        for (const Rat& w : r1.w) uniform = uniform && w == Rat(1, 2);
        for (const Rat& w : r2.w) uniform = uniform && w == Rat(1, 4);
        check(r1.log_capacity == Rat(1, 2) && r2.log_capacity == Rat(1, 4) && uniform,
              "level 1/2 capacities are g/2 and g/4 with uniform equilibrium");

        StructureSpec lop = structure_spec_from_map(f, {fe(5, 3), fe(-5, 3)}, 1, v3,
                                                    {Rat(1), Rat(0)});
        Rat i1 = structure_energy(lop, MeshRule::EquilibriumChain, 1).I;
        Rat i2 = structure_energy(lop, MeshRule::EquilibriumChain, 2).I;
        check(i1 == 0 && i2 == Rat(1, 2), "one-sided mesh energies: I1 = 0, I2 = g/2");

        StructureSpec even = structure_spec_from_map(f, {fe(5, 3), fe(-5, 3)}, 1, v3,
                                                     {Rat(1, 2), Rat(1, 2)});
        bool ok = true;
        Rat prev = structure_energy(even, MeshRule::EquilibriumChain, 1).I;
        for (long m = 1; m <= 4; ++m) {
            Rat next = structure_energy(even, MeshRule::EquilibriumChain, m + 1).I;
            Rat expect = Rat(1) / Rat(1L << m) - Rat(1) / Rat(1L << (m + 1));
            ok = ok && next - prev == expect;
            prev = next;
        }
        check(ok, "uniform mesh increments are g(1/d^m - 1/d^(m+1)) for m <= 4");
    }

    {  // equidistribution fixture
        PolyMap f = PolyMap::parse("-25/9,0,1", Mode::Q);
        auto fe = [](long n, long d) {
            Rat q(n, d);
            q.canonicalize();
            return FieldElement(q);
        };
        std::vector<FieldElement> T{fe(5, 3), fe(8, 3),  fe(11, 3),
                                    fe(-5, 3), fe(-2, 3), fe(1, 3)};
        ComponentStats stats = component_stats(f, T, Place::prime(3), 1);
        bool ok = stats.clusters.size() == 2 && stats.complete();
        for (const auto& cl : stats.clusters) ok = ok && cl.count == 3 && cl.degree == 1;
        ok = ok && equidist_verdict(stats, Rat(1, 10)) == EquidistVerdict::Pass;
        check(ok, "six-point census splits 3+3 and passes at eps = 1/10");
    }

    {  // cross-ratio identity and zero-sum tuples
        CrossRatio cr = plucker_cross_ratio(FieldElement(0), FieldElement(1), FieldElement(3),
                                            FieldElement(4), FieldElement(1));
        AbcdPoint P = build_abcd_point(
            {{FieldElement(0), FieldElement(1), FieldElement(3), FieldElement(4)}});
        auto hit = P.heights.h.formal.find(Place::prime(3));
        check(cr.x == FieldElement(-8) && cr.complement == FieldElement(9) &&
                  hit != P.heights.h.formal.end() && hit->second == 2,
              "quadruple (0,1,3,4) gives (-8, 9, -1) with h = 2·log 3");

        std::uniform_int_distribution<long> pick(-60, 60);
        bool ok = true;
        for (int trial = 0; trial < 100 && ok; ++trial) {
            long a[4];
            for (int i = 0; i < 4; ++i) {
                bool fresh = false;
                while (!fresh) {
                    a[i] = pick(rng);
                    fresh = true;
                    for (int k = 0; k < i; ++k) fresh = fresh && a[k] != a[i];
                }
            }
            long m = 1 + trial % 7;
            CrossRatio r = plucker_cross_ratio(FieldElement(a[0]), FieldElement(a[1]),
                                               FieldElement(a[2]), FieldElement(a[3]),
                                               FieldElement(m));
            ok = ok && r.residual.is_zero() && r.x + r.complement == FieldElement(m);
            AbcdPoint Q = build_abcd_point(
                {{FieldElement(a[0]), FieldElement(a[1]), FieldElement(a[2]), FieldElement(a[3])}},
                {m});
            FieldElement sum(0);
            for (const auto& x : Q.coords) sum = sum + x;
            ok = ok && sum.is_zero();
        }
        check(ok, "identity residual 0 and zero coordinate sum on 100 random quadruples");
    }

    {  // JSON report round-trips
        PolyMap f = PolyMap::parse("-25/9,0,1", Mode::Q);
        bool ok = true;
        auto parses_with = [&ok](const std::string& s, std::initializer_list<const char*> keys) {
            ordered_json j = ordered_json::parse(s, nullptr, false);
            if (j.is_discarded()) {
                ok = false;
                return;
            }
            for (const char* k : keys) ok = ok && j.contains(k);
        };
        ComponentStats stats = component_stats(
            f, {FieldElement(Rat(5) / 3), FieldElement(Rat(-5) / 3)}, Place::prime(3), 1);
        parses_with(to_json_string(stats), {"place", "clusters", "total"});
        std::vector<FieldElement> T;
        for (const auto& [p, cert] : enumerate_preperiodic(f).points) T.push_back(p);
        parses_with(to_json_string(global_report(f, T, Rat(1, 10), Rat(1, 2), 1, o.tol)),
                    {"eps", "places", "slice_holds"});
        AbcdPoint P = build_abcd_point(
            {{FieldElement(0), FieldElement(1), FieldElement(3), FieldElement(4)}});
        parses_with(to_json_string(P), {"coords", "h", "rad", "gap"});
        parses_with(to_json_string(quality_report(P, f, Rat(1, 4), o.tol)),
                    {"threshold", "verdict"});
        parses_with(to_json_string(adelically_good(f, FieldElement(3), Rat(0), o.tol)),
                    {"good_sum", "s22_sum", "verdict"});
        parses_with(to_json_string(good_pair_fraction(
                        f, {FieldElement(0), FieldElement(1)}, Rat(1), o.tol)),
                    {"fraction", "pairs"});
        CapacityResult cap = capacity_union(
            kernel_from_census(components(f, {FieldElement(Rat(5) / 3), FieldElement(Rat(-5) / 3)},
                                          1, Place::prime(3)),
                               f));
        parses_with(to_json_string(cap, Place::prime(3)), {"log_capacity", "energy"});
        check(ok, "every JSON report re-parses with its required keys");
    }

    std::string verdictline = failures == 0
                                  ? "selftest: all invariants hold\n"
                                  : "selftest: " + std::to_string(failures) + " failure(s)\n";
    ordered_json j;
    j["command"] = "selftest";
    j["seed"] = o.seed;
    j["checks"] = checks;
    j["failures"] = failures;
    int rc = emit(o, j, "invariant selftest (seed " + std::to_string(o.seed) + ")\n" +
                            txt.str() + verdictline);
    if (rc == 0 && failures > 0) return 1;
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    Opts o;
    CLI::App app{"exact arithmetic-dynamics toolkit: heights, local escape rates, disk\n"
                 "geometry, equidistribution statistics, and abcd-tuple reports over Q and Q(t)"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "key=value config file mirroring the run options");

    // the config loads before flag parsing, so explicit flags override it
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        std::string path;
        if (arg == "--config" && i + 1 < argc) path = argv[i + 1];
        else if (arg.rfind("--config=", 0) == 0) path = arg.substr(9);
        else continue;
        try {
            load_config(path, o);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        }
        break;
    }

    app.add_option("--mode", o.mode, "base field: Q or Q(t)")->capture_default_str();
    app.add_option("--map", o.map, "polynomial coefficients a_0,a_1,...,a_d (low to high)");
    app.add_option("--eps", o.eps, "tolerance ratio for verdicts (exact rational)")
        ->capture_default_str();
    app.add_option("--delta", o.delta, "slice fraction (exact rational)")->capture_default_str();
    app.add_option("--level", o.level, "preimage level m")->capture_default_str();
    app.add_option("--tol", o.tol, "archimedean enclosure width")->capture_default_str();
    auto* cap_opt = app.add_option("--cap", o.cap,
                                   "iteration cap; candidate cap for preperiodic searches");
    app.add_option("--out", o.out, "write the JSON report to this path ('-' for stdout)");
    app.add_flag("--csv", o.csv, "CSV rendering where available (components, equidist, sweep)");
    app.add_flag("--strict", o.strict, "exit 3 when any verdict is undetermined/incomplete");
    app.add_option("--seed", o.seed, "seed for randomized invariant scans")->capture_default_str();
    app.add_option("--points", o.points, "comma-separated field elements");
    app.add_option("--place", o.place, "place name: a prime, 'arch', 't-inf', or a monic poly in t");
    app.add_option("--alpha", o.alpha, "difference to test for adelic goodness");
    app.add_option("--quad", o.quads, "quadruple a,b,c,d (repeatable)");
    app.add_option("--m", o.ms, "positive integer multipliers, one per quadruple")
        ->delimiter(',');
    app.add_flag("--pairs", o.pairs, "pair-goodness census over the sample set");
    app.add_option("--sweep-degree", o.sweep_degree, "sweep family degree d in z^d + c")
        ->capture_default_str();
    app.add_option("--sweep-den", o.sweep_den, "denominator of the sweep grid")
        ->capture_default_str();
    app.add_option("--sweep-min", o.sweep_min, "smallest numerator of c")->capture_default_str();
    app.add_option("--sweep-max", o.sweep_max, "largest numerator of c")->capture_default_str();

    auto* heights = app.add_subcommand("heights", "height and radical of a tuple");
    heights->add_option("coords", o.coords, "tuple coordinates");
    auto* orbit = app.add_subcommand("orbit", "classify one orbit exactly");
    orbit->add_option("point", o.point, "starting point");
    std::vector<CLI::App*> subs{
        heights,
        orbit,
        app.add_subcommand("preperiodic", "exhaustive rational preperiodic census"),
        app.add_subcommand("crit", "per-place critical escape rates and the critical height"),
        app.add_subcommand("components", "level-m component census at a finite place"),
        app.add_subcommand("equidist", "equidistribution statistics and verdicts"),
        app.add_subcommand("abcd", "cross-ratio tuples, adelic goodness, pair censuses"),
        app.add_subcommand("sweep", "critical data over the family z^d + c (CSV)"),
        app.add_subcommand("selftest", "run the library invariant suite")};
    for (CLI::App* sub : subs) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    o.cap_given = cap_opt->count() > 0;

    try {
        if (app.got_subcommand("heights")) return cmd_heights(o);
        if (app.got_subcommand("orbit")) return cmd_orbit(o);
        if (app.got_subcommand("preperiodic")) return cmd_preperiodic(o);
        if (app.got_subcommand("crit")) return cmd_crit(o);
        if (app.got_subcommand("components")) return cmd_components(o);
        if (app.got_subcommand("equidist")) return cmd_equidist(o);
        if (app.got_subcommand("abcd")) return cmd_abcd(o);
        if (app.got_subcommand("sweep")) return cmd_sweep(o);
        if (app.got_subcommand("selftest")) return cmd_selftest(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    std::cerr << "error: no command\n";
    return 2;
}
