#include "dynheights/abcd.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace dynheights {

namespace {

Verdict conj2(Verdict a, Verdict b) {
    if (a == Verdict::False || b == Verdict::False) return Verdict::False;
    if (a == Verdict::True && b == Verdict::True) return Verdict::True;
    return Verdict::Undetermined;
}

const PlaceCritical* find_entry(const CriticalHeightReport& rep, const Place& v) {
    for (const auto& e : rep.entries)
        if (e.v == v) return &e;
    return nullptr;
}

nlohmann::ordered_json interval_json(const Interval& x) {
    return nlohmann::ordered_json::array({x.lo, x.hi});
}

nlohmann::ordered_json exactlog_json(const ExactLog& e) {
    nlohmann::ordered_json j;
    auto formal = nlohmann::ordered_json::array();
    for (const auto& [v, q] : e.formal)
        if (q != 0) formal.push_back(nlohmann::ordered_json::array({v.name(), rat_to_string(q)}));
    j["formal"] = formal;
    j["arch"] = e.arch ? interval_json(*e.arch) : nlohmann::ordered_json();
    j["enclosure"] = interval_json(e.enclosure());
    return j;
}

// -------- certified complex root solve (simultaneous-iteration method) -----

struct CertifiedRoots {
    std::vector<std::complex<double>> c;  // disk centers
    std::vector<double> r;                // inclusion radii
    std::vector<int> comp;                // connected component per disk
    double max_r = 0.0;
};

// Horner evaluation that also accumulates sum |a_i| |z|^i, the quantity
// controlling both the floating-point evaluation error and the effect of
// rounding the exact rational coefficients to doubles.
std::complex<double> horner(const std::vector<double>& a, std::complex<double> z,
                            double& magsum) {
    std::complex<double> p(a.back(), 0.0);
    magsum = std::abs(a.back());
    double az = std::abs(z);
    for (long i = static_cast<long>(a.size()) - 2; i >= 0; --i) {
        p = p * z + a[i];
        magsum = magsum * az + std::abs(a[i]);
    }
    return p;
}

struct UnionFind {
    std::vector<int> up;
    explicit UnionFind(size_t n) : up(n) { std::iota(up.begin(), up.end(), 0); }
    int find(int i) { return up[i] == i ? i : up[i] = find(up[i]); }
    void unite(int i, int j) { up[find(i)] = find(j); }
};

// All roots of the monic polynomial lie in the union of the returned disks,
// and every connected component of the union holds exactly as many roots as
// disks. Radii come from Weierstrass corrections, inflated to absorb both the
// evaluation error bound and the coefficient rounding.
CertifiedRoots certified_roots(const std::vector<Rat>& monic) {
    long n = static_cast<long>(monic.size()) - 1;
    if (n < 1) throw std::invalid_argument("root solve needs positive degree");
    std::vector<double> a(monic.size());
    for (size_t i = 0; i < monic.size(); ++i) a[i] = monic[i].get_d();

    double bound = 0.0;
    for (long i = 0; i < n; ++i) bound = std::max(bound, std::abs(a[i]));
    double radius = 1.0 + bound;

    std::vector<std::complex<double>> z(n);
    const double tau = 6.283185307179586;
    for (long j = 0; j < n; ++j) {
        double ang = tau * (static_cast<double>(j) + 0.25) / static_cast<double>(n) + 0.3;
        z[j] = std::polar(radius, ang);
    }

    double magsum = 0.0;
    for (long it = 0; it < 2000; ++it) {
        double max_w = 0.0, max_z = 0.0;
        for (long i = 0; i < n; ++i) {
            std::complex<double> denom(1.0, 0.0);
            for (long j = 0; j < n; ++j)
                if (j != i) denom *= z[i] - z[j];
            std::complex<double> w = horner(a, z[i], magsum) / denom;
            if (!std::isfinite(w.real()) || !std::isfinite(w.imag()))
                throw std::runtime_error("root iteration diverged");
            z[i] -= w;
            max_w = std::max(max_w, std::abs(w));
            max_z = std::max(max_z, std::abs(z[i]));
        }
        if (max_w < 1e-14 * (1.0 + max_z)) break;
    }

    CertifiedRoots out;
    out.c = z;
    out.r.resize(n);
    const double u = 1.1e-16;
    for (long i = 0; i < n; ++i) {
        std::complex<double> denom(1.0, 0.0);
        for (long j = 0; j < n; ++j)
            if (j != i) denom *= z[i] - z[j];
        std::complex<double> p = horner(a, z[i], magsum);
        double err = (2.0 * static_cast<double>(n) + 4.0) * u * magsum;
        double w = (std::abs(p) + err) / std::abs(denom);
        out.r[i] = static_cast<double>(n) * w * 1.000001;
        if (!std::isfinite(out.r[i])) throw std::runtime_error("root certification diverged");
        out.max_r = std::max(out.max_r, out.r[i]);
    }

    UnionFind uf(static_cast<size_t>(n));
    for (long i = 0; i < n; ++i)
        for (long j = i + 1; j < n; ++j)
            if (std::abs(z[i] - z[j]) <= out.r[i] + out.r[j]) uf.unite(static_cast<int>(i), static_cast<int>(j));
    out.comp.resize(n);
    for (long i = 0; i < n; ++i) out.comp[i] = uf.find(static_cast<int>(i));
    return out;
}

std::vector<Rat> monic_rational(const KPoly& P, const Rat& shift) {
    Rat lead = P.c.back().rational();
    std::vector<Rat> out(P.c.size());
    for (size_t i = 0; i < P.c.size(); ++i) {
        Rat ci = P.c[i].rational();
        if (i == 0) ci -= shift;
        out[i] = ci / lead;
    }
    return out;
}

}  // namespace

AdelicGoodReport adelically_good(const CriticalHeightReport& rep, const PolyMap& f,
                                 const FieldElement& alpha, const Rat& eps) {
    if (alpha.is_zero()) throw std::invalid_argument("alpha must be nonzero");
    if (eps < 0) throw std::invalid_argument("epsilon must be nonnegative");
    AdelicGoodReport out;
    out.alpha = alpha;
    out.eps = eps;
    out.h_crit = rep.h_crit;
    long d = f.degree();

    for (const Place& v : joint_support({alpha, f.lead()}, f.mode())) {
        Rat q = valuation(alpha, v).v + f.scale_valuation(v);
        if (q == 0) continue;
        bool bad = false;
        if (const PlaceCritical* e = find_entry(rep, v)) {
            if (!e->lambda.exact())
                throw std::runtime_error("cannot classify reduction exactly at place " + v.name());
            bad = e->is_bad;
        }
        if (!bad) out.good_sum += ExactLog::term(v, q);
        if (v.in_S_d(d)) out.s22_sum += ExactLog::term(v, -q);
    }
    if (f.mode() == Mode::Q) {
        out.s22_sum += Rat(1, d - 1) * abs_log(f.lead(), Place::arch());
        out.s22_sum += abs_log(alpha, Place::arch());
    }

    ExactLog budget = eps * rep.h_crit;
    out.good_places_ok = leq(out.good_sum, budget);
    out.wild_arch_ok = leq(-budget, out.s22_sum);
    out.verdict = conj2(out.good_places_ok, out.wild_arch_ok);
    return out;
}

AdelicGoodReport adelically_good(const PolyMap& f, const FieldElement& alpha,
                                 const Rat& eps, double tol) {
    return adelically_good(critical_report(f, tol), f, alpha, eps);
}

GoodPairFraction good_pair_fraction(const PolyMap& f, const std::vector<FieldElement>& T,
                                    const Rat& eps, double tol) {
    size_t n = T.size();
    if (n < 2) throw std::invalid_argument("need at least two sample points");
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
            if (T[i] == T[j]) throw std::invalid_argument("sample points must be distinct");

    CriticalHeightReport rep = critical_report(f, tol);
    GoodPairFraction out;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            AdelicGoodReport r = adelically_good(rep, f, T[i] - T[j], eps);
            out.pairs.push_back(PairGoodness{i, j, r.verdict});
            ++out.total;
            if (r.verdict == Verdict::True) ++out.good;
            if (r.verdict == Verdict::Undetermined) ++out.undetermined;
        }
    out.fraction = Rat(out.good) / Rat(out.total);
    return out;
}

std::vector<std::array<FieldElement, 4>> find_split_quadruples(
    const PolyMap& f, const std::vector<FieldElement>& T, const Place& v, long limit) {
    Rat ghat = splitting_radius_exponent(f, v);
    Rat vs = f.scale_valuation(v);
    ComponentCensus cen = components(f, T, 1, v);
    Rat target = -ghat - vs;  // anchor valuation at full monic-frame separation

    std::vector<std::array<FieldElement, 4>> out;
    for (size_t j = 0; j < cen.entries.size(); ++j)
        for (size_t l = j + 1; l < cen.entries.size(); ++l) {
            if (valuation(cen.entries[j].anchor - cen.entries[l].anchor, v).v != target)
                continue;
            for (size_t ma : cen.entries[j].members)
                for (size_t mb : cen.entries[j].members) {
                    if (ma == mb) continue;
                    for (size_t mc : cen.entries[l].members)
                        for (size_t md : cen.entries[l].members) {
                            if (mc == md) continue;
                            if (limit >= 0 && static_cast<long>(out.size()) >= limit)
                                return out;
                            out.push_back({T[ma], T[mb], T[mc], T[md]});
                        }
                }
        }
    return out;
}

CrossRatio plucker_cross_ratio(const FieldElement& a, const FieldElement& b,
                               const FieldElement& c, const FieldElement& d,
                               const FieldElement& m) {
    if (m.is_zero()) throw std::invalid_argument("multiplier must be nonzero");
    const FieldElement* pts[4] = {&a, &b, &c, &d};
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (*pts[i] == *pts[j])
                throw std::invalid_argument("cross-ratio needs pairwise distinct points");

    FieldElement den = (a - b) * (c - d);
    CrossRatio cr;
    cr.x = m * (a - d) * (c - b) / den;
    cr.complement = m * (a - c) * (b - d) / den;
    cr.residual = (a - c) * (b - d) - (a - b) * (c - d) - (a - d) * (b - c);
    if (!(cr.x + cr.complement == m))
        throw std::logic_error("cross-ratio complement identity failed");
    return cr;
}

AbcdPoint build_abcd_point(const std::vector<std::array<FieldElement, 4>>& quads,
                           const std::vector<long>& multipliers) {
    if (quads.empty()) throw std::invalid_argument("need at least one quadruple");
    std::vector<long> ms = multipliers;
    if (ms.empty()) ms.assign(quads.size(), 1);
    if (ms.size() != quads.size())
        throw std::invalid_argument("one multiplier per quadruple required");
    for (long m : ms)
        if (m < 1) throw std::invalid_argument("multipliers must be positive integers");

    AbcdPoint P;
    P.k = static_cast<long>(quads.size());
    P.multipliers = ms;
    P.sources = quads;

    long msum = 0;
    for (size_t j = 0; j < quads.size(); ++j) {
        const auto& q = quads[j];
        CrossRatio cr = plucker_cross_ratio(q[0], q[1], q[2], q[3], FieldElement(ms[j]));
        P.coords.push_back(cr.x);
        P.coords.push_back(cr.complement);
        msum += ms[j];
    }
    P.coords.push_back(FieldElement(-msum));

    FieldElement sum(0);
    for (const auto& x : P.coords) {
        if (x.is_zero()) throw std::invalid_argument("degenerate tuple: zero coordinate");
        sum = sum + x;
    }
    if (!sum.is_zero()) throw std::logic_error("tuple left the zero-sum hyperplane");

    Mode mode = Mode::Q;
    for (const auto& x : P.coords)
        if (!x.is_rational()) mode = Mode::Qt;
    P.heights = height_tuple(P.coords, mode);
    P.gap = P.heights.h - *P.heights.rad;
    return P;
}

QualityReport quality_report(const AbcdPoint& P, const PolyMap& f, const Rat& eps,
                             double tol) {
    CriticalHeightReport rep = critical_report(f, tol);
    QualityReport q;
    q.eps = eps;
    q.gap = P.gap;
    q.threshold = ((Rat(1) - Rat(4) * eps) / Rat(2)) * rep.h_crit;
    q.gap_box = q.gap.enclosure();
    q.threshold_box = q.threshold.enclosure();
    q.verdict = leq(q.threshold, q.gap);
    return q;
}

PreimageGap min_preimage_gap_arch(const PolyMap& f, const FieldElement& alpha,
                                  double tol) {
    if (f.mode() != Mode::Q)
        throw std::domain_error("archimedean root analysis requires the rational mode");
    long d = f.degree();
    if (d > 8) throw std::invalid_argument("degree too large for the root solve (d <= 8)");

    LocalEscape zero_rate = escape_rate(f, FieldElement(0), Place::arch(), tol);
    LocalEscape crit = lambda_crit_local(f, Place::arch(), tol);
    Interval crit_box = crit.value.enclosure();
    if (zero_rate.value.enclosure().lo > crit_box.hi + 1e-6)
        throw std::domain_error("0 escapes faster than the critical locus");

    PreimageGap out;
    if (alpha.is_zero()) {
        double ninf = -std::numeric_limits<double>::infinity();
        out.coincident = true;
        out.value = Interval(ninf, ninf);
        out.slack = out.value;
        return out;
    }

    KPoly F = f.poly().compose(f.poly()).compose(f.poly());
    out.degree = F.degree();

    CertifiedRoots ys = certified_roots(monic_rational(F, alpha.rational()));
    CertifiedRoots bs = certified_roots(monic_rational(F, Rat(0)));
    out.max_radius = std::max(ys.max_r, bs.max_r);

    size_t ny = ys.c.size(), nb = bs.c.size();
    // per y-disk: certified bounds on min over beta of |y - beta|
    std::vector<double> lo_i(ny), hi_i(ny);
    for (size_t i = 0; i < ny; ++i) {
        double lo = std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < nb; ++j)
            lo = std::min(lo, std::abs(ys.c[i] - bs.c[j]) - ys.r[i] - bs.r[j]);
        lo_i[i] = lo;

        // farthest point of each beta component is a valid upper bound, since
        // the component is known to contain a root
        double hi = std::numeric_limits<double>::infinity();
        for (size_t j0 = 0; j0 < nb; ++j0) {
            if (bs.comp[j0] != static_cast<int>(j0)) continue;
            double far = 0.0;
            for (size_t j = 0; j < nb; ++j)
                if (bs.comp[j] == bs.comp[j0])
                    far = std::max(far, std::abs(ys.c[i] - bs.c[j]) + bs.r[j]);
            hi = std::min(hi, far);
        }
        hi_i[i] = hi + ys.r[i];
    }

    // lower bound: every y-disk component contains a root, whose min-distance
    // is at least the smallest disk bound in that component
    double lo_val = -std::numeric_limits<double>::infinity();
    for (size_t i0 = 0; i0 < ny; ++i0) {
        if (ys.comp[i0] != static_cast<int>(i0)) continue;  // component representative
        double comp_lo = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < ny; ++i)
            if (ys.comp[i] == ys.comp[i0]) comp_lo = std::min(comp_lo, lo_i[i]);
        lo_val = std::max(lo_val, comp_lo);
    }
    double hi_val = *std::max_element(hi_i.begin(), hi_i.end());

    lo_val = lo_val * (1.0 - 1e-12) - 1e-300;
    hi_val = hi_val * (1.0 + 1e-12) + 1e-300;
    if (!(lo_val > 0.0))
        throw std::runtime_error(
            "root certification failed: the two preimage sets cannot be separated "
            "(max inclusion radius " + std::to_string(out.max_radius) + ")");

    out.value = Interval(Interval::log_of_rat(Rat(lo_val)).lo,
                         Interval::log_of_rat(Rat(hi_val)).hi);
    out.slack = out.value + scale(Rat(1, d - 1), crit_box);
    return out;
}

std::string to_json_string(const AdelicGoodReport& rep) {
    nlohmann::ordered_json j;
    j["alpha"] = field_to_string(rep.alpha);
    j["eps"] = rat_to_string(rep.eps);
    j["good_sum"] = exactlog_json(rep.good_sum);
    j["s22_sum"] = exactlog_json(rep.s22_sum);
    j["h_crit"] = exactlog_json(rep.h_crit);
    j["good_places_ok"] = verdict_name(rep.good_places_ok);
    j["wild_arch_ok"] = verdict_name(rep.wild_arch_ok);
    j["verdict"] = verdict_name(rep.verdict);
    return j.dump();
}

std::string to_json_string(const GoodPairFraction& gp) {
    nlohmann::ordered_json j;
    j["fraction"] = rat_to_string(gp.fraction);
    j["total"] = gp.total;
    j["good"] = gp.good;
    j["undetermined"] = gp.undetermined;
    auto pairs = nlohmann::ordered_json::array();
    for (const auto& p : gp.pairs)
        pairs.push_back(nlohmann::ordered_json::array(
            {p.i, p.j, std::string(verdict_name(p.verdict))}));
    j["pairs"] = pairs;
    return j.dump();
}

std::string to_json_string(const AbcdPoint& P) {
    nlohmann::ordered_json j;
    auto coords = nlohmann::ordered_json::array();
    for (const auto& x : P.coords) coords.push_back(field_to_string(x));
    j["coords"] = coords;
    j["k"] = P.k;
    j["multipliers"] = P.multipliers;
    j["h"] = exactlog_json(P.heights.h);
    j["rad"] = exactlog_json(*P.heights.rad);
    j["gap"] = exactlog_json(P.gap);
    return j.dump();
}

std::string to_json_string(const QualityReport& q) {
    nlohmann::ordered_json j;
    j["eps"] = rat_to_string(q.eps);
    j["gap"] = exactlog_json(q.gap);
    j["threshold"] = exactlog_json(q.threshold);
    j["gap_box"] = interval_json(q.gap_box);
    j["threshold_box"] = interval_json(q.threshold_box);
    j["verdict"] = verdict_name(q.verdict);
    return j.dump();
}

}  // namespace dynheights
