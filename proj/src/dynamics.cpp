#include "dynheights/dynamics.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>

#include "dynheights/polyfactor.hpp"

namespace dynheights {

namespace {

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

long bits_of_rat(const Rat& q) {
    return static_cast<long>(mpz_sizeinbase(q.get_num().get_mpz_t(), 2) +
                             mpz_sizeinbase(q.get_den().get_mpz_t(), 2));
}

long bits_of(const FieldElement& x) {
    if (x.is_rational()) return bits_of_rat(x.rational());
    long n = 0;
    for (const Rat& q : x.rf.num.c) n += bits_of_rat(q);
    for (const Rat& q : x.rf.den.c) n += bits_of_rat(q);
    return n;
}

long total_bits(const KPoly& p) {
    long n = 0;
    for (const FieldElement& x : p.c) n += bits_of(x);
    return n;
}

}  // namespace

PolyMap::PolyMap(std::vector<FieldElement> coeffs, Mode mode)
    : mode_(mode), a_(std::move(coeffs)) {
    if (a_.size() < 3) throw std::invalid_argument("PolyMap: degree must be at least 2");
    if (a_.back().is_zero()) throw std::invalid_argument("PolyMap: leading coefficient is zero");
    if (mode_ == Mode::Q)
        for (const FieldElement& c : a_)
            if (!c.is_rational())
                throw std::invalid_argument("PolyMap: coefficient not rational in Q mode");
    long d = degree();
    sigma_ = -a_[d - 1] / (FieldElement(d) * a_[d]);
    KPoly shifted = poly().shift(sigma_);
    b_ = shifted.c;
    b_.resize(d + 1, FieldElement(0));
    b_[0] = b_[0] - sigma_;
    if (!b_[d - 1].is_zero())
        throw std::logic_error("PolyMap: center shift failed to kill the subleading term");
}

PolyMap PolyMap::parse(const std::string& csv, Mode mode) {
    std::vector<FieldElement> cs;
    for (const std::string& part : split_csv(csv)) cs.push_back(parse_field(part, mode));
    return PolyMap(std::move(cs), mode);
}

Rat PolyMap::scale_valuation(const Place& v) const {
    ValExt w = valuation(lead(), v);
    return w.v / Rat(degree() - 1);
}

ValExt PolyMap::monic_coeff_valuation(long j, const Place& v) const {
    ValExt vb = valuation(b_[j], v);
    if (vb.inf) return vb;
    ValExt r;
    r.inf = false;
    r.v = vb.v + Rat(1 - j) * scale_valuation(v);
    return r;
}

ExactLog PolyMap::monic_coeff_abs_log_arch(long j) const {
    if (mode_ != Mode::Q)
        throw std::domain_error("monic_coeff_abs_log_arch: no archimedean place over Q(t)");
    if (b_[j].is_zero())
        throw std::domain_error("monic_coeff_abs_log_arch: coefficient is zero");
    ExactLog r = abs_log(b_[j], Place::arch());
    r += Rat(1 - j, degree() - 1) * abs_log(lead(), Place::arch());
    return r;
}

FieldElement PolyMap::eval(const FieldElement& z) const {
    FieldElement acc = a_.back();
    for (long i = degree() - 1; i >= 0; --i) acc = acc * z + a_[i];
    return acc;
}

KPoly PolyMap::deriv() const { return poly().derivative(); }

FieldElement iterate(const PolyMap& f, FieldElement z, long n) {
    if (n < 0) throw std::invalid_argument("iterate: negative iteration count");
    for (long k = 0; k < n; ++k) z = f.eval(z);
    return z;
}

Rat escape_radius_exponent(const PolyMap& f, const Place& v) {
    if (v.kind == PlaceKind::Arch)
        throw std::domain_error("escape_radius_exponent: use arch_escape_bound at the archimedean place");
    long d = f.degree();
    ValExt vd = valuation(f.lead(), v);
    Rat rho = vd.v / Rat(d - 1);
    for (long i = 0; i < d; ++i) {
        if (f.coeffs()[i].is_zero()) continue;
        ValExt vi = valuation(f.coeffs()[i], v);
        Rat slope = (vd.v - vi.v) / Rat(d - i);
        if (slope > rho) rho = slope;
    }
    return rho;
}

Rat arch_escape_bound(const PolyMap& f) {
    if (f.mode() != Mode::Q)
        throw std::domain_error("arch_escape_bound: no archimedean place over Q(t)");
    Rat sum = 1;
    for (long i = 0; i < f.degree(); ++i) sum += abs_rat(f.coeffs()[i].rational());
    Rat r = sum / abs_rat(f.lead().rational());
    return r < 1 ? Rat(1) : r;
}

ExactLog escape_radius(const PolyMap& f, const Place& v) {
    if (v.kind == PlaceKind::Arch)
        return abs_log(FieldElement(arch_escape_bound(f)), v);
    ExactLog e = ExactLog::term(v, escape_radius_exponent(f, v));
    e.prune();
    return e;
}

namespace {

struct EscapeData {
    std::vector<std::pair<Place, Rat>> bad;  // place and its radius exponent
    Rat rbar;                                // archimedean bound, Q mode only
    bool has_rbar = false;
};

EscapeData escape_data(const PolyMap& f) {
    EscapeData e;
    std::vector<Place> supp = joint_support(f.coeffs(), f.mode());
    if (f.mode() == Mode::Qt) {
        bool have_inf = false;
        for (const Place& v : supp)
            if (v.kind == PlaceKind::FFInf) have_inf = true;
        if (!have_inf) supp.push_back(Place::ff_inf());
    }
    for (const Place& v : supp) e.bad.emplace_back(v, escape_radius_exponent(f, v));
    if (f.mode() == Mode::Q) {
        e.rbar = arch_escape_bound(f);
        e.has_rbar = true;
    }
    return e;
}

// Denominator bound: every point confined at all finite places has
// denominator dividing this (Q mode).
Int denominator_bound(const EscapeData& e) {
    Int D = 1;
    for (const auto& [v, rho] : e.bad) {
        if (v.kind != PlaceKind::FinitePrime) continue;
        Int fl = floor_rat(rho);
        if (fl > 0) D *= pow_int(v.p, fl.get_ui());
    }
    return D;
}

OrbitCertificate classify_core(const PolyMap& f, const FieldElement& P, const Int& hard_cap) {
    EscapeData E = escape_data(f);
    std::map<std::string, long> seen;
    OrbitCertificate cert;
    FieldElement z = P;
    for (long k = 0;; ++k) {
        std::string key = field_to_string(z);
        auto it = seen.find(key);
        if (it != seen.end()) {
            cert.kind = OrbitCertificate::Kind::Preperiodic;
            cert.tail = it->second;
            cert.period = k - it->second;
            cert.orbit.push_back(z);
            return cert;
        }
        const Place* hit = nullptr;
        if (E.has_rbar && !z.is_zero() && abs_rat(z.rational()) > E.rbar) {
            static const Place arch = Place::arch();
            hit = &arch;
        }
        if (!hit) {
            for (const auto& [v, rho] : E.bad) {
                ValExt w = valuation(z, v);
                if (!w.inf && w.v < -rho) {
                    hit = &v;
                    break;
                }
            }
        }
        if (!hit && !z.is_zero()) {
            // a pole at any place of good reduction escapes immediately
            for (const Place& v : support_places(z, f.mode())) {
                bool is_bad = false;
                for (const auto& [b, rho] : E.bad)
                    if (b == v) is_bad = true;
                if (is_bad) continue;
                if (valuation(z, v).v < 0) {
                    cert.kind = OrbitCertificate::Kind::Divergent;
                    cert.witness_place = v;
                    cert.witness_index = k;
                    cert.orbit.push_back(z);
                    return cert;
                }
            }
        }
        if (hit) {
            cert.kind = OrbitCertificate::Kind::Divergent;
            cert.witness_place = *hit;
            cert.witness_index = k;
            cert.orbit.push_back(z);
            return cert;
        }
        seen[key] = k;
        cert.orbit.push_back(z);
        z = f.eval(z);
        if (Int(k) > hard_cap)
            throw std::logic_error("classify_orbit: iteration bound exceeded; confinement argument violated");
    }
}

// exact n-th root in Q, if one exists
std::optional<Rat> rat_nth_root(const Rat& x, long n) {
    bool neg = x < 0;
    if (neg && n % 2 == 0) return std::nullopt;
    Rat ax = abs_rat(x);
    Int num, den;
    if (mpz_root(num.get_mpz_t(), ax.get_num().get_mpz_t(), n) == 0) return std::nullopt;
    if (mpz_root(den.get_mpz_t(), ax.get_den().get_mpz_t(), n) == 0) return std::nullopt;
    Rat r(num, den);
    r.canonicalize();
    return neg ? Rat(-r) : r;
}

// exact n-th root in Q(t), if one exists
std::optional<FieldElement> field_nth_root(const FieldElement& x, long n) {
    if (x.is_zero()) return FieldElement(0);
    if (x.is_rational()) {
        auto r = rat_nth_root(x.rational(), n);
        if (!r) return std::nullopt;
        return FieldElement(*r);
    }
    RatFunc rf = x.as_ratfunc();
    Rat lead = rf.num.lead() / rf.den.lead();
    auto lead_root = rat_nth_root(lead, n);
    if (!lead_root) return std::nullopt;
    QPoly num_root = QPoly::constant(1), den_root = QPoly::constant(1);
    for (const auto& [fac, mult] : factor_qpoly(rf.num)) {
        if (mult % n != 0) return std::nullopt;
        for (long i = 0; i < mult / n; ++i) num_root = num_root * fac;
    }
    for (const auto& [fac, mult] : factor_qpoly(rf.den)) {
        if (mult % n != 0) return std::nullopt;
        for (long i = 0; i < mult / n; ++i) den_root = den_root * fac;
    }
    return FieldElement(RatFunc(*lead_root * num_root, den_root));
}

// True when every centered-monic coefficient is a constant, detected without
// leaving Q(t): c_j^(d-1) = b_j^(d-1) a_d^(1-j) must be rational.
bool conjugate_is_constant(const PolyMap& f) {
    long d = f.degree();
    for (long j = 0; j <= d - 2; ++j) {
        const FieldElement& b = f.centered()[j];
        if (b.is_zero()) continue;
        FieldElement x = field_pow(b, d - 1) * field_pow(f.lead(), 1 - j);
        if (!x.is_rational()) return false;
    }
    return true;
}

}  // namespace

OrbitCertificate classify_orbit(const PolyMap& f, const FieldElement& P) {
    if (f.mode() == Mode::Qt && conjugate_is_constant(f)) {
        // The map is conjugate to one with constant coefficients, so starting
        // points whose conjugate w_0 = s(P - sigma) is constant never trip a
        // nonarchimedean escape test. Detect that case through w_0^(d-1),
        // which lives in Q(t) even when s does not, and hand it to the
        // rational classifier. Nonconstant conjugates still escape through
        // their poles and use the ordinary loop below.
        long d = f.degree();
        FieldElement w_pow = field_pow(P - f.sigma(), d - 1) * f.lead();
        if (w_pow.is_rational()) {
            std::optional<FieldElement> s =
                d == 2 ? std::optional<FieldElement>(f.lead()) : field_nth_root(f.lead(), d - 1);
            if (!s)
                throw std::domain_error(
                    "classify_orbit: map is conjugate to a constant-coefficient map only over an "
                    "extension of Q(t); classification is not supported for this input");
            FieldElement w0 = *s * (P - f.sigma());
            std::vector<FieldElement> c(d + 1);
            for (long j = 0; j <= d; ++j) {
                FieldElement cj = f.centered()[j] * field_pow(*s, 1 - j);
                if (!cj.is_rational())
                    throw std::logic_error("classify_orbit: conjugate coefficient not constant");
                c[j] = cj;
            }
            if (!w0.is_rational())
                throw std::logic_error("classify_orbit: conjugated point not constant");
            PolyMap g(c, Mode::Q);
            OrbitCertificate cert = classify_orbit(g, w0);
            if (cert.kind == OrbitCertificate::Kind::Divergent)
                throw std::domain_error(
                    "classify_orbit: constant orbit of a conjugate-to-constant map stays bounded "
                    "at every place of Q(t) yet never repeats; no escape witness exists");
            for (FieldElement& w : cert.orbit) w = w / *s + f.sigma();
            return cert;
        }
    }
    Int cap;
    if (f.mode() == Mode::Q) {
        EscapeData E = escape_data(f);
        Int D = denominator_bound(E);
        Int N = floor_rat(E.rbar * Rat(D));
        cap = 2 * N + 16;
    } else {
        cap = 1000000;
    }
    return classify_core(f, P, cap);
}

PreperiodicCensus enumerate_preperiodic(const PolyMap& f, const Int& cap) {
    if (f.mode() != Mode::Q)
        throw std::domain_error(
            "enumerate_preperiodic: only rational maps over Q have a finite candidate region");
    EscapeData E = escape_data(f);
    PreperiodicCensus out;
    out.denominator_bound = denominator_bound(E);
    out.arch_bound = E.rbar;
    Int N = floor_rat(E.rbar * Rat(out.denominator_bound));
    out.candidate_count = 2 * N + 1;
    if (out.candidate_count > cap) throw CandidateCapExceeded(out.candidate_count);
    for (Int n = -N; n <= N; ++n) {
        Rat z(n, out.denominator_bound);
        z.canonicalize();
        FieldElement p(z);
        OrbitCertificate cert = classify_orbit(f, p);
        if (cert.preperiodic()) out.points.emplace_back(p, std::move(cert));
    }
    std::sort(out.points.begin(), out.points.end(),
              [](const auto& a, const auto& b) { return a.first.rational() < b.first.rational(); });
    return out;
}

std::vector<FieldElement> taylor_shift(const PolyMap& f, const FieldElement& c) {
    KPoly shifted = f.poly().shift(c);
    std::vector<FieldElement> out = shifted.c;
    out.resize(f.degree() + 1, FieldElement(0));
    return out;
}

CriticalCharIter::CriticalCharIter(const PolyMap& f, long size_bit_bound)
    : f_(&f), bound_(size_bit_bound), g_(KPoly::x()) {
    long D = f.degree() - 1;
    KPoly fp = f.deriv();
    m_ = (FieldElement(1) / fp.lead()) * fp;

    // power sums of the roots of m from Newton's identities
    std::vector<FieldElement> cc(D + 1, FieldElement(0));
    for (long k = 1; k <= D; ++k) cc[k] = m_.coeff(D - k);
    p_.assign(D, FieldElement(0));
    p_[0] = FieldElement(D);
    for (long k = 1; k < D; ++k) {
        FieldElement acc = FieldElement(-k) * cc[k];
        for (long i = 1; i < k; ++i) acc = acc - cc[i] * p_[k - i];
        p_[k] = acc;
    }
}

const KPoly& CriticalCharIter::next() {
    long d = f_->degree();
    long D = d - 1;

    auto reduce = [&](const KPoly& q) {
        KPoly r = poly_mod(q, m_);
        if (total_bits(r) > bound_)
            throw std::runtime_error("critical_value_char_poly: coefficient size bound exceeded");
        return r;
    };

    // one more composition with f, reduced mod m
    KPoly acc = KPoly::constant(f_->coeffs().back());
    for (long i = d - 1; i >= 0; --i)
        acc = reduce(acc * g_) + KPoly::constant(f_->coeffs()[i]);
    g_ = acc;
    ++n_;

    auto trace = [&](const KPoly& h) {
        FieldElement t(0);
        for (long j = 0; j <= h.degree(); ++j) t = t + h.coeff(j) * p_[j];
        return t;
    };

    std::vector<FieldElement> t(D + 1, FieldElement(0));
    KPoly h = g_;
    t[1] = trace(h);
    for (long k = 2; k <= D; ++k) {
        h = reduce(h * g_);
        t[k] = trace(h);
    }

    // traces back to coefficients, Newton's identities in reverse
    std::vector<FieldElement> c(D + 1, FieldElement(0));
    c[0] = FieldElement(1);
    for (long k = 1; k <= D; ++k) {
        FieldElement acc2 = t[k];
        for (long i = 1; i < k; ++i) acc2 = acc2 + c[i] * t[k - i];
        c[k] = -acc2 / FieldElement(k);
    }
    std::vector<FieldElement> coeffs(D + 1, FieldElement(0));
    for (long k = 0; k <= D; ++k) coeffs[D - k] = c[k];
    phi_ = KPoly(coeffs);
    return phi_;
}

KPoly critical_value_char_poly(const PolyMap& f, long n, long size_bit_bound) {
    if (n <= 0) throw std::invalid_argument("critical_value_char_poly: n must be positive");
    CriticalCharIter it(f, size_bit_bound);
    for (long step = 0; step < n; ++step) it.next();
    return it.current();
}

}  // namespace dynheights
