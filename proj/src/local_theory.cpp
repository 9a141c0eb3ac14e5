#include "dynheights/local_theory.hpp"

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "dynheights/polyfactor.hpp"

namespace dynheights {

namespace {

long bits_rat(const Rat& q) {
    return static_cast<long>(mpz_sizeinbase(q.get_num_mpz_t(), 2) +
                             mpz_sizeinbase(q.get_den_mpz_t(), 2));
}

long bits_field(const FieldElement& x) {
    if (x.is_rational()) return bits_rat(x.rational());
    long n = 0;
    RatFunc r = x.as_ratfunc();
    for (const Rat& c : r.num.c) n += bits_rat(c);
    for (const Rat& c : r.den.c) n += bits_rat(c);
    return n;
}

Rat dpow_neg(long d, long n) {
    return Rat(Int(1), pow_int(Int(d), static_cast<unsigned long>(n)));
}

// per-place escape data: radius exponent, coefficient size, coarse rate bound
struct LocalData {
    Rat rho;         // log_N of the escape radius
    Rat a_exp;       // log_N^+ of the largest coefficient
    Rat lambda_cap;  // upper bound for any escape rate of a non-escaped point
    Rat vs;          // v(s) = v(a_d)/(d-1)
};

LocalData local_data(const PolyMap& f, const Place& v) {
    LocalData L;
    L.rho = escape_radius_exponent(f, v);
    L.vs = f.scale_valuation(v);
    Rat amax = 0;
    for (const auto& a : f.coeffs()) {
        if (a.is_zero()) continue;
        Rat m = -valuation(a, v).v;
        if (m > amax) amax = m;
    }
    L.a_exp = amax;
    Rat rp = L.rho > 0 ? L.rho : Rat(0);
    L.lambda_cap = rp + amax / Rat(f.degree() - 1);
    return L;
}

const long kOrbitBitGuard = 1 << 22;
const size_t kRevisitKeyGuard = 1 << 12;

LocalEscape exact_zero(const Place& v, long n, bool arch_marker) {
    LocalEscape out;
    out.v = v;
    out.kind = LocalEscape::Kind::Exact;
    out.value = arch_marker ? ExactLog::interval(Interval::zero()) : ExactLog::zero();
    out.iterations = n;
    return out;
}

LocalEscape escape_rate_nonarch(const PolyMap& f, const FieldElement& P, const Place& v,
                                long cap) {
    LocalEscape out;
    out.v = v;
    long d = f.degree();
    LocalData L = local_data(f, v);

    FieldElement z = P;
    std::set<std::string> seen;
    long n = 0;
    bool revisit_tracking = true;
    for (;;) {
        if (!z.is_zero()) {
            ValExt w = valuation(z, v);
            if (w.v < -L.rho) {
                // escaped: from here |f(z)| = |a_d||z|^d at every step, so the
                // limit telescopes to an exact value
                out.kind = LocalEscape::Kind::Exact;
                out.value = ExactLog::term(v, dpow_neg(d, n) * (-w.v - L.vs));
                out.iterations = n;
                return out;
            }
        }
        if (L.lambda_cap == 0) return exact_zero(v, n, false);
        if (n >= cap) break;
        if (revisit_tracking) {
            if (bits_field(z) > 4 * static_cast<long>(kRevisitKeyGuard))
                revisit_tracking = false;
            else if (!seen.insert(field_to_string(z)).second)
                return exact_zero(v, n, false);
        }
        z = f.eval(z);
        ++n;
        if (bits_field(z) > kOrbitBitGuard) {
            if (!z.is_zero() && valuation(z, v).v < -L.rho) {
                out.kind = LocalEscape::Kind::Exact;
                out.value = ExactLog::term(v, dpow_neg(d, n) * (-valuation(z, v).v - L.vs));
                out.iterations = n;
                return out;
            }
            break;
        }
    }
    // z_n is inside the radius, so lambda = d^-n * lambda(z_n) <= d^-n * cap
    out.kind = LocalEscape::Kind::BoundedAbove;
    out.value = ExactLog::term(v, dpow_neg(d, n) * L.lambda_cap);
    out.iterations = n;
    return out;
}

// ---- archimedean machinery (Q mode) ----

// range of x^i over [-q, q], exact
void monomial_range(const Rat& q, long i, Rat& lo, Rat& hi) {
    Rat p = pow_rat(q, i);
    hi = p;
    lo = (i % 2 == 0) ? Rat(0) : Rat(-p);
    if (i == 0) lo = 1, hi = 1;
}

// sound superset of f([-q, q]) from per-monomial envelopes
void range_on_sym(const std::vector<Rat>& a, const Rat& q, Rat& lo, Rat& hi) {
    lo = 0;
    hi = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0) continue;
        Rat ml, mh;
        monomial_range(q, static_cast<long>(i), ml, mh);
        if (a[i] > 0) {
            lo += a[i] * ml;
            hi += a[i] * mh;
        } else {
            lo += a[i] * mh;
            hi += a[i] * ml;
        }
    }
}

// certificate that the orbit of u never leaves [-q, q] for some rational q,
// which pins the archimedean escape rate to exactly zero
bool invariant_interval_cert(const std::vector<Rat>& a, const Rat& u, const Rat& rbar) {
    Rat au_true = abs_rat(u);
    if (au_true > rbar) return false;
    // coarsen upward so orbit points with huge denominators stay cheap;
    // any q >= |u| with f([-q,q]) inside [-q,q] certifies the whole tail
    Rat au = round_up_to_den(au_true, Int(1) << 20);
    for (long j = 0; j <= 48; ++j) {
        Rat q = au + (rbar - au) * Rat(j, 48);
        if (q < au_true || q <= 0) continue;
        Rat lo, hi;
        range_on_sym(a, q, lo, hi);
        if (-q <= lo && hi <= q) return true;
    }
    return false;
}

std::vector<Rat> rational_coeffs(const PolyMap& f) {
    std::vector<Rat> a;
    a.reserve(f.coeffs().size());
    for (const auto& c : f.coeffs()) a.push_back(c.rational());
    return a;
}

LocalEscape escape_rate_arch(const PolyMap& f, const FieldElement& P, double tol, long cap) {
    LocalEscape out;
    out.v = Place::arch();
    long d = f.degree();
    std::vector<Rat> a = rational_coeffs(f);
    Rat ad = a.back();
    Rat S = 0;
    for (long i = 0; i < d; ++i) S += abs_rat(a[i] / ad);
    Rat rbar = arch_escape_bound(f);

    if (S == 0) {
        // monomial: |f^n(z)| = |a_d|^((d^n-1)/(d-1)) |z|^(d^n) exactly, so the
        // rate is the positive part of log|z| + log|a_d|/(d-1), a formal log
        if (P.is_zero()) return exact_zero(Place::arch(), 0, true);
        ExactLog val = abs_log(P, Place::arch()) +
                       Rat(1, d - 1) * abs_log(f.lead(), Place::arch());
        if (val.formal_sign() <= 0) return exact_zero(Place::arch(), 0, true);
        out.kind = LocalEscape::Kind::Exact;
        out.value = val;
        out.iterations = 0;
        return out;
    }

    Rat tolq = Rat(mpq_class(tol));
    auto strong_escape = [&](const Rat& u) {
        Rat au = abs_rat(u);
        return au > 1 && au > 2 * S && au > rbar && abs_rat(ad) * pow_rat(au, d - 1) > 2;
    };

    FieldElement z = P;
    std::set<std::string> seen;
    long n = 0;
    for (;;) {
        Rat u = z.rational();
        if (strong_escape(u)) break;
        if (abs_rat(u) > rbar) {
            // escape is already certain; climb until the tail bound applies
            z = f.eval(z);
            ++n;
            continue;
        }
        if (n >= cap || bits_field(z) > kOrbitBitGuard) {
            if (invariant_interval_cert(a, u, rbar)) return exact_zero(Place::arch(), n, true);
            // coarse tail bound d^-n (log^+|u| + log^+((d+1) max|a_i|)/(d-1));
            // kept as a one-sided interval, the orbit point is too big to factor
            Rat amax = 0;
            for (const Rat& c : a)
                if (abs_rat(c) > amax) amax = abs_rat(c);
            Rat ac = Rat(d + 1) * amax;
            Interval lg = abs_rat(u) > 1 ? Interval::log_of_rat(abs_rat(u), 96)
                                         : Interval::zero();
            Interval corr = ac > 1 ? scale(Rat(1, d - 1), Interval::log_of_rat(ac, 96))
                                   : Interval::zero();
            Interval b = scale(dpow_neg(d, n), lg + corr);
            out.kind = LocalEscape::Kind::BoundedAbove;
            out.value = ExactLog::interval(Interval(0.0, b.hi));
            out.iterations = n;
            return out;
        }
        if (bits_field(z) <= 4 * static_cast<long>(kRevisitKeyGuard) &&
            !seen.insert(field_to_string(z)).second)
            return exact_zero(Place::arch(), n, true);
        z = f.eval(z);
        ++n;
    }

    // escaped; push the exact orbit until the geometric tail is below tol
    for (long extra = 0; extra < 64; ++extra) {
        Rat tail = 2 * S / (Rat(d - 1) * abs_rat(z.rational()));
        if (dpow_neg(d, n) * tail * 4 <= tolq) break;
        z = f.eval(z);
        ++n;
    }

    Rat au = abs_rat(z.rational());
    Rat tail = 2 * S / (Rat(d - 1) * au);
    Rat dn = dpow_neg(d, n);
    for (mpfr_prec_t prec : {96, 256, 1024}) {
        Interval lg = Interval::log_of_rat(au, prec) +
                      scale(Rat(1, d - 1), Interval::log_of_rat(abs_rat(ad), prec));
        Interval tb = Interval::of_rat(tail);
        Interval enc = scale(dn, lg + Interval(-tb.hi, tb.hi));
        if (enc.lo < 0) enc = Interval(0.0, enc.hi);  // rates are nonnegative
        if (enc.width() <= tol || prec == 1024) {
            out.kind = LocalEscape::Kind::ArchEnclosure;
            out.value = ExactLog::interval(enc);
            out.iterations = n;
            return out;
        }
    }
    throw std::logic_error("escape_rate: unreachable");
}

}  // namespace

LocalEscape escape_rate(const PolyMap& f, const FieldElement& P, const Place& v, double tol,
                        long cap) {
    if (v.kind == PlaceKind::Arch) {
        if (f.mode() != Mode::Q)
            throw std::domain_error("escape_rate: archimedean place requires Q mode");
        return escape_rate_arch(f, P, tol, cap);
    }
    return escape_rate_nonarch(f, P, v, cap);
}

ExactLog canonical_height(const PolyMap& f, const FieldElement& P, double tol, long cap) {
    // preperiodic orbits have exactly zero height; get the certificate first
    bool known_preperiodic = false;
    bool classified = false;
    try {
        OrbitCertificate cert = classify_orbit(f, P);
        classified = true;
        known_preperiodic = cert.preperiodic();
    } catch (const std::domain_error&) {
        // no exact verdict available (isotrivial wandering orbits over Q(t));
        // fall through to the per-place sum
    }
    if (classified && known_preperiodic) {
        ExactLog zero;
        if (f.mode() == Mode::Q) zero.arch = Interval::zero();
        return zero;
    }

    std::vector<FieldElement> xs = f.coeffs();
    xs.push_back(P);
    std::vector<Place> places = joint_support(xs, f.mode());

    ExactLog total;
    double slack_hi = 0.0;
    for (const Place& v : places) {
        LocalEscape le = escape_rate(f, P, v, tol, cap);
        if (le.exact())
            total += le.value;
        else
            slack_hi = detail::up(slack_hi + le.value.enclosure().hi);
    }
    if (f.mode() == Mode::Q) {
        LocalEscape le = escape_rate(f, P, Place::arch(), tol, cap);
        if (le.kind == LocalEscape::Kind::BoundedAbove)
            slack_hi = detail::up(slack_hi + le.value.enclosure().hi);
        else
            total += le.value;
    }
    if (slack_hi > 0) total += ExactLog::interval(Interval(0.0, slack_hi));
    if (f.mode() == Mode::Q && !total.arch) total.arch = Interval::zero();
    return total;
}

namespace {

// ---- critical escape rates, finite places ----

ValExt place_val_of_long(long k, const Place& v) {
    if (v.kind == PlaceKind::FinitePrime) return ValExt::of(Rat(val_int(Int(k), v.p)));
    return ValExt::of(0);  // nonzero constants are units at ff places
}

// Exact-zero certificate: the centered-monic model is v-integral and its
// critical points sit in the closed unit disk (read off the polygon of g').
// Integrality kills the coefficient correction, so rates of unit-disk points
// vanish. Over Q the lead of g' is d, which can push critical points out of
// the disk when v lies in S_d; the polygon sees that automatically.
bool crit_bounded_cert(const PolyMap& f, const Place& v) {
    long d = f.degree();
    for (long j = 0; j <= d; ++j) {
        ValExt w = f.monic_coeff_valuation(j, v);
        if (!w.inf && w.v < 0) return false;
    }
    std::vector<ValExt> gv(d);
    for (long j = 1; j <= d; ++j) {
        ValExt w = f.monic_coeff_valuation(j, v);
        if (w.inf)
            gv[j - 1] = ValExt::infinity();
        else
            gv[j - 1] = ValExt::of(w.v + place_val_of_long(j, v).v);
    }
    NewtonPolygon np = newton_polygon(gv);
    if (np.all_roots_zero()) return true;
    return np.segments.back().slope <= 0;
}

LocalEscape lambda_crit_nonarch(const PolyMap& f, const Place& v, long cap) {
    LocalEscape out;
    out.v = v;
    long d = f.degree();
    long D = d - 1;
    if (crit_bounded_cert(f, v)) return exact_zero(v, 0, false);

    LocalData L = local_data(f, v);
    CriticalCharIter it(f);
    long level = 0;
    bool have_m = false;
    Rat last_m = 0;
    for (long n = 1; n <= cap; ++n) {
        const KPoly* phi = nullptr;
        try {
            phi = &it.next();
        } catch (const std::runtime_error&) {
            break;  // coefficient blowup; fall back to the bound at the last level
        }
        level = n;
        std::vector<ValExt> vals(D + 1);
        for (long k = 0; k <= D; ++k) {
            FieldElement c = phi->coeff(k);
            vals[k] = c.is_zero() ? ValExt::infinity() : valuation(c, v);
        }
        NewtonPolygon np = newton_polygon(vals);
        if (np.all_roots_zero()) {
            have_m = false;
            continue;  // every critical value vanished at this level
        }
        Rat mstar = np.segments.back().slope;  // log_N of the largest |f^n(a)|
        if (mstar > L.rho) {
            // largest orbit escaped; exact once it provably dominates the
            // d^-n cap on whatever is still inside the radius
            Rat cand = mstar - L.vs;
            bool all_escaped = np.zero_roots == 0 && np.segments.front().slope > L.rho;
            if (all_escaped || cand >= L.lambda_cap) {
                out.kind = LocalEscape::Kind::Exact;
                out.value = ExactLog::term(v, dpow_neg(d, n) * cand);
                out.iterations = n;
                return out;
            }
        }
        last_m = mstar;
        have_m = true;
    }

    Rat size_exp;
    if (level > 0) {
        size_exp = have_m && last_m > 0 ? last_m : Rat(0);
    } else {
        // no level computed: bound |a| for critical points a from f' itself
        std::vector<ValExt> fv(d);
        const auto& co = f.coeffs();
        for (long i = 1; i <= d; ++i) {
            if (co[i].is_zero())
                fv[i - 1] = ValExt::infinity();
            else
                fv[i - 1] = ValExt::of(valuation(co[i], v).v + place_val_of_long(i, v).v);
        }
        NewtonPolygon np = newton_polygon(fv);
        size_exp = np.all_roots_zero() || np.segments.back().slope <= 0
                       ? Rat(0)
                       : np.segments.back().slope;
    }
    out.kind = LocalEscape::Kind::BoundedAbove;
    out.value = ExactLog::term(v, dpow_neg(d, level) * (size_exp + L.a_exp / Rat(d - 1)));
    out.iterations = level;
    return out;
}

// ---- critical escape rate, archimedean place ----
//
// The critical-value char poly is iterated in interval arithmetic with mpfr
// endpoints; two-sided coefficient bounds (|e_k| <= C(D,k) R^k below, Fujiwara
// above) bracket the largest critical value at each level, and the bracket
// plus the geometric tail gives an enclosure that narrows like d^-n.

double d_log(double x, mpfr_rnd_t r) {
    mpfr_t t;
    mpfr_init2(t, 64);
    mpfr_set_d(t, x, MPFR_RNDN);  // exact
    mpfr_log(t, t, r);
    double y = mpfr_get_d(t, r);
    mpfr_clear(t);
    return y;
}

double d_root(double x, unsigned long k, mpfr_rnd_t r) {
    mpfr_t t;
    mpfr_init2(t, 64);
    mpfr_set_d(t, x, MPFR_RNDN);
    mpfr_rootn_ui(t, t, k, r);
    double y = mpfr_get_d(t, r);
    mpfr_clear(t);
    return y;
}

double d_exp(double x, mpfr_rnd_t r) {
    mpfr_t t;
    mpfr_init2(t, 64);
    mpfr_set_d(t, x, MPFR_RNDN);
    mpfr_exp(t, t, r);
    double y = mpfr_get_d(t, r);
    mpfr_clear(t);
    return y;
}

class MpIv {
public:
    static const mpfr_prec_t kPrec = 192;
    MpIv() {
        mpfr_init2(lo_, kPrec);
        mpfr_init2(hi_, kPrec);
        mpfr_set_zero(lo_, 0);
        mpfr_set_zero(hi_, 0);
    }
    explicit MpIv(const Rat& q) : MpIv() {
        mpfr_set_q(lo_, q.get_mpq_t(), MPFR_RNDD);
        mpfr_set_q(hi_, q.get_mpq_t(), MPFR_RNDU);
    }
    MpIv(const MpIv& o) : MpIv() {
        mpfr_set(lo_, o.lo_, MPFR_RNDD);
        mpfr_set(hi_, o.hi_, MPFR_RNDU);
    }
    MpIv& operator=(const MpIv& o) {
        if (this != &o) {
            mpfr_set(lo_, o.lo_, MPFR_RNDD);
            mpfr_set(hi_, o.hi_, MPFR_RNDU);
        }
        return *this;
    }
    ~MpIv() {
        mpfr_clear(lo_);
        mpfr_clear(hi_);
    }

    bool exact_zero() const { return mpfr_zero_p(lo_) && mpfr_zero_p(hi_); }

    friend MpIv operator+(const MpIv& a, const MpIv& b) {
        MpIv r;
        mpfr_add(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
        mpfr_add(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
        return r;
    }
    friend MpIv operator-(const MpIv& a, const MpIv& b) {
        MpIv r;
        mpfr_sub(r.lo_, a.lo_, b.hi_, MPFR_RNDD);
        mpfr_sub(r.hi_, a.hi_, b.lo_, MPFR_RNDU);
        return r;
    }
    friend MpIv operator*(const MpIv& a, const MpIv& b) {
        MpIv r;
        mpfr_t t;
        mpfr_init2(t, kPrec);
        bool first = true;
        mpfr_srcptr xs[2] = {a.lo_, a.hi_};
        mpfr_srcptr ys[2] = {b.lo_, b.hi_};
        for (auto x : xs)
            for (auto y : ys) {
                mpfr_mul(t, x, y, MPFR_RNDD);
                if (first || mpfr_cmp(t, r.lo_) < 0) mpfr_set(r.lo_, t, MPFR_RNDD);
                mpfr_mul(t, x, y, MPFR_RNDU);
                if (first || mpfr_cmp(t, r.hi_) > 0) mpfr_set(r.hi_, t, MPFR_RNDU);
                first = false;
            }
        mpfr_clear(t);
        return r;
    }

    // log magnitudes stay in double range even when the values themselves
    // blow past it (they grow like exp(d^n) here)
    double log_abs_hi_up() const {
        mpfr_srcptr big = mpfr_cmpabs(lo_, hi_) >= 0 ? lo_ : hi_;
        if (mpfr_zero_p(big)) return -std::numeric_limits<double>::infinity();
        mpfr_t t;
        mpfr_init2(t, 64);
        mpfr_abs(t, big, MPFR_RNDU);
        mpfr_log(t, t, MPFR_RNDU);
        double y = mpfr_get_d(t, MPFR_RNDU);
        mpfr_clear(t);
        return y;
    }
    double log_abs_lo_down() const {
        if (mpfr_sgn(lo_) <= 0 && mpfr_sgn(hi_) >= 0)
            return -std::numeric_limits<double>::infinity();
        mpfr_srcptr sml = mpfr_cmpabs(lo_, hi_) <= 0 ? lo_ : hi_;
        mpfr_t t;
        mpfr_init2(t, 64);
        mpfr_abs(t, sml, MPFR_RNDD);
        mpfr_log(t, t, MPFR_RNDD);
        double y = mpfr_get_d(t, MPFR_RNDD);
        mpfr_clear(t);
        return y;
    }

private:
    mpfr_t lo_, hi_;
};

using MpPoly = std::vector<MpIv>;

MpPoly mp_mul(const MpPoly& a, const MpPoly& b) {
    MpPoly r(a.size() + b.size() - 1);
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i].exact_zero()) continue;
        for (size_t j = 0; j < b.size(); ++j) r[i + j] = r[i + j] + a[i] * b[j];
    }
    return r;
}

// reduce mod the monic rational m (degree D), in place
void mp_mod(MpPoly& r, const std::vector<MpIv>& m) {
    long D = static_cast<long>(m.size()) - 1;
    for (long i = static_cast<long>(r.size()) - 1; i >= D; --i) {
        if (!r[i].exact_zero()) {
            for (long k = 0; k < D; ++k) r[i - D + k] = r[i - D + k] - r[i] * m[k];
        }
        r.pop_back();
    }
    r.resize(D);
}

Int binom(long n, long k) {
    Int r = 1;
    for (long i = 0; i < k; ++i) r = r * Int(n - i) / Int(i + 1);
    return r;
}

LocalEscape crit_charpoly_arch(const PolyMap& f, double tol, long cap) {
    // the char-poly coefficients reach magnitude exp(d^n); widen the mpfr
    // exponent range so the interval endpoints survive
    mpfr_set_emax(mpfr_get_emax_max());
    mpfr_set_emin(mpfr_get_emin_min());

    LocalEscape out;
    out.v = Place::arch();
    long d = f.degree();
    long D = d - 1;
    std::vector<Rat> a = rational_coeffs(f);
    Rat ad = a.back();
    Rat S = 0;
    for (long i = 0; i < d; ++i) S += abs_rat(a[i] / ad);
    Rat rbar = arch_escape_bound(f);

    // monic f' and exact power sums of its roots
    std::vector<Rat> m(D + 1);
    for (long i = 1; i <= d; ++i) m[i - 1] = Rat(i) * a[i] / (Rat(d) * ad);
    m[D] = 1;
    std::vector<Rat> cc(D + 1, Rat(0));
    for (long k = 1; k <= D; ++k) cc[k] = m[D - k];
    std::vector<Rat> p(D, Rat(0));
    p[0] = D;
    for (long k = 1; k < D; ++k) {
        Rat acc = Rat(-k) * cc[k];
        for (long i = 1; i < k; ++i) acc -= cc[i] * p[k - i];
        p[k] = acc;
    }

    std::vector<MpIv> miv(D + 1);
    for (long i = 0; i <= D; ++i) miv[i] = MpIv(m[i]);
    std::vector<MpIv> piv(D);
    for (long i = 0; i < D; ++i) piv[i] = MpIv(p[i]);
    std::vector<MpIv> aiv(d + 1);
    for (long i = 0; i <= d; ++i) aiv[i] = MpIv(a[i]);

    MpPoly g(D);
    if (D == 1)
        g[0] = MpIv(-m[0]);  // x mod (x + m0)
    else
        g[1] = MpIv(Rat(1));

    double s_up = detail::up(mpq_class(2 * S).get_d());
    double rbar_up = detail::up(mpq_class(rbar).get_d());
    double ad_lo = detail::down(mpq_class(abs_rat(ad)).get_d());

    // strong-escape threshold in log form: log L must clear every component
    double log_thresh = std::max(0.0, d_log(rbar_up, MPFR_RNDU));
    if (s_up > 0) log_thresh = std::max(log_thresh, d_log(s_up, MPFR_RNDU));
    double log_ad_dn = d_log(ad_lo, MPFR_RNDD);
    double log2_up = d_log(2.0, MPFR_RNDU);
    auto strong_escape_log = [&](double log_l) {
        return log_l > log_thresh &&
               detail::down((d - 1) * log_l) + log_ad_dn > log2_up;
    };

    // any root below t_up has rate at most t_corr; any root above it obeys
    // the telescoped escape formula with tail at most tail_hi
    double t_up = std::max({1.0, s_up, rbar_up, d_root(detail::up(2.0 / ad_lo),
                                                       static_cast<unsigned long>(d - 1),
                                                       MPFR_RNDU)});
    Rat amax = 0;
    for (const Rat& c2 : a)
        if (abs_rat(c2) > amax) amax = abs_rat(c2);
    double acorr_up = mpq_class(Rat(d + 1) * amax).get_d();
    double t_corr = detail::up(d_log(t_up, MPFR_RNDU) +
                               (acorr_up > 1.0 ? detail::up(d_log(detail::up(acorr_up), MPFR_RNDU) /
                                                            static_cast<double>(d - 1))
                                               : 0.0));
    double tail_hi = detail::up(s_up / detail::down((d - 1) * t_up));

    double last_lu = 0.0;  // log bound on the largest critical value, last finite level
    long last_level = 0;
    for (long n = 1; n <= cap; ++n) {
        // one composition with f, mod m
        MpPoly acc(1, aiv[d]);
        for (long i = d - 1; i >= 0; --i) {
            acc = mp_mul(acc, g);
            mp_mod(acc, miv);
            acc[0] = acc[0] + aiv[i];
        }
        g = acc;

        // traces of g^k, then char poly coefficients
        std::vector<MpIv> t(D + 1);
        MpPoly h = g;
        auto trace = [&](const MpPoly& q) {
            MpIv s;
            for (size_t j = 0; j < q.size(); ++j) s = s + q[j] * piv[j];
            return s;
        };
        t[1] = trace(h);
        for (long k = 2; k <= D; ++k) {
            h = mp_mul(h, g);
            mp_mod(h, miv);
            t[k] = trace(h);
        }
        std::vector<MpIv> c(D + 1);
        c[0] = MpIv(Rat(1));
        for (long k = 1; k <= D; ++k) {
            MpIv s = t[k];
            for (long i = 1; i < k; ++i) s = s + c[i] * t[k - i];
            c[k] = MpIv(Rat(-1, k)) * s;
        }

        // two-sided log bounds on the largest root modulus: |e_k| <= C(D,k) M^k
        // below, the doubled k-th root max above
        const double ninf = -std::numeric_limits<double>::infinity();
        double log_u = ninf, log_l = ninf;
        for (long k = 1; k <= D; ++k) {
            double lh = c[k].log_abs_hi_up();
            if (lh != ninf) log_u = std::max(log_u, detail::up(lh / k));
            double ll = c[k].log_abs_lo_down();
            if (ll != ninf) {
                double lbin = d_log(detail::up(binom(D, k).get_d()), MPFR_RNDU);
                log_l = std::max(log_l, detail::down((ll - lbin) / k));
            }
        }
        if (log_u != ninf) {
            log_u = detail::up(log_u + log2_up);
            last_lu = log_u;
            last_level = n;
        }

        if (log_l == ninf || !strong_escape_log(log_l)) continue;

        // the largest root escaped: its rate is d^-n (log M + c) within the
        // geometric tail; smaller roots are covered by t_corr or the same
        // formula with the t_up tail
        double tail_lo = detail::up(s_up * d_exp(-log_l, MPFR_RNDU) / (d - 1));
        Interval lg(detail::down(log_l - tail_lo), detail::up(log_u + tail_hi));
        Interval enc = scale(dpow_neg(d, n),
                             lg + scale(Rat(1, d - 1), Interval::log_of_rat(abs_rat(ad), 256)));
        Interval inside = scale(dpow_neg(d, n), Interval(0.0, t_corr));
        enc = Interval(enc.lo, std::max(enc.hi, inside.hi));
        if (enc.lo < 0) enc = Interval(0.0, enc.hi);
        if (enc.width() <= tol || n == cap) {
            out.kind = LocalEscape::Kind::ArchEnclosure;
            out.value = ExactLog::interval(enc);
            out.iterations = n;
            return out;
        }
    }

    // never certified past the strong radius: bounded-above fallback from the
    // last level with a finite coarse root bound
    double lp = std::max(0.0, last_lu);
    double corr = acorr_up > 1.0
                      ? detail::up(d_log(detail::up(acorr_up), MPFR_RNDU) /
                                   static_cast<double>(d - 1))
                      : 0.0;
    Interval b = scale(dpow_neg(d, last_level), Interval(0.0, detail::up(lp + corr)));
    out.kind = LocalEscape::Kind::BoundedAbove;
    out.value = ExactLog::interval(Interval(0.0, b.hi));
    out.iterations = last_level;
    return out;
}

LocalEscape lambda_crit_arch(const PolyMap& f, double tol, long cap) {
    QPoly fp;
    {
        KPoly der = f.deriv();
        std::vector<Rat> c;
        for (const auto& x : der.c) c.push_back(x.rational());
        fp = QPoly(c);
    }
    auto factors = factor_qpoly(fp);
    std::vector<Rat> roots;
    bool full_split = true;
    for (const auto& [g, mult] : factors) {
        if (g.degree() == 1)
            roots.push_back(-g.coeff(0));
        else if (g.degree() > 1)
            full_split = false;
    }

    std::vector<LocalEscape> parts;
    for (const Rat& r : roots) parts.push_back(escape_rate_arch(f, FieldElement(r), tol, cap));

    if (full_split) {
        bool all_exact = true;
        for (const auto& le : parts)
            if (!le.exact()) all_exact = false;
        if (all_exact) {
            // exact max: pairwise formal comparisons are decisive
            LocalEscape best = parts.front();
            for (size_t i = 1; i < parts.size(); ++i)
                if (leq(best.value, parts[i].value) == Verdict::True) best = parts[i];
            return best;
        }
        Interval acc(0.0, 0.0);
        bool first = true;
        for (const auto& le : parts) {
            Interval e = le.value.enclosure(256);
            if (le.kind == LocalEscape::Kind::BoundedAbove) e = Interval(0.0, e.hi);
            acc = first ? e : imax(acc, e);
            first = false;
        }
        LocalEscape out;
        out.v = Place::arch();
        out.kind = LocalEscape::Kind::ArchEnclosure;
        out.value = ExactLog::interval(acc);
        return out;
    }

    // irrational critical points: interval char-poly route covers every root;
    // exact rational parts can only sharpen the lower end
    LocalEscape iv = crit_charpoly_arch(f, tol, cap);
    if (!parts.empty() && iv.kind == LocalEscape::Kind::ArchEnclosure) {
        double lo = iv.value.arch->lo;
        for (const auto& le : parts)
            if (le.kind != LocalEscape::Kind::BoundedAbove)
                lo = std::max(lo, le.value.enclosure(256).lo);
        iv.value.arch = Interval(std::min(lo, iv.value.arch->hi), iv.value.arch->hi);
    }
    return iv;
}

}  // namespace

LocalEscape lambda_crit_local(const PolyMap& f, const Place& v, double tol, long cap) {
    if (v.kind == PlaceKind::Arch) {
        if (f.mode() != Mode::Q)
            throw std::domain_error("lambda_crit_local: archimedean place requires Q mode");
        return lambda_crit_arch(f, tol, cap);
    }
    return lambda_crit_nonarch(f, v, cap);
}

CriticalHeightReport critical_report(const PolyMap& f, double tol, long cap) {
    CriticalHeightReport rep;
    rep.mode = f.mode();
    rep.degree = f.degree();

    std::set<Place> places;
    for (const Place& v : joint_support(f.coeffs(), f.mode())) places.insert(v);
    if (f.mode() == Mode::Q) {
        for (long p = 2; p <= f.degree(); ++p)
            if (is_probable_prime(Int(p))) places.insert(Place::prime(Int(p)));
    } else {
        places.insert(Place::ff_inf());
    }

    double slack_hi = 0.0;
    for (const Place& v : places) {
        PlaceCritical e;
        e.v = v;
        e.lambda = lambda_crit_local(f, v, tol, cap);
        e.in_sd = v.in_S_d(f.degree());
        e.is_bad = e.lambda.exact() && e.lambda.value.formal_sign() > 0;
        if (e.is_bad && !e.in_sd) e.g_v = e.lambda.value;
        if (e.lambda.exact())
            rep.h_crit += e.lambda.value;
        else
            slack_hi = detail::up(slack_hi + e.lambda.value.enclosure().hi);
        if (e.is_bad) rep.bad_places.push_back(v);
        rep.entries.push_back(std::move(e));
    }

    if (f.mode() == Mode::Q) {
        rep.arch = lambda_crit_local(f, Place::arch(), tol, cap);
        if (rep.arch->kind == LocalEscape::Kind::BoundedAbove)
            slack_hi = detail::up(slack_hi + rep.arch->value.enclosure().hi);
        else
            rep.h_crit += rep.arch->value;
    }
    if (slack_hi > 0) rep.h_crit += ExactLog::interval(Interval(0.0, slack_hi));
    if (f.mode() == Mode::Q && !rep.h_crit.arch) rep.h_crit.arch = Interval::zero();
    return rep;
}

DeltaSlice delta_slice(const CriticalHeightReport& rep, const std::vector<Place>& s_prime,
                       const Rat& delta) {
    DeltaSlice out;
    out.delta = delta;
    out.s_prime = s_prime;

    std::map<Place, ExactLog> ref;  // bad places away from S_d
    for (const auto& e : rep.entries)
        if (e.is_bad && !e.in_sd) ref[e.v] = e.lambda.value;

    for (const Place& v : s_prime) {
        auto it = ref.find(v);
        if (it == ref.end())
            throw std::invalid_argument("delta_slice: place " + v.name() +
                                        " is not a bad place outside S_d");
        out.slice_sum += it->second;
    }
    for (const auto& [v, val] : ref) out.total_sum += val;

    ExactLog diff = out.slice_sum - delta * out.total_sum;
    out.holds = diff.formal_sign() >= 0;
    return out;
}

bool delta_slice_check(const CriticalHeightReport& rep, const std::vector<Place>& s_prime,
                       const Rat& delta) {
    return delta_slice(rep, s_prime, delta).holds;
}

bool is_isotrivial(const PolyMap& f) {
    if (f.mode() != Mode::Qt)
        throw std::domain_error("is_isotrivial: defined for Q(t) maps only");

    std::set<Place> places;
    for (const Place& v : joint_support(f.coeffs(), f.mode())) places.insert(v);
    places.insert(Place::ff_inf());

    for (const Place& v : places) {
        if (crit_bounded_cert(f, v)) continue;
        // residue characteristic zero is tame: a non-integral centered-monic
        // model forces a critical point past the escape radius
        LocalEscape le = lambda_crit_local(f, v);
        if (le.exact() && le.value.formal_sign() > 0) return false;
        if (le.exact()) continue;
        throw std::logic_error("is_isotrivial: escape undecided at " + v.name());
    }
    return true;
}

}  // namespace dynheights
