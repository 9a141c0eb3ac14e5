#pragma once
// ExactLog: the exact currency for every log-scale quantity in the library.
//
// Value = sum over finite places of q_v * L_v + optional archimedean interval,
// where L_v is log p at a Q-prime, deg pi at an ff-prime, and 1 at the
// ff-infinite place. Over Q(t) the formal part is exactly rational; over Q it
// is a rational combination of logs of distinct primes, which vanishes only
// when every exponent does, so exact zero/sign tests are available whenever no
// interval summand is present.

#include <map>
#include <optional>

#include "interval.hpp"
#include "places.hpp"

namespace dynheights {

enum class Verdict { True, False, Undetermined };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::True: return "true";
        case Verdict::False: return "false";
        default: return "undetermined";
    }
}

struct ExactLog {
    std::map<Place, Rat> formal;
    std::optional<Interval> arch;

    static ExactLog zero() { return {}; }
    static ExactLog term(const Place& v, const Rat& q) {
        ExactLog e;
        if (q != 0) e.formal[v] = q;
        return e;
    }
    static ExactLog interval(Interval i) {
        ExactLog e;
        e.arch = i;
        return e;
    }

    bool is_formal() const { return !arch.has_value(); }
    // True iff the formal part represents the real number zero. Coefficients of
    // distinct rational primes must each vanish (the log p are linearly
    // independent over Q); function-field places all share one unit of
    // length, so there only the weighted sum has to cancel.
    bool formal_is_zero() const {
        Rat ff = 0;
        for (const auto& [v, q] : formal) {
            if (v.kind == PlaceKind::FinitePrime) {
                if (q != 0) return false;
            } else {
                ff += q * v.N();
            }
        }
        return ff == 0;
    }
    // exactly the zero log: zero formal part and either no interval or [0,0]
    bool is_exact_zero() const {
        if (!formal_is_zero()) return false;
        return !arch || (arch->lo == 0 && arch->hi == 0);
    }

    void prune() {
        for (auto it = formal.begin(); it != formal.end();)
            it = it->second == 0 ? formal.erase(it) : std::next(it);
    }

    ExactLog operator-() const {
        ExactLog r = *this;
        for (auto& [v, q] : r.formal) q = -q;
        if (r.arch) r.arch = -*r.arch;
        return r;
    }

    friend ExactLog operator+(const ExactLog& a, const ExactLog& b) {
        ExactLog r = a;
        for (const auto& [v, q] : b.formal) r.formal[v] += q;
        r.prune();
        if (a.arch && b.arch)
            r.arch = *a.arch + *b.arch;
        else if (b.arch)
            r.arch = b.arch;
        return r;
    }
    friend ExactLog operator-(const ExactLog& a, const ExactLog& b) { return a + (-b); }

    friend ExactLog operator*(const Rat& s, const ExactLog& a) {
        ExactLog r;
        if (s == 0) {
            if (a.arch) r.arch = Interval::zero() * *a.arch;
            return r;
        }
        for (const auto& [v, q] : a.formal) r.formal[v] = s * q;
        if (a.arch) r.arch = scale(s, *a.arch);
        return r;
    }

    ExactLog& operator+=(const ExactLog& o) { return *this = *this + o; }

    // The exactly-rational slice of the formal part (ff places), and the
    // transcendental slice (Q-primes) as (exponent, prime) pairs.
    Rat ff_rational_part() const {
        Rat r = 0;
        for (const auto& [v, q] : formal) {
            if (v.kind == PlaceKind::FFPrime)
                r += q * Rat(v.pi.degree());
            else if (v.kind == PlaceKind::FFInf)
                r += q;
        }
        return r;
    }
    std::vector<std::pair<Rat, Int>> qprime_terms() const {
        std::vector<std::pair<Rat, Int>> t;
        for (const auto& [v, q] : formal)
            if (v.kind == PlaceKind::FinitePrime && q != 0) t.emplace_back(q, v.p);
        return t;
    }

    // Exact sign of the formal part. Requires a pure formal object of a single
    // mode; mixing rational-valued ff terms with Q-prime logs is a logic error
    // upstream (computations never cross modes).
    int formal_sign() const {
        Rat ff = ff_rational_part();
        auto qp = qprime_terms();
        if (ff != 0 && !qp.empty())
            throw std::logic_error("ExactLog: mixed-mode formal sign");
        if (qp.empty()) return ff > 0 ? 1 : (ff < 0 ? -1 : 0);
        return log_combination_sign(qp);
    }

    // Certified numeric enclosure of the full value.
    Interval enclosure(mpfr_prec_t prec = 96) const {
        Interval acc = log_combination_enclosure(qprime_terms(), prec);
        Rat ff = ff_rational_part();
        if (ff != 0) acc += Interval::of_rat(ff);
        if (arch) acc += *arch;
        return acc;
    }

    // Three-valued sign of the full value: exact when formal, interval-based
    // otherwise (Undetermined when the enclosure straddles 0).
    Verdict sign_geq_zero() const {
        if (is_formal() || (arch->lo == 0 && arch->hi == 0))
            return formal_sign() >= 0 ? Verdict::True : Verdict::False;
        // try coarse then finer precision before giving up
        for (mpfr_prec_t prec : {96, 256, 1024}) {
            Interval e = enclosure(prec);
            if (e.lo >= 0) return Verdict::True;
            if (e.hi < 0) return Verdict::False;
        }
        return Verdict::Undetermined;
    }
};

// a <= b, three-valued.
inline Verdict leq(const ExactLog& a, const ExactLog& b) { return (b - a).sign_geq_zero(); }

// |a| <= bound (bound formal or interval), three-valued.
inline Verdict abs_leq(const ExactLog& a, const ExactLog& bound) {
    Verdict v1 = leq(a, bound);
    Verdict v2 = leq(-a, bound);
    if (v1 == Verdict::False || v2 == Verdict::False) return Verdict::False;
    if (v1 == Verdict::True && v2 == Verdict::True) return Verdict::True;
    return Verdict::Undetermined;
}

}  // namespace dynheights
