#pragma once
// Certified real intervals with double endpoints.
//
// IEEE +,-,*,/ on doubles are correctly rounded, so one outward nextafter per
// endpoint certifies those. Anything transcendental (log) goes through MPFR
// with directed rounding; glibc's libm makes no such guarantee.

#include <mpfr.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rational.hpp"

namespace dynheights {

namespace detail {
inline double down(double x) { return std::nextafter(x, -std::numeric_limits<double>::infinity()); }
inline double up(double x) { return std::nextafter(x, std::numeric_limits<double>::infinity()); }
}  // namespace detail

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    Interval() = default;
    Interval(double l, double h) : lo(l), hi(h) {
        if (!(lo <= hi)) throw std::logic_error("Interval: lo > hi");
    }

    static Interval point(double x) { return Interval(x, x); }
    static Interval zero() { return Interval(0.0, 0.0); }

    static Interval of_rat(const Rat& q) {
        mpfr_t t;
        mpfr_init2(t, 64);
        mpfr_set_q(t, q.get_mpq_t(), MPFR_RNDD);
        double l = mpfr_get_d(t, MPFR_RNDD);
        mpfr_set_q(t, q.get_mpq_t(), MPFR_RNDU);
        double h = mpfr_get_d(t, MPFR_RNDU);
        mpfr_clear(t);
        return Interval(l, h);
    }

    // log(q) for rational q > 0, certified both sides.
    static Interval log_of_rat(const Rat& q, mpfr_prec_t prec = 96) {
        if (q <= 0) throw std::domain_error("log_of_rat: nonpositive argument");
        mpfr_t t;
        mpfr_init2(t, prec);
        mpfr_set_q(t, q.get_mpq_t(), MPFR_RNDD);
        mpfr_log(t, t, MPFR_RNDD);
        double l = mpfr_get_d(t, MPFR_RNDD);
        mpfr_set_q(t, q.get_mpq_t(), MPFR_RNDU);
        mpfr_log(t, t, MPFR_RNDU);
        double h = mpfr_get_d(t, MPFR_RNDU);
        mpfr_clear(t);
        return Interval(l, h);
    }

    double width() const { return detail::up(hi - lo); }
    double mid() const { return 0.5 * (lo + hi); }
    bool contains(double x) const { return lo <= x && x <= hi; }
    bool contains_zero() const { return contains(0.0); }

    Interval operator-() const { return Interval(-hi, -lo); }

    bool is_zero() const { return lo == 0.0 && hi == 0.0; }

    Interval operator+(const Interval& o) const {
        // adding an exact zero is exact; keep point zeros from widening
        if (is_zero()) return o;
        if (o.is_zero()) return *this;
        return Interval(detail::down(lo + o.lo), detail::up(hi + o.hi));
    }
    Interval operator-(const Interval& o) const { return *this + (-o); }

    Interval operator*(const Interval& o) const {
        if (is_zero() || o.is_zero()) return Interval(0.0, 0.0);
        double c[4] = {lo * o.lo, lo * o.hi, hi * o.lo, hi * o.hi};
        double mn = c[0], mx = c[0];
        for (double x : c) {
            if (x < mn) mn = x;
            if (x > mx) mx = x;
        }
        return Interval(detail::down(mn), detail::up(mx));
    }

    Interval operator/(const Interval& o) const {
        if (o.contains_zero()) throw std::domain_error("Interval division by interval containing 0");
        if (is_zero()) return Interval(0.0, 0.0);
        double c[4] = {lo / o.lo, lo / o.hi, hi / o.lo, hi / o.hi};
        double mn = c[0], mx = c[0];
        for (double x : c) {
            if (x < mn) mn = x;
            if (x > mx) mx = x;
        }
        return Interval(detail::down(mn), detail::up(mx));
    }

    Interval& operator+=(const Interval& o) { return *this = *this + o; }

    friend Interval scale(const Rat& q, const Interval& x) { return Interval::of_rat(q) * x; }

    // Hull (union bound) of two intervals.
    friend Interval hull(const Interval& a, const Interval& b) {
        return Interval(a.lo < b.lo ? a.lo : b.lo, a.hi > b.hi ? a.hi : b.hi);
    }

    friend Interval imax(const Interval& a, const Interval& b) {
        return Interval(a.lo > b.lo ? a.lo : b.lo, a.hi > b.hi ? a.hi : b.hi);
    }

    Interval abs() const {
        if (lo >= 0) return *this;
        if (hi <= 0) return -*this;
        return Interval(0.0, std::max(-lo, hi));
    }
};

inline int sgn_pos(const Rat& q) { return q > 0 ? 1 : (q < 0 ? -1 : 0); }

// Certified enclosure of sum q_i * log(n_i) at a given precision; n_i >= 2.
inline Interval log_combination_enclosure(const std::vector<std::pair<Rat, Int>>& terms,
                                          mpfr_prec_t prec) {
    mpfr_t acc_lo, acc_hi, lg, term;
    mpfr_init2(acc_lo, prec);
    mpfr_init2(acc_hi, prec);
    mpfr_init2(lg, prec);
    mpfr_init2(term, prec);
    mpfr_set_zero(acc_lo, 0);
    mpfr_set_zero(acc_hi, 0);
    for (const auto& [q, n] : terms) {
        if (q == 0) continue;
        int sgn = sgn_pos(q);
        // lower endpoint of q*log n
        mpfr_set_z(lg, n.get_mpz_t(), MPFR_RNDD);
        mpfr_log(lg, lg, sgn > 0 ? MPFR_RNDD : MPFR_RNDU);
        mpfr_mul_q(term, lg, q.get_mpq_t(), MPFR_RNDD);
        mpfr_add(acc_lo, acc_lo, term, MPFR_RNDD);
        // upper endpoint
        mpfr_set_z(lg, n.get_mpz_t(), MPFR_RNDU);
        mpfr_log(lg, lg, sgn > 0 ? MPFR_RNDU : MPFR_RNDD);
        mpfr_mul_q(term, lg, q.get_mpq_t(), MPFR_RNDU);
        mpfr_add(acc_hi, acc_hi, term, MPFR_RNDU);
    }
    double l = mpfr_get_d(acc_lo, MPFR_RNDD);
    double h = mpfr_get_d(acc_hi, MPFR_RNDU);
    mpfr_clears(acc_lo, acc_hi, lg, term, nullptr);
    return Interval(l, h);
}

// Exact sign of sum q_i * log(n_i) over distinct integers n_i >= 2 that are
// multiplicatively independent (distinct primes in practice). Such a sum is 0
// only when every q_i is 0, so precision escalation terminates.
inline int log_combination_sign(const std::vector<std::pair<Rat, Int>>& terms) {
    bool all_zero = true;
    for (const auto& t : terms)
        if (t.first != 0) all_zero = false;
    if (all_zero) return 0;
    for (mpfr_prec_t prec = 96; prec <= 1 << 14; prec *= 2) {
        Interval e = log_combination_enclosure(terms, prec);
        if (e.lo > 0) return 1;
        if (e.hi < 0) return -1;
    }
    throw std::runtime_error("log_combination_sign: sign not separated at max precision");
}

}  // namespace dynheights
