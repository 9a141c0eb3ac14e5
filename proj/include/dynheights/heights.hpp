#pragma once
// Heights and radicals of K*-tuples, plus the product formula. Everything over
// Q stays formal because log|x| at the archimedean place factors through the
// prime factorization of x; over Q(t) values are exactly rational. No floats
// are involved anywhere in this header's outputs beyond [0,0] markers.

#include <optional>

#include "exactlog.hpp"

namespace dynheights {

// log|x|_v as an ExactLog. At finite places the exponent is -v(x). At the
// archimedean place of Q the value is stored formally via factorization, with
// a [0,0] interval marking it as an archimedean quantity.
inline ExactLog abs_log(const FieldElement& x, const Place& v) {
    if (x.is_zero()) throw std::domain_error("abs_log of zero");
    ExactLog e;
    if (v.kind == PlaceKind::Arch) {
        if (!x.is_rational()) throw std::domain_error("archimedean place in Q(t) mode");
        for (const auto& [p, k] : factor_rat(x.rational())) e.formal[Place::prime(p)] = Rat(k);
        e.arch = Interval::zero();
        return e;
    }
    ValExt val = valuation(x, v);
    if (val.v != 0) e.formal[v] = -val.v;
    return e;
}

// sum_v r_v log|x|_v over all places; exactly zero for x in K*.
inline ExactLog product_formula_sum(const FieldElement& x, Mode mode) {
    if (x.is_zero()) throw std::domain_error("product formula of zero");
    ExactLog acc;
    for (const Place& v : support_places(x, mode)) acc += v.r() * abs_log(x, v);
    if (mode == Mode::Q) acc += abs_log(x, Place::arch());
    // (the ff-infinite place is part of the support when v_inf(x) != 0)
    return acc;
}

inline bool product_formula_check(const FieldElement& x, Mode mode) {
    ExactLog s = product_formula_sum(x, mode);
    return s.formal_is_zero() && (!s.arch || s.arch->contains_zero());
}

struct TupleHeightReport {
    ExactLog h;            // finite_part + arch_part
    ExactLog finite_part;  // sum over finite places of -min_i v(z_i)
    ExactLog arch_part;    // Q: log max_i |z_i| (formal); Q(t): zero
    std::vector<Place> support;        // I(P): finite places with non-constant valuation column
    std::optional<ExactLog> rad;       // absent when some coordinate is zero
    std::vector<FieldElement> tuple;
    Mode mode = Mode::Q;
};

// Height and radical data of a K-tuple (projective: invariant under common
// scaling). h needs one nonzero coordinate; rad/I(P) need all nonzero.
inline TupleHeightReport height_tuple(const std::vector<FieldElement>& z, Mode mode) {
    if (z.empty()) throw std::domain_error("height of empty tuple");
    bool any_nonzero = false, all_nonzero = true;
    for (const auto& x : z) {
        if (x.is_zero())
            all_nonzero = false;
        else
            any_nonzero = true;
    }
    if (!any_nonzero) throw std::domain_error("height of all-zero tuple");

    TupleHeightReport rep;
    rep.tuple = z;
    rep.mode = mode;

    for (const Place& v : joint_support(z, mode)) {
        ValExt mn = ValExt::infinity(), mx{};
        bool first = true;
        for (const auto& x : z) {
            ValExt val = x.is_zero() ? ValExt::infinity() : valuation(x, v);
            mn = min(mn, val);
            mx = first ? val : max(mx, val);
            first = false;
        }
        if (mn.is_finite() && mn.v != 0) rep.finite_part += ExactLog::term(v, -mn.v);
        if (all_nonzero && !(mn == mx)) rep.support.push_back(v);
    }

    if (mode == Mode::Q) {
        // maximizing |z_i| exactly, then store its log formally
        Rat best = 0;
        for (const auto& x : z) {
            Rat a = abs_rat(x.rational());
            if (a > best) best = a;
        }
        rep.arch_part = abs_log(FieldElement(best), Place::arch());
    }
    rep.h = rep.finite_part + rep.arch_part;

    if (all_nonzero) {
        ExactLog rad;
        for (const Place& v : rep.support) rad += ExactLog::term(v, 1);
        rep.rad = rad;
    }
    return rep;
}

}  // namespace dynheights
