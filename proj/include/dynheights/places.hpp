#pragma once
// Places of K. For Q: the archimedean place and one place per prime. For
// Q(t) (constant field Q, places trivial on constants): one place per monic
// irreducible pi in Q[t], plus the degree place at infinity.

#include <string>
#include <vector>

#include "field.hpp"
#include "polyfactor.hpp"
#include "rational.hpp"

namespace dynheights {

enum class PlaceKind { FinitePrime, FFPrime, FFInf, Arch };

struct Place {
    PlaceKind kind = PlaceKind::Arch;
    Int p;     // FinitePrime
    QPoly pi;  // FFPrime, monic irreducible

    static Place prime(Int q) { return Place{PlaceKind::FinitePrime, std::move(q), {}}; }
    static Place ff(QPoly f) { return Place{PlaceKind::FFPrime, 0, std::move(f)}; }
    static Place ff_inf() { return Place{PlaceKind::FFInf, 0, {}}; }
    static Place arch() { return Place{PlaceKind::Arch, 0, {}}; }

    bool is_finite() const { return kind == PlaceKind::FinitePrime || kind == PlaceKind::FFPrime || kind == PlaceKind::FFInf; }

    // residue weight N_v: 1 for Q primes, deg pi for ff primes, 1 at the
    // ff-infinite place
    Rat N() const {
        switch (kind) {
            case PlaceKind::FinitePrime: return 1;
            case PlaceKind::FFPrime: return Rat(pi.degree());
            case PlaceKind::FFInf: return 1;
            default: throw std::domain_error("N at archimedean place");
        }
    }

    // global weight r_v (both K have r_v = 1 at every place)
    Rat r() const { return 1; }

    // primes of additive bad behaviour for degree-d dynamics: p <= d; never
    // triggers over Q(t) (residue characteristic 0)
    bool in_S_d(long d) const { return kind == PlaceKind::FinitePrime && p <= d; }

    std::string name() const {
        switch (kind) {
            case PlaceKind::FinitePrime: return p.get_str();
            case PlaceKind::FFPrime: return poly_to_string(pi);
            case PlaceKind::FFInf: return "t-inf";
            default: return "arch";
        }
    }

    friend bool operator==(const Place& a, const Place& b) {
        if (a.kind != b.kind) return false;
        if (a.kind == PlaceKind::FinitePrime) return a.p == b.p;
        if (a.kind == PlaceKind::FFPrime) return a.pi == b.pi;
        return true;
    }
    friend bool operator<(const Place& a, const Place& b) {
        if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
        if (a.kind == PlaceKind::FinitePrime) return a.p < b.p;
        if (a.kind == PlaceKind::FFPrime) {
            if (a.pi.degree() != b.pi.degree()) return a.pi.degree() < b.pi.degree();
            for (size_t i = 0; i < a.pi.c.size(); ++i)
                if (a.pi.c[i] != b.pi.c[i]) return a.pi.c[i] < b.pi.c[i];
            return false;
        }
        return false;
    }
};

// pi-adic multiplicity of a nonzero polynomial
inline long poly_multiplicity(QPoly f, const QPoly& pi) {
    long m = 0;
    while (true) {
        DivRem<Rat> dr = divrem(f, pi);
        if (!dr.r.is_zero()) return m;
        ++m;
        f = dr.q;
    }
}

// Exact valuation of x at a finite place. Conventions: v_p on Q is the usual
// p-adic valuation; v_pi counts pi-multiplicity; the ff-infinite valuation is
// deg(den) - deg(num). Archimedean places have no valuation.
inline ValExt valuation(const FieldElement& x, const Place& v) {
    if (x.is_zero()) return ValExt::infinity();
    switch (v.kind) {
        case PlaceKind::FinitePrime: {
            if (!x.is_rational())
                throw std::domain_error("valuation: Q-prime valuation of a nonconstant Q(t) element");
            const Rat& q = x.rational();
            return ValExt::of(Rat(val_int(q.get_num(), v.p) - val_int(q.get_den(), v.p)));
        }
        case PlaceKind::FFPrime: {
            RatFunc r = x.as_ratfunc();
            return ValExt::of(Rat(poly_multiplicity(r.num, v.pi) - poly_multiplicity(r.den, v.pi)));
        }
        case PlaceKind::FFInf: {
            RatFunc r = x.as_ratfunc();
            return ValExt::of(Rat(r.den.degree() - r.num.degree()));
        }
        default: throw std::domain_error("valuation at archimedean place");
    }
}

// Finite places where x could have nonzero valuation (exact support).
inline std::vector<Place> support_places(const FieldElement& x, Mode mode) {
    if (x.is_zero()) throw std::domain_error("support of zero");
    std::vector<Place> out;
    if (mode == Mode::Q) {
        if (!x.is_rational()) throw std::domain_error("Q-mode support of a Q(t) element");
        for (const auto& [p, e] : factor_rat(x.rational())) out.push_back(Place::prime(p));
        return out;
    }
    RatFunc r = x.as_ratfunc();
    std::vector<std::pair<QPoly, long>> fac;
    if (r.num.degree() >= 1)
        for (auto& f : factor_qpoly(r.num)) fac.push_back(f);
    if (r.den.degree() >= 1)
        for (auto& f : factor_qpoly(r.den)) fac.push_back(f);
    std::sort(fac.begin(), fac.end(), [](const auto& a, const auto& b) {
        return Place::ff(a.first) < Place::ff(b.first);
    });
    for (auto& [pi, e] : fac)
        if (out.empty() || !(out.back() == Place::ff(pi))) out.push_back(Place::ff(pi));
    if (r.den.degree() != r.num.degree()) out.push_back(Place::ff_inf());
    return out;
}

// Union of supports over several elements, sorted, zeros skipped.
inline std::vector<Place> joint_support(const std::vector<FieldElement>& xs, Mode mode) {
    std::vector<Place> all;
    for (const auto& x : xs) {
        if (x.is_zero()) continue;
        for (auto& v : support_places(x, mode)) all.push_back(v);
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all;
}

}  // namespace dynheights
