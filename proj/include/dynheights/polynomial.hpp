#pragma once
// Dense univariate polynomials over an exact field type T (Rat, FieldElement).
// Coefficients are stored low-to-high with no trailing zeros; the zero
// polynomial has an empty coefficient vector and degree -1.

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace dynheights {

template <class T>
struct Poly {
    std::vector<T> c;

    Poly() = default;
    explicit Poly(std::vector<T> coeffs) : c(std::move(coeffs)) { trim(); }
    static Poly constant(const T& v) { return Poly(std::vector<T>{v}); }
    static Poly x() { return Poly(std::vector<T>{T(0), T(1)}); }

    void trim() {
        while (!c.empty() && c.back() == T(0)) c.pop_back();
    }

    long degree() const { return static_cast<long>(c.size()) - 1; }
    bool is_zero() const { return c.empty(); }
    const T& lead() const {
        if (c.empty()) throw std::domain_error("lead of zero polynomial");
        return c.back();
    }
    T coeff(size_t i) const { return i < c.size() ? c[i] : T(0); }

    friend bool operator==(const Poly& a, const Poly& b) { return a.c == b.c; }
    friend bool operator!=(const Poly& a, const Poly& b) { return !(a == b); }

    Poly operator-() const {
        Poly r = *this;
        for (auto& v : r.c) v = -v;
        return r;
    }

    friend Poly operator+(const Poly& a, const Poly& b) {
        std::vector<T> r(std::max(a.c.size(), b.c.size()), T(0));
        for (size_t i = 0; i < a.c.size(); ++i) r[i] = a.c[i];
        for (size_t i = 0; i < b.c.size(); ++i) r[i] = r[i] + b.c[i];
        return Poly(std::move(r));
    }
    friend Poly operator-(const Poly& a, const Poly& b) { return a + (-b); }

    friend Poly operator*(const Poly& a, const Poly& b) {
        if (a.is_zero() || b.is_zero()) return Poly();
        std::vector<T> r(a.c.size() + b.c.size() - 1, T(0));
        for (size_t i = 0; i < a.c.size(); ++i)
            for (size_t j = 0; j < b.c.size(); ++j) r[i + j] = r[i + j] + a.c[i] * b.c[j];
        return Poly(std::move(r));
    }

    friend Poly operator*(const T& s, const Poly& a) {
        Poly r = a;
        for (auto& v : r.c) v = s * v;
        r.trim();
        return r;
    }

    T eval(const T& x) const {
        T acc(0);
        for (size_t i = c.size(); i-- > 0;) acc = acc * x + c[i];
        return acc;
    }

    Poly derivative() const {
        if (c.size() <= 1) return Poly();
        std::vector<T> r(c.size() - 1);
        for (size_t i = 1; i < c.size(); ++i) r[i - 1] = T(static_cast<long>(i)) * c[i];
        return Poly(std::move(r));
    }

    // f(x + a): repeated synthetic division, O(d^2).
    Poly shift(const T& a) const {
        std::vector<T> w = c;
        std::vector<T> out;
        out.reserve(c.size());
        for (size_t k = 0; k < c.size(); ++k) {
            // divide w by (x - (-a)) i.e. evaluate remainder at -?? synthetic:
            for (size_t i = w.size() - 1; i-- > 0;) w[i] = w[i] + a * w[i + 1];
            out.push_back(w[0]);
            w.erase(w.begin());
        }
        return Poly(std::move(out));
    }

    // substitute g for x: f(g(x)).
    Poly compose(const Poly& g) const {
        Poly acc;
        for (size_t i = c.size(); i-- > 0;) acc = acc * g + constant(c[i]);
        return acc;
    }
};

template <class T>
struct DivRem {
    Poly<T> q, r;
};

template <class T>
DivRem<T> divrem(const Poly<T>& a, const Poly<T>& b) {
    if (b.is_zero()) throw std::domain_error("polynomial division by zero");
    Poly<T> r = a, q;
    long db = b.degree();
    if (a.degree() >= db) q.c.assign(a.degree() - db + 1, T(0));
    T inv_lead = T(1) / b.lead();
    while (!r.is_zero() && r.degree() >= db) {
        long k = r.degree() - db;
        T f = r.lead() * inv_lead;
        q.c[k] = f;
        for (long i = 0; i <= db; ++i) r.c[k + i] = r.c[k + i] - f * b.c[i];
        r.trim();
    }
    q.trim();
    return {q, r};
}

template <class T>
Poly<T> poly_mod(const Poly<T>& a, const Poly<T>& b) {
    return divrem(a, b).r;
}

// Monic gcd over a field.
template <class T>
Poly<T> poly_gcd(Poly<T> a, Poly<T> b) {
    while (!b.is_zero()) {
        Poly<T> r = poly_mod(a, b);
        a = b;
        b = r;
    }
    if (a.is_zero()) return a;
    return (T(1) / a.lead()) * a;
}

template <class T>
Poly<T> poly_pow_mod(Poly<T> base, unsigned long e, const Poly<T>& mod) {
    Poly<T> acc = Poly<T>::constant(T(1));
    base = poly_mod(base, mod);
    while (e) {
        if (e & 1) acc = poly_mod(acc * base, mod);
        base = poly_mod(base * base, mod);
        e >>= 1;
    }
    return acc;
}

}  // namespace dynheights
