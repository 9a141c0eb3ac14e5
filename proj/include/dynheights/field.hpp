#pragma once
// Elements of the base field K, where K is Q or Q(t). Rationals embed into
// Q(t) as constants, so mixed arithmetic promotes silently and constant
// results demote back to the rational representation. Every element is kept
// canonical: coprime numerator/denominator, monic denominator in Q(t).

#include <string>

#include "polynomial.hpp"
#include "rational.hpp"

namespace dynheights {

enum class Mode { Q, Qt };

inline const char* mode_name(Mode m) { return m == Mode::Q ? "Q" : "Q(t)"; }

using QPoly = Poly<Rat>;

struct RatFunc {
    QPoly num, den;  // den monic, gcd(num, den) = 1; zero is (0, 1)

    RatFunc() : num(), den(QPoly::constant(1)) {}
    RatFunc(QPoly n, QPoly d) : num(std::move(n)), den(std::move(d)) { canonicalize(); }

    void canonicalize() {
        if (den.is_zero()) throw std::domain_error("RatFunc: zero denominator");
        if (num.is_zero()) {
            den = QPoly::constant(1);
            return;
        }
        QPoly g = poly_gcd(num, den);
        if (g.degree() > 0) {
            num = divrem(num, g).q;
            den = divrem(den, g).q;
        }
        Rat lc = den.lead();
        if (lc != 1) {
            Rat inv = 1 / lc;
            num = inv * num;
            den = inv * den;
        }
    }

    bool is_zero() const { return num.is_zero(); }
    bool is_constant() const { return num.degree() <= 0 && den.degree() == 0; }
    Rat constant_value() const { return num.is_zero() ? Rat(0) : num.c[0] / den.c[0]; }

    friend bool operator==(const RatFunc& a, const RatFunc& b) {
        return a.num == b.num && a.den == b.den;
    }
};

struct FieldElement {
    Mode mode = Mode::Q;
    Rat q;       // valid iff mode == Q
    RatFunc rf;  // valid iff mode == Qt

    FieldElement() = default;
    FieldElement(long v) : q(v) {}  // NOLINT: implicit for Poly<T> literals
    FieldElement(int v) : q(v) {}   // NOLINT
    explicit FieldElement(Rat v) : q(std::move(v)) {}
    explicit FieldElement(RatFunc v) : mode(Mode::Qt), rf(std::move(v)) { demote(); }

    static FieldElement t() {
        RatFunc r;
        r.num = QPoly::x();
        return FieldElement(r);
    }

    // Q(t) constants collapse back into the rational representation.
    void demote() {
        if (mode == Mode::Qt && rf.is_constant()) {
            q = rf.constant_value();
            rf = RatFunc();
            mode = Mode::Q;
        }
    }

    bool is_zero() const { return mode == Mode::Q ? q == 0 : rf.is_zero(); }
    bool is_rational() const { return mode == Mode::Q; }
    const Rat& rational() const {
        if (mode != Mode::Q) throw std::domain_error("FieldElement: not a rational");
        return q;
    }
    RatFunc as_ratfunc() const {
        if (mode == Mode::Qt) return rf;
        RatFunc r;
        r.num = q == 0 ? QPoly() : QPoly::constant(q);
        return r;
    }

    friend bool operator==(const FieldElement& a, const FieldElement& b) {
        if (a.mode != b.mode) return false;  // canonical: constants always live in Q
        return a.mode == Mode::Q ? a.q == b.q : a.rf == b.rf;
    }
    friend bool operator!=(const FieldElement& a, const FieldElement& b) { return !(a == b); }

    FieldElement operator-() const {
        FieldElement r = *this;
        if (r.mode == Mode::Q)
            r.q = -r.q;
        else
            r.rf.num = -r.rf.num;
        return r;
    }

    friend FieldElement operator+(const FieldElement& a, const FieldElement& b) {
        if (a.mode == Mode::Q && b.mode == Mode::Q) return FieldElement(Rat(a.q + b.q));
        RatFunc x = a.as_ratfunc(), y = b.as_ratfunc();
        return FieldElement(RatFunc(x.num * y.den + y.num * x.den, x.den * y.den));
    }
    friend FieldElement operator-(const FieldElement& a, const FieldElement& b) { return a + (-b); }

    friend FieldElement operator*(const FieldElement& a, const FieldElement& b) {
        if (a.mode == Mode::Q && b.mode == Mode::Q) return FieldElement(Rat(a.q * b.q));
        RatFunc x = a.as_ratfunc(), y = b.as_ratfunc();
        return FieldElement(RatFunc(x.num * y.num, x.den * y.den));
    }

    friend FieldElement operator/(const FieldElement& a, const FieldElement& b) {
        if (b.is_zero()) throw std::domain_error("FieldElement: division by zero");
        if (a.mode == Mode::Q && b.mode == Mode::Q) return FieldElement(Rat(a.q / b.q));
        RatFunc x = a.as_ratfunc(), y = b.as_ratfunc();
        return FieldElement(RatFunc(x.num * y.den, x.den * y.num));
    }
};

using KPoly = Poly<FieldElement>;

inline FieldElement field_pow(const FieldElement& x, long e) {
    if (e < 0) return FieldElement(1) / field_pow(x, -e);
    FieldElement r(1), b = x;
    for (long k = e; k > 0; k >>= 1) {
        if (k & 1) r = r * b;
        b = b * b;
    }
    return r;
}

// ---- printing ----

std::string poly_to_string(const QPoly& p, const std::string& var = "t");
std::string field_to_string(const FieldElement& x);

// ---- parsing ----
// Rationals: "a/b". Q(t): polynomials "c_k*t^k+...+c_0" (any term order), or
// "(num)/(den)". A plain rational parses in either mode.
FieldElement parse_field(const std::string& s, Mode mode);
QPoly parse_qpoly(const std::string& s);

}  // namespace dynheights
