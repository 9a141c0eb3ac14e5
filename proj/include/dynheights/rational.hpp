#pragma once
// Exact rational plumbing shared by everything else: thin aliases over GMP,
// valuations extended by +infinity, and a few integer utilities.

#include <gmpxx.h>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynheights {

using Int = mpz_class;
using Rat = mpq_class;

// Valuation value: a rational, or +infinity (valuation of 0).
struct ValExt {
    bool inf = false;
    Rat v = 0;

    static ValExt infinity() { return ValExt{true, 0}; }
    static ValExt of(const Rat& r) { return ValExt{false, r}; }

    bool is_finite() const { return !inf; }

    friend bool operator==(const ValExt& a, const ValExt& b) {
        if (a.inf || b.inf) return a.inf == b.inf;
        return a.v == b.v;
    }
    friend bool operator<(const ValExt& a, const ValExt& b) {
        if (a.inf) return false;          // +inf not less than anything
        if (b.inf) return true;
        return a.v < b.v;
    }
    friend bool operator<=(const ValExt& a, const ValExt& b) { return a < b || a == b; }

    ValExt operator+(const ValExt& o) const {
        if (inf || o.inf) return infinity();
        return of(v + o.v);
    }
};

inline ValExt min(const ValExt& a, const ValExt& b) { return a < b ? a : b; }
inline ValExt max(const ValExt& a, const ValExt& b) { return a < b ? b : a; }

inline Int pow_int(const Int& b, unsigned long e) {
    Int r;
    mpz_pow_ui(r.get_mpz_t(), b.get_mpz_t(), e);
    return r;
}

// q^e for integer e (negative allowed, q != 0 then).
inline Rat pow_rat(const Rat& q, long e) {
    if (e == 0) return 1;
    bool neg = e < 0;
    unsigned long a = neg ? static_cast<unsigned long>(-e) : static_cast<unsigned long>(e);
    Rat r;
    mpz_pow_ui(r.get_num_mpz_t(), q.get_num().get_mpz_t(), a);
    mpz_pow_ui(r.get_den_mpz_t(), q.get_den().get_mpz_t(), a);
    r.canonicalize();
    if (neg) {
        if (r == 0) throw std::domain_error("pow_rat: 0 to negative power");
        r = 1 / r;
    }
    return r;
}

inline Int floor_rat(const Rat& q) {
    Int r;
    mpz_fdiv_q(r.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
    return r;
}

inline Int ceil_rat(const Rat& q) {
    Int r;
    mpz_cdiv_q(r.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
    return r;
}

inline Rat abs_rat(const Rat& q) { return q < 0 ? Rat(-q) : q; }

// Smallest rational of the form n/den with n/den >= q (used to round escape
// radii up without leaving Q).
inline Rat round_up_to_den(const Rat& q, const Int& den) {
    Rat scaled = q * Rat(den);
    return Rat(ceil_rat(scaled), den);
}

// Exact p-adic valuation of a nonzero integer.
inline long val_int(const Int& n, const Int& p) {
    if (n == 0) throw std::domain_error("val_int: valuation of 0");
    Int tmp;
    mp_bitcnt_t k = mpz_remove(tmp.get_mpz_t(), n.get_mpz_t(), p.get_mpz_t());
    return static_cast<long>(k);
}

inline std::string rat_to_string(const Rat& q) { return q.get_str(); }

inline Rat rat_from_string(const std::string& s) {
    Rat q;
    if (q.set_str(s, 10) != 0) throw std::invalid_argument("bad rational: " + s);
    q.canonicalize();
    return q;
}

}  // namespace dynheights
