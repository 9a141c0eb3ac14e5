#pragma once
// Integer factorization at desk scale: trial division, Miller-Rabin, Brent's
// rho. Inputs here come from user-entered rationals and their differences, so
// a few thousand bits of smooth-ish numbers is the realistic ceiling.

#include <algorithm>
#include <map>
#include <stdexcept>

#include "rational.hpp"

namespace dynheights {

inline bool is_probable_prime(const Int& n) {
    // 40 rounds of GMP's Miller-Rabin; composite escape odds < 4^-40.
    return mpz_probab_prime_p(n.get_mpz_t(), 40) != 0;
}

namespace detail {

inline Int pollard_brent(const Int& n, unsigned long seed) {
    // Brent's cycle-finding variant of Pollard rho; n odd composite, not a
    // perfect power of a prime we already stripped.
    gmp_randclass rng(gmp_randinit_mt);
    rng.seed(seed);
    while (true) {
        Int y = rng.get_z_range(n - 3) + 2;
        Int c = rng.get_z_range(n - 2) + 1;
        Int m = 128, g = 1, r = 1, q = 1, x, ys;
        while (g == 1) {
            x = y;
            for (Int i = 0; i < r; ++i) y = (y * y + c) % n;
            Int k = 0;
            while (k < r && g == 1) {
                ys = y;
                Int lim = m < r - k ? m : r - k;
                for (Int i = 0; i < lim; ++i) {
                    y = (y * y + c) % n;
                    Int d = x - y;
                    if (d < 0) d = -d;
                    q = q * d % n;
                }
                mpz_gcd(g.get_mpz_t(), q.get_mpz_t(), n.get_mpz_t());
                k += m;
            }
            r *= 2;
        }
        if (g == n) {
            // backtrack one step at a time
            g = 1;
            while (g == 1) {
                ys = (ys * ys + c) % n;
                Int d = x - ys;
                if (d < 0) d = -d;
                mpz_gcd(g.get_mpz_t(), d.get_mpz_t(), n.get_mpz_t());
            }
        }
        if (g != n) return g;
        // rare failure: retry with fresh parameters
    }
}

inline void factor_rec(Int n, std::map<Int, long>& out, unsigned long& seed) {
    if (n == 1) return;
    if (is_probable_prime(n)) {
        out[n] += 1;
        return;
    }
    Int d = pollard_brent(n, seed++);
    factor_rec(d, out, seed);
    factor_rec(n / d, out, seed);
}

}  // namespace detail

// Factor |n| into prime powers; n must be nonzero. Sign is dropped.
inline std::map<Int, long> factor_int(Int n) {
    if (n == 0) throw std::domain_error("factor_int: zero");
    if (n < 0) n = -n;
    std::map<Int, long> out;
    if (n == 1) return out;
    for (long p : {2L, 3L, 5L, 7L, 11L, 13L}) {
        while (mpz_divisible_ui_p(n.get_mpz_t(), p)) {
            n /= p;
            out[Int(p)] += 1;
        }
    }
    // trial division up to 10^5 before handing off to rho
    for (Int p = 17; p * p <= n && p < 100000; p += 2) {
        while (mpz_divisible_p(n.get_mpz_t(), p.get_mpz_t())) {
            n /= p;
            out[p] += 1;
        }
    }
    if (n > 1) {
        unsigned long seed = 0x9e3779b9UL;
        detail::factor_rec(n, out, seed);
    }
    return out;
}

// Prime factorization of a nonzero rational: exponents in Z, negative for the
// denominator part.
inline std::map<Int, long> factor_rat(const Rat& q) {
    if (q == 0) throw std::domain_error("factor_rat: zero");
    std::map<Int, long> out = factor_int(q.get_num());
    for (const auto& [p, e] : factor_int(q.get_den())) out[p] -= e;
    for (auto it = out.begin(); it != out.end();)
        it = it->second == 0 ? out.erase(it) : std::next(it);
    return out;
}

// All divisors of n >= 1, ascending. Desk scale: guarded by a count cap.
inline std::vector<Int> divisors(const Int& n, size_t cap = 1 << 20) {
    std::vector<Int> ds = {1};
    for (const auto& [p, e] : factor_int(n)) {
        size_t base = ds.size();
        if (base * (e + 1) > cap) throw std::runtime_error("divisors: too many divisors");
        Int pk = 1;
        for (long k = 1; k <= e; ++k) {
            pk *= p;
            for (size_t i = 0; i < base; ++i) ds.push_back(ds[i] * pk);
        }
    }
    std::sort(ds.begin(), ds.end());
    return ds;
}

}  // namespace dynheights
