#pragma once
// Factorization in Q[t] into monic irreducibles, exact and desk-scale:
// squarefree split, rational-root stripping, then Kronecker interpolation for
// what remains. Kronecker is doubly exponential in principle; a work budget
// turns pathological inputs into a clean error instead of a hang.

#include <cmath>
#include <map>

#include "factor.hpp"
#include "polynomial.hpp"
#include "rational.hpp"

namespace dynheights {

using IPoly = Poly<Int>;

namespace polydetail {

inline IPoly to_primitive(const QPoly& p) {
    Int l = 1;
    for (const Rat& c : p.c) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), c.get_den().get_mpz_t());
    std::vector<Int> w(p.c.size());
    for (size_t i = 0; i < p.c.size(); ++i) {
        Rat scaled = p.c[i] * Rat(l);
        w[i] = scaled.get_num();  // denominator is 1 after scaling
    }
    Int g = 0;
    for (const Int& c : w) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), c.get_mpz_t());
    if (g > 1)
        for (Int& c : w) c /= g;
    return IPoly(std::move(w));
}

inline QPoly to_qpoly(const IPoly& p) {
    std::vector<Rat> w(p.c.size());
    for (size_t i = 0; i < p.c.size(); ++i) w[i] = Rat(p.c[i]);
    return QPoly(std::move(w));
}

inline QPoly make_monic(const QPoly& p) { return (Rat(1) / p.lead()) * p; }

// all rational roots of a primitive integer polynomial with nonzero constant
// term, by the rational root theorem
inline std::vector<Rat> rational_roots(const IPoly& p) {
    std::vector<Rat> roots;
    QPoly q = to_qpoly(p);
    for (const Int& a : divisors(abs(p.c.front())))
        for (const Int& b : divisors(abs(p.lead())))
            for (int sgn : {1, -1}) {
                Rat r(sgn * a, b);
                r.canonicalize();
                if (q.eval(r) == 0) roots.push_back(r);
            }
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
    return roots;
}

// Kronecker: find one nontrivial factor of a squarefree primitive integer
// polynomial with no rational roots, or return empty when irreducible.
inline IPoly kronecker_factor(const IPoly& p, long budget = 2000000) {
    long n = p.degree();
    QPoly q = to_qpoly(p);
    for (long k = 2; k <= n / 2; ++k) {
        // evaluation points 0, 1, -1, 2, -2, ...
        std::vector<Rat> xs;
        for (long j = 0; static_cast<long>(xs.size()) < k + 1; ++j) {
            xs.push_back(Rat(j == 0 ? 0 : (j % 2 ? (j + 1) / 2 : -(j / 2))));
        }
        std::vector<std::vector<Int>> choices(k + 1);
        double log_work = 0;
        for (long i = 0; i <= k; ++i) {
            Rat v = q.eval(xs[i]);
            Int vi = v.get_num();  // integer input, integer values
            for (const Int& d : divisors(abs(vi))) {
                choices[i].push_back(d);
                choices[i].push_back(-d);
            }
            log_work += std::log2(static_cast<double>(choices[i].size()));
        }
        // first coordinate sign can be fixed: g and -g generate the same factor
        choices[0].erase(std::remove_if(choices[0].begin(), choices[0].end(),
                                        [](const Int& d) { return d < 0; }),
                         choices[0].end());
        if (log_work - 1 > std::log2(static_cast<double>(budget)))
            throw std::runtime_error("polynomial factorization budget exceeded (Kronecker)");
        std::vector<size_t> idx(k + 1, 0);
        while (true) {
            // Lagrange interpolation through (xs[i], choices[i][idx[i]])
            std::vector<Rat> ys(k + 1);
            for (long i = 0; i <= k; ++i) ys[i] = Rat(choices[i][idx[i]]);
            QPoly g;
            for (long i = 0; i <= k; ++i) {
                QPoly li = QPoly::constant(1);
                Rat denom = 1;
                for (long j = 0; j <= k; ++j) {
                    if (i == j) continue;
                    li = li * QPoly(std::vector<Rat>{-xs[j], 1});
                    denom *= xs[i] - xs[j];
                }
                g = g + (ys[i] / denom) * li;
            }
            if (g.degree() == k) {
                bool integral = true;
                for (const Rat& c : g.c)
                    if (c.get_den() != 1) integral = false;
                if (integral && divrem(q, g).r.is_zero()) return to_primitive(g);
            }
            long pos = 0;
            while (pos <= k && ++idx[pos] == choices[pos].size()) idx[pos++] = 0;
            if (pos > k) break;
        }
    }
    return IPoly();  // irreducible
}

inline void factor_squarefree(const IPoly& p, std::map<std::string, std::pair<QPoly, long>>& acc,
                              long mult);

inline void record_factor(const QPoly& monic_irr, long mult,
                          std::map<std::string, std::pair<QPoly, long>>& acc) {
    std::string key;
    for (const Rat& c : monic_irr.c) key += c.get_str() + ",";
    auto it = acc.find(key);
    if (it == acc.end())
        acc[key] = {monic_irr, mult};
    else
        it->second.second += mult;
}

inline void factor_squarefree(const IPoly& p, std::map<std::string, std::pair<QPoly, long>>& acc,
                              long mult) {
    if (p.degree() <= 0) return;
    if (p.degree() == 1) {
        record_factor(make_monic(to_qpoly(p)), mult, acc);
        return;
    }
    for (const Rat& r : rational_roots(p)) {
        // strip (t - r) to full multiplicity within this squarefree piece (1)
        record_factor(QPoly(std::vector<Rat>{-r, 1}), mult, acc);
    }
    QPoly rem = to_qpoly(p);
    for (const Rat& r : rational_roots(p)) rem = divrem(rem, QPoly(std::vector<Rat>{-r, 1})).q;
    if (rem.degree() <= 0) return;
    if (rem.degree() == 1) {
        record_factor(make_monic(rem), mult, acc);
        return;
    }
    IPoly ip = to_primitive(rem);
    IPoly f = kronecker_factor(ip);
    if (f.is_zero()) {
        record_factor(make_monic(rem), mult, acc);
        return;
    }
    factor_squarefree(f, acc, mult);
    factor_squarefree(to_primitive(divrem(to_qpoly(ip), to_qpoly(f)).q), acc, mult);
}

}  // namespace polydetail

// Monic irreducible factors of p over Q with multiplicities. The rational
// content/unit is dropped (it is a unit at every finite place of Q(t)).
inline std::vector<std::pair<QPoly, long>> factor_qpoly(const QPoly& p) {
    if (p.is_zero()) throw std::domain_error("factor_qpoly: zero polynomial");
    std::map<std::string, std::pair<QPoly, long>> acc;
    // strip t^k
    QPoly work = p;
    long tk = 0;
    while (!work.is_zero() && work.c[0] == 0) {
        work.c.erase(work.c.begin());
        ++tk;
    }
    if (tk > 0) polydetail::record_factor(QPoly::x(), tk, acc);
    if (work.degree() >= 1) {
        // squarefree decomposition: work = prod s_i^i via gcd chains
        QPoly a = polydetail::make_monic(work);
        QPoly g = poly_gcd(a, a.derivative());
        QPoly w = divrem(a, g).q;  // product of distinct irreducibles
        long i = 1;
        while (w.degree() >= 1) {
            QPoly y = poly_gcd(w, g);
            QPoly si = divrem(w, y).q;  // factors of exact multiplicity i
            if (si.degree() >= 1) polydetail::factor_squarefree(polydetail::to_primitive(si), acc, i);
            w = y;
            if (!g.is_zero() && y.degree() >= 0) g = divrem(g, y).q;
            ++i;
        }
    }
    std::vector<std::pair<QPoly, long>> out;
    for (auto& [k, v] : acc) out.push_back(v);
    return out;
}

}  // namespace dynheights
