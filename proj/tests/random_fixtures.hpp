#pragma once
// Deterministic generators shared by the unit and acceptance suites: random
// disjoint-disk kernels and random realizable component structures. Kernels
// are ultrametric by construction (bottom-up cluster merges at strictly
// increasing separation levels); structure radii are solved from the
// equilibrium rows, so the capacity constraint holds exactly by design.

#include <algorithm>
#include <random>
#include <vector>

#include "dynheights/berkovich.hpp"

namespace dynheights::testgen {

// two-argument Rat construction leaves values uncanonicalized, which breaks
// exact comparison downstream; every generated fraction goes through here
inline Rat frac(long num, long den) {
    Rat r(num, den);
    r.canonicalize();
    return r;
}

inline DiskUnionKernel random_kernel(std::mt19937_64& rng, size_t s, const Place& v) {
    std::uniform_int_distribution<long> start(-12, 12);
    std::uniform_int_distribution<long> step(1, 6);
    std::vector<std::vector<Rat>> M(s, std::vector<Rat>(s, Rat(0)));
    std::vector<std::vector<size_t>> clusters;
    for (size_t i = 0; i < s; ++i) clusters.push_back({i});
    // merge bottom-up: each join happens at a strictly larger separation, so
    // every triple of off-diagonal distances satisfies the ultrametric rule
    Rat level = frac(start(rng), 6);
    while (clusters.size() > 1) {
        level += frac(step(rng), 6);
        std::uniform_int_distribution<size_t> pick(0, clusters.size() - 1);
        size_t a = pick(rng), b = pick(rng);
        while (b == a) b = pick(rng);
        for (size_t i : clusters[a])
            for (size_t j : clusters[b]) M[i][j] = M[j][i] = -level;
        clusters[a].insert(clusters[a].end(), clusters[b].begin(), clusters[b].end());
        clusters.erase(clusters.begin() + static_cast<long>(b));
    }
    // each disk strictly smaller than the distance to its nearest neighbor
    for (size_t i = 0; i < s; ++i) {
        bool any = false;
        Rat closest;
        for (size_t j = 0; j < s; ++j)
            if (j != i && (!any || M[i][j] > closest)) {
                closest = M[i][j];
                any = true;
            }
        M[i][i] = (any ? closest : frac(start(rng), 6)) + frac(step(rng), 6);
    }
    return DiskUnionKernel{v, std::move(M)};
}

inline StructureSpec random_structure(std::mt19937_64& rng, long d, long m0) {
    long total = 1;
    for (long i = 0; i < m0; ++i) total *= d;
    for (;;) {
        StructureSpec s;
        s.m0 = m0;
        s.d = d;
        std::uniform_int_distribution<long> scount(1, std::min<long>(total, 5));
        long parts = scount(rng);
        s.deg.assign(parts, 1);
        std::uniform_int_distribution<long> who(0, parts - 1);
        for (long rest = total - parts; rest > 0; --rest) s.deg[who(rng)] += 1;

        // distinct merge levels inside the admissible box, used in ascending
        // order so the pairwise data is ultrametric
        const long den = 4;
        std::uniform_int_distribution<long> lv(-total * den + 1, den);
        std::vector<Rat> levels;
        while (levels.size() + 1 < static_cast<size_t>(parts)) {
            Rat cand = frac(lv(rng), den);
            bool seen = false;
            for (const Rat& x : levels) seen = seen || x == cand;
            if (!seen) levels.push_back(cand);
        }
        std::sort(levels.begin(), levels.end());

        size_t n = static_cast<size_t>(parts);
        s.r.assign(n, std::vector<Rat>(n, Rat(0)));
        std::vector<std::vector<size_t>> clusters;
        for (size_t i = 0; i < n; ++i) clusters.push_back({i});
        for (const Rat& level : levels) {
            std::uniform_int_distribution<size_t> pick(0, clusters.size() - 1);
            size_t a = pick(rng), b = pick(rng);
            while (b == a) b = pick(rng);
            for (size_t i : clusters[a])
                for (size_t j : clusters[b]) s.r[i][j] = s.r[j][i] = level;
            clusters[a].insert(clusters[a].end(), clusters[b].begin(), clusters[b].end());
            clusters.erase(clusters.begin() + static_cast<long>(b));
        }

        // solve the diagonal from the equilibrium rows: with mass deg_i/d^m0
        // on disk i the potential must equal -1/d^m0 everywhere
        bool ok = true;
        for (size_t i = 0; i < n && ok; ++i) {
            Rat cross = 0;
            for (size_t j = 0; j < n; ++j)
                if (j != i) cross += Rat(s.deg[j]) * s.r[i][j];
            s.r[i][i] = (Rat(1) - cross) / Rat(s.deg[i]);
            if (s.r[i][i] < Rat(-total)) ok = false;
            for (size_t j = 0; j < n; ++j)
                if (j != i && !(s.r[i][i] < s.r[i][j])) ok = false;
        }
        if (!ok) continue;

        std::uniform_int_distribution<long> mass(0, 4);
        std::vector<long> raw(n, 0);
        long msum = 0;
        for (size_t i = 0; i < n; ++i) msum += raw[i] = mass(rng);
        if (msum == 0) continue;
        for (size_t i = 0; i < n; ++i) s.k.push_back(frac(raw[i], msum));
        return s;
    }
}

// Minimum of w^T M w over the denominator-D rational grid on the simplex.
inline Rat grid_min_energy(const std::vector<std::vector<Rat>>& M, long D) {
    size_t n = M.size();
    std::vector<long> counts(n, 0);
    Rat best;
    bool any = false;
    auto energy_of = [&]() {
        std::vector<Rat> w(n);
        for (size_t i = 0; i < n; ++i) w[i] = frac(counts[i], D);
        Rat e = 0;
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j) e += w[i] * M[i][j] * w[j];
        return e;
    };
    auto rec = [&](auto&& self, size_t pos, long rest) -> void {
        if (pos + 1 == n) {
            counts[pos] = rest;
            Rat e = energy_of();
            if (!any || e < best) {
                best = e;
                any = true;
            }
            return;
        }
        for (long c = 0; c <= rest; ++c) {
            counts[pos] = c;
            self(self, pos + 1, rest - c);
        }
    };
    rec(rec, 0, D);
    return best;
}

}  // namespace dynheights::testgen
