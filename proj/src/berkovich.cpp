#include "dynheights/berkovich.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

#include "dynheights/heights.hpp"
#include "dynheights/local_theory.hpp"
#include "json.hpp"

namespace dynheights {

namespace {

using Matrix = std::vector<std::vector<Rat>>;

// ---------------------------------------------------------------------------
// exact linear algebra

std::vector<Rat> solve_linear(Matrix A, std::vector<Rat> b) {
    size_t n = A.size();
    for (size_t col = 0; col < n; ++col) {
        size_t piv = col;
        while (piv < n && A[piv][col] == 0) ++piv;
        if (piv == n) throw std::logic_error("singular linear system");
        std::swap(A[piv], A[col]);
        std::swap(b[piv], b[col]);
        Rat inv = Rat(1) / A[col][col];
        for (size_t j = col; j < n; ++j) A[col][j] *= inv;
        b[col] *= inv;
        for (size_t i = 0; i < n; ++i) {
            if (i == col || A[i][col] == 0) continue;
            Rat f = A[i][col];
            for (size_t j = col; j < n; ++j) A[i][j] -= f * A[col][j];
            b[i] -= f * b[col];
        }
    }
    return b;
}

Rat quad_form(const Matrix& M, const std::vector<Rat>& w) {
    Rat e = 0;
    for (size_t i = 0; i < M.size(); ++i) {
        if (w[i] == 0) continue;
        for (size_t j = 0; j < M.size(); ++j) e += w[i] * M[i][j] * w[j];
    }
    return e;
}

std::vector<Rat> potential_of(const Matrix& M, const std::vector<Rat>& w) {
    std::vector<Rat> u(M.size(), Rat(0));
    for (size_t i = 0; i < M.size(); ++i)
        for (size_t j = 0; j < M.size(); ++j) u[i] += M[i][j] * w[j];
    return u;
}

void check_kernel_matrix(const Matrix& M) {
    size_t n = M.size();
    if (n == 0) throw std::invalid_argument("empty kernel");
    for (const auto& row : M)
        if (row.size() != n) throw std::invalid_argument("kernel matrix not square");
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            if (M[i][j] != M[j][i]) throw std::invalid_argument("kernel matrix not symmetric");
            if (!(M[i][j] < std::min(M[i][i], M[j][j])))
                throw std::invalid_argument("overlapping disks");
        }
}

// The energy form must be strictly positive on every direction that moves
// mass within a group; for log-distance kernels of disjoint disk families
// this is a theorem, so a failure here means the input was not such a kernel.
void assert_pd_on_mass_directions(const Matrix& M,
                                  const std::vector<std::vector<size_t>>& members) {
    std::vector<std::vector<Rat>> dirs;
    for (const auto& mem : members)
        for (size_t t = 1; t < mem.size(); ++t) {
            std::vector<Rat> d(M.size(), Rat(0));
            d[mem[0]] = Rat(-1);
            d[mem[t]] = Rat(1);
            dirs.push_back(std::move(d));
        }
    if (dirs.empty()) return;
    size_t r = dirs.size();
    Matrix P(r, std::vector<Rat>(r, Rat(0)));
    for (size_t i = 0; i < r; ++i) {
        std::vector<Rat> Md = potential_of(M, dirs[i]);
        for (size_t j = 0; j < r; ++j)
            for (size_t t = 0; t < M.size(); ++t) P[i][j] += dirs[j][t] * Md[t];
    }
    for (size_t c = 0; c < r; ++c) {
        if (!(P[c][c] > 0))
            throw std::logic_error("kernel not positive definite on mass-preserving directions");
        for (size_t i = c + 1; i < r; ++i) {
            Rat f = P[i][c] / P[c][c];
            for (size_t j = c; j < r; ++j) P[i][j] -= f * P[c][j];
        }
    }
}

struct QPOut {
    bool ok = false;
    std::vector<Rat> w;       // full length, zeros off support
    std::vector<Rat> lambda;  // per group, zero for massless groups
    Rat energy = 0;
};

// Stationarity system on a fixed support: potentials equalized to the group
// multiplier on the support, masses prescribed per group.
QPOut solve_on_support(const Matrix& M, const std::vector<size_t>& group,
                       const std::vector<Rat>& kvec, const std::vector<size_t>& support,
                       const std::vector<size_t>& active) {
    size_t ns = support.size(), ng = active.size();
    std::vector<long> gpos(kvec.size(), -1);
    for (size_t a = 0; a < ng; ++a) gpos[active[a]] = static_cast<long>(a);
    size_t dim = ns + ng;
    Matrix A(dim, std::vector<Rat>(dim, Rat(0)));
    std::vector<Rat> b(dim, Rat(0));
    for (size_t r = 0; r < ns; ++r) {
        for (size_t c = 0; c < ns; ++c) A[r][c] = M[support[r]][support[c]];
        A[r][ns + static_cast<size_t>(gpos[group[support[r]]])] = Rat(-1);
    }
    for (size_t a = 0; a < ng; ++a) {
        for (size_t c = 0; c < ns; ++c)
            if (group[support[c]] == active[a]) A[ns + a][c] = Rat(1);
        b[ns + a] = kvec[active[a]];
    }
    QPOut out;
    std::vector<Rat> sol;
    try {
        sol = solve_linear(std::move(A), std::move(b));
    } catch (const std::logic_error&) {
        return out;
    }
    out.ok = true;
    out.w.assign(M.size(), Rat(0));
    for (size_t r = 0; r < ns; ++r) out.w[support[r]] = sol[r];
    out.lambda.assign(kvec.size(), Rat(0));
    for (size_t a = 0; a < ng; ++a) out.lambda[active[a]] = sol[ns + a];
    out.energy = quad_form(M, out.w);
    return out;
}

bool covers_active(const std::vector<size_t>& support, const std::vector<size_t>& group,
                   const std::vector<size_t>& active) {
    for (size_t g : active) {
        bool hit = false;
        for (size_t i : support)
            if (group[i] == g) {
                hit = true;
                break;
            }
        if (!hit) return false;
    }
    return true;
}

// Minimize w^T M w over w >= 0 with prescribed group masses. Active-set
// descent (drop the most negative weight) with exact KKT verification; if the
// greedy walk stalls, fall back to enumerating supports, which is exhaustive
// over the faces of the feasible polytope and hence finds the global minimum.
QPOut qp_minimize(const Matrix& M, const std::vector<size_t>& group,
                  const std::vector<Rat>& kvec) {
    size_t n = M.size();
    if (group.size() != n) throw std::invalid_argument("group vector size mismatch");
    for (size_t g : group)
        if (g >= kvec.size()) throw std::invalid_argument("group id out of range");
    std::vector<size_t> active;
    std::vector<std::vector<size_t>> members;
    for (size_t g = 0; g < kvec.size(); ++g) {
        if (kvec[g] < 0) throw std::invalid_argument("negative mass");
        if (kvec[g] == 0) continue;
        std::vector<size_t> mem;
        for (size_t i = 0; i < n; ++i)
            if (group[i] == g) mem.push_back(i);
        if (mem.empty()) throw std::invalid_argument("infeasible mass vector");
        active.push_back(g);
        members.push_back(std::move(mem));
    }
    if (active.empty()) {
        QPOut out;
        out.ok = true;
        out.w.assign(n, Rat(0));
        out.lambda.assign(kvec.size(), Rat(0));
        return out;
    }
    assert_pd_on_mass_directions(M, members);

    std::vector<size_t> pool;
    for (const auto& mem : members) pool.insert(pool.end(), mem.begin(), mem.end());
    std::sort(pool.begin(), pool.end());

    std::vector<size_t> S = pool;
    for (size_t iter = 0; iter <= pool.size(); ++iter) {
        QPOut q = solve_on_support(M, group, kvec, S, active);
        if (!q.ok) break;
        long worst = -1;
        for (size_t i : S)
            if (q.w[i] < 0 && (worst < 0 || q.w[i] < q.w[static_cast<size_t>(worst)]))
                worst = static_cast<long>(i);
        if (worst < 0) {
            std::vector<Rat> u = potential_of(M, q.w);
            bool kkt = true;
            for (size_t i : pool) {
                if (std::find(S.begin(), S.end(), i) != S.end()) continue;
                if (u[i] < q.lambda[group[i]]) {
                    kkt = false;
                    break;
                }
            }
            if (kkt) return q;
            break;
        }
        S.erase(std::find(S.begin(), S.end(), static_cast<size_t>(worst)));
        if (!covers_active(S, group, active)) break;
    }

    // exhaustive face enumeration
    QPOut best;
    size_t np = pool.size();
    for (unsigned long mask = 1; mask < (1ul << np); ++mask) {
        std::vector<size_t> S2;
        for (size_t t = 0; t < np; ++t)
            if (mask & (1ul << t)) S2.push_back(pool[t]);
        if (!covers_active(S2, group, active)) continue;
        QPOut q = solve_on_support(M, group, kvec, S2, active);
        if (!q.ok) continue;
        bool feas = true;
        for (size_t i : S2)
            if (q.w[i] < 0) {
                feas = false;
                break;
            }
        if (!feas) continue;
        if (!best.ok || q.energy < best.energy) best = q;
    }
    if (!best.ok) throw std::logic_error("equilibrium search failed");
    return best;
}

// ---------------------------------------------------------------------------
// centered-monic frame for component geometry

struct Frame {
    Place v;
    long d = 2;
    Rat vs;  // valuation of the rescaling that makes f monic and centered
    FieldElement sigma;
    Rat ghat;
};

Frame make_frame(const PolyMap& f, const Place& v) {
    Frame fr;
    fr.v = v;
    fr.d = f.degree();
    fr.ghat = splitting_radius_exponent(f, v);
    fr.vs = f.scale_valuation(v);
    fr.sigma = f.sigma();
    return fr;
}

// -(v(z - sigma) + vs) <= ghat, i.e. z lies in the minimal enclosing disk E.
bool in_enclosing_disk(const Frame& fr, const FieldElement& z) {
    FieldElement diff = z - fr.sigma;
    if (diff.is_zero()) return true;
    return -(valuation(diff, fr.v).v + fr.vs) <= fr.ghat;
}

bool in_level_set(const PolyMap& f, const Frame& fr, const FieldElement& x, long m) {
    return in_enclosing_disk(fr, iterate(f, x, m));
}

void require_in_level_set(const PolyMap& f, const Frame& fr, const FieldElement& x, long m) {
    if (!in_level_set(f, fr, x, m))
        throw std::invalid_argument("point not in the level-m preimage set");
}

// Monic-frame log-radius of the image of D(c, q) under f, from the Taylor
// coefficients of f at c.
Rat image_step(const PolyMap& f, const Frame& fr, const FieldElement& c, const Rat& q) {
    std::vector<FieldElement> b = taylor_shift(f, c);
    bool any = false;
    Rat out;
    for (size_t k = 1; k < b.size(); ++k) {
        if (b[k].is_zero()) continue;
        Rat kk(static_cast<long>(k));
        Rat cand = kk * q - (valuation(b[k], fr.v).v + (Rat(1) - kk) * fr.vs);
        if (!any || cand > out) {
            out = cand;
            any = true;
        }
    }
    if (!any) throw std::logic_error("degenerate polynomial image");
    return out;
}

bool same_component_impl(const PolyMap& f, const Frame& fr, const FieldElement& x,
                         const FieldElement& y, long m) {
    require_in_level_set(f, fr, x, m);
    require_in_level_set(f, fr, y, m);
    if (x == y) return true;
    Rat q = -(valuation(x - y, fr.v).v + fr.vs);
    FieldElement c = x;
    for (long j = 0; j < m; ++j) {
        q = image_step(f, fr, c, q);
        c = f.eval(c);
    }
    return q <= fr.ghat;
}

Rat component_radius_impl(const PolyMap& f, const Frame& fr, const FieldElement& x, long m) {
    require_in_level_set(f, fr, x, m);
    std::vector<FieldElement> orbit{x};
    for (long j = 1; j < m; ++j) orbit.push_back(f.eval(orbit.back()));
    Rat B = fr.ghat;
    for (long j = m; j-- > 0;) {
        std::vector<FieldElement> b = taylor_shift(f, orbit[static_cast<size_t>(j)]);
        bool any = false;
        Rat best;
        for (size_t k = 1; k < b.size(); ++k) {
            if (b[k].is_zero()) continue;
            Rat kk(static_cast<long>(k));
            Rat cand = (B + valuation(b[k], fr.v).v + (Rat(1) - kk) * fr.vs) / kk;
            if (!any || cand < best) {
                best = cand;
                any = true;
            }
        }
        B = best;
    }
    return B;
}

long local_degree_impl(const PolyMap& f, const Frame& fr, const FieldElement& x, long m) {
    Rat q = component_radius_impl(f, fr, x, m);
    Rat gamma = -q - fr.vs;
    KPoly P(std::vector<FieldElement>{x, FieldElement(1)});
    KPoly fp = f.poly();
    for (long j = 0; j < m; ++j) P = fp.compose(P);
    P = P - KPoly::constant(fr.sigma);
    std::vector<ValExt> vals;
    vals.reserve(P.c.size());
    for (const FieldElement& coeff : P.c) vals.push_back(valuation(coeff, fr.v));
    return newton_polygon(vals).count_valuation_at_least(gamma);
}

nlohmann::ordered_json log_value_json(const Place& v, const Rat& exponent) {
    return nlohmann::ordered_json::array({v.name(), rat_to_string(exponent)});
}

nlohmann::ordered_json rat_vector_json(const std::vector<Rat>& xs) {
    auto arr = nlohmann::ordered_json::array();
    for (const Rat& x : xs) arr.push_back(rat_to_string(x));
    return arr;
}

}  // namespace

// ---------------------------------------------------------------------------
// kernels on points

ExactLog hsia(const FieldElement& x, const FieldElement& y, const Place& v) {
    FieldElement diff = x - y;
    if (diff.is_zero()) throw std::domain_error("hsia kernel undefined at coincident points");
    return abs_log(diff, v);
}

ExactLog pairwise_diameter(const std::vector<FieldElement>& T, const Place& v) {
    size_t n = T.size();
    if (n < 2) throw std::invalid_argument("pairwise diameter needs at least two points");
    ExactLog acc = ExactLog::zero();
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) acc += hsia(T[i], T[j], v);
    Rat scale = Rat(2) / Rat(static_cast<long>(n) * static_cast<long>(n - 1));
    return scale * acc;
}

ExactLog pairwise_diameter_global(const std::vector<FieldElement>& T, Mode mode) {
    size_t n = T.size();
    if (n < 2) throw std::invalid_argument("pairwise diameter needs at least two points");
    std::vector<FieldElement> diffs;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            FieldElement d = T[i] - T[j];
            if (d.is_zero()) throw std::domain_error("hsia kernel undefined at coincident points");
            diffs.push_back(d);
        }
    ExactLog acc = ExactLog::zero();
    for (const Place& v : joint_support(diffs, mode)) acc += v.r() * pairwise_diameter(T, v);
    if (mode == Mode::Q) acc += pairwise_diameter(T, Place::arch());
    return acc;
}

// ---------------------------------------------------------------------------
// disks and components

Disk disk_image(const PolyMap& f, const Disk& D) {
    if (!D.v.is_finite()) throw std::domain_error("disk image needs a nonarchimedean place");
    std::vector<FieldElement> b = taylor_shift(f, D.anchor);
    bool any = false;
    Rat q;
    for (size_t k = 1; k < b.size(); ++k) {
        if (b[k].is_zero()) continue;
        Rat cand = Rat(static_cast<long>(k)) * D.log_radius - valuation(b[k], D.v).v;
        if (!any || cand > q) {
            q = cand;
            any = true;
        }
    }
    if (!any) throw std::logic_error("degenerate polynomial image");
    return Disk{D.v, b[0], q, true};
}

Rat splitting_radius_exponent(const PolyMap& f, const Place& v) {
    if (!v.is_finite())
        throw std::domain_error("splitting radius needs a nonarchimedean place");
    if (v.in_S_d(f.degree()))
        throw std::domain_error(
            "residue characteristic at most the degree: centered-disk identity unavailable");
    LocalEscape le = lambda_crit_local(f, v);
    if (le.kind == LocalEscape::Kind::BoundedAbove)
        throw std::runtime_error("critical escape rate not certified exact at this place");
    Rat g = 0;
    auto it = le.value.formal.find(v);
    if (it != le.value.formal.end()) g = it->second;
    if (g <= 0)
        throw std::domain_error("good reduction at this place: trivial splitting radius");
    return g;
}

bool same_component(const PolyMap& f, const FieldElement& x, const FieldElement& y,
                    long m, const Place& v) {
    if (m < 0) throw std::invalid_argument("negative level");
    Frame fr = make_frame(f, v);
    return same_component_impl(f, fr, x, y, m);
}

Rat component_radius(const PolyMap& f, const FieldElement& x, long m, const Place& v) {
    if (m < 0) throw std::invalid_argument("negative level");
    Frame fr = make_frame(f, v);
    return component_radius_impl(f, fr, x, m);
}

long local_degree(const PolyMap& f, const FieldElement& x, long m, const Place& v) {
    if (m < 0) throw std::invalid_argument("negative level");
    Frame fr = make_frame(f, v);
    return local_degree_impl(f, fr, x, m);
}

long ComponentCensus::total_degree() const {
    long s = 0;
    for (const ComponentEntry& e : entries) s += e.degree;
    return s;
}

ComponentCensus components(const PolyMap& f, const std::vector<FieldElement>& anchors,
                           long m, const Place& v) {
    if (m < 1) throw std::invalid_argument("level must be at least 1");
    Frame fr = make_frame(f, v);
    ComponentCensus out;
    out.v = v;
    out.m = m;
    out.g_hat = fr.ghat;
    for (size_t i = 0; i < anchors.size(); ++i) {
        if (!in_level_set(f, fr, anchors[i], m)) {
            out.outside.push_back(i);
            continue;
        }
        bool placed = false;
        for (ComponentEntry& e : out.entries)
            if (same_component_impl(f, fr, e.anchor, anchors[i], m)) {
                e.members.push_back(i);
                placed = true;
                break;
            }
        if (!placed) out.entries.push_back(ComponentEntry{anchors[i], Rat(0), 1, {i}});
    }
    for (ComponentEntry& e : out.entries) {
        e.log_radius = component_radius_impl(f, fr, e.anchor, m);
        e.degree = local_degree_impl(f, fr, e.anchor, m);
    }
    return out;
}

// ---------------------------------------------------------------------------
// disk-union kernels and equilibrium energies

DiskUnionKernel kernel_from_disks(const std::vector<Disk>& disks) {
    if (disks.empty()) throw std::invalid_argument("empty disk family");
    const Place& v = disks[0].v;
    if (!v.is_finite()) throw std::domain_error("kernel needs a nonarchimedean place");
    size_t n = disks.size();
    Matrix M(n, std::vector<Rat>(n, Rat(0)));
    for (size_t i = 0; i < n; ++i) {
        if (!(disks[i].v == v)) throw std::invalid_argument("disks at mixed places");
        if (!disks[i].closed) throw std::invalid_argument("open disks unsupported");
        M[i][i] = -disks[i].log_radius;
        for (size_t j = i + 1; j < n; ++j) {
            FieldElement d = disks[i].anchor - disks[j].anchor;
            if (d.is_zero()) throw std::invalid_argument("overlapping disks");
            M[i][j] = M[j][i] = valuation(d, v).v;
        }
    }
    check_kernel_matrix(M);
    return DiskUnionKernel{v, std::move(M)};
}

DiskUnionKernel kernel_from_census(const ComponentCensus& census, const PolyMap& f) {
    if (census.entries.empty()) throw std::invalid_argument("empty census");
    Rat vs = f.scale_valuation(census.v);
    size_t n = census.entries.size();
    Matrix M(n, std::vector<Rat>(n, Rat(0)));
    for (size_t i = 0; i < n; ++i) {
        M[i][i] = -census.entries[i].log_radius;
        for (size_t j = i + 1; j < n; ++j) {
            FieldElement d = census.entries[i].anchor - census.entries[j].anchor;
            if (d.is_zero()) throw std::invalid_argument("overlapping disks");
            M[i][j] = M[j][i] = valuation(d, census.v).v + vs;
        }
    }
    check_kernel_matrix(M);
    return DiskUnionKernel{census.v, std::move(M)};
}

CapacityResult capacity_union(const DiskUnionKernel& kernel) {
    check_kernel_matrix(kernel.M);
    std::vector<size_t> group(kernel.size(), 0);
    QPOut q = qp_minimize(kernel.M, group, {Rat(1)});
    CapacityResult r;
    r.energy = q.energy;
    r.log_capacity = -q.energy;
    r.w = q.w;
    r.potential = potential_of(kernel.M, q.w);
    return r;
}

WeightedEnergy weighted_energy(const DiskUnionKernel& kernel,
                               const std::vector<size_t>& group,
                               const std::vector<Rat>& kvec) {
    check_kernel_matrix(kernel.M);
    QPOut q = qp_minimize(kernel.M, group, kvec);
    WeightedEnergy r;
    r.energy = q.energy;
    r.w = q.w;
    r.potential = potential_of(kernel.M, q.w);
    r.lambda = q.lambda;
    return r;
}

// ---------------------------------------------------------------------------
// abstract component structures

void check_structure(const StructureSpec& s) {
    size_t n = s.r.size();
    if (n == 0) throw std::invalid_argument("structure: no components");
    if (s.m0 < 1) throw std::invalid_argument("structure: level must be at least 1");
    if (s.d < 2) throw std::invalid_argument("structure: degree must be at least 2");
    if (s.deg.size() != n || s.k.size() != n)
        throw std::invalid_argument("structure: size mismatch");
    for (const auto& row : s.r)
        if (row.size() != n) throw std::invalid_argument("structure: distance matrix not square");
    Rat dm0 = Rat(pow_int(Int(s.d), static_cast<unsigned long>(s.m0)));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) {
            if (s.r[i][j] != s.r[j][i])
                throw std::invalid_argument("structure: distance matrix not symmetric");
            if (s.r[i][j] > 1 || s.r[i][j] < -dm0)
                throw std::invalid_argument("structure: distance outside the admissible box");
            if (i != j && !(s.r[i][i] < s.r[i][j]))
                throw std::invalid_argument("structure: components not strictly separated");
        }
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
            for (size_t l = j + 1; l < n; ++l) {
                Rat a = s.r[i][j], b = s.r[i][l], c = s.r[j][l];
                Rat top = std::max(std::max(a, b), c);
                int at_top = (a == top) + (b == top) + (c == top);
                if (at_top < 2)
                    throw std::invalid_argument("structure: ultrametric triple condition fails");
            }
    Int degsum = 0;
    for (long dg : s.deg) {
        if (dg < 1) throw std::invalid_argument("structure: degrees must be positive");
        degsum += dg;
    }
    if (Rat(degsum) != dm0)
        throw std::invalid_argument("structure: degrees must sum to d^m0");
    Rat ksum = 0;
    for (const Rat& ki : s.k) {
        if (ki < 0) throw std::invalid_argument("structure: negative mass");
        ksum += ki;
    }
    if (ksum != 1) throw std::invalid_argument("structure: masses must sum to 1");

    Matrix M(n, std::vector<Rat>(n));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) M[i][j] = -s.r[i][j];
    std::vector<size_t> group(n, 0);
    QPOut q = qp_minimize(M, group, {Rat(1)});
    if (q.energy != Rat(-1) / dm0)
        throw std::invalid_argument("structure: capacity constraint violated");
    for (size_t i = 0; i < n; ++i)
        if (q.w[i] != Rat(s.deg[i]) / dm0)
            throw std::invalid_argument("structure: equilibrium mass differs from degree profile");
}

StructureSpec structure_spec_from_map(const PolyMap& f,
                                      const std::vector<FieldElement>& anchors,
                                      long m0, const Place& v, std::vector<Rat> kvec) {
    ComponentCensus c = components(f, anchors, m0, v);
    long d = f.degree();
    Int dm0 = pow_int(Int(d), static_cast<unsigned long>(m0));
    if (Int(c.total_degree()) != dm0)
        throw std::invalid_argument("anchors do not cover every component");
    size_t n = c.entries.size();
    if (kvec.size() != n) throw std::invalid_argument("mass vector size mismatch");
    Rat vs = f.scale_valuation(v);
    StructureSpec s;
    s.m0 = m0;
    s.d = d;
    s.k = std::move(kvec);
    s.r.assign(n, std::vector<Rat>(n, Rat(0)));
    for (size_t i = 0; i < n; ++i) {
        s.r[i][i] = c.entries[i].log_radius / c.g_hat;
        s.deg.push_back(c.entries[i].degree);
        for (size_t j = i + 1; j < n; ++j) {
            FieldElement diff = c.entries[i].anchor - c.entries[j].anchor;
            Rat dist = -(valuation(diff, v).v + vs);
            s.r[i][j] = s.r[j][i] = dist / c.g_hat;
        }
    }
    check_structure(s);
    return s;
}

StructureEnergy structure_energy(const StructureSpec& s, MeshRule rule, long m) {
    check_structure(s);
    if (m < s.m0) throw std::invalid_argument("refinement level below the base level");
    switch (rule) {
        case MeshRule::EquilibriumChain:
            break;
    }
    size_t n = s.r.size();
    Rat dm0 = Rat(pow_int(Int(s.d), static_cast<unsigned long>(s.m0)));
    Rat dm = Rat(pow_int(Int(s.d), static_cast<unsigned long>(m)));
    StructureEnergy out;
    out.m0 = s.m0;
    out.m = m;
    // Equilibrium chaining pins each piece's level-m energy: the full level-m
    // equilibrium has energy -1/d^m and puts mass deg_i/d^m0 on piece i, so
    // equalization of its potential on piece i solves for the piece energy.
    for (size_t i = 0; i < n; ++i) {
        Rat cross = 0;
        for (size_t j = 0; j < n; ++j)
            if (j != i) cross += Rat(s.deg[j]) / dm0 * s.r[i][j];
        Rat e_i = dm0 / Rat(s.deg[i]) * (Rat(-1) / dm + cross);
        out.piece_neg_log_capacity.push_back(e_i);
    }
    Rat I = 0;
    for (size_t i = 0; i < n; ++i) {
        I += s.k[i] * s.k[i] * out.piece_neg_log_capacity[i];
        for (size_t j = 0; j < n; ++j)
            if (j != i) I -= s.k[i] * s.k[j] * s.r[i][j];
    }
    out.I = I;
    out.tail = dm0 / dm;
    return out;
}

// ---------------------------------------------------------------------------
// JSON renderings

std::string to_json_string(const NewtonPolygon& np) {
    nlohmann::ordered_json j;
    j["zero_roots"] = np.zero_roots;
    auto segs = nlohmann::ordered_json::array();
    for (const NewtonSegment& s : np.segments) {
        nlohmann::ordered_json seg;
        seg["slope"] = rat_to_string(s.slope);
        seg["length"] = s.length;
        segs.push_back(seg);
    }
    j["segments"] = segs;
    j["degree"] = np.degree();
    return j.dump();
}

std::string to_json_string(const Disk& D) {
    nlohmann::ordered_json j;
    j["place"] = D.v.name();
    j["anchor"] = field_to_string(D.anchor);
    j["log_radius"] = log_value_json(D.v, D.log_radius);
    j["closed"] = D.closed;
    return j.dump();
}

std::string to_json_string(const DiskUnionKernel& kernel) {
    nlohmann::ordered_json j;
    j["place"] = kernel.v.name();
    j["size"] = kernel.size();
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : kernel.M) rows.push_back(rat_vector_json(row));
    j["matrix"] = rows;
    return j.dump();
}

std::string to_json_string(const CapacityResult& r, const Place& v) {
    nlohmann::ordered_json j;
    j["place"] = v.name();
    j["log_capacity"] = log_value_json(v, r.log_capacity);
    j["energy"] = rat_to_string(r.energy);
    j["weights"] = rat_vector_json(r.w);
    j["potential"] = rat_vector_json(r.potential);
    return j.dump();
}

}  // namespace dynheights
