#pragma once
// Nonarchimedean disk geometry at the places of K: log-distance (Hsia) kernels
// on classical points, exact images of closed disks under polynomial maps, the
// component structure of iterated preimages of the minimal enclosing disk at a
// bad place, and exact equilibrium energies of finite disk unions via rational
// quadratic minimization.
//
// Conventions. A closed disk at a finite place v is D(c, N_v^q): we store the
// exponent q ("log-radius" in units of L_v = log N_v), so radii live in the
// value group and all disk arithmetic is exact. Component geometry for a map f
// of degree d is computed in the centered-monic coordinate w = s(z - sigma)
// with v(s) = v(a_d)/(d-1); in that frame f becomes monic and centered, and
// the minimal disk containing the filled Julia set is E = D(0, N_v^ghat) where
// ghat is the splitting radius exponent. Level-m sets, radii, and kernels
// below all use monic-frame exponents.

#include <cstddef>
#include <string>
#include <vector>

#include "dynheights/dynamics.hpp"
#include "dynheights/newton.hpp"

namespace dynheights {

// log|x - y|_v as an exact formal quantity. Finite places give a single term
// -v(x-y) * L_v; the archimedean place (Q mode only) gives the prime
// factorization of |x - y| with a zero interval marker. Throws
// std::domain_error when x == y.
ExactLog hsia(const FieldElement& x, const FieldElement& y, const Place& v);

// (1/(n(n-1))) sum_{i != j} log|z_i - z_j|_v over n = |T| >= 2 distinct
// points: the expected pairwise log-distance, an exact rational multiple of
// L_v at finite places.
ExactLog pairwise_diameter(const std::vector<FieldElement>& T, const Place& v);

// sum_v r_v * pairwise_diameter(T, v) over the joint support of the pairwise
// differences (plus the archimedean place in Q mode). For T inside K the
// product formula makes this formally zero.
ExactLog pairwise_diameter_global(const std::vector<FieldElement>& T, Mode mode);

// Closed disk D(anchor, N_v^log_radius) at a finite place.
struct Disk {
    Place v;
    FieldElement anchor;
    Rat log_radius;
    bool closed = true;
};

// Exact image of a closed disk under f: a closed disk anchored at f(c) with
// log-radius max_{k >= 1, f_k(c) != 0} (k q - v(f_k(c))) read off the Taylor
// coefficients of f at the anchor. Finite places only.
Disk disk_image(const PolyMap& f, const Disk& D);

// Splitting radius exponent ghat at a bad finite place v outside S_d: the
// log-radius (monic frame, units L_v) of the minimal disk containing the
// filled Julia set, equal to the local critical escape rate divided by L_v.
// Throws std::domain_error at places of good reduction (nothing splits) and
// at places inside S_d or archimedean places (the centered-disk identity is
// unavailable there), std::runtime_error if the escape computation refuses
// to certify exactness.
Rat splitting_radius_exponent(const PolyMap& f, const Place& v);

// Whether x and y lie in the same connected component of the level-m preimage
// f^{-m}(E) of the minimal enclosing disk. Both points must lie in the
// level-m set (else std::invalid_argument). Decided exactly by transporting
// the disk D(x, |x - y|_v) through m image steps and testing containment in E.
bool same_component(const PolyMap& f, const FieldElement& x, const FieldElement& y,
                    long m, const Place& v);

// Log-radius (monic frame, units L_v) of the component of the level-m set
// containing x: the largest q with f^m(D(x, N_v^q)) inside E, found by a
// backward recursion through the Taylor data along the orbit of x.
Rat component_radius(const PolyMap& f, const FieldElement& x, long m, const Place& v);

// Covering degree of the component of x onto E under f^m: the number of roots
// w of f^m(x + w) = sigma with v(w) at or above the component radius, counted
// on the Newton polygon.
long local_degree(const PolyMap& f, const FieldElement& x, long m, const Place& v);

// One connected component of the level-m set, as discovered from a list of
// anchor points.
struct ComponentEntry {
    FieldElement anchor;          // first listed point found in the component
    Rat log_radius;               // monic frame, units L_v
    long degree = 1;              // covering degree onto E under f^m
    std::vector<size_t> members;  // indices into the input anchor list
};

struct ComponentCensus {
    Place v;
    long m = 1;
    Rat g_hat;                    // splitting radius exponent
    std::vector<ComponentEntry> entries;
    std::vector<size_t> outside;  // anchors not in the level-m set
    long total_degree() const;    // sum of entry degrees; d^m iff every
                                  // component was hit by some anchor
};

// Group the given points into components of the level-m set. Points outside
// the set are recorded, not rejected.
ComponentCensus components(const PolyMap& f, const std::vector<FieldElement>& anchors,
                           long m, const Place& v);

// Symmetric kernel matrix of a finite union of pairwise disjoint closed disks:
// M_ii = -log_radius_i and M_ij = v(c_i - c_j) (exponent of the pairwise
// distance, negated), all in units of L_v, so -M is the log-distance kernel.
// Disjointness of an ultrametric disk family is exactly M_ij < min(M_ii, M_jj).
struct DiskUnionKernel {
    Place v;
    std::vector<std::vector<Rat>> M;
    size_t size() const { return M.size(); }
};

// Build the kernel from explicit disks (all at one finite place; throws
// std::invalid_argument on overlapping disks or mismatched places).
DiskUnionKernel kernel_from_disks(const std::vector<Disk>& disks);

// Build the kernel from a component census, in the same monic frame as the
// census radii (f supplies the frame shift).
DiskUnionKernel kernel_from_census(const ComponentCensus& census, const PolyMap& f);

// Equilibrium data of a disk union: the minimizer of the energy w^T M w over
// the probability simplex. The potential (M w)_i equals the energy on the
// support of w and is >= the energy off it; log_capacity = -energy (units
// L_v). All entries exact rationals.
struct CapacityResult {
    Rat log_capacity;
    Rat energy;
    std::vector<Rat> w;
    std::vector<Rat> potential;
};

CapacityResult capacity_union(const DiskUnionKernel& kernel);

// Constrained equilibrium: minimize w^T M w subject to w >= 0 and prescribed
// group masses sum_{i in group g} w_i = k_g. lambda[g] is the equalized
// potential within group g (energy = sum_g lambda_g k_g). Throws
// std::invalid_argument on infeasible mass vectors.
struct WeightedEnergy {
    Rat energy;
    std::vector<Rat> w;
    std::vector<Rat> potential;
    std::vector<Rat> lambda;
};

WeightedEnergy weighted_energy(const DiskUnionKernel& kernel,
                               const std::vector<size_t>& group,
                               const std::vector<Rat>& kvec);

// Abstract level-m0 component structure: pairwise and diagonal log-distance
// data r (in units of the splitting radius g_v, so the enclosing disk has
// r = 1), covering degrees summing to d^m0, and a prescribed mass vector k
// on the components.
struct StructureSpec {
    long m0 = 1;
    long d = 2;
    std::vector<std::vector<Rat>> r;
    std::vector<long> deg;
    std::vector<Rat> k;
};

// Validate a structure: symmetry, the box -d^m0 <= r_ij <= 1, strict
// separation r_ii < r_ij, the ultrametric triple condition, degree and mass
// sanity, and the capacity constraint (equilibrium of the kernel -r must put
// mass deg_i/d^m0 on disk i with energy -1/d^m0). Throws
// std::invalid_argument naming the violated condition.
void check_structure(const StructureSpec& s);

// Read a structure off an actual map: census the level-m0 components from the
// given anchors (every component must be hit, so total degree d^m0), convert
// to g_v units, attach the mass vector, and validate.
StructureSpec structure_spec_from_map(const PolyMap& f,
                                      const std::vector<FieldElement>& anchors,
                                      long m0, const Place& v,
                                      std::vector<Rat> kvec);

// Refinement rule for the level-m energies. Equilibrium chaining uses the
// exact capacity recursion log gamma(level-m set) = g_v / d^m, which pins the
// per-level energies independently of which mesh of disks realizes each level.
enum class MeshRule { EquilibriumChain };

// Energy of the level-m measure mu_{k,m} built on a structure: each component
// carries its prescribed mass spread as the equilibrium of its level-m
// refinement. I is exact in units of g_v; [I, I + tail] encloses every
// deeper-level energy, tail = d^m0 / d^m.
struct StructureEnergy {
    long m0 = 1;
    long m = 1;
    Rat I;
    Rat tail;
    std::vector<Rat> piece_neg_log_capacity;  // -log gamma of each piece / g_v
    Rat limit_lo() const { return I; }
    Rat limit_hi() const { return I + tail; }
};

StructureEnergy structure_energy(const StructureSpec& s, MeshRule rule, long m);

// JSON renderings (rationals as strings; log values as [place, exponent]).
std::string to_json_string(const NewtonPolygon& np);
std::string to_json_string(const Disk& D);
std::string to_json_string(const DiskUnionKernel& kernel);
std::string to_json_string(const CapacityResult& r, const Place& v);

}  // namespace dynheights
