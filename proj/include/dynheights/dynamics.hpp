#pragma once
// Polynomial maps with symbolic centered-monic normalization, exact orbit
// classification, and exhaustive rational preperiodic point search.

#include "dynheights/heights.hpp"

#include <stdexcept>
#include <vector>

namespace dynheights {

struct OrbitCertificate {
    enum class Kind { Preperiodic, Divergent };
    Kind kind;
    // preperiodic case: f^(tail+period)(P) = f^tail(P), both minimal
    long tail = 0;
    long period = 0;
    // divergent case: |orbit[witness_index]|_v strictly exceeds the escape
    // radius at witness_place, which forces positive local escape rate
    Place witness_place = Place::arch();
    long witness_index = 0;
    // orbit prefix z_0 .. z_k where k is the revisit or witness index
    std::vector<FieldElement> orbit;

    bool preperiodic() const { return kind == Kind::Preperiodic; }
};

// thrown by enumerate_preperiodic when the candidate region is larger than cap
struct CandidateCapExceeded : std::runtime_error {
    Int candidate_count;
    explicit CandidateCapExceeded(const Int& n)
        : std::runtime_error("preperiodic candidate count " + n.get_str() +
                             " exceeds the configured cap"),
          candidate_count(n) {}
};

class PolyMap {
public:
    // coefficients a_0 .. a_d, constant term first; requires d >= 2, a_d != 0
    PolyMap(std::vector<FieldElement> coeffs, Mode mode);

    // comma separated coefficient list "a_0,a_1,...,a_d"
    static PolyMap parse(const std::string& csv, Mode mode);

    long degree() const { return static_cast<long>(a_.size()) - 1; }
    Mode mode() const { return mode_; }
    const std::vector<FieldElement>& coeffs() const { return a_; }
    const FieldElement& lead() const { return a_.back(); }

    // center shift: the unique translation killing the z^(d-1) coefficient
    const FieldElement& sigma() const { return sigma_; }
    // Taylor coefficients b_j of the centered map f(z + sigma) - sigma
    const std::vector<FieldElement>& centered() const { return b_; }

    // valuation of the symbolic scale s with s^(d-1) = a_d
    Rat scale_valuation(const Place& v) const;
    // valuation of coefficient j of the centered-monic conjugate
    // g(w) = s f(w/s + sigma) - s sigma, namely v(b_j) + (1-j) v(s)
    ValExt monic_coeff_valuation(long j, const Place& v) const;
    // archimedean log of the same coefficient, as a formal combination (Q mode)
    ExactLog monic_coeff_abs_log_arch(long j) const;

    FieldElement eval(const FieldElement& z) const;
    KPoly poly() const { return KPoly(a_); }
    KPoly deriv() const;

private:
    Mode mode_;
    std::vector<FieldElement> a_;
    FieldElement sigma_;
    std::vector<FieldElement> b_;
};

FieldElement iterate(const PolyMap& f, FieldElement z, long n);

// Largest candidate exponent rho with: |z|_v > N_v^rho implies the orbit of z
// escapes at v. Finite places only.
Rat escape_radius_exponent(const PolyMap& f, const Place& v);
// Rational R with: |z| > R implies the orbit escapes at the archimedean place
// (Q mode only).
Rat arch_escape_bound(const PolyMap& f);
// log of the escape radius at any place, as an ExactLog
ExactLog escape_radius(const PolyMap& f, const Place& v);

OrbitCertificate classify_orbit(const PolyMap& f, const FieldElement& P);

struct PreperiodicCensus {
    Int denominator_bound;       // every preperiodic denominator divides this
    Rat arch_bound;              // every preperiodic point has |z| <= this
    Int candidate_count;         // size of the search region
    std::vector<std::pair<FieldElement, OrbitCertificate>> points;  // sorted
};

PreperiodicCensus enumerate_preperiodic(const PolyMap& f, const Int& cap = Int(1000000));

// coefficients of f(c + w) as a polynomial in w
std::vector<FieldElement> taylor_shift(const PolyMap& f, const FieldElement& c);

// Monic polynomial of degree d-1 whose roots are f^n(a) over the critical
// points a of f, with multiplicity. Computed by trace power sums in the
// quotient algebra K[w]/(f'(w)); coefficient size is capped.
KPoly critical_value_char_poly(const PolyMap& f, long n,
                               long size_bit_bound = 1 << 22);

// Incremental form of critical_value_char_poly: each next() advances one
// iteration level and returns the char poly at that level.
class CriticalCharIter {
public:
    explicit CriticalCharIter(const PolyMap& f, long size_bit_bound = 1 << 22);
    long level() const { return n_; }
    const KPoly& next();  // throws std::runtime_error when sizes blow past the bound
    const KPoly& current() const { return phi_; }

private:
    const PolyMap* f_;
    long bound_;
    KPoly m_;                       // monic f'
    std::vector<FieldElement> p_;   // power sums of the roots of m
    KPoly g_;                       // f^n mod m
    KPoly phi_;
    long n_ = 0;
};

}  // namespace dynheights
