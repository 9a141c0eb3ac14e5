#include "dynheights/local_theory.hpp"

#include <stdexcept>

#include "doctest.h"

using namespace dynheights;

namespace {

PolyMap mapQ(const std::string& csv) { return PolyMap::parse(csv, Mode::Q); }
PolyMap mapT(const std::string& csv) { return PolyMap::parse(csv, Mode::Qt); }

bool same_log(const ExactLog& a, const ExactLog& b) { return (a - b).formal_is_zero(); }

bool encloses(const Interval& i, double x) { return i.lo <= x && x <= i.hi; }

}  // namespace

TEST_CASE("escape rate at finite places, escaped orbits are exact") {
    // 0 -> 1/3 which is past the 3-adic escape radius
    LocalEscape le = escape_rate(mapQ("1/3,0,1"), FieldElement(0), Place::prime(3));
    CHECK(le.exact());
    CHECK(le.iterations == 1);
    CHECK(same_log(le.value, ExactLog::term(Place::prime(3), Rat(1, 2))));

    // 0 -> -29/16 with v_2 = -4, radius exponent 2
    LocalEscape le2 = escape_rate(mapQ("-29/16,0,1"), FieldElement(0), Place::prime(2));
    CHECK(le2.exact());
    CHECK(same_log(le2.value, ExactLog::term(Place::prime(2), Rat(2))));

    // immediate escape at n = 0
    LocalEscape le3 = escape_rate(mapQ("0,0,1"), FieldElement(Rat(1, 2)), Place::prime(2));
    CHECK(le3.exact());
    CHECK(le3.iterations == 0);
    CHECK(same_log(le3.value, ExactLog::term(Place::prime(2), Rat(1))));
}

TEST_CASE("escape rate at finite places, certified zeros") {
    // v-integral orbit with zero coefficient bound: rate is exactly zero
    LocalEscape le = escape_rate(mapQ("0,0,1"), FieldElement(2), Place::prime(2));
    CHECK(le.exact());
    CHECK(le.value.formal_is_zero());

    LocalEscape le2 = escape_rate(mapQ("-29/16,0,1"), FieldElement(0), Place::prime(29));
    CHECK(le2.exact());
    CHECK(le2.value.formal_is_zero());

    // cycle 5/4 -> -1/4 -> -7/4 -> 5/4 revisits, so every place reports zero
    LocalEscape le3 = escape_rate(mapQ("-29/16,0,1"), FieldElement(Rat(5, 4)), Place::prime(2));
    CHECK(le3.exact());
    CHECK(le3.value.formal_is_zero());
}

TEST_CASE("escape rate bounded-above outcome for confined divergent orbits") {
    // from 9/4 the orbit keeps v_2 = -2 forever (radius exponent 2): no escape,
    // no revisit, so the honest outcome is a shrinking upper bound
    LocalEscape le = escape_rate(mapQ("-29/16,0,1"), FieldElement(Rat(9, 4)), Place::prime(2),
                                 1e-9, 40);
    CHECK(le.kind == LocalEscape::Kind::BoundedAbove);
    double hi = le.value.enclosure().hi;
    CHECK(hi > 0.0);
    CHECK(hi < 1e-2);
}

TEST_CASE("escape rate transformation rule at finite places") {
    std::vector<PolyMap> maps = {mapQ("-29/16,0,1"), mapQ("0,0,1/5,1")};
    std::vector<Rat> pts = {Rat(5, 4),  Rat(-1, 4), Rat(-7, 4), Rat(1, 2), Rat(1, 3),
                            Rat(5, 3),  Rat(-2),    Rat(7),     Rat(1, 6), Rat(-5, 12),
                            Rat(3, 5),  Rat(25, 9)};
    std::vector<Place> places = {Place::prime(2), Place::prime(3), Place::prime(5)};
    int exact_pairs = 0;
    for (const auto& f : maps)
        for (const auto& p : pts)
            for (const auto& v : places) {
                FieldElement P(p);
                LocalEscape a = escape_rate(f, P, v, 1e-9, 8);
                LocalEscape b = escape_rate(f, f.eval(P), v, 1e-9, 8);
                if (!a.exact() || !b.exact()) continue;
                ++exact_pairs;
                CHECK(same_log(Rat(f.degree()) * a.value, b.value));
            }
    CHECK(exact_pairs >= 40);
}

TEST_CASE("escape rate transformation rule over the function field") {
    PolyMap f = mapT("t,0,1");
    FieldElement P = parse_field("t", Mode::Qt);
    LocalEscape a = escape_rate(f, P, Place::ff_inf());
    LocalEscape b = escape_rate(f, f.eval(P), Place::ff_inf());
    CHECK(a.exact());
    CHECK(b.exact());
    CHECK(same_log(Rat(2) * a.value, b.value));
    CHECK(same_log(a.value, ExactLog::term(Place::ff_inf(), Rat(1))));
}

TEST_CASE("archimedean escape rate via telescoping enclosure") {
    LocalEscape le = escape_rate(mapQ("-1,0,1"), FieldElement(2), Place::arch());
    CHECK(le.kind == LocalEscape::Kind::ArchEnclosure);
    REQUIRE(le.value.arch.has_value());
    CHECK(encloses(*le.value.arch, 0.5178760897905436));
    CHECK(le.value.arch->width() <= 2e-9);
}

TEST_CASE("archimedean escape rate, monomial maps are formally exact") {
    // 2z^2 from 3: rate is log 3 + log 2 = log 6
    LocalEscape le = escape_rate(mapQ("0,0,2"), FieldElement(3), Place::arch());
    CHECK(le.exact());
    CHECK(same_log(le.value, abs_log(FieldElement(6), Place::arch())));

    // z^2/2 from 1 contracts to zero
    LocalEscape le2 = escape_rate(mapQ("0,0,1/2"), FieldElement(1), Place::arch());
    CHECK(le2.exact());
    CHECK(le2.value.formal_is_zero());
}

TEST_CASE("archimedean escape rate, exact zeros from revisit and invariant window") {
    // 0 -> -1 -> 0 revisits
    LocalEscape le = escape_rate(mapQ("-1,0,1"), FieldElement(0), Place::arch());
    CHECK(le.exact());
    CHECK(le.value.formal_is_zero());
    REQUIRE(le.value.arch.has_value());
    CHECK(le.value.arch->lo == 0.0);
    CHECK(le.value.arch->hi == 0.0);

    // critical orbit of z^2 - 29/16 is bounded but never repeats; the
    // invariant-window certificate still pins the rate to exactly zero
    LocalEscape le2 = escape_rate(mapQ("-29/16,0,1"), FieldElement(0), Place::arch(), 1e-9, 16);
    CHECK(le2.exact());
    CHECK(le2.value.formal_is_zero());
}

TEST_CASE("canonical height vanishes exactly on preperiodic points") {
    PolyMap f = mapQ("-29/16,0,1");
    ExactLog h = canonical_height(f, FieldElement(Rat(5, 4)));
    CHECK(h.formal_is_zero());
    REQUIRE(h.arch.has_value());
    CHECK(h.arch->lo == 0.0);
    CHECK(h.arch->hi == 0.0);

    PreperiodicCensus census = enumerate_preperiodic(mapQ("-1,0,1"));
    CHECK(census.points.size() > 0);
    for (const auto& [pt, cert] : census.points) {
        ExactLog hp = canonical_height(mapQ("-1,0,1"), pt);
        CHECK(hp.formal_is_zero());
        CHECK(hp.arch->hi == 0.0);
    }
}

TEST_CASE("canonical height of wandering points is positive and tight") {
    PolyMap f = mapQ("-1,0,1");
    ExactLog h2 = canonical_height(f, FieldElement(2));
    Interval e2 = h2.enclosure();
    CHECK(encloses(e2, 0.5178760897905436));
    CHECK(e2.width() <= 4e-9);
    CHECK(e2.lo > 0.0);

    // f(2) = 3, so the height doubles
    ExactLog h3 = canonical_height(f, FieldElement(3));
    Interval e3 = h3.enclosure();
    CHECK(encloses(e3, 1.0357521795810871));
    CHECK(e3.width() <= 4e-9);
}

TEST_CASE("canonical height is a formal logarithm when every place is exact") {
    // z^2 from 2: only the archimedean place contributes, and it is monomial
    ExactLog h = canonical_height(mapQ("0,0,1"), FieldElement(2));
    CHECK(same_log(h, ExactLog::term(Place::prime(2), Rat(1))));

    // divergent point whose 2-adic rate is only bounded: still a sound
    // enclosure with positive lower end
    ExactLog hb = canonical_height(mapQ("-29/16,0,1"), FieldElement(Rat(9, 4)), 1e-9, 40);
    CHECK(hb.enclosure().lo > 0.0);
}

TEST_CASE("canonical height over the function field") {
    PolyMap f = mapT("t,0,1");
    ExactLog h = canonical_height(f, parse_field("t", Mode::Qt));
    CHECK(same_log(h, ExactLog::term(Place::ff_inf(), Rat(1))));
    CHECK(!h.arch.has_value());

    ExactLog h1 = canonical_height(f, FieldElement(1));
    CHECK(same_log(h1, ExactLog::term(Place::ff_inf(), Rat(1, 2))));
}

TEST_CASE("critical escape rate at finite places, exact positive values") {
    auto lam = [](const std::string& csv, long p) {
        return lambda_crit_local(PolyMap::parse(csv, Mode::Q), Place::prime(p));
    };
    struct Fix {
        const char* csv;
        long p;
        Rat expo;
    };
    std::vector<Fix> fixtures = {
        {"-25/9,0,1", 3, Rat(1)},        {"0,0,1/5,1", 5, Rat(1)},
        {"0,0,1/5,1", 3, Rat(1)},        {"1/25,0,0,1", 5, Rat(2, 3)},
        {"3/49,0,0,0,0,1", 7, Rat(2, 5)}, {"1/27,0,0,0,1", 3, Rat(3, 4)},
        {"0,-3/4,0,1", 2, Rat(2, 3)},    {"0,1,1", 2, Rat(1)},
        {"0,1,2", 2, Rat(1)},            {"-29/16,0,1", 2, Rat(2)},
        {"1/15,0,1", 3, Rat(1, 2)},      {"1/15,0,1", 5, Rat(1, 2)},
    };
    for (const auto& fx : fixtures) {
        CAPTURE(fx.csv);
        CAPTURE(fx.p);
        LocalEscape le = lam(fx.csv, fx.p);
        CHECK(le.exact());
        CHECK(same_log(le.value, ExactLog::term(Place::prime(fx.p), fx.expo)));
    }
}

TEST_CASE("critical escape rate at finite places, certified zeros") {
    auto lam = [](const std::string& csv, long p) {
        return lambda_crit_local(PolyMap::parse(csv, Mode::Q), Place::prime(p));
    };
    for (auto [csv, p] : std::vector<std::pair<const char*, long>>{
             {"-25/9,0,1", 2}, {"-25/9,0,1", 5}, {"0,-12,0,1", 2}, {"0,-12,0,1", 3},
             {"0,0,1", 2}, {"0,-3/4,0,1", 3}}) {
        CAPTURE(csv);
        CAPTURE(p);
        LocalEscape le = lam(csv, p);
        CHECK(le.exact());
        CHECK(le.value.formal_is_zero());
        CHECK(le.iterations == 0);
    }
}

TEST_CASE("critical escape rate at the archimedean place, rational critical points") {
    // z^2 - 25/9, critical point 0 escapes
    LocalEscape le = lambda_crit_local(mapQ("-25/9,0,1"), Place::arch());
    CHECK(le.kind == LocalEscape::Kind::ArchEnclosure);
    CHECK(encloses(*le.value.arch, 0.38376396207748936));
    CHECK(le.value.arch->width() <= 2e-9);

    // z^3 - 12z, critical points +-2 both escape
    LocalEscape le2 = lambda_crit_local(mapQ("0,-12,0,1"), Place::arch());
    CHECK(le2.kind == LocalEscape::Kind::ArchEnclosure);
    CHECK(encloses(*le2.value.arch, 0.9188618538985144));
    CHECK(le2.value.arch->width() <= 2e-9);

    // z^3 + z^2/5: one critical point fixed at 0, the other trapped in an
    // invariant window, so the max is exactly zero
    LocalEscape le3 = lambda_crit_local(mapQ("0,0,1/5,1"), Place::arch(), 1e-9, 10);
    CHECK(le3.exact());
    CHECK(le3.value.formal_is_zero());

    LocalEscape le4 = lambda_crit_local(mapQ("-29/16,0,1"), Place::arch(), 1e-9, 16);
    CHECK(le4.exact());
    CHECK(le4.value.formal_is_zero());
}

TEST_CASE("critical escape rate at the archimedean place, irrational critical points") {
    // z^3 - 4z: critical points +-sqrt(4/3); the interval char-poly route
    // must reproduce the independently computed rate
    LocalEscape le = lambda_crit_local(mapQ("0,-4,0,1"), Place::arch());
    CHECK(le.kind == LocalEscape::Kind::ArchEnclosure);
    CHECK(encloses(*le.value.arch, 0.31348136507986596));
    CHECK(le.value.arch->width() <= 2e-9);

    // z^3 - 2z: critical orbits stay bounded, so no escape is ever certified;
    // the level-capped fallback bound is astronomically small but not zero
    LocalEscape le2 = lambda_crit_local(mapQ("0,-2,0,1"), Place::arch());
    CHECK(le2.kind == LocalEscape::Kind::BoundedAbove);
    CHECK(le2.value.enclosure().hi >= 0.0);
    CHECK(le2.value.enclosure().hi < 1e-20);
}

TEST_CASE("critical height report over Q") {
    CriticalHeightReport rep = critical_report(mapQ("-25/9,0,1"));
    CHECK(rep.mode == Mode::Q);
    CHECK(rep.degree == 2);
    REQUIRE(rep.bad_places.size() == 1);
    CHECK(rep.bad_places[0] == Place::prime(3));
    bool saw3 = false;
    for (const auto& e : rep.entries) {
        if (e.v == Place::prime(3)) {
            saw3 = true;
            CHECK(e.is_bad);
            CHECK(!e.in_sd);
            REQUIRE(e.g_v.has_value());
            CHECK(same_log(*e.g_v, ExactLog::term(Place::prime(3), Rat(1))));
        } else {
            CHECK(!e.is_bad);
        }
    }
    CHECK(saw3);
    // h_crit = log 3 + (arch contribution ~ 0.38376...)
    Interval h = rep.h_crit.enclosure();
    CHECK(encloses(h, 1.0986122886681098 + 0.38376396207748936));
    CHECK(h.width() <= 4e-9);
}

TEST_CASE("critical height report, exactly zero for z^2") {
    CriticalHeightReport rep = critical_report(mapQ("0,0,1"));
    CHECK(rep.bad_places.empty());
    CHECK(rep.h_crit.formal_is_zero());
    REQUIRE(rep.h_crit.arch.has_value());
    CHECK(rep.h_crit.arch->hi == 0.0);
}

TEST_CASE("critical height report, bad place inside the excluded prime set") {
    CriticalHeightReport rep = critical_report(mapQ("-29/16,0,1"), 1e-9, 16);
    REQUIRE(rep.bad_places.size() == 1);
    CHECK(rep.bad_places[0] == Place::prime(2));
    for (const auto& e : rep.entries)
        if (e.v == Place::prime(2)) {
            CHECK(e.is_bad);
            CHECK(e.in_sd);          // 2 <= deg, so no splitting radius here
            CHECK(!e.g_v.has_value());
        }
    // exact: 2 log 2, with a hard zero archimedean part
    CHECK(same_log(rep.h_crit, ExactLog::term(Place::prime(2), Rat(2))));
    REQUIRE(rep.h_crit.arch.has_value());
    CHECK(rep.h_crit.arch->hi == 0.0);
}

TEST_CASE("critical height report, mixed degree-three map") {
    CriticalHeightReport rep = critical_report(mapQ("0,0,1/5,1"), 1e-9, 10);
    REQUIRE(rep.bad_places.size() == 2);
    for (const auto& e : rep.entries) {
        if (e.v == Place::prime(3)) {
            CHECK(e.is_bad);
            CHECK(e.in_sd);
            CHECK(!e.g_v.has_value());
        }
        if (e.v == Place::prime(5)) {
            CHECK(e.is_bad);
            CHECK(!e.in_sd);
            REQUIRE(e.g_v.has_value());
            CHECK(same_log(*e.g_v, ExactLog::term(Place::prime(5), Rat(1))));
        }
    }
    ExactLog expect = ExactLog::term(Place::prime(3), Rat(1));
    expect += ExactLog::term(Place::prime(5), Rat(1));
    CHECK(same_log(rep.h_crit, expect));
    CHECK(rep.h_crit.arch->hi == 0.0);
}

TEST_CASE("critical height report over the function field") {
    // critical orbit 0 -> t -> t^2 + t: the rate at infinity is half the
    // escape rate of t itself
    CriticalHeightReport rep = critical_report(mapT("t,0,1"));
    CHECK(rep.mode == Mode::Qt);
    CHECK(!rep.h_crit.arch.has_value());
    CHECK(same_log(rep.h_crit, ExactLog::term(Place::ff_inf(), Rat(1, 2))));
    REQUIRE(rep.bad_places.size() == 1);
    CHECK(rep.bad_places[0] == Place::ff_inf());
}

TEST_CASE("delta slices of the splitting-radius sum") {
    CriticalHeightReport rep = critical_report(mapQ("1/15,0,1"), 1e-9, 12);
    std::vector<Place> p3 = {Place::prime(3)};
    std::vector<Place> p5 = {Place::prime(5)};
    std::vector<Place> both = {Place::prime(3), Place::prime(5)};

    // (1/2)log3 vs delta * (1/2)(log3 + log5): 27 >= 25 makes 2/5 hold
    CHECK(delta_slice_check(rep, p3, Rat(2, 5)));
    CHECK(!delta_slice_check(rep, p3, Rat(1, 2)));
    CHECK(delta_slice_check(rep, p5, Rat(1, 2)));
    CHECK(delta_slice_check(rep, both, Rat(1)));  // equality counts
    CHECK(!delta_slice_check(rep, {}, Rat(1, 2)));

    DeltaSlice ds = delta_slice(rep, p3, Rat(2, 5));
    CHECK(ds.holds);
    CHECK(same_log(ds.slice_sum, ExactLog::term(Place::prime(3), Rat(1, 2))));

    CHECK_THROWS_AS(delta_slice(rep, {Place::prime(7)}, Rat(1, 2)), std::invalid_argument);

    // every bad place of z^3 - 3z/4 sits inside the excluded set, so the
    // slice statement is vacuous
    CriticalHeightReport rep2 = critical_report(mapQ("0,-3/4,0,1"), 1e-9, 12);
    CHECK(delta_slice_check(rep2, {}, Rat(1, 2)));
}

TEST_CASE("isotriviality over the function field") {
    CHECK(is_isotrivial(mapT("1,0,1")));
    CHECK(!is_isotrivial(mapT("t,0,1")));
    CHECK(!is_isotrivial(mapT("(1)/(t),0,1")));
    CHECK_THROWS_AS(is_isotrivial(mapQ("0,0,1")), std::domain_error);

    // isotriviality matches vanishing of the critical height
    CHECK(critical_report(mapT("1,0,1")).h_crit.formal_is_zero());
    CHECK(!critical_report(mapT("t,0,1")).h_crit.formal_is_zero());
}
