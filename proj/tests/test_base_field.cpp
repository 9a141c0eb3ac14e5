#include "doctest.h"
#include "dynheights/heights.hpp"

#include <random>

using namespace dynheights;

namespace {

FieldElement Q(const std::string& s) { return parse_field(s, Mode::Q); }
FieldElement T(const std::string& s) { return parse_field(s, Mode::Qt); }

ExactLog expect_formal(std::initializer_list<std::pair<Place, Rat>> terms) {
    ExactLog e;
    for (const auto& [v, q] : terms) e.formal[v] = q;
    return e;
}

}  // namespace

TEST_CASE("valuations at Q-primes") {
    CHECK(valuation(Q("8"), Place::prime(2)).v == 3);
    CHECK(valuation(Q("2/9"), Place::prime(3)).v == -2);
    CHECK(valuation(Q("2/9"), Place::prime(2)).v == 1);
    CHECK(valuation(Q("-5"), Place::prime(5)).v == 1);
    CHECK(valuation(Q("0"), Place::prime(7)).inf);
}

TEST_CASE("valuations at function-field places") {
    FieldElement x = T("(t^2)/(t-1)");
    CHECK(valuation(x, Place::ff(parse_qpoly("t"))).v == 2);
    CHECK(valuation(x, Place::ff(parse_qpoly("t-1"))).v == -1);
    CHECK(valuation(x, Place::ff_inf()).v == -1);
    CHECK(valuation(T("t+1"), Place::ff_inf()).v == -1);
    CHECK(valuation(T("(1)/(t^3)"), Place::ff_inf()).v == 3);
    // constants are units at every place of Q(t)
    CHECK(valuation(T("7/3"), Place::ff(parse_qpoly("t"))).v == 0);
    CHECK(valuation(T("7/3"), Place::ff_inf()).v == 0);
}

TEST_CASE("field arithmetic stays canonical") {
    FieldElement a = T("(t^2-1)/(t-1)");  // reduces to t+1
    CHECK(a == T("t+1"));
    FieldElement b = T("t") - T("t");
    CHECK(b.is_zero());
    CHECK(b.is_rational());  // constants demote to Q representation
    CHECK((T("2*t")/T("t")) == Q("2"));
    CHECK(field_to_string(T("(t^2-3/2*t)/(2*t-2)")) == "(1/2*t^2 - 3/4*t)/(t - 1)");
}

TEST_CASE("abs_log at the archimedean place is a formal factorization") {
    ExactLog one = abs_log(Q("1"), Place::arch());
    CHECK(one.formal.empty());
    REQUIRE(one.arch.has_value());
    CHECK(one.arch->lo == 0.0);
    CHECK(one.arch->hi == 0.0);

    ExactLog e = abs_log(Q("-12/5"), Place::arch());
    ExactLog want = expect_formal({{Place::prime(2), 2}, {Place::prime(3), 1}, {Place::prime(5), -1}});
    CHECK(e.formal == want.formal);
}

TEST_CASE("product formula telescopes to the zero formal object") {
    for (const char* s : {"8", "2/9", "-36/25", "1", "-1", "1000/2187"}) {
        FieldElement x = Q(s);
        ExactLog sum = product_formula_sum(x, Mode::Q);
        CHECK(sum.formal_is_zero());
        CHECK(product_formula_check(x, Mode::Q));
    }
}

TEST_CASE("product formula over Q(t) and the degree identity") {
    for (const char* s : {"(t-1)/(t)", "t^2-1", "(t^2+1)/(t^3-t)", "5", "(2*t+3)/(7)"}) {
        FieldElement x = T(s);
        ExactLog sum = product_formula_sum(x, Mode::Qt);
        CHECK(sum.formal_is_zero());
        CHECK(sum.ff_rational_part() == 0);
        // degree identity: sum over finite places of N_v * v(x) equals -v_inf(x)
        Rat acc = 0;
        for (const Place& v : support_places(x, Mode::Qt)) {
            if (v.kind == PlaceKind::FFPrime) acc += v.N() * valuation(x, v).v;
        }
        CHECK(acc + valuation(x, Place::ff_inf()).v == 0);
    }
}

TEST_CASE("height and radical of (1, 8, -9)") {
    auto rep = height_tuple({Q("1"), Q("8"), Q("-9")}, Mode::Q);
    // h = log 9, all of it archimedean
    CHECK(rep.finite_part.formal_is_zero());
    CHECK(rep.h.formal == expect_formal({{Place::prime(3), 2}}).formal);
    // I(P) = {2, 3}, rad = log 2 + log 3
    REQUIRE(rep.support.size() == 2);
    CHECK(rep.support[0] == Place::prime(2));
    CHECK(rep.support[1] == Place::prime(3));
    REQUIRE(rep.rad.has_value());
    CHECK(rep.rad->formal == expect_formal({{Place::prime(2), 1}, {Place::prime(3), 1}}).formal);
    // exponent at each place of I(P) is exactly N_p = 1
    for (const Place& v : rep.support) CHECK(rep.rad->formal.at(v) == v.N());
}

TEST_CASE("height and radical of (1, 1, -2)") {
    auto rep = height_tuple({Q("1"), Q("1"), Q("-2")}, Mode::Q);
    CHECK(rep.h.formal == expect_formal({{Place::prime(2), 1}}).formal);
    REQUIRE(rep.rad.has_value());
    CHECK(rep.rad->formal == expect_formal({{Place::prime(2), 1}}).formal);
}

TEST_CASE("height is projective") {
    auto a = height_tuple({Q("1"), Q("8"), Q("-9")}, Mode::Q);
    auto b = height_tuple({Q("-2/3"), Q("-16/3"), Q("6")}, Mode::Q);  // scaled by -2/3
    CHECK(a.h.formal == b.h.formal);
    CHECK(a.rad->formal == b.rad->formal);
}

TEST_CASE("height with zero coordinate: h defined, rad absent") {
    // (0 : 4) = (0 : 1) projectively, so the height vanishes
    auto rep = height_tuple({Q("0"), Q("4")}, Mode::Q);
    CHECK(rep.h.is_exact_zero());
    CHECK(!rep.rad.has_value());
    CHECK_THROWS(height_tuple({Q("0"), Q("0")}, Mode::Q));
    // a genuinely tall pair for contrast
    auto rep2 = height_tuple({Q("3"), Q("12")}, Mode::Q);
    CHECK(rep2.h.formal == expect_formal({{Place::prime(2), 2}}).formal);
}

TEST_CASE("heights over Q(t) count places with the residue weight") {
    // (1, t, t-1): valuations differ at t, t-1 and at infinity
    auto rep = height_tuple({T("1"), T("t"), T("t-1")}, Mode::Qt);
    // h: finite places contribute -min v = 0 everywhere except infinity,
    // where min v = -1 over (0, -1, -1)
    CHECK(rep.h.ff_rational_part() == 1);
    REQUIRE(rep.rad.has_value());
    // I(P) = {t, t-1, inf}; rad = deg t + deg (t-1) + 1 = 3
    CHECK(rep.rad->ff_rational_part() == 3);
}

TEST_CASE("exact sign tests on formal log combinations") {
    ExactLog a = expect_formal({{Place::prime(2), 3}});   // 3 log 2 = log 8
    ExactLog b = expect_formal({{Place::prime(3), 2}});   // 2 log 3 = log 9
    CHECK(leq(a, b) == Verdict::True);
    CHECK(leq(b, a) == Verdict::False);
    CHECK(leq(a, a) == Verdict::True);
    ExactLog tiny = expect_formal({{Place::prime(2), Rat(1, 1000000)}});
    CHECK((b - a - tiny).formal_sign() == 1);  // log(9/8) > (log 2)/1e6
}

TEST_CASE("random product formula property") {
    std::mt19937_64 rng(20260816);
    std::uniform_int_distribution<long> num(1, 1000000);
    for (int i = 0; i < 200; ++i) {
        long n = num(rng), d = num(rng);
        Rat x(n, d);
        x.canonicalize();
        if (rng() & 1) x = -x;
        CHECK(product_formula_check(FieldElement(x), Mode::Q));
    }
}
