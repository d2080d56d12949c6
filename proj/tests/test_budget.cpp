#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "polaron/budget.hpp"

using namespace polaron;
using Catch::Matchers::WithinRel;

namespace {

Rational q(long n, long d) { return Rational(n, d); }

} // namespace

TEST_CASE("term orders for the published exponents", "[budget]")
{
    const auto r = term_orders(ExponentVector::published());
    // Over the common denominator 49: d = -7, k = 76, p = 5, e = 64.
    CHECK(r.t1_delta == q(98 - 7, 49));
    CHECK(r.t1_eps == q(147 - 76, 49));
    CHECK(r.t2 == q(76 - 5, 49));
    CHECK(r.t3 == 0);
    CHECK(r.t4 == q(64, 49));
    CHECK(r.t5 == q(49 + 76 + 10 + 7 - 64, 49));
    CHECK(r.max_order == q(13, 7));
    CHECK(to_string(r.max_order) == "13/7");
    CHECK(r.binding == std::vector<std::string>{"T1"});
}

TEST_CASE("exact optimum and dual certificate", "[budget]")
{
    const auto opt = optimize();
    CHECK(opt.order == q(3, 2));
    CHECK(opt.exponents == ExponentVector{q(-1, 2), q(3, 2), 0, q(3, 2)});
    CHECK(verify_certificate(opt.certificate));
    CHECK(opt.certificate.bound == q(3, 2));

    const auto r = term_orders(opt.exponents);
    CHECK(r.max_order == opt.order);
    CHECK(r.binding.size() == 4);

    // Certificate (1, 3, 2, 1, 1)/8 on (T1a, T1b, T2, T4, T5), checked by hand:
    // d: 1 - 1 = 0, k: -3 + 2 + 1 = 0, p: -2 + 2 = 0, e: 1 - 1 = 0, M: -8/8.
    const DualCertificate manual{{"T1a", "T1b", "T2", "T4", "T5"}, {q(1, 8), q(3, 8), q(2, 8), q(1, 8), q(1, 8)}, q(3, 2)};
    CHECK(verify_certificate(manual));
    auto tampered = manual;
    tampered.weights[0] = q(2, 8);
    CHECK_FALSE(verify_certificate(tampered));
    tampered = manual;
    tampered.bound = q(7, 4);
    CHECK_FALSE(verify_certificate(tampered));
}

TEST_CASE("no feasible exponent vector beats 3/2", "[budget][property]")
{
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<long> num(1, 999);
    auto frac = [&](long lo, long hi) { return Rational(lo) + Rational(hi - lo) * Rational(num(rng), 1000); };
    for (int t = 0; t < 100; ++t) {
        ExponentVector ev;
        ev.d = -frac(0, 3);
        ev.k = frac(1, 4);
        ev.p = ev.k - frac(0, 3);
        ev.e = frac(-1, 3);
        REQUIRE(term_orders(ev).max_order >= q(3, 2));
    }
}

TEST_CASE("perturbing the optimum raises the order", "[budget][property]")
{
    auto ev = optimize().exponents;
    ev.d += q(1, 100);
    CHECK(term_orders(ev).max_order == q(151, 100));
    ev = optimize().exponents;
    ev.k -= q(1, 100);
    CHECK(term_orders(ev).max_order == q(151, 100));
}

TEST_CASE("raising k trades T1 against T2 and T5", "[budget][property]")
{
    const auto lo = term_orders(ExponentVector::published());
    auto ev = ExponentVector::published();
    ev.k += q(1, 49);
    const auto hi = term_orders(ev);
    CHECK(hi.t1_eps < lo.t1_eps);
    CHECK(hi.t2 > lo.t2);
    CHECK(hi.t5 > lo.t5);
    CHECK(hi.t1_delta == lo.t1_delta);
}

TEST_CASE("invalid exponent vectors name the violated constraint", "[budget]")
{
    auto check = [](ExponentVector ev, const std::string& param) {
        try {
            term_orders(ev);
            FAIL("expected rejection");
        } catch (const ValidationError& e) {
            CHECK(e.parameter() == param);
        }
    };
    check({0, 2, 0, 1}, "d");
    check({-1, 1, 0, 1}, "k");
    check({-1, 2, 2, 1}, "p");
}

TEST_CASE("rational parsing", "[budget]")
{
    CHECK(rational_from_string("-7/49") == q(-1, 7));
    CHECK(rational_from_string("3") == 3);
    CHECK(to_string(Rational(0)) == "0/1");
    CHECK_THROWS_AS(rational_from_string("1/0"), ValidationError);
    CHECK_THROWS_AS(rational_from_string("abc"), ValidationError);
}

TEST_CASE("numeric sandwich", "[budget][property]")
{
    const auto ev = optimize().exponents;
    const SandwichConstants c;
    const double e_v = -1.0 / 12.0;
    CHECK(sandwich_threshold(ev, c) == 64.0);
    CHECK_THROWS_AS(numeric_sandwich(10.0, ev, c, e_v), DomainError);
    CHECK_THROWS_AS(numeric_sandwich(0.5, ev, c, e_v), ValidationError);

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> loga(std::log(65.0), std::log(1e8));
    for (int t = 0; t < 50; ++t) {
        const double alpha = std::exp(loga(rng));
        const auto s = numeric_sandwich(alpha, ev, c, e_v);
        REQUIRE(s.ordered);
        REQUIRE(s.upper == alpha * alpha * e_v);
    }

    // Both T1 branches, T2, T4 and T5 bind at the optimum:2|e| + 8|e| + 2 + 1 + 2 pi^2.
    const double expected = 10.0 / 12.0 + 3.0 + 2.0 * std::numbers::pi * std::numbers::pi;
    CHECK_THAT(asymptotic_constant(ev, c, e_v), WithinRel(expected, 1e-14));
    const double alpha = 1e10;
    const auto s = numeric_sandwich(alpha, ev, c, e_v);
    CHECK_THAT((s.upper - s.lower) / std::pow(alpha, 1.5), WithinRel(expected, 1e-3));
}
