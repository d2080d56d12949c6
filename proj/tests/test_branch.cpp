#include <catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "polaron/branch.hpp"
#include "polaron/pekar.hpp"

using namespace polaron;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Dense copy of the 5-point Dirichlet operator -Delta_h - V.
Eigen::MatrixXd dense_operator(const Grid& g, const Potential& v)
{
    const auto n = static_cast<Eigen::Index>(g.size());
    const double c = 1.0 / (12.0 * g.spacing() * g.spacing());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, i) = 30.0 * c - v(g.x(static_cast<std::size_t>(i)));
        if (i >= 1) a(i, i - 1) = a(i - 1, i) = -16.0 * c;
        if (i >= 2) a(i, i - 2) = a(i - 2, i) = c;
    }
    return a;
}

} // namespace

TEST_CASE("Poeschl-Teller ground states", "[branch]")
{
    CHECK_THAT(lambda0(Potential::sech2(2, 1)), WithinAbs(-1.0, 1e-6));
    CHECK_THAT(lambda0(Potential::sech2(6, 1)), WithinAbs(-4.0, 1e-6));
    CHECK(lambda0(Potential::zero()) == 0.0);
}

TEST_CASE("inertia count agrees with a dense eigensolver", "[branch][property]")
{
    const Grid g(15.0, 201);
    for (const auto& v : {Potential::sech2(6, 1), Potential::gaussian(3, 2), Potential::lorentzian(2, 1.5)}) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_operator(g, v), Eigen::EigenvaluesOnly);
        const auto& ev = es.eigenvalues();
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> pick(ev(0) - 1.0, 2.0);
        for (int k = 0; k < 40; ++k) {
            const double s = pick(rng);
            std::size_t expected = 0;
            for (Eigen::Index i = 0; i < ev.size(); ++i) expected += ev(i) < s ? 1 : 0;
            REQUIRE(count_below(g, sample(v, g).vector(), s) == expected);
        }
        CHECK_THAT(lambda0(v, g), WithinAbs(ev(0), 1e-12));
    }
}

TEST_CASE("free branch matches the sech family", "[branch]")
{
    for (double lambda : {-1.0, -0.5, -0.25, -0.1}) {
        const double b = std::sqrt(-lambda);
        const auto bp = solve_at_lambda(Potential::zero(), lambda);
        CHECK_THAT(bp.norm2_sq, WithinAbs(2.0 * b, 1e-6));
        CHECK_THAT(bp.height, WithinAbs(b, 1e-6));
        const auto exact = RealFunction::sample(bp.u.grid(), [b](double x) { return b / std::cosh(b * x); });
        CHECK(sup_distance(bp.u, exact) <= 1e-6);
    }
}

TEST_CASE("branch norm is strictly decreasing in lambda", "[branch][property]")
{
    const auto v = Potential::sech2(2, 1);
    const double l0 = lambda0(v);
    const auto lambdas = log_lambda_grid(l0, -3.0, l0 - 0.05, 20);
    REQUIRE(lambdas.size() == 20);
    CHECK(lambdas.front() == -3.0);
    for (std::size_t i = 1; i < lambdas.size(); ++i) REQUIRE(lambdas[i] > lambdas[i - 1]);

    const auto curve = trace_branch(v, lambdas);
    CHECK(curve.strictly_decreasing());
    // Near lambda0 the branch bifurcates from zero.
    const auto tip = solve_at_lambda(v, l0 - 1e-3);
    CHECK(tip.norm2_sq < 0.05);

    auto reversed = lambdas;
    std::swap(reversed[0], reversed[1]);
    CHECK_THROWS_AS(trace_branch(v, reversed), ValidationError);
    CHECK_THROWS_AS(solve_at_lambda(v, l0), ValidationError);
    CHECK_THROWS_AS(solve_at_lambda(v, l0 - 1e-7), ValidationError);
}

TEST_CASE("branch points solve the Euler-Lagrange equation", "[branch][property]")
{
    // The sampled residual is the stencil's h^4 truncation error; at lambda = -3
    // it drops below 1e-7 only from n = 16385 on.
    const Grid fine(40.0, 16385);
    for (const auto& v : {Potential::sech2(2, 1), Potential::zero(), Potential::gaussian(1, 1)}) {
        for (double lambda : {-3.0, -2.0, -1.5}) {
            const auto bp = solve_at_lambda(v, lambda, fine);
            CHECK(branch_residual(bp, v) <= 1e-7);
            for (std::size_t i = 1; i + 1 < bp.u.size(); ++i) REQUIRE(bp.u[i] > 0.0);
            for (std::size_t i = 0; i < bp.u.size(); ++i) REQUIRE(bp.u[i] == bp.u[bp.u.size() - 1 - i]);
            const double slope = tail_log_slope(bp);
            CHECK_THAT(slope, WithinRel(-std::sqrt(-lambda), 0.1));
        }
    }
}

TEST_CASE("norm match reproduces the constrained minimizer", "[branch][pekar]")
{
    const auto free = norm_match(Potential::zero());
    CHECK_THAT(free.lambda, WithinAbs(-0.25, 1e-8));
    CHECK_THAT(free.norm2_sq, WithinAbs(1.0, 1e-12));

    for (const auto& v : {Potential::sech2(2, 1), Potential::gaussian(1, 1)}) {
        const auto nm = norm_match(v);
        const auto r = minimize(v);
        CHECK_THAT(nm.lambda, WithinAbs(r.multiplier, 1e-6));
        CHECK(sup_distance(nm.u, r.minimizer) <= 1e-5);
    }
}
