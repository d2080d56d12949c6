#pragma once

// Perturbed Pekar energy
//
//   e(V + dW) = inf { E_V(u) + d \int W |u|^2 : \int u^2 = 1 },
//
// its derivative at d = 0 (= \int W u_V^2) and the variational bracket
//
//   \int W u_V^2  >=  (e(V + dW) - e(V)) / d  >=  \int W u_d^2     (d > 0),
//
// reversed for d < 0.

#include <cmath>
#include <optional>
#include <vector>

#include "polaron/error.hpp"
#include "polaron/grid.hpp"
#include "polaron/measure.hpp"
#include "polaron/pekar.hpp"
#include "polaron/potential.hpp"

namespace polaron {

inline constexpr double max_perturbation = 0.5;
inline constexpr double max_bracket_perturbation = 0.25;
inline constexpr double bracket_slack = 1e-9;

struct PerturbResult
{
    double delta = 0.0;
    double energy = 0.0;
    RealFunction minimizer;
    double multiplier = 0.0;
    double residual = 0.0;
    std::size_t iterations = 0;
};

struct Bracket
{
    double delta = 0.0;
    double upper = 0.0;    // \int W u_V^2
    double quotient = 0.0; // (e(V + dW) - e(V)) / d
    double lower = 0.0;    // \int W u_d^2

    bool ordered(double slack = bracket_slack) const noexcept
    {
        if (delta > 0.0) return upper + slack >= quotient && quotient + slack >= lower;
        return upper - slack <= quotient && quotient - slack <= lower;
    }
};

namespace detail {

inline DiscreteFunctional perturbed_functional(const Potential& v, const TestMeasure& w, double delta,
                                               const Grid& grid)
{
    DiscreteFunctional f{grid, sample(v, grid).vector(), {}};
    if (w.kind() == MeasureKind::dirac) {
        f.points.push_back({cubic_stencil(grid, w.center()), delta});
        return f;
    }
    // Effective potential V - d q_i / t_i, with t_i the trapezoid weights, so
    // that the potential sum reproduces d sum_i q_i u_i^2 exactly.
    const auto q = w.weights(grid);
    const double h = grid.spacing();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = (i == 0 || i + 1 == grid.size()) ? 0.5 * h : h;
        f.potential[i] -= delta * q[i] / t;
    }
    return f;
}

inline void require_delta(double delta, double cap)
{
    if (!std::isfinite(delta) || std::abs(delta) > cap)
        throw ValidationError("perturb", "delta", "|delta| exceeds the small-perturbation cap");
}

inline void require_bracket_delta(double delta)
{
    if (delta == 0.0) throw ValidationError("perturb", "delta", "delta must be nonzero");
    require_delta(delta, max_bracket_perturbation);
}

} // namespace detail

/// e(V + dW) by constrained descent. Without `start` the descent begins at
/// the same profile as minimize(), so d = 0 reproduces e(V) bit for bit.
inline PerturbResult perturbed_energy(const Potential& v, const TestMeasure& w, double delta,
                                      const Grid& grid = Grid(), const MinimizeOptions& opts = {},
                                      const std::optional<RealFunction>& start = std::nullopt)
{
    detail::require_delta(delta, max_perturbation);
    v.validate_on(grid);
    w.validate_on(grid);
    if (start && !(start->grid() == grid)) throw ValidationError("perturb", "start", "start lives on a different grid");

    const auto f = detail::perturbed_functional(v, w, delta, grid);
    auto init = start ? start->vector() : detail::soliton_start(grid).vector();
    auto out = detail::descend(f, init, opts, "perturb");
    if (!out.converged)
        throw ConvergenceError("perturb", "max_iter", "no convergence within max_iter", out.residual);
    if (start) {
        auto s = init;
        detail::normalize_in_place(s, grid.spacing());
        if (out.energy > f.energy(s) + 1e-12 * (1.0 + std::abs(out.energy)))
            throw ConvergenceError("perturb", "delta", "minimizer above the energy of the start profile",
                                   out.residual);
    }
    return {delta, out.energy, RealFunction(grid, std::move(out.u)), out.multiplier, out.residual, out.iterations};
}

/// \int W u_V^2 for a given minimizer of E_V.
inline double hf_derivative(const PekarResult& base, const TestMeasure& w)
{
    return w.expectation(base.minimizer);
}

/// d/dd e(V + dW) at d = 0.
inline double hf_derivative(const Potential& v, const TestMeasure& w, const Grid& grid = Grid(),
                            const MinimizeOptions& opts = {})
{
    if (v.is_zero())
        throw ValidationError("perturb", "potential", "V = 0 has a translation family of minimizers");
    w.validate_on(grid);
    return hf_derivative(minimize(v, grid, opts), w);
}

/// Bracket at d from a precomputed minimizer of E_V; u_d is warm-started from u_V.
inline Bracket bracket_check(const Potential& v, const PekarResult& base, const TestMeasure& w, double delta,
                             const MinimizeOptions& opts = {})
{
    detail::require_bracket_delta(delta);
    const auto& grid = base.minimizer.grid();
    const auto pert = perturbed_energy(v, w, delta, grid, opts, base.minimizer);
    return {delta, w.expectation(base.minimizer), (pert.energy - base.energy) / delta, w.expectation(pert.minimizer)};
}

inline Bracket bracket_check(const Potential& v, const TestMeasure& w, double delta, const Grid& grid = Grid(),
                             const MinimizeOptions& opts = {})
{
    detail::require_bracket_delta(delta);
    return bracket_check(v, minimize(v, grid, opts), w, delta, opts);
}

} // namespace polaron
