#pragma once

// One-dimensional Pekar functional
//
//   E_V(u) = \int (u'^2 - u^4 - V u^2) dx,    \int u^2 = 1,
//
// its constrained minimization and the Euler-Lagrange equation
//
//   -u'' - 2u^3 - V u = lambda u.
//
// All integrals are trapezoidal on a Grid, u' enters through the 5-point
// Dirichlet Laplacian (sum by parts), so the discrete gradient below is the
// exact gradient of the discrete energy.

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "polaron/error.hpp"
#include "polaron/grid.hpp"
#include "polaron/potential.hpp"

namespace polaron {

inline constexpr double normalization_tolerance = 1e-8;

struct PekarTerms
{
    double kinetic = 0.0;   // \int u'^2
    double quartic = 0.0;   // \int u^4
    double potential = 0.0; // \int V u^2

    double energy() const noexcept { return kinetic - quartic - potential; }
    double multiplier() const noexcept { return kinetic - 2.0 * quartic - potential; }
};

struct PekarResult
{
    RealFunction minimizer;
    double energy = 0.0;
    double multiplier = 0.0;
    double residual = 0.0;
    std::size_t iterations = 0;
};

struct MinimizeOptions
{
    double tol = 1e-8;
    std::size_t max_iter = 200000;
};

/// Iteration cap reached; carries the best iterate seen.
class PekarConvergenceError : public ConvergenceError
{
public:
    PekarConvergenceError(const std::string& what, double best_residual, RealFunction best)
        : ConvergenceError("pekar", "max_iter", what, best_residual), m_best(std::move(best))
    {}

    const RealFunction& best() const noexcept { return m_best; }

private:
    RealFunction m_best;
};

namespace detail {

// Extra energy term coeff * (stencil . u)^2, i.e. coeff |u(x0)|^2 with u(x0)
// obtained by cubic interpolation.
struct PointTerm
{
    CubicStencil stencil;
    double coeff = 0.0;
};

// Discrete functional \int (u'^2 - u^4 - V u^2) + sum_q c_q |u(x_q)|^2.
// `potential` holds samples of the (possibly perturbed, not necessarily
// symmetric) effective potential entering with a minus sign.
struct DiscreteFunctional
{
    Grid grid;
    std::vector<double> potential;
    std::vector<PointTerm> points;

    double point_value(std::span<const double> u, const PointTerm& p) const
    {
        double s = 0.0;
        for (std::size_t a = 0; a < 4; ++a) s += p.stencil.weights[a] * u[p.stencil.first + a];
        return s;
    }

    double energy(std::span<const double> u) const
    {
        const double h = grid.spacing();
        const std::size_t n = u.size();
        std::vector<double> quart(n), pot(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double u2 = u[i] * u[i];
            quart[i] = u2 * u2;
            pot[i] = potential[i] * u2;
        }
        double e = kinetic_unchecked(u, h) - trapezoid<double>(quart, h) - trapezoid<double>(pot, h);
        for (const auto& p : points) {
            const double v = point_value(u, p);
            e += p.coeff * v * v;
        }
        return e;
    }

    // L2 gradient: (1/h) dE/du_i at interior nodes, zero at the end nodes.
    // Also returns the energy, which shares the Laplacian application.
    double gradient(std::span<const double> u, std::span<double> g) const
    {
        const double h = grid.spacing();
        const std::size_t n = u.size();
        neg_laplacian(u, h, g);
        double kin = 0.0, quart = 0.0, pot = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
            const double u2 = u[i] * u[i];
            kin += u[i] * g[i];
            quart += w * u2 * u2;
            pot += w * potential[i] * u2;
            g[i] = 2.0 * g[i] - 4.0 * u2 * u[i] - 2.0 * potential[i] * u[i];
        }
        double e = h * (kin - quart - pot);
        for (const auto& p : points) {
            const double v = point_value(u, p);
            e += p.coeff * v * v;
            for (std::size_t a = 0; a < 4; ++a) g[p.stencil.first + a] += 2.0 * p.coeff * v * p.stencil.weights[a] / h;
        }
        g[0] = 0.0;
        g[n - 1] = 0.0;
        return e;
    }
};

inline double dot(std::span<const double> a, std::span<const double> b, double h)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s * h;
}

inline void normalize_in_place(std::span<double> u, double h)
{
    const double n = std::sqrt(dot(u, u, h));
    for (auto& v : u) v /= n;
}

struct DescentOutcome
{
    std::vector<double> u;
    double energy = 0.0;
    double multiplier = 0.0;
    double residual = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

// Projected gradient descent on the unit L2 sphere with Barzilai-Borwein
// steps, safeguarded by a nonmonotone (max over the last 10 energies)
// Armijo test. The projected gradient p = g - <g,u> u equals twice the
// Euler-Lagrange residual, so the stopping rule is sup|p|/2 <= tol.
inline DescentOutcome descend(const DiscreteFunctional& f, std::vector<double> u, const MinimizeOptions& opts,
                              const char* module, double divergence_floor = -1e8)
{
    const double h = f.grid.spacing();
    const std::size_t n = u.size();
    u.front() = 0.0;
    u.back() = 0.0;
    normalize_in_place(u, h);

    std::vector<double> g(n), p(n), trial(n), g_trial(n), p_trial(n);
    auto project = [&](std::span<const double> uu, std::span<const double> gg, std::span<double> pp) {
        const double mu = dot(gg, uu, h);
        double sup = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            pp[i] = gg[i] - mu * uu[i];
            sup = std::max(sup, std::abs(pp[i]));
        }
        return std::pair{0.5 * mu, 0.5 * sup};
    };

    double energy = f.gradient(u, g);
    auto [lambda, residual] = project(u, g, p);

    DescentOutcome best{u, energy, lambda, residual, 0, false};
    std::deque<double> history{energy};
    const double max_step = 10.0;
    const double min_step = 1e-3 * h * h;
    double step = 0.1 * h * h;

    std::size_t it = 0;
    for (; it < opts.max_iter && residual > opts.tol; ++it) {
        const double p2 = dot(p, p, h);
        const double ref = *std::max_element(history.begin(), history.end());
        double t = step;
        double e_trial = 0.0;
        for (int back = 0;; ++back) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = u[i] - t * p[i];
            normalize_in_place(trial, h);
            e_trial = f.gradient(trial, g_trial);
            if (!std::isfinite(e_trial) || e_trial < divergence_floor)
                throw ValidationError(module, "potential", "energy diverging during descent (functional unbounded below)");
            if (e_trial <= ref - 1e-4 * t * p2 || back >= 40) break;
            t *= 0.5;
        }
        auto [lam_t, res_t] = project(trial, g_trial, p_trial);

        double ss = 0.0, sy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double s = trial[i] - u[i];
            const double y = p_trial[i] - p[i];
            ss += s * s;
            sy += s * y;
        }
        step = sy > 0.0 ? std::clamp(ss / sy, min_step, max_step) : max_step;

        u.swap(trial);
        g.swap(g_trial);
        p.swap(p_trial);
        energy = e_trial;
        lambda = lam_t;
        residual = res_t;
        history.push_back(energy);
        if (history.size() > 10) history.pop_front();
        if (residual < best.residual) best = {u, energy, lambda, residual, it + 1, false};
    }
    if (residual <= opts.tol) return {std::move(u), energy, lambda, residual, it, true};
    best.iterations = it;
    return best;
}

inline RealFunction soliton_start(const Grid& grid)
{
    auto u = RealFunction::sample(grid, [](double x) { return 0.5 / std::cosh(0.5 * x); });
    u[0] = 0.0;
    u[u.size() - 1] = 0.0;
    return normalize(u);
}

inline void require_normalized(const RealFunction& u, const char* module)
{
    const double n2 = norm2_squared(u);
    if (std::abs(n2 - 1.0) > normalization_tolerance)
        throw ValidationError(module, "u", "state is not normalized (|int u^2 - 1| > 1e-8)");
}

inline double el_residual_unchecked(const RealFunction& u, double lambda, std::span<const double> potential)
{
    const auto lu = neg_laplacian(u.values(), u.grid().spacing());
    double sup = 0.0;
    for (std::size_t i = 1; i + 1 < u.size(); ++i) {
        const double r = lu[i] - 2.0 * u[i] * u[i] * u[i] - potential[i] * u[i] - lambda * u[i];
        sup = std::max(sup, std::abs(r));
    }
    return sup;
}

} // namespace detail

/// Kinetic, quartic and potential integrals of u; no normalization check.
inline PekarTerms pekar_terms(const RealFunction& u, const Potential& v)
{
    const auto& grid = u.grid();
    const double h = grid.spacing();
    PekarTerms t;
    t.kinetic = kinetic_energy(u);
    std::vector<double> quart(u.size()), pot(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double u2 = u[i] * u[i];
        quart[i] = u2 * u2;
        pot[i] = v(grid.x(i)) * u2;
    }
    t.quartic = detail::trapezoid<double>(quart, h);
    t.potential = detail::trapezoid<double>(pot, h);
    return t;
}

/// E_V(u) for a normalized u.
inline double eval_pekar(const RealFunction& u, const Potential& v)
{
    detail::require_normalized(u, "pekar");
    return pekar_terms(u, v).energy();
}

/// Rayleigh value of the Euler-Lagrange equation, \int (u'^2 - 2u^4 - V u^2).
inline double lagrange_multiplier(const RealFunction& u, const Potential& v)
{
    detail::require_normalized(u, "pekar");
    return pekar_terms(u, v).multiplier();
}

/// sup over interior nodes of |-u'' - 2u^3 - V u - lambda u|.
inline double el_residual(const RealFunction& u, double lambda, const Potential& v)
{
    detail::require_normalized(u, "pekar");
    return detail::el_residual_unchecked(u, lambda, sample(v, u.grid()).values());
}

/// L2 gradient of the unconstrained discrete functional (zero at the end nodes).
inline RealFunction pekar_gradient(const RealFunction& u, const Potential& v)
{
    detail::DiscreteFunctional f{u.grid(), sample(v, u.grid()).vector(), {}};
    RealFunction g(u.grid());
    f.gradient(u.values(), g.values());
    return g;
}

/// Unconstrained discrete functional value (no normalization or decay checks).
inline double pekar_functional(const RealFunction& u, const Potential& v)
{
    detail::DiscreteFunctional f{u.grid(), sample(v, u.grid()).vector(), {}};
    return f.energy(u.values());
}

/// Minimize E_V over the unit sphere. The default start is the even positive
/// profile (1/2) sech(x/2), which selects the centered soliton when V = 0.
inline PekarResult minimize(const Potential& v, const Grid& grid = Grid(), const MinimizeOptions& opts = {},
                            const std::optional<RealFunction>& start = std::nullopt)
{
    v.validate_on(grid);
    if (start && !(start->grid() == grid)) throw ValidationError("pekar", "start", "start lives on a different grid");
    detail::DiscreteFunctional f{grid, sample(v, grid).vector(), {}};
    auto init = start ? start->vector() : detail::soliton_start(grid).vector();
    auto out = detail::descend(f, std::move(init), opts, "pekar");
    if (!out.converged)
        throw PekarConvergenceError("no convergence within max_iter", out.residual,
                                    RealFunction(grid, std::move(out.u)));
    // e(V) <= e(0) = -1/12 for every admissible V.
    if (!(out.energy < 0.0))
        throw ConvergenceError("pekar", "energy", "converged to a nonnegative energy", out.residual);
    return {RealFunction(grid, std::move(out.u)), out.energy, out.multiplier, out.residual, out.iterations};
}

/// phi(x) = alpha^{1/2} u(alpha x) on the grid of half-width R / alpha.
inline RealFunction scale(const RealFunction& u, double alpha)
{
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("pekar", "alpha", "must be positive");
    detail::require_normalized(u, "pekar");
    auto values = u.vector();
    const double s = std::sqrt(alpha);
    for (auto& x : values) x *= s;
    return RealFunction(u.grid().scaled(alpha), std::move(values));
}

/// F_alpha(phi) = \int phi'^2 - alpha \int phi^4 - alpha^2 \int V(alpha x) phi^2.
inline double scaled_functional(const RealFunction& phi, double alpha, const Potential& v)
{
    const auto& grid = phi.grid();
    const double h = grid.spacing();
    std::vector<double> quart(phi.size()), pot(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const double p2 = phi[i] * phi[i];
        quart[i] = p2 * p2;
        pot[i] = v(alpha * grid.x(i)) * p2;
    }
    return kinetic_energy(phi) - alpha * detail::trapezoid<double>(quart, h) -
           alpha * alpha * detail::trapezoid<double>(pot, h);
}

/// Recenter at the density maximum (for the translation-degenerate V = 0 case).
inline RealFunction recenter(const RealFunction& u)
{
    std::size_t imax = 0;
    for (std::size_t i = 0; i < u.size(); ++i)
        if (std::abs(u[i]) > std::abs(u[imax])) imax = i;
    const auto shift = static_cast<std::ptrdiff_t>(imax) - static_cast<std::ptrdiff_t>(u.grid().center());
    RealFunction out(u.grid());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const auto j = static_cast<std::ptrdiff_t>(i) + shift;
        if (j >= 0 && j < static_cast<std::ptrdiff_t>(u.size())) out[i] = u[static_cast<std::size_t>(j)];
    }
    return out;
}

} // namespace polaron
