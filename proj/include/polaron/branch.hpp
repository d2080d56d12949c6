#pragma once

// Positive even solutions of -u'' - 2u^3 - V u = lambda u for lambda below the
// bottom lambda0 of -d^2/dx^2 - V, by shooting from x = 0.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "polaron/error.hpp"
#include "polaron/grid.hpp"
#include "polaron/pekar.hpp"
#include "polaron/potential.hpp"

namespace polaron {

/// Number of negative eigenvalues of (-Delta_h - V) - sigma on the grid, by
/// Sylvester inertia of the banded LDL^T factorization.
inline std::size_t count_below(const Grid& grid, std::span<const double> potential, double sigma)
{
    const std::size_t n = grid.size();
    const double h = grid.spacing();
    const double c = 1.0 / (12.0 * h * h);
    const double off1 = -16.0 * c, off2 = c;
    // L has two subdiagonals; keep the last two columns of (l1, l2) and d.
    std::vector<double> d(n), l1(n, 0.0), l2(n, 0.0); // l1[i] = L(i, i-1), l2[i] = L(i, i-2)
    std::size_t negatives = 0;
    for (std::size_t i = 0; i < n; ++i) {
        // L(i, i-2) d(i-2) = a(i, i-2)
        if (i >= 2) l2[i] = off2 / d[i - 2];
        // L(i, i-1) d(i-1) = a(i, i-1) - L(i, i-2) L(i-1, i-2) d(i-2)
        if (i >= 1) {
            double a = off1;
            if (i >= 2) a -= l2[i] * l1[i - 1] * d[i - 2];
            l1[i] = a / d[i - 1];
        }
        double di = 30.0 * c - potential[i] - sigma;
        if (i >= 1) di -= l1[i] * l1[i] * d[i - 1];
        if (i >= 2) di -= l2[i] * l2[i] * d[i - 2];
        if (di == 0.0) di = -std::numeric_limits<double>::epsilon() * c;
        d[i] = di;
        if (di < 0.0) ++negatives;
    }
    return negatives;
}

/// Lowest eigenvalue of -d^2/dx^2 - V on the grid; 0 when there is no bound
/// state (bottom of the essential spectrum).
inline double lambda0(const Potential& v, const Grid& grid = Grid())
{
    v.validate_on(grid);
    if (v.is_zero()) return 0.0;
    const auto pot = sample(v, grid).vector();
    if (count_below(grid, pot, 0.0) == 0) return 0.0;
    double lo = -*std::max_element(pot.begin(), pot.end()) - 1e-12; // -Delta_h >= 0
    double hi = 0.0;
    while (hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(lo))) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (count_below(grid, pot, mid) >= 1)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

struct BranchPoint
{
    double lambda = 0.0;
    RealFunction u;           // positive, even, not normalized
    double norm2_sq = 0.0;    // \int u^2 over the real line
    double height = 0.0;      // u(0)
    double matching_radius = 0.0;
};

struct BranchCurve
{
    Potential potential;
    std::vector<BranchPoint> samples;

    bool strictly_decreasing() const
    {
        for (std::size_t i = 1; i < samples.size(); ++i)
            if (!(samples[i].norm2_sq < samples[i - 1].norm2_sq)) return false;
        return true;
    }
};

struct ShootingOptions
{
    double initial_height = 0.0; // 0 selects sqrt(-lambda + V(0))
    double rel_tol = 1e-12;
    double abs_tol = 1e-15;
    double potential_cutoff = 1e-12; // matching radius: V(x) < cutoff beyond it ...
    double growth_limit = 1e4;       // ... capped where exp(sqrt(-lambda) x) reaches this
    double min_matching_radius = 2.0;
    std::size_t max_newton = 60;
};

namespace detail {

using ShotState = std::array<double, 5>; // u, u', \int u^2, du/ds, du'/ds

enum class ShotOutcome { overshoot, undershoot, reached };

struct Shot
{
    ShotOutcome outcome;
    ShotState state{};
    double mismatch = 0.0;   // u' + u sqrt(-lambda - u^2) at the matching radius
    double derivative = 0.0; // d mismatch / ds
};

class Shooter
{
public:
    Shooter(const Potential& v, double lambda, double matching_radius, const ShootingOptions& opts)
        : m_v(v), m_lambda(lambda), m_xm(matching_radius), m_opts(opts)
    {}

    void operator()(const ShotState& y, ShotState& dy, double x) const
    {
        const double vx = m_v(x);
        const double u = y[0];
        dy[0] = y[1];
        dy[1] = -(2.0 * u * u + vx + m_lambda) * u;
        dy[2] = u * u;
        dy[3] = y[4];
        dy[4] = -(6.0 * u * u + vx + m_lambda) * y[3];
    }

    /// Integrates from x = 0 with u(0) = s, u'(0) = 0 to `x_end`; stops early
    /// on a zero crossing or an upturn. `observe(x, y)` is called at each
    /// abscissa in `stops` (ascending, within [0, x_end]).
    template <typename Observer>
    Shot shoot(double s, double x_end, const std::vector<double>& stops, Observer&& observe) const
    {
        namespace ode = boost::numeric::odeint;
        auto stepper = ode::make_controlled(m_opts.abs_tol * std::max(1.0, s), m_opts.rel_tol,
                                            ode::runge_kutta_dopri5<ShotState>());
        ShotState y{s, 0.0, 0.0, 1.0, 0.0};
        double x = 0.0;
        double dx = 1e-3;
        std::size_t next = 0;
        while (next < stops.size() && stops[next] <= 0.0) observe(stops[next++], y);
        bool started = false;
        while (x < x_end) {
            const double target = next < stops.size() ? std::min(stops[next], x_end) : x_end;
            double step = std::min(dx, target - x);
            ode::controlled_step_result res;
            int fails = 0;
            do {
                res = stepper.try_step(std::cref(*this), y, x, step);
                if (++fails > 500)
                    throw ConvergenceError("branch", "lambda", "step size control failed during shooting", 0.0);
            } while (res == ode::fail);
            dx = std::max(step, 1e-8);
            if (std::abs(x - target) <= 1e-13 * std::max(1.0, target)) {
                x = target;
                while (next < stops.size() && stops[next] <= x) observe(stops[next++], y);
            }
            if (y[0] < 0.0) return {ShotOutcome::overshoot, y};
            if (started && y[1] > 0.0) return {ShotOutcome::undershoot, y};
            started = true;
        }
        Shot shot{ShotOutcome::reached, y};
        const double u = y[0], up = y[1];
        const double q = -m_lambda - u * u;
        const double root = std::sqrt(std::max(q, 0.0));
        shot.mismatch = up + u * root;
        shot.derivative = y[4] + y[3] * root - (root > 0.0 ? u * u * y[3] / root : 0.0);
        return shot;
    }

    Shot shoot(double s) const
    {
        return shoot(s, m_xm, {}, [](double, const ShotState&) {});
    }

    // +1: height too large, -1: too small, 0: exact hit.
    static int classify(const Shot& shot)
    {
        switch (shot.outcome) {
        case ShotOutcome::overshoot: return +1;
        case ShotOutcome::undershoot: return -1;
        case ShotOutcome::reached: return shot.mismatch < 0.0 ? +1 : (shot.mismatch > 0.0 ? -1 : 0);
        }
        return 0;
    }

private:
    const Potential& m_v;
    double m_lambda;
    double m_xm;
    ShootingOptions m_opts;
};

// The even solution also carries the growing mode exp(kappa x); round-off in
// the height is amplified by exp(2 kappa x), so the match must happen before
// that swamps the decaying solution.
inline double matching_radius(const Potential& v, double lambda, const ShootingOptions& opts)
{
    const double stable = std::log(opts.growth_limit) / std::sqrt(-lambda);
    return std::min(std::max(v.radius_below(opts.potential_cutoff), opts.min_matching_radius), stable);
}

} // namespace detail

/// Even positive solution at a fixed lambda < lambda0, sampled on `grid`.
/// Beyond the matching radius V is negligible and the decaying solution of
/// u'' = -lambda u - 2u^3 is B sech(B(x - x_m) + c), B = sqrt(-lambda).
inline BranchPoint solve_at_lambda(const Potential& v, double lambda, const Grid& grid = Grid(),
                                   const ShootingOptions& opts = {})
{
    const double l0 = lambda0(v, grid);
    if (!(lambda < l0 - 1e-6) || !std::isfinite(lambda)) {
        std::ostringstream os;
        os << "lambda = " << lambda << " is not below lambda0 - 1e-6 = " << l0 - 1e-6;
        throw ValidationError("branch", "lambda", os.str());
    }
    const double xm = detail::matching_radius(v, lambda, opts);
    if (xm >= grid.half_width())
        throw DomainError("branch", "half_width", "matching radius exceeds the grid half-width");
    detail::Shooter shooter(v, lambda, xm, opts);

    // Bracket [lo, hi] with lo too small and hi too large.
    double s = opts.initial_height > 0.0 ? opts.initial_height : std::sqrt(-lambda + v(0.0));
    double lo = 0.0, hi = 0.0;
    int side = detail::Shooter::classify(shooter.shoot(s));
    if (side == 0) {
        lo = hi = s;
    } else if (side > 0) {
        hi = s;
        lo = s;
        for (int k = 0; k < 200 && side > 0; ++k) {
            hi = lo;
            lo *= 0.5;
            side = detail::Shooter::classify(shooter.shoot(lo));
        }
        if (side > 0) throw ConvergenceError("branch", "lambda", "no undershooting height found", hi);
    } else {
        lo = s;
        hi = s;
        for (int k = 0; k < 200 && side < 0; ++k) {
            lo = hi;
            hi *= 2.0;
            side = detail::Shooter::classify(shooter.shoot(hi));
        }
        if (side < 0) throw ConvergenceError("branch", "lambda", "no overshooting height found", lo);
    }

    // Bisection down to a narrow bracket, then safeguarded Newton on the
    // matching mismatch.
    while (hi - lo > 1e-6 * hi) {
        const double mid = 0.5 * (lo + hi);
        const int c = detail::Shooter::classify(shooter.shoot(mid));
        if (c == 0) { lo = hi = mid; break; }
        (c > 0 ? hi : lo) = mid;
    }
    s = 0.5 * (lo + hi);
    bool converged = lo == hi;
    for (std::size_t it = 0; it < opts.max_newton && !converged; ++it) {
        const auto shot = shooter.shoot(s);
        const int c = detail::Shooter::classify(shot);
        if (c == 0) break;
        (c > 0 ? hi : lo) = s;
        double next = 0.5 * (lo + hi);
        if (shot.outcome == detail::ShotOutcome::reached && shot.derivative != 0.0) {
            const double newton = s - shot.mismatch / shot.derivative;
            if (newton > lo && newton < hi) next = newton;
        }
        if (std::abs(next - s) <= 4.0 * std::numeric_limits<double>::epsilon() * s ||
            hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
            s = next;
            converged = true;
        }
        s = next;
    }
    if (!converged) {
        std::ostringstream os;
        os.precision(17);
        os << "Newton on the initial height did not converge; bracket [" << lo << ", " << hi << "]";
        throw ConvergenceError("branch", "lambda", os.str(), hi - lo);
    }

    // Profile on the nonnegative half of the grid.
    const std::size_t c = grid.center();
    std::vector<double> stops;
    for (std::size_t i = c; i < grid.size() && grid.x(i) <= xm; ++i) stops.push_back(grid.x(i));
    std::vector<double> half;
    half.reserve(grid.size() - c);
    const auto final_shot = shooter.shoot(s, xm, stops, [&](double, const detail::ShotState& y) { half.push_back(y[0]); });
    if (final_shot.outcome != detail::ShotOutcome::reached)
        throw ConvergenceError("branch", "lambda", "converged height does not reach the matching radius", 0.0);

    const double b = std::sqrt(-lambda);
    const double um = final_shot.state[0];
    const double phase = std::acosh(std::max(b / um, 1.0));
    for (std::size_t i = c + half.size(); i < grid.size(); ++i)
        half.push_back(b / std::cosh(b * (grid.x(i) - xm) + phase));

    BranchPoint bp;
    bp.lambda = lambda;
    bp.height = s;
    bp.matching_radius = xm;
    bp.norm2_sq = 2.0 * (final_shot.state[2] + b * (1.0 - std::tanh(phase)));
    std::vector<double> values(grid.size());
    for (std::size_t k = 0; k < half.size(); ++k) {
        values[c + k] = half[k];
        values[c - k] = half[k];
    }
    bp.u = RealFunction(grid, std::move(values));
    return bp;
}

/// sup |-u'' - 2u^3 - V u - lambda u| over nodes whose 5-point stencil stays
/// inside the grid.
inline double branch_residual(const BranchPoint& bp, const Potential& v)
{
    const auto& u = bp.u;
    const auto lu = detail::neg_laplacian(u.values(), u.grid().spacing());
    double sup = 0.0;
    for (std::size_t i = 2; i + 2 < u.size(); ++i) {
        const double r = lu[i] - 2.0 * u[i] * u[i] * u[i] - v(u.grid().x(i)) * u[i] - bp.lambda * u[i];
        sup = std::max(sup, std::abs(r));
    }
    return sup;
}

/// Mean slope of log u over the outer quarter [3R/4, R] of the grid.
inline double tail_log_slope(const BranchPoint& bp)
{
    const auto& g = bp.u.grid();
    const std::size_t last = g.size() - 1;
    const std::size_t first = g.center() + (3 * (last - g.center())) / 4;
    return (std::log(bp.u[last]) - std::log(bp.u[first])) / (g.x(last) - g.x(first));
}

/// lambda values lambda0 - d_i with d_i logarithmically spaced from lambda0 - lo to lambda0 - hi.
inline std::vector<double> log_lambda_grid(double l0, double lo, double hi, std::size_t count)
{
    if (!(lo < hi) || !(hi < l0)) throw ValidationError("branch", "lambda_grid", "need lo < hi < lambda0");
    if (count == 0) throw ValidationError("branch", "lambda_grid", "count must be positive");
    std::vector<double> out(count);
    if (count == 1) { out[0] = lo; return out; }
    const double a = std::log(l0 - lo), b = std::log(l0 - hi);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(count - 1);
        out[i] = l0 - std::exp((1.0 - t) * a + t * b);
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

inline BranchCurve trace_branch(const Potential& v, const std::vector<double>& lambdas, const Grid& grid = Grid(),
                                const ShootingOptions& opts = {})
{
    for (std::size_t i = 1; i < lambdas.size(); ++i)
        if (!(lambdas[i] > lambdas[i - 1]))
            throw ValidationError("branch", "lambda_grid", "lambda values must be strictly increasing");
    BranchCurve curve{v, {}};
    curve.samples.reserve(lambdas.size());
    for (const double l : lambdas) {
        try {
            curve.samples.push_back(solve_at_lambda(v, l, grid, opts));
        } catch (const ConvergenceError& e) {
            std::ostringstream os;
            os.precision(17);
            os << "at lambda = " << l << ": " << e.what();
            throw ConvergenceError("branch", "lambda", os.str(), e.best_residual());
        }
    }
    return curve;
}

struct NormMatch
{
    double lambda = 0.0;
    RealFunction u;
    double norm2_sq = 0.0;
};

/// The unique branch point with \int u^2 = 1, by bisection in lambda using
/// the monotone decrease of the norm along the branch.
inline NormMatch norm_match(const Potential& v, const Grid& grid = Grid(), const ShootingOptions& opts = {},
                            double search_width = 64.0)
{
    const double l0 = lambda0(v, grid);
    double hi = l0 - 1e-3;
    auto at = [&](double l) { return solve_at_lambda(v, l, grid, opts).norm2_sq; };
    double n_hi = at(hi);
    while (n_hi > 1.0) {
        hi = l0 - 0.5 * (l0 - hi);
        if (l0 - hi < 1e-5) throw ValidationError("branch", "lambda", "norm 1 not bracketed near lambda0");
        n_hi = at(hi);
    }
    double lo = l0 - 1.0;
    while (at(lo) < 1.0) {
        if (l0 - lo > search_width) {
            std::ostringstream os;
            os << "norm 1 not bracketed in [" << l0 - search_width << ", " << hi << "]; widen the search interval";
            throw ValidationError("branch", "search_width", os.str());
        }
        hi = lo;
        lo = l0 - 2.0 * (l0 - lo);
    }
    for (int it = 0; it < 200 && hi - lo > 2e-15 * std::max(1.0, std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (at(mid) > 1.0 ? lo : hi) = mid;
    }
    auto bp = solve_at_lambda(v, 0.5 * (lo + hi), grid, opts);
    return {bp.lambda, std::move(bp.u), bp.norm2_sq};
}

} // namespace polaron
