#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "polaron/error.hpp"
#include "polaron/grid.hpp"

namespace polaron {

enum class MeasureKind { dirac, gaussian, indicator };

inline std::string to_string(MeasureKind k)
{
    switch (k) {
    case MeasureKind::dirac: return "dirac";
    case MeasureKind::gaussian: return "gaussian";
    case MeasureKind::indicator: return "indicator";
    }
    return "?";
}

inline MeasureKind measure_kind_from_string(const std::string& s)
{
    if (s == "dirac") return MeasureKind::dirac;
    if (s == "gaussian") return MeasureKind::gaussian;
    if (s == "indicator") return MeasureKind::indicator;
    throw ValidationError("perturb", "kind", "unknown measure kind '" + s + "'");
}

/// Probability measure W used to probe densities:
///
///   dirac:     delta(x - x0)
///   gaussian:  exp(-(x - x0)^2 / (2 w^2)) / (w sqrt(2 pi))
///   indicator: 1 / (2w) on [x0 - w, x0 + w]
class TestMeasure
{
public:
    static TestMeasure dirac(double center) { return {MeasureKind::dirac, center, 0.0}; }
    static TestMeasure gaussian(double center, double width) { return {MeasureKind::gaussian, center, width}; }
    static TestMeasure indicator(double center, double half_width)
    {
        return {MeasureKind::indicator, center, half_width};
    }

    MeasureKind kind() const noexcept { return m_kind; }
    double center() const noexcept { return m_center; }
    double width() const noexcept { return m_width; }
    bool has_density() const noexcept { return m_kind != MeasureKind::dirac; }

    /// Pointwise density; only defined for gaussian and indicator.
    double density(double x) const
    {
        switch (m_kind) {
        case MeasureKind::gaussian: {
            const double t = (x - m_center) / m_width;
            return std::exp(-0.5 * t * t) / (m_width * std::sqrt(2.0 * std::numbers::pi));
        }
        case MeasureKind::indicator:
            return std::abs(x - m_center) <= m_width ? 0.5 / m_width : 0.0;
        case MeasureKind::dirac: break;
        }
        throw ValidationError("perturb", "kind", "a Dirac measure has no pointwise density");
    }

    /// Quadrature weights q with \int W f = sum_i q_i f_i for grid functions
    /// f. Gaussian: trapezoid. Indicator: exact integral of the piecewise-linear
    /// interpolant. Dirac: cubic interpolation stencil.
    std::vector<double> weights(const Grid& grid) const
    {
        const std::size_t n = grid.size();
        const double h = grid.spacing();
        std::vector<double> q(n, 0.0);
        switch (m_kind) {
        case MeasureKind::dirac: {
            const auto s = cubic_stencil(grid, m_center);
            for (std::size_t a = 0; a < 4; ++a) q[s.first + a] = s.weights[a];
            break;
        }
        case MeasureKind::gaussian:
            for (std::size_t i = 0; i < n; ++i)
                q[i] = ((i == 0 || i + 1 == n) ? 0.5 * h : h) * density(grid.x(i));
            break;
        case MeasureKind::indicator: {
            const double a = m_center - m_width, b = m_center + m_width;
            if (a < -grid.half_width() || b > grid.half_width())
                throw DomainError("perturb", "width", "indicator interval leaves the grid");
            const double scale = 0.5 / m_width;
            // Hat function of node i integrated over [a, b].
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const double x0 = grid.x(i), x1 = grid.x(i + 1);
                const double lo = std::max(a, x0), hi = std::min(b, x1);
                if (hi <= lo) continue;
                // \int_lo^hi (x1 - x)/h dx  and  \int_lo^hi (x - x0)/h dx
                q[i] += scale * ((x1 - lo) * (x1 - lo) - (x1 - hi) * (x1 - hi)) / (2.0 * h);
                q[i + 1] += scale * ((hi - x0) * (hi - x0) - (lo - x0) * (lo - x0)) / (2.0 * h);
            }
            break;
        }
        }
        return q;
    }

    /// Throws unless the discrete total mass is 1 within `tol`.
    void validate_on(const Grid& grid, double tol = 1e-12) const
    {
        double mass = 0.0;
        for (double q : weights(grid)) mass += q;
        if (std::abs(mass - 1.0) > tol)
            throw DomainError("perturb", "measure", "total mass on the grid differs from 1; widen or refine the grid");
    }

    /// \int W f.
    template <typename T>
    T pair(const GridFunction<T>& f) const
    {
        const auto q = weights(f.grid());
        T s{};
        for (std::size_t i = 0; i < f.size(); ++i) s += q[i] * f[i];
        return s;
    }

    /// \int W |u|^2; for a Dirac measure |u(x0)|^2 with u interpolated.
    double expectation(const RealFunction& u) const
    {
        if (m_kind == MeasureKind::dirac) {
            const double v = interpolate(u, m_center);
            return v * v;
        }
        const auto q = weights(u.grid());
        double s = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) s += q[i] * u[i] * u[i];
        return s;
    }

private:
    TestMeasure(MeasureKind kind, double center, double width) : m_kind(kind), m_center(center), m_width(width)
    {
        if (!std::isfinite(center)) throw ValidationError("perturb", "center", "must be finite");
        if (kind != MeasureKind::dirac && (!(width > 0.0) || !std::isfinite(width)))
            throw ValidationError("perturb", "width", "must be finite and positive");
    }

    MeasureKind m_kind;
    double m_center;
    double m_width;
};

} // namespace polaron
