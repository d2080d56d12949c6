#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "polaron/error.hpp"
#include "polaron/grid.hpp"

namespace polaron {

enum class PotentialKind { zero, sech2, gaussian, lorentzian, tabulated };

inline std::string to_string(PotentialKind k)
{
    switch (k) {
    case PotentialKind::zero: return "zero";
    case PotentialKind::sech2: return "sech2";
    case PotentialKind::gaussian: return "gaussian";
    case PotentialKind::lorentzian: return "lorentzian";
    case PotentialKind::tabulated: return "tabulated";
    }
    return "?";
}

inline PotentialKind potential_kind_from_string(const std::string& s)
{
    if (s == "zero") return PotentialKind::zero;
    if (s == "sech2") return PotentialKind::sech2;
    if (s == "gaussian") return PotentialKind::gaussian;
    if (s == "lorentzian") return PotentialKind::lorentzian;
    if (s == "tabulated") return PotentialKind::tabulated;
    throw ValidationError("pekar", "kind", "unknown potential kind '" + s + "'");
}

/// Symmetric decreasing confining potential V(x) >= 0.
///
///   sech2:      V0 sech^2(x / w)
///   gaussian:   V0 exp(-(x / w)^2)
///   lorentzian: V0 / (1 + (x / w)^2)
///   tabulated:  piecewise-linear in |x| through (x_k, V_k), x_0 = 0, zero past the last node
class Potential
{
public:
    Potential() = default;

    static Potential zero() { return {}; }
    static Potential sech2(double amplitude, double width) { return {PotentialKind::sech2, amplitude, width}; }
    static Potential gaussian(double amplitude, double width) { return {PotentialKind::gaussian, amplitude, width}; }
    static Potential lorentzian(double amplitude, double width)
    {
        return {PotentialKind::lorentzian, amplitude, width};
    }

    static Potential tabulated(std::vector<double> abscissae, std::vector<double> values)
    {
        Potential p;
        p.m_kind = PotentialKind::tabulated;
        if (abscissae.size() < 2 || abscissae.size() != values.size())
            throw ValidationError("pekar", "table", "need matching abscissae/values with at least two entries");
        if (abscissae.front() != 0.0) throw ValidationError("pekar", "table", "first abscissa must be 0");
        for (std::size_t i = 1; i < abscissae.size(); ++i) {
            if (!(abscissae[i] > abscissae[i - 1]))
                throw ValidationError("pekar", "table", "abscissae must be strictly increasing");
            if (values[i] > values[i - 1])
                throw ValidationError("pekar", "table", "values must be nonincreasing in |x|");
        }
        if (values.back() < 0.0) throw ValidationError("pekar", "table", "values must be nonnegative");
        p.m_amplitude = values.front();
        p.m_width = abscissae.back();
        p.m_table_x = std::move(abscissae);
        p.m_table_v = std::move(values);
        return p;
    }

    PotentialKind kind() const noexcept { return m_kind; }
    double amplitude() const noexcept { return m_amplitude; }
    double width() const noexcept { return m_width; }
    const std::vector<double>& table_abscissae() const noexcept { return m_table_x; }
    const std::vector<double>& table_values() const noexcept { return m_table_v; }

    bool is_zero() const noexcept { return m_kind == PotentialKind::zero || m_amplitude == 0.0; }

    double operator()(double x) const noexcept
    {
        const double y = std::abs(x);
        switch (m_kind) {
        case PotentialKind::zero: return 0.0;
        case PotentialKind::sech2: {
            const double c = 1.0 / std::cosh(y / m_width);
            return m_amplitude * c * c;
        }
        case PotentialKind::gaussian: {
            const double t = y / m_width;
            return m_amplitude * std::exp(-t * t);
        }
        case PotentialKind::lorentzian: {
            const double t = y / m_width;
            return m_amplitude / (1.0 + t * t);
        }
        case PotentialKind::tabulated: {
            if (y >= m_table_x.back()) return 0.0;
            const auto it = std::upper_bound(m_table_x.begin(), m_table_x.end(), y);
            const auto j = static_cast<std::size_t>(it - m_table_x.begin());
            const double t = (y - m_table_x[j - 1]) / (m_table_x[j] - m_table_x[j - 1]);
            return (1.0 - t) * m_table_v[j - 1] + t * m_table_v[j];
        }
        }
        return 0.0;
    }

    /// Smallest r such that V(x) < threshold for |x| >= r.
    double radius_below(double threshold) const
    {
        if (is_zero()) return 0.0;
        switch (m_kind) {
        case PotentialKind::sech2:
            // V0 sech^2(r/w) < t  <=>  cosh(r/w) > sqrt(V0/t)
            return m_amplitude <= threshold ? 0.0 : m_width * std::acosh(std::sqrt(m_amplitude / threshold));
        case PotentialKind::gaussian:
            return m_amplitude <= threshold ? 0.0 : m_width * std::sqrt(std::log(m_amplitude / threshold));
        case PotentialKind::lorentzian:
            return m_amplitude <= threshold ? 0.0 : m_width * std::sqrt(m_amplitude / threshold - 1.0);
        case PotentialKind::tabulated: return m_table_x.back();
        default: return 0.0;
        }
    }

    /// Checks V >= 0, evenness and monotonicity on the grid samples.
    void validate_on(const Grid& grid) const
    {
        const std::size_t c = grid.center();
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double v = (*this)(grid.x(i));
            if (!std::isfinite(v) || v < 0.0)
                throw ValidationError("pekar", "potential", "V must be finite and nonnegative");
            if (v != (*this)(grid.x(grid.size() - 1 - i)))
                throw ValidationError("pekar", "potential", "V must be even");
            if (i > c && v > (*this)(grid.x(i - 1)))
                throw ValidationError("pekar", "potential", "V must be nonincreasing on [0, inf)");
        }
    }

private:
    Potential(PotentialKind kind, double amplitude, double width)
        : m_kind(kind), m_amplitude(amplitude), m_width(width)
    {
        if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
            throw ValidationError("pekar", "amplitude", "must be finite and nonnegative");
        if (!(width > 0.0) || !std::isfinite(width))
            throw ValidationError("pekar", "width", "must be finite and positive");
    }

    PotentialKind m_kind = PotentialKind::zero;
    double m_amplitude = 0.0;
    double m_width = 1.0;
    std::vector<double> m_table_x;
    std::vector<double> m_table_v;
};

inline RealFunction sample(const Potential& v, const Grid& grid)
{
    return RealFunction::sample(grid, [&](double x) { return v(x); });
}

} // namespace polaron
