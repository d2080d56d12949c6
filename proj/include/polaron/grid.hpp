#pragma once

// Uniform symmetric grid on [-R, R] with trapezoidal quadrature, a
// fourth-order Dirichlet Laplacian and local polynomial interpolation.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "polaron/error.hpp"

namespace polaron {

using cplx = std::complex<double>;

class Grid
{
public:
    static constexpr double default_half_width = 40.0;
    static constexpr std::size_t default_points = 4097;

    Grid() : Grid(default_half_width, default_points) {}

    Grid(double half_width, std::size_t points) : m_half_width(half_width), m_points(points)
    {
        if (!(half_width > 0.0) || !std::isfinite(half_width))
            throw ValidationError("grid", "half_width", "must be positive and finite");
        if (points < 16)
            throw ValidationError("grid", "points", "at least 16 nodes required");
        if (points % 2 == 0)
            throw ValidationError("grid", "points", "must be odd so that x = 0 is a node");
        m_spacing = 2.0 * half_width / static_cast<double>(points - 1);
    }

    double half_width() const noexcept { return m_half_width; }
    std::size_t size() const noexcept { return m_points; }
    double spacing() const noexcept { return m_spacing; }
    std::size_t center() const noexcept { return (m_points - 1) / 2; }

    // Nodes are computed from the center outward so that x(center) == 0 and
    // x(i) == -x(n-1-i) hold bit-exactly.
    double x(std::size_t i) const noexcept
    {
        const auto c = static_cast<std::ptrdiff_t>(center());
        const auto k = static_cast<std::ptrdiff_t>(i) - c;
        if (k == -c) return -m_half_width;
        if (k == c) return m_half_width;
        return static_cast<double>(k) * m_spacing;
    }

    std::vector<double> nodes() const
    {
        std::vector<double> out(m_points);
        for (std::size_t i = 0; i < m_points; ++i) out[i] = x(i);
        return out;
    }

    /// Same node count on [-R/alpha, R/alpha].
    Grid scaled(double alpha) const { return Grid(m_half_width / alpha, m_points); }

    friend bool operator==(const Grid& a, const Grid& b) noexcept
    {
        return a.m_half_width == b.m_half_width && a.m_points == b.m_points;
    }

private:
    double m_half_width;
    std::size_t m_points;
    double m_spacing = 0.0;
};

template <typename T>
class GridFunction
{
    static_assert(std::is_same_v<T, double> || std::is_same_v<T, cplx>,
                  "grid functions are real or complex doubles");

public:
    using value_type = T;

    GridFunction() : GridFunction(Grid()) {}

    explicit GridFunction(Grid grid) : m_grid(grid), m_values(grid.size(), T{}) {}

    GridFunction(Grid grid, std::vector<T> values) : m_grid(grid), m_values(std::move(values))
    {
        if (m_values.size() != m_grid.size())
            throw ValidationError("grid", "values", "length does not match the grid point count");
    }

    template <typename F>
    static GridFunction sample(const Grid& grid, F&& f)
    {
        std::vector<T> v(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) v[i] = static_cast<T>(f(grid.x(i)));
        return GridFunction(grid, std::move(v));
    }

    const Grid& grid() const noexcept { return m_grid; }
    std::size_t size() const noexcept { return m_values.size(); }
    std::span<const T> values() const noexcept { return m_values; }
    std::span<T> values() noexcept { return m_values; }
    const std::vector<T>& vector() const noexcept { return m_values; }

    T operator[](std::size_t i) const noexcept { return m_values[i]; }
    T& operator[](std::size_t i) noexcept { return m_values[i]; }

    GridFunction& operator*=(T s)
    {
        for (auto& v : m_values) v *= s;
        return *this;
    }

private:
    Grid m_grid;
    std::vector<T> m_values;
};

using RealFunction = GridFunction<double>;
using ComplexFunction = GridFunction<cplx>;

namespace detail {

template <typename T>
inline bool finite(T v)
{
    if constexpr (std::is_same_v<T, cplx>)
        return std::isfinite(v.real()) && std::isfinite(v.imag());
    else
        return std::isfinite(v);
}

template <typename T>
inline void require_finite(std::span<const T> v, const char* module)
{
    for (const auto& a : v)
        if (!finite(a)) throw ValidationError(module, "values", "non-finite value");
}

/// Trapezoid sum without validation.
template <typename T>
inline T trapezoid(std::span<const T> f, double h)
{
    if (f.empty()) return T{};
    T s{};
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
    s += 0.5 * (f.front() + f.back());
    return s * h;
}

/// -u'' with the 5-point stencil, u = 0 beyond the two end nodes.
inline void neg_laplacian(std::span<const double> u, double h, std::span<double> out)
{
    const std::size_t n = u.size();
    const double c = 1.0 / (12.0 * h * h);
    auto at = [&](std::ptrdiff_t i) {
        return (i < 0 || i >= static_cast<std::ptrdiff_t>(n)) ? 0.0 : u[static_cast<std::size_t>(i)];
    };
    for (std::size_t k = 0; k < n; ++k) {
        const auto i = static_cast<std::ptrdiff_t>(k);
        out[k] = c * (at(i - 2) - 16.0 * at(i - 1) + 30.0 * u[k] - 16.0 * at(i + 1) + at(i + 2));
    }
}

inline std::vector<double> neg_laplacian(std::span<const double> u, double h)
{
    std::vector<double> out(u.size());
    neg_laplacian(u, h, out);
    return out;
}

inline double kinetic_unchecked(std::span<const double> u, double h)
{
    const auto lu = neg_laplacian(u, h);
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * lu[i];
    return s * h;
}

} // namespace detail

/// Trapezoidal quadrature over [-R, R].
template <typename T>
T integrate(const GridFunction<T>& f)
{
    detail::require_finite<T>(f.values(), "grid");
    return detail::trapezoid<T>(f.values(), f.grid().spacing());
}

/// Integral of |f|^2.
template <typename T>
double norm2_squared(const GridFunction<T>& f)
{
    detail::require_finite<T>(f.values(), "grid");
    std::vector<double> sq(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) sq[i] = std::norm(f[i]);
    return detail::trapezoid<double>(sq, f.grid().spacing());
}

inline constexpr double boundary_decay_tolerance = 1e-8;

inline void require_decay(const RealFunction& u, const char* module)
{
    if (std::abs(u[0]) >= boundary_decay_tolerance || std::abs(u[u.size() - 1]) >= boundary_decay_tolerance)
        throw DomainError(module, "half_width", "function has not decayed below 1e-8 at +-R; enlarge the domain");
}

/// Discrete integral of u'^2 with Dirichlet closure outside [-R, R].
inline double kinetic_energy(const RealFunction& u)
{
    detail::require_finite<double>(u.values(), "grid");
    require_decay(u, "grid");
    return detail::kinetic_unchecked(u.values(), u.grid().spacing());
}

template <typename T>
GridFunction<T> normalize(const GridFunction<T>& u)
{
    const double n2 = norm2_squared(u);
    if (!(n2 > 0.0)) throw ValidationError("grid", "u", "cannot normalize the zero function");
    auto out = u;
    out *= T(1.0 / std::sqrt(n2));
    return out;
}

template <typename T>
double sup_distance(const GridFunction<T>& a, const GridFunction<T>& b)
{
    if (!(a.grid() == b.grid())) throw ValidationError("grid", "grid", "functions live on different grids");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Four-point Lagrange stencil for evaluating at an arbitrary x.
struct CubicStencil
{
    std::size_t first = 0;
    std::array<double, 4> weights{};
};

/// Returns weights on nodes first..first+3; x must lie in [-R, R].
inline CubicStencil cubic_stencil(const Grid& grid, double x)
{
    if (!(std::abs(x) <= grid.half_width()))
        throw DomainError("grid", "x", "evaluation point outside [-R, R]");
    const double t = (x + grid.half_width()) / grid.spacing();
    auto j = static_cast<std::ptrdiff_t>(std::floor(t)) - 1;
    j = std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(grid.size()) - 4);
    CubicStencil s;
    s.first = static_cast<std::size_t>(j);
    const double xi = t - static_cast<double>(j); // local coordinate, nodes at 0,1,2,3
    for (int a = 0; a < 4; ++a) {
        double w = 1.0;
        for (int b = 0; b < 4; ++b)
            if (b != a) w *= (xi - b) / static_cast<double>(a - b);
        s.weights[static_cast<std::size_t>(a)] = w;
    }
    return s;
}

/// Cubic interpolation; zero outside [-R, R] (Dirichlet closure).
template <typename T>
T interpolate(const GridFunction<T>& f, double x)
{
    if (std::abs(x) > f.grid().half_width()) return T{};
    const auto s = cubic_stencil(f.grid(), x);
    T v{};
    for (std::size_t a = 0; a < 4; ++a) v += s.weights[a] * f[s.first + a];
    return v;
}

/// CSV with header `x,value` (real) or `x,re,im` (complex), 17 significant digits.
template <typename T>
void write_csv(std::ostream& os, const GridFunction<T>& f)
{
    char buf[128];
    if constexpr (std::is_same_v<T, cplx>)
        os << "x,re,im\n";
    else
        os << "x,value\n";
    for (std::size_t i = 0; i < f.size(); ++i) {
        if constexpr (std::is_same_v<T, cplx>)
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", f.grid().x(i), f[i].real(), f[i].imag());
        else
            std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", f.grid().x(i), f[i]);
        os << buf;
    }
}

template <typename T>
std::string to_csv(const GridFunction<T>& f)
{
    std::ostringstream os;
    write_csv(os, f);
    return os.str();
}

/// Reads a grid function written by write_csv; the grid is reconstructed
/// from the first and last abscissae.
template <typename T>
GridFunction<T> read_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line)) throw ValidationError("grid", "csv", "empty input");
    const bool complex_header = line == "x,re,im";
    if (complex_header != std::is_same_v<T, cplx> || (!complex_header && line != "x,value"))
        throw ValidationError("grid", "csv", "unexpected header '" + line + "'");
    std::vector<double> xs;
    std::vector<T> vals;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> cols;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cols.push_back(std::stod(cell));
        if (cols.size() != (complex_header ? 3u : 2u))
            throw ValidationError("grid", "csv", "wrong column count in row '" + line + "'");
        xs.push_back(cols[0]);
        if constexpr (std::is_same_v<T, cplx>)
            vals.emplace_back(cols[1], cols[2]);
        else
            vals.push_back(cols[1]);
    }
    if (xs.size() < 2) throw ValidationError("grid", "csv", "too few rows");
    Grid grid(xs.back(), xs.size());
    if (std::abs(xs.front() + grid.half_width()) > 1e-12 * grid.half_width())
        throw ValidationError("grid", "csv", "abscissae are not symmetric about 0");
    return GridFunction<T>(grid, std::move(vals));
}

} // namespace polaron
