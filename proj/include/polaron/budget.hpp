#pragma once

// Order bookkeeping for the strong-coupling lower bound
//
//   a^2 e(V) >= E_a(V) >= e(V) a^2 / ((1 - eps)(1 - d)^2) - (1 - d) 2K/P - 1/2 - dE - 2 a K P^2 pi^2 / (d dE),
//
// with eps = 8a/K and d = c1 a^d, K = c2 a^k, P = c3 a^p, dE = c4 a^e. Orders
// are exact rationals; the min-max exponent problem is a five-variable LP
// solved exactly by vertex enumeration.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "polaron/error.hpp"

namespace polaron {

using Rational = boost::multiprecision::cpp_rational;

inline std::string to_string(const Rational& r)
{
    return numerator(r).str() + "/" + denominator(r).str();
}

/// Parses "num/den" or an integer.
inline Rational rational_from_string(const std::string& s)
{
    try {
        const auto slash = s.find('/');
        if (slash == std::string::npos) return Rational(boost::multiprecision::cpp_int(s));
        const boost::multiprecision::cpp_int num(s.substr(0, slash)), den(s.substr(slash + 1));
        if (den == 0) throw ValidationError("budget", "exponent", "zero denominator in '" + s + "'");
        return Rational(num, den);
    } catch (const std::runtime_error& e) {
        if (dynamic_cast<const Error*>(&e)) throw;
        throw ValidationError("budget", "exponent", "not a rational: '" + s + "'");
    }
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/// Exponents of delta = a^d, K = a^k, P = a^p, dE = a^e.
struct ExponentVector
{
    Rational d, k, p, e;

    /// Throws naming the first violated constraint.
    void validate() const
    {
        if (!(d < 0)) throw ValidationError("budget", "d", "need d < 0 so that delta -> 0");
        if (!(k > 1)) throw ValidationError("budget", "k", "need k > 1 so that eps = 8a/K -> 0");
        if (!(p < k)) throw ValidationError("budget", "p", "need p < k so that P < K");
    }

    friend bool operator==(const ExponentVector&, const ExponentVector&) = default;

    static ExponentVector published() { return {Rational(-7, 49), Rational(76, 49), Rational(5, 49), Rational(64, 49)}; }
};

struct BudgetReport
{
    ExponentVector exponents;
    Rational t1_delta; // 2 + d
    Rational t1_eps;   // 3 - k
    Rational t1, t2, t3, t4, t5;
    Rational max_order;
    std::vector<std::string> binding;

    std::array<std::pair<const char*, Rational>, 5> terms() const
    {
        return {{{"T1", t1}, {"T2", t2}, {"T3", t3}, {"T4", t4}, {"T5", t5}}};
    }
};

inline BudgetReport term_orders(const ExponentVector& ev)
{
    ev.validate();
    BudgetReport r;
    r.exponents = ev;
    r.t1_delta = 2 + ev.d;
    r.t1_eps = 3 - ev.k;
    r.t1 = std::max(r.t1_delta, r.t1_eps);
    r.t2 = ev.k - ev.p;
    r.t3 = 0;
    r.t4 = ev.e;
    r.t5 = 1 + ev.k + 2 * ev.p - ev.d - ev.e;
    r.max_order = r.t1;
    for (const auto& [name, v] : r.terms()) r.max_order = std::max(r.max_order, v);
    for (const auto& [name, v] : r.terms())
        if (v == r.max_order) r.binding.emplace_back(name);
    return r;
}

namespace detail {

// Constraint g . (d, k, p, e, M) <= h.
struct LinearConstraint
{
    const char* name;
    std::array<Rational, 5> g;
    Rational h;
};

inline std::vector<LinearConstraint> budget_constraints()
{
    return {
        {"T1a", {1, 0, 0, 0, -1}, -2}, // 2 + d <= M
        {"T1b", {0, -1, 0, 0, -1}, -3}, // 3 - k <= M
        {"T2", {0, 1, -1, 0, -1}, 0},   // k - p <= M
        {"T4", {0, 0, 0, 1, -1}, 0},    // e <= M
        {"T5", {-1, 1, 2, -1, -1}, -1}, // 1 + k + 2p - d - e <= M
        {"d<=0", {1, 0, 0, 0, 0}, 0},
        {"k>=1", {0, -1, 0, 0, 0}, -1},
        {"p<=k", {0, -1, 1, 0, 0}, 0},
    };
}

// Solves A x = b exactly; nullopt if A is singular. A is n x m with m unknowns,
// n >= m; extra rows must be consistent.
inline std::optional<std::vector<Rational>> solve_exact(std::vector<std::vector<Rational>> a, std::vector<Rational> b,
                                                        std::size_t unknowns)
{
    const std::size_t rows = a.size();
    std::size_t r = 0;
    std::vector<std::size_t> pivot_col;
    for (std::size_t c = 0; c < unknowns && r < rows; ++c) {
        std::size_t piv = r;
        while (piv < rows && a[piv][c] == 0) ++piv;
        if (piv == rows) return std::nullopt;
        std::swap(a[piv], a[r]);
        std::swap(b[piv], b[r]);
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == r || a[i][c] == 0) continue;
            const Rational f = a[i][c] / a[r][c];
            for (std::size_t j = c; j < unknowns; ++j) a[i][j] -= f * a[r][j];
            b[i] -= f * b[r];
        }
        pivot_col.push_back(c);
        ++r;
    }
    if (r < unknowns) return std::nullopt;
    for (std::size_t i = r; i < rows; ++i)
        if (b[i] != 0) return std::nullopt;
    std::vector<Rational> x(unknowns);
    for (std::size_t i = 0; i < r; ++i) x[pivot_col[i]] = b[i] / a[i][pivot_col[i]];
    return x;
}

} // namespace detail

struct DualCertificate
{
    std::vector<std::string> constraints; // active constraints carrying weight
    std::vector<Rational> weights;
    Rational bound; // the certified lower bound on the max order
};

struct BudgetOptimum
{
    ExponentVector exponents;
    Rational order;
    DualCertificate certificate;
};

/// Checks y >= 0, sum_i y_i g_i = -(0,0,0,0,1) and bound = -sum_i y_i h_i.
inline bool verify_certificate(const DualCertificate& c)
{
    const auto all = detail::budget_constraints();
    if (c.constraints.size() != c.weights.size()) return false;
    std::array<Rational, 5> combo{};
    Rational bound = 0;
    for (std::size_t i = 0; i < c.constraints.size(); ++i) {
        const auto it = std::find_if(all.begin(), all.end(), [&](const auto& lc) { return c.constraints[i] == lc.name; });
        if (it == all.end() || c.weights[i] < 0) return false;
        for (std::size_t j = 0; j < 5; ++j) combo[j] += c.weights[i] * it->g[j];
        bound -= c.weights[i] * it->h;
    }
    for (std::size_t j = 0; j < 4; ++j)
        if (combo[j] != 0) return false;
    return combo[4] == -1 && bound == c.bound;
}

/// min over (d, k, p, e) of the max term order with d <= 0, k >= 1, p <= k.
/// The strict constraints are rechecked at the optimum by term_orders().
inline BudgetOptimum optimize()
{
    const auto cons = detail::budget_constraints();
    const std::size_t nc = cons.size();
    std::optional<std::vector<Rational>> best;

    // Every 5-subset of constraints taken as active.
    std::vector<bool> pick(nc, false);
    std::fill(pick.begin(), pick.begin() + 5, true);
    do {
        std::vector<std::vector<Rational>> a;
        std::vector<Rational> b;
        for (std::size_t i = 0; i < nc; ++i)
            if (pick[i]) {
                a.emplace_back(cons[i].g.begin(), cons[i].g.end());
                b.push_back(cons[i].h);
            }
        const auto x = detail::solve_exact(a, b, 5);
        if (!x) continue;
        bool feasible = true;
        for (const auto& c : cons) {
            Rational lhs = 0;
            for (std::size_t j = 0; j < 5; ++j) lhs += c.g[j] * (*x)[j];
            if (lhs > c.h) feasible = false;
        }
        if (feasible && (!best || (*x)[4] < (*best)[4])) best = x;
    } while (std::prev_permutation(pick.begin(), pick.end()));
    if (!best) throw Error("budget", "optimize", "no feasible vertex");

    const auto& x = *best;
    BudgetOptimum out{{x[0], x[1], x[2], x[3]}, x[4], {}};

    // Dual weights on the active set: sum_i y_i g_i = -(0,0,0,0,1).
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < nc; ++i) {
        Rational lhs = 0;
        for (std::size_t j = 0; j < 5; ++j) lhs += cons[i].g[j] * x[j];
        if (lhs == cons[i].h) active.push_back(i);
    }
    std::vector<std::vector<Rational>> at(5, std::vector<Rational>(active.size()));
    for (std::size_t j = 0; j < 5; ++j)
        for (std::size_t a = 0; a < active.size(); ++a) at[j][a] = cons[active[a]].g[j];
    std::vector<Rational> rhs{0, 0, 0, 0, -1};
    const auto y = detail::solve_exact(at, rhs, active.size());
    if (!y) throw Error("budget", "optimize", "degenerate optimum; dual weights not unique");
    for (std::size_t a = 0; a < active.size(); ++a) {
        if ((*y)[a] == 0) continue;
        out.certificate.constraints.emplace_back(cons[active[a]].name);
        out.certificate.weights.push_back((*y)[a]);
        out.certificate.bound -= (*y)[a] * cons[active[a]].h;
    }
    if (!verify_certificate(out.certificate) || out.certificate.bound != out.order)
        throw Error("budget", "optimize", "dual certificate failed verification");
    return out;
}

struct SandwichConstants
{
    double c1 = 1.0, c2 = 1.0, c3 = 1.0, c4 = 1.0;
};

struct Sandwich
{
    double upper = 0.0;
    double lower = 0.0;
    double delta = 0.0;
    double epsilon = 0.0;
    double threshold = 0.0; // alpha above which delta, eps < 1
    bool ordered = false;
};

/// Smallest alpha beyond which delta = c1 a^d < 1 and eps = 8a/K < 1.
inline double sandwich_threshold(const ExponentVector& ev, const SandwichConstants& c)
{
    const double d = to_double(ev.d), k = to_double(ev.k);
    const double a_delta = std::pow(c.c1, -1.0 / d);
    const double a_eps = std::pow(8.0 / c.c2, 1.0 / (k - 1.0));
    return std::max({1.0, a_delta, a_eps});
}

inline Sandwich numeric_sandwich(double alpha, const ExponentVector& ev, const SandwichConstants& c, double e_v)
{
    ev.validate();
    if (!(alpha > 1.0) || !std::isfinite(alpha)) throw ValidationError("budget", "alpha", "need alpha > 1");
    for (double ci : {c.c1, c.c2, c.c3, c.c4})
        if (!(ci > 0.0) || !std::isfinite(ci)) throw ValidationError("budget", "constants", "must be positive");
    if (!std::isfinite(e_v)) throw ValidationError("budget", "e_V", "must be finite");

    const double delta = c.c1 * std::pow(alpha, to_double(ev.d));
    const double K = c.c2 * std::pow(alpha, to_double(ev.k));
    const double P = c.c3 * std::pow(alpha, to_double(ev.p));
    const double dE = c.c4 * std::pow(alpha, to_double(ev.e));
    const double eps = 8.0 * alpha / K;
    const double denom = (1.0 - eps) * (1.0 - delta) * (1.0 - delta);
    if (!(denom > 0.0)) throw DomainError("budget", "alpha", "alpha too small: (1 - eps)(1 - delta)^2 <= 0");

    Sandwich s;
    s.delta = delta;
    s.epsilon = eps;
    s.threshold = sandwich_threshold(ev, c);
    s.upper = alpha * alpha * e_v;
    s.lower = e_v * alpha * alpha / denom - (1.0 - delta) * 2.0 * K / P - 0.5 - dE -
              2.0 * alpha * K * P * P * std::numbers::pi * std::numbers::pi / (delta * dE);
    s.ordered = s.upper >= s.lower;
    if (alpha > s.threshold && e_v <= 0.0 && !s.ordered)
        throw Error("budget", "alpha", "upper bound below lower bound above the threshold");
    return s;
}

/// Coefficient of a^{max order} in upper - lower as a -> infinity.
inline double asymptotic_constant(const ExponentVector& ev, const SandwichConstants& c, double e_v)
{
    const auto r = term_orders(ev);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double s = 0.0;
    if (r.t1_delta == r.max_order) s += 2.0 * c.c1 * std::abs(e_v);
    if (r.t1_eps == r.max_order) s += 8.0 * std::abs(e_v) / c.c2;
    if (r.t2 == r.max_order) s += 2.0 * c.c2 / c.c3;
    if (r.t3 == r.max_order) s += 0.5;
    if (r.t4 == r.max_order) s += c.c4;
    if (r.t5 == r.max_order) s += 2.0 * pi2 * c.c2 * c.c3 * c.c3 / (c.c1 * c.c4);
    return s;
}

} // namespace polaron
