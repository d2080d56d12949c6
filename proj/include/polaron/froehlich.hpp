#pragma once

// Truncated one-dimensional Froehlich Hamiltonian
//
//   H = -d^2/dx^2 + sum_k a_k^+ a_k - g sum_k (a_k e^{ikx} + a_k^+ e^{-ikx}) - alpha^2 V(alpha x)
//
// on a periodic electron grid over [-L, L) tensored with the bosonic Fock
// space of the modes k_j = j pi / L, 0 < |j| <= M, cut at total occupation N.
// States are stored as psi[s * n_e + i], s the occupation index, i the node.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polaron/error.hpp"
#include "polaron/grid.hpp"
#include "polaron/measure.hpp"
#include "polaron/pekar.hpp"
#include "polaron/potential.hpp"

namespace polaron {

enum class CouplingConvention {
    riemann, // g = sqrt(alpha dk / (2 pi)), dk = pi / L
    literal  // g = sqrt(alpha / L)
};

inline std::string to_string(CouplingConvention c)
{
    return c == CouplingConvention::riemann ? "riemann" : "literal";
}

inline CouplingConvention coupling_from_string(const std::string& s)
{
    if (s == "riemann") return CouplingConvention::riemann;
    if (s == "literal") return CouplingConvention::literal;
    throw ValidationError("froehlich", "coupling", "unknown coupling convention '" + s + "'");
}

struct FockConfig
{
    double L = 8.0;
    int modes = 3;      // M
    int phonon_cap = 3; // N
    std::size_t electron_points = 33;
    std::size_t dimension_cap = 500000;
    CouplingConvention coupling = CouplingConvention::riemann;

    double spacing() const { return 2.0 * L / static_cast<double>(electron_points); }
    double x(std::size_t i) const { return -L + static_cast<double>(i) * spacing(); }
    std::size_t mirror(std::size_t i) const { return (electron_points - i) % electron_points; }
    std::size_t mode_count() const { return 2 * static_cast<std::size_t>(modes); }

    /// Mode index m in [0, 2M) maps to j = -M..-1, 1..M.
    int mode_number(std::size_t m) const
    {
        const int mi = static_cast<int>(m);
        return mi < modes ? mi - modes : mi - modes + 1;
    }
    double wavenumber(std::size_t m) const { return mode_number(m) * std::numbers::pi / L; }

    /// C(2M + N, N), or max() on overflow.
    std::size_t occupation_count() const
    {
        const auto top = static_cast<unsigned long long>(2 * modes + phonon_cap);
        unsigned long long c = 1;
        for (unsigned long long r = 1; r <= static_cast<unsigned long long>(phonon_cap); ++r) {
            const unsigned long long num = top - static_cast<unsigned long long>(phonon_cap) + r;
            if (c > std::numeric_limits<unsigned long long>::max() / num) return std::numeric_limits<std::size_t>::max();
            c = c * num / r;
        }
        return static_cast<std::size_t>(c);
    }

    std::size_t dimension() const
    {
        const auto s = occupation_count();
        if (s > std::numeric_limits<std::size_t>::max() / electron_points) return std::numeric_limits<std::size_t>::max();
        return s * electron_points;
    }

    double coupling_constant(double alpha) const
    {
        if (coupling == CouplingConvention::literal) return std::sqrt(alpha / L);
        return std::sqrt(alpha * (std::numbers::pi / L) / (2.0 * std::numbers::pi));
    }

    void validate() const
    {
        if (!(L > 0.0) || !std::isfinite(L)) throw ValidationError("froehlich", "L", "must be positive and finite");
        if (modes < 0) throw ValidationError("froehlich", "modes", "must be nonnegative");
        if (phonon_cap < 0) throw ValidationError("froehlich", "phonon_cap", "must be nonnegative");
        if (electron_points < 3) throw ValidationError("froehlich", "electron_points", "at least 3 nodes required");
        if (dimension() > dimension_cap)
            throw ValidationError("froehlich", "dimension_cap",
                                  "Hilbert dimension " + std::to_string(dimension()) + " exceeds the cap");
    }
};

/// Occupation multi-indices with total <= N, ordered by total then lexicographically.
class OccupationBasis
{
public:
    explicit OccupationBasis(const FockConfig& cfg) : m_modes(cfg.mode_count())
    {
        std::vector<int> cur(m_modes, 0);
        for (int total = 0; total <= cfg.phonon_cap; ++total) enumerate(cur, 0, total);
        std::map<std::vector<int>, std::size_t> index;
        for (std::size_t s = 0; s < size(); ++s) index.emplace(state(s), s);

        m_raise.assign(size() * m_modes, -1);
        m_mirror.resize(size());
        for (std::size_t s = 0; s < size(); ++s) {
            auto occ = state(s);
            for (std::size_t m = 0; m < m_modes; ++m) {
                ++occ[m];
                if (const auto it = index.find(occ); it != index.end())
                    m_raise[s * m_modes + m] = static_cast<std::int64_t>(it->second);
                --occ[m];
            }
            std::reverse(occ.begin(), occ.end());
            m_mirror[s] = index.at(occ);
        }
    }

    std::size_t size() const noexcept { return m_modes == 0 ? 1 : m_occ.size() / m_modes; }
    std::size_t modes() const noexcept { return m_modes; }
    int occupation(std::size_t s, std::size_t m) const { return m_occ[s * m_modes + m]; }
    std::vector<int> state(std::size_t s) const
    {
        return {m_occ.begin() + static_cast<std::ptrdiff_t>(s * m_modes),
                m_occ.begin() + static_cast<std::ptrdiff_t>((s + 1) * m_modes)};
    }
    int total(std::size_t s) const
    {
        int t = 0;
        for (std::size_t m = 0; m < m_modes; ++m) t += occupation(s, m);
        return t;
    }
    /// Index of s + e_m, or -1 past the cap.
    std::int64_t raise(std::size_t s, std::size_t m) const { return m_raise[s * m_modes + m]; }
    /// Index of the state with modes j and -j exchanged.
    std::size_t mirror(std::size_t s) const { return m_mirror[s]; }

private:
    void enumerate(std::vector<int>& cur, std::size_t m, int remaining)
    {
        if (m_modes == 0) return;
        if (m + 1 == m_modes) {
            cur[m] = remaining;
            m_occ.insert(m_occ.end(), cur.begin(), cur.end());
            cur[m] = 0;
            return;
        }
        for (int k = remaining; k >= 0; --k) {
            cur[m] = k;
            enumerate(cur, m + 1, remaining - k);
        }
        cur[m] = 0;
    }

    std::size_t m_modes;
    std::vector<int> m_occ;
    std::vector<std::int64_t> m_raise;
    std::vector<std::size_t> m_mirror;
};

class FroehlichHamiltonian
{
public:
    /// `electron_potential` is the full diagonal electron term at the nodes.
    FroehlichHamiltonian(double alpha, const FockConfig& cfg, std::vector<double> electron_potential)
        : m_alpha(alpha), m_cfg(cfg), m_basis(validated(cfg)), m_potential(std::move(electron_potential))
    {
        if (!(alpha > 0.0) || !std::isfinite(alpha))
            throw ValidationError("froehlich", "alpha", "must be positive and finite");
        if (m_potential.size() != cfg.electron_points)
            throw ValidationError("froehlich", "potential", "length does not match electron_points");
        m_g = cfg.coupling_constant(alpha);
        const std::size_t n = cfg.electron_points, nm = cfg.mode_count();
        m_phase.resize(n * nm);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t m = 0; m < nm; ++m) m_phase[i * nm + m] = std::polar(1.0, cfg.wavenumber(m) * cfg.x(i));
    }

    double alpha() const noexcept { return m_alpha; }
    double coupling() const noexcept { return m_g; }
    const FockConfig& config() const noexcept { return m_cfg; }
    const OccupationBasis& basis() const noexcept { return m_basis; }
    const std::vector<double>& electron_potential() const noexcept { return m_potential; }
    std::size_t dimension() const noexcept { return m_basis.size() * m_cfg.electron_points; }

    void apply(std::span<const cplx> in, std::span<cplx> out) const
    {
        if (in.size() != dimension() || out.size() != dimension())
            throw ValidationError("froehlich", "vector", "length does not match the Hilbert dimension");
        const std::size_t n = m_cfg.electron_points, nm = m_basis.modes();
        const double c = 1.0 / (m_cfg.spacing() * m_cfg.spacing());
        for (std::size_t s = 0; s < m_basis.size(); ++s) {
            const double number = m_basis.total(s);
            const cplx* p = in.data() + s * n;
            cplx* q = out.data() + s * n;
            for (std::size_t i = 0; i < n; ++i) {
                const cplx left = p[(i + n - 1) % n], right = p[(i + 1) % n];
                q[i] = c * (2.0 * p[i] - left - right) + (number + m_potential[i]) * p[i];
            }
        }
        for (std::size_t s = 0; s < m_basis.size(); ++s) {
            for (std::size_t m = 0; m < nm; ++m) {
                const auto t = m_basis.raise(s, m);
                if (t < 0) continue;
                const double amp = -m_g * std::sqrt(static_cast<double>(m_basis.occupation(s, m) + 1));
                const auto tt = static_cast<std::size_t>(t);
                for (std::size_t i = 0; i < n; ++i) {
                    const cplx ph = m_phase[i * nm + m];
                    out[s * n + i] += amp * ph * in[tt * n + i];             // a_k e^{ikx}
                    out[tt * n + i] += amp * std::conj(ph) * in[s * n + i]; // a_k^+ e^{-ikx}
                }
            }
        }
    }

    std::vector<cplx> apply(std::span<const cplx> in) const
    {
        std::vector<cplx> out(dimension());
        apply(in, out);
        return out;
    }

    /// x -> -x together with k -> -k.
    std::vector<cplx> parity(std::span<const cplx> in) const
    {
        const std::size_t n = m_cfg.electron_points;
        std::vector<cplx> out(dimension());
        for (std::size_t s = 0; s < m_basis.size(); ++s)
            for (std::size_t i = 0; i < n; ++i) out[m_basis.mirror(s) * n + m_cfg.mirror(i)] = in[s * n + i];
        return out;
    }

private:
    static const FockConfig& validated(const FockConfig& cfg)
    {
        cfg.validate();
        return cfg;
    }

    double m_alpha;
    FockConfig m_cfg;
    OccupationBasis m_basis;
    std::vector<double> m_potential;
    double m_g = 0.0;
    std::vector<cplx> m_phase;
};

/// -alpha^2 V(alpha x) at the electron nodes.
inline std::vector<double> electron_potential(double alpha, const Potential& v, const FockConfig& cfg)
{
    std::vector<double> out(cfg.electron_points);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = -alpha * alpha * v(alpha * cfg.x(i));
    return out;
}

inline FroehlichHamiltonian build_hamiltonian(double alpha, const Potential& v, const FockConfig& cfg)
{
    return {alpha, cfg, electron_potential(alpha, v, cfg)};
}

/// H(V + dW) = H(V) + alpha^2 d W(alpha x); W must have a density.
inline FroehlichHamiltonian build_hamiltonian(double alpha, const Potential& v, const TestMeasure& w, double delta,
                                              const FockConfig& cfg)
{
    if (!w.has_density()) throw ValidationError("froehlich", "kind", "the perturbing measure needs a density");
    auto pot = electron_potential(alpha, v, cfg);
    for (std::size_t i = 0; i < pot.size(); ++i) pot[i] += alpha * alpha * delta * w.density(alpha * cfg.x(i));
    return {alpha, cfg, std::move(pot)};
}

namespace detail {

inline cplx inner(std::span<const cplx> a, std::span<const cplx> b)
{
    cplx s{};
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

inline double norm(std::span<const cplx> a) { return std::sqrt(inner(a, a).real()); }

// Uniform in [-1, 1) from the top 53 bits, independent of the standard
// library's distribution implementations.
inline double unit_interval(std::mt19937_64& rng)
{
    return 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
}

inline std::vector<cplx> random_vector(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<cplx> v(n);
    for (auto& z : v) {
        const double re = unit_interval(rng);
        z = {re, unit_interval(rng)};
    }
    return v;
}

} // namespace detail

struct LanczosOptions
{
    double tol = 1e-10; // on ||H psi - E psi||
    std::size_t max_krylov = 300;
    std::size_t max_restarts = 30;
    std::uint64_t seed = 20240601;
};

struct GroundState
{
    double alpha = 0.0;
    double energy = 0.0;
    std::vector<cplx> psi;
    double residual = 0.0;
    double ritz_gap = std::numeric_limits<double>::infinity();
    std::size_t matvecs = 0;
};

class LanczosConvergenceError : public ConvergenceError
{
public:
    LanczosConvergenceError(double best_energy, double best_residual)
        : ConvergenceError("froehlich", "max_restarts",
                           "Lanczos did not converge; best Ritz value " + std::to_string(best_energy), best_residual),
          m_energy(best_energy)
    {}
    double best_energy() const noexcept { return m_energy; }

private:
    double m_energy;
};

/// Lowest eigenpair by Lanczos with full (twice-iterated Gram-Schmidt)
/// reorthogonalization, restarted from the Ritz vector when the Krylov
/// budget runs out.
inline GroundState ground_state(const FroehlichHamiltonian& h, const LanczosOptions& opts = {})
{
    const std::size_t dim = h.dimension();
    // Keep the basis below ~400 MB.
    const std::size_t mem_cap = std::max<std::size_t>(20, 25'000'000 / dim);
    const std::size_t kmax = std::min({dim, opts.max_krylov, mem_cap});

    GroundState out;
    out.alpha = h.alpha();
    std::vector<cplx> start = detail::random_vector(dim, opts.seed);
    std::vector<cplx> w(dim), y(dim);
    double best_res = std::numeric_limits<double>::infinity(), best_e = 0.0;

    for (std::size_t restart = 0; restart <= opts.max_restarts; ++restart) {
        std::vector<std::vector<cplx>> basis;
        std::vector<double> a, b;
        const double n0 = detail::norm(start);
        for (auto& z : start) z /= n0;
        basis.push_back(start);

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
        bool have_ritz = false;
        for (std::size_t j = 0; j < kmax; ++j) {
            h.apply(basis[j], w);
            ++out.matvecs;
            a.push_back(detail::inner(basis[j], w).real());
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& q : basis) {
                    const cplx c = detail::inner(q, w);
                    for (std::size_t i = 0; i < dim; ++i) w[i] -= c * q[i];
                }
            const double beta = detail::norm(w);
            const std::size_t k = a.size();
            const bool last = k == kmax || beta <= 1e-13 * std::max(1.0, std::abs(a.back()));
            if (last || k % 10 == 0) {
                Eigen::VectorXd d = Eigen::Map<Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(k));
                Eigen::VectorXd e = k > 1 ? Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(k - 1)))
                                          : Eigen::VectorXd();
                tri.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
                have_ritz = true;
                const double estimate = beta * std::abs(tri.eigenvectors()(static_cast<Eigen::Index>(k - 1), 0));
                if (restart == 0 && k > 1) out.ritz_gap = tri.eigenvalues()(1) - tri.eigenvalues()(0);
                if (last || estimate <= 0.1 * opts.tol) break;
            }
            b.push_back(beta);
            basis.emplace_back(dim);
            for (std::size_t i = 0; i < dim; ++i) basis.back()[i] = w[i] / beta;
        }
        if (!have_ritz) continue;

        const std::size_t k = a.size();
        std::fill(y.begin(), y.end(), cplx{});
        for (std::size_t j = 0; j < k; ++j) {
            const double c = tri.eigenvectors()(static_cast<Eigen::Index>(j), 0);
            for (std::size_t i = 0; i < dim; ++i) y[i] += c * basis[j][i];
        }
        const double ny = detail::norm(y);
        for (auto& z : y) z /= ny;
        h.apply(y, w);
        ++out.matvecs;
        const double theta = detail::inner(y, w).real();
        for (std::size_t i = 0; i < dim; ++i) w[i] -= theta * y[i];
        const double res = detail::norm(w);
        if (res < best_res) {
            best_res = res;
            best_e = theta;
        }
        if (res <= opts.tol) {
            out.energy = theta;
            out.psi = y;
            out.residual = res;
            return out;
        }
        start = y;
    }
    throw LanczosConvergenceError(best_e, best_res);
}

/// Rayleigh quotient <v, H v> / <v, v>.
inline double rayleigh_quotient(const FroehlichHamiltonian& h, std::span<const cplx> v)
{
    const auto hv = h.apply(v);
    return detail::inner(v, hv).real() / detail::inner(v, v).real();
}

namespace detail {

// Coefficients c_m, |m| <= n/2, of the trigonometric interpolant of samples
// at x_i = -L + 2L i / n; the Nyquist pair is halved for even n.
inline std::vector<cplx> trig_coefficients(std::span<const double> f)
{
    const std::size_t n = f.size();
    const int half = static_cast<int>(n / 2);
    std::vector<cplx> coeff;
    for (int m = -half; m <= half; ++m) {
        cplx c{};
        for (std::size_t i = 0; i < n; ++i)
            c += f[i] * std::polar(1.0, -2.0 * std::numbers::pi * m * static_cast<double>(i) / static_cast<double>(n));
        double weight = 1.0 / static_cast<double>(n);
        if (n % 2 == 0 && std::abs(m) == half) weight *= 0.5;
        coeff.push_back(weight * c);
    }
    return coeff;
}

inline double trig_eval(std::span<const cplx> coeff, double L, double x)
{
    const int half = static_cast<int>(coeff.size() / 2);
    const double t = std::numbers::pi * (x + L) / L;
    double s = 0.0;
    for (int m = -half; m <= half; ++m) s += (coeff[static_cast<std::size_t>(m + half)] * std::polar(1.0, m * t)).real();
    return s;
}

} // namespace detail

/// rho(x_i) = sum_s |psi(i, s)|^2 / h_e on the periodic electron grid.
struct DensityProfile
{
    FockConfig config;
    std::vector<double> x;
    std::vector<double> rho;

    double mass() const
    {
        double s = 0.0;
        for (double r : rho) s += r;
        return s * config.spacing();
    }

    double evenness_defect() const
    {
        double m = 0.0;
        for (std::size_t i = 0; i < rho.size(); ++i) m = std::max(m, std::abs(rho[i] - rho[config.mirror(i)]));
        return m;
    }

    /// Trigonometric interpolant through the nodal values, 2L-periodic.
    double operator()(double xv) const { return detail::trig_eval(detail::trig_coefficients(rho), config.L, xv); }
};

inline DensityProfile electron_density(const GroundState& gs, const FockConfig& cfg)
{
    const std::size_t n = cfg.electron_points;
    if (gs.psi.size() % n != 0) throw ValidationError("froehlich", "psi", "state does not match the electron grid");
    DensityProfile d{cfg, std::vector<double>(n), std::vector<double>(n, 0.0)};
    for (std::size_t i = 0; i < n; ++i) d.x[i] = cfg.x(i);
    for (std::size_t s = 0; s < gs.psi.size() / n; ++s)
        for (std::size_t i = 0; i < n; ++i) d.rho[i] += std::norm(gs.psi[s * n + i]);
    for (auto& r : d.rho) r /= cfg.spacing();
    return d;
}

/// x -> (1/alpha) rho(x / alpha) on `grid`, zero outside [-alpha L, alpha L).
inline RealFunction rescaled_density(const DensityProfile& rho, double alpha, const Grid& grid = Grid())
{
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("froehlich", "alpha", "must be positive");
    if (alpha * rho.config.L > grid.half_width())
        throw DomainError("froehlich", "alpha", "rescaled crystal [-alpha L, alpha L) exceeds the Pekar grid");
    const auto coeff = detail::trig_coefficients(rho.rho);
    const double L = rho.config.L;
    return RealFunction::sample(grid, [&](double x) {
        const double xs = x / alpha;
        if (xs < -L || xs >= L) return 0.0;
        return detail::trig_eval(coeff, L, xs) / alpha;
    });
}

/// sqrt(alpha) u(alpha x) at the electron nodes, normalized so that
/// sum_i h_e u_i^2 = 1.
inline std::vector<double> electron_orbital(const RealFunction& u, double alpha, const FockConfig& cfg)
{
    std::vector<double> out(cfg.electron_points);
    double n2 = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::sqrt(alpha) * interpolate(u, alpha * cfg.x(i));
        n2 += out[i] * out[i] * cfg.spacing();
    }
    if (!(n2 > 0.0)) throw ValidationError("froehlich", "u", "orbital vanishes on the electron grid");
    for (auto& v : out) v /= std::sqrt(n2);
    return out;
}

struct AnsatzResult
{
    double energy = 0.0;
    double retained_weight = 1.0; // coherent-state weight inside the cap
    bool truncation_warning = false;
    std::vector<cplx> amplitudes; // z_j
};

inline constexpr double ansatz_weight_floor = 0.9;

/// Rayleigh quotient of |u> (x) |z> with z_j = g sum_i h_e u_i^2 e^{-i k_j x_i},
/// the coherent state truncated to the basis and renormalized.
inline AnsatzResult product_ansatz_energy(const FroehlichHamiltonian& h, std::span<const double> u)
{
    const auto& cfg = h.config();
    const auto& basis = h.basis();
    const std::size_t n = cfg.electron_points, nm = basis.modes();
    if (u.size() != n) throw ValidationError("froehlich", "u", "length does not match electron_points");
    double n2 = 0.0;
    for (double v : u) n2 += v * v * cfg.spacing();
    if (std::abs(n2 - 1.0) > normalization_tolerance)
        throw ValidationError("froehlich", "u", "orbital is not normalized on the electron grid");

    AnsatzResult r;
    double z2 = 0.0;
    for (std::size_t m = 0; m < nm; ++m) {
        cplx z{};
        for (std::size_t i = 0; i < n; ++i) z += cfg.spacing() * u[i] * u[i] * std::polar(1.0, -cfg.wavenumber(m) * cfg.x(i));
        z *= h.coupling();
        r.amplitudes.push_back(z);
        z2 += std::norm(z);
    }
    std::vector<cplx> c(basis.size());
    double kept = 0.0;
    for (std::size_t s = 0; s < basis.size(); ++s) {
        cplx a = 1.0;
        for (std::size_t m = 0; m < nm; ++m) {
            const int k = basis.occupation(s, m);
            a *= std::pow(r.amplitudes[m], k) / std::sqrt(std::tgamma(k + 1.0));
        }
        c[s] = a;
        kept += std::norm(a);
    }
    r.retained_weight = kept * std::exp(-z2);
    r.truncation_warning = r.retained_weight < ansatz_weight_floor;

    std::vector<cplx> psi(h.dimension());
    const double sh = std::sqrt(cfg.spacing());
    for (std::size_t s = 0; s < basis.size(); ++s)
        for (std::size_t i = 0; i < n; ++i) psi[s * n + i] = c[s] * u[i] * sh;
    r.energy = rayleigh_quotient(h, psi);
    return r;
}

struct HfCheck
{
    double lhs = 0.0; // (E(V + dW) - E(V - dW)) / (2d)
    double rhs = 0.0; // alpha^2 <psi, W(alpha x) psi>
    double ritz_gap = 0.0;
};

inline constexpr double min_ritz_gap = 1e-6;

inline HfCheck hf_check(double alpha, const Potential& v, const TestMeasure& w, double delta, const FockConfig& cfg,
                        const LanczosOptions& opts = {})
{
    if (!(delta > 0.0) || !std::isfinite(delta)) throw ValidationError("froehlich", "delta", "must be positive");
    if (!w.has_density()) throw ValidationError("froehlich", "kind", "the perturbing measure needs a density");
    const auto gs = ground_state(build_hamiltonian(alpha, v, cfg), opts);
    if (!(gs.ritz_gap > min_ritz_gap))
        throw ValidationError("froehlich", "potential", "ground state is (nearly) degenerate; Ritz gap below 1e-6");
    const auto plus = ground_state(build_hamiltonian(alpha, v, w, delta, cfg), opts);
    const auto minus = ground_state(build_hamiltonian(alpha, v, w, -delta, cfg), opts);

    const auto rho = electron_density(gs, cfg);
    double expect = 0.0;
    for (std::size_t i = 0; i < rho.rho.size(); ++i) expect += rho.rho[i] * cfg.spacing() * w.density(alpha * cfg.x(i));
    return {(plus.energy - minus.energy) / (2.0 * delta), alpha * alpha * expect, gs.ritz_gap};
}

struct ScanRow
{
    double alpha = 0.0;
    bool ok = false;
    bool validation_failure = false;
    std::string error;
    double energy = std::numeric_limits<double>::quiet_NaN();
    double energy_over_alpha2 = std::numeric_limits<double>::quiet_NaN();
    double pairing = std::numeric_limits<double>::quiet_NaN();
    double ansatz_energy = std::numeric_limits<double>::quiet_NaN();
    bool ansatz_warning = false;
};

struct ScanReport
{
    double pekar_energy = 0.0;  // e(V)
    double pekar_pairing = 0.0; // \int W u_V^2
    std::vector<ScanRow> rows;

    std::string csv() const
    {
        std::string out = "alpha,E,E_over_alpha2,pairing,pekar_e,pekar_pairing,ansatz_energy\n";
        char buf[512];
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.alpha, r.energy,
                          r.energy_over_alpha2, r.pairing, pekar_energy, pekar_pairing, r.ansatz_energy);
            out += buf;
        }
        return out;
    }
};

/// Weak-convergence trend table: one ground state per alpha, with one
/// FockConfig per alpha or a single one for all. Failing rows are recorded
/// and the scan continues.
inline ScanReport convergence_scan(const std::vector<double>& alphas, const Potential& v, const TestMeasure& w,
                                   const std::vector<FockConfig>& schedule, const Grid& grid = Grid(),
                                   const LanczosOptions& opts = {})
{
    if (schedule.size() != 1 && schedule.size() != alphas.size())
        throw ValidationError("froehlich", "schedule", "need one FockConfig or one per alpha");
    w.validate_on(grid);
    const auto base = minimize(v, grid);
    ScanReport rep;
    rep.pekar_energy = base.energy;
    rep.pekar_pairing = w.expectation(base.minimizer);
    for (std::size_t k = 0; k < alphas.size(); ++k) {
        ScanRow row;
        row.alpha = alphas[k];
        const auto& cfg = schedule.size() == 1 ? schedule[0] : schedule[k];
        try {
            const auto h = build_hamiltonian(row.alpha, v, cfg);
            const auto gs = ground_state(h, opts);
            row.energy = gs.energy;
            row.energy_over_alpha2 = gs.energy / (row.alpha * row.alpha);
            const auto rescaled = rescaled_density(electron_density(gs, cfg), row.alpha, grid);
            row.pairing = w.kind() == MeasureKind::dirac ? interpolate(rescaled, w.center()) : w.pair(rescaled);
            const auto ansatz = product_ansatz_energy(h, electron_orbital(base.minimizer, row.alpha, cfg));
            row.ansatz_energy = ansatz.energy;
            row.ansatz_warning = ansatz.truncation_warning;
            row.ok = true;
        } catch (const ValidationError& e) {
            row.error = e.what();
            row.validation_failure = true;
        } catch (const Error& e) {
            row.error = e.what();
        }
        rep.rows.push_back(row);
    }
    return rep;
}

} // namespace polaron
