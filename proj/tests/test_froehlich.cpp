#include <catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "polaron/froehlich.hpp"

using namespace polaron;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const Potential V = Potential::sech2(2, 1);

FockConfig config(int modes, int cap, std::size_t points = 33)
{
    FockConfig c;
    c.modes = modes;
    c.phonon_cap = cap;
    c.electron_points = points;
    return c;
}

Eigen::MatrixXcd dense(const FroehlichHamiltonian& h)
{
    const auto n = static_cast<Eigen::Index>(h.dimension());
    Eigen::MatrixXcd a(n, n);
    std::vector<cplx> e(h.dimension());
    for (Eigen::Index j = 0; j < n; ++j) {
        std::fill(e.begin(), e.end(), cplx{});
        e[static_cast<std::size_t>(j)] = 1.0;
        const auto col = h.apply(e);
        for (Eigen::Index i = 0; i < n; ++i) a(i, j) = col[static_cast<std::size_t>(i)];
    }
    return a;
}

// Periodic three-point electron operator with -alpha^2 V(alpha x), built
// without the Fock machinery.
Eigen::MatrixXd electron_only(double alpha, const FockConfig& cfg)
{
    const auto n = static_cast<Eigen::Index>(cfg.electron_points);
    const double c = 1.0 / (cfg.spacing() * cfg.spacing());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = -cfg.L + 2.0 * cfg.L * static_cast<double>(i) / static_cast<double>(n);
        a(i, i) = 2.0 * c - alpha * alpha * V(alpha * x);
        a(i, (i + 1) % n) -= c;
        a(i, (i + n - 1) % n) -= c;
    }
    return a;
}

std::vector<cplx> random_state(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> pick;
    std::vector<cplx> v(n);
    for (auto& z : v) z = {pick(rng), pick(rng)};
    return v;
}

} // namespace

TEST_CASE("basis dimension matches a brute-force count", "[froehlich]")
{
    for (int m : {0, 1, 2, 3}) {
        for (int cap : {0, 1, 2, 3}) {
            const auto cfg = config(m, cap, 9);
            // Count multi-indices over 2M modes with total <= N directly.
            std::size_t count = 0;
            const int modes = 2 * m;
            std::vector<int> occ(static_cast<std::size_t>(modes), 0);
            const auto pow = static_cast<std::size_t>(std::pow(cap + 1, modes));
            for (std::size_t code = 0; code < pow; ++code) {
                std::size_t c = code;
                int total = 0;
                for (int k = 0; k < modes; ++k) {
                    total += static_cast<int>(c % static_cast<std::size_t>(cap + 1));
                    c /= static_cast<std::size_t>(cap + 1);
                }
                count += total <= cap ? 1 : 0;
            }
            CHECK(cfg.occupation_count() == count);
            const OccupationBasis basis(cfg);
            CHECK(basis.size() == count);
            CHECK(cfg.dimension() == 9 * count);
        }
    }
    auto big = config(10, 10);
    CHECK_THROWS_AS(big.validate(), ValidationError);
    CHECK_THROWS_AS(build_hamiltonian(1.0, V, big), ValidationError);
    CHECK_THROWS_AS(build_hamiltonian(-1.0, V, config(1, 1)), ValidationError);
}

TEST_CASE("occupation basis bookkeeping", "[froehlich][property]")
{
    const auto cfg = config(2, 3);
    const OccupationBasis b(cfg);
    std::set<std::vector<int>> seen;
    for (std::size_t s = 0; s < b.size(); ++s) {
        const auto occ = b.state(s);
        CHECK(b.total(s) <= 3);
        CHECK(seen.insert(occ).second);
        CHECK(b.mirror(b.mirror(s)) == s);
        for (std::size_t m = 0; m < b.modes(); ++m) {
            const auto t = b.raise(s, m);
            if (b.total(s) == 3) {
                CHECK(t == -1);
                continue;
            }
            REQUIRE(t >= 0);
            auto up = occ;
            ++up[m];
            CHECK(b.state(static_cast<std::size_t>(t)) == up);
        }
    }
}

TEST_CASE("coupling conventions", "[froehlich]")
{
    auto cfg = config(3, 3);
    CHECK_THAT(cfg.coupling_constant(2.0), WithinRel(std::sqrt(2.0 / 16.0), 1e-15));
    cfg.coupling = CouplingConvention::literal;
    CHECK_THAT(cfg.coupling_constant(2.0), WithinRel(std::sqrt(2.0 / 8.0), 1e-15));
    CHECK(coupling_from_string("literal") == CouplingConvention::literal);
    CHECK_THROWS_AS(coupling_from_string("sum"), ValidationError);
    CHECK(cfg.wavenumber(0) == -3.0 * std::numbers::pi / 8.0);
    CHECK(cfg.wavenumber(5) == 3.0 * std::numbers::pi / 8.0);
}

TEST_CASE("Hamiltonian is Hermitian and parity symmetric", "[froehlich][property]")
{
    const auto h = build_hamiltonian(1.3, V, config(3, 3));
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto a = random_state(h.dimension(), seed), b = random_state(h.dimension(), seed + 100);
        const auto ha = h.apply(a), hb = h.apply(b);
        const cplx lhs = detail::inner(a, hb), rhs = detail::inner(ha, b);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));

        const auto hp = h.apply(h.parity(a));
        const auto ph = h.parity(ha);
        double diff = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < hp.size(); ++i) {
            diff = std::max(diff, std::abs(hp[i] - ph[i]));
            scale = std::max(scale, std::abs(ph[i]));
        }
        CHECK(diff <= 1e-12 * scale);
    }
}

TEST_CASE("Lanczos agrees with dense diagonalization", "[froehlich]")
{
    for (const auto& cfg : {config(1, 2, 9), config(2, 2, 11), config(0, 0, 33)}) {
        const auto h = build_hamiltonian(1.0, V, cfg);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense(h));
        const auto gs = ground_state(h);
        CHECK_THAT(gs.energy, WithinAbs(es.eigenvalues()(0), 1e-10));
        CHECK(gs.residual <= 1e-8);
        CHECK_THAT(detail::norm(gs.psi), WithinAbs(1.0, 1e-12));
        CHECK_THAT(gs.ritz_gap, WithinAbs(es.eigenvalues()(1) - es.eigenvalues()(0), 1e-6));
    }
}

TEST_CASE("phonon vacuum sector reduces to the electron problem", "[froehlich]")
{
    const auto cfg = config(3, 0);
    const auto gs = ground_state(build_hamiltonian(1.0, V, cfg));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(electron_only(1.0, cfg));
    CHECK_THAT(gs.energy, WithinAbs(es.eigenvalues()(0), 1e-10));
    const auto rho = electron_density(gs, cfg);
    for (std::size_t i = 0; i < cfg.electron_points; ++i) {
        const double phi = es.eigenvectors()(static_cast<Eigen::Index>(i), 0);
        CHECK_THAT(rho.rho[i], WithinAbs(phi * phi / cfg.spacing(), 1e-8));
    }
}

TEST_CASE("weak coupling decouples the electron", "[froehlich]")
{
    CHECK_THAT(ground_state(build_hamiltonian(1e-10, Potential::zero(), config(3, 3))).energy, WithinAbs(0.0, 1e-8));

    const double alpha = 1e-6;
    const auto cfg = config(3, 3);
    const auto gs = ground_state(build_hamiltonian(alpha, V, cfg));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(electron_only(alpha, cfg));
    const auto rho = electron_density(gs, cfg);
    for (std::size_t i = 0; i < cfg.electron_points; ++i) {
        const double phi = es.eigenvectors()(static_cast<Eigen::Index>(i), 0);
        CHECK_THAT(rho.rho[i], WithinAbs(phi * phi / cfg.spacing(), 1e-8));
    }
}

TEST_CASE("truncation ladders are monotone", "[froehlich][property]")
{
    double prev = INFINITY;
    for (int cap : {0, 1, 2, 3}) {
        const double e = ground_state(build_hamiltonian(1.0, V, config(3, cap))).energy;
        CHECK(e < prev);
        prev = e;
    }
    prev = INFINITY;
    for (int m : {0, 1, 2, 3}) {
        const double e = ground_state(build_hamiltonian(1.0, V, config(m, 3))).energy;
        CHECK(e < prev);
        prev = e;
    }
    // Finite differences are not nested in n_e; the energies converge instead.
    const double e17 = ground_state(build_hamiltonian(1.0, V, config(3, 3, 17))).energy;
    const double e33 = ground_state(build_hamiltonian(1.0, V, config(3, 3, 33))).energy;
    const double e65 = ground_state(build_hamiltonian(1.0, V, config(3, 3, 65))).energy;
    CHECK(std::abs(e65 - e33) < std::abs(e33 - e17));
}

TEST_CASE("electron density invariants", "[froehlich][property]")
{
    const auto cfg = config(3, 3);
    for (double alpha : {0.5, 1.0, 2.0}) {
        const auto gs = ground_state(build_hamiltonian(alpha, V, cfg));
        const auto rho = electron_density(gs, cfg);
        CHECK_THAT(rho.mass(), WithinAbs(1.0, 1e-10));
        CHECK(rho.evenness_defect() <= 1e-8);
        for (double r : rho.rho) REQUIRE(r >= 0.0);
        for (std::size_t i = 0; i < rho.rho.size(); ++i) REQUIRE_THAT(rho(rho.x[i]), WithinAbs(rho.rho[i], 1e-10));
    }
}

TEST_CASE("rescaled density on the Pekar grid", "[froehlich]")
{
    const auto cfg = config(3, 3);
    const Grid g;
    const auto gs1 = ground_state(build_hamiltonian(1.0, V, cfg));
    const auto rho1 = electron_density(gs1, cfg);
    const auto r1 = rescaled_density(rho1, 1.0, g);
    // At alpha = 1 the Pekar nodes inside [-L, L) sample the interpolant itself.
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.x(i);
        if (x < -cfg.L || x >= cfg.L) REQUIRE(r1[i] == 0.0);
        else REQUIRE_THAT(r1[i], WithinAbs(rho1(x), 1e-10));
    }

    const auto gs2 = ground_state(build_hamiltonian(2.0, V, cfg));
    const auto rho2 = electron_density(gs2, cfg);
    const auto r2 = rescaled_density(rho2, 2.0, g);
    CHECK_THAT(integrate(r2), WithinAbs(1.0, 1e-8));
    CHECK_THAT(interpolate(r2, 0.0), WithinAbs(rho2(0.0) / 2.0, 1e-12));
    CHECK_THROWS_AS(rescaled_density(rho2, 6.0, g), DomainError);
}

TEST_CASE("product ansatz is an upper bound", "[froehlich][property]")
{
    const auto cfg = config(3, 3);
    const auto u = minimize(V).minimizer;
    for (double alpha : {0.25, 0.5, 1.0, 2.0}) {
        const auto h = build_hamiltonian(alpha, V, cfg);
        const auto ans = product_ansatz_energy(h, electron_orbital(u, alpha, cfg));
        CHECK(ans.energy >= ground_state(h).energy - 1e-10);
        CHECK_FALSE(ans.truncation_warning);
        double z2 = 0.0;
        for (const auto& z : ans.amplitudes) z2 += std::norm(z);
        CHECK(z2 <= static_cast<double>(cfg.mode_count()) * h.coupling() * h.coupling());
    }

    // Untruncated coherent-state energy: <u|h_el|u> - sum |z_j|^2.
    const double alpha = 0.25;
    const auto big = config(3, 6);
    const auto h = build_hamiltonian(alpha, V, big);
    const auto orb = electron_orbital(u, alpha, big);
    const auto ans = product_ansatz_energy(h, orb);
    const auto a = electron_only(alpha, big);
    Eigen::VectorXd w(static_cast<Eigen::Index>(orb.size()));
    for (std::size_t i = 0; i < orb.size(); ++i) w(static_cast<Eigen::Index>(i)) = orb[i] * std::sqrt(big.spacing());
    double z2 = 0.0;
    for (const auto& z : ans.amplitudes) z2 += std::norm(z);
    CHECK_THAT(ans.energy, WithinAbs(w.dot(a * w) - z2, 1e-6));
}

TEST_CASE("Hellmann-Feynman on the Froehlich ground state", "[froehlich]")
{
    const auto cfg = config(3, 3);
    const auto w = TestMeasure::gaussian(0.0, 0.5);
    const auto hf = hf_check(1.0, V, w, 1e-4, cfg);
    CHECK_THAT(hf.lhs, WithinRel(hf.rhs, 1e-4));
    CHECK(hf.ritz_gap > min_ritz_gap);

    // Quadratic shrinkage of the central-difference error.
    std::vector<double> errs;
    for (double d : {0.2, 0.1, 0.05}) {
        const auto c = hf_check(1.0, V, w, d, cfg);
        errs.push_back(std::abs(c.lhs - c.rhs));
    }
    CHECK_THAT(errs[0] / errs[1], WithinAbs(4.0, 0.5));
    CHECK_THAT(errs[1] / errs[2], WithinAbs(4.0, 0.5));

    CHECK_THROWS_AS(hf_check(1.0, V, TestMeasure::dirac(0.0), 1e-4, cfg), ValidationError);
    CHECK_THROWS_AS(hf_check(1.0, V, w, 0.0, cfg), ValidationError);
}

TEST_CASE("Lanczos is deterministic", "[froehlich]")
{
    const auto h = build_hamiltonian(1.0, V, config(3, 3));
    const auto a = ground_state(h), b = ground_state(h);
    CHECK(a.energy == b.energy);
    CHECK(a.psi == b.psi);
    CHECK(a.matvecs == b.matvecs);
}

TEST_CASE("convergence scan records every row", "[froehlich]")
{
    const auto w = TestMeasure::gaussian(0.0, 0.5);
    const auto rep = convergence_scan({0.5, 1.0, 2.0}, V, w, {config(3, 3)});
    REQUIRE(rep.rows.size() == 3);
    for (const auto& r : rep.rows) {
        CHECK(r.ok);
        CHECK(r.energy <= r.ansatz_energy + 1e-10);
        CHECK_THAT(r.energy_over_alpha2, WithinRel(r.energy / (r.alpha * r.alpha), 1e-15));
    }
    CHECK(rep.csv().rfind("alpha,E,E_over_alpha2,pairing,pekar_e,pekar_pairing,ansatz_energy\n", 0) == 0);

    auto huge = config(10, 10);
    const auto bad = convergence_scan({1.0, 2.0}, V, w, {config(3, 3), huge});
    CHECK(bad.rows[0].ok);
    CHECK_FALSE(bad.rows[1].ok);
    CHECK(bad.rows[1].validation_failure);
    CHECK(bad.rows[1].error.find("dimension_cap") != std::string::npos);
    CHECK_THROWS_AS(convergence_scan({1.0, 2.0, 3.0}, V, w, {config(3, 3), huge}), ValidationError);
}
