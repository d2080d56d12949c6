#pragma once

// Configuration-driven front end: `polaron-lab <subcommand> --config <path> [--out <dir>]`.
// Exit codes: 0 success, 1 validation error, 2 numerical non-convergence.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "polaron/branch.hpp"
#include "polaron/budget.hpp"
#include "polaron/error.hpp"
#include "polaron/froehlich.hpp"
#include "polaron/grid.hpp"
#include "polaron/measure.hpp"
#include "polaron/pekar.hpp"
#include "polaron/perturb.hpp"
#include "polaron/potential.hpp"

namespace polaron::cli {

using json = nlohmann::json;

inline constexpr const char* tool_name = "polaron-lab";
inline constexpr const char* tool_version = "1.0.0";

enum ExitCode : int { exit_ok = 0, exit_validation = 1, exit_nonconvergence = 2 };

namespace detail {

inline void check_keys(const json& obj, std::initializer_list<const char*> allowed, const char* module,
                       const std::string& where)
{
    if (!obj.is_object()) throw ValidationError(module, where, "expected a JSON object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ValidationError(module, where.empty() ? key : where + "." + key, "unknown configuration key");
    }
}

inline double number(const json& obj, const char* key, double fallback, const char* module)
{
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ValidationError(module, key, "expected a number");
    return v.get<double>();
}

inline std::size_t count(const json& obj, const char* key, std::size_t fallback, const char* module)
{
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ValidationError(module, key, "expected a nonnegative integer");
    return v.get<std::size_t>();
}

inline std::string text(const json& obj, const char* key, const std::string& fallback, const char* module)
{
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_string()) throw ValidationError(module, key, "expected a string");
    return v.get<std::string>();
}

inline std::vector<double> numbers(const json& v, const char* key, const char* module)
{
    if (!v.is_array()) throw ValidationError(module, key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ValidationError(module, key, "expected an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

inline const json& block(const json& cfg, const char* key)
{
    static const json empty = json::object();
    return cfg.contains(key) ? cfg.at(key) : empty;
}

} // namespace detail

/// Parsed configuration; `resolved` is the same document with every default
/// filled in, recorded in the manifest.
struct RunConfig
{
    json resolved = json::object();

    Potential potential;
    Grid grid;
    MinimizeOptions minimize;
    std::optional<TestMeasure> measure;
    std::vector<double> deltas{0.2, 0.1, 0.05, 0.025, -0.025, -0.05, -0.1, -0.2};
    std::vector<double> lambdas;
    bool norm_match = true;
    std::vector<FockConfig> fock{FockConfig{}};
    LanczosOptions lanczos;
    double alpha = 1.0;
    std::vector<double> alphas{0.5, 1.0, 2.0};
    std::optional<double> delta_fd;
    json budget = json::object();
};

inline Potential parse_potential(const json& j, json& resolved)
{
    detail::check_keys(j, {"kind", "amplitude", "width", "x", "values"}, "pekar", "potential");
    const auto kind = potential_kind_from_string(detail::text(j, "kind", "zero", "pekar"));
    resolved = {{"kind", to_string(kind)}};
    if (kind == PotentialKind::zero) return Potential::zero();
    if (kind == PotentialKind::tabulated) {
        if (!j.contains("x") || !j.contains("values"))
            throw ValidationError("pekar", "table", "tabulated potential needs 'x' and 'values'");
        auto xs = detail::numbers(j.at("x"), "x", "pekar");
        auto vs = detail::numbers(j.at("values"), "values", "pekar");
        resolved["x"] = xs;
        resolved["values"] = vs;
        return Potential::tabulated(std::move(xs), std::move(vs));
    }
    const double a = detail::number(j, "amplitude", 1.0, "pekar");
    const double w = detail::number(j, "width", 1.0, "pekar");
    resolved["amplitude"] = a;
    resolved["width"] = w;
    switch (kind) {
    case PotentialKind::sech2: return Potential::sech2(a, w);
    case PotentialKind::gaussian: return Potential::gaussian(a, w);
    default: return Potential::lorentzian(a, w);
    }
}

inline TestMeasure parse_measure(const json& j, json& resolved)
{
    detail::check_keys(j, {"kind", "center", "width"}, "perturb", "measure");
    const auto kind = measure_kind_from_string(detail::text(j, "kind", "gaussian", "perturb"));
    const double c = detail::number(j, "center", 0.0, "perturb");
    resolved = {{"kind", to_string(kind)}, {"center", c}};
    if (kind == MeasureKind::dirac) return TestMeasure::dirac(c);
    const double w = detail::number(j, "width", 0.5, "perturb");
    resolved["width"] = w;
    return kind == MeasureKind::gaussian ? TestMeasure::gaussian(c, w) : TestMeasure::indicator(c, w);
}

inline FockConfig parse_fock(const json& j, json& resolved)
{
    detail::check_keys(j, {"L", "modes", "phonon_cap", "electron_points", "dimension_cap", "coupling"}, "froehlich",
                       "fock");
    FockConfig f;
    f.L = detail::number(j, "L", f.L, "froehlich");
    f.modes = static_cast<int>(detail::count(j, "modes", static_cast<std::size_t>(f.modes), "froehlich"));
    f.phonon_cap = static_cast<int>(detail::count(j, "phonon_cap", static_cast<std::size_t>(f.phonon_cap), "froehlich"));
    f.electron_points = detail::count(j, "electron_points", f.electron_points, "froehlich");
    f.dimension_cap = detail::count(j, "dimension_cap", f.dimension_cap, "froehlich");
    f.coupling = coupling_from_string(detail::text(j, "coupling", to_string(f.coupling), "froehlich"));
    f.validate();
    resolved = {{"L", f.L},
                {"modes", f.modes},
                {"phonon_cap", f.phonon_cap},
                {"electron_points", f.electron_points},
                {"dimension_cap", f.dimension_cap},
                {"coupling", to_string(f.coupling)}};
    return f;
}

inline ExponentVector parse_exponents(const json& j, const std::string& fallback, json& resolved)
{
    ExponentVector ev;
    if (j.is_null() || j.is_string()) {
        const std::string name = j.is_string() ? j.get<std::string>() : fallback;
        if (name == "published")
            ev = ExponentVector::published();
        else if (name == "optimum")
            ev = optimize().exponents;
        else
            throw ValidationError("budget", "exponents", "expected 'published', 'optimum' or {d, k, p, e}");
    } else {
        detail::check_keys(j, {"d", "k", "p", "e"}, "budget", "exponents");
        auto get = [&](const char* key) {
            if (!j.contains(key)) throw ValidationError("budget", key, "missing exponent");
            const auto& v = j.at(key);
            if (v.is_string()) return rational_from_string(v.get<std::string>());
            if (v.is_number_integer()) return Rational(v.get<long long>());
            throw ValidationError("budget", key, "exponents are integers or \"num/den\" strings");
        };
        ev = {get("d"), get("k"), get("p"), get("e")};
    }
    ev.validate();
    resolved = {{"d", to_string(ev.d)}, {"k", to_string(ev.k)}, {"p", to_string(ev.p)}, {"e", to_string(ev.e)}};
    return ev;
}

inline RunConfig parse_config(const json& cfg)
{
    detail::check_keys(cfg,
                       {"potential", "grid", "minimize", "measure", "deltas", "lambdas", "lambda_grid", "norm_match",
                        "fock", "fock_schedule", "lanczos", "alpha", "alphas", "delta_fd", "budget"},
                       "cli", "");
    RunConfig rc;
    auto& res = rc.resolved;

    json pres;
    rc.potential = parse_potential(detail::block(cfg, "potential"), pres);
    res["potential"] = pres;

    const auto& g = detail::block(cfg, "grid");
    detail::check_keys(g, {"half_width", "points"}, "grid", "grid");
    rc.grid = Grid(detail::number(g, "half_width", Grid::default_half_width, "grid"),
                   detail::count(g, "points", Grid::default_points, "grid"));
    res["grid"] = {{"half_width", rc.grid.half_width()}, {"points", rc.grid.size()}};
    rc.potential.validate_on(rc.grid);

    const auto& m = detail::block(cfg, "minimize");
    detail::check_keys(m, {"tol", "max_iter"}, "pekar", "minimize");
    rc.minimize.tol = detail::number(m, "tol", rc.minimize.tol, "pekar");
    rc.minimize.max_iter = detail::count(m, "max_iter", rc.minimize.max_iter, "pekar");
    if (!(rc.minimize.tol > 0.0)) throw ValidationError("pekar", "tol", "must be positive");
    res["minimize"] = {{"tol", rc.minimize.tol}, {"max_iter", rc.minimize.max_iter}};

    if (cfg.contains("measure")) {
        json mres;
        rc.measure = parse_measure(cfg.at("measure"), mres);
        res["measure"] = mres;
    }

    if (cfg.contains("deltas")) rc.deltas = detail::numbers(cfg.at("deltas"), "deltas", "perturb");
    res["deltas"] = rc.deltas;

    if (cfg.contains("lambdas") && cfg.contains("lambda_grid"))
        throw ValidationError("branch", "lambdas", "give either 'lambdas' or 'lambda_grid', not both");
    if (cfg.contains("lambdas")) {
        rc.lambdas = detail::numbers(cfg.at("lambdas"), "lambdas", "branch");
        res["lambdas"] = rc.lambdas;
    } else {
        const auto& lg = detail::block(cfg, "lambda_grid");
        detail::check_keys(lg, {"lo", "hi", "count"}, "branch", "lambda_grid");
        const double lo = detail::number(lg, "lo", -3.0, "branch");
        const double hi = detail::number(lg, "hi", -1.05, "branch");
        const std::size_t n = detail::count(lg, "count", 20, "branch");
        if (!(lo < hi)) throw ValidationError("branch", "lambda_grid", "need lo < hi");
        if (n < 1) throw ValidationError("branch", "count", "must be positive");
        rc.lambdas.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            rc.lambdas[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        res["lambda_grid"] = {{"lo", lo}, {"hi", hi}, {"count", n}};
    }
    if (cfg.contains("norm_match")) {
        if (!cfg.at("norm_match").is_boolean()) throw ValidationError("branch", "norm_match", "expected true/false");
        rc.norm_match = cfg.at("norm_match").get<bool>();
    }
    res["norm_match"] = rc.norm_match;

    if (cfg.contains("fock") && cfg.contains("fock_schedule"))
        throw ValidationError("froehlich", "fock", "give either 'fock' or 'fock_schedule', not both");
    if (cfg.contains("fock_schedule")) {
        const auto& s = cfg.at("fock_schedule");
        if (!s.is_array() || s.empty()) throw ValidationError("froehlich", "fock_schedule", "expected a nonempty array");
        rc.fock.clear();
        res["fock_schedule"] = json::array();
        for (const auto& f : s) {
            json fres;
            rc.fock.push_back(parse_fock(f, fres));
            res["fock_schedule"].push_back(fres);
        }
    } else {
        json fres;
        rc.fock = {parse_fock(detail::block(cfg, "fock"), fres)};
        res["fock"] = fres;
    }

    const auto& l = detail::block(cfg, "lanczos");
    detail::check_keys(l, {"tol", "max_krylov", "max_restarts", "seed"}, "froehlich", "lanczos");
    rc.lanczos.tol = detail::number(l, "tol", rc.lanczos.tol, "froehlich");
    rc.lanczos.max_krylov = detail::count(l, "max_krylov", rc.lanczos.max_krylov, "froehlich");
    rc.lanczos.max_restarts = detail::count(l, "max_restarts", rc.lanczos.max_restarts, "froehlich");
    rc.lanczos.seed = detail::count(l, "seed", rc.lanczos.seed, "froehlich");
    if (!(rc.lanczos.tol > 0.0) || rc.lanczos.tol > 1e-8)
        throw ValidationError("froehlich", "tol", "Lanczos tolerance must lie in (0, 1e-8]");
    if (rc.lanczos.max_krylov < 2) throw ValidationError("froehlich", "max_krylov", "need at least 2");
    res["lanczos"] = {{"tol", rc.lanczos.tol},
                      {"max_krylov", rc.lanczos.max_krylov},
                      {"max_restarts", rc.lanczos.max_restarts},
                      {"seed", rc.lanczos.seed}};

    rc.alpha = detail::number(cfg, "alpha", rc.alpha, "froehlich");
    if (!(rc.alpha > 0.0)) throw ValidationError("froehlich", "alpha", "must be positive");
    res["alpha"] = rc.alpha;
    if (cfg.contains("alphas")) rc.alphas = detail::numbers(cfg.at("alphas"), "alphas", "froehlich");
    for (double a : rc.alphas)
        if (!(a > 0.0)) throw ValidationError("froehlich", "alphas", "every alpha must be positive");
    if (rc.fock.size() != 1 && rc.fock.size() != rc.alphas.size())
        throw ValidationError("froehlich", "fock_schedule", "need one FockConfig per alpha");
    res["alphas"] = rc.alphas;
    if (cfg.contains("delta_fd")) {
        rc.delta_fd = detail::number(cfg, "delta_fd", 0.0, "froehlich");
        if (!(*rc.delta_fd > 0.0)) throw ValidationError("froehlich", "delta_fd", "must be positive");
        res["delta_fd"] = *rc.delta_fd;
    }

    rc.budget = detail::block(cfg, "budget");
    detail::check_keys(rc.budget, {"mode", "exponents", "alpha", "constants", "e_V"}, "budget", "budget");
    return rc;
}

inline json load_config(const std::string& path)
{
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw ValidationError("cli", "config", "cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("cli", "config", std::string("malformed JSON: ") + e.what());
    }
}

/// Collects output files, written atomically (temp file + rename).
class OutputDir
{
public:
    explicit OutputDir(std::filesystem::path dir) : m_dir(std::move(dir))
    {
        std::error_code ec;
        std::filesystem::create_directories(m_dir, ec);
        if (ec) throw ValidationError("cli", "out", "cannot create '" + m_dir.string() + "': " + ec.message());
    }

    void write(const std::string& name, const std::string& content)
    {
        const auto target = m_dir / name;
        const auto tmp = m_dir / (name + ".tmp");
        {
            std::ofstream os(tmp, std::ios::binary);
            os << content;
            if (!os) throw ValidationError("cli", "out", "cannot write '" + tmp.string() + "'");
        }
        std::filesystem::rename(tmp, target);
        m_files.push_back(name);
    }

    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    const std::vector<std::string>& files() const noexcept { return m_files; }
    const std::filesystem::path& path() const noexcept { return m_dir; }

private:
    std::filesystem::path m_dir;
    std::vector<std::string> m_files;
};

inline std::string csv_row(std::initializer_list<double> values)
{
    std::string out;
    char buf[40];
    bool first = true;
    for (double v : values) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        if (!first) out += ',';
        out += buf;
        first = false;
    }
    return out + "\n";
}

inline json pekar_record(const PekarResult& r, const Potential& v)
{
    const auto t = pekar_terms(r.minimizer, v);
    return {{"energy", r.energy},
            {"lambda", r.multiplier},
            {"residual", r.residual},
            {"iterations", r.iterations},
            {"quartic", t.quartic},
            {"identity_defect", std::abs(r.multiplier - (r.energy - t.quartic))}};
}

inline int run_pekar(const RunConfig& rc, OutputDir& out)
{
    const auto r = minimize(rc.potential, rc.grid, rc.minimize);
    out.write_json("pekar.json", pekar_record(r, rc.potential));
    out.write("profile.csv", to_csv(rc.potential.is_zero() ? recenter(r.minimizer) : r.minimizer));
    return exit_ok;
}

inline int run_branch(const RunConfig& rc, OutputDir& out)
{
    const double l0 = lambda0(rc.potential, rc.grid);
    const auto curve = trace_branch(rc.potential, rc.lambdas, rc.grid);
    std::string csv = "lambda,norm2_sq,height,matching_radius,residual\n";
    for (const auto& p : curve.samples)
        csv += csv_row({p.lambda, p.norm2_sq, p.height, p.matching_radius, branch_residual(p, rc.potential)});
    json j = {{"lambda0", l0},
              {"count", curve.samples.size()},
              {"strictly_decreasing", curve.strictly_decreasing()}};
    if (rc.norm_match) {
        const auto nm = norm_match(rc.potential, rc.grid);
        j["norm_match"] = {{"lambda", nm.lambda}, {"norm2_sq", nm.norm2_sq}};
        out.write("norm_match.csv", to_csv(nm.u));
    }
    out.write("branch.csv", csv);
    out.write_json("branch.json", j);
    return exit_ok;
}

inline int run_perturb(const RunConfig& rc, OutputDir& out)
{
    if (!rc.measure) throw ValidationError("perturb", "measure", "the perturb subcommand needs a 'measure' block");
    if (rc.potential.is_zero())
        throw ValidationError("perturb", "potential", "V = 0 has a translation family of minimizers");
    const auto& w = *rc.measure;
    w.validate_on(rc.grid);
    for (double d : rc.deltas) polaron::detail::require_bracket_delta(d);

    const auto base = minimize(rc.potential, rc.grid, rc.minimize);
    const double hf = hf_derivative(base, w);
    std::string csv = "delta,upper,quotient,lower\n";
    json brackets = json::array();
    bool all_ordered = true;
    for (double d : rc.deltas) {
        const auto b = bracket_check(rc.potential, base, w, d, rc.minimize);
        csv += csv_row({b.delta, b.upper, b.quotient, b.lower});
        brackets.push_back({{"delta", b.delta}, {"ordered", b.ordered()}});
        all_ordered = all_ordered && b.ordered();
    }
    out.write("bracket.csv", csv);
    out.write_json("perturb.json", {{"e_V", base.energy},
                                    {"hf_derivative", hf},
                                    {"brackets", brackets},
                                    {"all_ordered", all_ordered}});
    return exit_ok;
}

inline int run_froehlich(const RunConfig& rc, OutputDir& out)
{
    const auto& cfg = rc.fock.front();
    const auto h = build_hamiltonian(rc.alpha, rc.potential, cfg);
    const auto gs = ground_state(h, rc.lanczos);
    const auto rho = electron_density(gs, cfg);
    const auto base = minimize(rc.potential, rc.grid, rc.minimize);
    const auto ansatz = product_ansatz_energy(h, electron_orbital(base.minimizer, rc.alpha, cfg));

    json j = {{"alpha", rc.alpha},
              {"dimension", h.dimension()},
              {"coupling", h.coupling()},
              {"energy", gs.energy},
              {"residual", gs.residual},
              {"ritz_gap", gs.ritz_gap},
              {"matvecs", gs.matvecs},
              {"density", {{"mass", rho.mass()}, {"evenness_defect", rho.evenness_defect()}}},
              {"ansatz",
               {{"energy", ansatz.energy},
                {"retained_weight", ansatz.retained_weight},
                {"truncation_warning", ansatz.truncation_warning}}}};
    if (rc.delta_fd) {
        if (!rc.measure) throw ValidationError("froehlich", "measure", "delta_fd needs a 'measure' block");
        const auto hf = hf_check(rc.alpha, rc.potential, *rc.measure, *rc.delta_fd, cfg, rc.lanczos);
        j["hf_check"] = {{"delta_fd", *rc.delta_fd},
                         {"lhs", hf.lhs},
                         {"rhs", hf.rhs},
                         {"relative_error", std::abs(hf.lhs - hf.rhs) / std::abs(hf.rhs)}};
    }
    std::string csv = "x,rho\n";
    for (std::size_t i = 0; i < rho.rho.size(); ++i) csv += csv_row({rho.x[i], rho.rho[i]});
    out.write("density.csv", csv);
    out.write_json("froehlich.json", j);
    return exit_ok;
}

inline int run_scan(const RunConfig& rc, OutputDir& out)
{
    const auto w = rc.measure.value_or(TestMeasure::gaussian(0.0, 0.5));
    const auto rep = convergence_scan(rc.alphas, rc.potential, w, rc.fock, rc.grid, rc.lanczos);
    json rows = json::array();
    int code = exit_ok;
    for (const auto& r : rep.rows) {
        json row = {{"alpha", r.alpha}, {"ok", r.ok}};
        if (r.ok) {
            row["E"] = r.energy;
            row["E_over_alpha2"] = r.energy_over_alpha2;
            row["pairing"] = r.pairing;
            row["ansatz_energy"] = r.ansatz_energy;
            row["ansatz_truncation_warning"] = r.ansatz_warning;
            row["ansatz_dominates"] = r.energy <= r.ansatz_energy + 1e-10;
        } else {
            row["error"] = r.error;
            code = std::max<int>(code, r.validation_failure ? exit_validation : exit_nonconvergence);
        }
        rows.push_back(row);
    }
    out.write("scan.csv", rep.csv());
    out.write_json("scan.json", {{"reference", {{"pekar_e", rep.pekar_energy}, {"pekar_pairing", rep.pekar_pairing}}},
                                 {"rows", rows}});
    return code;
}

inline json budget_record(const BudgetReport& r)
{
    json orders = json::object();
    for (const auto& [name, v] : r.terms()) orders[name] = to_string(v);
    orders["T1_delta"] = to_string(r.t1_delta);
    orders["T1_eps"] = to_string(r.t1_eps);
    return {{"exponents",
             {{"d", to_string(r.exponents.d)},
              {"k", to_string(r.exponents.k)},
              {"p", to_string(r.exponents.p)},
              {"e", to_string(r.exponents.e)}}},
            {"orders", orders},
            {"max_order", to_string(r.max_order)},
            {"binding", r.binding}};
}

inline int run_budget(RunConfig& rc, const std::string& mode_arg, OutputDir& out)
{
    const auto& b = rc.budget;
    const std::string mode = mode_arg.empty() ? detail::text(b, "mode", "optimize", "budget") : mode_arg;
    json res = {{"mode", mode}};
    json j;
    if (mode == "orders") {
        json eres;
        const auto ev = parse_exponents(b.contains("exponents") ? b.at("exponents") : json(), "published", eres);
        res["exponents"] = eres;
        j = budget_record(term_orders(ev));
    } else if (mode == "optimize") {
        const auto opt = optimize();
        j = budget_record(term_orders(opt.exponents));
        json cert = json::object();
        for (std::size_t i = 0; i < opt.certificate.weights.size(); ++i)
            cert[opt.certificate.constraints[i]] = to_string(opt.certificate.weights[i]);
        j["certificate"] = {{"weights", cert},
                            {"bound", to_string(opt.certificate.bound)},
                            {"verified", verify_certificate(opt.certificate)}};
    } else if (mode == "sandwich") {
        json eres;
        const auto ev = parse_exponents(b.contains("exponents") ? b.at("exponents") : json(), "optimum", eres);
        const double alpha = detail::number(b, "alpha", 1e6, "budget");
        const double e_v = detail::number(b, "e_V", -1.0 / 12.0, "budget");
        SandwichConstants c;
        const auto& cj = detail::block(b, "constants");
        detail::check_keys(cj, {"c1", "c2", "c3", "c4"}, "budget", "constants");
        c.c1 = detail::number(cj, "c1", 1.0, "budget");
        c.c2 = detail::number(cj, "c2", 1.0, "budget");
        c.c3 = detail::number(cj, "c3", 1.0, "budget");
        c.c4 = detail::number(cj, "c4", 1.0, "budget");
        res["exponents"] = eres;
        res["alpha"] = alpha;
        res["e_V"] = e_v;
        res["constants"] = {{"c1", c.c1}, {"c2", c.c2}, {"c3", c.c3}, {"c4", c.c4}};
        const auto s = numeric_sandwich(alpha, ev, c, e_v);
        const auto report = term_orders(ev);
        j = budget_record(report);
        j["sandwich"] = {{"alpha", alpha},
                         {"upper", s.upper},
                         {"lower", s.lower},
                         {"delta", s.delta},
                         {"epsilon", s.epsilon},
                         {"threshold", s.threshold},
                         {"ordered", s.ordered},
                         {"gap_over_alpha_max_order", (s.upper - s.lower) / std::pow(alpha, to_double(report.max_order))},
                         {"asymptotic_constant", asymptotic_constant(ev, c, e_v)}};
    } else {
        throw ValidationError("budget", "mode", "expected optimize, orders or sandwich");
    }
    rc.resolved["budget"] = res;
    out.write_json("budget.json", j);
    return exit_ok;
}

inline std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Runs one subcommand; errors are reported on `err` and mapped to exit codes.
inline int run(const std::string& subcommand, const std::string& config_path, const std::string& out_dir,
               const std::string& budget_mode = "", std::ostream& err = std::cerr)
{
    json manifest = {{"tool", tool_name}, {"version", tool_version}, {"subcommand", subcommand}};
    if (!config_path.empty()) manifest["config_path"] = config_path;
    std::optional<OutputDir> out;
    int code = exit_ok;
    try {
        out.emplace(out_dir);
        auto rc = parse_config(load_config(config_path));
        manifest["config"] = rc.resolved;
        if (subcommand == "pekar")
            code = run_pekar(rc, *out);
        else if (subcommand == "branch")
            code = run_branch(rc, *out);
        else if (subcommand == "perturb")
            code = run_perturb(rc, *out);
        else if (subcommand == "froehlich")
            code = run_froehlich(rc, *out);
        else if (subcommand == "scan")
            code = run_scan(rc, *out);
        else if (subcommand == "budget")
            code = run_budget(rc, budget_mode, *out);
        else
            throw ValidationError("cli", "subcommand", "unknown subcommand '" + subcommand + "'");
        manifest["config"] = rc.resolved;
    } catch (const ValidationError& e) {
        err << tool_name << ": validation error: " << e.what() << "\n";
        manifest["error"] = {{"module", e.module()}, {"parameter", e.parameter()}, {"message", e.what()}};
        code = exit_validation;
    } catch (const Error& e) {
        err << tool_name << ": numerical failure: " << e.what() << "\n";
        manifest["error"] = {{"module", e.module()}, {"parameter", e.parameter()}, {"message", e.what()}};
        code = exit_nonconvergence;
    }
    if (!out) return code;
    manifest["outputs"] = out->files();
    manifest["exit_code"] = code;
    manifest["created"] = utc_timestamp();
    try {
        out->write_json("manifest.json", manifest);
    } catch (const Error& e) {
        err << tool_name << ": " << e.what() << "\n";
        return code == exit_ok ? exit_validation : code;
    }
    return code;
}

inline int main(int argc, char** argv)
{
    CLI::App app{"Numerical laboratory for the one-dimensional strong-coupling polaron"};
    app.set_version_flag("--version", tool_version);
    app.require_subcommand(1);
    std::string config, out = "polaron-out", mode;

    struct Sub
    {
        const char* name;
        const char* help;
    };
    const std::vector<Sub> subs = {
        {"pekar", "Minimize the Pekar functional"},
        {"branch", "Trace the Euler-Lagrange branch and match the unit norm"},
        {"perturb", "Perturbed energies, Hellmann-Feynman derivative and variational bracket"},
        {"froehlich", "Truncated Froehlich ground state, density and product-ansatz bound"},
        {"scan", "Trend table over a list of couplings"},
        {"budget", "Exact order arithmetic of the error budget"},
    };
    for (const auto& s : subs) {
        auto* sc = app.add_subcommand(s.name, s.help);
        sc->add_option("--config", config, "JSON configuration file")->check(CLI::ExistingFile);
        sc->add_option("--out", out, "output directory")->capture_default_str();
        if (std::string(s.name) == "budget")
            sc->add_option("mode", mode, "optimize | orders | sandwich")
                ->check(CLI::IsMember({"optimize", "orders", "sandwich"}));
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_validation;
    }
    return run(app.get_subcommands().front()->get_name(), config, out, mode);
}

} // namespace polaron::cli
