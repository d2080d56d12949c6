#include <catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "polaron/cli.hpp"

namespace fs = std::filesystem;
using polaron::cli::json;
using Catch::Matchers::WithinAbs;

namespace {

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("polaron-cli-" + std::to_string(::getpid()) + "-" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_config(const fs::path& dir, const json& j)
{
    const auto p = dir / "config.json";
    std::ofstream(p) << j.dump(2);
    return p;
}

json read_json(const fs::path& p)
{
    std::ifstream in(p);
    return json::parse(in);
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run(const std::string& sub, const json& cfg, const fs::path& dir, std::string* err = nullptr,
        const std::string& mode = "")
{
    std::ostringstream es;
    const int code = polaron::cli::run(sub, write_config(dir, cfg).string(), (dir / "out").string(), mode, es);
    if (err) *err = es.str();
    return code;
}

int run_exe(const std::string& args)
{
    const std::string cmd = std::string(POLARON_LAB_EXE) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("pekar subcommand writes the free soliton", "[cli]")
{
    const auto dir = scratch("pekar");
    REQUIRE(run("pekar", {{"potential", {{"kind", "zero"}}}}, dir) == 0);
    const auto r = read_json(dir / "out" / "pekar.json");
    CHECK_THAT(r["energy"].get<double>(), WithinAbs(-1.0 / 12.0, 1e-6));
    CHECK_THAT(r["lambda"].get<double>(), WithinAbs(-0.25, 1e-6));

    const auto m = read_json(dir / "out" / "manifest.json");
    CHECK(m["exit_code"] == 0);
    CHECK(m["subcommand"] == "pekar");
    CHECK(m["version"] == polaron::cli::tool_version);
    for (const auto& f : m["outputs"]) CHECK(fs::exists(dir / "out" / f.get<std::string>()));
    CHECK(m["config"]["grid"]["points"] == 4097);
    fs::remove_all(dir);
}

TEST_CASE("malformed input exits with code 1 and names the parameter", "[cli]")
{
    const auto dir = scratch("bad");
    std::string err;
    CHECK(run("pekar", {{"potential", {{"kind", "sech3"}}}}, dir, &err) == 1);
    CHECK(err.find("kind") != std::string::npos);
    CHECK(read_json(dir / "out" / "manifest.json")["error"]["parameter"] == "kind");

    CHECK(run("pekar", {{"potentail", {{"kind", "zero"}}}}, dir, &err) == 1);
    CHECK(err.find("potentail") != std::string::npos);
    CHECK(run("pekar", {{"grid", {{"points", 4096}}}}, dir, &err) == 1);
    CHECK(err.find("points") != std::string::npos);
    CHECK(run("perturb", {{"potential", {{"kind", "sech2"}, {"amplitude", 2.0}}},
                           {"measure", {{"kind", "dirac"}}},
                           {"deltas", {0.6}}}, dir, &err) == 1);
    CHECK(err.find("delta") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("non-convergence exits with code 2", "[cli]")
{
    const auto dir = scratch("noconv");
    std::string err;
    const json cfg = {{"potential", {{"kind", "sech2"}, {"amplitude", 2.0}, {"width", 1.0}}},
                      {"minimize", {{"max_iter", 3}}}};
    CHECK(run("pekar", cfg, dir, &err) == 2);
    CHECK(err.find("max_iter") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("budget subcommand", "[cli]")
{
    const auto dir = scratch("budget");
    REQUIRE(run("budget", json::object(), dir, nullptr, "optimize") == 0);
    const auto b = read_json(dir / "out" / "budget.json");
    CHECK(b["max_order"] == "3/2");
    CHECK(b["certificate"]["verified"] == true);

    REQUIRE(run("budget", json::object(), dir, nullptr, "orders") == 0);
    CHECK(read_json(dir / "out" / "budget.json")["max_order"] == "13/7");
    fs::remove_all(dir);
}

TEST_CASE("outputs are deterministic and the manifest reproduces them", "[cli][property]")
{
    const auto a = scratch("det-a"), b = scratch("det-b"), c = scratch("det-c");
    const json cfg = {{"potential", {{"kind", "sech2"}, {"amplitude", 2.0}, {"width", 1.0}}},
                      {"measure", {{"kind", "gaussian"}, {"center", 0.0}, {"width", 0.5}}},
                      {"deltas", {0.1, -0.1}}};
    REQUIRE(run("perturb", cfg, a) == 0);
    REQUIRE(run("perturb", cfg, b) == 0);
    const auto manifest = read_json(a / "out" / "manifest.json");
    REQUIRE(run("perturb", manifest["config"], c) == 0);
    for (const auto& f : manifest["outputs"]) {
        const auto name = f.get<std::string>();
        if (name == "manifest.json") continue;
        CHECK(slurp(a / "out" / name) == slurp(b / "out" / name));
        CHECK(slurp(a / "out" / name) == slurp(c / "out" / name));
    }
    for (const auto& d : {a, b, c}) fs::remove_all(d);
}

TEST_CASE("executable exit codes", "[cli]")
{
    const auto dir = scratch("exe");
    CHECK(run_exe("--version") == 0);
    CHECK(run_exe("budget optimize --out " + (dir / "o").string()) == 0);
    CHECK(fs::exists(dir / "o" / "manifest.json"));
    CHECK(run_exe("pekar --config " + (dir / "missing.json").string()) == 1);
    CHECK(run_exe("budget nonsense") == 1);
    CHECK(run_exe("") == 1);
    fs::remove_all(dir);
}
