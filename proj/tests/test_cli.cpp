#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "config.hpp"
#include "doctest.h"
#include "runner.hpp"

using namespace eqd;
using namespace eqd::cli;
namespace fs = std::filesystem;

namespace {

const char* kCheb = R"([map]
spec = rational1d: num=[1,0,-2] den=[0,0,1]

[observables]
phi = dist_to([0.5,1])
psi = chordal_re(0,1)

[run]
seed = 7
tasks = sample, correlate, clt, transfer

[sampler]
method = backward
burn_in = 30
N = 600
start = [0.5, 1]

[correlate]
psi = psi
phi = phi
n_max = 5
grid_n = 2000

[clt]
phi = phi
n_block = 50
trajectories = 200

[transfer]
phi = phi
N = 4
nodes = 300
)";

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "eqd_test_cli" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream b;
    b << f.rdbuf();
    return b.str();
}

RunResult run_in(const std::string& text, const fs::path& out, unsigned workers = 1) {
    RunOptions o;
    o.out = out.string();
    o.workers = workers;
    return run(parse_config(text), o);
}

std::pair<std::size_t, std::size_t> error_at(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return {e.line(), e.column()};
    }
    return {0, 0};
}

int shell(const std::string& cmd) {
    const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config errors carry line and column") {
    const std::string base = "[map]\nspec = rational1d: num=[1,0,0] den=[0,0,1]\n[run]\nseed = 1\ntasks = degrees\n";
    CHECK(parse_config(base).tasks == std::vector<std::string>{"degrees"});
    CHECK(error_at("[map]\nspec = rational1d: num=[1,0,0] den=[0,0,1]\n[run]\ntasks = degrees\n") ==
          std::pair<std::size_t, std::size_t>{3, 1});
    CHECK(error_at("[map]\nspec = rational1d: num=[1,0,0] den=[0,0,1]\n[run]\nseed = x1\ntasks = degrees\n") ==
          std::pair<std::size_t, std::size_t>{4, 8});
    CHECK(error_at("[map]\nspec = rational1d: num=[1,0,0] den=[0,0,1]\n[run]\nseed = 1\ntasks = degrees, dance\n") ==
          std::pair<std::size_t, std::size_t>{5, 18});
    CHECK(error_at("[map]\nspec = rational1d: num=[1,0,0] den=[0,0,1]\n[bogus]\n") ==
          std::pair<std::size_t, std::size_t>{3, 2});
    CHECK(error_at("[map]\n  colour = red\n") == std::pair<std::size_t, std::size_t>{2, 3});
    CHECK(error_at("[map]\nspec = rational1d: num=[1,0,0] den=[0,0,1]\n[observables]\nphi = dist_to([1,0)\n") ==
          std::pair<std::size_t, std::size_t>{4, 19});
    CHECK(error_at(base + "[sampler]\nN = 5\n").first == 0);
    CHECK(error_at("[map]\nspec = rational1d: num=[1,0,0] den=[0,0,1]\n[run]\nseed = 1\ntasks = sample\n[sampler]\nmethod = "
                   "backward\nN = 10\nstart = [1,2,3,4]\n") == std::pair<std::size_t, std::size_t>{9, 9});
    CHECK(error_at(std::string(kCheb) + "\n[norms]\ngrid_n = 10\ngrid_n = 20\n").first > 0);
}

TEST_CASE("degrees task") {
    const auto out = scratch("degrees");
    const auto r = run_in("[map]\nspec = rational1d: num=[1,0,0] den=[0,0,1]\n[run]\nseed = 3\ntasks = degrees\n", out);
    CHECK(r.exit_code == kOk);
    const auto j = nlohmann::json::parse(slurp(out / "degrees.json"));
    CHECK(j["d_t"] == 2);
    CHECK(j["hypothesis"] == true);
    CHECK(j["margin"] == 1.0);
    CHECK(r.manifest["artifacts"].size() == 1);
    CHECK(fs::exists(out / "manifest.json"));
}

TEST_CASE("hypothesis failure aborts with exit code 3") {
    const auto out = scratch("hyp");
    const auto r = run_in("[map]\nspec = monomial2d: A=[[2,1],[1,1]]\n[run]\nseed = 3\ntasks = degrees, transfer\n"
                          "[observables]\nphi = dist_to([1,0,1])\n[transfer]\nphi = phi\nN = 2\nnodes = 10\n",
                          out);
    CHECK(r.exit_code == kHypothesisViolated);
    CHECK(r.manifest["tasks"][1]["status"] == "skipped");
    CHECK_FALSE(fs::exists(out / "transfer.csv"));
}

TEST_CASE("pipeline artifacts and determinism") {
    const auto a = scratch("a"), b = scratch("b"), c = scratch("c");
    const auto ra = run_in(kCheb, a, 1);
    REQUIRE(ra.exit_code == kOk);
    for (const char* f : {"samples.eqd", "correlations.csv", "clt_trajectories.csv", "clt_summary.json", "transfer.csv"})
        CHECK(fs::exists(a / f));
    CHECK(ra.manifest["artifacts"].size() == 7);
    for (const auto& art : ra.manifest["artifacts"]) CHECK(art["fnv1a"].get<std::string>().size() == 16);
    const auto summary = nlohmann::json::parse(slurp(a / "clt_summary.json"));
    CHECK(summary.contains("sigma2_gk"));
    CHECK(summary.contains("degenerate"));
    CHECK(slurp(a / "correlations.csv").rfind("n,corr,stderr,bound,ratio\n", 0) == 0);
    CHECK(slurp(a / "clt_trajectories.csv").rfind("trajectory_stat\n", 0) == 0);

    run_in(kCheb, b, 1);
    run_in(kCheb, c, 3);
    for (const char* f : {"samples.eqd", "correlations.csv", "clt_trajectories.csv", "transfer.csv", "clt_summary.json"}) {
        CHECK(slurp(a / f) == slurp(b / f));
        CHECK(slurp(a / f) == slurp(c / f));
    }
}

TEST_CASE("subcommand restricts the tasks") {
    const auto out = scratch("restrict");
    RunOptions o;
    o.out = out.string();
    o.only = std::vector<std::string>{"clt"};
    const auto r = run(parse_config(kCheb), o);
    CHECK(r.exit_code == kOk);
    CHECK(r.manifest["tasks"].size() == 2);
    CHECK(fs::exists(out / "clt_summary.json"));
    CHECK_FALSE(fs::exists(out / "transfer.csv"));
}

TEST_CASE("failed tasks are recorded and the rest still run") {
    const auto out = scratch("fail");
    std::string cfg = kCheb;
    cfg.replace(cfg.find("start = [0.5, 1]"), 16, "start = [0, 1]");
    cfg.replace(cfg.find("spec = rational1d: num=[1,0,-2]"), 31, "spec = rational1d: num=[1,0,0]");
    const auto r = run_in(cfg, out);
    CHECK(r.exit_code == kNumericalFailure);
    const auto& t = r.manifest["tasks"];
    CHECK(t[0]["name"] == "sample");
    CHECK(t[0]["status"] == "failed");
    CHECK(t[1]["status"] == "skipped");
    CHECK(t[2]["name"] == "transfer");
    CHECK(t[2]["status"] == "ok");
}

TEST_CASE("command line exit codes") {
    const std::string exe = EQD_TOOL_PATH;
    const auto dir = scratch("cmd");
    std::ofstream(dir / "ok.ini") << "[map]\nspec = rational1d: num=[1,0,0] den=[0,0,1]\n[run]\nseed = 1\ntasks = degrees\n";
    std::ofstream(dir / "bad.ini") << "[map]\nspec = rational1d: num=[1,0,0] den=[0,0,1]\n[run]\ntasks = degrees\n";
    std::ofstream(dir / "hyp.ini") << "[map]\nspec = monomial2d: A=[[2,1],[1,1]]\n[run]\nseed = 1\ntasks = degrees\n";
    const std::string out = " --out " + (dir / "o").string();
    CHECK(shell(exe + " run --config " + (dir / "ok.ini").string() + out) == 0);
    CHECK(shell(exe + " run --config " + (dir / "bad.ini").string() + out) == 2);
    CHECK(shell(exe + " run --config " + (dir / "hyp.ini").string() + out) == 3);
    CHECK(shell(exe + " run --config " + (dir / "missing.ini").string() + out) == 2);
    CHECK(shell(exe + " degrees 'rational1d: num=[1,0,0] den=[0,0,1]'") == 0);
    CHECK(shell(exe + " degrees 'rational1d: num=[1,0,0 den=[0,0,1]'") == 2);
    CHECK(shell(exe + " frobnicate") == 2);
}
