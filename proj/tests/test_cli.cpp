// End-to-end tests of the command-line driver: exit codes, artifact layout,
// byte-level determinism, and config/flag precedence.  The binary path is
// injected at compile time as JSQHW_CLI_PATH.

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <catch2/catch_amalgamated.hpp>
#include <json.hpp>

#include "jsqhw/version.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output; // stdout and stderr combined
};

CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(JSQHW_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult res;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) res.output.append(buf.data(), n);
    const int status = ::pclose(pipe);
    if (WIFEXITED(status)) res.exit_code = WEXITSTATUS(status);
    return res;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// A fresh scratch area; the CLI is expected to create the leaf directory.
fs::path fresh_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("jsqhw_cli_" + tag);
    fs::remove_all(p);
    return p;
}

} // namespace

TEST_CASE("version flag prints the bare version line", "[cli]") {
    const auto r = run_cli("--version");
    CHECK(r.exit_code == 0);
    CHECK(r.output == std::string(jsqhw::version_string) + "\n");
}

TEST_CASE("missing subcommand and unknown flags are usage errors", "[cli]") {
    CHECK(run_cli("").exit_code == 1);
    CHECK(run_cli("stationary --no-such-flag 1").exit_code == 1);
    CHECK(run_cli("sweep nosuchstudy").exit_code == 1);
    CHECK(run_cli("--help").exit_code == 0);
}

TEST_CASE("domain violations exit 1, numerical failures exit 2", "[cli]") {
    const auto root = fresh_dir("errors");
    auto bad = run_cli("stationary --beta -1 --cycles 8 --out " + q(root / "a"));
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("beta") != std::string::npos);

    CHECK(run_cli("hitting --coord q7 --level 1 --out " + q(root / "b")).exit_code == 1);

    // A per-cycle cap below ln 2 cannot complete any cycle (q2 decays at most
    // exponentially from 2B to B), so estimation is impossible.
    auto num = run_cli("stationary --beta 1 --cycles 8 --max-cycle-time 0.05 --out " +
                       q(root / "c"));
    CHECK(num.exit_code == 2);
    CHECK(num.output.find("numerical error") != std::string::npos);
    fs::remove_all(root);
}

TEST_CASE("stationary runs are byte-identical across reruns and worker counts", "[cli]") {
    const auto root = fresh_dir("determinism");
    const std::string args = "stationary --beta 1 --cycles 20 --seed 7 --out ";
    REQUIRE(run_cli(args + q(root / "a")).exit_code == 0);
    REQUIRE(run_cli(args + q(root / "b")).exit_code == 0);
    REQUIRE(run_cli(args + q(root / "c") + " --workers 3").exit_code == 0);

    for (const char* file : {"estimates.json", "cycles.csv"}) {
        const auto a = slurp(root / "a" / file);
        CHECK(a == slurp(root / "b" / file));
        CHECK(a == slurp(root / "c" / file));
        CHECK(!a.empty());
    }

    // A different seed must change the estimates.
    REQUIRE(run_cli("stationary --beta 1 --cycles 20 --seed 8 --out " + q(root / "d")).exit_code ==
            0);
    CHECK(slurp(root / "a" / "estimates.json") != slurp(root / "d" / "estimates.json"));

    // The manifest varies in wall time but must carry the run parameters.
    const auto manifest = nlohmann::json::parse(slurp(root / "a" / "manifest.json"));
    CHECK(manifest["subcommand"] == "stationary");
    CHECK(manifest["seed"] == 7);
    CHECK(manifest["tool"]["name"] == "jsqhw");
    CHECK(manifest["config"]["beta"] == 1.0);
    fs::remove_all(root);
}

TEST_CASE("artifacts stay inside the output directory", "[cli]") {
    const auto root = fresh_dir("containment");
    fs::create_directories(root);
    REQUIRE(run_cli("stationary --beta 1 --cycles 12 --seed 3 --out " + q(root / "out")).exit_code ==
            0);
    std::set<std::string> entries;
    for (const auto& e : fs::directory_iterator(root)) entries.insert(e.path().filename().string());
    CHECK(entries == std::set<std::string>{"out"});
    for (const char* file : {"estimates.json", "cycles.csv", "manifest.json"})
        CHECK(fs::exists(root / "out" / file));
    fs::remove_all(root);
}

TEST_CASE("failed study verdicts exit 3 and still write artifacts", "[cli]") {
    const auto root = fresh_dir("verdict");
    // At beta = 1.5 the centered first coordinate has variance near 1, so the
    // pinned second-moment window [1.7, 2.3] fails; --check must surface that.
    const auto r =
        run_cli("sweep gaussian --betas 1.5 --cycles 60 --seed 3 --check --out " + q(root));
    CHECK(r.exit_code == 3);
    CHECK(r.output.find("FAIL") != std::string::npos);

    const auto verdicts = nlohmann::json::parse(slurp(root / "verdicts.json"));
    CHECK(verdicts["study"] == "gaussian_limit");
    bool any_fail = false;
    for (const auto& [name, c] : verdicts["checks"].items()) {
        (void)name;
        if (!c["pass"].get<bool>()) any_fail = true;
    }
    CHECK(any_fail);
    CHECK(fs::exists(root / "tables.json"));
    fs::remove_all(root);
}

TEST_CASE("config file fills defaults and explicit flags win", "[cli]") {
    const auto root = fresh_dir("config");
    fs::create_directories(root);
    {
        std::ofstream os(root / "cfg.json");
        os << R"({"beta": 2.0, "cycles": 12, "seed": 9})";
    }
    REQUIRE(run_cli("stationary --config " + q(root / "cfg.json") + " --seed 4 --out " +
                    q(root / "run"))
                .exit_code == 0);
    const auto manifest = nlohmann::json::parse(slurp(root / "run" / "manifest.json"));
    CHECK(manifest["seed"] == 4);                  // flag beats config
    CHECK(manifest["config"]["beta"] == 2.0);      // config beats default
    CHECK(manifest["config"]["cycles"] == 12);

    {
        std::ofstream os(root / "bad.json");
        os << R"({"beta": "two"})";
    }
    CHECK(run_cli("stationary --config " + q(root / "bad.json") + " --out " + q(root / "x"))
              .exit_code == 1);
    CHECK(run_cli("stationary --config " + q(root / "missing.json") + " --out " + q(root / "y"))
              .exit_code == 1);
    fs::remove_all(root);
}

TEST_CASE("diffusion, ctmc, identities and hitting emit their artifacts", "[cli]") {
    const auto root = fresh_dir("smoke");

    REQUIRE(run_cli("diffusion --beta 1 --horizon 0.5 --stride 10 --seed 2 --out " +
                    q(root / "d"))
                .exit_code == 0);
    const auto traj = slurp(root / "d" / "trajectory.csv");
    CHECK(traj.rfind("t,q1,q2,l\n", 0) == 0);

    REQUIRE(run_cli("ctmc --n 4 --beta 1 --horizon 200 --burn-in 10 --seed 2 --out " +
                    q(root / "c"))
                .exit_code == 0);
    const auto ctmc = nlohmann::json::parse(slurp(root / "c" / "ctmc.json"));
    CHECK(ctmc["lambda"].get<double>() == 2.0); // 4 - 1 * sqrt(4)
    CHECK(ctmc["time_avg"]["q1bar"].get<double>() <= 0.0);

    REQUIRE(run_cli("identities --beta 1 --cycles 12 --nmax 1 --seed 2 --out " + q(root / "i"))
                .exit_code == 0);
    const auto ids = nlohmann::json::parse(slurp(root / "i" / "identities.json"));
    CHECK(ids.is_array());
    CHECK(ids.size() >= 4);
    const auto csv = slurp(root / "i" / "identities.csv");
    CHECK(csv.rfind("name,n,lhs,lhs_se,rhs,rhs_se,z\n", 0) == 0);

    REQUIRE(run_cli("hitting --beta 3 --q2 6 --coord q2 --level 0.75 --reps 8 "
                    "--max-time 100 --seed 2 --out " +
                    q(root / "h"))
                .exit_code == 0);
    const auto hit = nlohmann::json::parse(slurp(root / "h" / "hitting.json"));
    CHECK(hit["mean"].get<double>() > 0.0);
    CHECK(hit["n_hit"].get<int>() + hit["n_truncated"].get<int>() == 8);
    fs::remove_all(root);
}

TEST_CASE("figure1 writes one histogram per coordinate and beta", "[cli]") {
    const auto root = fresh_dir("figure1");
    REQUIRE(run_cli("figure1 --betas 3 --horizon 40 --bins 8 --seed 2 --out " + q(root))
                .exit_code == 0);
    CHECK(fs::exists(root / "hist_neg_q1_beta_3.csv"));
    CHECK(fs::exists(root / "hist_q2_beta_3.csv"));
    CHECK(fs::exists(root / "verdicts.json"));
    const auto hist = slurp(root / "hist_q2_beta_3.csv");
    CHECK(hist.rfind("coordinate,bin_left,bin_right,mass\n", 0) == 0);
    fs::remove_all(root);
}
