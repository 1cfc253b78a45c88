#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "jsqhw/experiments.hpp"

using namespace jsqhw;
using namespace jsqhw::experiments;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("jsqhw_test_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("check constructors encode the three comparison kinds", "[experiments]") {
    CHECK(check_abs("a", 1.05, 1.0, 0.1).pass);
    CHECK_FALSE(check_abs("a", 1.2, 1.0, 0.1).pass);
    CHECK(check_le("b", 0.5, 0.5).pass);
    CHECK_FALSE(check_le("b", 0.6, 0.5).pass);
    CHECK(check_ge("c", 2.0, 1.0).pass);
    CHECK_FALSE(check_ge("c", 0.5, 1.0).pass);
    // non-finite measurements always fail
    CHECK_FALSE(check_le("d", std::nan(""), 1.0).pass);
    CHECK_FALSE(check_abs("e", std::numeric_limits<double>::infinity(), 0.0, 1e9).pass);
}

TEST_CASE("study reports serialize and round-trip as verdicts", "[experiments]") {
    StudyReport r;
    r.study = "demo";
    r.seed = 42;
    r.checks.push_back(check_abs("near_two", 2.1, 2.0, 0.3));
    r.checks.push_back(check_le("small", 0.2, 0.1));
    r.tables["rows"] = io::json::array({{{"beta", 0.5}, {"value", 1.25}}});
    CHECK_FALSE(r.all_pass());

    const auto dir = fresh_dir("verdicts");
    write_study(r, dir);
    CHECK(std::filesystem::exists(dir / "verdicts.json"));
    CHECK(std::filesystem::exists(dir / "tables.json"));
    CHECK(std::filesystem::exists(dir / "rows.csv"));

    const auto doc = io::json::parse(slurp(dir / "verdicts.json"));
    CHECK(doc.at("study") == "demo");
    CHECK(doc.at("seed") == 42);
    CHECK(doc.at("checks").at("near_two").at("pass") == true);
    CHECK(doc.at("checks").at("small").at("pass") == false);
    CHECK(doc.at("checks").at("small").at("measured") == 0.2);

    const auto csv = slurp(dir / "rows.csv");
    CHECK(csv == "beta,value\n0.5,1.25\n");
    std::filesystem::remove_all(dir);
}

TEST_CASE("sweep spec validation and study domain guards", "[experiments]") {
    SweepSpec bad;
    bad.betas = {0.1, -0.2};
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);

    SweepSpec out_of_range;
    out_of_range.betas = {0.9}; // gamma regime demands beta <= 0.5
    out_of_range.cycles = 4;
    CHECK_THROWS_AS(gamma_limit_study(out_of_range), std::invalid_argument);

    SweepSpec g;
    g.betas = {0.7}; // gaussian regime demands beta in [1.5, 3]
    g.cycles = 4;
    CHECK_THROWS_AS(gaussian_limit_study(g), std::invalid_argument);

    SweepSpec q;
    q.betas = {0.4}; // shoulder study regime is [0.05, 0.2]
    q.cycles = 4;
    CHECK_THROWS_AS(q1_small_beta_tail_study(q), std::invalid_argument);
}

TEST_CASE("figure histograms: masses normalize and verdicts reproduce bitwise", "[experiments]") {
    SweepSpec spec;
    spec.betas = {3.0};
    spec.seed = 2718;
    const auto a = figure1(spec, 60.0, 12);
    const auto b = figure1(spec, 60.0, 12);

    REQUIRE(a.histograms.size() == 2); // -q1 and q2 at the single beta
    for (const auto& h : a.histograms) {
        double mass = 0.0;
        for (const double m : h.hist.masses) mass += m;
        CHECK(mass == Catch::Approx(1.0).margin(1e-12));
        CHECK(h.hist.edges.size() == h.hist.masses.size() + 1);
    }
    // every mass_sum check passes even on a short run
    for (const auto& c : a.report.checks)
        if (c.name.rfind("mass_sum", 0) == 0) CHECK(c.pass);

    CHECK(verdicts_json(a.report).dump(2) == verdicts_json(b.report).dump(2));
    CHECK(a.report.tables.dump(2) == b.report.tables.dump(2));

    SweepSpec other = spec;
    other.seed = 2719;
    const auto c = figure1(other, 60.0, 12);
    CHECK(verdicts_json(c.report).dump(2) != verdicts_json(a.report).dump(2));
}

TEST_CASE("interchange study structure on a miniature run", "[experiments]") {
    SweepSpec spec;
    spec.seed = 5;
    spec.cycles = 60;  // diffusion reference cycles
    spec.reps = 400;   // CTMC horizon in time units
    const auto a = interchange_study(spec);
    const auto b = interchange_study(spec);

    CHECK(a.study == "interchange");
    CHECK(a.tables.contains("diffusion_reference"));
    CHECK(a.tables.contains("n1_geometric"));
    REQUIRE(a.tables.at("n_sweep").size() == 3);

    // N = 1 is exactly geometric; even a short run passes its 3-SE checks.
    int n1_checks = 0;
    for (const auto& c : a.checks)
        if (c.name.rfind("n1_geometric", 0) == 0) {
            ++n1_checks;
            CHECK(c.pass);
        }
    CHECK(n1_checks == 3);

    // bit-for-bit reproducibility of the whole report
    CHECK(verdicts_json(a).dump(2) == verdicts_json(b).dump(2));
    CHECK(a.tables.dump(2) == b.tables.dump(2));
}
