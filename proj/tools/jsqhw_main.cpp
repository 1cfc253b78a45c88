// Command-line laboratory driver.
//
// Subcommands: diffusion (trajectory export), stationary (regenerative
// estimation), ctmc (N-server occupancy chain), identities (stationary moment
// relations), hitting (first-passage replication), sweep <study> (scripted
// studies with verdicts), figure1 (stationary histograms).
//
// Every subcommand takes --seed, --out, --config (flat JSON whose keys match
// the long option names; explicit flags win) and writes all artifacts,
// including a manifest.json, under --out.
//
// Exit codes: 0 success, 1 usage/config error, 2 numerical failure,
// 3 study verdict failure (with --check).

#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jsqhw/experiments.hpp"
#include "jsqhw/identities.hpp"
#include "jsqhw/io.hpp"
#include "jsqhw/jsq_ctmc.hpp"
#include "jsqhw/version.hpp"

namespace {

using jsqhw::io::json;

// Thrown after a --check run whose verdicts contain a failure; mapped to
// exit code 3 in main.
struct VerdictFailure {};

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot read config file: " + path);
    json doc;
    try {
        is >> doc;
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    if (!doc.is_object()) throw std::invalid_argument("config must be a flat JSON object");
    return doc;
}

// Fill `var` from the config when the flag was not given on the command line.
template <typename T>
void merge(const json& cfg, const CLI::App& cmd, const std::string& flag, T& var) {
    if (!cfg.contains(flag)) return;
    if (cmd.get_option("--" + flag)->count() > 0) return; // explicit flag wins
    try {
        var = cfg.at(flag).get<T>();
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + flag + "' has the wrong type");
    }
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void write_manifest(const std::filesystem::path& out, const std::string& subcommand,
                    std::uint64_t seed, const json& config, const Timer& timer,
                    json module_params = json::object()) {
    jsqhw::io::RunManifest m;
    m.subcommand = subcommand;
    m.seed = seed;
    m.config = config;
    m.duration_seconds = timer.seconds();
    m.module_params = std::move(module_params);
    jsqhw::io::write_manifest(out, m);
}

// Shared options present on every subcommand.
struct Common {
    std::uint64_t seed = 1;
    std::string out = "out";
    int workers = 1;
    std::string config_path;

    void attach(CLI::App* cmd) {
        cmd->add_option("--seed", seed, "master seed (derived streams are indexed)");
        cmd->add_option("--out", out, "output directory");
        cmd->add_option("--workers", workers, "worker threads for replication fan-out");
        cmd->add_option("--config", config_path, "flat JSON config; explicit flags override");
    }

    json merge_common(const CLI::App& cmd) {
        const json cfg = load_config(config_path);
        merge(cfg, cmd, "seed", seed);
        merge(cfg, cmd, "out", out);
        merge(cfg, cmd, "workers", workers);
        if (workers < 1) throw std::invalid_argument("--workers must be >= 1");
        return cfg;
    }
};

// --- diffusion -----------------------------------------------------------------

void run_diffusion(CLI::App& cmd, Common& common, double beta, double dt, double horizon,
                   int stride, double q1, double q2) {
    const Timer timer;
    const json cfg = common.merge_common(cmd);
    merge(cfg, cmd, "beta", beta);
    merge(cfg, cmd, "dt", dt);
    merge(cfg, cmd, "horizon", horizon);
    merge(cfg, cmd, "stride", stride);
    merge(cfg, cmd, "q1", q1);
    merge(cfg, cmd, "q2", q2);

    auto params = jsqhw::make_params(beta, common.seed);
    if (dt > 0.0) params.dt = dt;
    jsqhw::DiffusionState s;
    s.q1 = q1;
    s.q2 = q2 > 0.0 ? q2 : 2.0 * jsqhw::default_B(beta);

    const auto traj = jsqhw::record_trajectory(s, params, horizon, stride);
    const std::filesystem::path out(common.out);
    jsqhw::io::write_trajectory_csv(out / "trajectory.csv", traj);

    const json resolved = {{"beta", beta},     {"dt", params.dt}, {"horizon", horizon},
                           {"stride", stride}, {"q1", s.q1},      {"q2", s.q2}};
    write_manifest(out, "diffusion", common.seed, resolved, timer,
                   {{"n_states", traj.size()}});
    std::cout << "wrote " << (out / "trajectory.csv").string() << " (" << traj.size()
              << " rows)\n";
}

// --- stationary ----------------------------------------------------------------

void run_stationary(CLI::App& cmd, Common& common, double beta, double dt, int cycles, double B,
                    double max_cycle_time, std::string se_method, std::string tail_coord,
                    std::vector<double> tail_levels) {
    const Timer timer;
    const json cfg = common.merge_common(cmd);
    merge(cfg, cmd, "beta", beta);
    merge(cfg, cmd, "dt", dt);
    merge(cfg, cmd, "cycles", cycles);
    merge(cfg, cmd, "B", B);
    merge(cfg, cmd, "max-cycle-time", max_cycle_time);
    merge(cfg, cmd, "se-method", se_method);
    merge(cfg, cmd, "tail-coord", tail_coord);
    merge(cfg, cmd, "tail-levels", tail_levels);

    auto params = jsqhw::make_params(beta, common.seed);
    if (dt > 0.0) params.dt = dt;

    jsqhw::RegenConfig rc;
    rc.B = B;
    rc.max_cycles = cycles;
    rc.max_time_per_cycle = max_cycle_time;
    rc.functionals.push_back({"q1", [](const jsqhw::DiffusionState& s) { return s.q1; }});
    rc.functionals.push_back({"q2", [](const jsqhw::DiffusionState& s) { return s.q2; }});
    rc.functionals.push_back({"q2_sq", [](const jsqhw::DiffusionState& s) { return s.q2 * s.q2; }});
    rc.functionals.push_back({"abs_q1", [](const jsqhw::DiffusionState& s) { return -s.q1; }});

    jsqhw::Coord coord = jsqhw::Coord::q2;
    if (!tail_coord.empty()) {
        if (tail_coord == "q1") coord = jsqhw::Coord::q1;
        else if (tail_coord == "q2") coord = jsqhw::Coord::q2;
        else throw std::invalid_argument("--tail-coord must be q1 or q2");
        if (tail_levels.empty())
            throw std::invalid_argument("--tail-levels is required with --tail-coord");
        jsqhw::add_tail_functionals(rc, coord, tail_levels);
    }

    if (se_method != "jackknife" && se_method != "delta")
        throw std::invalid_argument("--se-method must be delta or jackknife");
    const auto method =
        se_method == "jackknife" ? jsqhw::SeMethod::jackknife : jsqhw::SeMethod::delta;
    const auto set = jsqhw::run_cycles(params, rc, common.workers);

    const std::filesystem::path out(common.out);
    jsqhw::io::write_cycles_csv(out / "cycles.csv", set);

    json est = json::object();
    for (const std::string name : {"q1", "q2", "q2_sq", "abs_q1"}) {
        const auto e = jsqhw::estimate_stationary(set, name, method);
        est[name] = {{"value", e.value}, {"std_error", e.std_error}, {"n_cycles", e.n_cycles}};
    }
    const auto rate = jsqhw::estimate_local_time_rate(set, method);
    est["local_time_rate"] = {{"value", rate.value},
                              {"std_error", rate.std_error},
                              {"n_cycles", rate.n_cycles}};
    est["truncated_cycles"] = set.truncated_count();
    jsqhw::io::write_json(out / "estimates.json", est);

    if (!tail_coord.empty()) {
        const auto tc = jsqhw::tail_curve(set, coord, tail_levels);
        jsqhw::io::write_tail_csv(out / "tails.csv", tc);
    }

    const json resolved = {{"beta", beta},
                           {"dt", params.dt},
                           {"cycles", cycles},
                           {"B", set.B},
                           {"max-cycle-time", max_cycle_time},
                           {"se-method", se_method},
                           {"tail-coord", tail_coord},
                           {"tail-levels", tail_levels}};
    write_manifest(out, "stationary", common.seed, resolved, timer,
                   {{"complete_cycles", set.complete_count()},
                    {"truncated_cycles", set.truncated_count()}});
    std::cout << "q2 = " << est["q2"]["value"].get<double>() << " +- "
              << est["q2"]["std_error"].get<double>() << " (" << set.complete_count()
              << " cycles)\n";
}

// --- ctmc ------------------------------------------------------------------------

void run_ctmc(CLI::App& cmd, Common& common, int n, double beta, double horizon, double burn_in) {
    const Timer timer;
    const json cfg = common.merge_common(cmd);
    merge(cfg, cmd, "n", n);
    merge(cfg, cmd, "beta", beta);
    merge(cfg, cmd, "horizon", horizon);
    merge(cfg, cmd, "burn-in", burn_in);

    jsqhw::CtmcParams params{n, beta, common.seed};
    if (burn_in < 0.0) burn_in = jsqhw::default_ctmc_burn_in(n);

    const double rn = std::sqrt(static_cast<double>(n));
    std::vector<jsqhw::OccupancyFn> obs = {
        [n, rn](const jsqhw::OccupancyState& s) {
            return -static_cast<double>(n - s.busy()) / rn;
        },
        [rn](const jsqhw::OccupancyState& s) { return static_cast<double>(s.level(2)) / rn; },
        [](const jsqhw::OccupancyState& s) { return s.level(2) >= 1 ? 1.0 : 0.0; },
        [](const jsqhw::OccupancyState& s) { return s.level(3) >= 1 ? 1.0 : 0.0; },
    };
    const auto r = jsqhw::gillespie_run(params, horizon, burn_in, obs);

    const std::filesystem::path out(common.out);
    const json doc = {{"n", n},
                      {"beta", beta},
                      {"lambda", params.lambda()},
                      {"time_avg",
                       {{"q1bar", r.time_avg[0]},
                        {"q2bar", r.time_avg[1]},
                        {"frac_q2_pos", r.time_avg[2]},
                        {"frac_q3_pos", r.time_avg[3]}}},
                      {"batch_se",
                       {{"q1bar", r.batch_se[0]},
                        {"q2bar", r.batch_se[1]},
                        {"frac_q2_pos", r.batch_se[2]},
                        {"frac_q3_pos", r.batch_se[3]}}},
                      {"n_events", r.n_events}};
    jsqhw::io::write_json(out / "ctmc.json", doc);

    const json resolved = {{"n", n}, {"beta", beta}, {"horizon", horizon}, {"burn-in", burn_in}};
    write_manifest(out, "ctmc", common.seed, resolved, timer, {{"n_events", r.n_events}});
    std::cout << "q1bar = " << r.time_avg[0] << ", q2bar = " << r.time_avg[1] << " over "
              << r.n_events << " events\n";
}

// --- identities -------------------------------------------------------------------

void run_identities(CLI::App& cmd, Common& common, double beta, double dt, int cycles, int nmax) {
    const Timer timer;
    const json cfg = common.merge_common(cmd);
    merge(cfg, cmd, "beta", beta);
    merge(cfg, cmd, "dt", dt);
    merge(cfg, cmd, "cycles", cycles);
    merge(cfg, cmd, "nmax", nmax);

    auto params = jsqhw::make_params(beta, common.seed);
    if (dt > 0.0) params.dt = dt;

    jsqhw::RegenConfig rc;
    rc.max_cycles = cycles;
    for (auto& f : jsqhw::identity_functionals(beta, nmax)) rc.functionals.push_back(f);
    const auto set = jsqhw::run_cycles(params, rc, common.workers);
    const auto reports = jsqhw::identity_checks(set, beta, nmax);

    const std::filesystem::path out(common.out);
    {
        auto os = jsqhw::io::open_out(out / "identities.csv");
        os << "name,n,lhs,lhs_se,rhs,rhs_se,z\n";
        for (const auto& r : reports)
            os << r.name << ',' << r.n << ',' << jsqhw::io::fmt(r.lhs) << ','
               << jsqhw::io::fmt(r.lhs_se) << ',' << jsqhw::io::fmt(r.rhs) << ','
               << jsqhw::io::fmt(r.rhs_se) << ',' << jsqhw::io::fmt(r.z) << '\n';
    }
    json arr = json::array();
    double worst = 0.0;
    for (const auto& r : reports) {
        arr.push_back({{"name", r.name},
                       {"lhs", r.lhs},
                       {"lhs_se", r.lhs_se},
                       {"rhs", r.rhs},
                       {"rhs_se", r.rhs_se},
                       {"z", r.z}});
        worst = std::max(worst, std::fabs(r.z));
    }
    jsqhw::io::write_json(out / "identities.json", arr);

    const json resolved = {{"beta", beta}, {"dt", params.dt}, {"cycles", cycles}, {"nmax", nmax}};
    write_manifest(out, "identities", common.seed, resolved, timer, {{"max_abs_z", worst}});
    std::cout << reports.size() << " identities, max |z| = " << worst << '\n';
}

// --- hitting -----------------------------------------------------------------------

void run_hitting(CLI::App& cmd, Common& common, double beta, double dt, double q1, double q2,
                 std::string coord, double level, int reps, double max_time) {
    const Timer timer;
    const json cfg = common.merge_common(cmd);
    merge(cfg, cmd, "beta", beta);
    merge(cfg, cmd, "dt", dt);
    merge(cfg, cmd, "q1", q1);
    merge(cfg, cmd, "q2", q2);
    merge(cfg, cmd, "coord", coord);
    merge(cfg, cmd, "level", level);
    merge(cfg, cmd, "reps", reps);
    merge(cfg, cmd, "max-time", max_time);

    if (coord != "q1" && coord != "q2")
        throw std::invalid_argument("--coord must be q1 or q2");
    if (reps < 2) throw std::invalid_argument("--reps must be >= 2");

    auto params = jsqhw::make_params(beta, common.seed);
    if (dt > 0.0) params.dt = dt;
    jsqhw::DiffusionState start;
    start.q1 = q1;
    start.q2 = q2 > 0.0 ? q2 : 2.0 * jsqhw::default_B(beta);

    std::vector<jsqhw::HittingResult> results(static_cast<std::size_t>(reps));
    jsqhw::parallel_for_indexed(results.size(), common.workers, [&](std::size_t i) {
        auto p = params;
        p.seed = jsqhw::derive_seed(params.seed, i);
        results[i] = coord == "q1" ? jsqhw::hitting_time_q1(start, p, level, max_time)
                                   : jsqhw::hitting_time_q2(start, p, level, max_time);
    });

    const std::filesystem::path out(common.out);
    {
        auto os = jsqhw::io::open_out(out / "times.csv");
        os << "rep,hit,time\n";
        for (std::size_t i = 0; i < results.size(); ++i)
            os << i << ',' << (results[i].hit ? 1 : 0) << ','
               << jsqhw::io::fmt(results[i].hit ? results[i].time : results[i].truncated_at)
               << '\n';
    }

    double sum = 0.0;
    int n_hit = 0;
    for (const auto& r : results)
        if (r.hit) {
            sum += r.time;
            ++n_hit;
        }
    if (n_hit < 2) throw jsqhw::NumericalError("hitting: fewer than 2 completed replications");
    const double mean = sum / n_hit;
    double ss = 0.0;
    for (const auto& r : results)
        if (r.hit) ss += (r.time - mean) * (r.time - mean);
    const double se = std::sqrt(ss / (n_hit - 1.0) / n_hit);

    const json doc = {{"mean", mean},
                      {"std_error", se},
                      {"n_hit", n_hit},
                      {"n_truncated", reps - n_hit}};
    jsqhw::io::write_json(out / "hitting.json", doc);

    const json resolved = {{"beta", beta},   {"dt", params.dt}, {"q1", start.q1},
                           {"q2", start.q2}, {"coord", coord},  {"level", level},
                           {"reps", reps},   {"max-time", max_time}};
    write_manifest(out, "hitting", common.seed, resolved, timer);
    std::cout << "mean first-passage time = " << mean << " +- " << se << " (" << n_hit << "/"
              << reps << " hit)\n";
}

// --- sweep --------------------------------------------------------------------------

void run_sweep(CLI::App& cmd, Common& common, std::string study, std::vector<double> betas,
               int cycles, int reps, bool check) {
    const Timer timer;
    const json cfg = common.merge_common(cmd);
    merge(cfg, cmd, "betas", betas);
    merge(cfg, cmd, "cycles", cycles);
    merge(cfg, cmd, "reps", reps);

    jsqhw::experiments::SweepSpec spec;
    spec.betas = betas;
    spec.cycles = cycles;
    spec.reps = reps;
    spec.seed = common.seed;
    spec.workers = common.workers;

    jsqhw::experiments::StudyReport report;
    if (study == "gamma") report = jsqhw::experiments::gamma_limit_study(spec);
    else if (study == "gaussian") report = jsqhw::experiments::gaussian_limit_study(spec);
    else if (study == "q1tail") report = jsqhw::experiments::q1_small_beta_tail_study(spec);
    else if (study == "hitting") report = jsqhw::experiments::hitting_time_studies(spec);
    else if (study == "interchange") report = jsqhw::experiments::interchange_study(spec);
    else
        throw std::invalid_argument(
            "unknown study '" + study +
            "' (expected gamma, gaussian, q1tail, hitting or interchange)");

    const std::filesystem::path out(common.out);
    jsqhw::experiments::write_study(report, out);

    const json resolved = {{"study", study}, {"betas", betas},  {"cycles", cycles},
                           {"reps", reps},   {"check", check}};
    write_manifest(out, "sweep", common.seed, resolved, timer,
                   {{"all_pass", report.all_pass()}});

    int failed = 0;
    for (const auto& c : report.checks) {
        std::cout << (c.pass ? "pass " : "FAIL ") << c.name << " (measured "
                  << jsqhw::io::fmt(c.measured) << ")\n";
        failed += c.pass ? 0 : 1;
    }
    std::cout << report.study << ": " << (report.checks.size() - failed) << "/"
              << report.checks.size() << " checks passed\n";
    if (check && failed > 0) throw VerdictFailure{};
}

// --- figure1 -------------------------------------------------------------------------

void run_figure1(CLI::App& cmd, Common& common, std::vector<double> betas, double horizon,
                 int bins, bool check) {
    const Timer timer;
    const json cfg = common.merge_common(cmd);
    merge(cfg, cmd, "betas", betas);
    merge(cfg, cmd, "horizon", horizon);
    merge(cfg, cmd, "bins", bins);

    jsqhw::experiments::SweepSpec spec;
    spec.betas = betas;
    spec.seed = common.seed;
    spec.workers = common.workers;

    const auto fig = jsqhw::experiments::figure1(spec, horizon, bins);
    const std::filesystem::path out(common.out);
    for (const auto& h : fig.histograms) {
        const std::string name =
            "hist_" + h.coordinate + "_beta_" + jsqhw::io::fmt(h.beta) + ".csv";
        jsqhw::io::write_histogram_csv(out / name, h.coordinate, h.hist);
    }
    jsqhw::experiments::write_study(fig.report, out);

    const json resolved = {{"betas", betas}, {"horizon", horizon}, {"bins", bins},
                           {"check", check}};
    write_manifest(out, "figure1", common.seed, resolved, timer,
                   {{"n_histograms", fig.histograms.size()}});

    int failed = 0;
    for (const auto& c : fig.report.checks) failed += c.pass ? 0 : 1;
    std::cout << "figure1: " << fig.histograms.size() << " histograms, "
              << (fig.report.checks.size() - failed) << "/" << fig.report.checks.size()
              << " checks passed\n";
    if (check && failed > 0) throw VerdictFailure{};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulation laboratory for a two-dimensional reflected diffusion with "
                 "regenerative stationary estimation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(jsqhw::version_string));

    try {
        // diffusion
        auto* d = app.add_subcommand("diffusion", "integrate one path and export it as CSV");
        Common dc;
        double d_beta = 1.0, d_dt = 0.0, d_horizon = 10.0, d_q1 = 0.0, d_q2 = 0.0;
        int d_stride = 1;
        d->add_option("--beta", d_beta, "drift parameter (> 0)");
        d->add_option("--dt", d_dt, "step size (0 = automatic)");
        d->add_option("--horizon", d_horizon, "time horizon");
        d->add_option("--stride", d_stride, "export every k-th step");
        d->add_option("--q1", d_q1, "initial q1 (<= 0)");
        d->add_option("--q2", d_q2, "initial q2 (0 = default start 2B)");
        dc.attach(d);
        d->callback([&] { run_diffusion(*d, dc, d_beta, d_dt, d_horizon, d_stride, d_q1, d_q2); });

        // stationary
        auto* s = app.add_subcommand("stationary", "regenerative stationary estimation");
        Common sc;
        double s_beta = 1.0, s_dt = 0.0, s_B = 0.0, s_cap = 1e6;
        int s_cycles = 200;
        std::string s_method = "delta", s_tail_coord;
        std::vector<double> s_tail_levels;
        s->add_option("--beta", s_beta, "drift parameter (> 0)");
        s->add_option("--dt", s_dt, "step size (0 = automatic)");
        s->add_option("--cycles", s_cycles, "number of regeneration cycles");
        s->add_option("--B", s_B, "regeneration level (0 = automatic)");
        s->add_option("--max-cycle-time", s_cap, "per-cycle truncation cap");
        s->add_option("--se-method", s_method, "standard error method: delta or jackknife");
        s->add_option("--tail-coord", s_tail_coord, "tail coordinate: q1 or q2");
        s->add_option("--tail-levels", s_tail_levels, "tail levels (comma separated)")
            ->delimiter(',');
        sc.attach(s);
        s->callback([&] {
            run_stationary(*s, sc, s_beta, s_dt, s_cycles, s_B, s_cap, s_method, s_tail_coord,
                           s_tail_levels);
        });

        // ctmc
        auto* c = app.add_subcommand("ctmc", "N-server occupancy chain time averages");
        Common cc;
        int c_n = 100;
        double c_beta = 1.0, c_horizon = 1000.0, c_burn = -1.0;
        c->add_option("--n", c_n, "number of servers");
        c->add_option("--beta", c_beta, "drift parameter (0 < beta < sqrt(N))");
        c->add_option("--horizon", c_horizon, "time horizon");
        c->add_option("--burn-in", c_burn, "burn-in (negative = automatic)");
        cc.attach(c);
        c->callback([&] { run_ctmc(*c, cc, c_n, c_beta, c_horizon, c_burn); });

        // identities
        auto* i = app.add_subcommand("identities", "score the stationary moment identities");
        Common ic;
        double i_beta = 1.0, i_dt = 0.0;
        int i_cycles = 500, i_nmax = 2;
        i->add_option("--beta", i_beta, "drift parameter (> 0)");
        i->add_option("--dt", i_dt, "step size (0 = automatic)");
        i->add_option("--cycles", i_cycles, "number of regeneration cycles");
        i->add_option("--nmax", i_nmax, "highest moment order");
        ic.attach(i);
        i->callback([&] { run_identities(*i, ic, i_beta, i_dt, i_cycles, i_nmax); });

        // hitting
        auto* h = app.add_subcommand("hitting", "replicated first-passage times");
        Common hc;
        double h_beta = 1.0, h_dt = 0.0, h_q1 = 0.0, h_q2 = 0.0, h_level = 0.0, h_max = 1e4;
        int h_reps = 200;
        std::string h_coord = "q2";
        h->add_option("--beta", h_beta, "drift parameter (> 0)");
        h->add_option("--dt", h_dt, "step size (0 = automatic)");
        h->add_option("--q1", h_q1, "initial q1 (<= 0)");
        h->add_option("--q2", h_q2, "initial q2 (0 = default start 2B)");
        h->add_option("--coord", h_coord, "coordinate to watch: q1 or q2");
        h->add_option("--level", h_level, "target level");
        h->add_option("--reps", h_reps, "replications");
        h->add_option("--max-time", h_max, "per-replication time budget");
        hc.attach(h);
        h->callback([&] {
            run_hitting(*h, hc, h_beta, h_dt, h_q1, h_q2, h_coord, h_level, h_reps, h_max);
        });

        // sweep
        auto* w = app.add_subcommand("sweep", "run a scripted study and write verdicts");
        Common wc;
        std::string w_study;
        std::vector<double> w_betas;
        int w_cycles = 0, w_reps = 0;
        bool w_check = false;
        w->add_option("study", w_study,
                      "study name: gamma, gaussian, q1tail, hitting or interchange")
            ->required();
        w->add_option("--betas", w_betas, "beta grid override (comma separated)")->delimiter(',');
        w->add_option("--cycles", w_cycles, "cycle count override (0 = study default)");
        w->add_option("--reps", w_reps, "replication/horizon override (0 = study default)");
        w->add_flag("--check", w_check, "exit 3 when any verdict fails");
        wc.attach(w);
        w->callback([&] { run_sweep(*w, wc, w_study, w_betas, w_cycles, w_reps, w_check); });

        // figure1
        auto* f = app.add_subcommand("figure1", "stationary histograms of -q1 and q2");
        Common fc;
        std::vector<double> f_betas;
        double f_horizon = 1.5e4;
        int f_bins = 60;
        bool f_check = false;
        f->add_option("--betas", f_betas, "beta values (default 0.1, 1, 3)")->delimiter(',');
        f->add_option("--horizon", f_horizon, "averaging window after burn-in");
        f->add_option("--bins", f_bins, "histogram bins");
        f->add_flag("--check", f_check, "exit 3 when any verdict fails");
        fc.attach(f);
        f->callback([&] { run_figure1(*f, fc, f_betas, f_horizon, f_bins, f_check); });

        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const VerdictFailure&) {
        std::cerr << "verdict failure: at least one study check failed\n";
        return 3;
    } catch (const jsqhw::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
