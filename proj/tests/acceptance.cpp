// Acceptance gate: twelve pinned statistical criteria, each printed as one
// PASS/FAIL line with its measured values and targets.
//
//   usage: acceptance [k]     k = 1..12 selects one criterion; none runs all
//
// Exit code 0 iff every selected criterion passes.  Tolerances are fixed here
// on purpose: a criterion that cannot be met by a faithful implementation is
// allowed to fail and must be explained in the project notes, never loosened.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "jsqhw/analytic.hpp"
#include "jsqhw/diffusion.hpp"
#include "jsqhw/experiments.hpp"
#include "jsqhw/identities.hpp"
#include "jsqhw/jsq_ctmc.hpp"
#include "jsqhw/regeneration.hpp"
#include "jsqhw/rng.hpp"
#include "jsqhw/stats.hpp"

namespace {

using namespace jsqhw;
namespace an = jsqhw::analytic;

constexpr std::uint64_t kMaster = 0x5EED2026u;

std::uint64_t seed_for(int criterion, int leg = 0) {
    return derive_seed(kMaster, static_cast<std::uint64_t>(criterion) * 1000u +
                                    static_cast<std::uint64_t>(leg));
}

std::string num(double x, int prec = 4) {
    std::ostringstream os;
    os << std::setprecision(prec) << x;
    return os.str();
}

// One criterion verdict: a conjunction of labelled subchecks plus free-form
// informational fields.
struct Verdict {
    bool pass = true;
    std::string detail;

    void add(bool ok, const std::string& text) {
        pass = pass && ok;
        append(text + (ok ? " ok" : " FAIL"));
    }
    void info(const std::string& text) { append(text); }

private:
    void append(const std::string& text) {
        if (!detail.empty()) detail += "; ";
        detail += text;
    }
};

double find_z(const std::vector<IdentityReport>& reports, const std::string& name) {
    for (const auto& r : reports)
        if (r.name == name) return r.z;
    throw std::logic_error("identity report missing: " + name);
}

// Mean and standard error of the cycle length over complete cycles.
struct XiStat {
    double mean = 0.0;
    double se = 0.0;
    int n = 0;
};

XiStat xi_stat(const CycleSet& set) {
    XiStat st;
    for (const auto& c : set.cycles)
        if (!c.truncated) {
            st.mean += c.xi;
            ++st.n;
        }
    if (st.n < 2) throw NumericalError("xi_stat: fewer than 2 complete cycles");
    st.mean /= st.n;
    double ss = 0.0;
    for (const auto& c : set.cycles)
        if (!c.truncated) ss += (c.xi - st.mean) * (c.xi - st.mean);
    st.se = std::sqrt(ss / (st.n - 1.0) / st.n);
    return st;
}

// --- 1: two-sided exit probability of the drifted free motion ---------------------

// The integrator with reflection, coupling and mean reversion all disabled is
// exactly the Euler scheme for sqrt(2) W - beta t; its simulated two-sided
// exit probability must match the closed-form scale-function value.
Verdict criterion1() {
    const double a = 1.0, b = 1.0, beta = 1.0;
    const int reps = 100000;
    DiffusionParams p;
    p.beta = beta;
    p.dt = 1e-3;
    const StepMode free_motion{false, false, false};

    long up = 0;
    for (int i = 0; i < reps; ++i) {
        NormalRng rng(derive_seed(seed_for(1), static_cast<std::uint64_t>(i)));
        DiffusionState s; // q1 plays the role of the free coordinate
        s.q1 = 0.0;
        for (;;) {
            s = step(s, p, rng.normal(), free_motion);
            if (s.q1 >= a) {
                ++up;
                break;
            }
            if (s.q1 <= -b) break;
        }
    }
    const double phat = static_cast<double>(up) / reps;
    const double oracle = an::bm_exit_prob({a, b, beta});
    const double se = std::sqrt(phat * (1.0 - phat) / reps);
    const double tol = 3.0 * se + 0.01;

    Verdict v;
    v.add(std::fabs(phat - oracle) <= tol, "|p_hat-oracle|=" + num(std::fabs(phat - oracle)) +
                                               "<=" + num(tol) + " (p_hat=" + num(phat) +
                                               ", oracle=" + num(oracle) + ")");
    return v;
}

// --- 2: first-passage survival of the pure mean-reverting mode --------------------

// With only mean reversion enabled and beta = 0 the step is the Euler scheme
// for dX = -X dt + sqrt(2) dW; the probability of not reaching 0 from -1 by
// t = 1 has a closed form via the Brownian time change.
Verdict criterion2() {
    DiffusionParams p;
    p.beta = 0.0; // harness-only: step() never validates, and beta=0 gives the pure OU drift
    p.dt = 2.5e-4;
    const StepMode ou_mode{false, false, true};
    const double x0 = -1.0, t_end = 1.0;
    const int reps = 40000;
    const auto n_steps = static_cast<int>(std::llround(t_end / p.dt));

    long survived = 0;
    for (int i = 0; i < reps; ++i) {
        NormalRng rng(derive_seed(seed_for(2), static_cast<std::uint64_t>(i)));
        DiffusionState s;
        s.q1 = x0;
        bool hit = false;
        for (int k = 0; k < n_steps && !hit; ++k) {
            s = step(s, p, rng.normal(), ou_mode);
            hit = s.q1 >= 0.0;
        }
        survived += hit ? 0 : 1;
    }
    const double phat = static_cast<double>(survived) / reps;
    const double oracle = an::ou_hit_zero_tail(x0, t_end);
    const double se = std::sqrt(phat * (1.0 - phat) / reps);
    const double tol = 3.0 * se + 0.01;

    Verdict v;
    v.add(std::fabs(phat - oracle) <= tol, "|survival-oracle|=" + num(std::fabs(phat - oracle)) +
                                               "<=" + num(tol) + " (measured=" + num(phat) +
                                               ", oracle=" + num(oracle) + ")");
    return v;
}

// --- 3: stationary identities at beta = 1 ------------------------------------------

// Local-time rate balance and the first two mixed-moment relations must hold
// within 3 standard errors on 3000 cycles at a fine step.
Verdict criterion3() {
    const double beta = 1.0;
    auto params = make_params(beta, seed_for(3));
    params.dt = 2.5e-4;
    RegenConfig cfg;
    cfg.max_cycles = 3000;
    for (auto& f : identity_functionals(beta, 1)) cfg.functionals.push_back(f);
    const auto set = run_cycles(params, cfg);
    const auto reports = identity_checks(set, beta, 1);

    Verdict v;
    for (const char* name : {"rate", "mix[n=0]", "mix[n=1]"}) {
        const double z = find_z(reports, name);
        v.add(std::fabs(z) <= 3.0, std::string("|z_") + name + "|=" + num(std::fabs(z)) + "<=3");
    }
    return v;
}

// --- 4: gamma law of beta*q2 at beta = 0.1 -----------------------------------------

// Small-beta limit law: beta*Q2 should approach Gamma(2,1) in distribution
// and in its first two moments.  beta is pinned at 0.1.
Verdict criterion4() {
    const double beta = 0.1;
    auto params = make_params(beta, seed_for(4));
    // The boundary layer has width O(beta); resolving it needs dt well below
    // beta^2, otherwise the one-step overshoot inflates the local-time noise.
    params.dt = 4e-5;
    RegenConfig cfg;
    cfg.max_cycles = 300;
    cfg.functionals.push_back({"q2", [](const DiffusionState& s) { return s.q2; }});
    cfg.functionals.push_back({"q2_sq", [](const DiffusionState& s) { return s.q2 * s.q2; }});
    cfg.samples.push_back(
        {"bq2", [beta](const DiffusionState& s) { return beta * s.q2; }, 10000});
    const auto set = run_cycles(params, cfg);

    const auto eq2 = estimate_stationary(set, "q2");
    const auto eq2sq = estimate_stationary(set, "q2_sq");
    const double mean = beta * eq2.value;
    const double m2 = beta * beta * eq2sq.value;
    const double ks = ks_distance(set.samples.at("bq2"), an::gamma2_cdf);

    Verdict v;
    v.add(ks <= 0.05, "ks=" + num(ks) + "<=0.05");
    v.add(std::fabs(mean - 2.0) <= 0.3,
          "mean=" + num(mean) + " in 2+-0.3 (se=" + num(beta * eq2.std_error) + ")");
    v.add(std::fabs(m2 - 6.0) <= 1.0,
          "m2=" + num(m2) + " in 6+-1 (se=" + num(beta * beta * eq2sq.std_error) + ")");
    return v;
}

// --- 5: gaussian law of q1 + beta at beta = 3 --------------------------------------

// Large-beta limit law for the centered first coordinate: zero mean, finite
// and stable fourth moment, pinned second-moment window, and the
// two-variance KS comparison reported alongside.
Verdict criterion5() {
    const double beta = 3.0;
    auto params = make_params(beta, seed_for(5));
    RegenConfig cfg;
    cfg.max_cycles = 800;
    for (int k = 1; k <= 4; ++k)
        cfg.functionals.push_back({"x" + std::to_string(k), [beta, k](const DiffusionState& s) {
                                       double r = 1.0;
                                       for (int i = 0; i < k; ++i) r *= s.q1 + beta;
                                       return r;
                                   }});
    cfg.samples.push_back({"x", [beta](const DiffusionState& s) { return s.q1 + beta; }, 8});
    const auto set = run_cycles(params, cfg);

    const auto m1 = estimate_stationary(set, "x1");
    const auto m2 = estimate_stationary(set, "x2");
    const auto m4 = estimate_stationary(set, "x4");
    CycleSet half = set;
    half.cycles.assign(set.cycles.begin(),
                       set.cycles.begin() + static_cast<long>(set.cycles.size() / 2));
    const auto m4h = estimate_stationary(half, "x4");

    const auto& xs = set.samples.at("x");
    const double ks1 = ks_distance(xs, [](double t) { return an::normal_cdf(t); });
    const double ks2 = ks_distance(xs, [](double t) { return an::normal_cdf(t / std::sqrt(2.0)); });

    Verdict v;
    v.add(std::fabs(m1.value) <= 3.0 * m1.std_error,
          "|mean_x|=" + num(std::fabs(m1.value)) + "<=3se=" + num(3.0 * m1.std_error));
    v.add(std::fabs(m4h.value - m4.value) <=
              3.0 * std::sqrt(m4h.std_error * m4h.std_error + m4.std_error * m4.std_error),
          "m4 doubling drift=" + num(std::fabs(m4h.value - m4.value)) + " (m4=" + num(m4.value) +
              ")");
    v.add(std::fabs(m2.value - 2.0) <= 0.3, "m2=" + num(m2.value) + " in 2+-0.3");
    v.info("ks_var1=" + num(ks1) + ", ks_var2=" + num(ks2) + " (reported, not gated)");
    return v;
}

// --- 6: small-beta mean scaling -----------------------------------------------------

// beta * E[Q2] must be flat within a factor 1.5 across beta in {0.05,0.1,0.2}.
Verdict criterion6() {
    const double betas[] = {0.05, 0.1, 0.2};
    double lo = 0.0, hi = 0.0;
    std::string parts;
    int leg = 0;
    for (const double beta : betas) {
        auto params = make_params(beta, seed_for(6, leg++));
        RegenConfig cfg;
        cfg.max_cycles = 250;
        cfg.functionals.push_back({"q2", [](const DiffusionState& s) { return s.q2; }});
        const auto set = run_cycles(params, cfg);
        const double v = beta * estimate_stationary(set, "q2").value;
        if (parts.empty()) {
            lo = hi = v;
        } else {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        parts += (parts.empty() ? "" : ", ") + num(v);
    }
    Verdict v;
    v.add(hi / lo <= 1.5, "max/min=" + num(hi / lo) + "<=1.5 (beta*E[q2]=" + parts + ")");
    return v;
}

// --- 7: q2 tail decay-rate proportionality ------------------------------------------

// Fitted exponential decay rates of the q2 tail at beta=0.2 vs beta=0.1 must
// have ratio 2 within 30%, each fit with R^2 >= 0.9.  The fit window
// beta*y in [2, 7] is the well-sampled part of the tail: deeper levels are
// visited by a handful of excursions per run and the fitted slope there is
// an artifact of which excursions happened to occur.
Verdict criterion7() {
    struct Leg {
        double beta;
        int cycles;
    };
    const Leg legs[] = {{0.1, 1500}, {0.2, 3000}};
    double rates[2] = {0.0, 0.0};
    double r2s[2] = {0.0, 0.0};

    for (int i = 0; i < 2; ++i) {
        const double beta = legs[i].beta;
        std::vector<double> levels;
        for (double u = 2.0; u <= 7.01; u += 1.0) levels.push_back(u / beta);
        auto params = make_params(beta, seed_for(7, i));
        RegenConfig cfg;
        cfg.max_cycles = legs[i].cycles;
        add_tail_functionals(cfg, Coord::q2, levels);
        const auto set = run_cycles(params, cfg);
        const auto tc = tail_curve(set, Coord::q2, levels);
        std::vector<double> logs;
        for (const double p : tc.corrected) logs.push_back(std::log(p));
        const auto fit = tail_slope(levels, logs);
        rates[i] = fit.decay_rate;
        r2s[i] = fit.r_squared;
    }
    const double ratio = rates[1] / rates[0];

    Verdict v;
    v.add(std::fabs(ratio - 2.0) <= 0.6, "rate ratio=" + num(ratio) + " in 2+-0.6 (rates " +
                                             num(rates[0]) + ", " + num(rates[1]) + ")");
    v.add(r2s[0] >= 0.9, "r2(beta=0.1)=" + num(r2s[0]) + ">=0.9");
    v.add(r2s[1] >= 0.9, "r2(beta=0.2)=" + num(r2s[1]) + ">=0.9");
    return v;
}

// --- 8: median-vs-mean collapse of q2 at beta = 3 -----------------------------------

// The stationary mass of q2 sits at far smaller values than its mean at large
// beta; the median must undercut the mean by at least a factor of ten.
Verdict criterion8() {
    const double beta = 3.0;
    auto params = make_params(beta, seed_for(8));
    RegenConfig cfg;
    cfg.max_cycles = 300;
    cfg.functionals.push_back({"q2", [](const DiffusionState& s) { return s.q2; }});
    cfg.samples.push_back({"q2s", [](const DiffusionState& s) { return s.q2; }, 16});
    const auto set = run_cycles(params, cfg);

    const double mean = estimate_stationary(set, "q2").value;
    const double median = weighted_quantile(set.samples.at("q2s"), 0.5);
    const double ratio = median / mean;

    Verdict v;
    v.add(mean > 0.0 && ratio <= 0.1, "median/mean=" + num(ratio) + "<=0.1 (median=" +
                                          num(median) + ", mean=" + num(mean) + ")");
    return v;
}

// --- 9: regenerative vs time-average estimator agreement ----------------------------

// The two estimators of E[Q2] at beta = 1 use disjoint seeds and disjoint
// variance mechanisms (cycle ratios vs batch means) and must agree within 3
// combined standard errors.
Verdict criterion9() {
    const double beta = 1.0;
    auto p_regen = make_params(beta, seed_for(9, 1));
    RegenConfig cfg;
    cfg.max_cycles = 800;
    cfg.functionals.push_back({"q2", [](const DiffusionState& s) { return s.q2; }});
    const auto regen = estimate_stationary(run_cycles(p_regen, cfg), "q2");

    auto p_avg = make_params(beta, seed_for(9, 2));
    const auto avg = time_average_estimate(
        p_avg, [](const DiffusionState& s) { return s.q2; }, 4000.0, 100.0);

    const double gap = std::fabs(regen.value - avg.value);
    const double tol =
        3.0 * std::sqrt(regen.std_error * regen.std_error + avg.std_error * avg.std_error);

    Verdict v;
    v.add(gap <= tol, "|regen-timeavg|=" + num(gap) + "<=" + num(tol) + " (regen=" +
                          num(regen.value) + ", timeavg=" + num(avg.value) + ")");
    return v;
}

// --- 10: cycle-length scaling --------------------------------------------------------

// Small beta: E[cycle length] * beta^2 flat within factor 1.5 over
// {0.05,0.1,0.2}.  Large beta: log E[cycle length] convex increasing over
// {2,2.5,3}.
Verdict criterion10() {
    Verdict v;
    {
        const double betas[] = {0.05, 0.1, 0.2};
        double lo = 0.0, hi = 0.0;
        std::string parts;
        int leg = 0;
        for (const double beta : betas) {
            auto params = make_params(beta, seed_for(10, leg++));
            RegenConfig cfg;
            cfg.max_cycles = 400;
            const auto st = xi_stat(run_cycles(params, cfg));
            const double val = st.mean * beta * beta;
            if (parts.empty()) {
                lo = hi = val;
            } else {
                lo = std::min(lo, val);
                hi = std::max(hi, val);
            }
            parts += (parts.empty() ? "" : ", ") + num(val);
        }
        v.add(hi / lo <= 1.5,
              "small-beta: max/min of E[xi]*beta^2=" + num(hi / lo) + "<=1.5 (" + parts + ")");
    }
    {
        const double betas[] = {2.0, 2.5, 3.0};
        double logs[3] = {0.0, 0.0, 0.0};
        for (int i = 0; i < 3; ++i) {
            auto params = make_params(betas[i], seed_for(10, 10 + i));
            RegenConfig cfg;
            cfg.max_cycles = 1200;
            logs[i] = std::log(xi_stat(run_cycles(params, cfg)).mean);
        }
        v.add(logs[1] > logs[0] && logs[2] > logs[1],
              "large-beta: log E[xi] increasing (" + num(logs[0]) + ", " + num(logs[1]) + ", " +
                  num(logs[2]) + ")");
        const double second_diff = (logs[2] - logs[1]) - (logs[1] - logs[0]);
        v.add(second_diff >= 0.0, "large-beta: log E[xi] convex (second diff=" +
                                      num(second_diff) + ">=0)");
    }
    return v;
}

// --- 11: pre-limit chain vs diffusion ------------------------------------------------

// N = 1 reduces to the single-server queue with geometric occupancy tails
// (run at its own beta = 0.5, since N = 1 requires beta < 1); at N = 500,
// beta = 1 the scaled second occupancy coordinate must be within 20% of the
// diffusion's stationary E[Q2].
Verdict criterion11() {
    Verdict v;
    {
        CtmcParams p1{1, 0.5, seed_for(11, 1)};
        std::vector<OccupancyFn> obs;
        for (int i = 1; i <= 3; ++i)
            obs.push_back([i](const OccupancyState& s) { return s.level(i) >= 1 ? 1.0 : 0.0; });
        const auto r = gillespie_run(p1, 2e5, 50.0, obs);
        const double rho = p1.lambda(); // single unit-rate server
        for (int i = 1; i <= 3; ++i) {
            const double gap = std::fabs(r.time_avg[i - 1] - an::mm1_tail(rho, i));
            v.add(gap <= 3.0 * r.batch_se[i - 1],
                  "N=1 tail i=" + std::to_string(i) + ": |gap|=" + num(gap) +
                      "<=3se=" + num(3.0 * r.batch_se[i - 1]));
        }
    }
    {
        const double beta = 1.0;
        auto params = make_params(beta, seed_for(11, 2));
        params.dt = 2.5e-4;
        RegenConfig cfg;
        cfg.max_cycles = 3000;
        cfg.functionals.push_back({"q2", [](const DiffusionState& s) { return s.q2; }});
        const auto ref = estimate_stationary(run_cycles(params, cfg), "q2");

        CtmcParams p500{500, beta, seed_for(11, 3)};
        const double rn = std::sqrt(500.0);
        std::vector<OccupancyFn> obs = {
            [rn](const OccupancyState& s) { return static_cast<double>(s.level(2)) / rn; },
            [rn](const OccupancyState& s) { return -static_cast<double>(500 - s.busy()) / rn; }};
        const auto r = gillespie_run(p500, 2e4, default_ctmc_burn_in(500), obs);

        const double rel_gap = std::fabs(r.time_avg[0] - ref.value) / ref.value;
        v.add(rel_gap <= 0.20, "N=500 interchange gap=" + num(rel_gap) +
                                   "<=0.20 (chain=" + num(r.time_avg[0]) +
                                   ", diffusion=" + num(ref.value) + ")");
        v.info("N=500 scaled first coordinate=" + num(r.time_avg[1]) + " (diffusion mean -beta=" +
               num(-beta) + ", reported)");
    }
    return v;
}

// --- 12: stationary histogram shape --------------------------------------------------

// Default histogram run (beta in {0.1, 1, 3}): at beta=3 the q2 mass must
// concentrate in the leftmost bin with >= 80% below 0.1, and at beta=0.1 the
// -q1 mass must sit >= 80% below 0.5.  Bin masses must sum to one exactly.
Verdict criterion12() {
    experiments::SweepSpec spec;
    spec.seed = seed_for(12);
    const auto fig = experiments::figure1(spec);

    Verdict v;
    for (const auto& c : fig.report.checks) {
        if (c.name == "q2_modal_bin_leftmost_beta3" || c.name == "q2_mass_below_0.1_beta3" ||
            c.name == "neg_q1_mass_below_0.5_beta0.1") {
            v.add(c.pass, c.name + "=" + num(c.measured));
        } else {
            v.pass = v.pass && c.pass; // mass-sum consistency checks, silent unless broken
            if (!c.pass) v.add(false, c.name + "=" + num(c.measured));
        }
    }
    return v;
}

struct Entry {
    int id;
    const char* name;
    Verdict (*fn)();
};

const Entry kEntries[] = {
    {1, "two-sided exit vs scale-function oracle", criterion1},
    {2, "mean-reverting first-passage survival vs oracle", criterion2},
    {3, "stationary identities at beta=1", criterion3},
    {4, "gamma law of beta*q2 at beta=0.1", criterion4},
    {5, "gaussian law of q1+beta at beta=3", criterion5},
    {6, "small-beta mean scaling of q2", criterion6},
    {7, "q2 tail decay-rate proportionality", criterion7},
    {8, "median-vs-mean collapse of q2 at beta=3", criterion8},
    {9, "regenerative vs time-average agreement", criterion9},
    {10, "cycle-length scaling laws", criterion10},
    {11, "pre-limit chain vs diffusion", criterion11},
    {12, "stationary histogram shape", criterion12},
};

} // namespace

int main(int argc, char** argv) {
    int selected = 0;
    if (argc >= 2) {
        selected = std::atoi(argv[1]);
        if (selected < 1 || selected > 12) {
            std::fprintf(stderr, "usage: acceptance [1..12]\n");
            return 2;
        }
    }

    bool all_pass = true;
    for (const auto& e : kEntries) {
        if (selected != 0 && e.id != selected) continue;
        Verdict v;
        try {
            v = e.fn();
        } catch (const std::exception& ex) {
            v.pass = false;
            v.detail = std::string("exception: ") + ex.what();
        }
        std::printf("criterion %2d: %s  %s  [%s]\n", e.id, v.pass ? "PASS" : "FAIL", e.name,
                    v.detail.c_str());
        std::fflush(stdout);
        all_pass = all_pass && v.pass;
    }
    return all_pass ? 0 : 1;
}
