#pragma once

// Desk-scale studies: each one runs a scripted set of simulations, evaluates
// named checks, and reports them as machine-readable verdicts.  Scaling laws
// with unknown constants are always tested as ratios or trends across two or
// more beta values, never as absolute values; absolute targets appear only
// where a limit law pins them.  Re-running a study with the same seed
// reproduces its verdict file bit for bit.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <array>

#include "jsqhw/analytic.hpp"
#include "jsqhw/io.hpp"
#include "jsqhw/jsq_ctmc.hpp"
#include "jsqhw/parallel.hpp"
#include "jsqhw/regeneration.hpp"
#include "jsqhw/stats.hpp"

namespace jsqhw::experiments {

using io::json;

// One named check with its measured value and acceptance window.
struct Check {
    std::string name;
    std::string kind;     // "abs": |measured-target| <= tolerance; "le"/"ge": one-sided
    double measured = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

inline Check check_abs(std::string name, double measured, double target, double tol) {
    return {std::move(name), "abs", measured, target, tol,
            std::isfinite(measured) && std::fabs(measured - target) <= tol};
}

inline Check check_le(std::string name, double measured, double bound) {
    return {std::move(name), "le", measured, bound, 0.0, std::isfinite(measured) && measured <= bound};
}

inline Check check_ge(std::string name, double measured, double bound) {
    return {std::move(name), "ge", measured, bound, 0.0, std::isfinite(measured) && measured >= bound};
}

struct StudyReport {
    std::string study;
    std::uint64_t seed = 0;
    std::vector<Check> checks;
    json tables = json::object();

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

inline json verdicts_json(const StudyReport& r) {
    json checks = json::object();
    for (const auto& c : r.checks)
        checks[c.name] = {{"pass", c.pass},       {"kind", c.kind},
                          {"measured", c.measured}, {"target", c.target},
                          {"tolerance", c.tolerance}};
    return {{"study", r.study}, {"seed", r.seed}, {"checks", checks}};
}

// Write verdicts.json, tables.json, and a CSV per table that is shaped as an
// array of flat objects.
inline void write_study(const StudyReport& r, const std::filesystem::path& dir) {
    io::write_json(dir / "verdicts.json", verdicts_json(r));
    io::write_json(dir / "tables.json", r.tables);
    for (const auto& [name, table] : r.tables.items()) {
        if (!table.is_array() || table.empty() || !table.front().is_object()) continue;
        auto os = io::open_out(dir / (name + ".csv"));
        bool first = true;
        for (const auto& [k, v] : table.front().items()) {
            (void)v;
            os << (first ? "" : ",") << k;
            first = false;
        }
        os << '\n';
        for (const auto& row : table) {
            first = true;
            for (const auto& [k, v] : row.items()) {
                os << (first ? "" : ",");
                first = false;
                if (v.is_number_float()) os << io::fmt(v.get<double>());
                else os << v.dump();
                (void)k;
            }
            os << '\n';
        }
    }
}

// Common sweep knobs.  cycles/reps = 0 means per-study defaults.
struct SweepSpec {
    std::vector<double> betas; // empty means per-study default
    int cycles = 0;
    int reps = 0;
    std::uint64_t seed = 0;
    int workers = 1;
};

inline void validate(const SweepSpec& s) {
    for (const double b : s.betas)
        require(b > 0.0 && std::isfinite(b), "SweepSpec: betas must be positive");
}

namespace detail {

inline int pick(int override_value, int fallback) { return override_value > 0 ? override_value : fallback; }

// Step size for small-beta distributional runs: the reflection layer has
// width O(beta), so resolving it needs dt well below beta^2.  Clamped into
// [4e-5, default_dt] to keep runs desk-scale.
inline double gamma_dt(double beta) {
    const double dt = 4e-3 * beta * beta;
    const double lo = 4e-5, hi = default_dt(beta);
    return dt < lo ? lo : (dt > hi ? hi : dt);
}

// Long single-path run collecting time-weighted samples of several
// functionals (stride-thinned), used by the histogram studies.
inline std::vector<WeightedSample> long_run_samples(const DiffusionParams& params, double horizon,
                                                    double burn_in,
                                                    const std::vector<StateFn>& fns, int stride) {
    validate(params);
    require(horizon > burn_in && burn_in >= 0.0, "long_run_samples: need 0 <= burn_in < horizon");
    NormalRng rng(params.seed);
    DiffusionState s;
    s.q2 = 2.0 * default_B(params.beta);
    std::vector<WeightedSample> out(fns.size());
    const double w = stride * params.dt;
    std::uint64_t clock = 0;
    while (s.t < horizon) {
        s = step(s, params, rng.normal());
        if (s.t >= burn_in && ++clock == static_cast<std::uint64_t>(stride)) {
            clock = 0;
            for (std::size_t j = 0; j < fns.size(); ++j) out[j].add(fns[j](s), w);
        }
    }
    return out;
}

// Mean and standard error of first-passage times over independent
// replications; truncated replications are excluded from the mean but
// counted (the studies fail if they exceed 1%).
struct HitTable {
    double mean = 0.0;
    double se = 0.0;
    int n = 0;
    int truncated = 0;
};

template <typename MakeState, typename Hitter>
HitTable hitting_table(const DiffusionParams& base, MakeState make_state, Hitter hitter, int reps,
                       int workers) {
    std::vector<double> times(static_cast<std::size_t>(reps),
                              std::numeric_limits<double>::quiet_NaN());
    parallel_for_indexed(times.size(), workers, [&](std::size_t i) {
        DiffusionParams p = base;
        p.seed = derive_seed(base.seed, i);
        const HittingResult h = hitter(make_state(), p);
        if (h.hit) times[i] = h.time;
    });
    HitTable t;
    double sum = 0.0;
    for (const double v : times) {
        if (std::isnan(v)) {
            ++t.truncated;
        } else {
            sum += v;
            ++t.n;
        }
    }
    if (t.n < 2) throw NumericalError("hitting_table: fewer than 2 completed replications");
    t.mean = sum / t.n;
    double ss = 0.0;
    for (const double v : times)
        if (!std::isnan(v)) ss += (v - t.mean) * (v - t.mean);
    t.se = std::sqrt(ss / (t.n - 1.0) / t.n);
    return t;
}

} // namespace detail

// --- gamma limit ---------------------------------------------------------------

// Small-beta behavior of Q2: the law of beta*Q2 approaches Gamma(2,1) as
// beta -> 0.  Reports per-beta KS distances and moments at boundary-resolving
// step sizes, the mean scaling ratio at default step sizes, and the tail
// decay-rate proportionality between beta = 0.1 and 0.2.
inline StudyReport gamma_limit_study(const SweepSpec& spec) {
    validate(spec);
    StudyReport rep;
    rep.study = "gamma_limit";
    rep.seed = spec.seed;

    const std::vector<double> dist_betas = spec.betas.empty() ? std::vector<double>{0.4, 0.1}
                                                              : spec.betas;
    for (const double b : dist_betas)
        require(b <= 0.5, "gamma_limit_study: betas must lie in (0, 0.5]");

    // distributional runs (fine dt)
    json dist = json::array();
    std::map<double, double> ks_by_beta;
    double mean01 = std::numeric_limits<double>::quiet_NaN();
    double m2_01 = mean01;
    for (const double beta : dist_betas) {
        auto p = make_params(beta, derive_seed(spec.seed, static_cast<std::uint64_t>(1e3 * beta)));
        p.dt = detail::gamma_dt(beta);
        RegenConfig cfg;
        cfg.max_cycles = detail::pick(spec.cycles, beta <= 0.11 ? 300 : 600);
        cfg.functionals.push_back({"q2", [](const DiffusionState& s) { return s.q2; }});
        cfg.functionals.push_back({"q2sq", [](const DiffusionState& s) { return s.q2 * s.q2; }});
        const int stride = std::max(1, static_cast<int>(0.4 / p.dt));
        cfg.samples.push_back({"bq2", [beta](const DiffusionState& s) { return beta * s.q2; }, stride});
        const auto set = run_cycles(p, cfg, spec.workers);
        const auto eq2 = estimate_stationary(set, "q2");
        const auto eq2sq = estimate_stationary(set, "q2sq");
        const double ks =
            ks_distance(set.samples.at("bq2"), [](double x) { return analytic::gamma2_cdf(x); });
        ks_by_beta[beta] = ks;
        if (std::fabs(beta - 0.1) < 1e-12) {
            mean01 = beta * eq2.value;
            m2_01 = beta * beta * eq2sq.value;
        }
        dist.push_back({{"beta", beta},
                        {"dt", p.dt},
                        {"ks_gamma2", ks},
                        {"mean_bq2", beta * eq2.value},
                        {"se_mean_bq2", beta * eq2.std_error},
                        {"m2_bq2", beta * beta * eq2sq.value},
                        {"n_cycles", eq2.n_cycles}});
    }
    rep.tables["distribution"] = dist;

    if (ks_by_beta.count(0.1)) {
        rep.checks.push_back(check_abs("mean_bq2_at_0.1", mean01, 2.0, 0.3));
        rep.checks.push_back(check_abs("m2_bq2_at_0.1", m2_01, 6.0, 1.0));
        rep.checks.push_back(check_le("ks_gamma2_at_0.1", ks_by_beta.at(0.1), 0.05));
        if (ks_by_beta.count(0.4))
            rep.checks.push_back(
                check_le("ks_trend_0.1_vs_0.4", ks_by_beta.at(0.1), ks_by_beta.at(0.4) + 0.02));
    }

    // mean scaling at default step sizes (constant-elimination ratio)
    {
        const std::vector<double> scale_betas{0.05, 0.1, 0.2};
        json tab = json::array();
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (const double beta : scale_betas) {
            auto p = make_params(beta, derive_seed(spec.seed, 7000 + static_cast<std::uint64_t>(1e3 * beta)));
            RegenConfig cfg;
            cfg.max_cycles = detail::pick(spec.cycles, 250);
            cfg.functionals.push_back({"q2", [](const DiffusionState& s) { return s.q2; }});
            const auto set = run_cycles(p, cfg, spec.workers);
            const auto eq2 = estimate_stationary(set, "q2");
            const double scaled = beta * eq2.value;
            lo = std::min(lo, scaled);
            hi = std::max(hi, scaled);
            tab.push_back({{"beta", beta},
                           {"mean_q2_times_beta", scaled},
                           {"se", beta * eq2.std_error},
                           {"n_cycles", eq2.n_cycles}});
        }
        rep.tables["mean_scaling"] = tab;
        rep.checks.push_back(check_le("mean_scaling_max_over_min", hi / lo, 1.5));
    }

    // tail decay-rate proportionality between beta = 0.1 and 0.2
    {
        json tab = json::array();
        std::map<double, TailFit> fits;
        for (const auto& [beta, ncyc] : std::vector<std::pair<double, int>>{{0.1, 1200}, {0.2, 2500}}) {
            auto p = make_params(beta, derive_seed(spec.seed, 9000 + static_cast<std::uint64_t>(1e3 * beta)));
            RegenConfig cfg;
            cfg.max_cycles = detail::pick(spec.cycles, ncyc);
            // The fit window beta*y in [2, 7] keeps every level well sampled
            // (relative standard errors stay in the percent range at these
            // cycle counts); deeper levels are occupied by a handful of rare
            // excursions and make the fitted slope an artifact of which ones
            // happened to occur.
            std::vector<double> levels;
            for (double by = 2.0; by <= 7.01; by += 1.0) levels.push_back(by / beta);
            add_tail_functionals(cfg, Coord::q2, levels);
            const auto set = run_cycles(p, cfg, spec.workers);
            const auto tc = tail_curve(set, Coord::q2, levels);
            std::vector<double> lp;
            for (const double r : tc.raw)
                lp.push_back(r > 0.0 ? std::log(r) : std::numeric_limits<double>::quiet_NaN());
            const auto fit = tail_slope(tc.levels, lp);
            fits[beta] = fit;
            tab.push_back({{"beta", beta},
                           {"decay_rate", fit.decay_rate},
                           {"r_squared", fit.r_squared},
                           {"n_levels_used", fit.n_used}});
        }
        rep.tables["q2_tails"] = tab;
        rep.checks.push_back(check_ge("tail_fit_r2_at_0.1", fits.at(0.1).r_squared, 0.9));
        rep.checks.push_back(check_ge("tail_fit_r2_at_0.2", fits.at(0.2).r_squared, 0.9));
        rep.checks.push_back(check_abs("tail_rate_ratio_0.2_over_0.1",
                                       fits.at(0.2).decay_rate / fits.at(0.1).decay_rate, 2.0, 0.6));
    }
    return rep;
}

// --- gaussian limit ------------------------------------------------------------

// Large-beta behavior of Q1: Q1 + beta approaches a standard normal while Q2
// collapses.  Includes the dual-variance protocol: the raw second moment is
// recorded and the KS fit of (Q1+beta) against a normal is evaluated at both
// variance 1 and variance 2, reporting which variance matches.
inline StudyReport gaussian_limit_study(const SweepSpec& spec) {
    validate(spec);
    StudyReport rep;
    rep.study = "gaussian_limit";
    rep.seed = spec.seed;

    const std::vector<double> betas = spec.betas.empty() ? std::vector<double>{1.5, 2.0, 3.0}
                                                         : spec.betas;
    for (const double b : betas)
        require(b >= 1.5 && b <= 3.0, "gaussian_limit_study: betas must lie in [1.5, 3]");
    const double bmax = *std::max_element(betas.begin(), betas.end());

    json tab = json::array();
    std::vector<double> q2_means;
    for (const double beta : betas) {
        auto p = make_params(beta, derive_seed(spec.seed, 100 + static_cast<std::uint64_t>(10 * beta)));
        RegenConfig cfg;
        cfg.max_cycles = detail::pick(spec.cycles, 800);
        cfg.functionals.push_back({"q2", [](const DiffusionState& s) { return s.q2; }});
        for (int k = 1; k <= 4; ++k)
            cfg.functionals.push_back({"x" + std::to_string(k), [beta, k](const DiffusionState& s) {
                                           double v = s.q1 + beta, r = 1.0;
                                           for (int i = 0; i < k; ++i) r *= v;
                                           return r;
                                       }});
        cfg.samples.push_back({"x", [beta](const DiffusionState& s) { return s.q1 + beta; }, 16});
        cfg.samples.push_back({"q2s", [](const DiffusionState& s) { return s.q2; }, 16});
        const auto set = run_cycles(p, cfg, spec.workers);

        const auto m1 = estimate_stationary(set, "x1");
        const auto m2 = estimate_stationary(set, "x2");
        const auto m3 = estimate_stationary(set, "x3");
        const auto m4 = estimate_stationary(set, "x4");
        const auto q2 = estimate_stationary(set, "q2");
        q2_means.push_back(q2.value);

        // fourth-moment stability: first half of the cycles vs all of them
        CycleSet half = set;
        half.cycles.assign(set.cycles.begin(),
                           set.cycles.begin() + static_cast<long>(set.cycles.size() / 2));
        const auto m4_half = estimate_stationary(half, "x4");

        const auto& xs = set.samples.at("x");
        const double ks_var1 =
            ks_distance(xs, [](double v) { return analytic::normal_cdf(v); });
        const double ks_var2 =
            ks_distance(xs, [](double v) { return analytic::normal_cdf(v / std::sqrt(2.0)); });
        const double med_q2 = weighted_quantile(set.samples.at("q2s"), 0.5);

        tab.push_back({{"beta", beta},
                       {"mean_x", m1.value},
                       {"se_mean_x", m1.std_error},
                       {"m2_x", m2.value},
                       {"se_m2_x", m2.std_error},
                       {"m3_x", m3.value},
                       {"m4_x", m4.value},
                       {"se_m4_x", m4.std_error},
                       {"m4_x_half", m4_half.value},
                       {"se_m4_x_half", m4_half.std_error},
                       {"mean_q2", q2.value},
                       {"median_q2", med_q2},
                       {"ks_normal_var1", ks_var1},
                       {"ks_normal_var2", ks_var2},
                       {"variance_matching_ks", ks_var1 <= ks_var2 ? 1.0 : 2.0},
                       {"n_cycles", m1.n_cycles}});

        if (beta == bmax) {
            rep.checks.push_back(check_le("abs_mean_x_in_3se", std::fabs(m1.value), 3.0 * m1.std_error));
            rep.checks.push_back(check_abs("m2_x_window", m2.value, 2.0, 0.3));
            rep.checks.push_back(check_le(
                "m4_stable_under_doubling", std::fabs(m4_half.value - m4.value),
                3.0 * std::sqrt(m4_half.std_error * m4_half.std_error + m4.std_error * m4.std_error)));
            rep.checks.push_back(check_le("mean_q2_small", q2.value, 0.05));
            rep.checks.push_back(check_le("median_over_mean_q2", med_q2 / q2.value, 0.1));
        }
    }
    rep.tables["moments"] = tab;
    for (std::size_t i = 1; i < q2_means.size(); ++i)
        rep.checks.push_back(check_le("mean_q2_decreasing_" + std::to_string(i),
                                      q2_means[i], q2_means[i - 1]));
    return rep;
}

// --- Q1 tail shape at small beta ------------------------------------------------

namespace detail {

// Relative least squares (weights 1/p^2) of p ~ A*g + C*h with A, C >= 0.
inline double nonneg_ls2(const std::vector<double>& p, const std::vector<double>& g,
                         const std::vector<double>& h, double& A, double& C) {
    double gg = 0, hh = 0, gh = 0, pg = 0, ph = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double w = 1.0 / (p[i] * p[i]);
        gg += w * g[i] * g[i];
        hh += w * h[i] * h[i];
        gh += w * g[i] * h[i];
        pg += w * p[i] * g[i];
        ph += w * p[i] * h[i];
    }
    const double det = gg * hh - gh * gh;
    A = det > 0 ? (pg * hh - ph * gh) / det : 0.0;
    C = det > 0 ? (ph * gg - pg * gh) / det : 0.0;
    if (A < 0.0 || C < 0.0) { // active-set fallback: best single-component fit
        const double a1 = pg / gg, c1 = ph / hh;
        double rss_a = 0, rss_c = 0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double w = 1.0 / (p[i] * p[i]);
            rss_a += w * (p[i] - a1 * g[i]) * (p[i] - a1 * g[i]);
            rss_c += w * (p[i] - c1 * h[i]) * (p[i] - c1 * h[i]);
        }
        if (rss_a <= rss_c) { A = a1; C = 0.0; } else { A = 0.0; C = c1; }
    }
    double rss = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double w = 1.0 / (p[i] * p[i]);
        rss += w * (p[i] - A * g[i] - C * h[i]) * (p[i] - A * g[i] - C * h[i]);
    }
    return rss;
}

} // namespace detail

// Tail shape of -Q1 at small beta: a Gaussian body plus an exponential
// shoulder with rate of order 1/sqrt(beta).  Fits both a single-Gaussian
// model p(x) = A exp(-(x-2 beta)^2 / 8) and a two-component model adding
// C exp(-r x / sqrt(beta)), and reports the residual improvement and the
// fitted shoulder rates across betas.
inline StudyReport q1_small_beta_tail_study(const SweepSpec& spec) {
    validate(spec);
    StudyReport rep;
    rep.study = "q1_small_beta_tail";
    rep.seed = spec.seed;

    const std::vector<double> betas = spec.betas.empty() ? std::vector<double>{0.05, 0.2}
                                                         : spec.betas;
    for (const double b : betas)
        require(b >= 0.05 && b <= 0.2, "q1_small_beta_tail_study: betas must lie in [0.05, 0.2]");

    json tab = json::array();
    json curves = json::array();
    std::map<double, double> shoulder_rate, abs_q1;
    for (const double beta : betas) {
        auto p = make_params(beta, derive_seed(spec.seed, 300 + static_cast<std::uint64_t>(1e3 * beta)));
        RegenConfig cfg;
        cfg.max_cycles = detail::pick(spec.cycles, beta < 0.08 ? 320 : 900);
        cfg.functionals.push_back({"abs_q1", [](const DiffusionState& s) { return -s.q1; }});
        std::vector<double> levels{0.0};
        for (double x = 0.4; x <= 2.81; x += 0.3) levels.push_back(x);
        add_tail_functionals(cfg, Coord::q1, levels);
        const auto set = run_cycles(p, cfg, spec.workers);
        const auto tc = tail_curve(set, Coord::q1, levels);
        const auto eabs = estimate_stationary(set, "abs_q1");
        abs_q1[beta] = eabs.value;

        if (std::fabs(tc.raw.front() - 1.0) > 1e-12)
            throw NumericalError("q1 tail at level 0 must be exactly 1");

        // fit on strictly positive estimates at x > 0
        std::vector<double> xs, ps;
        for (std::size_t i = 1; i < levels.size(); ++i)
            if (tc.raw[i] > 0.0) {
                xs.push_back(levels[i]);
                ps.push_back(tc.raw[i]);
            }
        std::vector<double> body(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i)
            body[i] = std::exp(-(xs[i] - 2.0 * beta) * (xs[i] - 2.0 * beta) / 8.0);

        double a_single = 0, dummy = 0;
        const std::vector<double> zero(xs.size(), 0.0);
        const double rss_single = detail::nonneg_ls2(ps, body, zero, a_single, dummy);

        double best_rss = std::numeric_limits<double>::infinity();
        double best_rate = 0, best_a = 0, best_c = 0;
        for (double r = 0.3; r <= 6.0; r *= 1.2) {
            std::vector<double> shoulder(xs.size());
            for (std::size_t i = 0; i < xs.size(); ++i)
                shoulder[i] = std::exp(-r * xs[i] / std::sqrt(beta));
            double A, C;
            const double rss = detail::nonneg_ls2(ps, body, shoulder, A, C);
            if (rss < best_rss) {
                best_rss = rss;
                best_rate = r;
                best_a = A;
                best_c = C;
            }
        }
        shoulder_rate[beta] = best_rate / std::sqrt(beta); // decay rate in x

        for (std::size_t i = 0; i < xs.size(); ++i)
            curves.push_back({{"beta", beta}, {"x", xs[i]}, {"prob", ps[i]}});
        tab.push_back({{"beta", beta},
                       {"mean_abs_q1", eabs.value},
                       {"rss_single_gaussian", rss_single},
                       {"rss_two_component", best_rss},
                       {"rss_improvement", best_rss / rss_single},
                       {"shoulder_rate_x", shoulder_rate[beta]},
                       {"shoulder_rate_scaled", best_rate},
                       {"body_weight", best_a},
                       {"shoulder_weight", best_c},
                       {"n_cycles", detail::pick(spec.cycles, beta < 0.08 ? 320 : 900)}});
        rep.checks.push_back(check_le("two_component_improves_rss_beta" + io::fmt(beta),
                                      best_rss, 0.5 * rss_single));
    }
    rep.tables["fits"] = tab;
    rep.tables["tail_curves"] = curves;

    if (betas.size() >= 2) {
        const double b_lo = *std::min_element(betas.begin(), betas.end());
        const double b_hi = *std::max_element(betas.begin(), betas.end());
        // E|Q1| shrinks as beta -> 0
        rep.checks.push_back(check_le("abs_q1_decreasing_with_beta", abs_q1.at(b_lo), abs_q1.at(b_hi)));
        // shoulder rate scales like 1/sqrt(beta): rate(b_lo)/rate(b_hi) should be
        // sqrt(b_hi/b_lo), within a factor of 2
        const double expected = std::sqrt(b_hi / b_lo);
        const double ratio = shoulder_rate.at(b_lo) / shoulder_rate.at(b_hi);
        rep.checks.push_back(check_le("shoulder_rate_scaling_hi", ratio, 2.0 * expected));
        rep.checks.push_back(check_ge("shoulder_rate_scaling_lo", ratio, 0.5 * expected));
    }
    return rep;
}

// --- hitting-time scaling -------------------------------------------------------

// First-passage and cycle-length scaling: descent of Q2 grows with the
// starting level, escape of Q1 to the boundary grows superlinearly (in log)
// with beta, and mean cycle lengths follow the beta^-2 law at small beta and
// the exponential-in-beta^2 trend at large beta.  More than 1% truncated
// replications anywhere fails the study.
inline StudyReport hitting_time_studies(const SweepSpec& spec) {
    validate(spec);
    StudyReport rep;
    rep.study = "hitting_times";
    rep.seed = spec.seed;

    long total = 0, truncated = 0;

    // (a) descent time of Q2 to beta/4 from (0, y), beta = 3
    {
        const double beta = 3.0;
        json tab = json::array();
        std::vector<double> xs, ys;
        for (const double y : {3.0, 6.0, 12.0}) {
            auto p = make_params(beta, derive_seed(spec.seed, 11000 + static_cast<std::uint64_t>(y)));
            const int reps = detail::pick(spec.reps, 400);
            const auto t = detail::hitting_table(
                p,
                [y] { DiffusionState s; s.q2 = y; return s; },
                [beta](const DiffusionState& s, const DiffusionParams& pp) {
                    return hitting_time_q2(s, pp, beta / 4.0, 1e4);
                },
                reps, spec.workers);
            total += reps;
            truncated += t.truncated;
            xs.push_back(y / beta);
            ys.push_back(t.mean);
            tab.push_back({{"y", y}, {"y_over_beta", y / beta}, {"mean_tau", t.mean}, {"se", t.se},
                           {"n", t.n}, {"truncated", t.truncated}});
        }
        rep.tables["q2_descent"] = tab;
        const auto fit = tail_slope(xs, ys); // reuse least squares; sign flipped below
        rep.checks.push_back(check_ge("q2_descent_slope_positive", -fit.decay_rate, 0.0));
        rep.checks.push_back(check_ge("q2_descent_r2", fit.r_squared, 0.9));
    }

    // (b) escape of Q1 to 0 from (-beta, beta/4): log mean time convex in beta
    {
        json tab = json::array();
        std::vector<double> logm;
        for (const double beta : {1.5, 2.0, 2.5}) {
            auto p = make_params(beta, derive_seed(spec.seed, 12000 + static_cast<std::uint64_t>(10 * beta)));
            const int reps = detail::pick(spec.reps, 500);
            const auto t = detail::hitting_table(
                p,
                [beta] { DiffusionState s; s.q1 = -beta; s.q2 = beta / 4.0; return s; },
                [](const DiffusionState& s, const DiffusionParams& pp) {
                    return hitting_time_q1(s, pp, 0.0, 1e5);
                },
                reps, spec.workers);
            total += reps;
            truncated += t.truncated;
            logm.push_back(std::log(t.mean));
            tab.push_back({{"beta", beta}, {"mean_tau", t.mean}, {"se", t.se}, {"log_mean", logm.back()},
                           {"n", t.n}, {"truncated", t.truncated}});
        }
        rep.tables["q1_escape"] = tab;
        rep.checks.push_back(check_ge("q1_escape_log_increasing", logm[1] - logm[0], 0.0));
        rep.checks.push_back(
            check_ge("q1_escape_log_convex", (logm[2] - logm[1]) - (logm[1] - logm[0]), 0.0));
    }

    // (c) large-beta cycle lengths: log E[Xi] increasing and convex over {2, 2.5, 3}
    {
        json tab = json::array();
        std::vector<double> logm;
        for (const double beta : {2.0, 2.5, 3.0}) {
            auto p = make_params(beta, derive_seed(spec.seed, 13000 + static_cast<std::uint64_t>(10 * beta)));
            RegenConfig cfg;
            cfg.max_cycles = detail::pick(spec.cycles, 300);
            cfg.max_time_per_cycle = 1e6;
            cfg.functionals.push_back({"q2", [](const DiffusionState& s) { return s.q2; }});
            const auto set = run_cycles(p, cfg, spec.workers);
            total += static_cast<long>(set.cycles.size());
            truncated += set.truncated_count();
            double mean = 0;
            int n = 0;
            for (const auto& c : set.cycles)
                if (!c.truncated) { mean += c.xi; ++n; }
            mean /= n;
            logm.push_back(std::log(mean));
            tab.push_back({{"beta", beta}, {"mean_xi", mean}, {"log_mean_xi", logm.back()}, {"n", n}});
        }
        rep.tables["cycle_length_large_beta"] = tab;
        rep.checks.push_back(check_ge("cycle_log_increasing_1", logm[1] - logm[0], 0.0));
        rep.checks.push_back(check_ge("cycle_log_increasing_2", logm[2] - logm[1], 0.0));
        rep.checks.push_back(
            check_ge("cycle_log_convex", (logm[2] - logm[1]) - (logm[1] - logm[0]), 0.0));
    }

    // (d) small-beta cycle lengths: E[Xi] * beta^2 constant within factor 1.5
    {
        json tab = json::array();
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (const double beta : {0.05, 0.1, 0.2}) {
            auto p = make_params(beta, derive_seed(spec.seed, 14000 + static_cast<std::uint64_t>(1e3 * beta)));
            RegenConfig cfg;
            cfg.max_cycles = detail::pick(spec.cycles, 400);
            cfg.max_time_per_cycle = 1e6;
            cfg.functionals.push_back({"q2", [](const DiffusionState& s) { return s.q2; }});
            const auto set = run_cycles(p, cfg, spec.workers);
            total += static_cast<long>(set.cycles.size());
            truncated += set.truncated_count();
            double mean = 0;
            int n = 0;
            for (const auto& c : set.cycles)
                if (!c.truncated) { mean += c.xi; ++n; }
            mean /= n;
            const double scaled = mean * beta * beta;
            lo = std::min(lo, scaled);
            hi = std::max(hi, scaled);
            tab.push_back({{"beta", beta}, {"mean_xi", mean}, {"mean_xi_beta_sq", scaled}, {"n", n}});
        }
        rep.tables["cycle_length_small_beta"] = tab;
        rep.checks.push_back(check_le("cycle_beta_sq_max_over_min", hi / lo, 1.5));
    }

    rep.checks.push_back(
        check_le("truncation_fraction", static_cast<double>(truncated) / static_cast<double>(total), 0.01));
    return rep;
}

// --- interchange of limits ------------------------------------------------------

// Pre-limit vs diffusion: scaled stationary means of the N-server chain
// against the diffusion's regenerative estimates, plus the exact geometric
// law at N = 1 (where the system is a plain M/M/1 queue).
inline StudyReport interchange_study(const SweepSpec& spec) {
    validate(spec);
    StudyReport rep;
    rep.study = "interchange";
    rep.seed = spec.seed;
    const double beta = 1.0;

    // diffusion reference
    auto p = make_params(beta, derive_seed(spec.seed, 42));
    p.dt = 2.5e-4;
    RegenConfig cfg;
    cfg.max_cycles = detail::pick(spec.cycles, 3000);
    cfg.functionals.push_back({"q2", [](const DiffusionState& s) { return s.q2; }});
    cfg.functionals.push_back({"q1", [](const DiffusionState& s) { return s.q1; }});
    const auto set = run_cycles(p, cfg, spec.workers);
    const auto ref_q2 = estimate_stationary(set, "q2");
    const auto ref_q1 = estimate_stationary(set, "q1");
    rep.tables["diffusion_reference"] = {{"mean_q2", ref_q2.value}, {"se_q2", ref_q2.std_error},
                                         {"mean_q1", ref_q1.value}, {"se_q1", ref_q1.std_error},
                                         {"n_cycles", ref_q2.n_cycles}};

    // N = 1: occupancy tails are exactly geometric with rho = 1 - beta.  The
    // stability window at N = 1 demands beta < 1, so this leg runs at its own
    // drift value.
    {
        const double beta1 = 0.5;
        CtmcParams cp{1, beta1, derive_seed(spec.seed, 1)};
        std::vector<OccupancyFn> obs;
        for (int i = 1; i <= 3; ++i)
            obs.push_back([i](const OccupancyState& s) { return s.level(static_cast<std::size_t>(i)) >= 1 ? 1.0 : 0.0; });
        const double h1 = spec.reps > 0 ? 100.0 * spec.reps : 2e5;
        const auto r = gillespie_run(cp, h1, 50.0, obs);
        json tab = json::array();
        for (int i = 1; i <= 3; ++i) {
            const double oracle = analytic::mm1_tail(1.0 - beta1, i);
            const double gap = std::fabs(r.time_avg[static_cast<std::size_t>(i - 1)] - oracle);
            tab.push_back({{"i", i},
                           {"beta", beta1},
                           {"tail", r.time_avg[static_cast<std::size_t>(i - 1)]},
                           {"se", r.batch_se[static_cast<std::size_t>(i - 1)]},
                           {"oracle", oracle}});
            rep.checks.push_back(check_le("n1_geometric_tail_i" + std::to_string(i), gap,
                                          3.0 * r.batch_se[static_cast<std::size_t>(i - 1)]));
        }
        rep.tables["n1_geometric"] = tab;
    }

    // N sweep
    json tab = json::array();
    std::vector<double> gaps;
    const std::vector<int> Ns{50, 200, 500};
    for (const int N : Ns) {
        CtmcParams cp{N, beta, derive_seed(spec.seed, static_cast<std::uint64_t>(N))};
        const double rn = std::sqrt(static_cast<double>(N));
        std::vector<OccupancyFn> obs = {
            [rn](const OccupancyState& s) { return static_cast<double>(s.level(2)) / rn; },
            [N, rn](const OccupancyState& s) { return -static_cast<double>(N - s.busy()) / rn; },
        };
        const double horizon =
            spec.reps > 0 ? static_cast<double>(spec.reps) : (N <= 50 ? 3e4 : N <= 200 ? 2.5e4 : 2e4);
        const auto r = gillespie_run(cp, horizon, default_ctmc_burn_in(N), obs);
        const double gap2 = std::fabs(r.time_avg[0] - ref_q2.value);
        gaps.push_back(gap2);
        tab.push_back({{"N", N},
                       {"mean_q2bar", r.time_avg[0]},
                       {"se_q2bar", r.batch_se[0]},
                       {"mean_q1bar", r.time_avg[1]},
                       {"se_q1bar", r.batch_se[1]},
                       {"gap_q2_vs_diffusion", gap2},
                       {"gap_q1_vs_minus_beta", std::fabs(r.time_avg[1] + beta)}});
        if (N == 500) {
            rep.checks.push_back(
                check_le("interchange_gap_q2_relative_N500", gap2 / ref_q2.value, 0.20));
            rep.checks.push_back(
                check_le("q1bar_vs_minus_beta_relative_N500", std::fabs(r.time_avg[1] + beta) / beta, 0.20));
        }
    }
    rep.tables["n_sweep"] = tab;
    // shrinking gap, allowing batch-mean noise on both ends
    rep.checks.push_back(check_le("gap_shrinks_50_to_500", gaps.back(), gaps.front() + 0.05));
    return rep;
}

// --- figure-style histograms ----------------------------------------------------

struct Figure1Histogram {
    double beta;
    std::string coordinate; // "neg_q1" or "q2"
    Histogram hist;
};

struct Figure1Result {
    StudyReport report;
    std::vector<Figure1Histogram> histograms;
};

// Time-weighted histograms of -Q1 and Q2 at small, intermediate and large
// beta over a horizon of 1.5e4 time units after burn-in (a tenth of the
// horizon).  The intermediate beta defaults to 1.
inline Figure1Result figure1(const SweepSpec& spec, double horizon = 1.5e4, int bins = 60) {
    validate(spec);
    Figure1Result out;
    out.report.study = "figure1";
    out.report.seed = spec.seed;

    const std::vector<double> betas = spec.betas.empty() ? std::vector<double>{0.1, 1.0, 3.0}
                                                         : spec.betas;
    const double burn_in = horizon / 10.0;
    json tab = json::array();
    for (const double beta : betas) {
        auto p = make_params(beta, derive_seed(spec.seed, 500 + static_cast<std::uint64_t>(1e3 * beta)));
        const std::vector<StateFn> fns = {
            [](const DiffusionState& s) { return -s.q1; },
            [](const DiffusionState& s) { return s.q2; },
        };
        const auto samples = detail::long_run_samples(p, burn_in + horizon, burn_in, fns, 16);
        const std::array<std::string, 2> names{"neg_q1", "q2"};
        for (std::size_t j = 0; j < 2; ++j) {
            auto h = histogram(samples[j], bins);
            double mass_sum = 0.0;
            for (const double m : h.masses) mass_sum += m;
            // Rounding allowance: the masses are normalized sums over ~1e6
            // weighted samples, so the total drifts from 1 by a few ulps per
            // accumulation; a real mass-accounting bug would show at O(1/bins).
            out.report.checks.push_back(check_le(
                "mass_sum_dev_" + names[j] + "_beta" + io::fmt(beta), std::fabs(mass_sum - 1.0), 1e-9));
            const auto F = weighted_cdf(samples[j]);
            tab.push_back({{"beta", beta},
                           {"coordinate", names[j]},
                           {"mass_below_0.1", F.below(0.1)},
                           {"mass_below_0.5", F.below(0.5)},
                           {"modal_bin", static_cast<int>(std::max_element(h.masses.begin(), h.masses.end()) -
                                                          h.masses.begin())}});
            if (names[j] == "q2" && std::fabs(beta - 3.0) < 1e-12) {
                const bool leftmost = std::max_element(h.masses.begin(), h.masses.end()) == h.masses.begin();
                out.report.checks.push_back(check_ge("q2_modal_bin_leftmost_beta3", leftmost ? 1.0 : 0.0, 1.0));
                out.report.checks.push_back(check_ge("q2_mass_below_0.1_beta3", F.below(0.1), 0.8));
            }
            if (names[j] == "neg_q1" && std::fabs(beta - 0.1) < 1e-12)
                out.report.checks.push_back(check_ge("neg_q1_mass_below_0.5_beta0.1", F.below(0.5), 0.8));
            out.histograms.push_back({beta, names[j], std::move(h)});
        }
    }
    out.report.tables["summary"] = tab;
    return out;
}

} // namespace jsqhw::experiments
