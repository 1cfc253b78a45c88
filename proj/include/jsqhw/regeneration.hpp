#pragma once

// Regenerative estimation of the stationary law.  The process restarts from
// (q1, q2) = (0, 2B) at the beginning of every cycle; a cycle first waits for
// Q2 to fall to B and then ends when Q2 next climbs back to 2B.  Cycle
// lengths and path integrals over independent cycles are i.i.d., so any
// stationary expectation is a ratio of cycle means:
//
//   E_pi[f] = E[integral of f over a cycle] / E[cycle length].
//
// Cycles that exceed the per-cycle time cap are flagged, counted, and
// excluded from estimation.  A time-average estimator over one long path
// (batch means) is provided as an independent cross-check.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "jsqhw/diffusion.hpp"
#include "jsqhw/errors.hpp"
#include "jsqhw/parallel.hpp"
#include "jsqhw/rng.hpp"
#include "jsqhw/stats.hpp"

namespace jsqhw {

enum class Coord { q1, q2 };

// A named path functional, integrated against time over each cycle.
struct Functional {
    std::string name;
    StateFn fn;
};

// Weighted-sample collector: record fn(state) every `stride` steps with
// weight stride*dt, giving a time-weighted sample from the stationary law.
struct SampleSpec {
    std::string name;
    StateFn fn;
    int stride = 64;
};

struct RegenConfig {
    double B = 0.0;                   // regeneration level; 0 means default_B(beta)
    int max_cycles = 0;               // number of cycles to run, >= 2
    double max_time_per_cycle = 1e6;  // truncation cap per cycle
    std::vector<Functional> functionals;
    std::vector<SampleSpec> samples;
};

// Default regeneration level: 1/beta in the large-beta regime, 2*M0/beta with
// M0 = 1 in the small-beta regime where Q2 lives on the 1/beta scale.
inline double default_B(double beta) {
    return beta >= 1.0 ? 1.0 / beta : 2.0 / beta;
}

inline void validate(const RegenConfig& c, const DiffusionParams& p) {
    validate(p);
    require(c.B >= 0.0 && std::isfinite(c.B), "RegenConfig: B must be >= 0 and finite");
    require(c.max_cycles >= 2, "RegenConfig: need at least 2 cycles");
    require(c.max_time_per_cycle > 0.0, "RegenConfig: max_time_per_cycle must be positive");
    for (const auto& s : c.samples)
        require(s.stride >= 1, "RegenConfig: sample stride must be >= 1");
}

// One regeneration cycle.
struct Cycle {
    double xi = 0.0;     // cycle length (time cap consumed when truncated)
    bool truncated = false;
    std::map<std::string, double> integrals; // functional name -> path integral
    double l_gain = 0.0; // local time accumulated over the cycle
    double q2_max = 0.0;
    double q1_min = 0.0;
};

struct CycleSet {
    double beta = 0.0;
    double B = 0.0;
    std::vector<std::string> names;      // functional names, CSV column order
    std::vector<Cycle> cycles;           // in cycle-index order
    std::map<std::string, WeightedSample> samples;

    int truncated_count() const {
        int n = 0;
        for (const auto& c : cycles) n += c.truncated ? 1 : 0;
        return n;
    }
    int complete_count() const { return static_cast<int>(cycles.size()) - truncated_count(); }
};

namespace detail {

struct CycleScratch {
    Cycle cycle;
    std::vector<double> integrals; // aligned with config.functionals
    std::vector<WeightedSample> samples;
};

// Simulate one full regeneration cycle from (0, 2B) with a dedicated RNG.
inline CycleScratch run_one_cycle(const DiffusionParams& params, const RegenConfig& cfg,
                                  double B, std::uint64_t seed) {
    NormalRng rng(seed);
    const double dt = params.dt;
    const std::size_t nf = cfg.functionals.size();

    DiffusionState s;
    s.q1 = 0.0;
    s.q2 = 2.0 * B;

    CycleScratch out;
    out.integrals.assign(nf, 0.0);
    out.samples.resize(cfg.samples.size());
    out.cycle.q2_max = s.q2;
    out.cycle.q1_min = s.q1;

    std::vector<double> prev(nf);
    for (std::size_t i = 0; i < nf; ++i) prev[i] = cfg.functionals[i].fn(s);
    std::vector<std::uint64_t> sample_clock(cfg.samples.size(), 0);

    double xi = 0.0;    // trapezoid clock, also the integral of the constant 1
    bool below = false; // phase flag: Q2 has touched B

    while (true) {
        const DiffusionState p = s;
        s = step(s, params, rng.normal());

        // Phase switch and cycle end, with linear interpolation inside the
        // bracketing step for the terminal crossing.
        if (!below) {
            if (s.q2 <= B) below = true;
        } else if (s.q2 >= 2.0 * B) {
            const double theta = (2.0 * B - p.q2) / (s.q2 - p.q2);
            DiffusionState hit;
            hit.t = p.t + theta * dt;
            hit.q1 = p.q1 + theta * (s.q1 - p.q1);
            hit.q2 = 2.0 * B;
            hit.l = p.l + theta * (s.l - p.l);
            if (hit.q1 > 0.0) hit.q1 = 0.0;
            const double h = theta * dt;
            for (std::size_t i = 0; i < nf; ++i)
                out.integrals[i] += 0.5 * (prev[i] + cfg.functionals[i].fn(hit)) * h;
            xi += h;
            out.cycle.xi = xi;
            out.cycle.l_gain = hit.l;
            if (hit.q2 > out.cycle.q2_max) out.cycle.q2_max = hit.q2;
            if (hit.q1 < out.cycle.q1_min) out.cycle.q1_min = hit.q1;
            return out;
        }

        for (std::size_t i = 0; i < nf; ++i) {
            const double cur = cfg.functionals[i].fn(s);
            out.integrals[i] += 0.5 * (prev[i] + cur) * dt;
            prev[i] = cur;
        }
        xi += dt;
        if (s.q2 > out.cycle.q2_max) out.cycle.q2_max = s.q2;
        if (s.q1 < out.cycle.q1_min) out.cycle.q1_min = s.q1;

        for (std::size_t j = 0; j < cfg.samples.size(); ++j) {
            if (++sample_clock[j] == static_cast<std::uint64_t>(cfg.samples[j].stride)) {
                sample_clock[j] = 0;
                out.samples[j].add(cfg.samples[j].fn(s), cfg.samples[j].stride * dt);
            }
        }

        if (s.t >= cfg.max_time_per_cycle) {
            out.cycle.xi = s.t;
            out.cycle.truncated = true;
            out.cycle.l_gain = s.l;
            return out;
        }
    }
}

} // namespace detail

// Run max_cycles independent regeneration cycles.  Cycle k uses the derived
// seed derive_seed(params.seed, k) and results are merged in cycle order, so
// the output is identical for any worker count.
inline CycleSet run_cycles(const DiffusionParams& params, const RegenConfig& cfg,
                           int workers = 1) {
    validate(cfg, params);
    const double B = cfg.B > 0.0 ? cfg.B : default_B(params.beta);

    CycleSet set;
    set.beta = params.beta;
    set.B = B;
    for (const auto& f : cfg.functionals) set.names.push_back(f.name);

    std::vector<detail::CycleScratch> scratch(static_cast<std::size_t>(cfg.max_cycles));
    parallel_for_indexed(scratch.size(), workers, [&](std::size_t k) {
        scratch[k] = detail::run_one_cycle(params, cfg, B, derive_seed(params.seed, k));
    });

    for (auto& sp : cfg.samples) set.samples.emplace(sp.name, WeightedSample{});
    set.cycles.reserve(scratch.size());
    for (auto& sc : scratch) {
        for (std::size_t i = 0; i < cfg.functionals.size(); ++i)
            sc.cycle.integrals[cfg.functionals[i].name] = sc.integrals[i];
        if (!sc.cycle.truncated) {
            for (std::size_t j = 0; j < cfg.samples.size(); ++j) {
                auto& dst = set.samples[cfg.samples[j].name];
                auto& src = sc.samples[j];
                dst.values.insert(dst.values.end(), src.values.begin(), src.values.end());
                dst.weights.insert(dst.weights.end(), src.weights.begin(), src.weights.end());
            }
        }
        set.cycles.push_back(std::move(sc.cycle));
    }
    if (set.complete_count() < 2)
        throw NumericalError("run_cycles: fewer than 2 complete cycles (raise the time cap)");
    return set;
}

// Point estimate of a stationary expectation with its standard error.
struct StationaryEstimate {
    double value = 0.0;
    double std_error = 0.0;
    int n_cycles = 0;        // complete cycles (batches for the time-average path)
    int truncated_cycles = 0;
};

enum class SeMethod { delta, jackknife };

namespace detail {

// Ratio estimator R = mean(Y) / mean(X) over complete cycles, where X is the
// cycle length.  Delta method: Var(R) ~ Var(Y - R X) / (n * mean(X)^2).
// The jackknife variant recomputes the ratio leaving one cycle out.
inline StationaryEstimate ratio_estimate(const CycleSet& set, const std::vector<double>& y,
                                         SeMethod method) {
    std::vector<double> x;
    x.reserve(set.cycles.size());
    for (const auto& c : set.cycles)
        if (!c.truncated) x.push_back(c.xi);
    const auto n = static_cast<int>(x.size());
    if (n < 2) throw NumericalError("ratio_estimate: fewer than 2 complete cycles");
    if (y.size() != x.size()) throw NumericalError("ratio_estimate: integral count mismatch");

    double sum_x = 0.0, sum_y = 0.0;
    for (int i = 0; i < n; ++i) {
        sum_x += x[static_cast<std::size_t>(i)];
        sum_y += y[static_cast<std::size_t>(i)];
    }
    if (!(sum_x > 0.0)) throw NumericalError("ratio_estimate: degenerate total cycle length");
    const double r = sum_y / sum_x;
    const double mean_x = sum_x / n;

    StationaryEstimate est;
    est.value = r;
    est.n_cycles = n;

    if (method == SeMethod::delta) {
        double ss = 0.0;
        for (int i = 0; i < n; ++i) {
            const double e = y[static_cast<std::size_t>(i)] - r * x[static_cast<std::size_t>(i)];
            ss += e * e;
        }
        est.std_error = std::sqrt(ss / (n - 1.0) / n) / mean_x;
    } else {
        std::vector<double> loo(static_cast<std::size_t>(n));
        double mean_loo = 0.0;
        for (int i = 0; i < n; ++i) {
            loo[static_cast<std::size_t>(i)] = (sum_y - y[static_cast<std::size_t>(i)]) /
                                               (sum_x - x[static_cast<std::size_t>(i)]);
            mean_loo += loo[static_cast<std::size_t>(i)];
        }
        mean_loo /= n;
        double ss = 0.0;
        for (const double v : loo) ss += (v - mean_loo) * (v - mean_loo);
        est.std_error = std::sqrt((n - 1.0) / n * ss);
    }
    return est;
}

} // namespace detail

// Stationary estimate of a registered functional from a cycle set.
inline StationaryEstimate estimate_stationary(const CycleSet& set, const std::string& name,
                                              SeMethod method = SeMethod::delta) {
    bool known = false;
    for (const auto& n : set.names) known = known || n == name;
    if (!known)
        throw std::invalid_argument("estimate_stationary: functional '" + name +
                                    "' was not registered before run_cycles");
    std::vector<double> y;
    for (const auto& c : set.cycles)
        if (!c.truncated) y.push_back(c.integrals.at(name));
    auto est = detail::ratio_estimate(set, y, method);
    est.truncated_cycles = set.truncated_count();
    return est;
}

// Long-run local-time rate E[L(t)]/t, i.e. cycle local-time gain over cycle
// length.  Stationarity makes this equal to the stationary mean of Q2.
inline StationaryEstimate estimate_local_time_rate(const CycleSet& set,
                                                   SeMethod method = SeMethod::delta) {
    std::vector<double> y;
    for (const auto& c : set.cycles)
        if (!c.truncated) y.push_back(c.l_gain);
    auto est = detail::ratio_estimate(set, y, method);
    est.truncated_cycles = set.truncated_count();
    return est;
}

// --- tail curves ------------------------------------------------------------

// Canonical name for a tail indicator functional; registration and lookup
// must both go through this helper so the names always match.
inline std::string tail_name(Coord coord, double level) {
    char buf[64];
    std::snprintf(buf, sizeof buf, coord == Coord::q1 ? "q1_below_%.6g" : "q2_above_%.6g", level);
    return buf;
}

// Register indicator functionals for a grid of levels: {Q1 <= -level} for q1
// (levels are magnitudes) and {Q2 >= level} for q2.
inline void add_tail_functionals(RegenConfig& cfg, Coord coord, const std::vector<double>& levels) {
    for (const double lv : levels) {
        if (coord == Coord::q1) {
            cfg.functionals.push_back(
                {tail_name(coord, lv), [lv](const DiffusionState& s) { return s.q1 <= -lv ? 1.0 : 0.0; }});
        } else {
            cfg.functionals.push_back(
                {tail_name(coord, lv), [lv](const DiffusionState& s) { return s.q2 >= lv ? 1.0 : 0.0; }});
        }
    }
}

struct TailCurve {
    std::vector<double> levels;
    std::vector<double> raw;       // ratio estimates, may be non-monotone
    std::vector<double> corrected; // isotonic nonincreasing projection of raw
    std::vector<double> std_error;
};

// Stationary tail probabilities on a level grid registered beforehand via
// add_tail_functionals.  Published both raw and isotonically corrected.
inline TailCurve tail_curve(const CycleSet& set, Coord coord, const std::vector<double>& levels) {
    TailCurve tc;
    tc.levels = levels;
    for (const double lv : levels) {
        const auto est = estimate_stationary(set, tail_name(coord, lv));
        tc.raw.push_back(est.value);
        tc.std_error.push_back(est.std_error);
    }
    tc.corrected = isotonic_nonincreasing(tc.raw);
    for (auto& v : tc.corrected) v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    return tc;
}

// --- time-average estimator -------------------------------------------------

// Single-path time-average estimate of E_pi[f] with batch-means standard
// error: the post-burn-in window is cut into n_batches equal batches and the
// spread of batch means yields the error bar.  Cross-checks the regenerative
// estimator through an entirely different variance mechanism.
inline StationaryEstimate time_average_estimate(const DiffusionParams& params, const StateFn& fn,
                                                double horizon, double burn_in,
                                                int n_batches = 32) {
    validate(params);
    require(n_batches >= 2, "time_average_estimate: need at least 2 batches");
    require(burn_in >= 0.0, "time_average_estimate: burn_in must be >= 0");
    require(horizon > burn_in, "time_average_estimate: horizon must exceed burn_in");

    NormalRng rng(params.seed);
    DiffusionState s;
    s.q1 = 0.0;
    s.q2 = 2.0 * default_B(params.beta);

    const double dt = params.dt;
    const double span = horizon - burn_in;
    std::vector<double> batch_integral(static_cast<std::size_t>(n_batches), 0.0);
    std::vector<double> batch_time(static_cast<std::size_t>(n_batches), 0.0);

    double prev_val = fn(s);
    while (s.t < horizon) {
        const double t_prev = s.t;
        s = step(s, params, rng.normal());
        const double cur_val = fn(s);
        const double mid = t_prev + 0.5 * dt;
        if (mid >= burn_in) {
            auto b = static_cast<long>((mid - burn_in) / span * n_batches);
            if (b < 0) b = 0;
            if (b >= n_batches) b = n_batches - 1;
            batch_integral[static_cast<std::size_t>(b)] += 0.5 * (prev_val + cur_val) * dt;
            batch_time[static_cast<std::size_t>(b)] += dt;
        }
        prev_val = cur_val;
    }

    double mean = 0.0;
    std::vector<double> bm(static_cast<std::size_t>(n_batches));
    for (int b = 0; b < n_batches; ++b) {
        if (!(batch_time[static_cast<std::size_t>(b)] > 0.0))
            throw NumericalError("time_average_estimate: empty batch (horizon too short)");
        bm[static_cast<std::size_t>(b)] = batch_integral[static_cast<std::size_t>(b)] /
                                          batch_time[static_cast<std::size_t>(b)];
        mean += bm[static_cast<std::size_t>(b)];
    }
    mean /= n_batches;
    double ss = 0.0;
    for (const double v : bm) ss += (v - mean) * (v - mean);

    StationaryEstimate est;
    est.value = mean;
    est.std_error = std::sqrt(ss / (n_batches - 1.0) / n_batches);
    est.n_cycles = n_batches;
    return est;
}

} // namespace jsqhw
