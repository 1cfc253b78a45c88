#pragma once

// Pre-limit model: N parallel single-server queues under join-the-shortest-
// queue routing, simulated exactly (Gillespie) in occupancy coordinates.
// Q_i = number of servers holding at least i jobs, so the state is a
// nonincreasing integer vector with Q_0 = N understood implicitly.  Arrivals
// at rate lambda = N - beta sqrt(N) increment the first coordinate i+1 with
// Q_{i+1} < Q_i (a shortest queue gains a job); departures leave level i with
// probability (Q_i - Q_{i+1}) / Q_1 (each busy server completes at unit
// rate).  Occupancy coordinates make tie-breaking among equally short queues
// irrelevant, which a test verifies against a server-level simulator.
//
// The diffusion comparison uses the centered and scaled coordinates
//   Qbar_1 = -(N - Q_1)/sqrt(N),   Qbar_i = Q_i/sqrt(N)  (i >= 2).

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "jsqhw/errors.hpp"
#include "jsqhw/rng.hpp"
#include "jsqhw/stats.hpp"

namespace jsqhw {

struct CtmcParams {
    int n_servers = 1;      // N >= 1
    double beta = 1.0;      // 0 < beta < sqrt(N), so lambda = N - beta sqrt(N) > 0
    std::uint64_t seed = 0;

    double lambda() const { return n_servers - beta * std::sqrt(double(n_servers)); }
};

inline void validate(const CtmcParams& p) {
    require(p.n_servers >= 1, "CtmcParams: n_servers must be >= 1");
    require(p.beta > 0.0 && std::isfinite(p.beta), "CtmcParams: beta must be positive");
    require(p.beta < std::sqrt(double(p.n_servers)), "CtmcParams: beta must be < sqrt(N)");
}

// Occupancy state: q[k] = Q_{k+1} = number of servers with more than k jobs.
// Nonincreasing, bounded by N, trailing zeros trimmed.
struct OccupancyState {
    std::vector<std::int64_t> q;
    double t = 0.0;

    std::int64_t level(std::size_t i) const { // Q_i, 1-based
        return i >= 1 && i <= q.size() ? q[i - 1] : (i == 0 ? -1 : 0);
    }
    std::int64_t busy() const { return q.empty() ? 0 : q.front(); }
};

inline void validate(const OccupancyState& s, const CtmcParams& p) {
    std::int64_t prev = p.n_servers;
    for (const auto v : s.q) {
        require(v >= 1 && v <= prev, "OccupancyState: coordinates must be nonincreasing in [1,N]");
        prev = v;
    }
}

// Maximum tracked queue length.  Exceeding it means the simulation left the
// regime the scaling analysis covers, so it is an error rather than a clamp.
inline constexpr std::size_t max_occupancy_levels = 64;

// Route an arrival to a shortest queue: increment Q_{i+1} for the smallest
// i >= 0 with Q_{i+1} < Q_i (Q_0 = N).
inline void arrival_update(OccupancyState& s, const CtmcParams& p) {
    std::int64_t above = p.n_servers; // Q_i while scanning level i+1
    for (std::size_t k = 0; k < s.q.size(); ++k) {
        if (s.q[k] < above) {
            ++s.q[k];
            return;
        }
        above = s.q[k];
    }
    if (s.q.size() >= max_occupancy_levels)
        throw NumericalError("arrival_update: occupancy exceeded the tracked level cap");
    s.q.push_back(1);
}

// Complete a job at a uniformly chosen busy server: level i loses a job with
// probability (Q_i - Q_{i+1}) / Q_1.  `u` is a uniform [0,1) draw.
inline void departure_update(OccupancyState& s, double u) {
    require(!s.q.empty() && s.q.front() > 0, "departure_update: no busy servers");
    require(u >= 0.0 && u < 1.0, "departure_update: u must lie in [0,1)");
    const double target = u * static_cast<double>(s.q.front());
    double cum = 0.0;
    for (std::size_t k = 0; k < s.q.size(); ++k) {
        const std::int64_t next = k + 1 < s.q.size() ? s.q[k + 1] : 0;
        cum += static_cast<double>(s.q[k] - next);
        if (target < cum || k + 1 == s.q.size()) {
            --s.q[k];
            break;
        }
    }
    while (!s.q.empty() && s.q.back() == 0) s.q.pop_back();
}

// Centered and scaled occupancy for comparison with the diffusion.
struct ScaledOccupancy {
    double qbar1 = 0.0;             // -(N - Q_1)/sqrt(N), <= 0
    std::vector<double> qbar_tail;  // Q_i/sqrt(N) for i >= 2
    double t = 0.0;
};

inline ScaledOccupancy scale(const OccupancyState& s, const CtmcParams& p) {
    const double rn = std::sqrt(double(p.n_servers));
    ScaledOccupancy out;
    out.t = s.t;
    out.qbar1 = -static_cast<double>(p.n_servers - s.busy()) / rn;
    for (std::size_t k = 1; k < s.q.size(); ++k)
        out.qbar_tail.push_back(static_cast<double>(s.q[k]) / rn);
    return out;
}

// Time-weighted observer output of a Gillespie run.
struct CtmcRunResult {
    std::vector<double> time_avg;  // one entry per observer
    std::vector<double> batch_se;  // batch-means standard errors
    OccupancyState final_state;
    std::uint64_t n_events = 0;
    std::vector<WeightedSample> samples; // per observer, only if collect_samples
};

using OccupancyFn = std::function<double(const OccupancyState&)>;

// Exact continuous-time simulation: exponential holding times with rate
// lambda + Q_1, arrival with probability lambda / (lambda + Q_1).  Observers
// are integrated with the holding-time weights over [burn_in, horizon] and
// standard errors come from 32 batch means.  With collect_samples each
// observer also yields a holding-time-weighted sample (for histograms).
inline CtmcRunResult gillespie_run(const CtmcParams& params, double horizon, double burn_in,
                                   const std::vector<OccupancyFn>& observers,
                                   bool collect_samples = false, int n_batches = 32) {
    validate(params);
    require(horizon > burn_in && burn_in >= 0.0, "gillespie_run: need 0 <= burn_in < horizon");
    require(n_batches >= 2, "gillespie_run: need at least 2 batches");

    NormalRng rng(params.seed);
    std::exponential_distribution<double> exp1(1.0);

    OccupancyState s;
    s.q.assign(1, params.n_servers); // all servers busy with one job

    const double lambda = params.lambda();
    const double span = horizon - burn_in;
    const std::size_t nobs = observers.size();
    std::vector<std::vector<double>> batch_int(nobs,
                                               std::vector<double>(static_cast<std::size_t>(n_batches), 0.0));
    std::vector<double> batch_time(static_cast<std::size_t>(n_batches), 0.0);
    CtmcRunResult res;
    if (collect_samples) res.samples.resize(nobs);

    while (s.t < horizon) {
        const double rate = lambda + static_cast<double>(s.busy());
        const double hold = exp1(rng.engine()) / rate;
        const double t_next = s.t + hold;

        // accumulate the sojourn in the current state, clipped to the window
        const double a = s.t > burn_in ? s.t : burn_in;
        const double b = t_next < horizon ? t_next : horizon;
        if (b > a) {
            const double mid = 0.5 * (a + b);
            auto bi = static_cast<long>((mid - burn_in) / span * n_batches);
            if (bi < 0) bi = 0;
            if (bi >= n_batches) bi = n_batches - 1;
            batch_time[static_cast<std::size_t>(bi)] += b - a;
            for (std::size_t j = 0; j < nobs; ++j) {
                const double v = observers[j](s);
                batch_int[j][static_cast<std::size_t>(bi)] += v * (b - a);
                if (collect_samples) res.samples[j].add(v, b - a);
            }
        }

        s.t = t_next;
        if (s.t >= horizon) break;
        if (rng.uniform() * rate < lambda) {
            arrival_update(s, params);
        } else {
            departure_update(s, rng.uniform());
        }
        ++res.n_events;
    }

    res.time_avg.assign(nobs, 0.0);
    res.batch_se.assign(nobs, 0.0);
    for (std::size_t j = 0; j < nobs; ++j) {
        std::vector<double> bm;
        double total_int = 0.0, total_time = 0.0;
        for (int b = 0; b < n_batches; ++b) {
            const double bt = batch_time[static_cast<std::size_t>(b)];
            total_int += batch_int[j][static_cast<std::size_t>(b)];
            total_time += bt;
            if (bt > 0.0) bm.push_back(batch_int[j][static_cast<std::size_t>(b)] / bt);
        }
        if (!(total_time > 0.0) || bm.size() < 2)
            throw NumericalError("gillespie_run: window too short for batch means");
        res.time_avg[j] = total_int / total_time;
        double mean = 0.0;
        for (const double v : bm) mean += v;
        mean /= static_cast<double>(bm.size());
        double ss = 0.0;
        for (const double v : bm) ss += (v - mean) * (v - mean);
        res.batch_se[j] = std::sqrt(ss / (static_cast<double>(bm.size()) - 1.0) /
                                    static_cast<double>(bm.size()));
    }
    res.final_state = s;
    return res;
}

// Default burn-in: the scaled process relaxes on an O(1) time scale, so
// 10 sqrt(N) time units is a generous cushion that still vanishes relative
// to the horizons used for stationary averages.
inline double default_ctmc_burn_in(int n_servers) {
    return 10.0 * std::sqrt(double(n_servers));
}

} // namespace jsqhw
