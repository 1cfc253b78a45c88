#pragma once

// Euler-Maruyama integrator for the two-dimensional reflected diffusion
//
//   dQ1 = (-beta - Q1 + Q2) dt + sqrt(2) dW - dL,   Q1 <= 0,
//   dQ2 = -Q2 dt + dL,                              Q2 > 0,
//
// where L is the local time of Q1 at the origin: nondecreasing, growing only
// while Q1 = 0.  Each step applies a one-step Skorokhod projection: the
// unconstrained update u is split into q1' = min(u, 0) and a local-time
// increment max(u, 0) that is fed into Q2.  Q2 is kept strictly positive by a
// tiny floor so that multiplicative decay can never produce an exact zero.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "jsqhw/errors.hpp"
#include "jsqhw/rng.hpp"

namespace jsqhw {

struct DiffusionParams {
    double beta = 1.0;        // drift parameter, > 0
    double dt = 1e-3;         // step size, in (0,1)
    double q2_floor = 1e-300; // lower clamp for q2, in (0,1)
    std::uint64_t seed = 0;   // master seed for drivers that own their RNG
};

// Default step size: resolves both the O(1) relaxation time scale and the
// 1/beta (resp. beta) scale that dominates when beta is large (small).
inline double default_dt(double beta) {
    const double scale = beta > 1.0 ? beta : 1.0 / beta;
    const double dt = 1e-2 / scale;
    return dt < 1e-3 ? dt : 1e-3;
}

inline DiffusionParams make_params(double beta, std::uint64_t seed = 0) {
    DiffusionParams p;
    p.beta = beta;
    p.dt = default_dt(beta);
    p.seed = seed;
    return p;
}

inline void validate(const DiffusionParams& p) {
    require(p.beta > 0.0 && std::isfinite(p.beta), "DiffusionParams: beta must be positive");
    require(p.dt > 0.0 && p.dt < 1.0, "DiffusionParams: dt must lie in (0,1)");
    require(p.q2_floor > 0.0 && p.q2_floor < 1.0, "DiffusionParams: q2_floor must lie in (0,1)");
}

struct DiffusionState {
    double t = 0.0;  // clock
    double q1 = 0.0; // first coordinate, <= 0
    double q2 = 1.0; // second coordinate, >= q2_floor
    double l = 0.0;  // accumulated local time, nondecreasing
};

inline void validate(const DiffusionState& s, const DiffusionParams& p) {
    require(std::isfinite(s.t) && std::isfinite(s.q1) && std::isfinite(s.q2) && std::isfinite(s.l),
            "DiffusionState: fields must be finite");
    require(s.q1 <= 0.0, "DiffusionState: q1 must be <= 0");
    require(s.q2 >= p.q2_floor, "DiffusionState: q2 must be >= q2_floor");
    require(s.l >= 0.0, "DiffusionState: l must be >= 0");
}

// Drift field at (q1, q2).
struct Drift {
    double d1;
    double d2;
};

inline Drift drift(double q1, double q2, double beta) {
    return {-beta - q1 + q2, -q2};
}

// Test-harness switches for step().  Defaults integrate the full reflected
// system.  With mean_revert and couple_q2 off and no reflection the update
// degenerates to the drifted Brownian motion sqrt(2) W - beta t, and with only
// mean_revert on (beta = 0) to the OU process dX = -X dt + sqrt(2) dW; the
// calibration tests exploit both reductions.
struct StepMode {
    bool reflect = true;     // project q1 onto (-inf, 0] and collect local time
    bool couple_q2 = true;   // evolve q2 (off: q2 is held fixed)
    bool mean_revert = true; // include the -q1 term of the drift
};

// One Euler step with Skorokhod projection, driven by a standard normal z.
// Rejects non-finite input and output.  The step keeps the exact identity
//   (q1' + q2') - (q1 + q2) = sqrt(2 dt) z - beta dt - q1 dt
// whenever the q2 floor is inactive, which the conservation tests check at
// machine precision.
inline DiffusionState step(const DiffusionState& s, const DiffusionParams& p, double z,
                           StepMode mode = {}) {
    if (!std::isfinite(z)) throw NumericalError("step: noise input is not finite");
    const double dt = p.dt;
    const double d1 = -p.beta + (mode.mean_revert ? -s.q1 : 0.0) + (mode.couple_q2 ? s.q2 : 0.0);
    const double u = s.q1 + d1 * dt + std::sqrt(2.0 * dt) * z;
    if (!std::isfinite(u)) throw NumericalError("step: state blew up");

    DiffusionState n;
    n.t = s.t + dt;
    if (!mode.reflect) {
        n.q1 = u;
        n.l = s.l;
        n.q2 = mode.couple_q2 ? s.q2 * (1.0 - dt) : s.q2;
    } else {
        const double dl = u > 0.0 ? u : 0.0;
        n.q1 = u > 0.0 ? 0.0 : u;
        n.l = s.l + dl;
        n.q2 = mode.couple_q2 ? s.q2 * (1.0 - dt) + dl : s.q2;
    }
    if (mode.couple_q2 && n.q2 < p.q2_floor) n.q2 = p.q2_floor;
    return n;
}

using StateFn = std::function<double(const DiffusionState&)>;

// Outcome of simulate_until.
struct SimResult {
    DiffusionState state;          // state at the stop (or at the time cap)
    bool stopped = false;          // stop predicate fired
    bool truncated = false;        // time cap fired first
    std::vector<double> integrals; // trapezoid path integrals, one per observer
};

// Advance the state until `stop` fires or the clock reaches `max_time`
// (absolute).  Observers are integrated along the path with the trapezoid
// rule.  Deterministic: the driver owns an RNG seeded from params.seed.
inline SimResult simulate_until(DiffusionState state, const DiffusionParams& params,
                                const std::function<bool(const DiffusionState&)>& stop,
                                double max_time, std::span<const StateFn> observers = {}) {
    validate(params);
    validate(state, params);
    require(max_time > state.t, "simulate_until: max_time must exceed the current clock");

    NormalRng rng(params.seed);
    SimResult res;
    res.integrals.assign(observers.size(), 0.0);
    std::vector<double> prev(observers.size());
    for (std::size_t i = 0; i < observers.size(); ++i) prev[i] = observers[i](state);

    if (stop(state)) {
        res.state = state;
        res.stopped = true;
        return res;
    }
    while (state.t < max_time) {
        state = step(state, params, rng.normal());
        for (std::size_t i = 0; i < observers.size(); ++i) {
            const double cur = observers[i](state);
            res.integrals[i] += 0.5 * (prev[i] + cur) * params.dt;
            prev[i] = cur;
        }
        if (stop(state)) {
            res.state = state;
            res.stopped = true;
            return res;
        }
    }
    res.state = state;
    res.truncated = true;
    return res;
}

// First-passage result for hitting_time_q1 / hitting_time_q2.  `time` is the
// elapsed time from the initial state to the (linearly interpolated) crossing.
struct HittingResult {
    bool hit = false;
    double time = 0.0;            // elapsed time to the hit (when hit)
    DiffusionState state_at_hit;  // interpolated state, crossed coordinate exact
    double truncated_at = 0.0;    // elapsed budget consumed when not hit
};

namespace detail {

// Shared first-passage loop.  `coord` selects q1 (0) or q2 (1).  A start
// exactly at the level is an immediate hit; otherwise the crossing is located
// by sign change of (coord - level) between consecutive steps and resolved by
// linear interpolation inside the bracketing step.
inline HittingResult hitting_time(DiffusionState state, const DiffusionParams& params,
                                  int coord, double level, double max_time) {
    validate(params);
    validate(state, params);
    require(max_time > 0.0 && std::isfinite(max_time), "hitting_time: max_time must be positive");

    const auto value = [coord](const DiffusionState& s) { return coord == 0 ? s.q1 : s.q2; };

    HittingResult res;
    if (value(state) == level) {
        res.hit = true;
        res.time = 0.0;
        res.state_at_hit = state;
        return res;
    }

    NormalRng rng(params.seed);
    const double t0 = state.t;
    const double v0 = value(state) - level;
    DiffusionState prev = state;
    double vprev = v0;
    while (state.t - t0 < max_time) {
        state = step(state, params, rng.normal());
        const double v = value(state) - level;
        if (v == 0.0 || (v > 0.0) != (vprev > 0.0)) {
            // Crossing inside (prev.t, state.t]; interpolate all components
            // linearly and pin the crossed coordinate to the level exactly.
            const double theta = v == 0.0 ? 1.0 : vprev / (vprev - v);
            DiffusionState hit;
            hit.t = prev.t + theta * params.dt;
            hit.q1 = prev.q1 + theta * (state.q1 - prev.q1);
            hit.q2 = prev.q2 + theta * (state.q2 - prev.q2);
            hit.l = prev.l + theta * (state.l - prev.l);
            if (coord == 0) hit.q1 = level; else hit.q2 = level;
            if (hit.q1 > 0.0) hit.q1 = 0.0;
            if (hit.q2 < params.q2_floor) hit.q2 = params.q2_floor;
            res.hit = true;
            res.time = hit.t - t0;
            res.state_at_hit = hit;
            return res;
        }
        prev = state;
        vprev = v;
    }
    res.hit = false;
    res.truncated_at = max_time;
    res.state_at_hit = state;
    return res;
}

} // namespace detail

// Elapsed first-passage time of Q1 to `level` (<= 0), capped at max_time.
inline HittingResult hitting_time_q1(const DiffusionState& s, const DiffusionParams& p,
                                     double level, double max_time) {
    require(level <= 0.0, "hitting_time_q1: level must be <= 0");
    return detail::hitting_time(s, p, 0, level, max_time);
}

// Elapsed first-passage time of Q2 to `level` (> 0), capped at max_time.
inline HittingResult hitting_time_q2(const DiffusionState& s, const DiffusionParams& p,
                                     double level, double max_time) {
    require(level > 0.0, "hitting_time_q2: level must be positive");
    return detail::hitting_time(s, p, 1, level, max_time);
}

// Sampled trajectory for export: every `stride`-th step, including the start.
inline std::vector<DiffusionState> record_trajectory(DiffusionState state,
                                                     const DiffusionParams& params,
                                                     double horizon, int stride = 1) {
    validate(params);
    validate(state, params);
    require(horizon > 0.0, "record_trajectory: horizon must be positive");
    require(stride >= 1, "record_trajectory: stride must be >= 1");

    NormalRng rng(params.seed);
    std::vector<DiffusionState> out;
    const auto n_steps = static_cast<std::uint64_t>(std::ceil(horizon / params.dt));
    out.reserve(n_steps / static_cast<std::uint64_t>(stride) + 2);
    out.push_back(state);
    for (std::uint64_t k = 1; k <= n_steps; ++k) {
        state = step(state, params, rng.normal());
        if (k % static_cast<std::uint64_t>(stride) == 0 || k == n_steps) out.push_back(state);
    }
    return out;
}

} // namespace jsqhw
