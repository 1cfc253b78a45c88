#pragma once

// Closed-form reference laws for calibrating the simulators:
// scale-function exit probabilities for drifted Brownian motion, the running
// supremum of a negatively drifted Brownian motion, Ornstein-Uhlenbeck
// first-passage survival, the Gamma(2,1) law, standard normal moments, and
// M/M/1 queue-length tails.  All functions are pure and allocation-free.

#include <cmath>
#include <cstdint>

#include "jsqhw/errors.hpp"

namespace jsqhw::analytic {

// Standard normal CDF.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// Two-sided exit problem for X(t) = sqrt(2) W(t) - beta t started at 0:
// probability of hitting +a before -b.
struct ExitProblem {
    double a = 1.0;    // upper barrier, > 0
    double b = 1.0;    // lower barrier (distance below the origin), > 0
    double beta = 0.0; // drift magnitude (downward), >= 0
};

inline void validate(const ExitProblem& p) {
    require(p.a > 0.0 && std::isfinite(p.a), "ExitProblem: a must be positive and finite");
    require(p.b > 0.0 && std::isfinite(p.b), "ExitProblem: b must be positive and finite");
    require(p.beta >= 0.0 && std::isfinite(p.beta), "ExitProblem: beta must be >= 0 and finite");
}

// log P(hit +a before -b).  The scale function of sqrt(2)W - beta t is
// s(x) = exp(beta x), so P = (1 - e^{-beta b}) / (e^{beta a} - e^{-beta b}).
// Evaluated in log-space throughout, so it stays meaningful when beta*a is in
// the thousands and the probability itself underflows double.
inline double bm_exit_log_prob(const ExitProblem& p) {
    validate(p);
    if (p.beta * (p.a + p.b) < 1e-12) {
        // Driftless limit: P = b / (a + b).
        return std::log(p.b / (p.a + p.b));
    }
    // log(1 - e^{-beta b})
    const double log_num = std::log(-std::expm1(-p.beta * p.b));
    // log(e^{beta a} - e^{-beta b}) = beta a + log(1 - e^{-beta (a+b)})
    const double log_den = p.beta * p.a + std::log1p(-std::exp(-p.beta * (p.a + p.b)));
    return log_num - log_den;
}

// P(hit +a before -b) for X(t) = sqrt(2) W(t) - beta t.  May underflow to 0
// for very large beta*a; use bm_exit_log_prob when the log is needed.
inline double bm_exit_prob(const ExitProblem& p) {
    return std::exp(bm_exit_log_prob(p));
}

// Tail of the all-time supremum of X(t) = sqrt(2) W(t) - beta t, beta > 0:
// sup X ~ Exp(beta), so P(sup X >= level) = exp(-beta * level).
inline double bm_drift_tail_sup(double beta, double level) {
    require(beta > 0.0 && std::isfinite(beta), "bm_drift_tail_sup: beta must be positive");
    require(level >= 0.0 && std::isfinite(level), "bm_drift_tail_sup: level must be >= 0");
    return std::exp(-beta * level);
}

// Survival probability that the OU process dX = -X dt + sqrt(2) dW started at
// x0 < 0 has not hit 0 by time t.  Via the time change X(t) =
// e^{-t}(x0 + W*(e^{2t} - 1)) the problem reduces to a Brownian level crossing:
// survival = 2 Phi(|x0| / sqrt(e^{2t} - 1)) - 1.
inline double ou_hit_zero_tail(double x0, double t) {
    require(x0 < 0.0 && std::isfinite(x0), "ou_hit_zero_tail: x0 must be negative");
    require(t > 0.0 && std::isfinite(t), "ou_hit_zero_tail: t must be positive");
    const double s = std::expm1(2.0 * t); // e^{2t} - 1
    const double v = 2.0 * normal_cdf(-x0 / std::sqrt(s)) - 1.0;
    return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
}

// Gamma(2,1) density, CDF and raw moments: pdf(x) = x e^{-x},
// cdf(x) = 1 - (1+x) e^{-x}, E[X^n] = (n+1)!.
inline double gamma2_pdf(double x) {
    return x <= 0.0 ? 0.0 : x * std::exp(-x);
}

inline double gamma2_cdf(double x) {
    if (x <= 0.0) return 0.0;
    // 1 - (1+x)e^{-x}, written to avoid cancellation for small x.
    return -std::expm1(-x) - x * std::exp(-x);
}

inline double gamma2_moment(int n) {
    require(n >= 0, "gamma2_moment: order must be >= 0");
    double m = 1.0;
    for (int k = 2; k <= n + 1; ++k) m *= k; // (n+1)!
    return m;
}

// Raw moments of the standard normal: E[Z^{2n}] = (2n)! / (2^n n!) =
// 1*3*5*...*(2n-1); odd moments vanish.
inline double normal_even_moment(int n) {
    require(n >= 0, "normal_even_moment: order must be >= 0");
    double m = 1.0;
    for (int k = 1; k <= n; ++k) m *= 2.0 * k - 1.0;
    return m;
}

inline double normal_moment(int k) {
    require(k >= 0, "normal_moment: order must be >= 0");
    return (k % 2 == 1) ? 0.0 : normal_even_moment(k / 2);
}

// Stationary tail of the M/M/1 queue length with utilization rho:
// P(queue length >= i) = rho^i.
inline double mm1_tail(double rho, int i) {
    require(rho > 0.0 && rho < 1.0, "mm1_tail: rho must lie in (0,1)");
    require(i >= 0, "mm1_tail: level must be >= 0");
    return std::pow(rho, i);
}

} // namespace jsqhw::analytic
