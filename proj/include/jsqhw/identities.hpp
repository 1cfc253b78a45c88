#pragma once

// Stationary moment identities.  Applying the generator to suitable test
// functions and taking stationary expectations yields exact linear relations
// among the moments, with every estimate obtainable from the same cycle set:
//
//   (rate)  E[L(t)]/t                = E[Q2]
//   (mix)   E[Q1 Q2^n]               = -beta/(n+1) E[Q2^n]
//   (sq)    E[Q1^2 Q2^n]             = -2 beta/(n+2)^2 E[Q2^{n+1}]
//                                      + (2/(n+2) + 2 beta^2/((n+1)(n+2))) E[Q2^n]
//   (ctr)   E[(Q1+beta)^n]           = E[(Q1+beta)^{n-1} Q2]
//                                      + (n-1) E[(Q1+beta)^{n-2}] - beta^{n-1} E[Q2]
//
// Each relation is scored as z = (lhs - rhs) / sqrt(se_lhs^2 + se_rhs^2); the
// z-scores are approximately standard normal when the integrator and the
// estimator are sound, which is what the identity suite asserts.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "jsqhw/errors.hpp"
#include "jsqhw/regeneration.hpp"

namespace jsqhw {

struct IdentityReport {
    std::string name; // relation label, e.g. "mix[n=1]"
    int n = 0;        // moment order parameter of the relation
    double lhs = 0.0;
    double lhs_se = 0.0;
    double rhs = 0.0;
    double rhs_se = 0.0;
    double z = 0.0;
};

namespace identity_names {

inline std::string q2_pow(int n) { return "q2_pow" + std::to_string(n); }
inline std::string q1_q2_pow(int n) { return "q1_q2_pow" + std::to_string(n); }
inline std::string q1sq_q2_pow(int n) { return "q1sq_q2_pow" + std::to_string(n); }
inline std::string q1pb_pow(int n) { return "q1pb_pow" + std::to_string(n); }
inline std::string q1pb_pow_q2(int n) { return "q1pb_pow" + std::to_string(n) + "_q2"; }

} // namespace identity_names

// The functionals the identity suite needs, to be registered before
// run_cycles.  Estimates are stable for n_max <= 3; higher orders need far
// more cycles than they are worth.
inline std::vector<Functional> identity_functionals(double beta, int n_max) {
    require(n_max >= 1, "identity_functionals: n_max must be >= 1");
    namespace id = identity_names;
    std::vector<Functional> fs;

    const auto ipow = [](double x, int k) {
        double r = 1.0;
        for (int i = 0; i < k; ++i) r *= x;
        return r;
    };

    for (int n = 1; n <= n_max + 1; ++n)
        fs.push_back({id::q2_pow(n), [n, ipow](const DiffusionState& s) { return ipow(s.q2, n); }});
    for (int n = 0; n <= n_max; ++n)
        fs.push_back({id::q1_q2_pow(n),
                      [n, ipow](const DiffusionState& s) { return s.q1 * ipow(s.q2, n); }});
    for (int n = 0; n <= n_max; ++n)
        fs.push_back({id::q1sq_q2_pow(n),
                      [n, ipow](const DiffusionState& s) { return s.q1 * s.q1 * ipow(s.q2, n); }});
    for (int n = 1; n <= n_max; ++n)
        fs.push_back({id::q1pb_pow(n),
                      [n, beta, ipow](const DiffusionState& s) { return ipow(s.q1 + beta, n); }});
    for (int n = 1; n < n_max; ++n)
        fs.push_back({id::q1pb_pow_q2(n),
                      [n, beta, ipow](const DiffusionState& s) { return ipow(s.q1 + beta, n) * s.q2; }});
    return fs;
}

namespace detail {

struct Est {
    double value;
    double se;
};

// Linear combination of independent estimates (correlations between
// estimates from the same cycles are ignored, which only makes the z-scores
// conservative).
inline Est combine(const std::vector<double>& coef, const std::vector<Est>& parts) {
    Est out{0.0, 0.0};
    double var = 0.0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        out.value += coef[i] * parts[i].value;
        var += coef[i] * coef[i] * parts[i].se * parts[i].se;
    }
    out.se = std::sqrt(var);
    return out;
}

inline double zscore(const Est& lhs, const Est& rhs) {
    const double denom = std::sqrt(lhs.se * lhs.se + rhs.se * rhs.se);
    if (denom == 0.0) return lhs.value == rhs.value ? 0.0 : std::numeric_limits<double>::infinity();
    return (lhs.value - rhs.value) / denom;
}

} // namespace detail

// Score every identity up to order n_max against a cycle set.  Throws
// std::invalid_argument naming the first functional that was not registered.
inline std::vector<IdentityReport> identity_checks(const CycleSet& set, double beta, int n_max) {
    require(n_max >= 1, "identity_checks: n_max must be >= 1");
    namespace id = identity_names;

    const auto est = [&set](const std::string& name) -> detail::Est {
        const auto e = estimate_stationary(set, name);
        return {e.value, e.std_error};
    };
    // E[Q2^0] = 1 and E[(Q1+beta)^0] = 1 exactly.
    const auto unit = detail::Est{1.0, 0.0};
    const auto q2m = [&](int n) { return n == 0 ? unit : est(id::q2_pow(n)); };
    const auto q1pbm = [&](int n) { return n == 0 ? unit : est(id::q1pb_pow(n)); };
    // (Q1+beta)^{n} Q2: for n = 0 this is just Q2.
    const auto q1pbm_q2 = [&](int n) { return n == 0 ? q2m(1) : est(id::q1pb_pow_q2(n)); };

    std::vector<IdentityReport> out;
    const auto push = [&out](std::string name, int n, detail::Est lhs, detail::Est rhs) {
        IdentityReport r;
        r.name = std::move(name);
        r.n = n;
        r.lhs = lhs.value;
        r.lhs_se = lhs.se;
        r.rhs = rhs.value;
        r.rhs_se = rhs.se;
        r.z = detail::zscore(lhs, rhs);
        out.push_back(std::move(r));
    };

    // (rate) local-time throughput balances the stationary mean of Q2
    {
        const auto lt = estimate_local_time_rate(set);
        push("rate", 0, {lt.value, lt.std_error}, q2m(1));
    }
    // (mix) E[Q1 Q2^n] = -beta/(n+1) E[Q2^n]
    for (int n = 0; n <= n_max; ++n) {
        const auto rhs = detail::combine({-beta / (n + 1.0)}, {q2m(n)});
        push("mix[n=" + std::to_string(n) + "]", n, est(id::q1_q2_pow(n)), rhs);
    }
    // (sq) E[Q1^2 Q2^n] = -2b/(n+2)^2 E[Q2^{n+1}] + (2/(n+2) + 2b^2/((n+1)(n+2))) E[Q2^n]
    for (int n = 0; n <= n_max; ++n) {
        const double c1 = -2.0 * beta / ((n + 2.0) * (n + 2.0));
        const double c2 = 2.0 / (n + 2.0) + 2.0 * beta * beta / ((n + 1.0) * (n + 2.0));
        const auto rhs = detail::combine({c1, c2}, {q2m(n + 1), q2m(n)});
        push("sq[n=" + std::to_string(n) + "]", n, est(id::q1sq_q2_pow(n)), rhs);
    }
    // (ctr) E[(Q1+b)^n] = E[(Q1+b)^{n-1} Q2] + (n-1) E[(Q1+b)^{n-2}] - b^{n-1} E[Q2]
    for (int n = 1; n <= n_max; ++n) {
        const auto rhs = detail::combine({1.0, n - 1.0, -std::pow(beta, n - 1)},
                                         {q1pbm_q2(n - 1), q1pbm(n >= 2 ? n - 2 : 0), q2m(1)});
        push("ctr[n=" + std::to_string(n) + "]", n, q1pbm(n), rhs);
    }
    return out;
}

} // namespace jsqhw
