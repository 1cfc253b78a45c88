#pragma once

// Weighted-sample statistics: right-continuous weighted empirical CDFs,
// Kolmogorov-Smirnov distance against a reference law, least-squares tail
// slopes on (level, log prob) points, isotonic (PAVA) monotone correction,
// and time-weighted histograms whose masses are exactly the CDF increments.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

#include "jsqhw/errors.hpp"

namespace jsqhw {

// A sample with strictly positive weights (time weights, in this project).
struct WeightedSample {
    std::vector<double> values;
    std::vector<double> weights;

    void add(double v, double w) {
        values.push_back(v);
        weights.push_back(w);
    }
    std::size_t size() const { return values.size(); }
};

inline void validate(const WeightedSample& s) {
    require(s.values.size() == s.weights.size(), "WeightedSample: values/weights length mismatch");
    require(!s.values.empty(), "WeightedSample: sample is empty");
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        require(std::isfinite(s.values[i]), "WeightedSample: values must be finite");
        require(s.weights[i] > 0.0 && std::isfinite(s.weights[i]),
                "WeightedSample: weights must be positive and finite");
    }
}

// Right-continuous step CDF of a weighted sample.  Stores the distinct jump
// points with cumulative mass just after (cum) each jump; the left limit at a
// jump is the previous cumulative value.
class WeightedCdf {
public:
    WeightedCdf(std::vector<double> points, std::vector<double> cum)
        : points_(std::move(points)), cum_(std::move(cum)) {}

    // F(x), right-continuous.
    double operator()(double x) const {
        const auto it = std::upper_bound(points_.begin(), points_.end(), x);
        if (it == points_.begin()) return 0.0;
        return cum_[static_cast<std::size_t>(it - points_.begin()) - 1];
    }

    // Left limit F(x-).
    double below(double x) const {
        const auto it = std::lower_bound(points_.begin(), points_.end(), x);
        if (it == points_.begin()) return 0.0;
        return cum_[static_cast<std::size_t>(it - points_.begin()) - 1];
    }

    const std::vector<double>& points() const { return points_; }
    const std::vector<double>& cum() const { return cum_; }

private:
    std::vector<double> points_; // distinct jump locations, ascending
    std::vector<double> cum_;    // cumulative mass after each jump, ends at 1
};

inline WeightedCdf weighted_cdf(const WeightedSample& sample) {
    validate(sample);
    const std::size_t n = sample.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return sample.values[a] < sample.values[b]; });

    const double total = std::accumulate(sample.weights.begin(), sample.weights.end(), 0.0);
    std::vector<double> points, cum;
    points.reserve(n);
    cum.reserve(n);
    double running = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double v = sample.values[order[k]];
        running += sample.weights[order[k]];
        if (!points.empty() && points.back() == v) {
            cum.back() = running / total;
        } else {
            points.push_back(v);
            cum.push_back(running / total);
        }
    }
    cum.back() = 1.0; // kill accumulated rounding at the top
    return WeightedCdf(std::move(points), std::move(cum));
}

// Kolmogorov-Smirnov distance between the weighted empirical CDF and a
// reference CDF, evaluated on both sides of every jump (the supremum of
// |F - R| over the line is attained at a jump side).
inline double ks_distance(const WeightedSample& sample,
                          const std::function<double(double)>& reference_cdf) {
    const WeightedCdf F = weighted_cdf(sample);
    double d = 0.0;
    for (std::size_t i = 0; i < F.points().size(); ++i) {
        const double r = reference_cdf(F.points()[i]);
        require_finite(r, "ks_distance: reference CDF value");
        const double lo = i == 0 ? 0.0 : F.cum()[i - 1];
        const double hi = F.cum()[i];
        d = std::max(d, std::max(std::fabs(hi - r), std::fabs(lo - r)));
    }
    return d;
}

// Least-squares line fit on (level, log prob) points.  Non-finite log
// probabilities (empty tail estimates) are dropped; at least three finite
// points are required.  decay_rate = -slope, so a positive rate means decay.
struct TailFit {
    double decay_rate = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int n_used = 0;
};

inline TailFit tail_slope(const std::vector<double>& levels,
                          const std::vector<double>& log_probs) {
    require(levels.size() == log_probs.size(), "tail_slope: length mismatch");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (std::isfinite(levels[i]) && std::isfinite(log_probs[i])) {
            x.push_back(levels[i]);
            y.push_back(log_probs[i]);
        }
    }
    if (x.size() < 3)
        throw NumericalError("tail_slope: fewer than 3 finite points");

    const auto n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0) throw NumericalError("tail_slope: degenerate level grid");
    const double slope = sxy / sxx;
    TailFit fit;
    fit.decay_rate = -slope;
    fit.intercept = my - slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    fit.n_used = static_cast<int>(x.size());
    return fit;
}

// Isotonic nonincreasing projection (pool-adjacent-violators).  Used to
// publish monotone tail curves next to the raw estimates.
inline std::vector<double> isotonic_nonincreasing(const std::vector<double>& y) {
    std::vector<double> level;  // pooled block means
    std::vector<double> weight; // block sizes
    for (const double v : y) {
        level.push_back(v);
        weight.push_back(1.0);
        // merge while the nonincreasing constraint is violated
        while (level.size() >= 2 && level[level.size() - 2] < level.back()) {
            const double w = weight[weight.size() - 2] + weight.back();
            const double m =
                (level[level.size() - 2] * weight[weight.size() - 2] + level.back() * weight.back()) / w;
            level.pop_back();
            weight.pop_back();
            level.back() = m;
            weight.back() = w;
        }
    }
    std::vector<double> out;
    out.reserve(y.size());
    for (std::size_t b = 0; b < level.size(); ++b)
        for (int k = 0; k < static_cast<int>(weight[b] + 0.5); ++k) out.push_back(level[b]);
    return out;
}

// Fixed-width histogram of a weighted sample.  Masses are normalized CDF
// increments: a point exactly on an interior bin edge belongs to the bin on
// the right, and the rightmost edge is inclusive.  A degenerate value range
// collapses to a single bin carrying all mass.
struct Histogram {
    std::vector<double> edges;  // n_bins + 1 ascending edges
    std::vector<double> masses; // n_bins masses, summing to 1
};

inline Histogram histogram(const WeightedSample& sample, int n_bins) {
    validate(sample);
    require(n_bins >= 1, "histogram: need at least one bin");
    const auto [lo_it, hi_it] = std::minmax_element(sample.values.begin(), sample.values.end());
    const double lo = *lo_it, hi = *hi_it;

    Histogram h;
    if (lo == hi) {
        h.edges = {lo, hi};
        h.masses = {1.0};
        return h;
    }
    h.edges.resize(static_cast<std::size_t>(n_bins) + 1);
    for (int b = 0; b <= n_bins; ++b)
        h.edges[static_cast<std::size_t>(b)] = lo + (hi - lo) * (static_cast<double>(b) / n_bins);
    h.edges.front() = lo;
    h.edges.back() = hi;

    h.masses.assign(static_cast<std::size_t>(n_bins), 0.0);
    const double total = std::accumulate(sample.weights.begin(), sample.weights.end(), 0.0);
    const double width = (hi - lo) / n_bins;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        auto b = static_cast<long>(std::floor((sample.values[i] - lo) / width));
        if (b < 0) b = 0;
        if (b >= n_bins) b = n_bins - 1;
        h.masses[static_cast<std::size_t>(b)] += sample.weights[i] / total;
    }
    return h;
}

// Basic weighted moments used throughout the experiment layer.
inline double weighted_mean(const WeightedSample& s) {
    validate(s);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        num += s.values[i] * s.weights[i];
        den += s.weights[i];
    }
    return num / den;
}

inline double weighted_moment(const WeightedSample& s, int order) {
    validate(s);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        num += std::pow(s.values[i], order) * s.weights[i];
        den += s.weights[i];
    }
    return num / den;
}

// Weighted quantile (right-continuous inverse of the weighted CDF).
inline double weighted_quantile(const WeightedSample& s, double p) {
    require(p >= 0.0 && p <= 1.0, "weighted_quantile: p must lie in [0,1]");
    const WeightedCdf F = weighted_cdf(s);
    for (std::size_t i = 0; i < F.points().size(); ++i)
        if (F.cum()[i] >= p) return F.points()[i];
    return F.points().back();
}

} // namespace jsqhw
