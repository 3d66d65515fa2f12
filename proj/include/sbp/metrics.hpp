#pragma once

#include <sbp/error.hpp>

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace sbp::metrics {

/// Point estimate with a batch-means confidence interval.
struct Estimate {
    double mean = std::nan("");
    double se = std::nan("");
    double ci_low = std::nan("");
    double ci_high = std::nan("");
    bool defined = false;
};

inline double t_quantile(double confidence, std::size_t dof) {
    if (dof == 0) return std::numeric_limits<double>::infinity();
    boost::math::students_t dist(static_cast<double>(dof));
    return boost::math::quantile(dist, 0.5 + confidence / 2.0);
}

/// Mean, standard error and Student-t interval of i.i.d.-ish samples.
inline Estimate summarize(const std::vector<double>& samples, double confidence = 0.95) {
    Estimate e;
    if (samples.empty()) return e;
    double sum = 0.0;
    for (double v : samples) sum += v;
    e.mean = sum / static_cast<double>(samples.size());
    e.defined = true;
    if (samples.size() < 2) {
        e.se = std::nan("");
        e.ci_low = e.ci_high = e.mean;
        return e;
    }
    double ss = 0.0;
    for (double v : samples) ss += (v - e.mean) * (v - e.mean);
    const double var = ss / static_cast<double>(samples.size() - 1);
    e.se = std::sqrt(var / static_cast<double>(samples.size()));
    const double half = t_quantile(confidence, samples.size() - 1) * e.se;
    e.ci_low = e.mean - half;
    e.ci_high = e.mean + half;
    return e;
}

/// Time integral of a piecewise-constant signal over [warmup, horizon],
/// split into equal-length batches for batch-means error estimates.
///
/// Point events (counts) can be recorded too; their batch "integral" is the
/// count, so the estimate is a rate per unit time.
class TimeAverage {
public:
    TimeAverage() = default;
    TimeAverage(double start, double end, std::size_t batches)
        : start_(start), end_(end), sums_(batches, 0.0), lengths_(batches, 0.0) {
        if (batches == 0) throw Error("TimeAverage needs at least one batch");
        const double width = batch_width();
        for (auto& l : lengths_) l = width;
    }

    /// Adds value * |[t0, t1] ∩ window|, distributed over batches.
    void add(double t0, double t1, double value) {
        if (value == 0.0 || sums_.empty()) return;
        t0 = std::max(t0, start_);
        t1 = std::min(t1, end_);
        if (!(t1 > t0)) return;
        const double width = batch_width();
        auto b = batch_of(t0);
        while (t0 < t1 && b < sums_.size()) {
            const double batch_end = start_ + width * static_cast<double>(b + 1);
            const double seg_end = (b + 1 == sums_.size()) ? t1 : std::min(t1, batch_end);
            sums_[b] += value * (seg_end - t0);
            t0 = seg_end;
            ++b;
        }
    }

    /// Records `amount` occurrences at time t (ignored outside the window).
    void count(double t, double amount = 1.0) {
        if (sums_.empty() || t < start_ || t > end_) return;
        sums_[batch_of(t)] += amount;
    }

    /// Concatenates another accumulator's batches (e.g. a later half-window
    /// or an independent replication).
    void merge(const TimeAverage& other) {
        if (sums_.empty()) {
            *this = other;
            return;
        }
        sums_.insert(sums_.end(), other.sums_.begin(), other.sums_.end());
        lengths_.insert(lengths_.end(), other.lengths_.begin(), other.lengths_.end());
        end_ = std::max(end_, other.end_);
    }

    [[nodiscard]] double total() const {
        double s = 0.0;
        for (double v : sums_) s += v;
        return s;
    }
    [[nodiscard]] double window() const {
        double s = 0.0;
        for (double v : lengths_) s += v;
        return s;
    }
    [[nodiscard]] const std::vector<double>& batch_sums() const noexcept { return sums_; }
    [[nodiscard]] const std::vector<double>& batch_lengths() const noexcept { return lengths_; }

    [[nodiscard]] Estimate estimate(double confidence = 0.95) const {
        if (!(window() > 0.0)) throw WindowEmpty("estimation window is empty");
        std::vector<double> means(sums_.size());
        for (std::size_t b = 0; b < sums_.size(); ++b) means[b] = sums_[b] / lengths_[b];
        Estimate e = summarize(means, confidence);
        // equal batch lengths within one run; the pooled mean is exact either way
        e.mean = total() / window();
        if (std::isfinite(e.se)) {
            const double half = t_quantile(confidence, means.size() - 1) * e.se;
            e.ci_low = e.mean - half;
            e.ci_high = e.mean + half;
        } else {
            e.ci_low = e.ci_high = e.mean;
        }
        return e;
    }

private:
    [[nodiscard]] double batch_width() const {
        return (end_ - start_) / static_cast<double>(sums_.size());
    }
    [[nodiscard]] std::size_t batch_of(double t) const {
        const double width = batch_width();
        if (!(width > 0.0)) return 0;
        const auto b = static_cast<std::size_t>((t - start_) / width);
        return std::min(b, sums_.size() - 1);
    }

    double start_ = 0.0;
    double end_ = 0.0;
    std::vector<double> sums_;
    std::vector<double> lengths_;
};

/// Ratio of two time integrals, e.g. cost per active server. Undefined
/// (not 0/0) when the denominator integral is zero.
inline Estimate ratio_estimate(const TimeAverage& num, const TimeAverage& den, double confidence = 0.95) {
    if (!(den.window() > 0.0)) throw WindowEmpty("estimation window is empty");
    Estimate e;
    const double d = den.total();
    if (!(d > 0.0)) return e;
    std::vector<double> ratios;
    for (std::size_t b = 0; b < den.batch_sums().size(); ++b) {
        if (den.batch_sums()[b] > 0.0) ratios.push_back(num.batch_sums()[b] / den.batch_sums()[b]);
    }
    e = summarize(ratios, confidence);
    e.mean = num.total() / d;
    if (std::isfinite(e.se)) {
        const double half = t_quantile(confidence, ratios.size() - 1) * e.se;
        e.ci_low = e.mean - half;
        e.ci_high = e.mean + half;
    }
    e.defined = true;
    return e;
}

/// Time-averaged observables of an infinite-server run.
struct MetricsAccumulator {
    TimeAverage active;       // servers with at least one real job
    TimeAverage cost;         // sum of h(real configuration) over servers
    TimeAverage virtual_jobs;
    TimeAverage backup_jobs;  // real jobs on backup servers
    TimeAverage real_jobs;
    std::vector<TimeAverage> tokens;  // per type
    std::vector<double> occupancy;    // time integral of X_k per configuration
    std::size_t events = 0;           // events inside the window
    double window_start = 0.0;
    double window_end = 0.0;

    MetricsAccumulator() = default;
    MetricsAccumulator(double start, double end, std::size_t batches, std::size_t phases,
                       std::size_t configs)
        : active(start, end, batches)
        , cost(start, end, batches)
        , virtual_jobs(start, end, batches)
        , backup_jobs(start, end, batches)
        , real_jobs(start, end, batches)
        , tokens(phases, TimeAverage(start, end, batches))
        , occupancy(configs, 0.0)
        , window_start(start)
        , window_end(end) {}

    void merge(const MetricsAccumulator& o) {
        active.merge(o.active);
        cost.merge(o.cost);
        virtual_jobs.merge(o.virtual_jobs);
        backup_jobs.merge(o.backup_jobs);
        real_jobs.merge(o.real_jobs);
        if (tokens.empty()) tokens = o.tokens;
        else for (std::size_t i = 0; i < tokens.size(); ++i) tokens[i].merge(o.tokens[i]);
        if (occupancy.empty()) occupancy = o.occupancy;
        else for (std::size_t k = 0; k < occupancy.size(); ++k) occupancy[k] += o.occupancy[k];
        events += o.events;
        window_end = std::max(window_end, o.window_end);
    }
};

struct Report {
    Estimate n_hat;
    Estimate c_hat;  // cost per active server; undefined when never active
    std::vector<Estimate> z_hat;
    Estimate virtual_hat;
    Estimate backup_hat;
    Estimate jobs_hat;
    std::vector<double> x_hat;  // time-averaged servers per configuration
    std::size_t events = 0;
};

inline Report estimate(const MetricsAccumulator& acc, double confidence = 0.95) {
    Report r;
    r.n_hat = acc.active.estimate(confidence);
    r.c_hat = ratio_estimate(acc.cost, acc.active, confidence);
    for (const auto& z : acc.tokens) r.z_hat.push_back(z.estimate(confidence));
    r.virtual_hat = acc.virtual_jobs.estimate(confidence);
    r.backup_hat = acc.backup_jobs.estimate(confidence);
    r.jobs_hat = acc.real_jobs.estimate(confidence);
    const double w = acc.active.window();
    for (double x : acc.occupancy) r.x_hat.push_back(x / w);
    r.events = acc.events;
    return r;
}

struct ScalingPoint {
    double r = 0.0;
    double n_hat = 0.0;
    double se = 0.0;
    double comparator = 0.0;  // ceil(Nbar*) * P(Kbar != 0)
};

struct ScalingFit {
    std::vector<double> r;
    std::vector<double> gap;
    std::vector<double> gap_se;
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double slope_ci_low = 0.0;
    double slope_ci_high = 0.0;
};

/// Least-squares fit of log(max(gap, se)) against log r.
inline ScalingFit gap_scaling(const std::vector<ScalingPoint>& points, double confidence = 0.95) {
    if (points.size() < 3) throw DegenerateGrid("gap scaling needs at least three grid points");
    for (std::size_t p = 0; p < points.size(); ++p) {
        if (!(points[p].r > 0.0) || (p > 0 && !(points[p].r > points[p - 1].r))) {
            throw DegenerateGrid("r grid must be positive and strictly increasing");
        }
    }
    ScalingFit fit;
    std::vector<double> xs, ys;
    for (const auto& p : points) {
        const double gap = p.n_hat - p.comparator;
        const double floor = std::max(std::isfinite(p.se) ? p.se : 0.0, 1e-12);
        fit.r.push_back(p.r);
        fit.gap.push_back(gap);
        fit.gap_se.push_back(p.se);
        xs.push_back(std::log(p.r));
        ys.push_back(std::log(std::max(gap, floor)));
    }
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i] / n;
        my += ys[i] / n;
    }
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double res = ys[i] - fit.intercept - fit.slope * xs[i];
        sse += res * res;
    }
    fit.slope_se = std::sqrt(sse / (n - 2.0) / sxx);
    const double half = t_quantile(confidence, xs.size() - 2) * fit.slope_se;
    fit.slope_ci_low = fit.slope - half;
    fit.slope_ci_high = fit.slope + half;
    return fit;
}

}  // namespace sbp::metrics
