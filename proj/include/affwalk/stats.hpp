#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace affwalk {

/// Mean/variance accumulator (Welford). merge() is associative, so per-worker
/// partials can be combined in any grouping with the same result up to rounding;
/// callers merge in index order for bit-identical output.
class RunningStats {
public:
    void add(double x) {
        ++n_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
    }

    void merge(const RunningStats& other) {
        if (other.n_ == 0) return;
        if (n_ == 0) {
            *this = other;
            return;
        }
        const double n = static_cast<double>(n_ + other.n_);
        const double delta = other.mean_ - mean_;
        mean_ += delta * static_cast<double>(other.n_) / n;
        m2_ += other.m2_ + delta * delta * static_cast<double>(n_) * static_cast<double>(other.n_) / n;
        n_ += other.n_;
    }

    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double stddev() const { return std::sqrt(variance()); }
    double standard_error() const { return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

inline Estimate proportion(std::size_t hits, std::size_t trials) {
    if (trials == 0) return {};
    const double p = static_cast<double>(hits) / static_cast<double>(trials);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(trials))};
}

/// Standard error of the mean of a correlated series by non-overlapping batch means.
inline Estimate batch_means(std::span<const double> series, std::size_t batches = 100) {
    if (series.empty()) return {};
    batches = std::clamp<std::size_t>(batches, 1, series.size());
    const std::size_t len = series.size() / batches;
    RunningStats overall;
    for (double x : series) overall.add(x);
    RunningStats per_batch;
    for (std::size_t b = 0; b < batches; ++b) {
        double s = 0.0;
        for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += series[i];
        per_batch.add(s / static_cast<double>(len));
    }
    return {overall.mean(), per_batch.standard_error()};
}

/// Two-sample Kolmogorov-Smirnov statistic sup |F1 - F2|.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) return 0.0;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

/// Ordinary least squares y = slope * x + intercept.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rss = 0.0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    LineFit fit;
    const std::size_t n = std::min(x.size(), y.size());
    if (n == 0) return fit;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    fit.slope = sxx > 0 ? sxy / sxx : 0.0;
    fit.intercept = my - fit.slope * mx;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (fit.slope * x[i] + fit.intercept);
        fit.rss += r * r;
    }
    return fit;
}

inline double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

}  // namespace affwalk
