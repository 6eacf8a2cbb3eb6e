#pragma once

// Small statistics toolkit: running moments, proportions, Poisson laws,
// total variation, Kolmogorov-Smirnov and weighted log-linear fits, plus a
// replica fan-out that folds results by replica index.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

namespace peierls {

struct Summary {
    long n = 0;
    double mean = 0.0;
    double variance = 0.0;  ///< unbiased

    double se() const { return n > 0 ? std::sqrt(variance / static_cast<double>(n)) : INFINITY; }
    double sd() const { return std::sqrt(variance); }
};

/// Welford accumulator.
class Moments {
public:
    void add(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
        m3_sum_ += x * x * x;
        m4_sum_ += x * x * x * x;
        sum_ += x;
        sum2_ += x * x;
    }

    Summary summary() const {
        Summary s;
        s.n = n_;
        s.mean = mean_;
        s.variance = n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
        return s;
    }

    long count() const { return n_; }

    /// Sample skewness and kurtosis (non-excess) from raw power sums.
    double skewness() const {
        const double n = static_cast<double>(n_);
        const double mu = sum_ / n;
        const double var = sum2_ / n - mu * mu;
        const double m3 = m3_sum_ / n - 3 * mu * sum2_ / n + 2 * mu * mu * mu;
        return var > 0 ? m3 / std::pow(var, 1.5) : 0.0;
    }

    double kurtosis() const {
        const double n = static_cast<double>(n_);
        const double mu = sum_ / n;
        const double e2 = sum2_ / n, e3 = m3_sum_ / n, e4 = m4_sum_ / n;
        const double var = e2 - mu * mu;
        const double m4 = e4 - 4 * mu * e3 + 6 * mu * mu * e2 - 3 * mu * mu * mu * mu;
        return var > 0 ? m4 / (var * var) : 0.0;
    }

private:
    long n_ = 0;
    double mean_ = 0.0, m2_ = 0.0;
    double sum_ = 0.0, sum2_ = 0.0, m3_sum_ = 0.0, m4_sum_ = 0.0;
};

inline Summary summarize(std::span<const double> xs) {
    Moments m;
    for (double x : xs) m.add(x);
    return m.summary();
}

struct Proportion {
    long hits = 0;
    long n = 0;
    double p() const { return n > 0 ? static_cast<double>(hits) / static_cast<double>(n) : 0.0; }
    double se() const { return n > 0 ? std::sqrt(p() * (1.0 - p()) / static_cast<double>(n)) : INFINITY; }
};

/// P(Bin(n, p) >= k), summed upward in log space from k.
inline double binomial_upper_tail(long n, double p, long k) {
    if (k <= 0) return 1.0;
    if (k > n || p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    const double lp = std::log(p), lq = std::log1p(-p);
    double total = 0.0;
    for (long i = k; i <= n; ++i) {
        const double term = std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) + i * lp + (n - i) * lq);
        total += term;
        if (i > n * p && term < 1e-18 * total) break;
    }
    return std::min(1.0, total);
}

/// One-sided Gaussian tail at three standard deviations.
inline constexpr double kThreeSigmaTail = 0.0013498980316301;

/// Poisson pmf on {0, ..., K} by the recursion p_k = p_{k-1} lambda / k.
inline std::vector<double> poisson_pmf(double lambda, int K) {
    std::vector<double> p(static_cast<std::size_t>(K) + 1);
    p[0] = std::exp(-lambda);
    for (int k = 1; k <= K; ++k) p[static_cast<std::size_t>(k)] = p[static_cast<std::size_t>(k - 1)] * lambda / k;
    return p;
}

/// Total variation between a count histogram and Poisson(lambda).  The
/// comparison runs on {0, ..., K} with K = mean + 10 sqrt(mean) (at least the
/// largest observed count); the Poisson mass above K is added analytically.
inline double tv_to_poisson(const std::vector<long>& histogram, double lambda) {
    long n = 0;
    for (long h : histogram) n += h;
    if (n == 0) throw std::invalid_argument("empty histogram");
    int K = static_cast<int>(std::ceil(lambda + 10.0 * std::sqrt(lambda))) + 1;
    K = std::max(K, static_cast<int>(histogram.size()) - 1);
    const auto pi = poisson_pmf(lambda, K);
    double tv = 0.0, covered = 0.0;
    for (int k = 0; k <= K; ++k) {
        const double emp = k < static_cast<int>(histogram.size()) ? static_cast<double>(histogram[static_cast<std::size_t>(k)]) / n : 0.0;
        tv += std::abs(emp - pi[static_cast<std::size_t>(k)]);
        covered += pi[static_cast<std::size_t>(k)];
    }
    tv += std::max(0.0, 1.0 - covered);
    return 0.5 * tv;
}

/// Half L1 distance between two distributions on a shared keyed support.
template <class Key>
double tv_distance(const std::map<Key, double>& p, const std::map<Key, double>& q) {
    double s = 0.0;
    for (const auto& [k, v] : p) {
        auto it = q.find(k);
        s += std::abs(v - (it == q.end() ? 0.0 : it->second));
    }
    for (const auto& [k, v] : q)
        if (!p.count(k)) s += std::abs(v);
    return 0.5 * s;
}

/// Asymptotic Kolmogorov distribution tail P(K > x).
inline double kolmogorov_tail(double x) {
    if (x <= 0.0) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * x * x);
        s += term;
        if (std::abs(term) < 1e-16) break;
    }
    return std::clamp(s, 0.0, 1.0);
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against a continuous cdf.
inline KsResult ks_test(std::vector<double> xs, const std::function<double(double)>& cdf) {
    if (xs.empty()) throw std::invalid_argument("ks_test needs samples");
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double F = cdf(xs[i]);
        d = std::max({d, (i + 1) / n - F, F - i / n});
    }
    const double sq = std::sqrt(n);
    return {d, kolmogorov_tail((sq + 0.12 + 0.11 / sq) * d)};
}

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double slope_se = 0.0;
    int points = 0;
};

/// Weighted least squares y = a + b x with weights w (inverse variances).
inline LinearFit weighted_fit(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
    if (x.size() != y.size() || x.size() != w.size()) throw std::invalid_argument("fit inputs differ in length");
    if (x.size() < 2) throw std::invalid_argument("fit needs at least two points");
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
        sxx += w[i] * x[i] * x[i];
        sxy += w[i] * x[i] * y[i];
    }
    const double det = sw * sxx - sx * sx;
    if (!(det > 0)) throw std::invalid_argument("degenerate fit design");
    LinearFit f;
    f.slope = (sw * sxy - sx * sy) / det;
    f.intercept = (sy - f.slope * sx) / sw;
    f.slope_se = std::sqrt(sw / det);
    f.points = static_cast<int>(x.size());
    return f;
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads.  Results are
/// stored by replica index, so the fold does not depend on scheduling.
template <class T, class Fn>
std::vector<T> run_replicas(long n, Fn&& fn, unsigned workers = 0) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    std::vector<T> out(static_cast<std::size_t>(n));
    if (workers <= 1 || n < 2) {
        for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = fn(i);
        return out;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (long i = w; i < n; i += workers) out[static_cast<std::size_t>(i)] = fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace peierls
