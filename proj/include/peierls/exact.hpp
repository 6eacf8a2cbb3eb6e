#pragma once

// Exact finite-volume Gibbs law by enumerating every compatible
// configuration of the admissible contours.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "peierls/forward_dynamics.hpp"
#include "peierls/stats.hpp"

namespace peierls {

class SupportTooLarge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultSupportCap = std::size_t{1} << 20;

struct ExactDistribution {
    double beta = 0.0;
    std::vector<Instance> contours;  ///< admissible contours, sorted
    std::vector<int> lengths;
    std::vector<Configuration> support;  ///< each sorted; support[0] is empty
    std::vector<double> weights;         ///< normalized
    double Z = 0.0;

    std::map<Configuration, double> as_map() const {
        std::map<Configuration, double> m;
        for (std::size_t i = 0; i < support.size(); ++i) m[support[i]] = weights[i];
        return m;
    }

    /// Probability that contour g is occupied.
    double occupation(const Instance& g) const {
        double s = 0.0;
        for (std::size_t i = 0; i < support.size(); ++i)
            if (std::binary_search(support[i].begin(), support[i].end(), g)) s += weights[i];
        return s;
    }

    /// Law of the configuration restricted to contours satisfying `keep`.
    template <class Pred>
    std::map<Configuration, double> marginal(Pred&& keep) const {
        std::map<Configuration, double> m;
        for (std::size_t i = 0; i < support.size(); ++i) {
            Configuration c;
            for (const auto& g : support[i])
                if (keep(g)) c.push_back(g);
            m[c] += weights[i];
        }
        return m;
    }
};

/// Backtracking over admissible contours in canonical order with
/// compatibility pruning; weights exp(-beta sum |gamma|) / Z.
inline ExactDistribution exact_gibbs(const Volume& volume, const ContourCatalog& catalog, double beta, int max_length = 0,
                                     std::size_t cap = kDefaultSupportCap) {
    ExactDistribution d;
    d.beta = beta;
    InstanceGeometry geo(catalog);
    d.contours = volume.admissible(catalog, max_length);
    const std::size_t m = d.contours.size();
    for (const auto& g : d.contours) d.lengths.push_back(geo.length(g));

    std::vector<std::vector<char>> clash(m, std::vector<char>(m, 0));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) clash[i][j] = geo.incompatible(d.contours[i], d.contours[j]);

    std::vector<std::size_t> chosen;
    std::vector<double> raw;
    // Depth-first: extend with indices larger than the last chosen one.
    auto emit = [&](double energy) {
        if (d.support.size() >= cap) throw SupportTooLarge("compatible configurations exceed the support cap");
        Configuration c;
        for (auto i : chosen) c.push_back(d.contours[i]);
        d.support.push_back(std::move(c));
        raw.push_back(-beta * energy);
    };
    std::function<void(std::size_t, double)> rec = [&](std::size_t from, double energy) {
        emit(energy);
        for (std::size_t i = from; i < m; ++i) {
            bool ok = true;
            for (auto j : chosen)
                if (clash[i][j]) {
                    ok = false;
                    break;
                }
            if (!ok) continue;
            chosen.push_back(i);
            rec(i + 1, energy + d.lengths[i]);
            chosen.pop_back();
        }
    };
    rec(0, 0.0);

    double z = 0.0;
    for (double r : raw) z += std::exp(r);
    d.Z = z;
    d.weights.reserve(raw.size());
    for (double r : raw) d.weights.push_back(std::exp(r) / z);
    return d;
}

struct TvEstimate {
    double tv = 0.0;
    double half_width = 0.0;  ///< 3 sigma, summed over support points
};

/// TV between an empirical configuration histogram and the exact law.
inline TvEstimate tv_distance(const std::map<Configuration, long>& histogram, const std::map<Configuration, double>& exact) {
    long n = 0;
    for (const auto& [c, k] : histogram) n += k;
    if (n == 0) throw std::invalid_argument("empty histogram");
    std::map<Configuration, double> emp;
    for (const auto& [c, k] : histogram) emp[c] = static_cast<double>(k) / static_cast<double>(n);
    TvEstimate out;
    out.tv = tv_distance(emp, exact);
    double hw = 0.0;
    for (const auto& [c, p] : exact) hw += std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    out.half_width = 0.5 * 3.0 * hw;
    return out;
}

/// Largest relative violation of mu(eta) e^{-beta|g|} = mu(eta + g) over all
/// pairs of support configurations differing by one contour.
inline double detailed_balance_defect(const ExactDistribution& d) {
    std::map<Configuration, std::size_t> index;
    for (std::size_t i = 0; i < d.support.size(); ++i) index[d.support[i]] = i;
    std::map<Instance, int> len;
    for (std::size_t i = 0; i < d.contours.size(); ++i) len[d.contours[i]] = d.lengths[i];
    double worst = 0.0;
    for (std::size_t i = 0; i < d.support.size(); ++i) {
        const auto& eta = d.support[i];
        for (std::size_t k = 0; k < eta.size(); ++k) {
            Configuration smaller = eta;
            smaller.erase(smaller.begin() + static_cast<std::ptrdiff_t>(k));
            auto it = index.find(smaller);
            if (it == index.end()) return INFINITY;  // support not closed under removal
            const double flow_up = d.weights[it->second] * std::exp(-d.beta * len[eta[k]]);
            const double flow_down = d.weights[i] * 1.0;
            worst = std::max(worst, std::abs(flow_up - flow_down) / std::max(flow_up, flow_down));
        }
    }
    return worst;
}

}  // namespace peierls
