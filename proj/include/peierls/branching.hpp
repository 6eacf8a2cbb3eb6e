#pragma once

// Dominating multitype branching process and the closed-form constants
// derived from it: alpha, alpha_0, beta*, rho, M2, M3 and the tail, mixing
// and convergence bound functions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>
#include <unordered_set>
#include <utility>
#include <vector>

#include "peierls/catalog.hpp"
#include "peierls/clan.hpp"
#include "peierls/poisson_field.hpp"
#include "peierls/random.hpp"

namespace peierls {

class TailDiverges : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class PopulationExplosion : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Which face "contains the origin" in alpha_0.
enum class OriginConvention { Plaquette, Site };

struct BracketedValue {
    double value = 0.0;  ///< truncated catalog sum plus tail
    double tail = 0.0;   ///< certified (or modelled) contribution beyond the cap
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Offspring mean m(g, h) = 1{g, h incompatible} exp(-beta |h|).
inline double offspring_mean(const Contour& g, const Contour& h, double beta) {
    return incompatible(g, h) ? std::exp(-beta * h.length()) : 0.0;
}

/// Evaluates alpha-type sums on a catalog under a tail model.
class BoundCalculator {
public:
    BoundCalculator(const ContourCatalog& catalog, TailModel model = TailModel::Eulerian,
                    OriginConvention origin = OriginConvention::Plaquette)
        : catalog_(&catalog), model_(model), origin_(origin) {
        // Lengths of every instance incompatible with the unit square at 0.
        const Contour sq = unit_square();
        std::set<Instance> seen;
        for (Point v : sq.vertices())
            catalog.for_each_through_vertex(v, [&](const Instance& g) {
                if (seen.insert(g).second) square_neighbours_.push_back(catalog.at(g.cls).length);
            });
    }

    const ContourCatalog& catalog() const { return *catalog_; }
    TailModel model() const { return model_; }
    OriginConvention origin() const { return origin_; }

    /// sum_{gamma containing the origin face} |gamma| exp(-beta |gamma|).
    BracketedValue alpha0(double beta) const {
        const Face face = origin_ == OriginConvention::Plaquette ? Face::Plaquette : Face::Vertex;
        const auto counts = origin_ == OriginConvention::Plaquette ? catalog_->through_plaquette_counts()
                                                                   : catalog_->through_vertex_counts();
        return bracket(counts, beta, face, 1);
    }

    /// Certified upper bracket of alpha: the weighted sum over contours
    /// through one endpoint.  A contour of length n has at most n endpoints,
    /// so the per-contour average in the sup is dominated by it.
    BracketedValue alpha_upper(double beta) const { return bracket(catalog_->through_vertex_counts(), beta, Face::Vertex, 1); }

    /// The same sum restricted to the catalog.
    double alpha_truncated(double beta) const { return alpha_upper_truncated(beta); }

    /// The ratio in the sup evaluated at the unit square, catalog terms only.
    /// It never exceeds alpha, so it is a certified lower witness.
    double alpha_lower(double beta) const {
        double s = 0.0;
        for (int n : square_neighbours_) s += n * std::exp(-beta * n);
        return s / 4.0;
    }

    /// Unweighted birth intensity per endpoint.
    BracketedValue vertex_intensity(double beta) const { return bracket(catalog_->through_vertex_counts(), beta, Face::Vertex, 0); }

    /// Interval [lo, hi] with alpha_upper(hi) < 1 <= alpha_upper(lo), width <= tol.
    Interval beta_star(double tol = 1e-6) const {
        auto alpha = [&](double b) -> double {
            try {
                return alpha_upper(b).value;
            } catch (const TailDiverges&) {
                return INFINITY;
            }
        };
        double hi = 1.0;
        while (!(alpha(hi) < 1.0)) {
            hi *= 2.0;
            if (hi > 1e3) throw TailDiverges("alpha stays above one");
        }
        double lo = hi / 2.0;
        while (alpha(lo) < 1.0) {
            lo /= 2.0;
            if (lo < 1e-9) return {0.0, 0.0};
        }
        while (hi - lo > tol) {
            const double mid = 0.5 * (lo + hi);
            (alpha(mid) < 1.0 ? hi : lo) = mid;
        }
        return {lo, hi};
    }

    /// Exact truncated value of sum_theta |theta| m^n(gamma, theta), using
    /// the class-level matrix M(c, c') = T(c, c') exp(-beta |c'|), where
    /// T counts translates of c' sharing an endpoint with a fixed c.
    std::vector<double> weighted_mass_powers(std::uint32_t root, int max_n, double beta) const {
        return powers(root, max_n, beta, true);
    }

    /// Expected generation sizes sum_theta m^n(gamma, theta).
    std::vector<double> generation_size_powers(std::uint32_t root, int max_n, double beta) const {
        return powers(root, max_n, beta, false);
    }

    /// Number of translates of class b sharing an endpoint with the representative of a.
    long touch_count(std::uint32_t a, std::uint32_t b) const {
        ensure_touch();
        return touch_[a][b];
    }

private:
    BracketedValue bracket(const std::vector<long>& counts, double beta, Face face, int power) const {
        if (!(beta > 0.0)) throw TailDiverges("beta must be positive");
        double s = 0.0;
        for (std::size_t n = 0; n < counts.size(); ++n)
            s += static_cast<double>(counts[n]) * std::pow(static_cast<double>(n), power) * std::exp(-beta * static_cast<double>(n));
        const double tail = tail_sum(*catalog_, beta, model_, face, power);
        if (!std::isfinite(tail)) throw TailDiverges("tail bound diverges at this beta");
        return {s + tail, tail};
    }

    double alpha_upper_truncated(double beta) const {
        const auto counts = catalog_->through_vertex_counts();
        double s = 0.0;
        for (std::size_t n = 0; n < counts.size(); ++n) s += static_cast<double>(counts[n]) * static_cast<double>(n) * std::exp(-beta * static_cast<double>(n));
        return s;
    }

    void ensure_touch() const {
        if (!touch_.empty()) return;
        const auto& cls = catalog_->classes();
        touch_.assign(cls.size(), std::vector<long>(cls.size(), 0));
        for (std::size_t a = 0; a < cls.size(); ++a)
            for (std::size_t b = 0; b < cls.size(); ++b) {
                std::set<Point> diffs;
                for (Point v : cls[a].representative.vertices())
                    for (Point w : cls[b].representative.vertices()) diffs.insert(v - w);
                touch_[a][b] = static_cast<long>(diffs.size());
            }
    }

    std::vector<double> powers(std::uint32_t root, int max_n, double beta, bool weighted) const {
        ensure_touch();
        const auto& cls = catalog_->classes();
        std::vector<double> v(cls.size(), 0.0), next(cls.size());
        v.at(root) = 1.0;
        std::vector<double> out;
        auto total = [&](const std::vector<double>& x) {
            double s = 0.0;
            for (std::size_t c = 0; c < cls.size(); ++c) s += x[c] * (weighted ? cls[c].length : 1);
            return s;
        };
        out.push_back(total(v));
        for (int n = 1; n <= max_n; ++n) {
            std::fill(next.begin(), next.end(), 0.0);
            for (std::size_t a = 0; a < cls.size(); ++a) {
                if (v[a] == 0.0) continue;
                for (std::size_t b = 0; b < cls.size(); ++b)
                    next[b] += v[a] * static_cast<double>(touch_[a][b]) * std::exp(-beta * cls[b].length);
            }
            std::swap(v, next);
            out.push_back(total(v));
        }
        return out;
    }

    const ContourCatalog* catalog_;
    TailModel model_;
    OriginConvention origin_;
    std::vector<int> square_neighbours_;
    mutable std::vector<std::vector<long>> touch_;
};

struct BoundReport {
    double beta = 0.0;
    int max_length = 0;
    TailModel model = TailModel::Eulerian;
    OriginConvention origin = OriginConvention::Plaquette;
    bool certified = true;

    BracketedValue alpha0;
    BracketedValue alpha_upper;
    double alpha_lower = 0.0;
    double alpha_truncated = 0.0;
    Interval beta_star;             ///< under the tail model
    Interval beta_star_truncated;   ///< of the simulated (capped) gas
    bool subcritical = false;       ///< alpha_upper < 1

    double rho = NAN;
    double beta_tilde = NAN;
    double alpha0_tilde = NAN;
    double alpha_tilde = NAN;
    double M2 = NAN;
    double M3 = NAN;
    double h_max = NAN;
};

/// Report at beta.  beta_tilde <= 0 selects the midpoint of (beta*, beta).
/// Quantities that need alpha < 1 are left NaN when beta is not subcritical.
inline BoundReport make_bound_report(const BoundCalculator& calc, double beta, double beta_tilde = 0.0, double tol = 1e-6) {
    BoundReport r;
    r.beta = beta;
    r.max_length = calc.catalog().max_length();
    r.model = calc.model();
    r.origin = calc.origin();
    r.certified = is_certified(calc.model());
    r.alpha_lower = calc.alpha_lower(beta);
    r.alpha_truncated = calc.alpha_truncated(beta);
    r.beta_star = calc.beta_star(tol);
    r.beta_star_truncated = BoundCalculator(calc.catalog(), TailModel::None, calc.origin()).beta_star(tol);
    try {
        r.alpha0 = calc.alpha0(beta);
        r.alpha_upper = calc.alpha_upper(beta);
    } catch (const TailDiverges&) {
        r.alpha0 = {INFINITY, INFINITY};
        r.alpha_upper = {INFINITY, INFINITY};
        return r;
    }
    r.subcritical = r.alpha_upper.value < 1.0;
    r.h_max = 1.0 / r.alpha_upper.value;
    if (!r.subcritical) return r;
    const double a = r.alpha_upper.value;
    r.rho = (1.0 - a) / (2.0 - a);
    if (beta_tilde <= 0.0) beta_tilde = 0.5 * (beta + r.beta_star.hi);
    if (!(beta_tilde > r.beta_star.hi && beta_tilde < beta)) throw DomainError("beta_tilde must lie in (beta*, beta)");
    r.beta_tilde = beta_tilde;
    r.alpha0_tilde = calc.alpha0(beta_tilde).value;
    r.alpha_tilde = calc.alpha_upper(beta_tilde).value;
    r.M2 = 1.0 / (1.0 - r.alpha_tilde);
    r.M3 = beta - beta_tilde;
    return r;
}

/// Closed-form bounds evaluated from a subcritical report.
class BoundFunctions {
public:
    BoundFunctions(const BoundCalculator& calc, BoundReport report) : calc_(&calc), r_(std::move(report)) {
        if (!r_.subcritical) throw DomainError("bounds need alpha_upper < 1");
    }

    const BoundReport& report() const { return r_; }

    double time_conv(double t, double supp_size, double f_norm = 1.0) const {
        return 2.0 * f_norm * supp_size * (r_.alpha0.value / r_.rho) * std::exp(-r_.rho * t);
    }

    /// Distances from each support point to the complement of the volume.
    double space_conv(const std::vector<double>& distances, double f_norm = 1.0) const {
        double s = 0.0;
        for (double d : distances) s += std::exp(-r_.M3 * d);
        return 2.0 * f_norm * r_.alpha0_tilde * r_.M2 * s;
    }

    /// Pairwise distances |x - y| between the two supports.
    double mixing(const std::vector<double>& pair_distances, double f_norm = 1.0, double g_norm = 1.0) const {
        double s = 0.0;
        for (double d : pair_distances) s += d * std::exp(-r_.M3 * d);
        return 2.0 * f_norm * g_norm * r_.M2 * r_.M2 * s;
    }

    double tl_tail(double t) const { return r_.alpha0.value * std::exp(-(1.0 - a()) * t); }
    double tl_tail_gamma(double t) const { return r_.alpha0.value / (a() * (1.0 - a())) * std::exp(-(1.0 - a()) * t); }
    double sw_mean() const { return r_.alpha0.value / (1.0 - a()); }

    double sw_mgf(double s) const {
        if (!(s < r_.beta - r_.beta_star.hi)) throw DomainError("sw_mgf needs a < beta - beta*");
        const double b = r_.beta - s;
        return calc_->alpha0(b).value / (1.0 - calc_->alpha_upper(b).value);
    }

    double sw_tail(double ell) const {
        return r_.alpha0_tilde / (1.0 - r_.alpha_tilde) * std::exp(-(r_.beta - r_.beta_tilde) * ell);
    }

    /// Mean number of branches alive at time t started from a contour of length n.
    double r_t(int length, double t) const { return length * std::exp((a() - 1.0) * t); }

private:
    double a() const { return r_.alpha_upper.value; }
    const BoundCalculator* calc_;
    BoundReport r_;
};

struct BranchingRun {
    std::vector<long> sizes;     ///< nodes per generation
    std::vector<double> masses;  ///< sum of |theta| per generation
    bool extinct = false;
};

/// Class-level branching: a node of class c has Poisson(T(c, c') exp(-beta |c'|))
/// children of class c', independently.
class BranchingSimulator {
public:
    BranchingSimulator(const BoundCalculator& calc, double beta) : calc_(&calc), beta_(beta) {
        const auto& cls = calc.catalog().classes();
        cumulative_.assign(cls.size(), {});
        totals_.assign(cls.size(), 0.0);
        for (std::uint32_t a = 0; a < cls.size(); ++a) {
            double acc = 0.0;
            for (std::uint32_t b = 0; b < cls.size(); ++b) {
                acc += static_cast<double>(calc.touch_count(a, b)) * std::exp(-beta * cls[b].length);
                cumulative_[a].push_back(acc);
            }
            totals_[a] = acc;
        }
    }

    /// Per-generation sizes for generations 0..max_gen.
    BranchingRun run(std::uint32_t root, int max_gen, std::uint64_t seed, long node_cap = 10'000'000) const {
        StreamRng rng(stream_key({static_cast<std::int64_t>(StreamDomain::Branching), static_cast<std::int64_t>(seed), root}));
        return run_with(root, max_gen, rng, node_cap);
    }

    template <class Rng>
    BranchingRun run_with(std::uint32_t root, int max_gen, Rng& rng, long node_cap = 10'000'000) const {
        const auto& cls = calc_->catalog().classes();
        BranchingRun out;
        std::vector<std::uint32_t> gen{root}, next;
        long total = 1;
        for (int n = 0;; ++n) {
            long size = static_cast<long>(gen.size());
            double mass = 0.0;
            for (auto c : gen) mass += cls[c].length;
            out.sizes.push_back(size);
            out.masses.push_back(mass);
            if (gen.empty()) {
                out.extinct = true;
                break;
            }
            if (n == max_gen) break;
            next.clear();
            for (auto c : gen) {
                std::poisson_distribution<long> count(totals_[c]);
                const long k = count(rng);
                total += k;
                if (total > node_cap) throw PopulationExplosion("branching population exceeded the node cap");
                for (long i = 0; i < k; ++i) next.push_back(pick(c, rng));
            }
            std::swap(gen, next);
        }
        return out;
    }

    /// Total progeny of one node of class c (all generations).
    template <class Rng>
    long progeny(std::uint32_t c, Rng& rng, long node_cap = 10'000'000) const {
        auto r = run_with(c, std::numeric_limits<int>::max(), rng, node_cap);
        long s = 0;
        for (long x : r.sizes) s += x;
        return s;
    }

    /// Sizes of generations 1, 2, ... below a node of class c, added to `sizes`
    /// starting at index `offset`.
    template <class Rng>
    void add_subtree(std::uint32_t c, std::size_t offset, std::vector<long>& sizes, Rng& rng, long node_cap) const {
        auto r = run_with(c, std::numeric_limits<int>::max(), rng, node_cap);
        for (std::size_t k = 1; k < r.sizes.size(); ++k) {
            if (sizes.size() <= offset + k) sizes.resize(offset + k + 1, 0);
            sizes[offset + k] += r.sizes[k];
        }
    }

private:
    template <class Rng>
    std::uint32_t pick(std::uint32_t c, Rng& rng) const {
        std::uniform_real_distribution<double> u(0.0, totals_[c]);
        const double x = u(rng);
        const auto& cum = cumulative_[c];
        auto it = std::upper_bound(cum.begin(), cum.end(), x);
        return static_cast<std::uint32_t>(std::min<std::ptrdiff_t>(it - cum.begin(), static_cast<std::ptrdiff_t>(cum.size()) - 1));
    }

    const BoundCalculator* calc_;
    double beta_;
    std::vector<std::vector<double>> cumulative_;
    std::vector<double> totals_;
};

struct DominationResult {
    bool contained = true;
    std::vector<long> clan_sizes;       ///< clan members per generation
    std::vector<long> branching_sizes;  ///< nodes of the dominating process per generation
    long replacements = 0;              ///< shared ancestors replaced by fresh draws
};

/// Builds a branching superset of the clan on the same realization.
///
/// Members are processed in the clan's breadth-first order.  The first
/// member to list a cylinder as ancestor claims it; later members lose it
/// and receive instead the cylinders of an independent field that fall in
/// their ancestor region and in the region of some earlier member.  Fresh
/// cylinders start independent branching subtrees.  Every clan member ends
/// up as a node of the superset at its clan generation.
inline DominationResult coupled_domination_check(const Clan& clan, FieldRealization& field, const BoundCalculator& calc,
                                                 std::uint64_t replacement_seed, double lookback = HorizonPolicy{}.lookback,
                                                 long node_cap = 10'000'000) {
    DominationResult out;
    const auto& geo = field.geometry();
    const auto k = clan.members.size();
    std::vector<char> claimed(k, 0);
    std::vector<int> bgen(k, -1);
    for (std::size_t i = 0; i < k; ++i) {
        if (clan.members[i].generation == 0) {
            claimed[i] = 1;
            bgen[i] = 0;
        }
    }

    FieldParams fp = field.params();
    fp.seed = stream_key({static_cast<std::int64_t>(StreamDomain::Replacement), static_cast<std::int64_t>(replacement_seed)});
    FieldRealization fresh(field.catalog(), fp);
    BranchingSimulator sim(calc, field.beta());
    StreamRng rng(stream_key({static_cast<std::int64_t>(StreamDomain::Replacement), static_cast<std::int64_t>(replacement_seed), 1}));

    auto in_region = [&](const Cylinder& c, const Cylinder& parent) {
        return c.birth < parent.birth && c.death >= parent.birth && geo.incompatible(c.basis, parent.basis);
    };

    std::vector<long> sizes;
    auto bump = [&](std::size_t g) {
        if (sizes.size() <= g) sizes.resize(g + 1, 0);
        ++sizes[g];
    };
    for (std::size_t i = 0; i < k; ++i)
        if (bgen[i] == 0) bump(0);

    for (std::size_t i = 0; i < k; ++i) {
        if (bgen[i] < 0) {
            out.contained = false;  // never reached: order violated
            continue;
        }
        const auto& parent = clan.members[i].cylinder;
        const int g = bgen[i];
        bool lost = false;
        for (auto a : clan.ancestors[i]) {
            if (!claimed[a]) {
                claimed[a] = 1;
                bgen[a] = g + 1;
                bump(static_cast<std::size_t>(g + 1));
            } else {
                lost = true;
            }
        }
        if (!lost) continue;
        // Fresh cylinders in region(parent) intersected with earlier regions.
        std::vector<Point> verts;
        geo.for_each_vertex(parent.basis, [&](Point v) { verts.push_back(v); });
        std::vector<Cylinder> found;
        fresh.for_each_touching(verts, geo.lo(parent.basis), geo.hi(parent.basis), parent.birth - lookback, parent.birth,
                                [&](const Cylinder& c) {
                                    if (c.death < parent.birth) return;
                                    found.push_back(c);
                                });
        std::sort(found.begin(), found.end(), birth_order);
        for (const auto& c : found) {
            bool shared = false;
            for (std::size_t j = 0; j < i && !shared; ++j)
                if (bgen[j] >= 0) shared = in_region(c, clan.members[j].cylinder);
            if (!shared) continue;
            ++out.replacements;
            bump(static_cast<std::size_t>(g + 1));
            sim.add_subtree(c.basis.cls, static_cast<std::size_t>(g + 1), sizes, rng, node_cap);
        }
    }

    for (std::size_t i = 0; i < k; ++i) {
        if (!claimed[i] || bgen[i] != clan.members[i].generation) out.contained = false;
        const auto g = static_cast<std::size_t>(clan.members[i].generation);
        if (out.clan_sizes.size() <= g) out.clan_sizes.resize(g + 1, 0);
        ++out.clan_sizes[g];
    }
    out.branching_sizes = sizes;
    if (out.branching_sizes.size() < out.clan_sizes.size()) out.branching_sizes.resize(out.clan_sizes.size(), 0);
    for (std::size_t g = 0; g < out.clan_sizes.size(); ++g)
        if (out.clan_sizes[g] > out.branching_sizes[g]) out.contained = false;
    return out;
}

}  // namespace peierls
