#pragma once

// Lazy realization of the independent marked Poisson processes that drive
// the dynamics.  Contour gamma receives births at rate exp(-beta |gamma|),
// each carrying an independent mean-one exponential lifetime.
//
// The field is materialized per (spatial tile, time cell).  Within a block
// the superposition of all contour processes whose translation falls in the
// tile is a single Poisson process; each point is then marked with a class
// (probability proportional to its rate), a uniform translation inside the
// tile, a uniform birth time inside the cell and a lifetime.  This is the
// same law as independent per-contour processes, and every block is a pure
// function of (seed, tile, cell).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "peierls/catalog.hpp"
#include "peierls/random.hpp"

namespace peierls {

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

struct CylinderId {
    std::int32_t tile_x = 0;
    std::int32_t tile_y = 0;
    std::int64_t cell = 0;
    std::uint32_t index = 0;
    /// Initial-condition cylinders (birth exactly at the start time).
    bool initial = false;
    friend constexpr auto operator<=>(const CylinderId&, const CylinderId&) = default;
};

struct CylinderIdHash {
    std::size_t operator()(const CylinderId& id) const noexcept {
        return static_cast<std::size_t>(stream_key({id.tile_x, id.tile_y, id.cell, id.index, id.initial}));
    }
};

/// Space-time event: basis contour alive on [birth, death].
struct Cylinder {
    Instance basis;
    double birth = 0.0;
    double death = 0.0;
    CylinderId id;

    double lifetime() const { return death - birth; }
    bool alive_at(double t) const { return birth <= t && t <= death; }
};

/// Birth order, ties broken by the canonical order of the basis, then id.
inline bool birth_order(const Cylinder& a, const Cylinder& b) {
    if (a.birth != b.birth) return a.birth < b.birth;
    if (a.basis != b.basis) return a.basis < b.basis;
    return a.id < b.id;
}

/// Translated geometry of a catalog instance, without materializing a Contour.
class InstanceGeometry {
public:
    explicit InstanceGeometry(const ContourCatalog& catalog) : catalog_(&catalog) {}

    const ContourCatalog& catalog() const { return *catalog_; }

    Point lo(const Instance& i) const { return rep(i).min_corner() + i.shift; }
    Point hi(const Instance& i) const { return rep(i).max_corner() + i.shift; }
    int length(const Instance& i) const { return rep(i).length(); }

    /// Bases share an endpoint.
    bool incompatible(const Instance& a, const Instance& b) const {
        if (!boxes_meet(lo(a), hi(a), lo(b), hi(b))) return false;
        const auto va = rep(a).vertices();
        const auto vb = rep(b).vertices();
        const Point d = b.shift - a.shift;  // compare va with vb + d
        auto i = va.begin();
        auto j = vb.begin();
        while (i != va.end() && j != vb.end()) {
            const Point q = *j + d;
            if (*i < q) ++i;
            else if (q < *i) ++j;
            else return true;
        }
        return false;
    }

    /// Instance meets a sorted vertex list.
    bool touches(const Instance& a, std::span<const Point> sorted_vertices) const {
        for (Point w : rep(a).vertices())
            if (std::binary_search(sorted_vertices.begin(), sorted_vertices.end(), w + a.shift)) return true;
        return false;
    }

    template <class Fn>
    void for_each_plaquette(const Instance& a, Fn&& fn) const {
        for (const auto& p : rep(a).plaquettes()) fn(p.translated(a.shift));
    }

    template <class Fn>
    void for_each_vertex(const Instance& a, Fn&& fn) const {
        for (Point v : rep(a).vertices()) fn(v + a.shift);
    }

private:
    const Contour& rep(const Instance& i) const { return catalog_->classes()[i.cls].representative; }
    const ContourCatalog* catalog_;
};

/// Cylinder incompatibility: bases share an endpoint and lives intersect.
inline bool incompatible(const InstanceGeometry& geo, const Cylinder& a, const Cylinder& b) {
    if (a.death < b.birth || b.death < a.birth) return false;
    return geo.incompatible(a.basis, b.basis);
}

struct FieldParams {
    double beta = 1.0;
    std::uint64_t seed = 1;
    double cell_width = 1.0;
    /// Side of a spatial tile; 0 picks one with about four births per block.
    int tile = 0;
    /// Contours longer than this never receive births; 0 means the catalog cap.
    int max_length = 0;
};

class FieldRealization {
public:
    FieldRealization(const ContourCatalog& catalog, FieldParams params)
        : geo_(catalog), params_(params) {
        if (params_.max_length <= 0) params_.max_length = catalog.max_length();
        if (!(params_.cell_width > 0.0)) throw std::invalid_argument("cell width must be positive");
        if (params_.tile < 0) throw std::invalid_argument("tile size must be nonnegative");
        cumulative_.reserve(catalog.size());
        double acc = 0.0;
        for (const auto& c : catalog.classes()) {
            if (c.length <= params_.max_length) acc += std::exp(-params_.beta * c.length);
            cumulative_.push_back(acc);
        }
        total_rate_ = acc;
        if (params_.tile == 0) {
            const double side = acc > 0.0 ? std::sqrt(4.0 / (acc * params_.cell_width)) : 1024.0;
            params_.tile = static_cast<int>(std::clamp(std::round(side), 4.0, 1024.0));
        }
        block_mean_ = acc * params_.tile * params_.tile * params_.cell_width;
    }

    const ContourCatalog& catalog() const { return geo_.catalog(); }
    const InstanceGeometry& geometry() const { return geo_; }
    const FieldParams& params() const { return params_; }
    double beta() const { return params_.beta; }
    std::uint64_t seed() const { return params_.seed; }
    /// Sum over classes of exp(-beta |c|): the birth rate per translation.
    double rate_per_translation() const { return total_rate_; }
    double rate(const Instance& i) const { return std::exp(-params_.beta * geo_.length(i)); }
    bool active(const Instance& i) const { return geo_.length(i) <= params_.max_length; }

    std::int64_t cell_of(double t) const { return static_cast<std::int64_t>(std::floor(t / params_.cell_width)); }

    /// All cylinders of one (tile, cell) block, in birth order.
    const std::vector<Cylinder>& block(std::int64_t tx, std::int64_t ty, std::int64_t cell) {
        const Key key{tx, ty, cell};
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        return cache_.emplace(key, realize(tx, ty, cell)).first->second;
    }

    /// Visits cylinders whose basis translation lies in [shift_lo, shift_hi]
    /// and whose birth lies in [s, t).
    template <class Fn>
    void for_each(Point shift_lo, Point shift_hi, double s, double t, Fn&& fn) {
        if (!(s < t)) return;
        const auto tile = static_cast<std::int64_t>(params_.tile);
        const auto tx0 = floor_div(shift_lo.x, tile), tx1 = floor_div(shift_hi.x, tile);
        const auto ty0 = floor_div(shift_lo.y, tile), ty1 = floor_div(shift_hi.y, tile);
        const auto c0 = cell_of(s), c1 = cell_of(t);
        for (auto cell = c0; cell <= c1; ++cell)
            for (auto tx = tx0; tx <= tx1; ++tx)
                for (auto ty = ty0; ty <= ty1; ++ty)
                    for (const auto& cyl : block(tx, ty, cell)) {
                        if (cyl.birth < s || cyl.birth >= t) continue;
                        const Point sh = cyl.basis.shift;
                        if (sh.x < shift_lo.x || sh.x > shift_hi.x || sh.y < shift_lo.y || sh.y > shift_hi.y) continue;
                        fn(cyl);
                    }
    }

    /// Cylinders with basis `g` born in [s, t).
    std::vector<Cylinder> cylinders_in(const Instance& g, double s, double t) {
        std::vector<Cylinder> out;
        for_each(g.shift, g.shift, s, t, [&](const Cylinder& c) {
            if (c.basis.cls == g.cls) out.push_back(c);
        });
        return out;
    }

    /// Cylinders born in [s, t) whose basis shares an endpoint with the
    /// box-bounded sorted vertex list.
    template <class Fn>
    void for_each_touching(std::span<const Point> sorted_vertices, Point lo, Point hi, double s, double t, Fn&& fn) {
        const Point shift_lo = lo - catalog().rep_hi();
        const Point shift_hi = hi - catalog().rep_lo();
        for_each(shift_lo, shift_hi, s, t, [&](const Cylinder& c) {
            if (!boxes_meet(geo_.lo(c.basis), geo_.hi(c.basis), lo, hi)) return;
            if (geo_.touches(c.basis, sorted_vertices)) fn(c);
        });
    }

    std::size_t cached_blocks() const { return cache_.size(); }
    void clear_cache() { cache_.clear(); }

    /// Realized cylinders as "class shift_x shift_y birth death" lines.
    void dump(std::ostream& os) const {
        std::vector<Cylinder> all;
        for (const auto& [k, v] : cache_) all.insert(all.end(), v.begin(), v.end());
        std::sort(all.begin(), all.end(), birth_order);
        os.precision(17);
        for (const auto& c : all)
            os << c.basis.cls << ' ' << c.basis.shift.x << ' ' << c.basis.shift.y << ' ' << c.birth << ' ' << c.death << '\n';
    }

private:
    struct Key {
        std::int64_t tx, ty, cell;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept {
            return static_cast<std::size_t>(stream_key({k.tx, k.ty, k.cell}));
        }
    };

    std::vector<Cylinder> realize(std::int64_t tx, std::int64_t ty, std::int64_t cell) const {
        StreamRng rng(stream_key({static_cast<std::int64_t>(StreamDomain::FieldTile),
                                  static_cast<std::int64_t>(params_.seed), tx, ty, cell}));
        std::vector<Cylinder> out;
        if (block_mean_ <= 0.0) return out;
        std::poisson_distribution<long> count_dist(block_mean_);
        std::exponential_distribution<double> life(1.0);
        const long n = count_dist(rng);
        out.reserve(static_cast<std::size_t>(n));
        const int tile = params_.tile;
        for (long k = 0; k < n; ++k) {
            const double u = rng.uniform() * total_rate_;
            const auto cls = static_cast<std::uint32_t>(
                std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());
            Cylinder c;
            c.basis.cls = std::min<std::uint32_t>(cls, static_cast<std::uint32_t>(cumulative_.size() - 1));
            c.basis.shift = {static_cast<int>(tx * tile + static_cast<int>(rng.uniform() * tile)),
                             static_cast<int>(ty * tile + static_cast<int>(rng.uniform() * tile))};
            c.birth = (static_cast<double>(cell) + rng.uniform()) * params_.cell_width;
            c.death = c.birth + life(rng);
            out.push_back(c);
        }
        std::sort(out.begin(), out.end(), birth_order);
        for (std::size_t k = 0; k < out.size(); ++k)
            out[k].id = CylinderId{static_cast<std::int32_t>(tx), static_cast<std::int32_t>(ty), cell,
                                   static_cast<std::uint32_t>(k), false};
        return out;
    }

    InstanceGeometry geo_;
    FieldParams params_;
    std::vector<double> cumulative_;
    double total_rate_ = 0.0;
    double block_mean_ = 0.0;
    std::unordered_map<Key, std::vector<Cylinder>, KeyHash> cache_;
};

/// Mean-one exponential lifetimes attached to an initial configuration.
/// Independent of the field; keyed by (seed, instance, copy index).
class InitialLifetimes {
public:
    explicit InitialLifetimes(std::uint64_t seed) : seed_(seed) {}

    double lifetime(const Instance& g, int copy = 0) const {
        StreamRng rng(stream_key({static_cast<std::int64_t>(StreamDomain::InitialLifetime),
                                  static_cast<std::int64_t>(seed_), g.cls, g.shift.x, g.shift.y, copy}));
        std::exponential_distribution<double> life(1.0);
        return life(rng);
    }

    /// Initial cylinders (birth `start`) for a configuration with multiplicities.
    std::vector<Cylinder> cylinders(std::span<const Instance> config, double start = 0.0) const {
        std::vector<Cylinder> out;
        std::vector<Instance> seen;
        for (const auto& g : config) {
            const int copy = static_cast<int>(std::count(seen.begin(), seen.end(), g));
            seen.push_back(g);
            Cylinder c;
            c.basis = g;
            c.birth = start;
            c.death = start + lifetime(g, copy);
            c.id = CylinderId{g.shift.x, g.shift.y, static_cast<std::int64_t>(g.cls), static_cast<std::uint32_t>(copy), true};
            out.push_back(c);
        }
        return out;
    }

private:
    std::uint64_t seed_;
};

/// Free network at time t >= 0 started from `initial` (with multiplicities):
/// number of cylinders of C[0, t] together with the initial cylinders whose
/// basis is region[k] and whose life contains t.
inline std::vector<int> free_state(FieldRealization& field, std::span<const Instance> initial,
                                   const InitialLifetimes& lifetimes, double t, std::span<const Instance> region) {
    if (t < 0.0) throw std::invalid_argument("free_state requires t >= 0");
    std::vector<int> counts(region.size(), 0);
    const auto init = lifetimes.cylinders(initial, 0.0);
    for (std::size_t k = 0; k < region.size(); ++k) {
        for (const auto& c : init)
            if (c.basis == region[k] && c.alive_at(t)) ++counts[k];
        if (t > 0.0 && field.active(region[k]))
            for (const auto& c : field.cylinders_in(region[k], 0.0, std::nextafter(t, INFINITY)))
                if (c.alive_at(t)) ++counts[k];
    }
    return counts;
}

}  // namespace peierls
