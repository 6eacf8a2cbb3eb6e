#pragma once

// Finite-volume loss network built mark by mark from the Poisson field.
// A born cylinder is kept iff its basis shares no endpoint with a kept
// cylinder alive at that moment; kept cylinders die at birth + lifetime.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "peierls/poisson_field.hpp"

namespace peierls {

/// Finite set of plaquettes.  Admissible contours lie entirely inside.
class Volume {
public:
    Volume() = default;

    explicit Volume(std::vector<Plaquette> plaquettes) : plaquettes_(std::move(plaquettes)) {
        std::sort(plaquettes_.begin(), plaquettes_.end());
        plaquettes_.erase(std::unique(plaquettes_.begin(), plaquettes_.end()), plaquettes_.end());
        if (plaquettes_.empty()) return;
        lo_ = hi_ = plaquettes_.front().tail();
        for (const auto& p : plaquettes_)
            for (Point v : {p.tail(), p.head()}) {
                lo_ = {std::min(lo_.x, v.x), std::min(lo_.y, v.y)};
                hi_ = {std::max(hi_.x, v.x), std::max(hi_.y, v.y)};
            }
    }

    /// All plaquettes with both endpoints in [corner, corner + (w, h)].
    static Volume box(Point corner, int w, int h) {
        std::vector<Plaquette> ps;
        for (int x = corner.x; x <= corner.x + w; ++x)
            for (int y = corner.y; y <= corner.y + h; ++y) {
                if (x < corner.x + w) ps.push_back({{x, y}, Axis::X});
                if (y < corner.y + h) ps.push_back({{x, y}, Axis::Y});
            }
        return Volume(std::move(ps));
    }

    std::span<const Plaquette> plaquettes() const { return plaquettes_; }
    bool empty() const { return plaquettes_.empty(); }
    Point lo() const { return lo_; }
    Point hi() const { return hi_; }

    bool contains(const Plaquette& p) const { return std::binary_search(plaquettes_.begin(), plaquettes_.end(), p); }

    bool contains(const InstanceGeometry& geo, const Instance& g) const {
        if (plaquettes_.empty()) return false;
        const Point a = geo.lo(g), b = geo.hi(g);
        if (a.x < lo_.x || a.y < lo_.y || b.x > hi_.x || b.y > hi_.y) return false;
        bool inside = true;
        geo.for_each_plaquette(g, [&](const Plaquette& p) { inside = inside && contains(p); });
        return inside;
    }

    /// Every catalog instance (length <= max_length) inside the volume, sorted.
    std::vector<Instance> admissible(const ContourCatalog& catalog, int max_length = 0) const {
        if (max_length <= 0) max_length = catalog.max_length();
        InstanceGeometry geo(catalog);
        std::vector<Instance> out;
        for (std::uint32_t c = 0; c < catalog.size(); ++c) {
            const auto& rep = catalog.classes()[c].representative;
            if (rep.length() > max_length) continue;
            for (int x = lo_.x - rep.min_corner().x; x <= hi_.x - rep.max_corner().x; ++x)
                for (int y = lo_.y - rep.min_corner().y; y <= hi_.y - rep.max_corner().y; ++y) {
                    Instance g{c, {x, y}};
                    if (contains(geo, g)) out.push_back(g);
                }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Manhattan distance from a plaquette midpoint to the nearest plaquette
    /// outside the volume.
    double distance_to_complement(const Plaquette& p) const {
        const int reach = (hi_.x - lo_.x) + (hi_.y - lo_.y) + 4;
        double best = INFINITY;
        for (int dx = -reach; dx <= reach; ++dx)
            for (int dy = -reach; dy <= reach; ++dy)
                for (Axis a : {Axis::X, Axis::Y}) {
                    Plaquette q{{p.origin.x + dx, p.origin.y + dy}, a};
                    if (contains(q)) continue;
                    best = std::min(best, plaquette_distance(p, q));
                }
        return best;
    }

private:
    std::vector<Plaquette> plaquettes_;
    Point lo_, hi_;
};

/// Compatible set of occupied contours, kept sorted.
using Configuration = std::vector<Instance>;

inline bool is_compatible(const InstanceGeometry& geo, const Configuration& config) {
    for (std::size_t i = 0; i < config.size(); ++i)
        for (std::size_t j = i + 1; j < config.size(); ++j)
            if (geo.incompatible(config[i], config[j])) return false;
    return true;
}

struct TrajectoryEvent {
    enum class Kind { Birth, Death };
    double time = 0.0;
    Kind kind = Kind::Birth;
    Instance contour;
    CylinderId id;
    bool kept = false;
};

struct Trajectory {
    std::vector<TrajectoryEvent> events;
    Configuration final_state;
    double start = 0.0;
    double end = 0.0;

    /// Kept contours alive at time t (t in [start, end]).
    Configuration section(double t) const {
        std::set<std::pair<Instance, CylinderId>> alive;
        for (const auto& e : events) {
            if (e.time > t) break;
            if (!e.kept) continue;
            if (e.kind == TrajectoryEvent::Kind::Birth) alive.insert({e.contour, e.id});
            else alive.erase({e.contour, e.id});
        }
        Configuration out;
        for (const auto& [g, id] : alive) out.push_back(g);
        std::sort(out.begin(), out.end());
        return out;
    }

    /// "time kind class shift_x shift_y kept" lines.
    void write(std::ostream& os) const {
        os.precision(17);
        for (const auto& e : events)
            os << e.time << ' ' << (e.kind == TrajectoryEvent::Kind::Birth ? "birth" : "death") << ' ' << e.contour.cls << ' '
               << e.contour.shift.x << ' ' << e.contour.shift.y << ' ' << (e.kept ? 1 : 0) << '\n';
    }
};

/// Cylinders of the field with basis inside the volume, born in [s, t), in birth order.
inline std::vector<Cylinder> volume_cylinders(FieldRealization& field, const Volume& volume, double s, double t) {
    std::vector<Cylinder> out;
    if (volume.empty()) return out;
    const auto& cat = field.catalog();
    const auto& geo = field.geometry();
    field.for_each(volume.lo() - cat.rep_hi(), volume.hi() - cat.rep_lo(), s, t, [&](const Cylinder& c) {
        if (volume.contains(geo, c.basis)) out.push_back(c);
    });
    std::sort(out.begin(), out.end(), birth_order);
    return out;
}

/// Forward construction on [start, start + horizon] from `initial`.
inline Trajectory run_forward(const Volume& volume, const Configuration& initial, double horizon, FieldRealization& field,
                              double start = 0.0) {
    const auto& geo = field.geometry();
    if (!is_compatible(geo, initial)) throw std::invalid_argument("initial configuration is not compatible");
    for (const auto& g : initial)
        if (!volume.contains(geo, g)) throw std::invalid_argument("initial contour lies outside the volume");

    Trajectory traj;
    traj.start = start;
    traj.end = start + horizon;

    std::unordered_set<Point, PointHash> occupied;
    struct Alive {
        double death;
        Instance basis;
        CylinderId id;
        bool operator>(const Alive& o) const {
            if (death != o.death) return death > o.death;
            if (basis != o.basis) return o.basis < basis;
            return o.id < id;
        }
    };
    std::priority_queue<Alive, std::vector<Alive>, std::greater<>> deaths;

    auto retire_until = [&](double t) {
        while (!deaths.empty() && deaths.top().death <= t) {
            const auto a = deaths.top();
            deaths.pop();
            geo.for_each_vertex(a.basis, [&](Point v) { occupied.erase(v); });
            traj.events.push_back({a.death, TrajectoryEvent::Kind::Death, a.basis, a.id, true});
        }
    };
    auto admit = [&](const Cylinder& c) {
        bool free = true;
        geo.for_each_vertex(c.basis, [&](Point v) { free = free && !occupied.count(v); });
        if (free) {
            geo.for_each_vertex(c.basis, [&](Point v) { occupied.insert(v); });
            deaths.push({c.death, c.basis, c.id});
        }
        traj.events.push_back({c.birth, TrajectoryEvent::Kind::Birth, c.basis, c.id, free});
    };

    InitialLifetimes lifetimes(field.seed());
    for (const auto& c : lifetimes.cylinders(initial, start)) admit(c);
    for (const auto& c : volume_cylinders(field, volume, std::nextafter(start, INFINITY), std::nextafter(traj.end, INFINITY))) {
        retire_until(c.birth);
        admit(c);
    }
    retire_until(traj.end);

    // Whatever is still scheduled is alive at the end.
    while (!deaths.empty()) {
        traj.final_state.push_back(deaths.top().basis);
        deaths.pop();
    }
    std::sort(traj.final_state.begin(), traj.final_state.end());
    return traj;
}

struct HorizonPolicy {
    double initial = 32.0;
    double max = 16384.0;
    /// Ancestors older than this relative to the cylinder they precede are not
    /// searched; the neglected expected count is reported.
    double lookback = 16.0;
};

class HorizonTooShort : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Times in [s, t] at which the free network restricted to the volume is
/// empty: the start of every idle period (clipped to s).
inline std::vector<double> regeneration_times(const Volume& volume, FieldRealization& field, double s, double t,
                                              double lookback = HorizonPolicy{}.lookback) {
    auto cyl = volume_cylinders(field, volume, s - lookback, std::nextafter(t, INFINITY));
    std::vector<double> out;
    double busy_until = -INFINITY;
    for (const auto& c : cyl) {
        if (c.birth > busy_until) {
            const double idle = std::max(busy_until, s);
            if (idle <= t && idle < c.birth && c.birth >= s) out.push_back(idle);
        }
        busy_until = std::max(busy_until, c.death);
    }
    const double idle = std::max(busy_until, s);
    if (idle <= t) out.push_back(idle);
    return out;
}

struct BurnInPolicy {
    HorizonPolicy horizon;
    bool use_regeneration = true;
    /// Burn-in length used when no regeneration is found; <= 0 disables it.
    double fallback_burn_in = 0.0;
};

struct ForwardSample {
    Configuration state;
    double regeneration = 0.0;  ///< start of the construction interval
    bool exact = true;          ///< false when the burn-in fallback was used
};

/// Draw from the finite-volume invariant law at time 0.
///
/// Finds the last time tau <= 0 at which the free network on the volume is
/// empty; the loss network is then empty too, and the construction over
/// (tau, 0] reproduces the stationary process at time 0.
inline ForwardSample stationary_forward_sample(const Volume& volume, FieldRealization& field, const BurnInPolicy& policy = {}) {
    if (policy.use_regeneration) {
        for (double T = policy.horizon.initial; T <= policy.horizon.max; T *= 2.0) {
            auto regen = regeneration_times(volume, field, -T, 0.0, policy.horizon.lookback);
            if (regen.empty()) continue;
            const double tau = regen.back();
            auto traj = run_forward(volume, {}, -tau, field, tau);
            return {std::move(traj.final_state), tau, true};
        }
    }
    if (policy.fallback_burn_in > 0.0) {
        auto traj = run_forward(volume, {}, policy.fallback_burn_in, field, -policy.fallback_burn_in);
        return {std::move(traj.final_state), -policy.fallback_burn_in, false};
    }
    throw HorizonTooShort("no regeneration time found within the maximal horizon");
}

/// Greedy maximal packing of the volume by canonical order.
inline Configuration greedy_packing(const Volume& volume, const ContourCatalog& catalog, int max_length = 0) {
    InstanceGeometry geo(catalog);
    Configuration out;
    for (const auto& g : volume.admissible(catalog, max_length)) {
        bool ok = true;
        for (const auto& h : out)
            if (geo.incompatible(g, h)) {
                ok = false;
                break;
            }
        if (ok) out.push_back(g);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace peierls
