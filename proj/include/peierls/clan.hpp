#pragma once

// Backward clan-of-ancestors construction.
//
// The clan of a window is every cylinder alive at time 0 whose basis
// contains a window plaquette, closed under "ancestor": an earlier-born
// cylinder whose basis shares an endpoint with the basis and which is still
// alive at the birth.  A birth-ordered kept/erased pass over the clan yields
// the equilibrium configuration on the window.

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <ostream>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "peierls/forward_dynamics.hpp"
#include "peierls/poisson_field.hpp"

namespace peierls {

class HorizonExploded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ClanPolicy {
    HorizonPolicy horizon;
    std::size_t member_cap = 2'000'000;
};

struct ClanMember {
    Cylinder cylinder;
    int generation = 0;  ///< 0 for cylinders alive at the observation time
    bool kept = false;
};

/// Certified neglected birth intensity per endpoint from contours longer
/// than the catalog cap.
struct TruncationWarning {
    double neglected_intensity = 0.0;
    TailModel model = TailModel::Eulerian;
    bool certified = true;
};

/// Sorted, deduplicated plaquette set with its endpoint bounding box.
class Window {
public:
    explicit Window(std::vector<Plaquette> plaquettes) : plaquettes_(std::move(plaquettes)) {
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

    std::span<const Plaquette> plaquettes() const { return plaquettes_; }
    std::size_t size() const { return plaquettes_.size(); }
    bool empty() const { return plaquettes_.empty(); }
    Point lo() const { return lo_; }
    Point hi() const { return hi_; }
    bool contains(const Plaquette& p) const { return std::binary_search(plaquettes_.begin(), plaquettes_.end(), p); }

private:
    std::vector<Plaquette> plaquettes_;
    Point lo_, hi_;
};

using WindowPtr = std::shared_ptr<const Window>;

inline WindowPtr make_window(std::vector<Plaquette> plaquettes) { return std::make_shared<const Window>(std::move(plaquettes)); }

struct Clan {
    WindowPtr window;
    double observation_time = 0.0;
    std::vector<ClanMember> members;
    /// First-generation ancestors of each member, as member indices.
    std::vector<std::vector<std::uint32_t>> ancestors;
    bool classified = false;

    double horizon = 0.0;            ///< final backward horizon T
    double lookback_residual = 0.0;  ///< expected number of ancestors missed by the lookback cut
    TruncationWarning truncation;

    bool empty() const { return members.empty(); }
    std::size_t size() const { return members.size(); }

    /// Members sorted by cylinder id; equal iff the clans are the same set.
    std::vector<CylinderId> ids() const {
        std::vector<CylinderId> out;
        out.reserve(members.size());
        for (const auto& m : members) out.push_back(m.cylinder.id);
        std::sort(out.begin(), out.end());
        return out;
    }
};

/// Birth intensity per endpoint from contours longer than the catalog cap
/// (+infinity when the tail model does not converge at beta).
inline double neglected_intensity(const ContourCatalog& catalog, double beta, TailModel model) {
    return tail_sum(catalog, beta, model, Face::Vertex);
}

namespace detail {

inline std::vector<Point> sorted_vertices(const InstanceGeometry& geo, const Instance& g) {
    std::vector<Point> out;
    geo.for_each_vertex(g, [&](Point v) { out.push_back(v); });
    return out;  // translation preserves the representative's order
}

inline bool basis_meets_window(const InstanceGeometry& geo, const Instance& g, const Window& window) {
    bool hit = false;
    geo.for_each_plaquette(g, [&](const Plaquette& p) { hit = hit || window.contains(p); });
    return hit;
}

/// Unweighted birth rate of contours through one endpoint (truncated catalog).
inline double per_vertex_rate(const FieldRealization& field) {
    double s = 0.0;
    for (const auto& c : field.catalog().classes())
        if (c.length <= field.params().max_length) s += c.vertex_count * std::exp(-field.beta() * c.length);
    return s;
}

}  // namespace detail

/// Breadth-first backward exploration of the clan of `window` at time 0.
///
/// Ancestors of a member born at b are searched among births in
/// [max(b - lookback, -T), b).  When the clipping at -T was active for any
/// member, T doubles and the exploration restarts on the same realization.
/// With `restrict_to`, only contours inside that volume take part.
inline Clan explore_clan(WindowPtr window_ptr, FieldRealization& field, const ClanPolicy& policy = {},
                         const Volume* restrict_to = nullptr, TailModel tail = TailModel::Eulerian) {
    const Window& window = *window_ptr;
    const auto& geo = field.geometry();
    const auto& cat = field.catalog();
    const double W = policy.horizon.lookback;

    Clan clan;
    clan.window = window_ptr;
    clan.truncation = {neglected_intensity(cat, field.beta(), tail), tail, is_certified(tail)};
    if (window.empty()) return clan;

    const Point wlo = window.lo(), whi = window.hi();

    auto allowed = [&](const Instance& g) { return restrict_to == nullptr || restrict_to->contains(geo, g); };

    for (double T = policy.horizon.initial;; T *= 2.0) {
        if (T > policy.horizon.max) throw HorizonExploded("backward horizon exceeded its maximum");
        clan.members.clear();
        clan.ancestors.clear();
        std::unordered_map<CylinderId, std::uint32_t, CylinderIdHash> index;
        bool clipped = false;

        const double root_from = std::max(-W, -T);
        if (-W < -T) clipped = true;
        std::vector<Cylinder> roots;
        field.for_each(wlo - cat.rep_hi(), whi - cat.rep_lo(), root_from, std::nextafter(0.0, INFINITY),
                       [&](const Cylinder& c) {
                           if (c.death < 0.0) return;
                           if (!allowed(c.basis)) return;
                           if (!detail::basis_meets_window(geo, c.basis, window)) return;
                           roots.push_back(c);
                       });
        std::sort(roots.begin(), roots.end(), birth_order);
        std::deque<std::uint32_t> queue;
        for (const auto& c : roots) {
            index.emplace(c.id, static_cast<std::uint32_t>(clan.members.size()));
            queue.push_back(static_cast<std::uint32_t>(clan.members.size()));
            clan.members.push_back({c, 0, false});
            clan.ancestors.emplace_back();
        }

        while (!queue.empty()) {
            const auto k = queue.front();
            queue.pop_front();
            const Cylinder cur = clan.members[k].cylinder;
            const int gen = clan.members[k].generation;
            const double from = std::max(cur.birth - W, -T);
            if (cur.birth - W < -T) clipped = true;
            const auto verts = detail::sorted_vertices(geo, cur.basis);
            std::vector<Cylinder> found;
            field.for_each_touching(verts, geo.lo(cur.basis), geo.hi(cur.basis), from, cur.birth, [&](const Cylinder& c) {
                if (c.death < cur.birth) return;
                if (!allowed(c.basis)) return;
                found.push_back(c);
            });
            std::sort(found.begin(), found.end(), birth_order);
            for (const auto& c : found) {
                auto [it, fresh] = index.emplace(c.id, static_cast<std::uint32_t>(clan.members.size()));
                if (fresh) {
                    if (clan.members.size() >= policy.member_cap) throw HorizonExploded("clan exceeded the member cap");
                    clan.members.push_back({c, gen + 1, false});
                    clan.ancestors.emplace_back();
                    queue.push_back(it->second);
                }
                clan.ancestors[k].push_back(it->second);
            }
        }
        if (clipped && T * 2.0 <= policy.horizon.max) continue;
        if (clipped) throw HorizonExploded("backward horizon exceeded its maximum");
        clan.horizon = T;
        break;
    }

    const double per_vertex = detail::per_vertex_rate(field);
    double residual = 0.0;
    for (const auto& m : clan.members) residual += static_cast<double>(geo.length(m.cylinder.basis)) * per_vertex;
    // Roots: births of window contours earlier than the lookback still alive at 0.
    residual += static_cast<double>(window.size()) * per_vertex;
    clan.lookback_residual = residual * std::exp(-W);
    return clan;
}

inline Clan explore_clan(std::vector<Plaquette> window, FieldRealization& field, const ClanPolicy& policy = {},
                         const Volume* restrict_to = nullptr, TailModel tail = TailModel::Eulerian) {
    return explore_clan(make_window(std::move(window)), field, policy, restrict_to, tail);
}

/// Birth-ordered kept/erased pass.  A member is kept iff it is compatible
/// (as a cylinder) with every member already kept.
inline void classify_kept(Clan& clan, const InstanceGeometry& geo) {
    std::vector<std::uint32_t> order(clan.members.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return birth_order(clan.members[a].cylinder, clan.members[b].cylinder);
    });
    std::vector<std::uint32_t> kept;
    for (auto i : order) {
        auto& m = clan.members[i];
        bool ok = true;
        for (auto j : kept) {
            const auto& other = clan.members[j].cylinder;
            if (other.death < m.cylinder.birth) continue;
            if (geo.incompatible(other.basis, m.cylinder.basis)) {
                ok = false;
                break;
            }
        }
        m.kept = ok;
        if (ok) kept.push_back(i);
    }
    clan.classified = true;
}

struct PerfectSample {
    /// Kept bases alive at time 0 that contain a window plaquette, sorted.
    Configuration state;
    Clan clan;
};

inline Configuration kept_section(const Clan& clan) {
    Configuration out;
    for (const auto& m : clan.members)
        if (m.kept && m.generation == 0) out.push_back(m.cylinder.basis);
    std::sort(out.begin(), out.end());
    return out;
}

/// Exact draw of the infinite-volume equilibrium on the window, up to the
/// contour-length cap and the lookback cut (both reported on the clan).
inline PerfectSample perfect_sample(WindowPtr window, FieldRealization& field, const ClanPolicy& policy = {},
                                    const Volume* restrict_to = nullptr) {
    PerfectSample s;
    s.clan = explore_clan(std::move(window), field, policy, restrict_to);
    classify_kept(s.clan, field.geometry());
    s.state = kept_section(s.clan);
    return s;
}

inline PerfectSample perfect_sample(std::vector<Plaquette> window, FieldRealization& field, const ClanPolicy& policy = {},
                                    const Volume* restrict_to = nullptr) {
    return perfect_sample(make_window(std::move(window)), field, policy, restrict_to);
}

struct ClanStats {
    double time_length = 0.0;
    long space_width = 0;
    long size = 0;
    int depth = 0;
};

enum class WidthMode { Plaquettes, Sites };

inline ClanStats clan_statistics(const Clan& clan, const InstanceGeometry& geo, WidthMode mode = WidthMode::Plaquettes) {
    ClanStats s;
    if (clan.members.empty()) return s;
    double earliest = clan.observation_time;
    std::unordered_set<Plaquette, PlaquetteHash> plaq;
    std::unordered_set<Point, PointHash> sites;
    for (const auto& m : clan.members) {
        earliest = std::min(earliest, m.cylinder.birth);
        s.depth = std::max(s.depth, m.generation);
        if (mode == WidthMode::Plaquettes) geo.for_each_plaquette(m.cylinder.basis, [&](const Plaquette& p) { plaq.insert(p); });
        else geo.for_each_vertex(m.cylinder.basis, [&](Point v) { sites.insert(v); });
    }
    s.time_length = clan.observation_time - earliest;
    s.space_width = static_cast<long>(mode == WidthMode::Plaquettes ? plaq.size() : sites.size());
    s.size = static_cast<long>(clan.members.size());
    return s;
}

/// Clan built from the field restricted to contours inside `volume`.
inline Clan finite_volume_clan(std::vector<Plaquette> window, const Volume& volume, FieldRealization& field,
                               const ClanPolicy& policy = {}) {
    auto w = make_window(std::move(window));
    for (const auto& p : w->plaquettes())
        if (!volume.contains(p)) throw std::invalid_argument("window must lie inside the volume");
    return explore_clan(std::move(w), field, policy, &volume);
}

/// Some cylinder of `a` is incompatible with some cylinder of `b`.
inline bool clans_incompatible(const Clan& a, const Clan& b, const InstanceGeometry& geo) {
    for (const auto& x : a.members)
        for (const auto& y : b.members)
            if (incompatible(geo, x.cylinder, y.cylinder)) return true;
    return false;
}

/// Explores the clans of two windows on independent realizations and
/// reports whether they are incompatible.
inline bool mixing_probe(std::vector<Plaquette> window1, std::vector<Plaquette> window2, FieldRealization& field1,
                         FieldRealization& field2, const ClanPolicy& policy = {}) {
    if (field1.seed() == field2.seed()) throw std::invalid_argument("mixing probe needs independent realizations");
    const auto a = explore_clan(std::move(window1), field1, policy);
    if (a.empty()) return false;
    const auto b = explore_clan(std::move(window2), field2, policy);
    return clans_incompatible(a, b, field1.geometry());
}

/// "class shift_x shift_y birth death generation kept" per member, birth order.
inline void write_clan(std::ostream& os, const Clan& clan) {
    std::vector<std::uint32_t> order(clan.members.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return birth_order(clan.members[a].cylinder, clan.members[b].cylinder);
    });
    os.precision(17);
    for (auto i : order) {
        const auto& m = clan.members[i];
        os << m.cylinder.basis.cls << ' ' << m.cylinder.basis.shift.x << ' ' << m.cylinder.basis.shift.y << ' '
           << m.cylinder.birth << ' ' << m.cylinder.death << ' ' << m.generation << ' ' << (m.kept ? 1 : 0) << '\n';
    }
}

}  // namespace peierls
