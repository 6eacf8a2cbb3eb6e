#pragma once

// Plaquettes and contours of the two-dimensional contour gas.
//
// A plaquette is a unit edge of the dual lattice.  Its two endpoints are the
// (d-2)-dimensional faces; contours sharing an endpoint are incompatible.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace peierls {

struct Point {
    int x = 0;
    int y = 0;

    friend constexpr auto operator<=>(const Point&, const Point&) = default;
    constexpr Point operator+(Point o) const { return {x + o.x, y + o.y}; }
    constexpr Point operator-(Point o) const { return {x - o.x, y - o.y}; }
};

inline constexpr int manhattan(Point a, Point b) {
    return (a.x > b.x ? a.x - b.x : b.x - a.x) + (a.y > b.y ? a.y - b.y : b.y - a.y);
}

enum class Axis : std::uint8_t { X = 0, Y = 1 };

/// Unit segment from `origin` to `origin + e_axis`.
struct Plaquette {
    Point origin;
    Axis axis = Axis::X;

    friend constexpr auto operator<=>(const Plaquette&, const Plaquette&) = default;

    constexpr Point tail() const { return origin; }
    constexpr Point head() const {
        return axis == Axis::X ? Point{origin.x + 1, origin.y} : Point{origin.x, origin.y + 1};
    }
    constexpr Plaquette translated(Point v) const { return {origin + v, axis}; }
    /// Midpoint in doubled coordinates, so that distances stay integral.
    constexpr Point midpoint2() const {
        return axis == Axis::X ? Point{2 * origin.x + 1, 2 * origin.y}
                               : Point{2 * origin.x, 2 * origin.y + 1};
    }
};

/// Manhattan distance between plaquette midpoints.
inline double plaquette_distance(const Plaquette& a, const Plaquette& b) {
    return 0.5 * manhattan(a.midpoint2(), b.midpoint2());
}

struct PointHash {
    std::size_t operator()(Point p) const noexcept {
        auto h = static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.x)) << 32 |
                 static_cast<std::uint32_t>(p.y);
        h ^= h >> 33;
        h *= 0xff51afd7ed558ccdULL;
        h ^= h >> 33;
        return static_cast<std::size_t>(h);
    }
};

struct PlaquetteHash {
    std::size_t operator()(const Plaquette& p) const noexcept {
        return PointHash{}(p.origin) * 2 + static_cast<std::size_t>(p.axis);
    }
};

class ContourError : public std::runtime_error {
public:
    enum class Kind { Empty, NotClosed, NotConnected };
    ContourError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Connected, closed set of plaquettes.  Plaquettes are kept sorted.
class Contour {
public:
    Contour() = default;

    std::span<const Plaquette> plaquettes() const { return plaquettes_; }
    /// Distinct endpoints, sorted.
    std::span<const Point> vertices() const { return vertices_; }
    int length() const { return static_cast<int>(plaquettes_.size()); }

    Point min_corner() const { return lo_; }
    Point max_corner() const { return hi_; }

    Contour translated(Point v) const {
        Contour c = *this;
        for (auto& p : c.plaquettes_) p.origin = p.origin + v;
        for (auto& q : c.vertices_) q = q + v;
        c.lo_ = lo_ + v;
        c.hi_ = hi_ + v;
        return c;
    }

    bool contains(const Plaquette& p) const {
        return std::binary_search(plaquettes_.begin(), plaquettes_.end(), p);
    }

    friend bool operator==(const Contour& a, const Contour& b) { return a.plaquettes_ == b.plaquettes_; }
    friend auto operator<=>(const Contour& a, const Contour& b) {
        return a.plaquettes_ <=> b.plaquettes_;
    }

private:
    friend Contour validate_contour(std::vector<Plaquette> plaquettes);
    friend Contour make_contour_unchecked(std::vector<Plaquette> plaquettes);

    void finish() {
        std::sort(plaquettes_.begin(), plaquettes_.end());
        vertices_.clear();
        vertices_.reserve(2 * plaquettes_.size());
        for (const auto& p : plaquettes_) {
            vertices_.push_back(p.tail());
            vertices_.push_back(p.head());
        }
        std::sort(vertices_.begin(), vertices_.end());
        vertices_.erase(std::unique(vertices_.begin(), vertices_.end()), vertices_.end());
        lo_ = hi_ = vertices_.front();
        for (auto v : vertices_) {
            lo_ = {std::min(lo_.x, v.x), std::min(lo_.y, v.y)};
            hi_ = {std::max(hi_.x, v.x), std::max(hi_.y, v.y)};
        }
    }

    std::vector<Plaquette> plaquettes_;
    std::vector<Point> vertices_;
    Point lo_, hi_;
};

/// Builds a contour from plaquettes already known to be closed and connected.
inline Contour make_contour_unchecked(std::vector<Plaquette> plaquettes) {
    Contour c;
    c.plaquettes_ = std::move(plaquettes);
    c.finish();
    return c;
}

/// Checks closedness (every endpoint has even incidence) and connectedness.
inline Contour validate_contour(std::vector<Plaquette> plaquettes) {
    if (plaquettes.empty()) throw ContourError(ContourError::Kind::Empty, "empty plaquette set");
    std::sort(plaquettes.begin(), plaquettes.end());
    plaquettes.erase(std::unique(plaquettes.begin(), plaquettes.end()), plaquettes.end());

    std::map<Point, int> degree;
    for (const auto& p : plaquettes) {
        ++degree[p.tail()];
        ++degree[p.head()];
    }
    for (const auto& [v, d] : degree) {
        if (d % 2 != 0) {
            throw ContourError(ContourError::Kind::NotClosed,
                               "endpoint (" + std::to_string(v.x) + "," + std::to_string(v.y) +
                                   ") has odd incidence " + std::to_string(d));
        }
    }

    // Union-find over plaquettes sharing an endpoint.
    std::vector<std::size_t> parent(plaquettes.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
    std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    std::map<Point, std::size_t> first_at;
    for (std::size_t i = 0; i < plaquettes.size(); ++i) {
        for (Point v : {plaquettes[i].tail(), plaquettes[i].head()}) {
            auto [it, fresh] = first_at.emplace(v, i);
            if (!fresh) parent[find(i)] = find(it->second);
        }
    }
    const auto root = find(0);
    for (std::size_t i = 1; i < plaquettes.size(); ++i) {
        if (find(i) != root) throw ContourError(ContourError::Kind::NotConnected, "plaquettes form more than one component");
    }
    return make_contour_unchecked(std::move(plaquettes));
}

/// True iff the two vertex sets intersect.  Both spans must be sorted.
inline bool vertex_sets_meet(std::span<const Point> a, std::span<const Point> b) {
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j) ++i;
        else if (*j < *i) ++j;
        else return true;
    }
    return false;
}

inline bool boxes_meet(Point alo, Point ahi, Point blo, Point bhi) {
    return alo.x <= bhi.x && blo.x <= ahi.x && alo.y <= bhi.y && blo.y <= ahi.y;
}

/// Incompatibility: the contours share an endpoint.
inline bool incompatible(const Contour& g, const Contour& h) {
    if (!boxes_meet(g.min_corner(), g.max_corner(), h.min_corner(), h.max_corner())) return false;
    return vertex_sets_meet(g.vertices(), h.vertices());
}

/// The four edges of the unit cell with lower-left corner `corner`.
inline Contour unit_square(Point corner = {0, 0}) {
    return make_contour_unchecked({{corner, Axis::X},
                                   {corner, Axis::Y},
                                   {{corner.x, corner.y + 1}, Axis::X},
                                   {{corner.x + 1, corner.y}, Axis::Y}});
}

/// Boundary of the w-by-h rectangle of cells with lower-left corner `corner`.
inline Contour rectangle(Point corner, int w, int h) {
    std::vector<Plaquette> ps;
    for (int i = 0; i < w; ++i) {
        ps.push_back({{corner.x + i, corner.y}, Axis::X});
        ps.push_back({{corner.x + i, corner.y + h}, Axis::X});
    }
    for (int j = 0; j < h; ++j) {
        ps.push_back({{corner.x, corner.y + j}, Axis::Y});
        ps.push_back({{corner.x + w, corner.y + j}, Axis::Y});
    }
    return make_contour_unchecked(std::move(ps));
}

/// Translation moving the contour's smallest plaquette to the origin.
inline Point canonical_offset(const Contour& g) { return g.plaquettes().front().origin; }

}  // namespace peierls
