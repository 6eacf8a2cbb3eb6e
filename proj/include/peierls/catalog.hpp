#pragma once

// Exhaustive enumeration of contours up to a length cap, the translation
// class catalog built from it, and the counting-bound models that certify
// the truncated tails of contour sums.

#include <array>
#include <cmath>
#include <functional>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "peierls/geometry.hpp"

namespace peierls {

class BudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t kDefaultEnumerationNodeLimit = 200'000'000ULL;

/// All contours of length <= max_length containing `anchor`, sorted.
///
/// Every contour is an Eulerian edge set, so it admits a closed trail that
/// starts by traversing `anchor` from tail to head.  The search walks such
/// trails (never reusing an edge) and prunes when the Manhattan distance back
/// to the start exceeds the remaining budget.  Distinct trails producing the
/// same edge set are merged.
inline std::vector<Contour> enumerate_through(const Plaquette& anchor, int max_length,
                                              std::uint64_t node_limit = kDefaultEnumerationNodeLimit) {
    if (max_length < 4 || max_length % 2 != 0) {
        throw std::invalid_argument("enumeration cap must be even and at least 4, got " +
                                    std::to_string(max_length));
    }
    const Point start = anchor.tail();
    std::vector<Plaquette> trail{anchor};
    std::set<std::vector<Plaquette>> found;
    std::uint64_t nodes = 0;

    auto used = [&](const Plaquette& p) {
        for (const auto& q : trail)
            if (q == p) return true;
        return false;
    };

    // Edges leaving `v`, in a fixed order.
    auto steps = [](Point v) {
        return std::array<std::pair<Plaquette, Point>, 4>{{
            {{v, Axis::X}, {v.x + 1, v.y}},
            {{{v.x - 1, v.y}, Axis::X}, {v.x - 1, v.y}},
            {{v, Axis::Y}, {v.x, v.y + 1}},
            {{{v.x, v.y - 1}, Axis::Y}, {v.x, v.y - 1}},
        }};
    };

    std::function<void(Point)> walk = [&](Point cur) {
        if (++nodes > node_limit) throw BudgetExceeded("enumeration node limit exceeded");
        const int len = static_cast<int>(trail.size());
        if (cur == start) {
            auto key = trail;
            std::sort(key.begin(), key.end());
            found.insert(std::move(key));
        }
        if (len == max_length) return;
        for (const auto& [edge, next] : steps(cur)) {
            if (manhattan(next, start) > max_length - len - 1) continue;
            if (used(edge)) continue;
            trail.push_back(edge);
            walk(next);
            trail.pop_back();
        }
    };
    walk(anchor.head());

    std::vector<Contour> out;
    out.reserve(found.size());
    for (const auto& ps : found) out.push_back(make_contour_unchecked(ps));
    std::sort(out.begin(), out.end(), [](const Contour& a, const Contour& b) {
        if (a.length() != b.length()) return a.length() < b.length();
        return a < b;
    });
    return out;
}

/// Canonical form: the translate whose smallest plaquette sits at the origin.
struct Canonical {
    Contour representative;
    Point translation;  ///< representative.translated(translation) == input
};

inline Canonical canonicalize(const Contour& g) {
    const Point off = canonical_offset(g);
    return {g.translated(Point{} - off), off};
}

/// One translation-equivalence class of contours.
struct ContourClass {
    Contour representative;
    int length = 0;
    int x_plaquettes = 0;  ///< translates through a fixed X plaquette
    int y_plaquettes = 0;
    int vertex_count = 0;  ///< translates through a fixed endpoint
};

/// How the catalog's length cap is certified beyond the cap.
enum class TailModel {
    Walk,      ///< kappa(n) <= n 4^n (closed-walk overcount)
    Eulerian,  ///< closed trails: 3^(n-2) through a plaquette, 4*3^(n-2) through an endpoint
    Geometric,  ///< extrapolation of the last two exact counts; not a certified bound
    None        ///< no tail: quantities of the truncated gas that is actually simulated
};

enum class Face { Plaquette, Vertex };

inline const char* to_string(TailModel m) {
    switch (m) {
        case TailModel::Walk: return "walk";
        case TailModel::Eulerian: return "eulerian";
        case TailModel::Geometric: return "geometric";
        case TailModel::None: return "none";
    }
    return "?";
}

inline TailModel tail_model_from_string(const std::string& s) {
    if (s == "walk") return TailModel::Walk;
    if (s == "eulerian") return TailModel::Eulerian;
    if (s == "geometric") return TailModel::Geometric;
    if (s == "none") return TailModel::None;
    throw std::invalid_argument("unknown tail model '" + s + "'");
}

inline bool is_certified(TailModel m) { return m == TailModel::Walk || m == TailModel::Eulerian; }

/// Contour instance: a catalog class placed at a translation.
struct Instance {
    std::uint32_t cls = 0;
    Point shift;
    friend constexpr auto operator<=>(const Instance&, const Instance&) = default;
};

class ContourCatalog {
public:
    explicit ContourCatalog(int max_length, std::uint64_t node_limit = kDefaultEnumerationNodeLimit)
        : max_length_(max_length) {
        // Every closed set in d = 2 contains a horizontal plaquette, so
        // contours through the origin X plaquette meet every class.
        auto through = enumerate_through({{0, 0}, Axis::X}, max_length, node_limit);
        std::set<Contour> reps;
        for (const auto& g : through) reps.insert(canonicalize(g).representative);
        build(std::vector<Contour>(reps.begin(), reps.end()));
        through_origin_.assign(static_cast<std::size_t>(max_length) + 1, 0);
        for (const auto& g : through) ++through_origin_[static_cast<std::size_t>(g.length())];
    }

    /// Catalog from explicit representatives (used by import).
    ContourCatalog(int max_length, std::vector<Contour> representatives) : max_length_(max_length) {
        std::set<Contour> reps;
        for (const auto& g : representatives) reps.insert(canonicalize(g).representative);
        build(std::vector<Contour>(reps.begin(), reps.end()));
        through_origin_.assign(static_cast<std::size_t>(max_length) + 1, 0);
        for (const auto& c : classes_) through_origin_[static_cast<std::size_t>(c.length)] += c.x_plaquettes;
    }

    int max_length() const { return max_length_; }
    const std::vector<ContourClass>& classes() const { return classes_; }
    const ContourClass& at(std::uint32_t i) const { return classes_.at(i); }
    std::size_t size() const { return classes_.size(); }

    /// Class index of a contour (any translate), or -1 when absent.
    long class_of(const Contour& g) const {
        auto it = index_.find(canonicalize(g).representative);
        return it == index_.end() ? -1 : static_cast<long>(it->second);
    }

    Contour contour(const Instance& inst) const { return classes_.at(inst.cls).representative.translated(inst.shift); }

    Instance instance_of(const Contour& g) const {
        auto canon = canonicalize(g);
        auto it = index_.find(canon.representative);
        if (it == index_.end()) throw std::out_of_range("contour is not in the catalog");
        return {static_cast<std::uint32_t>(it->second), canon.translation};
    }

    /// Number of classes of each length (index = length).
    std::vector<long> classes_per_length() const {
        std::vector<long> out(static_cast<std::size_t>(max_length_) + 1, 0);
        for (const auto& c : classes_) ++out[static_cast<std::size_t>(c.length)];
        return out;
    }

    /// kappa(n): contours of length n through a fixed X plaquette.
    std::vector<long> through_plaquette_counts() const { return through_origin_; }

    /// Contours of length n through a fixed endpoint.
    std::vector<long> through_vertex_counts() const {
        std::vector<long> out(static_cast<std::size_t>(max_length_) + 1, 0);
        for (const auto& c : classes_) out[static_cast<std::size_t>(c.length)] += c.vertex_count;
        return out;
    }

    /// Instances of every class containing endpoint `v`.
    template <class Fn>
    void for_each_through_vertex(Point v, Fn&& fn) const {
        for (std::uint32_t c = 0; c < classes_.size(); ++c)
            for (Point w : classes_[c].representative.vertices()) fn(Instance{c, v - w});
    }

    /// Instances of every class containing plaquette `p`.
    template <class Fn>
    void for_each_through_plaquette(const Plaquette& p, Fn&& fn) const {
        for (std::uint32_t c = 0; c < classes_.size(); ++c)
            for (const auto& q : classes_[c].representative.plaquettes())
                if (q.axis == p.axis) fn(Instance{c, p.origin - q.origin});
    }

    /// Translation span of representatives (min and max vertex offset).
    Point rep_lo() const { return rep_lo_; }
    Point rep_hi() const { return rep_hi_; }

    /// Upper bound on contours of length n > max_length through a face.
    double tail_count(int n, TailModel model, Face face) const {
        return contour_count_tail(n, model, face);
    }

    double contour_count_tail(int n, TailModel model, Face face) const {
        switch (model) {
            case TailModel::Walk: return n * std::pow(4.0, n);
            case TailModel::Eulerian: {
                const double base = std::pow(3.0, n - 2);
                return face == Face::Plaquette ? base : 4.0 * base;
            }
            case TailModel::Geometric: {
                const auto counts = face == Face::Plaquette ? through_plaquette_counts() : through_vertex_counts();
                const int top = max_length_;
                const double a = static_cast<double>(counts[static_cast<std::size_t>(top)]);
                const double b = static_cast<double>(counts[static_cast<std::size_t>(top - 2)]);
                const double ratio = b > 0 ? a / b : 9.0;
                return a * std::pow(ratio, (n - top) / 2.0);
            }
            case TailModel::None: return 0.0;
        }
        return 0.0;
    }

    /// One record per class: "length x,y,A x,y,A ...".
    void write(std::ostream& os) const {
        os << "# contour catalog\n";
        os << "max_length " << max_length_ << "\n";
        os << "classes " << classes_.size() << "\n";
        for (const auto& c : classes_) {
            os << c.length;
            for (const auto& p : c.representative.plaquettes())
                os << ' ' << p.origin.x << ',' << p.origin.y << ',' << (p.axis == Axis::X ? 'X' : 'Y');
            os << '\n';
        }
    }

    static ContourCatalog read(std::istream& is) {
        std::string line;
        int max_length = -1;
        long expected = -1;
        std::vector<Contour> reps;
        while (std::getline(is, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ls(line);
            if (line.rfind("max_length", 0) == 0) {
                std::string key;
                ls >> key >> max_length;
                continue;
            }
            if (line.rfind("classes", 0) == 0) {
                std::string key;
                ls >> key >> expected;
                continue;
            }
            int len = 0;
            ls >> len;
            std::vector<Plaquette> ps;
            std::string tok;
            while (ls >> tok) {
                int x = 0, y = 0;
                char a = 0, c1 = 0, c2 = 0;
                std::istringstream ts(tok);
                if (!(ts >> x >> c1 >> y >> c2 >> a) || c1 != ',' || c2 != ',' || (a != 'X' && a != 'Y'))
                    throw std::runtime_error("malformed plaquette '" + tok + "'");
                ps.push_back({{x, y}, a == 'X' ? Axis::X : Axis::Y});
            }
            auto g = validate_contour(std::move(ps));
            if (g.length() != len) throw std::runtime_error("record length does not match plaquette count");
            reps.push_back(std::move(g));
        }
        if (max_length < 0) throw std::runtime_error("catalog is missing max_length");
        if (expected >= 0 && expected != static_cast<long>(reps.size()))
            throw std::runtime_error("catalog class count mismatch");
        return ContourCatalog(max_length, std::move(reps));
    }

private:
    void build(std::vector<Contour> reps) {
        std::sort(reps.begin(), reps.end(), [](const Contour& a, const Contour& b) {
            if (a.length() != b.length()) return a.length() < b.length();
            return a < b;
        });
        classes_.clear();
        index_.clear();
        rep_lo_ = rep_hi_ = Point{};
        for (auto& r : reps) {
            ContourClass c;
            c.length = r.length();
            for (const auto& p : r.plaquettes()) (p.axis == Axis::X ? c.x_plaquettes : c.y_plaquettes)++;
            c.vertex_count = static_cast<int>(r.vertices().size());
            rep_lo_ = {std::min(rep_lo_.x, r.min_corner().x), std::min(rep_lo_.y, r.min_corner().y)};
            rep_hi_ = {std::max(rep_hi_.x, r.max_corner().x), std::max(rep_hi_.y, r.max_corner().y)};
            c.representative = std::move(r);
            index_.emplace(c.representative, classes_.size());
            classes_.push_back(std::move(c));
        }
    }

    int max_length_ = 0;
    std::vector<ContourClass> classes_;
    std::map<Contour, std::size_t> index_;
    std::vector<long> through_origin_;
    Point rep_lo_, rep_hi_;
};

/// Sum over even n > cap of bound(n) n^power exp(-beta n), with a certified
/// remainder once consecutive-term ratios are below one.  Returns +infinity
/// when the series diverges.
inline double tail_sum(const ContourCatalog& catalog, double beta, TailModel model, Face face, int power = 0) {
    if (model == TailModel::None) return 0.0;
    auto term = [&](int n) {
        return catalog.contour_count_tail(n, model, face) * std::pow(static_cast<double>(n), power) * std::exp(-beta * n);
    };
    // Ratio of consecutive terms is base * ((n + 2) / n)^k with k <= power + 1,
    // decreasing in n towards base.
    double base = 0.0;
    switch (model) {
        case TailModel::Walk: base = 16.0; break;
        case TailModel::Eulerian: base = 9.0; break;
        default: base = term(catalog.max_length() + 4) / std::max(term(catalog.max_length() + 2), 1e-300) *
                        std::exp(2.0 * beta) * std::pow(static_cast<double>(catalog.max_length() + 2) / (catalog.max_length() + 4), power);
    }
    base *= std::exp(-2.0 * beta);
    if (!(base < 1.0)) return INFINITY;
    double sum = 0.0;
    for (int n = catalog.max_length() + 2;; n += 2) {
        const double t = term(n);
        if (!std::isfinite(t)) return INFINITY;
        const double ratio = base * std::pow(static_cast<double>(n + 2) / n, power + 1);
        if (ratio < 1.0 && (t < 1e-17 * sum || n > 20000)) return sum + t / (1.0 - ratio);
        sum += t;
        if (n > 200000) return INFINITY;
    }
}

}  // namespace peierls
