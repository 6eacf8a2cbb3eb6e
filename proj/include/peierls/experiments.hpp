#pragma once

// Replicated experiments comparing samplers against the exact oracle and
// against the closed-form bounds.  Every experiment is a pure function of
// its spec (seed included) and folds replicas by index.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "peierls/branching.hpp"
#include "peierls/clan.hpp"
#include "peierls/exact.hpp"
#include "peierls/forward_dynamics.hpp"
#include "peierls/stats.hpp"

namespace peierls {

using json = nlohmann::ordered_json;

class RegimeError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class ScaleTooLarge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateVariance : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct Verdict {
    std::string check;
    std::string formula;  ///< the bound being compared against
    double observed = 0.0;
    double bound = 0.0;
    double tolerance = 0.0;  ///< statistical allowance added to the bound
    std::string ci = "3 sigma";
    bool pass = false;
};

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct ExperimentRecord {
    std::string name;
    json parameters = json::object();
    json statistics = json::object();
    std::vector<Verdict> verdicts;
    std::vector<Table> tables;

    bool passed() const {
        return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
    }

    Verdict& verdict(std::string check, std::string formula, double observed, double bound, double tolerance, bool pass,
                     std::string ci = "3 sigma") {
        verdicts.push_back({std::move(check), std::move(formula), observed, bound, tolerance, std::move(ci), pass});
        return verdicts.back();
    }

    Table& table(std::string table_name, std::vector<std::string> columns) {
        tables.push_back({std::move(table_name), std::move(columns), {}});
        return tables.back();
    }

    const Table* find_table(const std::string& table_name) const {
        for (const auto& t : tables)
            if (t.name == table_name) return &t;
        return nullptr;
    }

    json to_json() const {
        json j;
        j["name"] = name;
        j["parameters"] = parameters;
        j["statistics"] = statistics;
        json vs = json::array();
        for (const auto& v : verdicts)
            vs.push_back({{"check", v.check}, {"formula", v.formula}, {"observed", v.observed}, {"bound", v.bound},
                          {"tolerance", v.tolerance}, {"ci", v.ci}, {"pass", v.pass}});
        j["verdicts"] = vs;
        json ts = json::object();
        for (const auto& t : tables) ts[t.name] = {{"columns", t.columns}, {"rows", t.rows}};
        j["tables"] = ts;
        j["passed"] = passed();
        return j;
    }
};

/// Comma-separated table with a header line; doubles printed round-trip exact.
inline void write_csv(std::ostream& os, const Table& t) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    os.precision(17);
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
        os << '\n';
    }
}

namespace detail {

inline std::uint64_t experiment_seed(std::uint64_t seed, std::int64_t tag, std::int64_t sub = 0) {
    return stream_key({static_cast<std::int64_t>(StreamDomain::Experiment), static_cast<std::int64_t>(seed), tag, sub});
}

inline std::vector<Plaquette> plaquettes_of(const Volume& v) { return {v.plaquettes().begin(), v.plaquettes().end()}; }

/// Contours of c whose support meets the window.
inline Configuration restrict_to(const Configuration& c, const Window& w, const InstanceGeometry& geo) {
    Configuration out;
    for (const auto& g : c)
        if (basis_meets_window(geo, g, w)) out.push_back(g);
    return out;
}

template <class Map>
json histogram_json(const Map& m) {
    json j = json::array();
    for (const auto& [k, v] : m) j.push_back(v);
    return j;
}

}  // namespace detail

/// Bound report used by experiments: the certified one when it is
/// subcritical, otherwise the report of the capped gas that is simulated.
inline BoundReport working_report(const ContourCatalog& catalog, double beta, TailModel model = TailModel::Eulerian) {
    BoundCalculator certified(catalog, model);
    auto r = make_bound_report(certified, beta);
    if (r.subcritical) return r;
    BoundCalculator capped(catalog, TailModel::None);
    auto t = make_bound_report(capped, beta);
    if (!t.subcritical) throw RegimeError("beta is not above the beta* of the capped gas");
    return t;
}

inline json report_json(const BoundReport& r) {
    return {{"beta", r.beta},
            {"max_length", r.max_length},
            {"tail_model", to_string(r.model)},
            {"origin", r.origin == OriginConvention::Plaquette ? "plaquette" : "site"},
            {"certified", r.certified},
            {"alpha0", r.alpha0.value},
            {"alpha0_tail", r.alpha0.tail},
            {"alpha_upper", r.alpha_upper.value},
            {"alpha_upper_tail", r.alpha_upper.tail},
            {"alpha_lower", r.alpha_lower},
            {"alpha_truncated", r.alpha_truncated},
            {"beta_star_lo", r.beta_star.lo},
            {"beta_star_hi", r.beta_star.hi},
            {"beta_star_truncated_lo", r.beta_star_truncated.lo},
            {"beta_star_truncated_hi", r.beta_star_truncated.hi},
            {"subcritical", r.subcritical},
            {"rho", r.rho},
            {"beta_tilde", r.beta_tilde},
            {"M2", r.M2},
            {"M3", r.M3},
            {"h_max", r.h_max}};
}

// ---------------------------------------------------------------------------
// Forward sampler against the exact finite-volume law.

struct GibbsSpec {
    Point corner{0, 0};
    int width = 4;
    int height = 3;
    double beta = 1.0;
    int max_length = 6;
    long replicas = 100000;
    std::uint64_t seed = 1;
    double tolerance = 0.02;
};

inline std::map<Configuration, long> forward_histogram(const ContourCatalog& catalog, const Volume& volume, double beta,
                                                       int max_length, long replicas, std::uint64_t seed) {
    auto states = run_replicas<Configuration>(replicas, [&](long r) {
        FieldParams fp;
        fp.beta = beta;
        fp.max_length = max_length;
        fp.seed = replica_seed(seed, r);
        FieldRealization field(catalog, fp);
        return stationary_forward_sample(volume, field).state;
    }, 1);
    std::map<Configuration, long> h;
    for (auto& s : states) ++h[s];
    return h;
}

inline ExperimentRecord gibbs_experiment(const ContourCatalog& catalog, const GibbsSpec& spec) {
    ExperimentRecord rec;
    rec.name = "gibbs";
    rec.parameters = {{"corner", {spec.corner.x, spec.corner.y}}, {"width", spec.width}, {"height", spec.height},
                      {"beta", spec.beta}, {"max_length", spec.max_length}, {"replicas", spec.replicas},
                      {"seed", spec.seed}, {"tolerance", spec.tolerance}};
    const auto volume = Volume::box(spec.corner, spec.width, spec.height);
    const auto exact = exact_gibbs(volume, catalog, spec.beta, spec.max_length);
    const auto hist = forward_histogram(catalog, volume, spec.beta, spec.max_length, spec.replicas,
                                        detail::experiment_seed(spec.seed, 1));
    const auto tv = tv_distance(hist, exact.as_map());
    rec.statistics = {{"admissible_contours", exact.contours.size()}, {"support", exact.support.size()},
                      {"Z", exact.Z}, {"tv", tv.tv}, {"tv_half_width", tv.half_width},
                      {"detailed_balance_defect", detailed_balance_defect(exact)},
                      {"p_empty_exact", exact.weights[0]},
                      {"p_empty_forward", hist.count({}) ? static_cast<double>(hist.at({})) / spec.replicas : 0.0}};
    auto& t = rec.table("occupation", {"contour", "length", "exact", "forward"});
    for (std::size_t i = 0; i < exact.contours.size(); ++i) {
        long hits = 0;
        for (const auto& [c, k] : hist)
            if (std::binary_search(c.begin(), c.end(), exact.contours[i])) hits += k;
        t.rows.push_back({static_cast<double>(i), static_cast<double>(exact.lengths[i]), exact.occupation(exact.contours[i]),
                          static_cast<double>(hits) / spec.replicas});
    }
    rec.verdict("tv(forward, exact)", "tv < tolerance", tv.tv, spec.tolerance, 0.0, tv.tv < spec.tolerance, "point estimate");
    return rec;
}

// ---------------------------------------------------------------------------
// Perfect sampler on an inner window against forward samples of the volume.

struct SpaceSpec {
    Point corner{0, 0};
    int width = 4;
    int height = 3;
    Point window_corner{1, 1};
    int window_width = 2;
    int window_height = 1;
    double beta = 1.0;
    int max_length = 6;
    long replicas = 100000;
    std::uint64_t seed = 1;
    double tolerance = 0.02;
};

inline ExperimentRecord space_convergence_experiment(const ContourCatalog& catalog, const SpaceSpec& spec) {
    ExperimentRecord rec;
    rec.name = "space_convergence";
    rec.parameters = {{"corner", {spec.corner.x, spec.corner.y}}, {"width", spec.width}, {"height", spec.height},
                      {"window_corner", {spec.window_corner.x, spec.window_corner.y}},
                      {"window_width", spec.window_width}, {"window_height", spec.window_height},
                      {"beta", spec.beta}, {"max_length", spec.max_length}, {"replicas", spec.replicas},
                      {"seed", spec.seed}, {"tolerance", spec.tolerance}};
    const auto volume = Volume::box(spec.corner, spec.width, spec.height);
    const auto window = Volume::box(spec.window_corner, spec.window_width, spec.window_height);
    for (const auto& p : window.plaquettes())
        if (!volume.contains(p)) throw std::invalid_argument("window must lie inside the volume");
    InstanceGeometry geo(catalog);

    // The simulated gas has contours up to max_length; its own constants apply.
    const ContourCatalog capped(spec.max_length);
    BoundCalculator calc(capped, TailModel::None);
    const auto report = make_bound_report(calc, spec.beta);
    if (!report.subcritical) throw RegimeError("beta is not above beta* of the capped gas");
    BoundFunctions bounds(calc, report);
    std::vector<double> distances;
    for (const auto& p : window.plaquettes()) distances.push_back(volume.distance_to_complement(p));
    const double bound = bounds.space_conv(distances);

    const auto wptr = make_window(detail::plaquettes_of(window));
    const auto perfect = run_replicas<Configuration>(spec.replicas, [&](long r) {
        FieldParams fp;
        fp.beta = spec.beta;
        fp.max_length = spec.max_length;
        fp.seed = replica_seed(detail::experiment_seed(spec.seed, 2), r);
        FieldRealization field(catalog, fp);
        return detail::restrict_to(perfect_sample(wptr, field).state, *wptr, geo);
    }, 1);
    std::map<Configuration, long> hp, hf;
    for (const auto& c : perfect) ++hp[c];
    for (const auto& [c, k] : forward_histogram(catalog, volume, spec.beta, spec.max_length, spec.replicas,
                                                detail::experiment_seed(spec.seed, 3)))
        hf[detail::restrict_to(c, *wptr, geo)] += k;

    std::map<Configuration, double> pp, pf;
    for (const auto& [c, k] : hp) pp[c] = static_cast<double>(k) / spec.replicas;
    for (const auto& [c, k] : hf) pf[c] = static_cast<double>(k) / spec.replicas;
    const double tv = tv_distance(pp, pf);

    const auto exact = exact_gibbs(volume, catalog, spec.beta, spec.max_length);
    const auto exact_window = exact.marginal([&](const Instance& g) { return detail::basis_meets_window(geo, g, *wptr); });
    rec.statistics = {{"tv_perfect_forward", tv},
                      {"tv_perfect_exact_volume", tv_distance(pp, exact_window)},
                      {"tv_forward_exact_volume", tv_distance(pf, exact_window)},
                      {"space_bound", bound},
                      {"min_distance_to_complement", *std::min_element(distances.begin(), distances.end())},
                      {"bounds", report_json(report)}};
    auto& t = rec.table("window_law", {"configuration_index", "contours", "perfect", "forward", "exact_volume"});
    std::set<Configuration> keys;
    for (const auto& [c, p] : pp) keys.insert(c);
    for (const auto& [c, p] : pf) keys.insert(c);
    for (const auto& [c, p] : exact_window) keys.insert(c);
    long idx = 0;
    for (const auto& c : keys) {
        auto get = [&](const std::map<Configuration, double>& m) { auto it = m.find(c); return it == m.end() ? 0.0 : it->second; };
        t.rows.push_back({static_cast<double>(idx++), static_cast<double>(c.size()), get(pp), get(pf), get(exact_window)});
    }
    rec.verdict("tv(perfect window law, forward window law)", "tolerance + space convergence bound", tv, bound,
                spec.tolerance, tv < spec.tolerance + bound, "point estimate");
    return rec;
}

// ---------------------------------------------------------------------------
// Occupation probabilities against exp(-beta |gamma|).

struct DensitySpec {
    std::vector<double> betas{1.0, 1.5, 2.0};
    int max_class_length = 8;
    long replicas = 10000;
    std::uint64_t seed = 1;
};

inline ExperimentRecord density_check(const ContourCatalog& catalog, const DensitySpec& spec) {
    ExperimentRecord rec;
    rec.name = "density";
    rec.parameters = {{"betas", spec.betas}, {"max_class_length", spec.max_class_length}, {"replicas", spec.replicas},
                      {"seed", spec.seed}, {"max_length", catalog.max_length()}};
    std::vector<std::uint32_t> classes;
    for (std::uint32_t c = 0; c < catalog.size(); ++c)
        if (catalog.at(c).length <= spec.max_class_length) classes.push_back(c);
    std::vector<WindowPtr> windows;
    for (auto c : classes) {
        const auto ps = catalog.at(c).representative.plaquettes();
        windows.push_back(make_window({ps.begin(), ps.end()}));
    }
    auto& t = rec.table("occupation", {"beta", "class", "length", "hits", "replicas", "p_hat", "bound", "ratio"});
    for (std::size_t bi = 0; bi < spec.betas.size(); ++bi) {
        const double beta = spec.betas[bi];
        const auto tr = BoundCalculator(catalog, TailModel::None).beta_star();
        if (!(beta > tr.hi)) throw RegimeError("beta is not above beta* of the capped gas");
        const auto hits = run_replicas<std::vector<char>>(spec.replicas, [&](long r) {
            FieldParams fp;
            fp.beta = beta;
            fp.seed = replica_seed(detail::experiment_seed(spec.seed, 4, static_cast<std::int64_t>(bi)), r);
            FieldRealization field(catalog, fp);
            std::vector<char> out(classes.size(), 0);
            for (std::size_t k = 0; k < classes.size(); ++k) {
                const auto s = perfect_sample(windows[k], field);
                out[k] = std::binary_search(s.state.begin(), s.state.end(), Instance{classes[k], {0, 0}});
            }
            return out;
        }, 1);
        for (std::size_t k = 0; k < classes.size(); ++k) {
            long h = 0;
            for (const auto& v : hits) h += v[k];
            const int len = catalog.at(classes[k]).length;
            const double bound = std::exp(-beta * len);
            const double p = static_cast<double>(h) / spec.replicas;
            const double sigma = std::sqrt(bound * (1.0 - bound) / spec.replicas);
            t.rows.push_back({beta, static_cast<double>(classes[k]), static_cast<double>(len), static_cast<double>(h),
                              static_cast<double>(spec.replicas), p, bound, p / bound});
            // With n * bound well below one the normal allowance is less than a
            // single count, so the verdict uses the exact binomial tail at the
            // same level.
            const double tail = binomial_upper_tail(spec.replicas, bound, h);
            rec.verdict("occupation beta=" + std::to_string(beta) + " class=" + std::to_string(classes[k]),
                        "p <= exp(-beta |gamma|)", p, bound, 3.0 * sigma, p <= bound + 3.0 * sigma || tail >= kThreeSigmaTail,
                        "3 sigma, exact binomial tail");
        }
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Time-length and space-width of single-plaquette clans.

struct ClanTailSpec {
    std::vector<double> betas{1.5, 2.0};
    std::vector<double> times{1.0, 2.0, 4.0};
    long replicas = 10000;
    std::uint64_t seed = 1;
};

inline ExperimentRecord clan_tail_experiment(const ContourCatalog& catalog, const ClanTailSpec& spec) {
    ExperimentRecord rec;
    rec.name = "clan_tails";
    rec.parameters = {{"betas", spec.betas}, {"times", spec.times}, {"replicas", spec.replicas}, {"seed", spec.seed},
                      {"max_length", catalog.max_length()}, {"window", "plaquette (0,0) X"}};
    const auto window = make_window({Plaquette{{0, 0}, Axis::X}});
    auto& t = rec.table("clan_tails", {"beta", "mean_sw", "se_sw", "sw_bound", "mean_sw_sites", "mean_size", "t", "p_tl", "se_tl", "tl_bound"});
    json per_beta = json::array();
    for (std::size_t bi = 0; bi < spec.betas.size(); ++bi) {
        const double beta = spec.betas[bi];
        const auto report = working_report(catalog, beta);
        BoundCalculator calc(catalog, report.model);
        BoundFunctions bounds(calc, report);
        const auto stats = run_replicas<std::array<double, 4>>(spec.replicas, [&](long r) {
            FieldParams fp;
            fp.beta = beta;
            fp.seed = replica_seed(detail::experiment_seed(spec.seed, 5, static_cast<std::int64_t>(bi)), r);
            FieldRealization field(catalog, fp);
            const auto clan = explore_clan(window, field);
            const auto s = clan_statistics(clan, field.geometry());
            const auto sites = clan_statistics(clan, field.geometry(), WidthMode::Sites);
            return std::array<double, 4>{s.time_length, static_cast<double>(s.space_width),
                                         static_cast<double>(sites.space_width), static_cast<double>(s.size)};
        }, 1);
        Moments sw, sws, size;
        for (const auto& s : stats) {
            sw.add(s[1]);
            sws.add(s[2]);
            size.add(s[3]);
        }
        const auto sw_sum = sw.summary();
        rec.verdict("mean space width beta=" + std::to_string(beta), "alpha0 / (1 - alpha)", sw_sum.mean, bounds.sw_mean(),
                    3.0 * sw_sum.se(), sw_sum.mean <= bounds.sw_mean() + 3.0 * sw_sum.se());
        for (double tt : spec.times) {
            Proportion pr;
            for (const auto& s : stats) {
                pr.hits += s[0] > tt;
                ++pr.n;
            }
            const double b = bounds.tl_tail(tt);
            const double sigma = std::sqrt(std::max(b * (1.0 - b), pr.p() * (1.0 - pr.p())) / static_cast<double>(pr.n));
            t.rows.push_back({beta, sw_sum.mean, sw_sum.se(), bounds.sw_mean(), sws.summary().mean, size.summary().mean, tt,
                              pr.p(), pr.se(), b});
            rec.verdict("P(TL > " + std::to_string(tt) + ") beta=" + std::to_string(beta), "alpha0 exp(-(1 - alpha) t)", pr.p(), b,
                        3.0 * sigma, pr.p() <= b + 3.0 * sigma);
        }
        per_beta.push_back(report_json(report));
    }
    rec.statistics["bounds"] = per_beta;
    return rec;
}

// ---------------------------------------------------------------------------
// Branching domination.

struct DominationSpec {
    std::vector<double> betas{1.5, 2.0};
    int window_side = 3;
    long clans = 1000;
    long branching_runs = 10000;
    int max_generation = 3;
    std::uint64_t seed = 1;
};

inline ExperimentRecord domination_experiment(const ContourCatalog& catalog, const DominationSpec& spec) {
    ExperimentRecord rec;
    rec.name = "domination";
    rec.parameters = {{"betas", spec.betas}, {"window_side", spec.window_side}, {"clans", spec.clans},
                      {"branching_runs", spec.branching_runs}, {"max_generation", spec.max_generation},
                      {"seed", spec.seed}, {"max_length", catalog.max_length()}};
    const auto box = Volume::box({0, 0}, spec.window_side, spec.window_side);
    const auto window = make_window(detail::plaquettes_of(box));
    auto& t = rec.table("generations", {"beta", "n", "clan_mean", "branching_mean", "mass_mean", "mass_se", "mass_exact", "mass_bound"});
    for (std::size_t bi = 0; bi < spec.betas.size(); ++bi) {
        const double beta = spec.betas[bi];
        const auto report = working_report(catalog, beta);
        BoundCalculator calc(catalog, report.model);
        struct Out {
            bool contained = true;
            std::vector<long> clan, branching;
            long replacements = 0;
        };
        const auto outs = run_replicas<Out>(spec.clans, [&](long r) {
            FieldParams fp;
            fp.beta = beta;
            fp.seed = replica_seed(detail::experiment_seed(spec.seed, 6, static_cast<std::int64_t>(bi)), r);
            FieldRealization field(catalog, fp);
            const auto clan = explore_clan(window, field);
            const auto d = coupled_domination_check(clan, field, calc, fp.seed);
            return Out{d.contained, d.clan_sizes, d.branching_sizes, d.replacements};
        }, 1);
        long contained = 0, replacements = 0, nonempty = 0;
        std::vector<double> clan_mean, branch_mean;
        for (const auto& o : outs) {
            contained += o.contained;
            replacements += o.replacements;
            nonempty += !o.clan.empty();
            if (clan_mean.size() < o.branching.size()) {
                clan_mean.resize(o.branching.size(), 0.0);
                branch_mean.resize(o.branching.size(), 0.0);
            }
            for (std::size_t g = 0; g < o.clan.size(); ++g) clan_mean[g] += static_cast<double>(o.clan[g]) / spec.clans;
            for (std::size_t g = 0; g < o.branching.size(); ++g) branch_mean[g] += static_cast<double>(o.branching[g]) / spec.clans;
        }
        rec.verdict("containment beta=" + std::to_string(beta), "clan subset of branching superset", static_cast<double>(contained),
                    static_cast<double>(spec.clans), 0.0, contained == spec.clans, "exact");

        // Lemma: weighted masses of the class-level branching from a unit square.
        const std::uint32_t root = 0;
        const int root_len = catalog.at(root).length;
        BranchingSimulator sim(calc, beta);
        std::vector<Moments> mass(static_cast<std::size_t>(spec.max_generation) + 1);
        const auto runs = run_replicas<BranchingRun>(spec.branching_runs, [&](long r) {
            return sim.run(root, spec.max_generation, replica_seed(detail::experiment_seed(spec.seed, 7, static_cast<std::int64_t>(bi)), r));
        }, 1);
        for (const auto& run : runs)
            for (int n = 0; n <= spec.max_generation; ++n)
                mass[static_cast<std::size_t>(n)].add(n < static_cast<int>(run.masses.size()) ? run.masses[static_cast<std::size_t>(n)] : 0.0);
        const auto exact = calc.weighted_mass_powers(root, spec.max_generation, beta);
        const double alpha = report.alpha_upper.value;
        for (int n = 0; n <= spec.max_generation; ++n) {
            const auto s = mass[static_cast<std::size_t>(n)].summary();
            const double bound = root_len * std::pow(alpha, n);
            const auto g = static_cast<std::size_t>(n);
            t.rows.push_back({beta, static_cast<double>(n), g < clan_mean.size() ? clan_mean[g] : 0.0,
                              g < branch_mean.size() ? branch_mean[g] : 0.0, s.mean, s.se(), exact[g], bound});
            rec.verdict("weighted mass n=" + std::to_string(n) + " beta=" + std::to_string(beta), "|gamma| alpha^n", s.mean, bound,
                        3.0 * s.se(), s.mean <= bound + 3.0 * s.se());
            // Nonzero masses are at least 4, so E[X^2] >= 4 E[X]; this floors the
            // standard error when few runs reach generation n.
            const double floor_se = std::sqrt(std::max(0.0, 4.0 * exact[g] - exact[g] * exact[g]) / spec.branching_runs);
            const double tol = 3.0 * std::max(s.se(), floor_se);
            rec.verdict("mass vs matrix power n=" + std::to_string(n) + " beta=" + std::to_string(beta), "sum |theta| m^n",
                        s.mean, exact[g], tol, std::abs(s.mean - exact[g]) <= tol + 1e-12);
        }
        rec.statistics["beta=" + std::to_string(beta)] = {{"contained", contained}, {"nonempty_clans", nonempty},
                                                         {"replacements", replacements}, {"bounds", report_json(report)}};
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Mixing: incompatibility of clans of two separated windows.

struct MixingSpec {
    double beta = 1.0;
    int window_side = 4;
    std::vector<int> separations{2, 4, 6, 8, 10, 12};
    long pairs = 10000;
    std::uint64_t seed = 1;
    long min_hits = 3;  ///< separations with fewer hits are left out of the fit
};

inline ExperimentRecord mixing_experiment(const ContourCatalog& catalog, const MixingSpec& spec) {
    ExperimentRecord rec;
    rec.name = "mixing";
    rec.parameters = {{"beta", spec.beta}, {"window_side", spec.window_side}, {"separations", spec.separations},
                      {"pairs", spec.pairs}, {"seed", spec.seed}, {"min_hits", spec.min_hits},
                      {"max_length", catalog.max_length()}};
    const auto report = working_report(catalog, spec.beta);
    const auto w1 = make_window(detail::plaquettes_of(Volume::box({0, 0}, spec.window_side, spec.window_side)));
    auto& t = rec.table("mixing", {"separation", "hits", "pairs", "p_hat", "se"});
    std::vector<double> xs, ys, ws;
    for (std::size_t di = 0; di < spec.separations.size(); ++di) {
        const int d = spec.separations[di];
        const auto w2 = make_window(detail::plaquettes_of(Volume::box({spec.window_side + d, 0}, spec.window_side, spec.window_side)));
        const auto hits = run_replicas<char>(spec.pairs, [&](long r) {
            FieldParams f1, f2;
            f1.beta = f2.beta = spec.beta;
            f1.seed = replica_seed(detail::experiment_seed(spec.seed, 8, static_cast<std::int64_t>(2 * di)), r);
            f2.seed = replica_seed(detail::experiment_seed(spec.seed, 8, static_cast<std::int64_t>(2 * di + 1)), r);
            FieldRealization a(catalog, f1), b(catalog, f2);
            const auto ca = explore_clan(w1, a);
            if (ca.empty()) return char{0};
            const auto cb = explore_clan(w2, b);
            return static_cast<char>(clans_incompatible(ca, cb, a.geometry()));
        }, 1);
        Proportion pr;
        for (char h : hits) pr.hits += h;
        pr.n = spec.pairs;
        t.rows.push_back({static_cast<double>(d), static_cast<double>(pr.hits), static_cast<double>(pr.n), pr.p(), pr.se()});
        if (pr.hits >= spec.min_hits) {
            xs.push_back(d);
            ys.push_back(std::log(pr.p()));
            ws.push_back(static_cast<double>(pr.hits));  // var(log p_hat) ~ 1 / hits
        }
    }
    rec.statistics["bounds"] = report_json(report);
    if (xs.size() < 2) {
        rec.statistics["fit"] = "insufficient separations with hits";
        rec.verdict("log-linear fit", "decay rate >= M3", NAN, report.M3, 0.0, false);
        return rec;
    }
    const auto fit = weighted_fit(xs, ys, ws);
    rec.statistics["fit"] = {{"slope", fit.slope}, {"slope_se", fit.slope_se}, {"intercept", fit.intercept}, {"points", fit.points}};
    rec.verdict("fitted slope negative", "slope < 0", fit.slope, 0.0, 0.0, fit.slope < 0.0, "point estimate");
    rec.verdict("fitted decay rate", "rate >= M3", -fit.slope, report.M3, 3.0 * fit.slope_se, -fit.slope >= report.M3 - 3.0 * fit.slope_se);
    return rec;
}

// ---------------------------------------------------------------------------
// Relaxation of the forward dynamics from a packed and an empty start.

struct TimeSpec {
    Point corner{0, 0};
    int width = 4;
    int height = 3;
    double beta = 1.5;
    int max_length = 6;
    long replicas = 20000;
    int grid = 40;  ///< time points on [0, 10 / rho]
    std::uint64_t seed = 1;
};

inline ExperimentRecord time_convergence_experiment(const ContourCatalog& catalog, const TimeSpec& spec) {
    ExperimentRecord rec;
    rec.name = "time_convergence";
    rec.parameters = {{"corner", {spec.corner.x, spec.corner.y}}, {"width", spec.width}, {"height", spec.height},
                      {"beta", spec.beta}, {"max_length", spec.max_length}, {"replicas", spec.replicas},
                      {"grid", spec.grid}, {"seed", spec.seed}};
    const auto report = working_report(catalog, spec.beta);
    BoundCalculator calc(catalog, report.model);
    BoundFunctions bounds(calc, report);
    const auto volume = Volume::box(spec.corner, spec.width, spec.height);
    const auto exact = exact_gibbs(volume, catalog, spec.beta, spec.max_length);
    const auto packing = greedy_packing(volume, catalog, spec.max_length);
    if (packing.empty()) throw std::invalid_argument("volume admits no contour");
    const Instance target = packing.front();
    const double mu_f = exact.occupation(target);
    const double horizon = 10.0 / report.rho;
    std::vector<double> grid;
    for (int i = 0; i <= spec.grid; ++i) grid.push_back(horizon * i / spec.grid);

    const std::vector<Configuration> starts{packing, {}};
    std::vector<std::vector<double>> means(starts.size(), std::vector<double>(grid.size(), 0.0));
    for (std::size_t si = 0; si < starts.size(); ++si) {
        const auto occ = run_replicas<std::vector<char>>(spec.replicas, [&](long r) {
            FieldParams fp;
            fp.beta = spec.beta;
            fp.max_length = spec.max_length;
            fp.seed = replica_seed(detail::experiment_seed(spec.seed, 9, static_cast<std::int64_t>(si)), r);
            FieldRealization field(catalog, fp);
            const auto traj = run_forward(volume, starts[si], horizon, field);
            std::vector<char> out(grid.size(), 0);
            bool on = false;
            std::size_t e = 0;
            for (std::size_t gi = 0; gi < grid.size(); ++gi) {
                while (e < traj.events.size() && traj.events[e].time <= grid[gi]) {
                    const auto& ev = traj.events[e++];
                    if (ev.kept && ev.contour == target) on = ev.kind == TrajectoryEvent::Kind::Birth;
                }
                out[gi] = on;
            }
            return out;
        }, 1);
        for (const auto& o : occ)
            for (std::size_t gi = 0; gi < grid.size(); ++gi) means[si][gi] += o[gi];
        for (auto& m : means[si]) m /= static_cast<double>(spec.replicas);
    }

    // Sites of the support of f: endpoints of the target contour.
    const double supp = static_cast<double>(catalog.at(target.cls).representative.vertices().size());
    auto& t = rec.table("discrepancy", {"t", "packed", "empty", "exact", "discrepancy", "se", "bound"});
    std::vector<double> xs, ys, ws;
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        double worst = 0.0, se = 0.0;
        for (std::size_t si = 0; si < starts.size(); ++si) {
            const double d = std::abs(means[si][gi] - mu_f);
            if (d >= worst) {
                worst = d;
                const double p = std::clamp(means[si][gi], 1.0 / spec.replicas, 1.0 - 1.0 / spec.replicas);
                se = std::sqrt(p * (1.0 - p) / static_cast<double>(spec.replicas));
            }
        }
        t.rows.push_back({grid[gi], means[0][gi], means[1][gi], mu_f, worst, se, bounds.time_conv(grid[gi], supp)});
        if (worst > 3.0 * se) {
            xs.push_back(grid[gi]);
            ys.push_back(std::log(worst));
            ws.push_back((worst / se) * (worst / se));
        }
    }
    rec.statistics = {{"target_class", target.cls}, {"mu_f", mu_f}, {"horizon", horizon}, {"bounds", report_json(report)}};
    rec.verdict("discrepancy at t=0", "<= 2 ||f||", t.rows.front()[4], 2.0, 0.0, t.rows.front()[4] <= 2.0, "exact");
    if (xs.size() < 2) {
        rec.verdict("log-discrepancy slope", "slope <= -rho", NAN, -report.rho, 0.0, false);
        return rec;
    }
    const auto fit = weighted_fit(xs, ys, ws);
    rec.statistics["fit"] = {{"slope", fit.slope}, {"slope_se", fit.slope_se}, {"points", fit.points}};
    rec.verdict("log-discrepancy slope", "slope <= -rho", fit.slope, -report.rho, 3.0 * fit.slope_se,
                fit.slope <= -report.rho + 3.0 * fit.slope_se);
    return rec;
}

/// Time and space convergence in one record.
inline ExperimentRecord convergence_experiments(const ContourCatalog& catalog, const TimeSpec& time_spec, const SpaceSpec& space_spec) {
    auto a = time_convergence_experiment(catalog, time_spec);
    auto b = space_convergence_experiment(catalog, space_spec);
    ExperimentRecord rec;
    rec.name = "convergence";
    rec.parameters = {{"time", a.parameters}, {"space", b.parameters}};
    rec.statistics = {{"time", a.statistics}, {"space", b.statistics}};
    for (auto* r : {&a, &b}) {
        rec.verdicts.insert(rec.verdicts.end(), r->verdicts.begin(), r->verdicts.end());
        rec.tables.insert(rec.tables.end(), r->tables.begin(), r->tables.end());
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Counts of rescaled translates against Poisson laws.

struct PoissonSpec {
    int j = 4;
    std::vector<double> betas{1.5, 2.0, 2.5};
    double v = 1.0;  ///< V = [0, v]^2
    long replicas = 10000;
    int bootstrap = 200;
    std::uint64_t seed = 1;
    long max_translates = 4'000'000;
    /// Optional per-beta replica counts; empty means `replicas` for every beta.
    std::vector<long> replicas_per_beta;
};

/// Integer points x with [(x - 1/2) / a, (x + 1/2) / a]^2 inside [0, v]^2,
/// as the range [1, floor(v a - 1/2)] per axis.
inline int scaled_side(double v, double a) { return std::max(0, static_cast<int>(std::floor(v * a - 0.5 + 1e-12))); }

inline ExperimentRecord poisson_experiment(const ContourCatalog& catalog, const PoissonSpec& spec) {
    ExperimentRecord rec;
    rec.name = "poisson";
    rec.parameters = {{"j", spec.j}, {"betas", spec.betas}, {"v", spec.v}, {"replicas", spec.replicas},
                      {"replicas_per_beta", spec.replicas_per_beta}, {"bootstrap", spec.bootstrap}, {"seed", spec.seed}, {"max_length", catalog.max_length()}};
    if (spec.j > catalog.max_length()) throw std::invalid_argument("j exceeds the catalog cap");
    std::vector<std::uint32_t> classes;
    for (std::uint32_t c = 0; c < catalog.size(); ++c)
        if (catalog.at(c).length == spec.j) classes.push_back(c);
    if (classes.empty()) throw std::invalid_argument("no classes of that length");
    if (!spec.replicas_per_beta.empty() && spec.replicas_per_beta.size() != spec.betas.size())
        throw std::invalid_argument("replicas_per_beta must match betas");

    auto& t = rec.table("poisson", {"beta", "class", "translates", "lambda", "mean", "tv", "tv_sd"});
    std::map<std::uint32_t, std::vector<std::pair<double, double>>> tv_by_class;
    for (std::size_t bi = 0; bi < spec.betas.size(); ++bi) {
        const double beta = spec.betas[bi];
        const auto tr = BoundCalculator(catalog, TailModel::None).beta_star();
        if (!(beta > tr.hi)) throw RegimeError("beta is not above beta* of the capped gas");
        const double a = std::exp(beta * spec.j / 2.0);
        const int side = scaled_side(spec.v, a);
        const long translates = static_cast<long>(side) * side;
        if (translates > spec.max_translates) throw ScaleTooLarge("rescaled index set is too large");
        const double lambda = static_cast<double>(translates) * std::exp(-beta * spec.j);
        std::set<Plaquette> ps;
        for (auto c : classes)
            for (int x = 1; x <= side; ++x)
                for (int y = 1; y <= side; ++y)
                    for (const auto& p : catalog.at(c).representative.plaquettes()) ps.insert(p.translated({x, y}));
        const auto window = make_window({ps.begin(), ps.end()});
        const long n = spec.replicas_per_beta.empty() ? spec.replicas : spec.replicas_per_beta[bi];
        // Counts kept as bytes, filled in chunks, so 1e7 replicas stay small.
        const std::size_t K = classes.size();
        std::vector<std::uint8_t> counts(static_cast<std::size_t>(n) * K);
        auto count = [&](long r, std::size_t k) { return static_cast<int>(counts[static_cast<std::size_t>(r) * K + k]); };
        constexpr long kChunk = 1L << 20;
        for (long from = 0; from < n; from += kChunk) {
            const long len = std::min(kChunk, n - from);
            const auto chunk = run_replicas<std::vector<int>>(len, [&](long i) {
                FieldParams fp;
                fp.beta = beta;
                fp.seed = replica_seed(detail::experiment_seed(spec.seed, 10, static_cast<std::int64_t>(bi)), from + i);
                FieldRealization field(catalog, fp);
                const auto s = perfect_sample(window, field);
                std::vector<int> m(K, 0);
                for (const auto& g : s.state)
                    for (std::size_t k = 0; k < K; ++k)
                        if (g.cls == classes[k] && g.shift.x >= 1 && g.shift.x <= side && g.shift.y >= 1 && g.shift.y <= side) ++m[k];
                return m;
            }, 1);
            for (long i = 0; i < len; ++i)
                for (std::size_t k = 0; k < K; ++k) {
                    if (chunk[static_cast<std::size_t>(i)][k] > 255) throw ScaleTooLarge("count exceeds 255");
                    counts[static_cast<std::size_t>(from + i) * K + k] = static_cast<std::uint8_t>(chunk[static_cast<std::size_t>(i)][k]);
                }
        }
        StreamRng boot(detail::experiment_seed(spec.seed, 11, static_cast<std::int64_t>(bi)));
        for (std::size_t k = 0; k < classes.size(); ++k) {
            std::vector<long> hist;
            Moments mean;
            for (long r = 0; r < n; ++r) {
                const auto x = static_cast<std::size_t>(count(r, k));
                if (hist.size() <= x) hist.resize(x + 1, 0);
                ++hist[x];
                mean.add(static_cast<double>(x));
            }
            const double tv = tv_to_poisson(hist, lambda);
            // Multinomial bootstrap of the histogram.
            Moments tvs;
            for (int b = 0; b < spec.bootstrap; ++b) {
                std::vector<long> h(hist.size(), 0);
                long left = n;
                double mass_left = 1.0;
                for (std::size_t i = 0; i < hist.size() && left > 0; ++i) {
                    const double p = static_cast<double>(hist[i]) / n;
                    const double q = mass_left > 0 ? std::min(1.0, p / mass_left) : 1.0;
                    std::binomial_distribution<long> bin(left, q);
                    h[i] = i + 1 == hist.size() ? left : bin(boot);
                    left -= h[i];
                    mass_left -= p;
                }
                tvs.add(tv_to_poisson(h, lambda));
            }
            const double sd = tvs.summary().sd();
            t.rows.push_back({beta, static_cast<double>(classes[k]), static_cast<double>(translates), lambda, mean.summary().mean, tv, sd});
            tv_by_class[classes[k]].push_back({tv, sd});
        }
        // Independence across classes.
        for (std::size_t k1 = 0; k1 < classes.size(); ++k1)
            for (std::size_t k2 = k1 + 1; k2 < classes.size(); ++k2) {
                Moments m1, m2;
                for (long r = 0; r < n; ++r) {
                    m1.add(count(r, k1));
                    m2.add(count(r, k2));
                }
                const double mu1 = m1.summary().mean, mu2 = m2.summary().mean;
                Moments prod;
                for (long r = 0; r < n; ++r) prod.add((count(r, k1) - mu1) * (count(r, k2) - mu2));
                const auto s = prod.summary();
                rec.verdict("covariance classes " + std::to_string(classes[k1]) + "," + std::to_string(classes[k2]) +
                                " beta=" + std::to_string(beta),
                            "cov = 0", s.mean, 0.0, 3.0 * s.se(), std::abs(s.mean) <= 3.0 * s.se());
            }
    }
    for (const auto& [cls, series] : tv_by_class)
        for (std::size_t i = 0; i + 1 < series.size(); ++i) {
            const double diff = series[i].first - series[i + 1].first;
            const double sd = std::hypot(series[i].second, series[i + 1].second);
            rec.verdict("tv decreases class " + std::to_string(cls) + " beta " + std::to_string(spec.betas[i]) + " -> " +
                            std::to_string(spec.betas[i + 1]),
                        "tv(beta_k) - tv(beta_k+1) > 0", diff, 0.0, 3.0 * sd, diff > 3.0 * sd, "3 sigma bootstrap");
        }
    return rec;
}

// ---------------------------------------------------------------------------
// Normal fluctuations of window sums of a translated occupation variable.

struct CltSpec {
    double beta = 1.0;
    long cls = 0;  ///< class whose occupation is summed; negative selects f = 0
    std::vector<int> sides{8, 16, 32};
    long replicas = 2000;
    std::uint64_t seed = 1;
};

inline ExperimentRecord clt_experiment(const ContourCatalog& catalog, const CltSpec& spec) {
    ExperimentRecord rec;
    rec.name = "clt";
    rec.parameters = {{"beta", spec.beta}, {"class", spec.cls}, {"sides", spec.sides}, {"replicas", spec.replicas},
                      {"seed", spec.seed}, {"max_length", catalog.max_length()}};
    if (spec.cls < 0) throw DegenerateVariance("f is identically zero, so D = 0");
    const auto cls = static_cast<std::uint32_t>(spec.cls);
    auto& t = rec.table("clt", {"side", "p_hat", "var_S", "var_S_se", "skewness", "kurtosis"});
    std::vector<std::array<double, 3>> rows;
    for (std::size_t si = 0; si < spec.sides.size(); ++si) {
        const int n = spec.sides[si];
        std::set<Plaquette> ps;
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y)
                for (const auto& p : catalog.at(cls).representative.plaquettes()) ps.insert(p.translated({x, y}));
        const auto window = make_window({ps.begin(), ps.end()});
        const auto sums = run_replicas<double>(spec.replicas, [&](long r) {
            FieldParams fp;
            fp.beta = spec.beta;
            fp.seed = replica_seed(detail::experiment_seed(spec.seed, 12, static_cast<std::int64_t>(si)), r);
            FieldRealization field(catalog, fp);
            const auto s = perfect_sample(window, field);
            double m = 0.0;
            for (const auto& g : s.state)
                if (g.cls == cls && g.shift.x >= 0 && g.shift.x < n && g.shift.y >= 0 && g.shift.y < n) m += 1.0;
            return m;
        }, 1);
        Moments raw;
        for (double s : sums) raw.add(s);
        const double p_hat = raw.summary().mean / (static_cast<double>(n) * n);
        Moments S, S2;
        for (double s : sums) {
            const double v = (s - p_hat * n * n) / n;
            S.add(v);
            S2.add(v * v);
        }
        const auto sum = S.summary();
        t.rows.push_back({static_cast<double>(n), p_hat, sum.variance, S2.summary().se(), S.skewness(), S.kurtosis()});
        rows.push_back({sum.variance, S.skewness(), S.kurtosis()});
    }
    const auto& last = t.rows.back();
    const double D = last[2];
    rec.statistics = {{"D_hat", D}};
    if (!(D > 0.0)) throw DegenerateVariance("estimated D is not positive");
    const double nrep = static_cast<double>(spec.replicas);
    rec.verdict("skewness at largest window", "skewness = 0", last[4], 0.0, 3.0 * std::sqrt(6.0 / nrep),
                std::abs(last[4]) <= 3.0 * std::sqrt(6.0 / nrep));
    rec.verdict("kurtosis at largest window", "kurtosis = 3", last[5], 3.0, 3.0 * std::sqrt(24.0 / nrep),
                std::abs(last[5] - 3.0) <= 3.0 * std::sqrt(24.0 / nrep));
    for (std::size_t i = 0; i + 1 < t.rows.size(); ++i) {
        const double tol = 3.0 * std::hypot(t.rows[i][3], last[3]);
        rec.verdict("variance stabilization side=" + std::to_string(static_cast<int>(t.rows[i][0])), "var(S) = D", t.rows[i][2], D,
                    tol, std::abs(t.rows[i][2] - D) <= tol);
    }
    return rec;
}

}  // namespace peierls
