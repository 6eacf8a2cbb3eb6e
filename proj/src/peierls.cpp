// Command-line front end: enumerate, bounds, sample, experiment.
//
// Exit codes: 0 ok, 2 usage or input, 3 regime guard, 4 resource cap.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "peierls/config.hpp"

namespace fs = std::filesystem;
using namespace peierls;

namespace {

enum Exit { kOk = 0, kUsage = 2, kRegime = 3, kResource = 4 };

void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string csv(const Table& t) {
    std::ostringstream os;
    write_csv(os, t);
    return os.str();
}

TailModel tail_model_of(const json& config) { return tail_model_from_string(config.at("tail_model").get<std::string>()); }

int cmd_enumerate(const json& config) {
    const int L = config.at("max_length");
    if (L < 4) throw ConfigError("max_length must be at least 4");
    const ContourCatalog catalog(L);
    const auto dir = output_directory(config);
    std::ostringstream cat;
    catalog.write(cat);
    write_file(dir / "catalog.txt", cat.str());
    Table t{"counts", {"length", "classes", "through_plaquette", "through_vertex"}, {}};
    const auto classes = catalog.classes_per_length();
    const auto kp = catalog.through_plaquette_counts();
    const auto kv = catalog.through_vertex_counts();
    for (int n = 4; n <= L; n += 2)
        t.rows.push_back({double(n), double(classes[n]), double(kp[n]), double(kv[n])});
    write_file(dir / "counts.csv", csv(t));
    auto meta = provenance("enumerate", config);
    meta["classes"] = catalog.size();
    write_file(dir / "run.json", dump(meta));
    return kOk;
}

int cmd_bounds(const json& config) {
    const ContourCatalog catalog(config.at("max_length").get<int>());
    BoundCalculator calc(catalog, tail_model_of(config));
    const auto report = make_bound_report(calc, config.at("beta").get<double>());
    const auto dir = output_directory(config);
    const auto rj = report_json(report);
    std::ostringstream kv;
    kv.precision(17);
    for (const auto& [k, v] : rj.items()) kv << k << " = " << v.dump() << "\n";
    write_file(dir / "bounds.txt", kv.str());
    auto meta = provenance("bounds", config);
    meta["report"] = rj;
    write_file(dir / "bounds.json", dump(meta));
    std::cout << kv.str();
    return kOk;
}

int cmd_sample(const json& config) {
    const double beta = config.at("beta");
    const ContourCatalog catalog(config.at("max_length").get<int>());
    const auto report = working_report(catalog, beta, tail_model_of(config));
    const auto& w = config.at("window");
    const auto box = Volume::box({w.at("x").get<int>(), w.at("y").get<int>()}, w.at("width").get<int>(), w.at("height").get<int>());
    const auto window = make_window({box.plaquettes().begin(), box.plaquettes().end()});
    const long replicas = config.at("replicas");
    const std::uint64_t seed = config.at("seed");

    struct Out {
        Configuration state;
        ClanStats stats;
        double horizon = 0.0, residual = 0.0;
    };
    const auto outs = run_replicas<Out>(replicas, [&](long r) {
        FieldParams fp;
        fp.beta = beta;
        fp.seed = replica_seed(seed, r);
        FieldRealization field(catalog, fp);
        auto s = perfect_sample(window, field);
        return Out{s.state, clan_statistics(s.clan, field.geometry()), s.clan.horizon, s.clan.lookback_residual};
    }, 1);

    std::ostringstream samples;
    samples << "# replica class shift_x shift_y\n";
    Table t{"clan_stats", {"replica", "time_length", "space_width", "size", "depth", "horizon", "lookback_residual"}, {}};
    for (long r = 0; r < replicas; ++r) {
        const auto& o = outs[static_cast<std::size_t>(r)];
        for (const auto& g : o.state) samples << r << ' ' << g.cls << ' ' << g.shift.x << ' ' << g.shift.y << '\n';
        t.rows.push_back({double(r), o.stats.time_length, double(o.stats.space_width), double(o.stats.size), double(o.stats.depth),
                          o.horizon, o.residual});
    }
    const auto dir = output_directory(config);
    write_file(dir / "samples.txt", samples.str());
    write_file(dir / "clan_stats.csv", csv(t));
    auto meta = provenance("sample", config);
    meta["bounds"] = report_json(report);
    const double neglected = neglected_intensity(catalog, beta, report.model);
    meta["truncation_warning"] = {{"neglected_intensity_per_vertex", neglected},
                                  {"tail_model", to_string(report.model)},
                                  {"certified", report.certified}};
    write_file(dir / "run.json", dump(meta));
    return kOk;
}

const std::vector<std::string> kExperiments{"gibbs", "density", "poisson", "clt", "mixing", "convergence",
                                            "space", "time", "clan_tails", "domination"};

int cmd_experiment(const json& config, const std::string& which) {
    const ContourCatalog catalog(config.at("max_length").get<int>());
    ExperimentRecord rec;
    if (which == "gibbs") rec = gibbs_experiment(catalog, gibbs_spec(config));
    else if (which == "density") rec = density_check(catalog, density_spec(config));
    else if (which == "poisson") rec = poisson_experiment(catalog, poisson_spec(config));
    else if (which == "clt") rec = clt_experiment(catalog, clt_spec(config));
    else if (which == "mixing") rec = mixing_experiment(catalog, mixing_spec(config));
    else if (which == "convergence") rec = convergence_experiments(catalog, time_spec(config), space_spec(config));
    else if (which == "space") rec = space_convergence_experiment(catalog, space_spec(config));
    else if (which == "time") rec = time_convergence_experiment(catalog, time_spec(config));
    else if (which == "clan_tails") rec = clan_tail_experiment(catalog, clan_tail_spec(config));
    else if (which == "domination") rec = domination_experiment(catalog, domination_spec(config));
    else throw ConfigError("unknown experiment " + which);
    const auto dir = output_directory(config);
    auto out = provenance("experiment " + which, config);
    out["record"] = rec.to_json();
    write_file(dir / (which + ".json"), dump(out));
    for (const auto& t : rec.tables) write_file(dir / (which + "_" + t.name + ".csv"), csv(t));
    for (const auto& v : rec.verdicts)
        std::cout << (v.pass ? "PASS " : "FAIL ") << v.check << ": observed " << v.observed << " vs " << v.formula << " ("
                  << v.bound << ", tol " << v.tolerance << ")\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Contour gas as a loss network: catalog, bounds, perfect samples and experiments"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    double beta = 0;
    int max_length = 0;
    std::uint64_t seed = 0;
    long replicas = 0;
    std::string tail_model, output;
    std::vector<int> window;
    std::vector<std::string> params;
    app.add_option("-c,--config", config_path, "JSON config file");
    auto* o_beta = app.add_option("--beta", beta, "inverse temperature");
    auto* o_L = app.add_option("-L,--max-length", max_length, "catalog length cap");
    auto* o_seed = app.add_option("--seed", seed, "master seed");
    auto* o_rep = app.add_option("-n,--replicas", replicas, "replica count");
    auto* o_tail = app.add_option("--tail-model", tail_model, "walk | eulerian | geometric | none");
    auto* o_win = app.add_option("--window", window, "window box x y width height")->expected(4);
    auto* o_out = app.add_option("-o,--output", output, "output directory (relative to $PEIERLS_OUTPUT_ROOT)");
    app.add_option("-p,--param", params, "experiment parameter key=json");

    auto* enumerate = app.add_subcommand("enumerate", "contour catalog and per-length counts");
    auto* bounds = app.add_subcommand("bounds", "alpha, beta*, rho, M2, M3");
    auto* sample = app.add_subcommand("sample", "perfect samples of a window with clan statistics");
    auto* experiment = app.add_subcommand("experiment", "replicated validation experiment");
    std::string which;
    experiment->add_option("name", which, "experiment name")->required()->check(CLI::IsMember(kExperiments));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        json config = default_config();
        if (!config_path.empty()) config.merge_patch(read_config_file(config_path));
        if (o_beta->count()) config["beta"] = beta;
        if (o_L->count()) config["max_length"] = max_length;
        if (o_seed->count()) config["seed"] = seed;
        if (o_rep->count()) config["replicas"] = replicas;
        if (o_tail->count()) config["tail_model"] = tail_model;
        if (o_win->count()) config["window"] = {{"x", window[0]}, {"y", window[1]}, {"width", window[2]}, {"height", window[3]}};
        if (o_out->count()) config["output"] = output;
        for (const auto& kv : params) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError("--param expects key=value");
            config["params"][kv.substr(0, eq)] = json::parse(kv.substr(eq + 1));
        }
        tail_model_of(config);

        if (enumerate->parsed()) return cmd_enumerate(config);
        if (bounds->parsed()) return cmd_bounds(config);
        if (sample->parsed()) return cmd_sample(config);
        return cmd_experiment(config, which);
    } catch (const RegimeError& e) {
        std::cerr << "regime: " << e.what() << "\n";
        return kRegime;
    } catch (const DomainError& e) {
        std::cerr << "regime: " << e.what() << "\n";
        return kRegime;
    } catch (const BudgetExceeded& e) {
        std::cerr << "resource: " << e.what() << "\n";
        return kResource;
    } catch (const SupportTooLarge& e) {
        std::cerr << "resource: " << e.what() << "\n";
        return kResource;
    } catch (const ScaleTooLarge& e) {
        std::cerr << "resource: " << e.what() << "\n";
        return kResource;
    } catch (const HorizonExploded& e) {
        std::cerr << "resource: " << e.what() << "\n";
        return kResource;
    } catch (const HorizonTooShort& e) {
        std::cerr << "resource: " << e.what() << "\n";
        return kResource;
    } catch (const PopulationExplosion& e) {
        std::cerr << "resource: " << e.what() << "\n";
        return kResource;
    } catch (const json::exception& e) {
        std::cerr << "config: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input: " << e.what() << "\n";
        return kUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "input: " << e.what() << "\n";
        return kUsage;
    }
}
