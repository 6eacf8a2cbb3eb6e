#pragma once

// Run configuration: defaults, a JSON config file and command-line
// overrides merge into one JSON object that is echoed into every output.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "peierls/experiments.hpp"
#include "peierls/version.hpp"

namespace peierls {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr const char* kOutputRootEnv = "PEIERLS_OUTPUT_ROOT";

/// Defaults shared by every subcommand.  Experiment-specific keys live
/// under "params" and default to the spec structs below.
inline json default_config() {
    return {{"beta", 1.5},
            {"max_length", 12},
            {"seed", 1},
            {"replicas", 1000},
            {"tail_model", "eulerian"},
            {"window", {{"x", 0}, {"y", 0}, {"width", 1}, {"height", 1}}},
            {"output", "run"},
            {"params", json::object()}};
}

inline json read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
    }
}

/// Output directory: config "output" resolved against $PEIERLS_OUTPUT_ROOT
/// (or the working directory when unset).
inline std::filesystem::path output_directory(const json& config) {
    std::filesystem::path out = config.at("output").get<std::string>();
    if (out.is_absolute()) return out;
    const char* root = std::getenv(kOutputRootEnv);
    return (root && *root) ? std::filesystem::path(root) / out : out;
}

/// Provenance block written into every output.
inline json provenance(const std::string& command, const json& config) {
    return {{"command", command}, {"code_version", kVersion}, {"seed", config.at("seed")}, {"config", config}};
}

namespace detail {

template <class T>
void take(const json& p, const char* key, T& field) {
    if (p.contains(key)) field = p.at(key).get<T>();
}

inline void take_point(const json& p, const char* key, Point& field) {
    if (!p.contains(key)) return;
    const auto& v = p.at(key);
    if (!v.is_array() || v.size() != 2) throw ConfigError(std::string(key) + " must be [x, y]");
    field = {v[0].get<int>(), v[1].get<int>()};
}

inline const json& params_of(const json& c) {
    static const json empty = json::object();
    return c.contains("params") ? c.at("params") : empty;
}

}  // namespace detail

// Each spec starts from its struct defaults, takes beta/seed/replicas from
// the top level, then anything under "params".

inline GibbsSpec gibbs_spec(const json& c) {
    GibbsSpec s;
    s.beta = c.at("beta");
    s.seed = c.at("seed");
    s.replicas = c.at("replicas");
    const auto& p = detail::params_of(c);
    detail::take_point(p, "corner", s.corner);
    detail::take(p, "width", s.width);
    detail::take(p, "height", s.height);
    detail::take(p, "volume_max_length", s.max_length);
    detail::take(p, "tolerance", s.tolerance);
    return s;
}

inline SpaceSpec space_spec(const json& c) {
    SpaceSpec s;
    s.beta = c.at("beta");
    s.seed = c.at("seed");
    s.replicas = c.at("replicas");
    const auto& p = detail::params_of(c);
    detail::take_point(p, "corner", s.corner);
    detail::take(p, "width", s.width);
    detail::take(p, "height", s.height);
    detail::take_point(p, "window_corner", s.window_corner);
    detail::take(p, "window_width", s.window_width);
    detail::take(p, "window_height", s.window_height);
    detail::take(p, "volume_max_length", s.max_length);
    detail::take(p, "tolerance", s.tolerance);
    return s;
}

inline TimeSpec time_spec(const json& c) {
    TimeSpec s;
    s.beta = c.at("beta");
    s.seed = c.at("seed");
    s.replicas = c.at("replicas");
    const auto& p = detail::params_of(c);
    detail::take_point(p, "corner", s.corner);
    detail::take(p, "width", s.width);
    detail::take(p, "height", s.height);
    detail::take(p, "volume_max_length", s.max_length);
    detail::take(p, "grid", s.grid);
    return s;
}

inline DensitySpec density_spec(const json& c) {
    DensitySpec s;
    s.betas = {c.at("beta").get<double>()};
    s.seed = c.at("seed");
    s.replicas = c.at("replicas");
    const auto& p = detail::params_of(c);
    detail::take(p, "betas", s.betas);
    detail::take(p, "max_class_length", s.max_class_length);
    return s;
}

inline ClanTailSpec clan_tail_spec(const json& c) {
    ClanTailSpec s;
    s.betas = {c.at("beta").get<double>()};
    s.seed = c.at("seed");
    s.replicas = c.at("replicas");
    const auto& p = detail::params_of(c);
    detail::take(p, "betas", s.betas);
    detail::take(p, "times", s.times);
    return s;
}

inline DominationSpec domination_spec(const json& c) {
    DominationSpec s;
    s.betas = {c.at("beta").get<double>()};
    s.seed = c.at("seed");
    s.clans = c.at("replicas");
    const auto& p = detail::params_of(c);
    detail::take(p, "betas", s.betas);
    detail::take(p, "window_side", s.window_side);
    detail::take(p, "branching_runs", s.branching_runs);
    detail::take(p, "max_generation", s.max_generation);
    return s;
}

inline MixingSpec mixing_spec(const json& c) {
    MixingSpec s;
    s.beta = c.at("beta");
    s.seed = c.at("seed");
    s.pairs = c.at("replicas");
    const auto& p = detail::params_of(c);
    detail::take(p, "window_side", s.window_side);
    detail::take(p, "separations", s.separations);
    detail::take(p, "min_hits", s.min_hits);
    return s;
}

inline PoissonSpec poisson_spec(const json& c) {
    PoissonSpec s;
    s.betas = {c.at("beta").get<double>()};
    s.seed = c.at("seed");
    s.replicas = c.at("replicas");
    const auto& p = detail::params_of(c);
    detail::take(p, "betas", s.betas);
    detail::take(p, "j", s.j);
    detail::take(p, "v", s.v);
    detail::take(p, "bootstrap", s.bootstrap);
    detail::take(p, "max_translates", s.max_translates);
    detail::take(p, "replicas_per_beta", s.replicas_per_beta);
    return s;
}

inline CltSpec clt_spec(const json& c) {
    CltSpec s;
    s.beta = c.at("beta");
    s.seed = c.at("seed");
    s.replicas = c.at("replicas");
    const auto& p = detail::params_of(c);
    detail::take(p, "class", s.cls);
    detail::take(p, "sides", s.sides);
    return s;
}

}  // namespace peierls
