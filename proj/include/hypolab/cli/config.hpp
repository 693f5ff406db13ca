#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hypolab/error.hpp"
#include "hypolab/evolve.hpp"
#include "hypolab/model.hpp"
#include "hypolab/sampler.hpp"

namespace hypolab::cli {

/// Experiment configuration. Unset optionals are derived at run time
/// (L_dom from the potential, γ and ε from the tuning pipeline, dt from γ).
struct ExperimentConfig {
    PotentialKind potential_kind = PotentialKind::quadratic;
    std::vector<double> potential_params;

    std::optional<double> L_dom;
    int N_x = 128;
    int N_v = 20;

    std::optional<double> gamma, eps, alpha, m, K;

    double t_end_factor = 5.0;
    std::optional<double> evolve_dt;
    std::vector<InitialKind> f0{InitialKind::gap, InitialKind::velocity, InitialKind::random};
    double rate_window = 0.5;

    int sde_d = 1;
    int sde_particles = 10000;
    double sde_dt = 0.01;
    int sde_steps = 3000;
    int sde_record_every = 10;
    std::optional<double> sde_gamma;
    double sde_init_shift = 2.0;
    int sde_threads = 0;
    std::vector<Observable> sde_observables{Observable::x, Observable::v, Observable::x2, Observable::v2,
                                            Observable::H};

    std::string sweep_mode = "sample";
    std::vector<double> sweep_gammas{0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
    int sweep_steps = 6000;

    std::uint64_t seed = 1;
    std::string output_dir = "hypolab-out";
    bool write_csv = true;

    bool operator==(const ExperimentConfig&) const = default;

    Potential potential() const { return Potential(potential_kind, potential_params); }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
    double x = 0.0;
    const auto* end = v.data() + v.size();
    const auto r = std::from_chars(v.data(), end, x);
    if (r.ec != std::errc() || r.ptr != end || !std::isfinite(x))
        throw ConfigError(key + ": expected a finite number, got '" + v + "'");
    return x;
}

inline long long parse_int(const std::string& key, const std::string& v) {
    long long x = 0;
    const auto* end = v.data() + v.size();
    const auto r = std::from_chars(v.data(), end, x);
    if (r.ec != std::errc() || r.ptr != end) throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return x;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t x = 0;
    const auto* end = v.data() + v.size();
    const auto r = std::from_chars(v.data(), end, x);
    if (r.ec != std::errc() || r.ptr != end)
        throw ConfigError(key + ": expected an unsigned integer, got '" + v + "'");
    return x;
}

inline int parse_int32(const std::string& key, const std::string& v) {
    const long long x = parse_int(key, v);
    if (x < -2147483647LL || x > 2147483647LL) throw ConfigError(key + ": integer out of range");
    return static_cast<int>(x);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

/// Shortest text that reads back to the same double.
inline std::string format_double(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

template <class T, class F>
std::string join(const std::vector<T>& v, F&& f) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += f(v[i]);
    }
    return s;
}

}  // namespace detail

/// Range checks on every field; messages carry the dotted key.
inline void validate(const ExperimentConfig& c) {
    (void)c.potential();  // parameter checks live in Potential
    if (c.L_dom && !(*c.L_dom > 0.0)) throw ConfigError("grid.L_dom: must be positive");
    if (c.N_x < 16) throw ConfigError("grid.N_x: must be at least 16");
    if (c.N_v < 4) throw ConfigError("grid.N_v: must be at least 4");
    auto positive = [](const std::optional<double>& x, const char* key) {
        if (x && !(*x > 0.0)) throw ConfigError(std::string(key) + ": must be positive");
    };
    positive(c.gamma, "tuning.gamma");
    positive(c.eps, "tuning.eps");
    positive(c.alpha, "tuning.alpha");
    positive(c.m, "tuning.m");
    if (c.K && !(*c.K >= 0.0)) throw ConfigError("tuning.K: must be nonnegative");
    if (c.m.has_value() != c.K.has_value()) throw ConfigError("tuning.m: tuning.m and tuning.K go together");
    if (!(c.t_end_factor > 0.0)) throw ConfigError("evolve.t_end_factor: must be positive");
    positive(c.evolve_dt, "evolve.dt");
    if (c.f0.empty()) throw ConfigError("evolve.f0: at least one initial condition");
    if (!(c.rate_window > 0.0 && c.rate_window <= 1.0)) throw ConfigError("evolve.window: must be in (0, 1]");
    if (c.sde_d < 1) throw ConfigError("sde.d: must be positive");
    if (c.sde_particles < 100) throw ConfigError("sde.particles: must be at least 100");
    if (!(c.sde_dt > 0.0)) throw ConfigError("sde.dt: must be positive");
    if (c.sde_steps < 1) throw ConfigError("sde.steps: must be positive");
    if (c.sde_record_every < 1) throw ConfigError("sde.record_every: must be positive");
    positive(c.sde_gamma, "sde.gamma");
    if (c.sde_gamma && !(*c.sde_gamma * c.sde_dt < 1.0)) throw ConfigError("sde.dt: dt * gamma must be below 1");
    if (c.sde_threads < 0) throw ConfigError("sde.threads: must be nonnegative");
    if (c.sde_observables.empty()) throw ConfigError("sde.observables: must not be empty");
    if (c.sweep_mode != "sample" && c.sweep_mode != "evolve")
        throw ConfigError("sweep.mode: expected sample or evolve");
    if (c.sweep_gammas.empty()) throw ConfigError("sweep.gammas: must not be empty");
    for (double g : c.sweep_gammas) {
        if (!(g > 0.0)) throw ConfigError("sweep.gammas: entries must be positive");
        if (c.sweep_mode == "sample" && !(g * c.sde_dt < 1.0))
            throw ConfigError("sweep.gammas: gamma * sde.dt must be below 1");
    }
    if (c.sweep_steps < 1) throw ConfigError("sweep.steps: must be positive");
    if (c.output_dir.empty()) throw ConfigError("output.dir: must not be empty");
}

/// Applies one `key = value` pair.
inline void set_field(ExperimentConfig& c, const std::string& key, const std::string& raw) {
    using namespace detail;
    const std::string v = trim(raw);
    auto opt = [&](std::optional<double>& dst) {
        if (v == "auto" || v.empty()) dst.reset();
        else dst = parse_double(key, v);
    };
    try {
        if (key == "potential.kind") c.potential_kind = parse_potential_kind(v);
        else if (key == "potential.params") {
            c.potential_params.clear();
            for (const auto& s : split_list(v)) c.potential_params.push_back(parse_double(key, s));
        } else if (key == "grid.L_dom") opt(c.L_dom);
        else if (key == "grid.N_x") c.N_x = parse_int32(key, v);
        else if (key == "grid.N_v") c.N_v = parse_int32(key, v);
        else if (key == "tuning.gamma") opt(c.gamma);
        else if (key == "tuning.eps") opt(c.eps);
        else if (key == "tuning.alpha") opt(c.alpha);
        else if (key == "tuning.m") opt(c.m);
        else if (key == "tuning.K") opt(c.K);
        else if (key == "evolve.t_end_factor") c.t_end_factor = parse_double(key, v);
        else if (key == "evolve.dt") opt(c.evolve_dt);
        else if (key == "evolve.f0") {
            c.f0.clear();
            for (const auto& s : split_list(v)) c.f0.push_back(parse_initial_kind(s));
        } else if (key == "evolve.window") c.rate_window = parse_double(key, v);
        else if (key == "sde.d") c.sde_d = parse_int32(key, v);
        else if (key == "sde.particles") c.sde_particles = parse_int32(key, v);
        else if (key == "sde.dt") c.sde_dt = parse_double(key, v);
        else if (key == "sde.steps") c.sde_steps = parse_int32(key, v);
        else if (key == "sde.record_every") c.sde_record_every = parse_int32(key, v);
        else if (key == "sde.gamma") opt(c.sde_gamma);
        else if (key == "sde.init_shift") c.sde_init_shift = parse_double(key, v);
        else if (key == "sde.threads") c.sde_threads = parse_int32(key, v);
        else if (key == "sde.observables") {
            c.sde_observables.clear();
            for (const auto& s : split_list(v)) c.sde_observables.push_back(parse_observable(s));
        } else if (key == "sweep.mode") c.sweep_mode = v;
        else if (key == "sweep.gammas") {
            c.sweep_gammas.clear();
            for (const auto& s : split_list(v)) c.sweep_gammas.push_back(parse_double(key, s));
        } else if (key == "sweep.steps") c.sweep_steps = parse_int32(key, v);
        else if (key == "seed") c.seed = parse_u64(key, v);
        else if (key == "output.dir") c.output_dir = v;
        else if (key == "output.csv") c.write_csv = parse_bool(key, v);
        else throw ConfigError(key + ": unknown key");
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        if (what.rfind(key, 0) == 0) throw;
        throw ConfigError(key + ": " + what);
    }
}

/// Parses `key = value` lines; `#` starts a comment.
inline ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {}) {
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        set_field(base, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return base;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream s;
    s << f.rdbuf();
    return parse_config(s.str());
}

/// Ordered key/value view of a configuration; `auto` marks derived values.
inline std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& c) {
    using detail::format_double;
    auto opt = [](const std::optional<double>& x) { return x ? format_double(*x) : std::string("auto"); };
    auto d = [](double x) { return format_double(x); };
    return {
        {"potential.kind", std::string(to_string(c.potential_kind))},
        {"potential.params", detail::join(c.potential_params, d)},
        {"grid.L_dom", opt(c.L_dom)},
        {"grid.N_x", std::to_string(c.N_x)},
        {"grid.N_v", std::to_string(c.N_v)},
        {"tuning.gamma", opt(c.gamma)},
        {"tuning.eps", opt(c.eps)},
        {"tuning.alpha", opt(c.alpha)},
        {"tuning.m", opt(c.m)},
        {"tuning.K", opt(c.K)},
        {"evolve.t_end_factor", d(c.t_end_factor)},
        {"evolve.dt", opt(c.evolve_dt)},
        {"evolve.f0", detail::join(c.f0, [](InitialKind k) { return std::string(to_string(k)); })},
        {"evolve.window", d(c.rate_window)},
        {"sde.d", std::to_string(c.sde_d)},
        {"sde.particles", std::to_string(c.sde_particles)},
        {"sde.dt", d(c.sde_dt)},
        {"sde.steps", std::to_string(c.sde_steps)},
        {"sde.record_every", std::to_string(c.sde_record_every)},
        {"sde.gamma", opt(c.sde_gamma)},
        {"sde.init_shift", d(c.sde_init_shift)},
        {"sde.threads", std::to_string(c.sde_threads)},
        {"sde.observables",
         detail::join(c.sde_observables, [](Observable o) { return std::string(to_string(o)); })},
        {"sweep.mode", c.sweep_mode},
        {"sweep.gammas", detail::join(c.sweep_gammas, d)},
        {"sweep.steps", std::to_string(c.sweep_steps)},
        {"seed", std::to_string(c.seed)},
        {"output.dir", c.output_dir},
        {"output.csv", c.write_csv ? "true" : "false"},
    };
}

/// Canonical text form; parse_config(echo_config(c)) == c.
inline std::string echo_config(const ExperimentConfig& c) {
    std::string s;
    for (const auto& [k, v] : config_entries(c)) s += k + " = " + v + "\n";
    return s;
}

}  // namespace hypolab::cli
