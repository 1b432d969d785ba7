/// @file run_config.hpp
/// @brief Flat key = value run configuration for the command-line driver.
///
/// One assignment per line; '#' starts a comment; blank lines are ignored.
/// Unknown keys, repeated keys and malformed values are errors.
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "minimize.hpp"
#include "potential.hpp"

namespace discl {

inline constexpr const char* kVersion = "1.0.0";

class ConfigError : public Error {
public:
    using Error::Error;
};

struct RunConfig {
    // grid and model
    int nx = 64;
    int ny = 64;
    double eps = 0.5;
    double xi = 0.5;
    std::string potential = "rational";
    bool div_penalty = false;
    int sign = 1;
    // minimizer
    int max_iters = 2000;
    std::string step_rule = "armijo";
    double fixed_step = 1.0;
    double grad_tol = 1e-4;
    std::vector<double> mu_schedule{10.0, 100.0, 1000.0};
    bool anchor = false;
    double anchor_x = -0.9, anchor_y = -0.9;
    double anchor_k1 = 1.0, anchor_k2 = 0.0;
    double anchor_weight = 10.0;
    bool use_relaxed = false;
    bool alternating = false;
    double noise = 0.0;
    std::uint64_t seed = 0;
    // scaling study
    std::vector<double> eps_list{0.5, 0.25, 0.125};
    double energy_ratio_cap = 100.0;
    bool parallel = false;
    // envelope sweep
    double r_min = 0.0;
    double r_max = 4.0;
    double r_step = 0.05;
    int envelope_depth = 3;
    // output
    std::string out = "out";

    ModelParams model() const {
        ModelParams p;
        p.eps = eps;
        p.xi = xi;
        p.potential = potential_by_name(potential);
        p.div_penalty = div_penalty;
        p.validate();
        return p;
    }

    MinimizeConfig minimizer() const {
        MinimizeConfig c;
        c.max_iters = max_iters;
        c.step_rule = step_rule == "fixed" ? StepRule::fixed : StepRule::armijo;
        c.fixed_step = fixed_step;
        c.grad_tol = grad_tol;
        c.mu_schedule = mu_schedule;
        c.anchor = anchor;
        c.anchor_point = {anchor_x, anchor_y};
        c.anchor_value = {anchor_k1, anchor_k2};
        c.anchor_weight = anchor_weight;
        c.use_relaxed = use_relaxed;
        c.alternating = alternating;
        c.noise = noise;
        c.seed = seed;
        c.validate();
        return c;
    }

    ScalingConfig scaling() const {
        ScalingConfig s;
        s.nx = nx;
        s.ny = ny;
        s.minimize = minimizer();
        s.energy_ratio_cap = energy_ratio_cap;
        s.parallel = parallel;
        s.sign = sign;
        return s;
    }

    /// Canonical key = value listing, one per line, in key order.
    std::string canonical() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline std::string format_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
    return s;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    std::istringstream is(text);
    T v{};
    is >> v;
    if (is.fail() || !is.eof()) throw ConfigError("config: bad value for '" + key + "': '" + text + "'");
    return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw ConfigError("config: bad boolean for '" + key + "': '" + text + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number<double>(key, trim(item)));
    if (out.empty()) throw ConfigError("config: empty list for '" + key + "'");
    return out;
}

struct KeyBinding {
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

inline const std::map<std::string, KeyBinding>& config_keys() {
    using R = RunConfig;
    static const std::map<std::string, KeyBinding> keys = [] {
        std::map<std::string, KeyBinding> m;
        auto int_key = [&](const char* name, int R::*f) {
            m[name] = {[f](R& c, const std::string& k, const std::string& v) { c.*f = parse_number<int>(k, v); },
                       [f](const R& c) { return std::to_string(c.*f); }};
        };
        auto dbl_key = [&](const char* name, double R::*f) {
            m[name] = {[f](R& c, const std::string& k, const std::string& v) { c.*f = parse_number<double>(k, v); },
                       [f](const R& c) { return format_double(c.*f); }};
        };
        auto bool_key = [&](const char* name, bool R::*f) {
            m[name] = {[f](R& c, const std::string& k, const std::string& v) { c.*f = parse_bool(k, v); },
                       [f](const R& c) { return std::string(c.*f ? "true" : "false"); }};
        };
        auto list_key = [&](const char* name, std::vector<double> R::*f) {
            m[name] = {[f](R& c, const std::string& k, const std::string& v) { c.*f = parse_list(k, v); },
                       [f](const R& c) { return format_list(c.*f); }};
        };
        auto str_key = [&](const char* name, std::string R::*f, std::vector<std::string> allowed) {
            m[name] = {[f, allowed](R& c, const std::string& k, const std::string& v) {
                           if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), v) == allowed.end())
                               throw ConfigError("config: bad value for '" + k + "': '" + v + "'");
                           if (v.empty()) throw ConfigError("config: empty value for '" + k + "'");
                           c.*f = v;
                       },
                       [f](const R& c) { return c.*f; }};
        };
        int_key("nx", &R::nx);
        int_key("ny", &R::ny);
        dbl_key("eps", &R::eps);
        dbl_key("xi", &R::xi);
        str_key("potential", &R::potential, {"rational", "default", "min_quadratic"});
        bool_key("div_penalty", &R::div_penalty);
        int_key("sign", &R::sign);
        int_key("max_iters", &R::max_iters);
        str_key("step_rule", &R::step_rule, {"armijo", "fixed"});
        dbl_key("fixed_step", &R::fixed_step);
        dbl_key("grad_tol", &R::grad_tol);
        list_key("mu_schedule", &R::mu_schedule);
        bool_key("anchor", &R::anchor);
        dbl_key("anchor_x", &R::anchor_x);
        dbl_key("anchor_y", &R::anchor_y);
        dbl_key("anchor_k1", &R::anchor_k1);
        dbl_key("anchor_k2", &R::anchor_k2);
        dbl_key("anchor_weight", &R::anchor_weight);
        bool_key("use_relaxed", &R::use_relaxed);
        bool_key("alternating", &R::alternating);
        dbl_key("noise", &R::noise);
        m["seed"] = {[](R& c, const std::string& k, const std::string& v) {
                         if (!v.empty() && v[0] == '-') throw ConfigError("config: seed must be nonnegative");
                         c.seed = parse_number<std::uint64_t>(k, v);
                     },
                     [](const R& c) { return std::to_string(c.seed); }};
        list_key("eps_list", &R::eps_list);
        dbl_key("energy_ratio_cap", &R::energy_ratio_cap);
        bool_key("parallel", &R::parallel);
        dbl_key("r_min", &R::r_min);
        dbl_key("r_max", &R::r_max);
        dbl_key("r_step", &R::r_step);
        int_key("envelope_depth", &R::envelope_depth);
        str_key("out", &R::out, {});
        return m;
    }();
    return keys;
}

}  // namespace detail

inline std::string RunConfig::canonical() const {
    std::string s;
    for (const auto& [key, b] : detail::config_keys()) s += key + " = " + b.get(*this) + "\n";
    return s;
}

/// Checks value ranges that do not depend on a particular command.
inline void validate(const RunConfig& c) {
    if (c.nx < 1 || c.ny < 1) throw ConfigError("config: nx and ny must be positive");
    if (c.sign != 1 && c.sign != -1) throw ConfigError("config: sign must be 1 or -1");
    if (!(c.r_step > 0.0) || !(c.r_max >= c.r_min) || !(c.r_min >= 0.0))
        throw ConfigError("config: need 0 <= r_min <= r_max and r_step > 0");
    if (c.envelope_depth < 1) throw ConfigError("config: envelope_depth must be >= 1");
    if (!(c.energy_ratio_cap >= 1.0)) throw ConfigError("config: energy_ratio_cap must be >= 1");
    try {
        c.model();
        c.minimizer();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

inline RunConfig parse_config(std::istream& is) {
    RunConfig c;
    const auto& keys = detail::config_keys();
    std::map<std::string, int> seen;
    std::string line;
    int n = 0;
    while (std::getline(is, line)) {
        ++n;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(n) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const auto it = keys.find(key);
        if (it == keys.end()) throw ConfigError("config line " + std::to_string(n) + ": unknown key '" + key + "'");
        if (seen[key]++) throw ConfigError("config line " + std::to_string(n) + ": repeated key '" + key + "'");
        it->second.set(c, key, value);
    }
    validate(c);
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open '" + path + "'");
    return parse_config(f);
}

/// 64-bit FNV-1a hash.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

/// Hash of the canonical configuration with the output directory left out,
/// so the same experiment hashes the same wherever it is written.
inline std::uint64_t config_hash(const RunConfig& c) {
    std::istringstream is(c.canonical());
    std::string line, kept;
    while (std::getline(is, line))
        if (line.rfind("out =", 0) != 0) kept += line + "\n";
    return fnv1a(kept);
}


}  // namespace discl
