#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ringflow/error.hpp"
#include "ringflow/grid.hpp"
#include "ringflow/io.hpp"
#include "ringflow/kernels.hpp"
#include "ringflow/solver.hpp"
#include "ringflow/speedlaws.hpp"

namespace ringflow::config {

/// Invalid configuration value; `field()` names the offending key.
class ConfigError : public InvalidInput {
public:
    ConfigError(std::string field, const std::string& what)
        : InvalidInput(what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Raw key/value pairs. Later `set` calls override earlier ones.
class KeyValues {
public:
    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> get(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        return it->second;
    }
    const std::map<std::string, std::string>& all() const noexcept { return values_; }

private:
    std::map<std::string, std::string> values_;
};

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

/// `key = value` lines; `#` starts a comment; blank lines ignored.
inline KeyValues parse_text(std::istream& is, const std::string& source = "config") {
    KeyValues kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(lineno), "expected 'key = value'");
        }
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno), "empty key");
        kv.set(key, trim(line.substr(eq + 1)));
    }
    return kv;
}

inline KeyValues parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config", "cannot open " + path);
    return parse_text(is, path);
}

/// A call expression `name(arg, key=value, ...)` or a bare `name`.
struct Call {
    std::string name;
    std::vector<std::pair<std::string, std::string>> args;  ///< key empty for positional
};

inline Call parse_call(const std::string& field, const std::string& text) {
    const auto s = trim(text);
    Call c;
    const auto open = s.find('(');
    if (open == std::string::npos) {
        c.name = s;
        if (c.name.empty()) throw ConfigError(field, "empty value");
        return c;
    }
    if (s.back() != ')') throw ConfigError(field, "missing ')' in '" + s + "'");
    c.name = trim(s.substr(0, open));
    const auto body = s.substr(open + 1, s.size() - open - 2);
    std::size_t start = 0;
    while (start <= body.size()) {
        const auto comma = body.find(',', start);
        const auto part = trim(body.substr(start, comma - start));
        if (!part.empty()) {
            const auto eq = part.find('=');
            if (eq == std::string::npos) {
                c.args.emplace_back("", part);
            } else {
                c.args.emplace_back(trim(part.substr(0, eq)), trim(part.substr(eq + 1)));
            }
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return c;
}

inline double to_number(const std::string& field, const std::string& text) {
    try {
        const double v = io::parse_double(trim(text));
        if (!std::isfinite(v)) throw InvalidInput("");
        return v;
    } catch (const InvalidInput&) {
        throw ConfigError(field, "expected a finite number, got '" + text + "'");
    }
}

inline std::size_t to_count(const std::string& field, const std::string& text) {
    const double v = to_number(field, text);
    if (v < 0.0 || v != std::floor(v) || v > 1e12) {
        throw ConfigError(field, "expected a non-negative integer, got '" + text + "'");
    }
    return static_cast<std::size_t>(v);
}

/// Binds a call's arguments to named parameters (positional in declared order).
inline std::map<std::string, std::string> bind(const std::string& field, const Call& call,
                                               const std::vector<std::string>& params) {
    std::map<std::string, std::string> out;
    std::size_t pos = 0;
    for (const auto& [key, value] : call.args) {
        std::string name = key;
        if (name.empty()) {
            if (pos >= params.size()) throw ConfigError(field, "too many arguments to " + call.name);
            name = params[pos++];
        } else if (std::find(params.begin(), params.end(), name) == params.end()) {
            throw ConfigError(field, "unknown parameter '" + name + "' for " + call.name);
        }
        if (out.count(name)) throw ConfigError(field, "parameter '" + name + "' given twice");
        out[name] = value;
    }
    return out;
}

inline double required(const std::string& field, const std::map<std::string, std::string>& args,
                       const std::string& name) {
    const auto it = args.find(name);
    if (it == args.end()) throw ConfigError(field, "missing parameter '" + name + "'");
    return to_number(field + "." + name, it->second);
}

inline double optional_number(const std::string& field,
                              const std::map<std::string, std::string>& args,
                              const std::string& name, double fallback) {
    const auto it = args.find(name);
    return it == args.end() ? fallback : to_number(field + "." + name, it->second);
}

template <typename Build>
auto guarded(const std::string& field, Build&& build) {
    try {
        return build();
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidInput& e) {
        throw ConfigError(field, e.what());
    }
}

inline LawComponent parse_f(const std::string& text) {
    const auto call = parse_call("f", text);
    if (call.name != "exp") throw ConfigError("f", "unknown law '" + call.name + "' (expected exp)");
    const auto args = bind("f", call, {"A", "b"});
    return guarded("f", [&] { return exp_f(required("f", args, "A"), optional_number("f", args, "b", 1.0)); });
}

inline LawComponent parse_g(const std::string& text) {
    const auto call = parse_call("g", text);
    if (call.name == "none") {
        if (!call.args.empty()) throw ConfigError("g", "none takes no parameters");
        return unit_g();
    }
    if (call.name == "logistic") {
        const auto args = bind("g", call, {"kappa", "a"});
        return guarded("g", [&] {
            return logistic_g(required("g", args, "kappa"), required("g", args, "a"));
        });
    }
    if (call.name == "rational") {
        const auto args = bind("g", call, {"a", "gamma"});
        return guarded("g", [&] {
            return rational_g(required("g", args, "a"), required("g", args, "gamma"));
        });
    }
    throw ConfigError("g", "unknown law '" + call.name + "' (expected logistic, rational or none)");
}

/// Kernel field `down` or `up`; empty optional for `none`.
inline std::optional<KernelSpec> parse_kernel(const std::string& field, const std::string& text) {
    const auto call = parse_call(field, text);
    if (call.name == "none") return std::nullopt;
    if (call.name == "uniform") {
        if (field != "down") throw ConfigError(field, "uniform is a look-ahead kernel");
        const auto args = bind(field, call, {"eta"});
        return guarded(field, [&] { return KernelSpec::uniform_downstream(required(field, args, "eta")); });
    }
    if (call.name == "linear") {
        if (field != "up") throw ConfigError(field, "linear is a look-behind kernel");
        const auto args = bind(field, call, {"zeta"});
        return guarded(field, [&] { return KernelSpec::linear_upstream(required(field, args, "zeta")); });
    }
    throw ConfigError(field, "unknown kernel '" + call.name + "' (expected uniform, linear or none)");
}

enum class IcKind { step41, sine, table };

struct InitialCondition {
    IcKind kind = IcKind::step41;
    ic::Sine sine{};
    std::string table_path;
    std::string label;
};

inline InitialCondition parse_ic(const std::string& text) {
    const auto call = parse_call("ic", text);
    InitialCondition out;
    if (call.name == "step41") {
        if (!call.args.empty()) throw ConfigError("ic", "step41 takes no parameters");
        out.kind = IcKind::step41;
    } else if (call.name == "sine") {
        const auto args = bind("ic", call, {"amplitude", "frequency", "base"});
        out.kind = IcKind::sine;
        out.sine.amplitude = optional_number("ic", args, "amplitude", 0.2);
        out.sine.frequency = optional_number("ic", args, "frequency", 10.0);
        out.sine.base = optional_number("ic", args, "base", 1.0);
        if (!(std::abs(out.sine.amplitude) < out.sine.base)) {
            throw ConfigError("ic", "sine needs |amplitude| < base for a positive density");
        }
    } else if (call.name == "table") {
        const auto args = bind("ic", call, {"path"});
        const auto it = args.find("path");
        if (it == args.end() || it->second.empty()) throw ConfigError("ic", "table needs a path");
        out.kind = IcKind::table;
        out.table_path = it->second;
    } else {
        throw ConfigError("ic", "unknown initial condition '" + call.name +
                                    "' (expected step41, sine or table)");
    }
    out.label = trim(text);
    return out;
}

/// Densities from a CSV with a `rho` column, e.g. a snapshot written by `run`.
inline DensityProfile load_table_ic(const std::string& path) {
    try {
        const auto table = io::load(path);
        const auto col = io::column(table, "rho");
        std::vector<double> values;
        values.reserve(table.rows.size());
        for (const auto& row : table.rows) values.push_back(row[col]);
        return DensityProfile(std::move(values));
    } catch (const InvalidInput& e) {
        throw ConfigError("ic", path + ": " + e.what());
    }
}

/// Fully validated experiment.
struct Experiment {
    std::string preset;  ///< empty when assembled from explicit keys only
    SchemeConfig scheme;
    SpeedLaw law;
    std::optional<KernelSpec> down;
    std::optional<KernelSpec> up;
    InitialCondition ic_spec;
    DensityProfile ic{std::vector<double>(3, 1.0)};
    std::string f_text, g_text, down_text, up_text;
    std::string out_dir = ".";
};

inline std::string format_number(double x) { return io::format_double(x); }

/// Preset keys for the three reference models at a given look-behind width.
inline KeyValues preset_keys(const std::string& name, double zeta) {
    KeyValues kv;
    if (name == "model1") {
        kv.set("mode", "godunov");
        kv.set("f", "exp(A=0.96, b=1)");
        kv.set("g", "none");
        kv.set("down", "none");
        kv.set("up", "none");
    } else if (name == "model2") {
        kv.set("mode", "nonlocal");
        kv.set("f", "exp(A=0.96, b=1)");
        kv.set("g", "none");
        kv.set("down", "uniform(eta=0.1)");
        kv.set("up", "none");
    } else if (name == "model3") {
        if (!(zeta > 0.0 && zeta <= 1.0)) throw ConfigError("zeta", "zeta must lie in (0, 1]");
        kv.set("mode", "nonlocal");
        kv.set("f", "exp(A=0.75, b=1)");
        kv.set("g", "logistic(kappa=0.6, a=" + format_number(1.8 / (zeta * (2.0 - zeta))) + ")");
        kv.set("down", "uniform(eta=0.1)");
        kv.set("up", "linear(zeta=" + format_number(zeta) + ")");
    } else {
        throw ConfigError("preset", "unknown preset '" + name + "' (expected model1, model2 or model3)");
    }
    return kv;
}

inline const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys{"preset", "zeta", "mode", "f", "g", "down", "up",
                                               "ic", "n", "lambda", "T", "snapshot_every",
                                               "cfl_margin", "out"};
    return keys;
}

/**
 * Resolves raw keys into an experiment. A preset supplies defaults for the
 * law, kernels and mode; explicit keys override it.
 */
inline Experiment resolve(const KeyValues& raw) {
    for (const auto& [key, value] : raw.all()) {
        if (std::find(known_keys().begin(), known_keys().end(), key) == known_keys().end()) {
            throw ConfigError(key, "unknown key");
        }
    }
    KeyValues kv;
    std::string preset;
    if (const auto p = raw.get("preset")) {
        preset = trim(*p);
        const double zeta = raw.has("zeta") ? to_number("zeta", *raw.get("zeta")) : 1.0;
        kv = preset_keys(preset, zeta);
    } else if (raw.has("zeta")) {
        throw ConfigError("zeta", "zeta only applies to presets; use up = linear(zeta=...)");
    }
    for (const auto& [key, value] : raw.all()) {
        if (key != "preset" && key != "zeta") kv.set(key, value);
    }

    Experiment ex;
    ex.preset = preset;
    const auto mode = trim(kv.get("mode").value_or("nonlocal"));
    if (mode == "nonlocal") {
        ex.scheme.mode = SchemeMode::nonlocal;
    } else if (mode == "godunov") {
        ex.scheme.mode = SchemeMode::lwr_godunov;
    } else {
        throw ConfigError("mode", "expected nonlocal or godunov, got '" + mode + "'");
    }

    if (!kv.has("f")) throw ConfigError("f", "missing (set f or a preset)");
    ex.f_text = *kv.get("f");
    ex.g_text = kv.get("g").value_or("none");
    ex.down_text = kv.get("down").value_or("none");
    ex.up_text = kv.get("up").value_or("none");
    auto f = parse_f(ex.f_text);
    auto g = parse_g(ex.g_text);
    ex.law = guarded("g", [&] { return make_law(std::move(f), std::move(g)); });
    ex.down = parse_kernel("down", ex.down_text);
    ex.up = parse_kernel("up", ex.up_text);
    if (ex.scheme.mode == SchemeMode::nonlocal && !ex.down) {
        throw ConfigError("down", "non-local mode needs a look-ahead kernel");
    }
    if (ex.scheme.mode == SchemeMode::lwr_godunov && (ex.down || ex.up || ex.g_text != "none")) {
        throw ConfigError("mode", "godunov mode takes no kernels and g = none");
    }

    ex.ic_spec = parse_ic(kv.get("ic").value_or("step41"));
    if (ex.ic_spec.kind == IcKind::table) {
        ex.ic = load_table_ic(ex.ic_spec.table_path);
        if (kv.has("n") && to_count("n", *kv.get("n")) != ex.ic.n_cells()) {
            throw ConfigError("n", "does not match the " + std::to_string(ex.ic.n_cells()) +
                                       " rows of the initial table");
        }
        ex.scheme.n_cells = ex.ic.n_cells();
    } else {
        ex.scheme.n_cells = kv.has("n") ? to_count("n", *kv.get("n")) : 500;
        if (ex.scheme.n_cells < 3) throw ConfigError("n", "need at least 3 cells");
        ex.ic = ex.ic_spec.kind == IcKind::step41
                    ? sample(ic::congestion_belt, ex.scheme.n_cells)
                    : guarded("ic", [&] { return sample(ex.ic_spec.sine, ex.scheme.n_cells); });
    }

    ex.scheme.lambda = kv.has("lambda") ? to_number("lambda", *kv.get("lambda")) : 0.25;
    if (!(ex.scheme.lambda > 0.0)) throw ConfigError("lambda", "must be positive");
    const double default_T = ex.ic_spec.kind == IcKind::sine ? 5.0 : 40.0;
    ex.scheme.horizon = kv.has("T") ? to_number("T", *kv.get("T")) : default_T;
    if (!(ex.scheme.horizon >= 0.0)) throw ConfigError("T", "must be non-negative");
    ex.scheme.snapshot_every =
        kv.has("snapshot_every") ? to_count("snapshot_every", *kv.get("snapshot_every")) : 0;
    ex.scheme.cfl_margin = kv.has("cfl_margin") ? to_number("cfl_margin", *kv.get("cfl_margin")) : 0.05;
    if (!(ex.scheme.cfl_margin >= 0.0 && ex.scheme.cfl_margin < 1.0)) {
        throw ConfigError("cfl_margin", "must lie in [0, 1)");
    }
    ex.out_dir = kv.get("out").value_or(".");
    return ex;
}

}  // namespace ringflow::config
