// Command-line front end: run, fd, check-stability, wave-test.
//
// Failures print one line `error: <field>: <message>` to stderr and exit
// with 2 (configuration), 3 (step-ratio violation) or 1 (anything else).

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ringflow/commands.hpp"
#include "ringflow/config.hpp"

namespace {

using ringflow::config::ConfigError;
using ringflow::config::KeyValues;

constexpr const char* kOutEnv = "RINGFLOW_OUT";

/// Options that map one-to-one onto config keys.
struct KeyOptions {
    std::optional<std::string> config_path;
    std::vector<std::pair<std::string, std::optional<std::string>>> keys;

    void attach(CLI::App& app, const std::vector<std::pair<std::string, std::string>>& specs) {
        keys.reserve(specs.size());
        for (const auto& [key, help] : specs) {
            keys.emplace_back(key, std::nullopt);
            std::string flag = "--" + key;
            for (auto& c : flag) {
                if (c == '_') c = '-';
            }
            app.add_option(flag, keys.back().second, help);
        }
        app.add_option("-c,--config", config_path, "Config file (key = value lines)");
    }

    KeyValues collect() const {
        KeyValues kv = config_path ? ringflow::config::parse_file(*config_path) : KeyValues{};
        for (const auto& [key, value] : keys) {
            if (value) kv.set(key, *value);
        }
        return kv;
    }
};

const std::vector<std::pair<std::string, std::string>> kLawKeys{
    {"preset", "model1 | model2 | model3"},
    {"zeta", "Look-behind width for the model3 preset"},
    {"f", "exp(A=..., b=...)"},
    {"g", "logistic(kappa=..., a=...) | rational(a=..., gamma=...) | none"},
    {"down", "uniform(eta=...) | none"},
    {"up", "linear(zeta=...) | none"},
};

const std::vector<std::pair<std::string, std::string>> kRunKeys{
    {"mode", "nonlocal | godunov"},
    {"ic", "step41 | sine(amplitude, frequency) | table(path)"},
    {"n", "Number of cells"},
    {"lambda", "Time step over cell width"},
    {"T", "Horizon"},
    {"snapshot_every", "Steps between snapshots (0: first and last only)"},
    {"cfl_margin", "Required slack below 1 in lambda * v_max"},
    {"out", "Output directory"},
};

std::string output_dir(const KeyValues& kv) {
    if (const char* env = std::getenv(kOutEnv); env && *env) return env;
    return kv.get("out").value_or(".");
}

// Law-only resolution reuses the experiment resolver with a trivial grid.
ringflow::config::Experiment resolve_law(KeyValues kv) {
    kv.set("mode", "nonlocal");
    if (!kv.has("down")) kv.set("down", "uniform(eta=0.1)");
    kv.set("n", "3");
    kv.set("ic", "step41");
    kv.set("T", "0");
    return ringflow::config::resolve(kv);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Non-local ring-road traffic simulator"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "Simulate and write series, snapshots and summary");
    KeyOptions run_opts;
    auto run_specs = kLawKeys;
    run_specs.insert(run_specs.end(), kRunKeys.begin(), kRunKeys.end());
    run_opts.attach(*run_cmd, run_specs);

    auto* fd_cmd = app.add_subcommand("fd", "Equilibrium flow with and without nudging");
    KeyOptions fd_opts;
    auto fd_specs = kLawKeys;
    fd_specs.emplace_back("out", "Output directory");
    fd_opts.attach(*fd_cmd, fd_specs);
    std::optional<double> fd_sigma;
    ringflow::commands::DiagramOptions diagram;
    fd_cmd->add_option("--sigma", fd_sigma, "Look-behind kernel mass (default: from --up)");
    fd_cmd->add_option("--rho-max", diagram.rho_max, "Largest density on the grid")->capture_default_str();
    fd_cmd->add_option("--points", diagram.points, "Number of grid points")->capture_default_str();

    auto* st_cmd = app.add_subcommand("check-stability", "Evaluate the nudging stability condition");
    KeyOptions st_opts;
    st_opts.attach(*st_cmd, kLawKeys);
    std::optional<double> st_eta;
    double rho_star = 1.0;
    std::optional<double> rho_min, rho_max;
    st_cmd->add_option("--eta", st_eta, "Look-ahead width (default: from --down)");
    st_cmd->add_option("--rho-star", rho_star, "Equilibrium density")->capture_default_str();
    st_cmd->add_option("--rho-min", rho_min, "Lower density bound (default: rho*)");
    st_cmd->add_option("--rho-max", rho_max, "Upper density bound (default: rho*)");

    auto* wave_cmd = app.add_subcommand("wave-test", "Compare look-ahead runs with the exact travelling wave");
    ringflow::commands::WaveOptions wave;
    std::optional<std::string> wave_f, wave_out;
    wave_cmd->add_option("--n-list", wave.n_list, "Grid sizes")->delimiter(',')->capture_default_str();
    wave_cmd->add_option("--T", wave.horizon, "Horizon")->capture_default_str();
    wave_cmd->add_option("--lambda", wave.lambda, "Time step over cell width")->capture_default_str();
    wave_cmd->add_option("--eta", wave.eta, "Look-ahead width")->capture_default_str();
    wave_cmd->add_option("--rho-star", wave.rho_star, "Wave mean")->capture_default_str();
    wave_cmd->add_option("--amplitude", wave.amplitude, "Wave amplitude")->capture_default_str();
    wave_cmd->add_option("--k", wave.k, "Periods per look-ahead window")->capture_default_str();
    wave_cmd->add_option("--q", wave.q, "Denominator of eta = p / q")->capture_default_str();
    wave_cmd->add_option("--snapshot-dt", wave.snapshot_dt, "Time between compared snapshots")->capture_default_str();
    wave_cmd->add_option("--f", wave_f, "exp(A=..., b=...)");
    wave_cmd->add_option("--out", wave_out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*run_cmd) {
            const auto kv = run_opts.collect();
            const auto ex = ringflow::config::resolve(kv);
            std::cout << ringflow::commands::run(ex, output_dir(kv));
        } else if (*fd_cmd) {
            const auto kv = fd_opts.collect();
            const auto ex = resolve_law(kv);
            diagram.sigma = fd_sigma ? *fd_sigma : (ex.up ? ringflow::sigma(*ex.up) : 0.0);
            std::cout << ringflow::commands::fd(ex.law, diagram, output_dir(kv));
        } else if (*st_cmd) {
            const auto kv = st_opts.collect();
            const auto ex = resolve_law(kv);
            const double eta = st_eta ? *st_eta : ex.down->support();
            std::cout << ringflow::commands::check_stability(ex.law, eta, rho_star,
                                                             rho_min.value_or(rho_star),
                                                             rho_max.value_or(rho_star));
        } else if (*wave_cmd) {
            if (wave_f) wave.f = ringflow::config::parse_f(*wave_f);
            KeyValues kv;
            if (wave_out) kv.set("out", *wave_out);
            std::cout << ringflow::commands::wave_test(wave, output_dir(kv));
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.field() << ": " << e.what() << "\n";
        return 2;
    } catch (const ringflow::CflViolation& e) {
        std::cerr << "error: lambda: step " << e.step() << ": " << e.what() << "\n";
        return 3;
    } catch (const ringflow::InvalidInput& e) {
        std::cerr << "error: input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: runtime: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
