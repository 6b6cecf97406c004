#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ringflow/analysis.hpp"
#include "ringflow/config.hpp"
#include "ringflow/io.hpp"
#include "ringflow/kernels.hpp"
#include "ringflow/oracle.hpp"
#include "ringflow/solver.hpp"

// Subcommand bodies shared by the command-line tool and its tests. Each one
// writes its files under an output directory and returns the text report.
namespace ringflow::commands {

namespace fs = std::filesystem;

/// Ordered `key=value` lines.
class Summary {
public:
    void add(const std::string& key, const std::string& value) {
        text_ += key + "=" + value + "\n";
    }
    void add(const std::string& key, double value) { add(key, io::format_double(value)); }
    void add(const std::string& key, std::size_t value) { add(key, std::to_string(value)); }
    void add(const std::string& key, bool value) { add(key, std::string(value ? "true" : "false")); }
    const std::string& text() const noexcept { return text_; }

private:
    std::string text_;
};

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << text;
}

inline fs::path prepare_dir(const std::string& dir) {
    fs::path p(dir.empty() ? "." : dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + p.string() + ": " + ec.message());
    return p;
}

inline std::optional<DiscreteWeights> weights_of(const std::optional<KernelSpec>& k, std::size_t n) {
    if (!k) return std::nullopt;
    return discretize(*k, n);
}

/// Look-ahead width when the kernel is the uniform one the stability theory covers.
inline std::optional<double> uniform_eta(const std::optional<KernelSpec>& down) {
    if (down && down->name() == "uniform") return down->support();
    return std::nullopt;
}

/**
 * `run`: simulate, write series.csv, snapshot_NNNN.csv and summary.
 */
inline std::string run(const config::Experiment& ex, const std::string& out_dir) {
    const auto dir = prepare_dir(out_dir);
    const auto& cfg = ex.scheme;
    const bool nonlocal = cfg.mode == SchemeMode::nonlocal;

    Summary s;
    s.add("preset", ex.preset.empty() ? std::string("none") : ex.preset);
    s.add("mode", std::string(nonlocal ? "nonlocal" : "godunov"));
    s.add("f", ex.law.f.name);
    s.add("g", ex.law.g.name);
    s.add("down", ex.down_text);
    s.add("up", ex.up_text);
    s.add("ic", ex.ic_spec.label);
    s.add("n", cfg.n_cells);
    s.add("lambda", cfg.lambda);
    s.add("time_step", cfg.time_step());
    s.add("steps", cfg.steps());
    s.add("requested_T", cfg.horizon);
    s.add("realized_T", cfg.realized_horizon());
    if (nonlocal) {
        const auto check = lambda_check(cfg.lambda, ex.law.v_max, cfg.cfl_margin);
        s.add("v_max", ex.law.v_max);
        s.add("lambda_admissible", check.admissible);
        s.add("max_stable_lambda", check.max_stable_lambda);
    } else {
        const GodunovFlux flux(ex.law.f);
        const auto st = stats(ex.ic);
        double slope = 0.0;
        for (int k = 0; k <= 256; ++k) {
            slope = std::max(slope, std::abs(flux.flux_slope(st.min + (st.max - st.min) * k / 256.0)));
        }
        s.add("max_flux_slope", slope);
        s.add("lambda_admissible", cfg.lambda * slope <= 1.0);
    }

    const auto result = ringflow::run(cfg, ex.ic, ex.law, weights_of(ex.down, cfg.n_cells),
                                      weights_of(ex.up, cfg.n_cells));

    io::save((dir / "series.csv").string(), io::series_table(result.series));
    for (std::size_t k = 0; k < result.profiles.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "snapshot_%04zu.csv", k);
        io::save((dir / name).string(),
                 io::snapshot_table(result.times[k], result.profiles[k], result.velocities[k]));
    }

    const auto& first = result.series.front();
    const auto& last = result.series.back();
    double lo = first.min, hi = first.max;
    for (const auto& r : result.series) {
        lo = std::min(lo, r.min);
        hi = std::max(hi, r.max);
    }
    s.add("snapshots", result.profiles.size());
    s.add("rho_star", result.rho_star);
    s.add("mass_initial", first.mass);
    s.add("mass_final", last.mass);
    s.add("mass_drift", std::abs(last.mass - first.mass) / first.mass);
    s.add("min_initial", first.min);
    s.add("max_initial", first.max);
    s.add("min_envelope", lo);
    s.add("max_envelope", hi);
    s.add("l2_initial", first.l2);
    s.add("l2_final", last.l2);

    const auto t = result.series_times();
    const auto l2 = result.series_l2();
    try {
        const auto fit = fit_decay_tail(t, l2, 0.6, decay_fit_relative_floor * first.l2);
        s.add("decay_rate", fit.rate);
        s.add("decay_r_squared", fit.r_squared);
        s.add("decay_points", fit.points);
        s.add("decay_truncated", fit.truncated);
    } catch (const InvalidInput& e) {
        s.add("decay_rate", std::string("unavailable"));
        s.add("decay_note", std::string(e.what()));
    }

    const auto eta = uniform_eta(ex.down);
    if (nonlocal && eta && first.min < first.max) {
        const auto report = stability_condition(ex.law, *eta, first.min, first.max, result.rho_star);
        s.add("stability_feasible", report.feasible);
        s.add("stability_margin", report.margin);
        if (report.feasible) {
            s.add("c_bar", report.c_bar);
            s.add("l2_bound_ratio", l2_envelope_ratio(t, l2, report));
        }
    } else {
        s.add("stability_feasible", std::string("not_applicable"));
    }
    write_text(dir / "summary", s.text());
    return s.text();
}

struct DiagramOptions {
    double sigma = 0.0;
    double rho_max = 5.0;
    std::size_t points = 501;
};

/// `fd`: fundamental diagram CSV plus reported critical densities.
inline std::string fd(const SpeedLaw& law, const DiagramOptions& opt, const std::string& out_dir) {
    if (opt.points < 2) throw config::ConfigError("points", "need at least 2 grid points");
    if (!(opt.rho_max > 0.0)) throw config::ConfigError("rho_max", "must be positive");
    if (!(opt.sigma >= 0.0)) throw config::ConfigError("sigma", "must be non-negative");
    std::vector<double> grid(opt.points);
    for (std::size_t k = 0; k < opt.points; ++k) {
        grid[k] = opt.rho_max * static_cast<double>(k) / static_cast<double>(opt.points - 1);
    }
    const auto diagram = fundamental_diagram(law, opt.sigma, grid);
    const auto dir = prepare_dir(out_dir);
    io::save((dir / "fd.csv").string(), io::diagram_table(diagram));
    Summary s;
    s.add("sigma", opt.sigma);
    s.add("grid_step", grid[1] - grid[0]);
    s.add("critical_density_base", diagram.critical_base);
    s.add("critical_density_nudge", diagram.critical_nudge);
    return s.text();
}

/// `check-stability`: human text, key-value record and the largest feasible half-width.
inline std::string check_stability(const SpeedLaw& law, double eta, double rho_star,
                                   double rho_min, double rho_max) {
    if (rho_min > rho_star) throw config::ConfigError("rho_min", "exceeds rho_star");
    if (rho_max < rho_star) throw config::ConfigError("rho_max", "is below rho_star");
    const auto report = config::guarded("eta", [&] {
        return stability_condition(law, eta, rho_min, rho_max, rho_star);
    });
    std::string out = to_text(report);
    out += "\n" + to_record(report);
    out += "largest_feasible_halfwidth=" +
           io::format_double(largest_feasible_halfwidth(law, eta, rho_star)) + "\n";
    return out;
}

struct WaveOptions {
    std::vector<std::size_t> n_list{500, 1000};
    double horizon = 5.0;
    double lambda = 0.25;
    double eta = 0.1;
    double rho_star = 1.0;
    double amplitude = 0.2;
    int k = 1;
    int q = 10;
    LawComponent f = exp_f(0.96, 1.0);
    double snapshot_dt = 0.1;
};

struct WaveRun {
    std::size_t n = 0;
    double t_final = 0.0;
    double l2_error = 0.0;
    double sup_error = 0.0;
    std::optional<DecayFit> fit;
};

/// `wave-test`: look-ahead-only runs from the exact wave across grid sizes.
inline std::string wave_test(const WaveOptions& opt, const std::string& out_dir,
                             std::vector<WaveRun>* runs_out = nullptr) {
    if (opt.n_list.empty()) throw config::ConfigError("n_list", "empty");
    if (!(opt.horizon >= 0.0)) throw config::ConfigError("T", "must be non-negative");
    const auto law = make_law(opt.f, unit_g());
    const TravellingWave wave = config::guarded("wave", [&] {
        return TravellingWave(opt.rho_star, opt.amplitude, opt.k, opt.q, law.f(opt.rho_star));
    });
    // Rejects windows that do not hold a whole number of periods.
    config::guarded("eta", [&] { return perceived_density_identity(wave, opt.eta, 0.0, 0.0); });
    const auto dir = prepare_dir(out_dir);
    const auto kernel = KernelSpec::uniform_downstream(opt.eta);

    auto one = [&](std::size_t n) {
        if (n < 3) throw config::ConfigError("n_list", "grid sizes must be at least 3");
        SchemeConfig cfg;
        cfg.n_cells = n;
        cfg.lambda = opt.lambda;
        cfg.horizon = opt.horizon;
        cfg.snapshot_every = opt.snapshot_dt > 0.0
                                 ? static_cast<std::size_t>(std::max(1.0, std::round(opt.snapshot_dt / cfg.time_step())))
                                 : 0;
        const auto ic = sample([&](double x) { return wave_density(wave, 0.0, x); }, n);
        const auto result = ringflow::run(cfg, ic, law, discretize(kernel, n), std::nullopt);
        const auto cmp = compare_to_wave(result, wave);
        io::save((dir / ("wave_" + std::to_string(n) + ".csv")).string(), io::wave_table(cmp));
        WaveRun r;
        r.n = n;
        r.t_final = cmp.rows.back().t;
        r.l2_error = cmp.rows.back().l2_error;
        r.sup_error = cmp.rows.back().sup_error;
        try {
            r.fit = fit_decay_tail(result.series_times(), result.series_l2(), 0.6,
                                   decay_fit_relative_floor * result.series.front().l2);
        } catch (const InvalidInput&) {
        }
        return r;
    };

    std::vector<std::future<WaveRun>> jobs;
    for (const auto n : opt.n_list) jobs.push_back(std::async(std::launch::async, one, n));
    std::vector<WaveRun> runs;
    for (auto& j : jobs) runs.push_back(j.get());

    Summary s;
    s.add("wave_speed", wave.speed);
    for (const auto& r : runs) {
        const auto tag = std::to_string(r.n);
        s.add("n" + tag + ".t", r.t_final);
        s.add("n" + tag + ".l2_error", r.l2_error);
        s.add("n" + tag + ".sup_error", r.sup_error);
        if (r.fit) {
            s.add("n" + tag + ".damping_rate", r.fit->rate);
            s.add("n" + tag + ".damping_r_squared", r.fit->r_squared);
        } else {
            s.add("n" + tag + ".damping_rate", std::string("unavailable"));
        }
    }
    for (std::size_t k = 1; k < runs.size(); ++k) {
        const auto tag = std::to_string(runs[k - 1].n) + "_" + std::to_string(runs[k].n);
        if (runs[k].l2_error > 0.0) {
            s.add("error_ratio_" + tag, runs[k - 1].l2_error / runs[k].l2_error);
        } else {
            s.add("error_ratio_" + tag, std::string("undefined"));
        }
        if (runs[k - 1].fit && runs[k].fit && runs[k - 1].fit->rate != 0.0) {
            s.add("damping_ratio_" + tag, runs[k].fit->rate / runs[k - 1].fit->rate);
        } else {
            s.add("damping_ratio_" + tag, std::string("undefined"));
        }
    }
    if (runs_out) *runs_out = runs;
    return s.text();
}

}  // namespace ringflow::commands
