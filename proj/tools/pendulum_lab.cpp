// Command-line front end: simulate | spectrum | fit | audit | toy | compare |
// sweep. Exit codes: 0 ok, 2 configuration error, 3 solver/runtime failure,
// 4 verdict failure.
#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "pendlab/runner.hpp"

using namespace pendlab;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kSolverError = 3;
constexpr int kVerdictError = 4;

Config load_config(const std::string& path) { return Config::load(path); }

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 std::optional<long> seed) {
    const Config cfg = load_config(config_path);
    const SimulateResult r = run_simulate(cfg, out_dir, seed);
    std::printf("run %s -> %s\n", r.config_hash.c_str(), r.out_dir.c_str());
    std::printf("  records=%zu completed=%s wall=%.2fs\n", r.traj.records.size(),
                r.traj.meta.completed ? "yes" : "no", r.wall_seconds);
    if (r.spec)
        std::printf("  spectrum: kernel_dim=%d unstable=%d gap=%.6g\n",
                    r.spec->kernel_dim, r.spec->unstable_count,
                    r.spec->spectral_gap);
    std::printf("  basin: inside=%s lhs=%.6g rhs=%.6g\n",
                r.basin.inside ? "yes" : "no", r.basin.lhs, r.basin.rhs);
    std::printf("  sei: pass=%s worst=%.3g tol=%.3g\n",
                r.sei.pass ? "yes" : "no", r.sei.worst_violation, r.sei.tol);
    if (r.fits.transient.found)
        std::printf("  t0=%.6g\n", r.fits.transient.t0);
    if (!r.traj.meta.completed) {
        std::fprintf(stderr, "solver halt: %s\n",
                     r.traj.meta.halt_reason.c_str());
        return kSolverError;
    }
    return kOk;
}

int cmd_spectrum(const std::string& config_path, const std::string& out_dir) {
    const Config cfg = load_config(config_path);
    const SpectrumReport rep = run_spectrum(cfg, out_dir);
    std::printf("spectrum (%s, xi=%+d, %s): kernel_dim=%d unstable=%d "
                "gap=%.6g angle=%.6g\n",
                rep.method.c_str(), rep.xi, rep.grid_id.c_str(), rep.kernel_dim,
                rep.unstable_count, rep.spectral_gap, rep.kernel_range_angle);
    const std::size_t show = std::min<std::size_t>(rep.eigenvalues.size(), 8);
    for (std::size_t i = 0; i < show; ++i)
        std::printf("  %+.9e  %+.9e i\n", rep.eigenvalues[i].real(),
                    rep.eigenvalues[i].imag());
    return kOk;
}

int cmd_fit(const std::string& run_dir) {
    const FitBundle b = run_fit(run_dir);
    std::printf("fits over [%.4g, %.4g], t0 %s\n", b.window_a, b.window_b,
                b.transient.found ? "found" : "not found");
    for (const auto& f : b.fits)
        std::printf("  %-10s kappa=%+.6g residual=%.3g%s\n",
                    f.series_id.c_str(), f.kappa, f.residual,
                    f.valid ? "" : " (invalid)");
    if (b.rvg)
        std::printf("  rate/gap = %.4g (%s)\n", b.rvg->ratio,
                    b.rvg->pass ? "pass" : "fail");
    return kOk;
}

int cmd_audit(const std::string& run_dir) {
    const AuditResult a = run_audit(run_dir);
    std::printf("sei: pass=%s worst=%.3g tol=%.3g\n", a.sei.pass ? "yes" : "no",
                a.sei.worst_violation, a.sei.tol);
    if (a.basin_known)
        std::printf("basin: inside=%s lhs=%.6g rhs=%.6g\n",
                    a.basin_inside ? "yes" : "no", a.basin_lhs, a.basin_rhs);
    return a.pass ? kOk : kVerdictError;
}

int cmd_toy(const std::string& config_path, const std::string& out_dir) {
    const Config cfg = load_config(config_path);
    const ToyRunReport rep = run_toy(cfg, out_dir);
    std::printf("toy %s: %s (gap=%.4g, b=%.4g)\n", rep.preset.c_str(),
                rep.verdict.refused
                    ? "refused"
                    : (rep.verdict.stable_system ? "stable" : "unstable"),
                rep.verdict.gap, rep.verdict.b);
    if (rep.verdict.refused)
        std::printf("  reason: %s\n", rep.verdict.refusal_reason.c_str());
    if (rep.structure_checked)
        std::printf("  structure: slopes %.3g/%.3g (mixed), %.3g/%.3g (pure), "
                    "pass=%s\n",
                    rep.structure.mixed_slope, rep.structure.mixed_expected,
                    rep.structure.pure_slope, rep.structure.pure_expected,
                    rep.structure.pass ? "yes" : "no");
    std::printf("  verdict: %s\n", rep.pass ? "pass" : "fail");
    return rep.pass ? kOk : kVerdictError;
}

int cmd_compare(const std::string& dir_a, const std::string& dir_b,
                const std::string& columns_csv, double tol) {
    std::vector<std::string> columns;
    std::string cur;
    for (const char ch : columns_csv) {
        if (ch == ',') {
            if (!cur.empty()) columns.push_back(cur);
            cur.clear();
        } else if (ch != ' ') {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) columns.push_back(cur);

    const CompareReport rep = compare_runs(dir_a, dir_b, columns, tol);
    if (!rep.schema_ok) {
        std::fprintf(stderr, "schema mismatch: %s\n", rep.diagnostic.c_str());
        return kVerdictError;
    }
    for (const auto& c : rep.columns)
        std::printf("  %-10s %-12s max_rel=%.3g\n", c.file.c_str(),
                    c.column.c_str(), c.max_rel);
    std::printf("max_rel=%.6g (%s) zero_diff=%s => %s\n", rep.max_rel,
                rep.worst.empty() ? "-" : rep.worst.c_str(),
                rep.zero_diff ? "yes" : "no", rep.pass ? "pass" : "fail");
    return rep.pass ? kOk : kVerdictError;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir,
              int threads, std::optional<long> seed) {
    const Config cfg = load_config(config_path);
    const SweepResult res = run_sweep(cfg, out_dir, threads, seed);
    for (const auto& e : res.entries) {
        if (e.ok)
            std::printf("  %s=%-10s t0=%-10.6g dir=%s\n", res.key.c_str(),
                        e.value.c_str(), e.t0_found ? e.t0 : -1.0,
                        e.dir.c_str());
        else
            std::printf("  %s=%-10s FAILED: %s\n", res.key.c_str(),
                        e.value.c_str(), e.error.c_str());
    }
    return res.all_ok ? kOk : kSolverError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pendulum-with-liquid-cavity numerical laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    std::string run_dir, dir_a, dir_b, columns;
    long seed_val = 0;
    bool seed_set = false;
    int threads = 1;
    double tol = 0.0;

    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "scenario config file")
            ->required();
        sub->add_option("--out", out_dir, "output directory");
    };

    CLI::App* sim = app.add_subcommand("simulate", "integrate a scenario");
    add_config(sim);
    sim->add_option("--seed", seed_val, "override the initial-data RNG seed")
        ->each([&](const std::string&) { seed_set = true; });

    CLI::App* spec = app.add_subcommand("spectrum", "linearization spectrum");
    add_config(spec);

    CLI::App* fit = app.add_subcommand("fit", "recompute decay fits of a run");
    fit->add_option("run_dir", run_dir, "finished run directory")->required();

    CLI::App* audit =
        app.add_subcommand("audit", "energy-inequality audit of a run");
    audit->add_option("run_dir", run_dir, "finished run directory")->required();

    CLI::App* toy = app.add_subcommand("toy", "finite-dimensional model checks");
    add_config(toy);

    CLI::App* cmp = app.add_subcommand("compare", "diff two run directories");
    cmp->add_option("dir_a", dir_a)->required();
    cmp->add_option("dir_b", dir_b)->required();
    cmp->add_option("--columns", columns, "comma-separated column filter");
    cmp->add_option("--tol", tol, "max relative deviation allowed");

    CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep");
    add_config(sweep);
    sweep->add_option("--threads", threads, "concurrent runs");
    sweep->add_option("--seed", seed_val, "override the initial-data RNG seed")
        ->each([&](const std::string&) { seed_set = true; });

    CLI11_PARSE(app, argc, argv);
    const std::optional<long> seed =
        seed_set ? std::optional<long>(seed_val) : std::nullopt;

    try {
        if (sim->parsed()) return cmd_simulate(config_path, out_dir, seed);
        if (spec->parsed()) return cmd_spectrum(config_path, out_dir);
        if (fit->parsed()) return cmd_fit(run_dir);
        if (audit->parsed()) return cmd_audit(run_dir);
        if (toy->parsed()) return cmd_toy(config_path, out_dir);
        if (cmp->parsed()) return cmd_compare(dir_a, dir_b, columns, tol);
        if (sweep->parsed()) return cmd_sweep(config_path, out_dir, threads, seed);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const CflError& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return kSolverError;
    } catch (const SolverError& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return kSolverError;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io failure: %s\n", e.what());
        return kSolverError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kSolverError;
    }
    return kOk;
}
