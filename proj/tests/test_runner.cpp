#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "pendlab/runner.hpp"

using namespace pendlab;
using doctest::Approx;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path tmp_dir(const std::string& leaf) {
    fs::path d = fs::temp_directory_path() / "pendlab_runner_test" / leaf;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

json load_json(const fs::path& p) { return json::parse(read_file(p.string())); }

// Small scenario that exercises every artifact writer but runs in well under
// a second: 8x8 grid, 25 steps, snapshots and spectrum on.
Config tiny_cfg() {
    return Config::parse(
        "[scenario]\n"
        "name = tiny\n"
        "[grid]\n"
        "nx = 8\n"
        "ny = 8\n"
        "[run]\n"
        "dt = 0.02\n"
        "horizon = 0.5\n"
        "output_stride = 2\n"
        "snapshot_stride = 10\n"
        "[spectrum]\n"
        "k = 6\n"
        "[initial]\n"
        "kind = template\n"
        "template = vortex\n"
        "v_energy = 0.01\n"
        "omega0 = 0.1\n");
}

std::string csv_text(const CsvTable& tb) {
    std::string out = "# config_hash=" + tb.config_hash + "\n";
    for (std::size_t c = 0; c < tb.columns.size(); ++c) {
        if (c) out += ",";
        out += tb.columns[c];
    }
    out += "\n";
    for (const auto& row : tb.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ",";
            out += format_g17(row[c]);
        }
        out += "\n";
    }
    return out;
}

}  // namespace

TEST_CASE("scenario parsing fills defaults and derives parameters") {
    const ScenarioSetup s = parse_scenario(Config::parse(""));
    CHECK(s.name == "run");
    CHECK(s.raw.rho == 1.0);
    CHECK(s.raw.mu == 1.0);
    CHECK(s.raw.c_body == 1.0);
    CHECK(s.raw.beta_sq == 1.0);
    CHECK(s.cavity.nx == 32);
    CHECK(s.cavity.ny == 32);
    CHECK(s.cavity.half_width == 0.5);
    CHECK(s.cavity.half_height == 0.5);
    CHECK(s.xi == EquilibriumSign::plus);
    CHECK(s.mode == StepMode::nonlinear);
    CHECK(s.dt == 0.01);
    CHECK(s.horizon == 10.0);
    CHECK(s.output_stride == 1);
    CHECK(s.snapshot_stride == 0);
    CHECK(s.convention == EnergyConvention::consistent);
    CHECK(s.alpha == 0.75);
    CHECK(s.spectrum_k == 40);
    CHECK(s.dense_threshold == 2000);
    CHECK(s.arnoldi_shift == -0.05);
    CHECK(s.compute_spectrum);
    CHECK(s.t0_energy_frac == 0.01);
    CHECK(s.fit_window_start == -1.0);
    CHECK(s.fit_window_end == -1.0);

    CHECK(s.params.rho == 1.0);
    CHECK(s.params.c_liquid > 0.0);
    CHECK(s.params.c_total ==
          Approx(s.params.c_body + s.params.c_liquid).epsilon(1e-14));
    CHECK(s.params.pendulum_freq() ==
          Approx(std::sqrt(s.params.beta_sq / s.params.c_total)).epsilon(1e-14));
}

TEST_CASE("scenario parsing honors explicit settings") {
    const ScenarioSetup s = parse_scenario(Config::parse(
        "[scenario]\nname = probe\n"
        "[physics]\nrho = 4\nmu = 0.1\nbeta_sq = 4\n"
        "[grid]\nnx = 16\nny = 24\n"
        "[run]\nxi = -1\nmode = linear\ndt = 0.005\nhorizon = 2\n"
        "output_stride = 5\nsnapshot_stride = 10\n"
        "energy_convention = paper_scaled\nalpha = 0.5\n"
        "[spectrum]\nk = 12\ndense_threshold = 50\nshift = -0.2\ncompute = no\n"
        "[fit]\nt0_energy_frac = 0.05\nwindow_start = 1\nwindow_end = 2\n"));
    CHECK(s.name == "probe");
    CHECK(s.params.rho == 4.0);
    CHECK(s.params.mu == 0.1);
    CHECK(s.params.beta_sq == 4.0);
    CHECK(s.cavity.nx == 16);
    CHECK(s.cavity.ny == 24);
    CHECK(s.xi == EquilibriumSign::minus);
    CHECK(s.mode == StepMode::linear);
    CHECK(s.dt == 0.005);
    CHECK(s.horizon == 2.0);
    CHECK(s.output_stride == 5);
    CHECK(s.snapshot_stride == 10);
    CHECK(s.convention == EnergyConvention::paper);
    CHECK(s.alpha == 0.5);
    CHECK(s.spectrum_k == 12);
    CHECK(s.dense_threshold == 50);
    CHECK(s.arnoldi_shift == -0.2);
    CHECK_FALSE(s.compute_spectrum);
    CHECK(s.t0_energy_frac == 0.05);
    CHECK(s.fit_window_start == 1.0);
    CHECK(s.fit_window_end == 2.0);

    // zero density is a legal (rigid-pendulum) scenario: the cavity carries
    // no moment and the pendulum keeps only its own inertia
    const ScenarioSetup z = parse_scenario(Config::parse("[physics]\nrho = 0\n"));
    CHECK(z.params.rho == 0.0);
    CHECK(z.params.c_liquid == 0.0);
    CHECK(z.params.c_total == z.params.c_body);
}

TEST_CASE("scenario parsing rejects out-of-range settings") {
    auto bad = [](const std::string& text) {
        CHECK_THROWS_AS(parse_scenario(Config::parse(text)), ConfigError);
    };
    bad("[run]\nxi = 2\n");
    bad("[run]\nxi = 0\n");
    bad("[run]\nmode = rk4\n");
    bad("[run]\nenergy_convention = paper\n");
    bad("[run]\ndt = 0\n");
    bad("[run]\ndt = -0.01\n");
    bad("[run]\nhorizon = 0\n");
    bad("[run]\noutput_stride = 0\n");
    bad("[run]\nsnapshot_stride = -1\n");
    bad("[run]\nalpha = 1.5\n");
    bad("[run]\nalpha = -0.1\n");
    bad("[spectrum]\nk = 0\n");
    bad("[physics]\nrho = -1\n");
    bad("[physics]\nmu = -0.5\n");
    bad("[grid]\nnx = 0\n");
}

TEST_CASE("stream-function fields are discretely divergence-free") {
    const ScenarioSetup s = parse_scenario(Config::parse("[grid]\nnx = 10\nny = 8\n"));
    LabContext ctx(s);
    const StaggeredGrid& g = ctx.ops.grid();

    // arbitrary interior values, zero boundary ring (the contract)
    Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(g.nx() + 1, g.ny() + 1);
    for (int i = 1; i < g.nx(); ++i)
        for (int j = 1; j < g.ny(); ++j)
            psi(i, j) = std::sin(0.37 * i) * std::cos(0.21 * j * j);
    const FaceField f = field_from_stream(g, psi);

    // wall-normal faces untouched
    for (int j = 0; j < g.ny(); ++j) {
        CHECK(f.u(0, j) == 0.0);
        CHECK(f.u(g.nx(), j) == 0.0);
    }
    for (int i = 0; i < g.nx(); ++i) {
        CHECK(f.v(i, 0) == 0.0);
        CHECK(f.v(i, g.ny()) == 0.0);
    }
    const Eigen::VectorXd d = ctx.ops.div() * g.gather(f);
    CHECK(d.lpNorm<Eigen::Infinity>() < 1e-11);

    CHECK_THROWS_AS(field_from_stream(g, Eigen::MatrixXd::Zero(g.nx(), g.ny())),
                    std::invalid_argument);
}

TEST_CASE("initial state: templates and composite sizing") {
    const ScenarioSetup s =
        parse_scenario(Config::parse("[grid]\nnx = 12\nny = 12\n"));
    LabContext ctx(s);
    const StaggeredGrid& g = ctx.ops.grid();

    SUBCASE("zero template at the equilibrium") {
        const CoupledState st = build_initial_state(ctx, Config::parse(""));
        CHECK(g.norm_w_sq(st.v) == 0.0);
        CHECK(st.omega == 0.0);
        CHECK(st.phi == 0.0);
        CHECK(st.gamma.norm() == 0.0);
        CHECK(st.p.size() == 12 * 12);
        CHECK(st.t == 0.0);
    }

    SUBCASE("rigid template lands in the divergence-free space") {
        const CoupledState st = build_initial_state(
            ctx, Config::parse("[initial]\ntemplate = rigid\n"));
        CHECK(g.norm_w_sq(st.v) > 0.0);
        const Eigen::VectorXd x = g.gather(st.v);
        CHECK((ctx.ops.div() * x).lpNorm<Eigen::Infinity>() < 1e-11);
        CHECK((ctx.ops.project_int(x) - x).lpNorm<Eigen::Infinity>() <
              1e-11 * x.lpNorm<Eigen::Infinity>());
    }

    SUBCASE("vortex template is divergence-free") {
        const CoupledState st = build_initial_state(
            ctx, Config::parse("[initial]\ntemplate = vortex\n"));
        CHECK(g.norm_w_sq(st.v) > 0.0);
        CHECK((ctx.ops.div() * g.gather(st.v)).lpNorm<Eigen::Infinity>() < 1e-11);
    }

    SUBCASE("amplitude splits the composite norm by the weights") {
        const double A = 0.3;
        const CoupledState st = build_initial_state(
            ctx, Config::parse("[initial]\ntemplate = vortex\namplitude = 0.3\n"
                               "weight_v = 2\nweight_omega = 1\nweight_gamma = 1\n"));
        const double va = ctx.alpha->norm_v(g.gather(st.v), s.alpha);
        CHECK(va == Approx(0.5 * A).epsilon(1e-10));
        CHECK(st.omega == Approx(0.25 * A).epsilon(1e-12));
        CHECK(st.gamma.norm() == Approx(0.25 * A).epsilon(1e-12));
        // chord length and angle are consistent: |gamma| = 2 sin(phi/2)
        CHECK(st.gamma.norm() ==
              Approx(2.0 * std::sin(0.5 * st.phi)).epsilon(1e-12));
        const double composite = va + std::abs(st.omega) + st.gamma.norm();
        CHECK(composite == Approx(A).epsilon(1e-10));
    }

    SUBCASE("zero density drops the velocity share") {
        const ScenarioSetup s0 = parse_scenario(
            Config::parse("[physics]\nrho = 0\n[grid]\nnx = 12\nny = 12\n"));
        LabContext ctx0(s0);
        const CoupledState st = build_initial_state(
            ctx0, Config::parse("[initial]\ntemplate = vortex\namplitude = 0.3\n"));
        CHECK(g.norm_w_sq(st.v) == 0.0);
        CHECK(st.omega == Approx(0.15).epsilon(1e-12));
        CHECK(st.gamma.norm() == Approx(0.15).epsilon(1e-12));
    }
}

TEST_CASE("initial state: explicit overrides") {
    const ScenarioSetup s =
        parse_scenario(Config::parse("[grid]\nnx = 12\nny = 12\n[run]\nxi = -1\n"));
    LabContext ctx(s);
    const StaggeredGrid& g = ctx.ops.grid();

    const CoupledState st = build_initial_state(
        ctx, Config::parse("[initial]\ntemplate = vortex\nv_energy = 0.25\n"
                           "omega0 = 0.7\nphi0 = 0.2\n"));
    CHECK(s.params.rho * g.norm_w_sq(st.v) == Approx(0.25).epsilon(1e-12));
    CHECK(st.omega == 0.7);
    // phi0 is measured from the inverted equilibrium phi = pi
    CHECK(st.phi == Approx(M_PI + 0.2).epsilon(1e-14));
    const Eigen::Vector2d expect_gamma =
        chi_of(st.phi) + Eigen::Vector2d::UnitX();
    CHECK((st.gamma - expect_gamma).norm() < 1e-15);

    // v_energy = 0 wipes the velocity even for a nonzero template
    const CoupledState z = build_initial_state(
        ctx, Config::parse("[initial]\ntemplate = vortex\nv_energy = 0\n"));
    CHECK(g.norm_w_sq(z.v) == 0.0);
}

TEST_CASE("initial state: random fields are seed-deterministic") {
    const ScenarioSetup s =
        parse_scenario(Config::parse("[grid]\nnx = 12\nny = 12\n"));
    LabContext ctx(s);
    const StaggeredGrid& g = ctx.ops.grid();

    const Config c5 = Config::parse("[initial]\nkind = random\nseed = 5\n");
    const Config c9 = Config::parse("[initial]\nkind = random\nseed = 9\n");
    const CoupledState a = build_initial_state(ctx, c5);
    const CoupledState b = build_initial_state(ctx, c5);
    const CoupledState c = build_initial_state(ctx, c9);
    CHECK((a.v.u - b.v.u).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.v.v - b.v.v).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.v.u - c.v.u).cwiseAbs().maxCoeff() > 0.0);
    CHECK((ctx.ops.div() * g.gather(a.v)).lpNorm<Eigen::Infinity>() < 1e-11);

    // an explicit override beats the configured seed
    const CoupledState d = build_initial_state(ctx, c5, 9L);
    CHECK((d.v.u - c.v.u).cwiseAbs().maxCoeff() == 0.0);
    CHECK((d.v.v - c.v.v).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("initial state: rejected configurations") {
    const ScenarioSetup s =
        parse_scenario(Config::parse("[grid]\nnx = 12\nny = 12\n"));
    LabContext ctx(s);
    auto bad = [&](const std::string& text) {
        CHECK_THROWS_AS(build_initial_state(ctx, Config::parse(text)), ConfigError);
    };
    bad("[initial]\nkind = sobol\n");
    bad("[initial]\ntemplate = square\n");
    bad("[initial]\ntemplate = vortex\namplitude = 0.1\n"
        "weight_v = 0\nweight_omega = 0\nweight_gamma = 0\n");
    bad("[initial]\ntemplate = vortex\nv_energy = -1\n");
    bad("[initial]\nv_energy = 0.1\n");  // zero template cannot carry ||v||

    // a zero template with an amplitude split is not an error: the velocity
    // share is dropped and the weights renormalize onto omega and gamma
    const CoupledState nov =
        build_initial_state(ctx, Config::parse("[initial]\namplitude = 0.1\n"));
    CHECK(nov.v.u.cwiseAbs().maxCoeff() == 0.0);
    CHECK(nov.omega == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(nov.phi == doctest::Approx(2.0 * std::asin(0.025)).epsilon(1e-12));

    // velocity share with no liquid is impossible
    const ScenarioSetup s0 = parse_scenario(
        Config::parse("[physics]\nrho = 0\n[grid]\nnx = 12\nny = 12\n"));
    LabContext ctx0(s0);
    CHECK_THROWS_AS(
        build_initial_state(
            ctx0, Config::parse("[initial]\ntemplate = vortex\nv_energy = 0.1\n")),
        ConfigError);
}

TEST_CASE("fit windows follow the detected transient") {
    // synthetic trajectory: every decaying series is exp(-t), kinetic energy
    // exp(-2t), so the 1% energy threshold is crossed at t = ln(100)/2.
    Trajectory traj;
    const int n = 101;
    const double dt = 0.1;
    for (int i = 0; i < n; ++i) {
        const double t = i * dt;
        const double e = std::exp(-t);
        TrajectoryRecord r{};
        r.t = t;
        r.omega = e;
        r.phi = 0.0;
        r.chi1 = 1.0;
        r.chi2 = 0.0;
        r.gamma1 = e;
        r.gamma2 = 0.0;
        r.v_l2 = e;
        r.v_alpha = e;
        r.v_h2proxy = e;
        traj.records.push_back(r);
        EnergyRecord er{};
        er.t = t;
        er.kinetic = std::exp(-2.0 * t);
        er.potential = -1.0;  // beta_sq = 1, chi1 = 1
        er.E1 = 4.0 * std::exp(-2.0 * t);
        traj.energy.push_back(er);
    }

    const ScenarioSetup setup = parse_scenario(Config::parse(""));

    SUBCASE("window starts at the detected transient time") {
        FitBundle b = make_fits(traj, setup, nullptr);
        CHECK(b.energy_threshold == Approx(0.01).epsilon(1e-12));
        CHECK(b.transient.found);
        // first grid point with exp(-2t) <= 0.01 is t = 2.4
        CHECK(b.transient.t0 == Approx(2.4).epsilon(1e-9));
        CHECK(b.window_a == Approx(2.4).epsilon(1e-9));
        CHECK(b.window_b == Approx(10.0).epsilon(1e-9));
        CHECK(b.fits.size() == 9);
        const DecayFit* comp = b.fit("composite");
        REQUIRE(comp != nullptr);
        CHECK(comp->valid);
        CHECK(comp->kappa == Approx(1.0).epsilon(1e-9));
        CHECK(b.fit("no_such_series") == nullptr);
        CHECK_FALSE(b.rvg.has_value());
    }

    SUBCASE("explicit windows win") {
        const ScenarioSetup s2 = parse_scenario(
            Config::parse("[fit]\nwindow_start = 1.5\nwindow_end = 9\n"));
        FitBundle b = make_fits(traj, s2, nullptr);
        CHECK(b.window_a == 1.5);
        CHECK(b.window_b == 9.0);
        const DecayFit* comp = b.fit("composite");
        REQUIRE(comp != nullptr);
        CHECK(comp->t_a == 1.5);
        CHECK(comp->t_b == 9.0);
    }

    SUBCASE("rate-vs-gap engages only on the stable side") {
        SpectrumReport sp;
        sp.xi = 1;
        sp.spectral_gap = 1.0;
        FitBundle b = make_fits(traj, setup, &sp);
        REQUIRE(b.rvg.has_value());
        CHECK(b.rvg->ratio == Approx(1.0).epsilon(1e-6));
        CHECK(b.rvg->pass);

        sp.xi = -1;
        FitBundle b2 = make_fits(traj, setup, &sp);
        CHECK_FALSE(b2.rvg.has_value());
    }
}

TEST_CASE("simulate pipeline writes a complete, consistent artifact set") {
    const fs::path dir = tmp_dir("runA");
    const Config cfg = tiny_cfg();
    const SimulateResult r = run_simulate(cfg, dir.string());

    CHECK(r.config_hash == cfg.hash());
    CHECK(r.traj.meta.completed);
    CHECK(r.wall_seconds > 0.0);
    CHECK(r.basin.rhs > 0.0);
    CHECK(r.sei.pass);
    REQUIRE(r.spec.has_value());
    CHECK(r.spec->kernel_dim == 1);
    CHECK(r.spec->spectral_gap > 0.0);
    CHECK(r.fits.fits.size() == 9);

    for (const char* name :
         {"config.ini", "trajectory.csv", "energy.csv", "spectrum.json",
          "fits.json", "manifest.json", "snapshots.bin"})
        CHECK(fs::exists(dir / name));

    CHECK(read_file((dir / "config.ini").string()) == cfg.serialize());

    const CsvTable tr = load_csv((dir / "trajectory.csv").string());
    CHECK(tr.config_hash == cfg.hash());
    CHECK(tr.columns.size() == 10);
    CHECK(tr.rows.size() == r.traj.records.size());
    const CsvTable en = load_csv((dir / "energy.csv").string());
    CHECK(en.columns.size() == 8);
    CHECK(en.rows.size() == r.traj.energy.size());

    const auto snaps = parse_snapshots(read_file((dir / "snapshots.bin").string()));
    CHECK(snaps.size() >= 2);
    CHECK(snaps.front().v.nx() == 8);
    CHECK(snaps.front().v.ny() == 8);

    const json man = load_json(dir / "manifest.json");
    CHECK(man["config_hash"] == cfg.hash());
    CHECK(man["version"] == std::string(kLabVersion));
    CHECK(man["name"] == "tiny");
    CHECK(man["completed"] == true);
    CHECK(man["grid"]["nx"] == 8);
    CHECK(man["xi"] == 1);
    CHECK(man["mode"] == "nonlinear");
    CHECK(man["initial"]["rho_v2"].get<double>() == Approx(0.01).epsilon(1e-9));
    CHECK(man["initial"]["omega"].get<double>() == 0.1);
    const auto arts = man["artifacts"].get<std::vector<std::string>>();
    CHECK(std::find(arts.begin(), arts.end(), "snapshots.bin") != arts.end());
    CHECK(std::find(arts.begin(), arts.end(), "spectrum.json") != arts.end());
    CHECK(man["config"] == cfg.serialize());
    CHECK(man["sei"]["pass"] == true);

    const json spec = load_json(dir / "spectrum.json");
    CHECK(spec["config_hash"] == cfg.hash());

    SUBCASE("fit recomputation from the CSVs reproduces the run fits") {
        const FitBundle fb = run_fit(dir.string());
        CHECK(fb.fits.size() == 9);
        CHECK(fb.window_a == Approx(r.fits.window_a).epsilon(1e-12));
        CHECK(fb.window_b == Approx(r.fits.window_b).epsilon(1e-12));
        const DecayFit* a = fb.fit("v_l2");
        const DecayFit* b = r.fits.fit("v_l2");
        REQUIRE(a != nullptr);
        REQUIRE(b != nullptr);
        CHECK(a->valid == b->valid);
        if (b->valid) CHECK(a->kappa == Approx(b->kappa).epsilon(1e-9));
        CHECK(fb.rvg.has_value() == r.fits.rvg.has_value());
        CHECK(fs::exists(dir / "fits.json"));
        CHECK(load_json(dir / "fits.json")["config_hash"] == cfg.hash());
    }

    SUBCASE("energy re-audit agrees with the in-memory audit") {
        const AuditResult a = run_audit(dir.string());
        CHECK(a.pass == r.sei.pass);
        CHECK(a.sei.worst_violation ==
              Approx(r.sei.worst_violation).epsilon(1e-12));
        CHECK(a.basin_known);
        CHECK(a.basin_lhs == Approx(r.basin.lhs).epsilon(1e-12));
        CHECK(a.basin_rhs == Approx(r.basin.rhs).epsilon(1e-12));
        const json audit = load_json(dir / "audit.json");
        CHECK(audit["pass"] == a.pass);
    }
}

TEST_CASE("identical reruns compare clean; perturbations are pinpointed") {
    const fs::path da = tmp_dir("cmpA");
    const fs::path db = tmp_dir("cmpB");
    const Config cfg = tiny_cfg();
    run_simulate(cfg, da.string());
    run_simulate(cfg, db.string());

    CompareReport same = compare_runs(da.string(), db.string(), {}, 0.0);
    CHECK(same.schema_ok);
    CHECK(same.zero_diff);
    CHECK(same.pass);
    CHECK(same.max_rel == 0.0);
    CHECK(same.columns.size() == 18);  // 10 trajectory + 8 energy

    // poke one omega sample and the diff lands on exactly that column
    CsvTable tb = load_csv((db / "trajectory.csv").string());
    const int co = tb.col("omega");
    REQUIRE(co >= 0);
    REQUIRE(tb.rows.size() > 1);
    tb.rows[0][co] += 1e-4;
    atomic_write((db / "trajectory.csv").string(), csv_text(tb));

    CompareReport diff = compare_runs(da.string(), db.string(), {}, 1e-2);
    CHECK(diff.schema_ok);
    CHECK_FALSE(diff.zero_diff);
    CHECK(diff.worst == "trajectory:omega");
    CHECK(diff.max_rel > 1e-4);
    CHECK(diff.max_rel < 1e-2);
    CHECK(diff.pass);
    CHECK_FALSE(compare_runs(da.string(), db.string(), {}, 1e-5).pass);

    // a column filter that skips the poked column sees no difference
    CompareReport onlyt =
        compare_runs(da.string(), db.string(), {"t"}, 0.0);
    CHECK(onlyt.zero_diff);
    CHECK(onlyt.columns.size() == 2);

    // schema mismatches are rejected, not silently compared
    const fs::path dc = tmp_dir("cmpC");
    Config stretched = cfg;
    stretched.set("run", "output_stride", "1");
    run_simulate(stretched, dc.string());
    CompareReport schema = compare_runs(da.string(), dc.string(), {}, 1.0);
    CHECK_FALSE(schema.schema_ok);
    CHECK(schema.diagnostic.find("row counts differ") != std::string::npos);

    CompareReport missing =
        compare_runs(da.string(), (db / "nope").string(), {}, 1.0);
    CHECK_FALSE(missing.schema_ok);
    CHECK_FALSE(missing.pass);
}

TEST_CASE("parameter sweep fans out into per-value run directories") {
    Config cfg = Config::parse(
        "[scenario]\nname = mini\n"
        "[grid]\nnx = 8\nny = 8\n"
        "[run]\ndt = 0.01\nhorizon = 0.2\n"
        "[spectrum]\ncompute = no\n"
        "[initial]\nomega0 = 0.05\n"
        "[sweep]\nkey = run.dt\nvalues = 0.01, 0.005\n");

    const fs::path out = tmp_dir("sweep");
    const SweepResult res = run_sweep(cfg, out.string(), 1, {});
    CHECK(res.key == "run.dt");
    REQUIRE(res.entries.size() == 2);
    CHECK(res.all_ok);
    CHECK(res.entries[0].value == "0.01");
    CHECK(res.entries[1].value == "0.005");
    for (const auto& e : res.entries) {
        CHECK(e.ok);
        CHECK(e.completed);
        CHECK(fs::exists(fs::path(e.dir) / "manifest.json"));
    }
    // both runs start from the same state, so the initial energy agrees
    CHECK(res.entries[0].energy0 ==
          Approx(res.entries[1].energy0).epsilon(1e-12));

    const json sj = load_json(out / "sweep.json");
    CHECK(sj["all_ok"] == true);
    CHECK(sj["key"] == "run.dt");
    CHECK(sj["runs"].size() == 2);

    // per-entry failures are captured, not thrown
    Config broken = cfg;
    broken.set("sweep", "values", ",");
    const SweepResult bad = run_sweep(broken, tmp_dir("sweep_bad").string(), 1, {});
    REQUIRE(bad.entries.size() == 1);
    CHECK_FALSE(bad.entries[0].ok);
    CHECK_FALSE(bad.entries[0].error.empty());
    CHECK_FALSE(bad.all_ok);

    // malformed sweep sections are rejected up front
    Config nodot = cfg;
    nodot.set("sweep", "key", "dt");
    CHECK_THROWS_AS(run_sweep(nodot, tmp_dir("sweep_k").string(), 1, {}),
                    ConfigError);
    Config empty = cfg;
    empty.set("sweep", "values", "");
    CHECK_THROWS_AS(run_sweep(empty, tmp_dir("sweep_v").string(), 1, {}),
                    ConfigError);

    // the thread fan-out gives the same results
    const SweepResult threaded =
        run_sweep(cfg, tmp_dir("sweep_mt").string(), 2, {});
    CHECK(threaded.all_ok);
    CHECK(compare_runs(res.entries[0].dir, threaded.entries[0].dir, {}, 0.0)
              .zero_diff);
}

TEST_CASE("finite-dimensional pipeline: verdicts, structure, artifacts") {
    const fs::path dir = tmp_dir("toy");
    const Config cfg = Config::parse("[toy]\npreset = cubic3d\n");
    const ToyRunReport rep = run_toy(cfg, dir.string());
    CHECK(rep.preset == "cubic3d");
    CHECK(rep.verdict.stable_system);
    CHECK(rep.verdict.pass);
    CHECK(rep.structure_checked);
    CHECK(rep.structure.pass);
    CHECK(rep.mild_resid < 1e-8);
    CHECK(rep.pass);

    const json tj = load_json(dir / "toy.json");
    CHECK(tj["pass"] == true);
    CHECK(tj["preset"] == "cubic3d");
    // default amplitudes (3) with both rays populated: 6 runs
    CHECK(tj["verdict"]["runs"].size() == 6);
    CHECK(tj["structure"]["pass"] == true);
    CHECK(fs::exists(dir / "config.ini"));

    const fs::path jdir = tmp_dir("toy_jordan");
    const ToyRunReport jd = run_toy(
        Config::parse("[toy]\npreset = jordan2d\nhorizon = 5\n"), jdir.string());
    CHECK(jd.verdict.refused);
    CHECK_FALSE(jd.structure_checked);
    CHECK(jd.pass);
    const json jj = load_json(jdir / "toy.json");
    CHECK(jj["verdict"]["refused"] == true);
    CHECK_FALSE(jj["verdict"]["refusal_reason"].get<std::string>().empty());
}
