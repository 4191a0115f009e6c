#include "pendlab/runner.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

#include "pendlab/energy.hpp"

namespace pendlab {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kPi = 3.14159265358979323846;

// JSON has no non-finite numbers; nlohmann silently dumps them as null, make
// that explicit so readers can rely on it.
json fin(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

double eq_phi(EquilibriumSign xi) {
    return xi == EquilibriumSign::plus ? 0.0 : kPi;
}

EquilibriumSign parse_xi(long v) {
    if (v == 1) return EquilibriumSign::plus;
    if (v == -1) return EquilibriumSign::minus;
    throw ConfigError("run.xi must be +1 or -1");
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

const std::vector<std::string>& fit_series_ids() {
    static const std::vector<std::string> ids = {
        "composite", "v_l2", "v_alpha", "v_h2proxy", "v_t",
        "omega",     "gamma", "chi_err", "omega_dot"};
    return ids;
}

json fit_to_json(const DecayFit& f) {
    json j;
    j["series"] = f.series_id;
    j["kappa"] = fin(f.kappa);
    j["amplitude"] = fin(f.amplitude);
    j["t_a"] = fin(f.t_a);
    j["t_b"] = fin(f.t_b);
    j["residual"] = fin(f.residual);
    j["n_samples"] = f.n_samples;
    j["valid"] = f.valid;
    j["well_conditioned"] = f.well_conditioned;
    j["clipped"] = f.clipped;
    j["envelope"] = f.envelope;
    if (!f.diagnostic.empty()) j["diagnostic"] = f.diagnostic;
    return j;
}

DecayFit fit_from_json(const json& j) {
    DecayFit f;
    auto num = [&](const char* k) {
        return j.contains(k) && j[k].is_number() ? j[k].get<double>() : 0.0;
    };
    f.series_id = j.value("series", "");
    f.kappa = num("kappa");
    f.amplitude = num("amplitude");
    f.t_a = num("t_a");
    f.t_b = num("t_b");
    f.residual = num("residual");
    f.n_samples = j.value("n_samples", 0);
    f.valid = j.value("valid", false);
    f.well_conditioned = j.value("well_conditioned", false);
    f.clipped = j.value("clipped", false);
    f.envelope = j.value("envelope", false);
    f.diagnostic = j.value("diagnostic", "");
    return f;
}

json spectrum_to_json(const SpectrumReport& r, const std::string& hash) {
    json j;
    j["config_hash"] = hash;
    j["method"] = r.method;
    j["grid"] = r.grid_id;
    j["xi"] = r.xi;
    j["requested"] = r.requested;
    j["kernel_dim"] = r.kernel_dim;
    j["kernel_range_angle"] = fin(r.kernel_range_angle);
    j["spectral_gap"] = fin(r.spectral_gap);
    j["imag_axis_gap"] = fin(r.imag_axis_gap);
    j["unstable_count"] = r.unstable_count;
    j["sigma_max"] = fin(r.sigma_max);
    j["tol_rank"] = fin(r.tol_rank);
    j["tol_imag"] = fin(r.tol_imag);
    j["zero_tol"] = fin(r.zero_tol);
    json evs = json::array();
    for (const auto& ev : r.eigenvalues)
        evs.push_back({fin(ev.real()), fin(ev.imag())});
    j["eigenvalues"] = evs;
    return j;
}

json fits_to_json(const FitBundle& b, const std::string& hash) {
    json j;
    j["config_hash"] = hash;
    j["energy_threshold"] = fin(b.energy_threshold);
    j["window"] = {fin(b.window_a), fin(b.window_b)};
    json t0;
    t0["found"] = b.transient.found;
    t0["t0"] = fin(b.transient.t0);
    t0["index"] = b.transient.index;
    t0["tail_residual"] = fin(b.transient.tail_residual);
    if (!b.transient.diagnostic.empty()) t0["diagnostic"] = b.transient.diagnostic;
    j["transient"] = t0;
    json fits = json::array();
    for (const auto& f : b.fits) fits.push_back(fit_to_json(f));
    j["fits"] = fits;
    if (b.rvg) {
        json r;
        r["kappa"] = fin(b.rvg->kappa);
        r["gap"] = fin(b.rvg->gap);
        r["ratio"] = fin(b.rvg->ratio);
        r["pass"] = b.rvg->pass;
        j["rate_vs_gap"] = r;
    }
    return j;
}

struct EnergyThreshold {
    double threshold = 0.0;
};

// 1% (by default) of the initial energy above the potential-energy minimum;
// the minimum of -beta^2 chi_1 (or -C beta^2 chi_1) sits at chi_1 = 1.
double t0_threshold(const Trajectory& traj, const ScenarioSetup& s) {
    if (traj.energy.empty()) return 0.0;
    const double shift =
        s.params.beta_sq *
        (s.convention == EnergyConvention::paper ? s.params.c_total : 1.0);
    const double above_min =
        traj.energy.front().kinetic + traj.energy.front().potential + shift;
    return s.t0_energy_frac * std::max(above_min, 0.0);
}

json sei_to_json(const SeiAudit& a) {
    json j;
    j["pass"] = a.pass;
    j["worst_violation"] = fin(a.worst_violation);
    j["tol"] = fin(a.tol);
    j["from_record"] = static_cast<long>(a.from_record);
    j["at_record"] = static_cast<long>(a.at_record);
    return j;
}

json basin_to_json(const BasinCheck& b) {
    json j;
    j["inside"] = b.inside;
    j["lhs"] = fin(b.lhs);
    j["rhs"] = fin(b.rhs);
    return j;
}

void write_json(const std::string& path, const json& j) {
    atomic_write(path, dump(j));
}

json load_json(const std::string& path) {
    return json::parse(read_file(path));
}

}  // namespace

ScenarioSetup parse_scenario(const Config& cfg) {
    ScenarioSetup s;
    s.name = cfg.get_str("scenario", "name", "run");
    s.raw.rho = cfg.get_double("physics", "rho", 1.0);
    s.raw.mu = cfg.get_double("physics", "mu", 1.0);
    s.raw.c_body = cfg.get_double("physics", "c_body", 1.0);
    s.raw.beta_sq = cfg.get_double("physics", "beta_sq", 1.0);
    s.cavity.nx = static_cast<int>(cfg.get_int("grid", "nx", 32));
    s.cavity.ny = static_cast<int>(cfg.get_int("grid", "ny", 32));
    s.cavity.half_width = cfg.get_double("grid", "half_width", 0.5);
    s.cavity.half_height = cfg.get_double("grid", "half_height", 0.5);
    s.cavity.center_x = cfg.get_double("grid", "center_x", 0.0);
    s.cavity.center_y = cfg.get_double("grid", "center_y", 0.0);
    s.xi = parse_xi(cfg.get_int("run", "xi", 1));
    const std::string mode = cfg.get_str("run", "mode", "nonlinear");
    if (mode == "linear")
        s.mode = StepMode::linear;
    else if (mode == "nonlinear")
        s.mode = StepMode::nonlinear;
    else
        throw ConfigError("run.mode must be linear or nonlinear, got '" + mode +
                          "'");
    s.dt = cfg.get_double("run", "dt", 0.01);
    s.horizon = cfg.get_double("run", "horizon", 10.0);
    s.output_stride = static_cast<int>(cfg.get_int("run", "output_stride", 1));
    s.snapshot_stride =
        static_cast<int>(cfg.get_int("run", "snapshot_stride", 0));
    const std::string conv =
        cfg.get_str("run", "energy_convention", "consistent");
    if (conv == "consistent")
        s.convention = EnergyConvention::consistent;
    else if (conv == "paper_scaled")
        s.convention = EnergyConvention::paper;
    else
        throw ConfigError(
            "run.energy_convention must be consistent or paper_scaled");
    s.alpha = cfg.get_double("run", "alpha", 0.75);
    s.spectrum_k = static_cast<int>(cfg.get_int("spectrum", "k", 40));
    s.dense_threshold =
        static_cast<int>(cfg.get_int("spectrum", "dense_threshold", 2000));
    s.arnoldi_shift = cfg.get_double("spectrum", "shift", -0.05);
    s.compute_spectrum = cfg.get_bool("spectrum", "compute", true);
    s.t0_energy_frac = cfg.get_double("fit", "t0_energy_frac", 0.01);
    s.fit_window_start = cfg.get_double("fit", "window_start", -1.0);
    s.fit_window_end = cfg.get_double("fit", "window_end", -1.0);

    if (!(s.dt > 0.0)) throw ConfigError("run.dt must be positive");
    if (!(s.horizon > 0.0)) throw ConfigError("run.horizon must be positive");
    if (s.output_stride < 1) throw ConfigError("run.output_stride must be >= 1");
    if (s.snapshot_stride < 0)
        throw ConfigError("run.snapshot_stride must be >= 0");
    if (s.alpha < 0.0 || s.alpha > 1.0)
        throw ConfigError("run.alpha must lie in [0, 1]");
    if (s.spectrum_k < 1) throw ConfigError("spectrum.k must be >= 1");
    try {
        s.params = derive_params(s.raw, s.cavity, /*allow_zero_density=*/true);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid physics/grid parameters: ") +
                          e.what());
    }
    return s;
}

LabContext::LabContext(const ScenarioSetup& s) : setup(s), ops(s.cavity) {
    if (s.params.rho > 0.0) {
        red = std::make_unique<ReducedSpace>(ops);
        // the Stokes block degenerates to zero in the inviscid limit, so the
        // fractional-power machinery only exists for mu > 0
        if (s.params.mu > 0.0)
            alpha = std::make_unique<AlphaTools>(ops, *red, s.params);
    }
}

FaceField field_from_stream(const StaggeredGrid& g, const Eigen::MatrixXd& psi) {
    const int nx = g.nx();
    const int ny = g.ny();
    if (psi.rows() != nx + 1 || psi.cols() != ny + 1)
        throw std::invalid_argument("field_from_stream: psi must be (nx+1) x (ny+1)");
    const double hx = g.hx();
    const double hy = g.hy();
    FaceField f(nx, ny);
    for (int i = 1; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
            f.u(i, j) = (psi(i, j + 1) - psi(i, j)) / hy;
    for (int i = 0; i < nx; ++i)
        for (int j = 1; j < ny; ++j)
            f.v(i, j) = -(psi(i + 1, j) - psi(i, j)) / hx;
    return f;
}

namespace {

// sin(k pi x^) sin(l pi y^) vertex samples, zero on the boundary ring.
Eigen::MatrixXd mode_psi(const CavityGeometry& c, int k, int l) {
    Eigen::MatrixXd psi(c.nx + 1, c.ny + 1);
    for (int i = 0; i <= c.nx; ++i) {
        const double xh = static_cast<double>(i) / c.nx;
        for (int j = 0; j <= c.ny; ++j) {
            const double yh = static_cast<double>(j) / c.ny;
            psi(i, j) = std::sin(k * kPi * xh) * std::sin(l * kPi * yh);
        }
    }
    return psi;
}

FaceField template_field(const LabContext& ctx, const std::string& shape) {
    const StaggeredGrid& g = ctx.ops.grid();
    if (shape == "zero") return FaceField(g.nx(), g.ny());
    if (shape == "rigid") {
        // rigid rotation projected onto the admissible divergence-free space
        Eigen::VectorXd v_int = ctx.ops.project_int(g.gather(g.rigid_field()));
        return g.scatter(v_int);
    }
    if (shape == "vortex")
        return field_from_stream(g, mode_psi(ctx.setup.cavity, 1, 1));
    throw ConfigError("initial.template must be zero, rigid or vortex, got '" +
                      shape + "'");
}

FaceField random_field(const LabContext& ctx, unsigned long seed) {
    const CavityGeometry& c = ctx.setup.cavity;
    std::mt19937 rng(static_cast<std::mt19937::result_type>(seed));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(c.nx + 1, c.ny + 1);
    for (int k = 1; k <= 4; ++k)
        for (int l = 1; l <= 4; ++l)
            psi += (gauss(rng) / static_cast<double>(k * k + l * l)) *
                   mode_psi(c, k, l);
    return field_from_stream(ctx.ops.grid(), psi);
}

}  // namespace

CoupledState build_initial_state(const LabContext& ctx, const Config& cfg,
                                 std::optional<long> seed_override) {
    const ScenarioSetup& s = ctx.setup;
    const StaggeredGrid& g = ctx.ops.grid();
    const std::string kind = cfg.get_str("initial", "kind", "template");

    FaceField shape;
    if (kind == "template") {
        shape = template_field(ctx, cfg.get_str("initial", "template", "zero"));
    } else if (kind == "random") {
        const long seed =
            seed_override.value_or(cfg.get_int("initial", "seed", 1234));
        shape = random_field(ctx, static_cast<unsigned long>(seed));
    } else {
        throw ConfigError("initial.kind must be template or random, got '" +
                          kind + "'");
    }

    const double shape_l2_sq = g.norm_w_sq(shape);
    const bool have_v = s.params.rho > 0.0 && shape_l2_sq > 0.0;

    // Composite sizing: ||A0^a v0|| : |omega0| : |gamma0| = weights.
    const double amplitude = cfg.get_double("initial", "amplitude", 0.0);
    double wv = cfg.get_double("initial", "weight_v", 1.0);
    double wo = cfg.get_double("initial", "weight_omega", 1.0);
    double wg = cfg.get_double("initial", "weight_gamma", 1.0);
    if (!have_v) wv = 0.0;
    const double wsum = wv + wo + wg;

    double omega0 = 0.0, phi_rel = 0.0;
    FaceField v = shape;
    if (amplitude > 0.0) {
        if (wsum <= 0.0)
            throw ConfigError("initial: all component weights vanish");
        wv /= wsum;
        wo /= wsum;
        wg /= wsum;
        if (wv > 0.0) {
            if (!ctx.alpha)
                throw ConfigError(
                    "initial.amplitude with a velocity part needs rho > 0");
            const double have =
                ctx.alpha->norm_v(g.gather(shape), s.alpha);
            if (have <= 0.0)
                throw ConfigError("initial template velocity is zero; cannot "
                                  "scale to the requested amplitude");
            v = (wv * amplitude / have) * shape;
        } else {
            v.setZero();
        }
        omega0 = wo * amplitude;
        const double gnorm = std::min(wg * amplitude, 2.0);
        phi_rel = 2.0 * std::asin(0.5 * gnorm);
    }

    // Explicit overrides.
    if (cfg.has("initial", "v_energy")) {
        const double target = cfg.get_double("initial", "v_energy");
        if (target < 0.0) throw ConfigError("initial.v_energy must be >= 0");
        if (target > 0.0) {
            if (!have_v)
                throw ConfigError("initial.v_energy needs a nonzero velocity "
                                  "template and rho > 0");
            v = std::sqrt(target / (s.params.rho * shape_l2_sq)) * shape;
        } else {
            v.setZero();
        }
    }
    if (cfg.has("initial", "omega0")) omega0 = cfg.get_double("initial", "omega0");
    if (cfg.has("initial", "phi0")) phi_rel = cfg.get_double("initial", "phi0");

    CoupledState st(g.nx(), g.ny());
    st.v = v;
    st.p = Eigen::VectorXd::Zero(g.n_cells());
    st.omega = omega0;
    st.phi = eq_phi(s.xi) + phi_rel;
    st.gamma = chi_of(st.phi) -
               static_cast<double>(sign_value(s.xi)) * Eigen::Vector2d::UnitX();
    st.t = 0.0;
    return st;
}

const DecayFit* FitBundle::fit(const std::string& series_id) const {
    for (const auto& f : fits)
        if (f.series_id == series_id) return &f;
    return nullptr;
}

FitBundle make_fits(const Trajectory& traj, const ScenarioSetup& setup,
                    const SpectrumReport* spec) {
    FitBundle b;
    b.energy_threshold = t0_threshold(traj, setup);
    b.transient = detect_t0(traj, b.energy_threshold);

    const double t_end =
        traj.records.empty() ? setup.horizon : traj.records.back().t;
    b.window_a = setup.fit_window_start >= 0.0
                     ? setup.fit_window_start
                     : (b.transient.found ? b.transient.t0 : 0.25 * t_end);
    b.window_b = setup.fit_window_end >= 0.0 ? setup.fit_window_end : t_end;

    for (const auto& id : fit_series_ids()) {
        Series ser = series_from_trajectory(traj, setup.params, id);
        b.fits.push_back(
            fit_exponential(ser.t, ser.y, b.window_a, b.window_b, id));
    }
    if (spec && spec->xi == 1 && std::isfinite(spec->spectral_gap) &&
        spec->spectral_gap > 0.0) {
        const DecayFit* comp = b.fit("composite");
        if (comp) b.rvg = rate_vs_gap(*comp, *spec);
    }
    return b;
}

namespace {

json manifest_json(const SimulateResult& r, const ScenarioSetup& s,
                   const Config& cfg, const LabContext& ctx,
                   const std::vector<std::string>& artifacts) {
    json j;
    j["config_hash"] = r.config_hash;
    j["version"] = kLabVersion;
    j["name"] = s.name;
    j["wall_seconds"] = fin(r.wall_seconds);
    j["completed"] = r.traj.meta.completed;
    j["halt_reason"] = r.traj.meta.halt_reason;
    j["scheme"] = r.traj.meta.scheme;
    j["dt"] = fin(s.dt);
    j["horizon"] = fin(s.horizon);
    j["output_stride"] = s.output_stride;
    j["xi"] = sign_value(s.xi);
    j["mode"] = s.mode == StepMode::linear ? "linear" : "nonlinear";
    j["grid"] = {{"nx", s.cavity.nx}, {"ny", s.cavity.ny}};
    j["alpha"] = fin(s.alpha);
    json p;
    p["rho"] = fin(s.params.rho);
    p["mu"] = fin(s.params.mu);
    p["c_body"] = fin(s.params.c_body);
    p["beta_sq"] = fin(s.params.beta_sq);
    p["c_liquid"] = fin(s.params.c_liquid);
    p["c_total"] = fin(s.params.c_total);
    p["pendulum_freq"] = fin(s.params.pendulum_freq());
    j["params"] = p;
    json init;
    init["omega"] = fin(r.initial.omega);
    init["phi"] = fin(r.initial.phi);
    init["gamma"] = {fin(r.initial.gamma.x()), fin(r.initial.gamma.y())};
    init["rho_v2"] =
        fin(s.params.rho * ctx.ops.grid().norm_w_sq(r.initial.v));
    if (ctx.alpha) {
        const double va =
            ctx.alpha->norm_v(ctx.ops.grid().gather(r.initial.v), s.alpha);
        init["v_alpha"] = fin(va);
        init["composite"] = fin(va + std::abs(r.initial.omega) +
                                r.initial.gamma.norm());
    }
    j["initial"] = init;
    j["basin"] = basin_to_json(r.basin);
    j["sei"] = sei_to_json(r.sei);
    j["artifacts"] = artifacts;
    j["config"] = cfg.serialize();
    return j;
}

}  // namespace

SimulateResult run_simulate(const Config& cfg, const std::string& out_dir,
                            std::optional<long> seed_override) {
    SimulateResult r;
    r.out_dir = out_dir;
    r.config_hash = cfg.hash();

    const ScenarioSetup setup = parse_scenario(cfg);
    LabContext ctx(setup);
    r.initial = build_initial_state(ctx, cfg, seed_override);
    r.basin = basin_check(ctx.ops, setup.params, r.initial, setup.convention);

    SimulateOptions opt;
    opt.output_stride = setup.output_stride;
    opt.convention = setup.convention;
    if (ctx.alpha) {
        const AlphaTools* at = ctx.alpha.get();
        const double a = setup.alpha;
        opt.alpha_eval = [at, a](const Eigen::VectorXd& v_int) {
            return at->norm_v(v_int, a);
        };
    }
    std::vector<std::pair<double, FaceField>> snaps;
    if (setup.snapshot_stride > 0) {
        opt.snapshot_stride = setup.snapshot_stride;
        opt.snapshots = &snaps;
    }

    const auto tic = std::chrono::steady_clock::now();
    r.traj = simulate(ctx.ops, setup.params, setup.xi, r.initial, setup.horizon,
                      setup.dt, setup.mode, opt);
    r.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - tic)
            .count();

    r.sei = sei_audit(r.traj.energy, setup.dt * setup.output_stride);

    if (setup.compute_spectrum) {
        SpectrumOptions sopt;
        sopt.dense_threshold = setup.dense_threshold;
        sopt.arnoldi_shift = setup.arnoldi_shift;
        sopt.xi = sign_value(setup.xi);
        sopt.grid_id = std::to_string(setup.cavity.nx) + "x" +
                       std::to_string(setup.cavity.ny);
        const Eigen::MatrixXd L =
            assemble_L(ctx.ops, ctx.red.get(), setup.params, setup.xi);
        r.spec = spectrum(L, setup.spectrum_k, sopt);
    }
    r.fits = make_fits(r.traj, setup, r.spec ? &*r.spec : nullptr);

    fs::create_directories(out_dir);
    std::vector<std::string> artifacts = {"config.ini", "trajectory.csv",
                                          "energy.csv", "fits.json",
                                          "manifest.json"};
    atomic_write(join_path(out_dir, "config.ini"), cfg.serialize());
    atomic_write(join_path(out_dir, "trajectory.csv"),
                 trajectory_csv(r.traj, r.config_hash));
    atomic_write(join_path(out_dir, "energy.csv"),
                 energy_csv(r.traj, r.config_hash));
    if (r.spec) {
        artifacts.push_back("spectrum.json");
        write_json(join_path(out_dir, "spectrum.json"),
                   spectrum_to_json(*r.spec, r.config_hash));
    }
    write_json(join_path(out_dir, "fits.json"),
               fits_to_json(r.fits, r.config_hash));
    if (setup.snapshot_stride > 0) {
        artifacts.push_back("snapshots.bin");
        std::vector<Snapshot> out;
        out.reserve(snaps.size());
        for (auto& [t, v] : snaps) out.push_back({t, std::move(v)});
        atomic_write(
            join_path(out_dir, "snapshots.bin"),
            snapshots_blob(out, setup.cavity.nx, setup.cavity.ny, r.config_hash));
    }
    write_json(join_path(out_dir, "manifest.json"),
               manifest_json(r, setup, cfg, ctx, artifacts));
    return r;
}

SpectrumReport run_spectrum(const Config& cfg, const std::string& out_dir) {
    const ScenarioSetup setup = parse_scenario(cfg);
    LabContext ctx(setup);
    SpectrumOptions sopt;
    sopt.dense_threshold = setup.dense_threshold;
    sopt.arnoldi_shift = setup.arnoldi_shift;
    sopt.xi = sign_value(setup.xi);
    sopt.grid_id = std::to_string(setup.cavity.nx) + "x" +
                   std::to_string(setup.cavity.ny);
    const Eigen::MatrixXd L =
        assemble_L(ctx.ops, ctx.red.get(), setup.params, setup.xi);
    SpectrumReport rep = spectrum(L, setup.spectrum_k, sopt);

    fs::create_directories(out_dir);
    const std::string hash = cfg.hash();
    write_json(join_path(out_dir, "spectrum.json"), spectrum_to_json(rep, hash));
    json man;
    man["config_hash"] = hash;
    man["version"] = kLabVersion;
    man["name"] = setup.name;
    man["artifacts"] = {"spectrum.json", "manifest.json"};
    man["config"] = cfg.serialize();
    write_json(join_path(out_dir, "manifest.json"), man);
    atomic_write(join_path(out_dir, "config.ini"), cfg.serialize());
    return rep;
}

namespace {

std::vector<EnergyRecord> energy_from_csv(const CsvTable& en) {
    auto need = [&](const std::string& name) {
        const int c = en.col(name);
        if (c < 0) throw IoError("energy CSV is missing column '" + name + "'");
        return c;
    };
    const int et = need("t"), ek = need("kinetic"), ep = need("potential"),
              ed = need("dissipation"), ea = need("a"), eE = need("E"),
              eE1 = need("E1"), el = need("lyap_linear");
    std::vector<EnergyRecord> out;
    out.reserve(en.rows.size());
    for (const auto& row : en.rows) {
        EnergyRecord e{};
        e.t = row[et];
        e.kinetic = row[ek];
        e.potential = row[ep];
        e.dissipation = row[ed];
        e.a = row[ea];
        e.E = row[eE];
        e.E1 = row[eE1];
        e.lyap_linear = row[el];
        out.push_back(e);
    }
    return out;
}

Trajectory trajectory_from_csvs(const CsvTable& tr, const CsvTable& en,
                                const ScenarioSetup& setup) {
    Trajectory traj;
    traj.meta.dt = setup.dt;
    traj.meta.horizon = setup.horizon;
    traj.meta.nx = setup.cavity.nx;
    traj.meta.ny = setup.cavity.ny;
    traj.meta.xi = sign_value(setup.xi);
    traj.meta.mode = setup.mode;
    traj.meta.output_stride = setup.output_stride;

    auto need = [](const CsvTable& t, const std::string& name) {
        const int c = t.col(name);
        if (c < 0) throw IoError("CSV is missing column '" + name + "'");
        return c;
    };
    const int ct = need(tr, "t"), co = need(tr, "omega"), cp = need(tr, "phi");
    const int c1 = need(tr, "chi1"), c2 = need(tr, "chi2");
    const int g1 = need(tr, "gamma1"), g2 = need(tr, "gamma2");
    const int vl = need(tr, "v_l2"), va = need(tr, "v_alpha"),
              vh = need(tr, "v_h2proxy");
    for (const auto& row : tr.rows) {
        TrajectoryRecord r{};
        r.t = row[ct];
        r.omega = row[co];
        r.phi = row[cp];
        r.chi1 = row[c1];
        r.chi2 = row[c2];
        r.gamma1 = row[g1];
        r.gamma2 = row[g2];
        r.v_l2 = row[vl];
        r.v_alpha = row[va];
        r.v_h2proxy = row[vh];
        traj.records.push_back(r);
    }
    traj.energy = energy_from_csv(en);
    return traj;
}

}  // namespace

FitBundle run_fit(const std::string& run_dir) {
    const Config cfg = Config::load(join_path(run_dir, "config.ini"));
    const ScenarioSetup setup = parse_scenario(cfg);
    const CsvTable tr = load_csv(join_path(run_dir, "trajectory.csv"));
    const CsvTable en = load_csv(join_path(run_dir, "energy.csv"));
    const Trajectory traj = trajectory_from_csvs(tr, en, setup);

    SpectrumReport spec;
    bool have_spec = false;
    const std::string spath = join_path(run_dir, "spectrum.json");
    if (fs::exists(spath)) {
        const json j = load_json(spath);
        spec.xi = j.value("xi", 0);
        spec.spectral_gap = j.contains("spectral_gap") &&
                                    j["spectral_gap"].is_number()
                                ? j["spectral_gap"].get<double>()
                                : std::numeric_limits<double>::infinity();
        spec.unstable_count = j.value("unstable_count", 0);
        have_spec = true;
    }
    FitBundle b = make_fits(traj, setup, have_spec ? &spec : nullptr);
    write_json(join_path(run_dir, "fits.json"), fits_to_json(b, cfg.hash()));
    return b;
}

AuditResult run_audit(const std::string& run_dir) {
    const Config cfg = Config::load(join_path(run_dir, "config.ini"));
    const ScenarioSetup setup = parse_scenario(cfg);
    const std::vector<EnergyRecord> energy =
        energy_from_csv(load_csv(join_path(run_dir, "energy.csv")));

    AuditResult a;
    a.sei = sei_audit(energy, setup.dt * setup.output_stride);
    const std::string mpath = join_path(run_dir, "manifest.json");
    if (fs::exists(mpath)) {
        const json man = load_json(mpath);
        if (man.contains("basin")) {
            a.basin_known = true;
            a.basin_inside = man["basin"].value("inside", false);
            if (man["basin"].contains("lhs") && man["basin"]["lhs"].is_number())
                a.basin_lhs = man["basin"]["lhs"].get<double>();
            if (man["basin"].contains("rhs") && man["basin"]["rhs"].is_number())
                a.basin_rhs = man["basin"]["rhs"].get<double>();
        }
    }
    a.pass = a.sei.pass;
    json j;
    j["config_hash"] = cfg.hash();
    j["sei"] = sei_to_json(a.sei);
    if (a.basin_known) {
        json b;
        b["inside"] = a.basin_inside;
        b["lhs"] = fin(a.basin_lhs);
        b["rhs"] = fin(a.basin_rhs);
        j["basin"] = b;
    }
    j["pass"] = a.pass;
    write_json(join_path(run_dir, "audit.json"), j);
    return a;
}

ToyRunReport run_toy(const Config& cfg, const std::string& out_dir) {
    ToyRunReport rep;
    rep.preset = cfg.get_str("toy", "preset", "cubic3d");
    const double b_factor = cfg.get_double("toy", "b_factor", 0.9);
    const double horizon = cfg.get_double("toy", "horizon", 40.0);
    const double dt = cfg.get_double("toy", "dt", 1e-3);
    const double epsilon = cfg.get_double("toy", "epsilon", 1.0);
    const int n_samples =
        static_cast<int>(cfg.get_int("toy", "structure_samples", 200));
    const double radius = cfg.get_double("toy", "structure_radius", 0.1);
    const unsigned seed =
        static_cast<unsigned>(cfg.get_int("toy", "seed", 20240917));
    std::vector<double> amps;
    if (cfg.has("toy", "amplitudes"))
        amps = cfg.get_list("toy", "amplitudes");
    else
        amps = {1e-1, 1e-2, 1e-3};

    const ToySystem sys = toy_preset(rep.preset);

    std::vector<Eigen::VectorXd> grid;
    for (const double a : amps) {
        const std::size_t before = grid.size();
        if (sys.mixed_ray.d0.size() == sys.n && sys.mixed_ray.d1.size() == sys.n) {
            Eigen::VectorXd d = sys.mixed_ray.d0 + sys.mixed_ray.d1;
            if (d.norm() > 0.0) grid.push_back(a * d / d.norm());
        }
        if (sys.pure_ray.d1.size() == sys.n)
            grid.push_back(a * sys.pure_ray.d1);
        if (grid.size() == before)
            grid.push_back(a / std::sqrt(double(sys.n)) *
                           Eigen::VectorXd::Ones(sys.n));
    }

    rep.verdict = theorem1_verdict(sys, grid, b_factor, horizon, dt, epsilon);

    if (!rep.verdict.refused) {
        SpectralProjections proj = projections(sys.L);
        rep.structure = verify_structure(sys, proj, n_samples, radius, seed);
        rep.structure_checked = true;
        if (rep.verdict.stable_system && sys.pure_ray.d1.size() == sys.n)
            rep.mild_resid =
                mild_residual(sys, proj, 0.1 * sys.pure_ray.d1, 1.0, dt);
    }
    rep.pass = rep.verdict.pass &&
               (!rep.structure_checked || rep.structure.pass);

    fs::create_directories(out_dir);
    json j;
    j["config_hash"] = cfg.hash();
    j["version"] = kLabVersion;
    j["preset"] = rep.preset;
    json v;
    v["stable_system"] = rep.verdict.stable_system;
    v["gap"] = fin(rep.verdict.gap);
    v["b"] = fin(rep.verdict.b);
    v["pass"] = rep.verdict.pass;
    v["refused"] = rep.verdict.refused;
    if (!rep.verdict.refusal_reason.empty())
        v["refusal_reason"] = rep.verdict.refusal_reason;
    v["kernel_drift_observed"] = rep.verdict.kernel_drift_observed;
    if (!rep.verdict.diagnostic.empty()) v["diagnostic"] = rep.verdict.diagnostic;
    json runs = json::array();
    for (const auto& run : rep.verdict.runs) {
        json rj;
        rj["u0_norm"] = fin(run.u0_norm);
        rj["sup_norm"] = fin(run.sup_norm);
        rj["bounded"] = run.bounded;
        rj["exited_ball"] = run.exited_ball;
        rj["exit_time"] = fin(run.exit_time);
        rj["ubar_drift"] = fin(run.ubar_drift);
        rj["ubar_kernel_resid"] = fin(run.ubar_kernel_resid);
        rj["final_u1_norm"] = fin(run.final_u1_norm);
        rj["u1_fit"] = fit_to_json(run.u1_fit);
        runs.push_back(rj);
    }
    v["runs"] = runs;
    j["verdict"] = v;
    if (rep.structure_checked) {
        json sj;
        sj["lipschitz_max"] = fin(rep.structure.lipschitz_max);
        sj["mixed_slope"] = fin(rep.structure.mixed_slope);
        sj["mixed_expected"] = fin(rep.structure.mixed_expected);
        sj["pure_slope"] = fin(rep.structure.pure_slope);
        sj["pure_expected"] = fin(rep.structure.pure_expected);
        sj["kernel_nl_max"] = fin(rep.structure.kernel_nl_max);
        sj["trivial"] = rep.structure.trivial;
        sj["exponents_ok"] = rep.structure.exponents_ok;
        sj["kernel_equilibria"] = rep.structure.kernel_equilibria;
        sj["pass"] = rep.structure.pass;
        j["structure"] = sj;
        j["mild_residual"] = fin(rep.mild_resid);
    }
    j["pass"] = rep.pass;
    write_json(join_path(out_dir, "toy.json"), j);
    atomic_write(join_path(out_dir, "config.ini"), cfg.serialize());
    return rep;
}

namespace {

void compare_file(const std::string& name, const CsvTable& a, const CsvTable& b,
                  const std::vector<std::string>& filter, CompareReport& rep) {
    if (a.columns != b.columns)
        throw IoError(name + ": column sets differ");
    if (a.rows.size() != b.rows.size())
        throw IoError(name + ": row counts differ (" +
                      std::to_string(a.rows.size()) + " vs " +
                      std::to_string(b.rows.size()) + ")");
    for (std::size_t c = 0; c < a.columns.size(); ++c) {
        const std::string& col = a.columns[c];
        if (!filter.empty() &&
            std::find(filter.begin(), filter.end(), col) == filter.end())
            continue;
        double worst = 0.0;
        for (std::size_t r = 0; r < a.rows.size(); ++r) {
            const double x = a.rows[r][c], y = b.rows[r][c];
            const double d = std::abs(x - y);
            if (d == 0.0) continue;
            const double scale = std::max(std::abs(x), std::abs(y));
            worst = std::max(worst, scale > 0.0
                                        ? d / scale
                                        : std::numeric_limits<double>::infinity());
        }
        rep.columns.push_back({name, col, worst});
        if (worst > rep.max_rel) {
            rep.max_rel = worst;
            rep.worst = name + ":" + col;
        }
    }
}

}  // namespace

CompareReport compare_runs(const std::string& dir_a, const std::string& dir_b,
                           const std::vector<std::string>& columns, double tol) {
    CompareReport rep;
    try {
        compare_file("trajectory",
                     load_csv(join_path(dir_a, "trajectory.csv")),
                     load_csv(join_path(dir_b, "trajectory.csv")), columns, rep);
        compare_file("energy", load_csv(join_path(dir_a, "energy.csv")),
                     load_csv(join_path(dir_b, "energy.csv")), columns, rep);
    } catch (const IoError& e) {
        rep.schema_ok = false;
        rep.diagnostic = e.what();
        return rep;
    }
    rep.schema_ok = true;
    rep.zero_diff = rep.max_rel == 0.0;
    rep.pass = rep.max_rel <= tol;
    return rep;
}

SweepResult run_sweep(const Config& cfg, const std::string& out_dir, int threads,
                      std::optional<long> seed_override) {
    SweepResult res;
    const std::string key = cfg.get_str("sweep", "key");
    const auto dot = key.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == key.size())
        throw ConfigError("sweep.key must look like section.key");
    const std::string section = key.substr(0, dot);
    const std::string field = key.substr(dot + 1);
    res.key = key;

    std::vector<std::string> values;
    {
        const std::string raw = cfg.get_str("sweep", "values");
        std::string cur;
        for (const char ch : raw) {
            if (ch == ',') {
                values.push_back(cur);
                cur.clear();
            } else if (!std::isspace(static_cast<unsigned char>(ch))) {
                cur.push_back(ch);
            }
        }
        if (!cur.empty()) values.push_back(cur);
    }
    if (values.empty()) throw ConfigError("sweep.values is empty");

    const std::string base_name = cfg.get_str("scenario", "name", "run");
    res.entries.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        res.entries[i].value = values[i];
        res.entries[i].dir =
            join_path(out_dir, base_name + "_" + field + "_" + values[i]);
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= values.size()) return;
            SweepEntry& e = res.entries[i];
            try {
                Config c = cfg;
                c.set(section, field, values[i]);
                c.set("scenario", "name",
                      base_name + "_" + field + "_" + values[i]);
                SimulateResult r = run_simulate(c, e.dir, seed_override);
                e.ok = true;
                e.completed = r.traj.meta.completed;
                e.t0_found = r.fits.transient.found;
                e.t0 = r.fits.transient.t0;
                if (!r.traj.energy.empty()) {
                    const auto& e0 = r.traj.energy.front();
                    e.energy0 = e0.kinetic + e0.potential;
                }
            } catch (const std::exception& ex) {
                e.ok = false;
                e.error = ex.what();
            }
        }
    };
    const int n_threads = std::max(
        1, std::min<int>(threads, static_cast<int>(values.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    res.all_ok = std::all_of(res.entries.begin(), res.entries.end(),
                             [](const SweepEntry& e) {
                                 return e.ok && e.completed;
                             });
    fs::create_directories(out_dir);
    json j;
    j["config_hash"] = cfg.hash();
    j["key"] = key;
    j["all_ok"] = res.all_ok;
    json rows = json::array();
    for (const auto& e : res.entries) {
        json rj;
        rj["value"] = e.value;
        rj["dir"] = e.dir;
        rj["ok"] = e.ok;
        rj["completed"] = e.completed;
        rj["t0_found"] = e.t0_found;
        rj["t0"] = fin(e.t0);
        rj["energy0"] = fin(e.energy0);
        if (!e.error.empty()) rj["error"] = e.error;
        rows.push_back(rj);
    }
    j["runs"] = rows;
    write_json(join_path(out_dir, "sweep.json"), j);
    return res;
}

}  // namespace pendlab
