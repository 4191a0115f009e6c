#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pendlab/config.hpp"
#include "pendlab/decay.hpp"
#include "pendlab/dynamics.hpp"
#include "pendlab/io.hpp"
#include "pendlab/spectral.hpp"
#include "pendlab/toy.hpp"

namespace pendlab {

inline constexpr const char* kLabVersion = "1.0.0";

// Everything a scenario config pins down, validated and with defaults filled.
// Sections: [scenario] name; [physics] rho mu c_body beta_sq; [grid] nx ny
// half_width half_height; [run] xi mode dt horizon output_stride
// snapshot_stride energy_convention alpha; [spectrum] k dense_threshold shift
// compute; [fit] t0_energy_frac window_start window_end; [initial] (consumed
// by build_initial_state).
struct ScenarioSetup {
    std::string name = "run";
    RawParams raw;
    CavityGeometry cavity;
    PhysicalParams params;
    EquilibriumSign xi = EquilibriumSign::plus;
    StepMode mode = StepMode::nonlinear;
    double dt = 0.01;
    double horizon = 10.0;
    int output_stride = 1;
    int snapshot_stride = 0;
    EnergyConvention convention = EnergyConvention::consistent;
    double alpha = 0.75;
    int spectrum_k = 40;
    int dense_threshold = 2000;
    double arnoldi_shift = -0.05;
    bool compute_spectrum = true;
    double t0_energy_frac = 0.01;
    double fit_window_start = -1.0;  // < 0: start at detected t0 (or horizon/4)
    double fit_window_end = -1.0;    // < 0: end of trajectory
};

ScenarioSetup parse_scenario(const Config& cfg);

// Heavy per-grid machinery, built once per scenario. The reduced space and
// fractional-power tools exist only for rho > 0.
struct LabContext {
    explicit LabContext(const ScenarioSetup& s);
    ScenarioSetup setup;
    DiscreteOperators ops;
    std::unique_ptr<ReducedSpace> red;
    std::unique_ptr<AlphaTools> alpha;
};

// Divergence-free interior velocity from a stream function given on grid
// vertices ((nx+1) x (ny+1), zero on the boundary ring): u = d(psi)/dy,
// v = -d(psi)/dx by face differences. The discrete divergence vanishes
// identically and wall-normal faces stay zero.
FaceField field_from_stream(const StaggeredGrid& g, const Eigen::MatrixXd& psi);

// Initial state from the [initial] section:
//   kind     = template | random            (default template)
//   template = zero | rigid | vortex        (default zero)
//   amplitude + weight_v/weight_omega/weight_gamma — composite-norm sizing:
//       ||A0^a v0|| : |omega0| : |gamma0| split by the (normalized) weights
//   omega0, phi0 — explicit overrides (phi0 measured from the xi-equilibrium)
//   v_energy     — explicit target for rho ||v0||^2 (overrides the v split)
//   seed         — RNG seed for kind = random (low-mode stream function)
CoupledState build_initial_state(const LabContext& ctx, const Config& cfg,
                                 std::optional<long> seed_override = {});

struct FitBundle {
    TransientReport transient;
    double energy_threshold = 0.0;
    double window_a = 0.0, window_b = 0.0;
    std::vector<DecayFit> fits;
    std::optional<RateVsGap> rvg;
    const DecayFit* fit(const std::string& series_id) const;  // null when absent
};

FitBundle make_fits(const Trajectory& traj, const ScenarioSetup& setup,
                    const SpectrumReport* spec);

struct SimulateResult {
    std::string out_dir;
    std::string config_hash;
    Trajectory traj;
    std::optional<SpectrumReport> spec;
    FitBundle fits;
    BasinCheck basin;
    SeiAudit sei;
    CoupledState initial;
    double wall_seconds = 0.0;
};

// Full pipeline: build, integrate, analyze, and write the artifact set
// (config.ini, trajectory.csv, energy.csv, spectrum.json, fits.json,
// manifest.json, optional snapshots.bin) into out_dir.
SimulateResult run_simulate(const Config& cfg, const std::string& out_dir,
                            std::optional<long> seed_override = {});

// Spectrum only; writes spectrum.json + manifest.json.
SpectrumReport run_spectrum(const Config& cfg, const std::string& out_dir);

// Recompute the decay fits of a finished run directory from its CSVs and
// rewrite fits.json there.
FitBundle run_fit(const std::string& run_dir);

struct AuditResult {
    SeiAudit sei;
    bool basin_known = false;
    bool basin_inside = false;
    double basin_lhs = 0.0, basin_rhs = 0.0;
    bool pass = false;
};

// Re-audit the strong energy inequality from a run directory's energy.csv.
AuditResult run_audit(const std::string& run_dir);

struct ToyRunReport {
    std::string preset;
    ToyVerdict verdict;
    bool structure_checked = false;
    StructureReport structure;
    double mild_resid = 0.0;
    bool pass = false;
};

// Toy-model pipeline from the [toy] section: preset, amplitudes, horizon, dt,
// b_factor, epsilon, structure_samples, structure_radius, seed.
ToyRunReport run_toy(const Config& cfg, const std::string& out_dir);

struct ColumnDiff {
    std::string file;    // "trajectory" or "energy"
    std::string column;
    double max_rel = 0.0;
};
struct CompareReport {
    bool schema_ok = false;
    bool zero_diff = false;
    bool pass = false;
    double max_rel = 0.0;
    std::string worst;  // "file:column" of the largest deviation
    std::vector<ColumnDiff> columns;
    std::string diagnostic;
};

// Column-wise maximum relative deviation between the CSV artifacts of two run
// directories. Schema mismatches (columns or row counts) are rejected.
CompareReport compare_runs(const std::string& dir_a, const std::string& dir_b,
                           const std::vector<std::string>& columns, double tol);

struct SweepEntry {
    std::string value;
    std::string dir;
    bool ok = false;
    bool completed = false;
    bool t0_found = false;
    double t0 = 0.0;
    double energy0 = 0.0;
    std::string error;
};
struct SweepResult {
    std::string key;
    std::vector<SweepEntry> entries;
    bool all_ok = false;
};

// [sweep] key = section.key, values = comma list. Each value runs the full
// simulate pipeline into out_dir/<name>_<value>, optionally across threads.
SweepResult run_sweep(const Config& cfg, const std::string& out_dir, int threads,
                      std::optional<long> seed_override = {});

}  // namespace pendlab
