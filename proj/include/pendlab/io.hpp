#pragma once

#include <string>
#include <vector>

#include "pendlab/dynamics.hpp"

namespace pendlab {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Write-temp-rename; the destination never holds a partial file.
void atomic_write(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// Scalar trajectory CSV. First line "# config_hash=<hash>", then the fixed
// column header, then one row per record with 17-significant-digit floats.
//   trajectory: t, omega, phi, chi1, chi2, gamma1, gamma2, v_l2, v_alpha, v_h2proxy
//   energy:     t, kinetic, potential, dissipation, a, E, E1, lyap_linear
std::string trajectory_csv(const Trajectory& traj, const std::string& config_hash);
std::string energy_csv(const Trajectory& traj, const std::string& config_hash);

// Parsed CSV artifact (header hash, column names, numeric rows).
struct CsvTable {
    std::string config_hash;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    int col(const std::string& name) const;  // -1 when absent
};
CsvTable parse_csv(const std::string& text);
CsvTable load_csv(const std::string& path);

// Velocity snapshots, flat binary with a self-describing ASCII header:
//   line 1: "plab-snapshots 1"
//   line 2: "dtype=f8 endian=little nx=<nx> ny=<ny> count=<k> hash=<hash>"
// then per snapshot: t (f8), u ((nx+1)*ny f8, column-major), v (nx*(ny+1) f8).
struct Snapshot {
    double t = 0.0;
    FaceField v;
};
std::string snapshots_blob(const std::vector<Snapshot>& snaps, int nx, int ny,
                           const std::string& config_hash);
std::vector<Snapshot> parse_snapshots(const std::string& blob);

std::string format_g17(double x);

}  // namespace pendlab
