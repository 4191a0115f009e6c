#include "pendlab/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace pendlab {

namespace {

void append_row(std::string& out, const double* vals, int n) {
    for (int i = 0; i < n; ++i) {
        if (i) out += ',';
        out += format_g17(vals[i]);
    }
    out += '\n';
}

}  // namespace

std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path dest(path);
    if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
    const fs::path tmp = dest.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError("short write: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, dest, ec);
    if (ec) throw IoError("rename failed: " + dest.string() + ": " + ec.message());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string trajectory_csv(const Trajectory& traj, const std::string& config_hash) {
    std::string out = "# config_hash=" + config_hash + "\n";
    out += "t,omega,phi,chi1,chi2,gamma1,gamma2,v_l2,v_alpha,v_h2proxy\n";
    for (const auto& r : traj.records) {
        const double vals[] = {r.t,      r.omega,  r.phi,  r.chi1,    r.chi2,
                               r.gamma1, r.gamma2, r.v_l2, r.v_alpha, r.v_h2proxy};
        append_row(out, vals, 10);
    }
    return out;
}

std::string energy_csv(const Trajectory& traj, const std::string& config_hash) {
    std::string out = "# config_hash=" + config_hash + "\n";
    out += "t,kinetic,potential,dissipation,a,E,E1,lyap_linear\n";
    for (const auto& e : traj.energy) {
        const double vals[] = {e.t, e.kinetic, e.potential, e.dissipation,
                               e.a, e.E,       e.E1,        e.lyap_linear};
        append_row(out, vals, 8);
    }
    return out;
}

int CsvTable::col(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
    return -1;
}

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    bool header_done = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string tag = "config_hash=";
            const auto pos = line.find(tag);
            if (pos != std::string::npos)
                table.config_hash = line.substr(pos + tag.size());
            continue;
        }
        std::istringstream row(line);
        std::string tok;
        if (!header_done) {
            while (std::getline(row, tok, ',')) table.columns.push_back(tok);
            header_done = true;
            continue;
        }
        std::vector<double> vals;
        while (std::getline(row, tok, ',')) {
            try {
                vals.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw IoError("bad CSV number: '" + tok + "'");
            }
        }
        if (vals.size() != table.columns.size())
            throw IoError("CSV row width mismatch");
        table.rows.push_back(std::move(vals));
    }
    if (!header_done) throw IoError("CSV has no column header");
    return table;
}

CsvTable load_csv(const std::string& path) { return parse_csv(read_file(path)); }

std::string snapshots_blob(const std::vector<Snapshot>& snaps, int nx, int ny,
                           const std::string& config_hash) {
    std::string out = "plab-snapshots 1\n";
    out += "dtype=f8 endian=little nx=" + std::to_string(nx) +
           " ny=" + std::to_string(ny) +
           " count=" + std::to_string(snaps.size()) + " hash=" + config_hash +
           "\n";
    auto put = [&out](const double* p, std::size_t n) {
        out.append(reinterpret_cast<const char*>(p), n * sizeof(double));
    };
    for (const auto& s : snaps) {
        if (s.v.u.rows() != nx + 1 || s.v.u.cols() != ny ||
            s.v.v.rows() != nx || s.v.v.cols() != ny + 1)
            throw IoError("snapshot dims do not match header");
        put(&s.t, 1);
        put(s.v.u.data(), static_cast<std::size_t>(s.v.u.size()));
        put(s.v.v.data(), static_cast<std::size_t>(s.v.v.size()));
    }
    return out;
}

std::vector<Snapshot> parse_snapshots(const std::string& blob) {
    const auto l1 = blob.find('\n');
    if (l1 == std::string::npos || blob.substr(0, l1) != "plab-snapshots 1")
        throw IoError("not a snapshot blob");
    const auto l2 = blob.find('\n', l1 + 1);
    if (l2 == std::string::npos) throw IoError("snapshot header truncated");
    const std::string meta = blob.substr(l1 + 1, l2 - l1 - 1);
    auto grab = [&meta](const std::string& key) -> std::string {
        const auto pos = meta.find(key + "=");
        if (pos == std::string::npos) throw IoError("snapshot header missing " + key);
        const auto end = meta.find(' ', pos);
        return meta.substr(pos + key.size() + 1,
                           end == std::string::npos ? std::string::npos
                                                    : end - pos - key.size() - 1);
    };
    if (grab("dtype") != "f8" || grab("endian") != "little")
        throw IoError("unsupported snapshot encoding");
    const int nx = std::stoi(grab("nx"));
    const int ny = std::stoi(grab("ny"));
    const long count = std::stol(grab("count"));
    const std::size_t nu = static_cast<std::size_t>(nx + 1) * ny;
    const std::size_t nv = static_cast<std::size_t>(nx) * (ny + 1);
    const std::size_t rec = (1 + nu + nv) * sizeof(double);
    std::size_t off = l2 + 1;
    if (blob.size() - off != rec * static_cast<std::size_t>(count))
        throw IoError("snapshot payload size mismatch");
    std::vector<Snapshot> snaps(count);
    for (long k = 0; k < count; ++k) {
        Snapshot& s = snaps[k];
        std::memcpy(&s.t, blob.data() + off, sizeof(double));
        off += sizeof(double);
        s.v.u.resize(nx + 1, ny);
        s.v.v.resize(nx, ny + 1);
        std::memcpy(s.v.u.data(), blob.data() + off, nu * sizeof(double));
        off += nu * sizeof(double);
        std::memcpy(s.v.v.data(), blob.data() + off, nv * sizeof(double));
        off += nv * sizeof(double);
    }
    return snaps;
}

}  // namespace pendlab
