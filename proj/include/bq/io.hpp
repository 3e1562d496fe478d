#ifndef BQ_IO_HPP
#define BQ_IO_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "bq/solver.hpp"

namespace bq {

// Snapshot container: named scalar fields on one grid at one time.
struct SnapshotFile {
    Grid3 grid;
    double t = 0.0;
    std::vector<std::pair<std::string, ScalarField>> fields;

    const ScalarField* find(const std::string& name) const {
        for (const auto& [n, f] : fields)
            if (n == name) return &f;
        return nullptr;
    }
};

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}
inline void write_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), 8);
}
inline std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
inline double read_f64(std::istream& in) {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

}  // namespace detail

// Layout: magic "BQSNAP01", u32 n, f64 L, f64 t, u32 field count, then per
// field a 16-byte ASCII name (NUL padded) and n^3 f64 values, x fastest.
// Little-endian host assumed (checked at runtime).
inline void write_snapshot_file(const std::string& path, const SnapshotFile& snap) {
    static_assert(sizeof(double) == 8);
    const std::uint32_t probe = 1;
    detail::require(*reinterpret_cast<const std::uint8_t*>(&probe) == 1,
                    "snapshot format requires a little-endian host");
    std::ofstream out(path, std::ios::binary);
    detail::require(static_cast<bool>(out), "write_snapshot: cannot open " + path);
    out.write("BQSNAP01", 8);
    detail::write_u32(out, static_cast<std::uint32_t>(snap.grid.n));
    detail::write_f64(out, snap.grid.L);
    detail::write_f64(out, snap.t);
    detail::write_u32(out, static_cast<std::uint32_t>(snap.fields.size()));
    for (const auto& [name, f] : snap.fields) {
        detail::require(name.size() <= 16, "write_snapshot: field name too long");
        char buf[16] = {0};
        std::memcpy(buf, name.data(), name.size());
        out.write(buf, 16);
        out.write(reinterpret_cast<const char*>(f.data()),
                  static_cast<std::streamsize>(f.size() * 8));
    }
    detail::require(static_cast<bool>(out), "write_snapshot: write failed for " + path);
}

inline SnapshotFile read_snapshot_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    detail::require(static_cast<bool>(in), "read_snapshot: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    detail::require(in && std::memcmp(magic, "BQSNAP01", 8) == 0,
                    "read_snapshot: bad magic in " + path);
    SnapshotFile snap;
    const std::uint32_t n = detail::read_u32(in);
    const double L = detail::read_f64(in);
    snap.grid = Grid3(static_cast<int>(n), L);
    snap.t = detail::read_f64(in);
    const std::uint32_t count = detail::read_u32(in);
    for (std::uint32_t i = 0; i < count; ++i) {
        char buf[17] = {0};
        in.read(buf, 16);
        ScalarField f(snap.grid);
        in.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(f.size() * 8));
        detail::require(static_cast<bool>(in), "read_snapshot: truncated file " + path);
        snap.fields.emplace_back(std::string(buf), std::move(f));
    }
    return snap;
}

inline void write_state_snapshot(const std::string& path, double t, const VectorField& u,
                                 const ScalarField& theta) {
    SnapshotFile s;
    s.grid = u.grid();
    s.t = t;
    s.fields.emplace_back("ux", u.comp(0));
    s.fields.emplace_back("uy", u.comp(1));
    s.fields.emplace_back("uz", u.comp(2));
    s.fields.emplace_back("theta", theta);
    write_snapshot_file(path, s);
}

inline std::pair<VectorField, ScalarField> read_state_snapshot(const std::string& path,
                                                               double* t = nullptr) {
    SnapshotFile s = read_snapshot_file(path);
    const ScalarField* ux = s.find("ux");
    const ScalarField* uy = s.find("uy");
    const ScalarField* uz = s.find("uz");
    const ScalarField* th = s.find("theta");
    detail::require(ux && uy && uz && th, "read_snapshot: missing state fields in " + path);
    VectorField u(s.grid);
    u.comp(0) = *ux;
    u.comp(1) = *uy;
    u.comp(2) = *uz;
    if (t) *t = s.t;
    return {std::move(u), *th};
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Shortest round-trippable decimal form; '.' decimal point, '\n' endings.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
        detail::require(static_cast<bool>(out_), "CsvWriter: cannot open " + path);
    }
    void header(const std::vector<std::string>& cols) {
        for (std::size_t i = 0; i < cols.size(); ++i)
            out_ << (i ? "," : "") << cols[i];
        out_ << "\n";
    }
    void row(const std::vector<double>& vals) {
        for (std::size_t i = 0; i < vals.size(); ++i)
            out_ << (i ? "," : "") << format_double(vals[i]);
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

/// Norm series and containment data of a trajectory, one row per sample.
inline void write_norms_csv(const std::string& path, const Trajectory& traj) {
    CsvWriter csv(path);
    std::vector<std::string> cols = {"t"};
    for (const auto& [tn, s] : traj.norm_series) cols.push_back(tn.label());
    csv.header(cols);
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        std::vector<double> row = {traj.times[i]};
        for (const auto& [tn, s] : traj.norm_series) row.push_back(s.samples[i].value);
        csv.row(row);
    }
}

inline void write_series_csv(const std::string& path, const Trajectory& traj) {
    CsvWriter csv(path);
    csv.header({"t", "containment_u", "containment_theta", "theta_mass", "div_rel", "m1_x",
                "m1_y", "m1_z", "m_accum_x", "m_accum_y", "m_accum_z"});
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        csv.row({traj.times[i], traj.containment_u[i], traj.containment_th[i],
                 traj.theta_mass[i], traj.div_rel[i], traj.m1_series[i][0], traj.m1_series[i][1],
                 traj.m1_series[i][2], traj.m_accum[i][0], traj.m_accum[i][1],
                 traj.m_accum[i][2]});
    }
}

inline void write_steps_csv(const std::string& path, const Trajectory& traj) {
    CsvWriter csv(path);
    csv.header({"t", "u_l2", "theta_l2", "grad_u_l2", "grad_theta_l2", "int_u_theta",
                "int_theta"});
    for (std::size_t i = 0; i < traj.step_times.size(); ++i) {
        csv.row({traj.step_times[i], traj.u_l2[i], traj.th_l2[i], traj.gu_l2[i], traj.gth_l2[i],
                 traj.int_u_th[i], traj.int_th[i]});
    }
}

inline void write_split_csv(const std::string& path, const Trajectory& traj) {
    CsvWriter csv(path);
    csv.header({"t", "radius", "c_theta", "a_u", "lowfreq_theta", "lowfreq_bound"});
    for (const auto& r : traj.split_rows)
        csv.row({r.t, r.radius, r.c_theta, r.a_u, r.lowfreq_theta, r.lowfreq_bound});
}

}  // namespace bq

#endif  // BQ_IO_HPP
