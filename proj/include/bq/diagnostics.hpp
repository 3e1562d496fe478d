#ifndef BQ_DIAGNOSTICS_HPP
#define BQ_DIAGNOSTICS_HPP

#include <random>

#include "bq/solver.hpp"

namespace bq {

// ---------------------------------------------------------------------------
// Exponent fits
// ---------------------------------------------------------------------------

/// Ordinary least squares of log(value) against log(1+t).
struct FitResult {
    double slope = 0.0;
    double half_width = 0.0;  // 95% confidence from residual variance
    double t1 = 0.0, t2 = 0.0;
    int count = 0;
};

inline FitResult fit_exponent(const NormSeries& series, double t1, double t2) {
    detail::require(t1 < t2, "fit_exponent: window must satisfy t1 < t2");
    std::vector<double> xs, ys;
    for (const auto& s : series.samples) {
        if (s.t < t1 - 1e-12 || s.t > t2 + 1e-12) continue;
        detail::require(s.value > 0.0, "fit_exponent: values must be positive in the window");
        xs.push_back(std::log1p(s.t));
        ys.push_back(std::log(s.value));
    }
    const int n = static_cast<int>(xs.size());
    detail::require(n >= 5, "fit_exponent: need at least 5 samples in the window");
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    detail::require(sxx > 0.0, "fit_exponent: degenerate time window");
    FitResult r;
    r.slope = sxy / sxx;
    const double b0 = my - r.slope * mx;
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double e = ys[i] - (b0 + r.slope * xs[i]);
        ss += e * e;
    }
    const double se = n > 2 ? std::sqrt(ss / (n - 2) / sxx) : 0.0;
    r.half_width = 1.96 * se;
    r.t1 = t1;
    r.t2 = t2;
    r.count = n;
    return r;
}

/// Last containment-clean decade [t2/10, t2] of a trajectory; fits on
/// contaminated windows are refused (ok = false).
struct FitWindow {
    double t1 = 0.0, t2 = 0.0;
    bool ok = false;
};

inline FitWindow clean_decade(const Trajectory& traj, double floor = 0.99) {
    FitWindow w;
    double t2 = -1.0;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        if (traj.containment_u[i] >= floor && traj.containment_th[i] >= floor)
            t2 = traj.times[i];
        else
            break;
    }
    if (t2 <= 0.0) return w;
    w.t2 = t2;
    w.t1 = t2 / 10.0;
    int inside = 0;
    for (double t : traj.times)
        if (t >= w.t1 && t <= w.t2) ++inside;
    w.ok = inside >= 5;
    return w;
}

// ---------------------------------------------------------------------------
// Predicted rates
// ---------------------------------------------------------------------------

enum class MeanCase : std::uint8_t { nonzero_mean, zero_mean };

enum class ExponentVerdict : std::uint8_t { finite, infinite_norm, not_covered };

/// Claimed large-time exponent of ||u(t)||_{L^p_r}: (r + 3/p - 1)/2 in the
/// generic case (valid for r + 3/p < 3; the norm is infinite beyond), and
/// (r + 3/p - 2)/2 with zero-mean data (valid for r + 3/p < 4; beyond is not
/// covered by the theory).
struct PredictedExponent {
    ExponentVerdict verdict = ExponentVerdict::finite;
    double value = 0.0;
};

inline PredictedExponent predicted_exponent(double p, double r, MeanCase c) {
    detail::require(r >= 0.0, "predicted_exponent: r must be >= 0");
    detail::require(p > 1.0 && std::isfinite(p), "predicted_exponent: need 1 < p < inf");
    const double s = r + 3.0 / p;
    PredictedExponent out;
    if (c == MeanCase::nonzero_mean) {
        if (s >= 3.0) {
            out.verdict = ExponentVerdict::infinite_norm;
            return out;
        }
        out.value = 0.5 * (s - 1.0);
    } else {
        if (s >= 4.0) {
            out.verdict = ExponentVerdict::not_covered;
            return out;
        }
        out.value = 0.5 * (s - 2.0);
    }
    return out;
}

/// Decay claim for ||theta(t)||_p: exponent -(3/2)(1 - 1/p) and the
/// data-dependent constant A = (||theta0||_1 / ||theta0||_p)^{2p/(3p-3)}.
struct ThetaRate {
    double exponent = 0.0;
    double A = 0.0;
};

inline ThetaRate predicted_theta_rate(double p, double theta_l1 = 0.0, double theta_lp = 0.0) {
    detail::require(p >= 1.0 && std::isfinite(p), "predicted_theta_rate: need 1 <= p < inf");
    ThetaRate out;
    if (p == 1.0) {
        out.exponent = 0.0;  // ||theta(t)||_1 <= ||theta0||_1, no decay claimed
        return out;
    }
    out.exponent = -1.5 * (1.0 - 1.0 / p);
    if (theta_l1 > 0.0 && theta_lp > 0.0)
        out.A = std::pow(theta_l1 / theta_lp, 2.0 * p / (3.0 * p - 3.0));
    return out;
}

// ---------------------------------------------------------------------------
// Energy audit
// ---------------------------------------------------------------------------

/// Checks the dissipation inequality for theta and the buoyancy-driven
/// growth bound for ||u||: worst signed violations, relative; <= slack
/// passes. `theta_deviation` is the unsigned departure from equality, which
/// the pure heat flow must keep at integrator order.
struct EnergyAuditReport {
    double worst_theta_violation = 0.0;  // (||th||^2 + 2 int ||grad th||^2 - ||th0||^2)/||th0||^2
    double theta_deviation = 0.0;
    double worst_u_violation = 0.0;  // (||u|| - ||u0|| - int ||th||) / scale
    bool pass(double slack = 0.01) const {
        return worst_theta_violation <= slack && worst_u_violation <= slack;
    }
};

inline EnergyAuditReport energy_audit(const Trajectory& traj) {
    EnergyAuditReport rep;
    const auto& t = traj.step_times;
    detail::require(!t.empty(), "energy_audit: empty trajectory");
    const double th0_sq = traj.th_l2[0] * traj.th_l2[0];
    double cum_gth = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i > 0) {
            const double dt = t[i] - t[i - 1];
            cum_gth += 0.5 * dt *
                       (traj.gth_l2[i - 1] * traj.gth_l2[i - 1] + traj.gth_l2[i] * traj.gth_l2[i]);
        }
        if (th0_sq > 0.0) {
            const double e = traj.th_l2[i] * traj.th_l2[i] + 2.0 * cum_gth;
            const double rel = (e - th0_sq) / th0_sq;
            rep.worst_theta_violation = std::max(rep.worst_theta_violation, rel);
            rep.theta_deviation = std::max(rep.theta_deviation, std::abs(rel));
        }
        const double bound = traj.u_l2[0] + traj.int_th[i];
        if (bound > 0.0) {
            const double rel = (traj.u_l2[i] - bound) / bound;
            rep.worst_u_violation = std::max(rep.worst_u_violation, rel);
        } else {
            rep.worst_u_violation = std::max(rep.worst_u_violation, traj.u_l2[i]);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Pointwise envelope audit on snapshots
// ---------------------------------------------------------------------------

/// Smallest constants C_u(t), C_theta(t) making the space-time envelopes
/// hold on each snapshot, plus a stability flag (no growth trend beyond 2x
/// across the audited times).
struct TrajectoryEnvelopeReport {
    std::vector<double> times;
    std::vector<double> c_u, c_theta;
    bool u_stable = false, theta_stable = false;
    double u_trend = 0.0, theta_trend = 0.0;  // max/min ratio over times
};

inline TrajectoryEnvelopeReport envelope_audit(const Trajectory& traj, double a, double b,
                                               MeanCase c) {
    if (c == MeanCase::nonzero_mean) {
        detail::require(a >= 1.0 && a < 3.0, "envelope_audit: need 1 <= a < 3");
        detail::require(b >= 3.0, "envelope_audit: need b >= 3");
    } else {
        detail::require(a >= 2.0 && a < 4.0 && a != 3.0,
                        "envelope_audit: need 2 <= a < 4, a != 3");
        detail::require(b >= 4.0, "envelope_audit: need b >= 4");
    }
    detail::require(traj.snapshots.size() >= 2, "envelope_audit: need at least 2 snapshots");
    TrajectoryEnvelopeReport rep;
    const Grid3& g = traj.grid;
    for (const auto& snap : traj.snapshots) {
        const double t = snap.t;
        double cu = 0.0, cth = 0.0;
        std::size_t i = 0;
        for (int iz = 0; iz < g.n; ++iz) {
            const double z = g.node(iz);
            for (int iy = 0; iy < g.n; ++iy) {
                const double y = g.node(iy);
                for (int ix = 0; ix < g.n; ++ix, ++i) {
                    const double x = g.node(ix);
                    const double r = std::sqrt(x * x + y * y + z * z);
                    const double um = norm2(snap.u.at(ix, iy, iz));
                    const double tm = std::abs(snap.theta[i]);
                    double env_u, env_th;
                    if (c == MeanCase::nonzero_mean) {
                        env_u = detail::envelope(r, t, a, -1.0);
                        env_th = detail::envelope(r, t, b, -3.0);
                    } else {
                        env_u = detail::envelope(1.0 + r, t, a, -2.0);
                        env_th = detail::envelope(1.0 + r, t, b, -4.0);
                    }
                    cu = std::max(cu, um / env_u);
                    cth = std::max(cth, tm / env_th);
                }
            }
        }
        rep.times.push_back(t);
        rep.c_u.push_back(cu);
        rep.c_theta.push_back(cth);
    }
    auto trend = [&](const std::vector<double>& cs) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (std::size_t i = 0; i < cs.size(); ++i) {
            if (rep.times[i] < 1.0) continue;  // skip the start-up transient
            lo = std::min(lo, cs[i]);
            hi = std::max(hi, cs[i]);
        }
        return (lo > 0.0 && std::isfinite(lo)) ? hi / lo : 1.0;
    };
    rep.u_trend = trend(rep.c_u);
    rep.theta_trend = trend(rep.c_theta);
    rep.u_stable = rep.u_trend <= 2.0;
    rep.theta_stable = rep.theta_trend <= 2.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Far-field profile comparison
// ---------------------------------------------------------------------------

/// Per-component ratio statistics of the measured remainder u - e^{tDelta}u0
/// against the predicted potential-flow profile on the shell |x| ~ A sqrt(t).
struct ProfileReport {
    double A = 0.0;
    double t = 0.0;
    int shell_nodes = 0;
    int admissible = 0;  // (node, component) pairs with usable prediction
    int excluded = 0;    // pairs near the profile's zero set, reported not dropped
    std::array<double, 3> median_ratio{};  // per component
    std::array<double, 3> iqr{};
    double remainder_ratio = 0.0;  // median |measured - predicted| / scale
};

namespace detail {

inline double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double quartile_range(std::vector<double> v) {
    if (v.size() < 4) return 0.0;
    std::sort(v.begin(), v.end());
    return v[(3 * v.size()) / 4] - v[v.size() / 4];
}

}  // namespace detail

/// Field-level comparison; the Trajectory overload locates the snapshot and
/// moment data. `m0` drives the generic t E'' column-3 profile, `mvec` the
/// zero-mean -E''' . m(t) profile.
inline ProfileReport profile_compare_fields(const VectorField& u_t, const VectorField& u0,
                                            double t, double A, MeanCase c, double m0,
                                            const Vec3& mvec) {
    detail::require(A >= 2.0, "profile_compare: region parameter A must be >= 2");
    detail::require(t > 0.0, "profile_compare: t must be > 0");
    const Grid3& g = u_t.grid();
    const double R = A * std::sqrt(t);
    const double width = std::max(2.0 * g.h(), 0.1 * R);
    VectorField lin = heat_propagate(u0, t);

    struct Entry {
        double w[3], p[3];
        double scale;
    };
    std::vector<Entry> entries;
    std::size_t i = 0;
    for (int iz = 0; iz < g.n; ++iz) {
        const double z = g.node(iz);
        for (int iy = 0; iy < g.n; ++iy) {
            const double y = g.node(iy);
            for (int ix = 0; ix < g.n; ++ix, ++i) {
                const double x = g.node(ix);
                const double r = std::sqrt(x * x + y * y + z * z);
                if (r < R || r > R + width) continue;
                Entry e;
                const Vec3 pos = {x, y, z};
                if (c == MeanCase::nonzero_mean) {
                    const Mat3 e2 = fundamental_second(pos);
                    for (int j = 0; j < 3; ++j) e.p[j] = m0 * t * e2[j][2];
                    e.scale = std::abs(m0) * t / (r * r * r);
                } else {
                    const Ten3 e3 = fundamental_third(pos);
                    for (int j = 0; j < 3; ++j) {
                        double s = 0.0;
                        for (int k = 0; k < 3; ++k) s += e3[j][2][k] * mvec[k];
                        e.p[j] = -s;
                    }
                    e.scale = norm2(mvec) / (r * r * r * r);
                }
                for (int j = 0; j < 3; ++j)
                    e.w[j] = u_t.comp(j)[i] - lin.comp(j)[i];
                entries.push_back(e);
            }
        }
    }
    if (entries.size() < 50) {
        std::ostringstream os;
        os << "profile_compare: region has " << entries.size()
           << " nodes (< 50); use a smaller A or a larger t";
        throw std::invalid_argument(os.str());
    }

    ProfileReport rep;
    rep.A = A;
    rep.t = t;
    rep.shell_nodes = static_cast<int>(entries.size());
    std::array<double, 3> pmax{};
    for (const auto& e : entries)
        for (int j = 0; j < 3; ++j) pmax[j] = std::max(pmax[j], std::abs(e.p[j]));
    std::vector<double> rem;
    for (int j = 0; j < 3; ++j) {
        std::vector<double> ratios;
        for (const auto& e : entries) {
            if (std::abs(e.p[j]) < 0.1 * pmax[j]) {
                ++rep.excluded;
                continue;
            }
            ++rep.admissible;
            ratios.push_back(e.w[j] / e.p[j]);
        }
        rep.median_ratio[j] = detail::median_of(ratios);
        rep.iqr[j] = detail::quartile_range(ratios);
    }
    for (const auto& e : entries) {
        double d = 0.0;
        for (int j = 0; j < 3; ++j) d += (e.w[j] - e.p[j]) * (e.w[j] - e.p[j]);
        if (e.scale > 0.0) rem.push_back(std::sqrt(d) / e.scale);
    }
    rep.remainder_ratio = detail::median_of(rem);
    return rep;
}

inline Vec3 interpolate_m_accum(const Trajectory& traj, double t) {
    const auto& ts = traj.times;
    detail::require(!ts.empty(), "profile_compare: trajectory has no samples");
    if (t <= ts.front()) return traj.m_accum.front();
    for (std::size_t i = 1; i < ts.size(); ++i) {
        if (t <= ts[i]) {
            const double w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
            Vec3 out;
            for (int c = 0; c < 3; ++c)
                out[c] = (1.0 - w) * traj.m_accum[i - 1][c] + w * traj.m_accum[i][c];
            return out;
        }
    }
    return traj.m_accum.back();
}

inline ProfileReport profile_compare(const Trajectory& traj, double t, double A, MeanCase c) {
    const Snapshot* snap = nullptr;
    for (const auto& s : traj.snapshots)
        if (std::abs(s.t - t) <= 1e-9 * std::max(1.0, t)) snap = &s;
    detail::require(snap != nullptr, "profile_compare: no snapshot recorded at t");
    const double m0 = moments(traj.theta0).m0;
    const Vec3 mvec = interpolate_m_accum(traj, t);
    return profile_compare_fields(snap->u, traj.u0, t, A, c, m0, mvec);
}

/// liminf_t |m(t)|/t approximated by the minimum over the last half of the
/// recorded samples.
inline double m_tilde(const Trajectory& traj) {
    detail::require(traj.times.size() >= 2, "m_tilde: need samples");
    const double thalf = traj.times.back() / 2.0;
    double out = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const double t = traj.times[i];
        if (t < thalf || t <= 0.0) continue;
        out = std::min(out, norm2(traj.m_accum[i]) / t);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Spatial tail probe
// ---------------------------------------------------------------------------

struct ConeProbe {
    Vec3 axis = {1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0)};
    double half_angle = 0.35;  // radians
    int directions = 12;
    double r0 = 4.0, r1 = 30.0;
    int radii = 24;
    unsigned seed = 7;
    double noise_floor = 1e-13;
};

namespace detail {

inline double trilinear(const ScalarField& f, const Vec3& p) {
    const Grid3& g = f.grid();
    const double h = g.h();
    double out = 0.0;
    // fractional index: node(i) = -L + (i + .5) h
    const double fx = (p[0] + g.L) / h - 0.5;
    const double fy = (p[1] + g.L) / h - 0.5;
    const double fz = (p[2] + g.L) / h - 0.5;
    const int ix = static_cast<int>(std::floor(fx));
    const int iy = static_cast<int>(std::floor(fy));
    const int iz = static_cast<int>(std::floor(fz));
    require(ix >= 0 && iy >= 0 && iz >= 0 && ix + 1 < g.n && iy + 1 < g.n && iz + 1 < g.n,
            "trilinear: sample point outside the grid");
    const double ux = fx - ix, uy = fy - iy, uz = fz - iz;
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                const double w = (dx ? ux : 1 - ux) * (dy ? uy : 1 - uy) * (dz ? uz : 1 - uz);
                out += w * f.at(ix + dx, iy + dy, iz + dz);
            }
    return out;
}

}  // namespace detail

/// Fitted spatial decay exponent of |u| along cone directions (log-log in
/// |x|); returns the positive exponent (|u| ~ |x|^-e gives e).
inline double tail_exponent_probe(const VectorField& u, const ConeProbe& cone) {
    const Grid3& g = u.grid();
    detail::require(cone.radii >= 20, "tail_exponent_probe: need >= 20 sample radii");
    detail::require(cone.r0 > 0.0 && cone.r1 > cone.r0, "tail_exponent_probe: bad radii");

    // orthonormal frame around the axis
    Vec3 a = scale(cone.axis, 1.0 / norm2(cone.axis));
    Vec3 e1 = std::abs(a[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    // Gram-Schmidt
    const double pr = dot(e1, a);
    for (int c = 0; c < 3; ++c) e1[c] -= pr * a[c];
    e1 = scale(e1, 1.0 / norm2(e1));
    const Vec3 e2 = {a[1] * e1[2] - a[2] * e1[1], a[2] * e1[0] - a[0] * e1[2],
                     a[0] * e1[1] - a[1] * e1[0]};

    std::mt19937 rng(cone.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<Vec3> dirs;
    for (int k = 0; k < cone.directions; ++k) {
        const double alpha = cone.half_angle * std::sqrt(uni(rng));
        const double phi = 2.0 * M_PI * uni(rng);
        Vec3 d;
        for (int c = 0; c < 3; ++c)
            d[c] = std::cos(alpha) * a[c] +
                   std::sin(alpha) * (std::cos(phi) * e1[c] + std::sin(phi) * e2[c]);
        dirs.push_back(d);
    }

    std::vector<double> lr, lv;
    int usable_radii = 0;
    for (int i = 0; i < cone.radii; ++i) {
        const double r = cone.r0 * std::pow(cone.r1 / cone.r0, i / double(cone.radii - 1));
        std::vector<double> mags;
        bool inside = true;
        for (const auto& d : dirs) {
            const Vec3 p = scale(d, r);
            const double lim = g.L - g.h();
            if (std::abs(p[0]) > lim || std::abs(p[1]) > lim || std::abs(p[2]) > lim) {
                inside = false;
                break;
            }
            const double vx = detail::trilinear(u.comp(0), p);
            const double vy = detail::trilinear(u.comp(1), p);
            const double vz = detail::trilinear(u.comp(2), p);
            mags.push_back(std::sqrt(vx * vx + vy * vy + vz * vz));
        }
        if (!inside) continue;
        ++usable_radii;
        const double med = detail::median_of(mags);
        if (med <= cone.noise_floor) continue;  // below noise floor, excluded
        lr.push_back(std::log(r));
        lv.push_back(std::log(med));
    }
    detail::require(usable_radii >= 20,
                    "tail_exponent_probe: fewer than 20 sample radii inside the box");
    detail::require(lr.size() >= 5, "tail_exponent_probe: too few samples above noise floor");

    double mx = 0.0, my = 0.0;
    const int n = static_cast<int>(lr.size());
    for (int i = 0; i < n; ++i) {
        mx += lr[i];
        my += lv[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (lr[i] - mx) * (lr[i] - mx);
        sxy += (lr[i] - mx) * (lv[i] - my);
    }
    return -sxy / sxx;
}

}  // namespace bq

#endif  // BQ_DIAGNOSTICS_HPP
