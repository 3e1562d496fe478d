#ifndef BQ_SPACES_HPP
#define BQ_SPACES_HPP

#include <vector>

#include "bq/grid.hpp"
#include "bq/norms.hpp"

namespace bq {

/// Time-sampled scalar fields on a common grid (strictly increasing times).
struct ScalarSeries {
    std::vector<double> times;
    std::vector<ScalarField> fields;

    void push(double t, ScalarField f) {
        detail::require(times.empty() || t > times.back(),
                        "ScalarSeries: times must be strictly increasing");
        detail::require(fields.empty() || f.grid() == fields.front().grid(),
                        "ScalarSeries: grid mismatch");
        times.push_back(t);
        fields.push_back(std::move(f));
    }
    std::size_t size() const { return times.size(); }
    const Grid3& grid() const { return fields.front().grid(); }
};

struct VectorSeries {
    std::vector<double> times;
    std::vector<VectorField> fields;

    void push(double t, VectorField f) {
        detail::require(times.empty() || t > times.back(),
                        "VectorSeries: times must be strictly increasing");
        detail::require(fields.empty() || f.grid() == fields.front().grid(),
                        "VectorSeries: grid mismatch");
        times.push_back(t);
        fields.push_back(std::move(f));
    }
    std::size_t size() const { return times.size(); }
    const Grid3& grid() const { return fields.front().grid(); }
};

/// Scaling-invariant space selector. X and Y are the fixed-point spaces;
/// Xa/Yb and the tilde variants carry the sharper space-time envelopes used
/// for the decay estimates (zero-mean case for the tilde pair).
enum class SpaceKind : std::uint8_t { X, Y, Xa, Yb, Xa_tilde, Yb_tilde };

struct SpaceDescriptor {
    SpaceKind kind = SpaceKind::X;
    double param = 0.0;  // a or b where applicable

    void validate() const {
        switch (kind) {
            case SpaceKind::X:
            case SpaceKind::Y: return;
            case SpaceKind::Xa:
                detail::require(param >= 1.0 && param < 3.0, "SpaceDescriptor: Xa needs a in [1,3)");
                return;
            case SpaceKind::Yb:
                detail::require(param >= 3.0, "SpaceDescriptor: Yb needs b >= 3");
                return;
            case SpaceKind::Xa_tilde:
                detail::require(param >= 2.0 && param < 4.0,
                                "SpaceDescriptor: Xa_tilde needs a in [2,4)");
                return;
            case SpaceKind::Yb_tilde:
                detail::require(param >= 4.0, "SpaceDescriptor: Yb_tilde needs b >= 4");
                return;
        }
    }
};

namespace detail {

// min over eta in {0, p} of |x|^-eta (1+t)^{(eta+off)/2}; the infimum over
// [0, p] sits at an endpoint because the expression is monotone in eta.
inline double envelope(double absx, double t, double p, double off) {
    const double flat = std::pow(1.0 + t, off / 2.0);
    const double steep = std::pow(absx, -p) * std::pow(1.0 + t, (p + off) / 2.0);
    return std::min(flat, steep);
}

}  // namespace detail

/// Scaling norm of a velocity series over the recorded grid nodes and times
/// (a documented under-approximation of the true essential sup).
inline double scaling_norm(const VectorSeries& s, const SpaceDescriptor& d) {
    d.validate();
    detail::require(!s.times.empty(), "scaling_norm: empty series");
    detail::require(d.kind == SpaceKind::X || d.kind == SpaceKind::Xa ||
                        d.kind == SpaceKind::Xa_tilde,
                    "scaling_norm: vector series needs an X-type descriptor");
    const Grid3& g = s.grid();
    double sup = 0.0;
    for (std::size_t m = 0; m < s.size(); ++m) {
        const double t = s.times[m];
        const VectorField& u = s.fields[m];
        const double st = std::sqrt(t);
        std::size_t i = 0;
        for (int iz = 0; iz < g.n; ++iz) {
            const double z = g.node(iz);
            for (int iy = 0; iy < g.n; ++iy) {
                const double y = g.node(iy);
                for (int ix = 0; ix < g.n; ++ix, ++i) {
                    const double x = g.node(ix);
                    const double ax = u.comp(0)[i], ay = u.comp(1)[i], az = u.comp(2)[i];
                    const double mag = std::sqrt(ax * ax + ay * ay + az * az);
                    if (mag == 0.0) continue;
                    const double r = std::sqrt(x * x + y * y + z * z);
                    double w;
                    if (d.kind == SpaceKind::X)
                        w = mag * (st + r);
                    else if (d.kind == SpaceKind::Xa)
                        w = mag / detail::envelope(r, t, d.param, -1.0);
                    else
                        w = mag / detail::envelope(r, t, d.param, -2.0);
                    sup = std::max(sup, w);
                }
            }
        }
    }
    return sup;
}

inline double scaling_norm(const ScalarSeries& s, const SpaceDescriptor& d) {
    d.validate();
    detail::require(!s.times.empty(), "scaling_norm: empty series");
    detail::require(d.kind == SpaceKind::Y || d.kind == SpaceKind::Yb ||
                        d.kind == SpaceKind::Yb_tilde,
                    "scaling_norm: scalar series needs a Y-type descriptor");
    const Grid3& g = s.grid();
    const double h3 = std::pow(g.h(), 3);
    double sup = 0.0, l1max = 0.0;
    for (std::size_t m = 0; m < s.size(); ++m) {
        const double t = s.times[m];
        const ScalarField& f = s.fields[m];
        const double st = std::sqrt(t);
        double l1 = 0.0;
        std::size_t i = 0;
        for (int iz = 0; iz < g.n; ++iz) {
            const double z = g.node(iz);
            for (int iy = 0; iy < g.n; ++iy) {
                const double y = g.node(iy);
                for (int ix = 0; ix < g.n; ++ix, ++i) {
                    const double v = std::abs(f[i]);
                    l1 += v;
                    if (v == 0.0) continue;
                    const double x = g.node(ix);
                    const double r = std::sqrt(x * x + y * y + z * z);
                    double w;
                    if (d.kind == SpaceKind::Y)
                        w = v * std::pow(st + r, 3);
                    else if (d.kind == SpaceKind::Yb)
                        w = v / detail::envelope(r, t, d.param, -3.0);
                    else
                        w = v / detail::envelope(r, t, d.param, -4.0);
                    sup = std::max(sup, w);
                }
            }
        }
        l1max = std::max(l1max, l1 * h3);
    }
    return d.kind == SpaceKind::Y ? l1max + sup : sup;
}

/// Measured smallness quantities of the entry gate: ||theta0||_1,
/// sup |x|^3 |theta0|, sup |x| |u0|, each compared against the configured
/// threshold (the theory's absolute constant is non-constructive; epsilon is
/// a configured surrogate).
struct GateReport {
    double theta_l1 = 0.0;
    double theta_sup3 = 0.0;
    double u_sup1 = 0.0;
    double epsilon = 0.0;
    bool theta_l1_ok = false;
    bool theta_sup3_ok = false;
    bool u_sup1_ok = false;
    bool pass() const { return theta_l1_ok && theta_sup3_ok && u_sup1_ok; }
};

inline GateReport smallness_gate(const VectorField& u0, const ScalarField& theta0,
                                 double epsilon) {
    detail::require(epsilon > 0.0, "smallness_gate: epsilon must be > 0");
    detail::require(u0.grid() == theta0.grid(), "smallness_gate: grid mismatch");
    const Grid3& g = u0.grid();
    GateReport r;
    r.epsilon = epsilon;
    const double h3 = std::pow(g.h(), 3);
    double l1 = 0.0;
    std::size_t i = 0;
    for (int iz = 0; iz < g.n; ++iz) {
        const double z = g.node(iz);
        for (int iy = 0; iy < g.n; ++iy) {
            const double y = g.node(iy);
            for (int ix = 0; ix < g.n; ++ix, ++i) {
                const double x = g.node(ix);
                const double rr = std::sqrt(x * x + y * y + z * z);
                const double th = std::abs(theta0[i]);
                l1 += th;
                r.theta_sup3 = std::max(r.theta_sup3, rr * rr * rr * th);
                const double ax = u0.comp(0)[i], ay = u0.comp(1)[i], az = u0.comp(2)[i];
                r.u_sup1 = std::max(r.u_sup1, rr * std::sqrt(ax * ax + ay * ay + az * az));
            }
        }
    }
    r.theta_l1 = l1 * h3;
    r.theta_l1_ok = r.theta_l1 < epsilon;
    r.theta_sup3_ok = r.theta_sup3 < epsilon;
    r.u_sup1_ok = r.u_sup1 < epsilon;
    return r;
}

}  // namespace bq

#endif  // BQ_SPACES_HPP
