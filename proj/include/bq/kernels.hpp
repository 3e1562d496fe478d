#ifndef BQ_KERNELS_HPP
#define BQ_KERNELS_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "bq/grid.hpp"

namespace bq {

using Mat3 = std::array<std::array<double, 3>, 3>;
using Ten3 = std::array<Mat3, 3>;  // [l][j][k]

inline double frobenius(const Mat3& m) {
    double s = 0.0;
    for (const auto& row : m)
        for (double v : row) s += v * v;
    return std::sqrt(s);
}

inline double frobenius(const Ten3& t) {
    double s = 0.0;
    for (const auto& m : t)
        for (const auto& row : m)
            for (double v : row) s += v * v;
    return std::sqrt(s);
}

/// Heat kernel g_t(x) = (4 pi t)^{-3/2} exp(-|x|^2 / (4t)), unit mass.
inline double heat_kernel(const Vec3& x, double t) {
    detail::require(t > 0.0, "heat_kernel: t must be > 0");
    const double q = dot(x, x);
    return std::pow(4.0 * M_PI * t, -1.5) * std::exp(-q / (4.0 * t));
}

/// grad g_t(x) = -x/(2t) g_t(x); the kernel of e^{tDelta} grad.
inline Vec3 heat_kernel_grad(const Vec3& x, double t) {
    detail::require(t > 0.0, "heat_kernel_grad: t must be > 0");
    const double g = heat_kernel(x, t);
    return {-x[0] / (2.0 * t) * g, -x[1] / (2.0 * t) * g, -x[2] / (2.0 * t) * g};
}

/// Second derivatives of E(x) = 1/(4 pi |x|):
/// E_jk = (3 x_j x_k - delta_jk |x|^2) / (4 pi |x|^5). Trace-free, symmetric,
/// homogeneous of degree -3.
inline Mat3 fundamental_second(const Vec3& x) {
    const double r2 = dot(x, x);
    detail::require(r2 > 0.0, "fundamental_second: x must be nonzero");
    const double r5 = r2 * r2 * std::sqrt(r2);
    Mat3 out;
    for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
            const double d = j == k ? 1.0 : 0.0;
            out[j][k] = (3.0 * x[j] * x[k] - d * r2) / (4.0 * M_PI * r5);
        }
    return out;
}

/// Third derivatives of E:
/// E_jhk = 3 (sigma_jhk |x|^2 - 5 x_j x_h x_k) / (4 pi |x|^7) with
/// sigma_jhk = delta_jh x_k + delta_hk x_j + delta_kj x_h. Fully symmetric,
/// homogeneous of degree -4, traceless on every index pair.
inline Ten3 fundamental_third(const Vec3& x) {
    const double r2 = dot(x, x);
    detail::require(r2 > 0.0, "fundamental_third: x must be nonzero");
    const double r7 = r2 * r2 * r2 * std::sqrt(r2);
    const double c = 3.0 / (4.0 * M_PI);
    Ten3 out;
    for (int j = 0; j < 3; ++j)
        for (int h = 0; h < 3; ++h)
            for (int k = 0; k < 3; ++k) {
                const double sigma = (j == h ? x[k] : 0.0) + (h == k ? x[j] : 0.0) +
                                     (k == j ? x[h] : 0.0);
                out[j][h][k] = c * (sigma * r2 - 5.0 * x[j] * x[h] * x[k]) / r7;
            }
    return out;
}

// ---------------------------------------------------------------------------
// Radial profiles of the Oseen-type kernel K (kernel of e^{tDelta} P)
// ---------------------------------------------------------------------------

namespace detail {

// Spherical Bessel helpers, series-stabilized near 0.
inline double sphj0(double z) {
    if (std::abs(z) < 0.5) {
        const double z2 = z * z;
        return 1.0 + z2 * (-1.0 / 6.0 + z2 * (1.0 / 120.0 + z2 * (-1.0 / 5040.0 + z2 / 362880.0)));
    }
    return std::sin(z) / z;
}

// j1(z)/z
inline double sphj1_over_z(double z) {
    if (std::abs(z) < 0.5) {
        const double z2 = z * z;
        return 1.0 / 3.0 +
               z2 * (-1.0 / 30.0 + z2 * (1.0 / 840.0 + z2 * (-1.0 / 45360.0 + z2 / 3991680.0)));
    }
    return (std::sin(z) - z * std::cos(z)) / (z * z * z);
}

inline double sphj0_d(double z) { return -z * sphj1_over_z(z); }  // d j0 / dz

// d (j1(z)/z) / dz = (j0(z) - 3 j1(z)/z) / z
inline double sphj1_over_z_d(double z) {
    if (std::abs(z) < 0.5) {
        const double z2 = z * z;
        return z * (-1.0 / 15.0 + z2 * (1.0 / 210.0 - z2 / 7560.0));
    }
    return (sphj0(z) - 3.0 * sphj1_over_z(z)) / z;
}

// 10-point Gauss-Legendre on [-1, 1].
struct GL10 {
    static constexpr std::array<double, 5> x = {0.1488743389816312, 0.4333953941292472,
                                                0.6794095682990244, 0.8650633666889845,
                                                0.9739065285171717};
    static constexpr std::array<double, 5> w = {0.2955242247147529, 0.2692667193099963,
                                                0.2190863625159820, 0.1494513491505806,
                                                0.0666713443086881};
};

template <typename F>
double gl_integrate(F&& f, double a, double b, int panels) {
    double acc = 0.0;
    const double dw = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * dw;
        for (int q = 0; q < 5; ++q) {
            const double dx = 0.5 * dw * GL10::x[q];
            acc += GL10::w[q] * (f(mid + dx) + f(mid - dx));
        }
    }
    return acc * 0.5 * dw;
}

}  // namespace detail

/// Tabulated radial profiles of K(., 1) and grad K(., 1):
///   K_jk(x, 1)     = A(r) delta_jk + B(r) xh_j xh_k,       r = |x|, xh = x/r
///   dK_jk/dx_l(x,1)= A'(r) xh_l delta_jk + B'(r) xh_l xh_j xh_k
///                    + B(r)/r (delta_lj xh_k + delta_lk xh_j - 2 xh_l xh_j xh_k)
/// built by one-dimensional quadrature of the projector symbol reduced over
/// spheres. Other times follow from K(x,t) = t^{-3/2} K(x/sqrt(t), 1).
/// Beyond rho_max the Gaussian-decaying residual is below double noise and
/// evaluation falls back to the potential-theoretic limits E'' and E'''.
class KernelTable {
public:
    static constexpr double kRhoMax = 16.0;
    static constexpr double kRhoAsymptotic = 14.0;
    static constexpr int kLength = 4097;
    static constexpr char kMagic[9] = "BQKERN01";

    static const KernelTable& shared() {
        static std::once_flag once;
        static std::unique_ptr<KernelTable> table;
        std::call_once(once, [] {
            table.reset(new KernelTable());
            const char* env = std::getenv("BQ_KERNEL_CACHE");
            const std::string path = env ? env : "bq_kernel_table.bqk";
            if (!table->load(path)) {
                table->build();
                table->store(path);  // best effort
            }
        });
        return *table;
    }

    /// Fresh table built in memory (no cache I/O); used by tests.
    static KernelTable built() {
        KernelTable t;
        t.build();
        return t;
    }

    double rho_max() const { return rho_max_; }
    int length() const { return static_cast<int>(a_.size()); }

    double A(double rho) const { return interp(a_, rho, false); }
    double B(double rho) const { return interp(b_, rho, false); }
    double Ap(double rho) const { return interp(ap_, rho, true); }
    double Bp(double rho) const { return interp(bp_, rho, true); }

    bool load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) return false;
        char magic[8];
        in.read(magic, 8);
        if (!in || std::memcmp(magic, kMagic, 8) != 0) return false;
        std::uint32_t len = 0;
        in.read(reinterpret_cast<char*>(&len), 4);
        double rmax = 0.0;
        in.read(reinterpret_cast<char*>(&rmax), 8);
        if (!in || len != static_cast<std::uint32_t>(kLength) || rmax != kRhoMax) return false;
        auto read_arr = [&](std::vector<double>& v) {
            v.resize(len);
            in.read(reinterpret_cast<char*>(v.data()), 8 * len);
        };
        read_arr(a_);
        read_arr(b_);
        read_arr(ap_);
        read_arr(bp_);
        rho_max_ = rmax;
        return static_cast<bool>(in);
    }

    bool store(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) return false;
        out.write(kMagic, 8);
        const std::uint32_t len = static_cast<std::uint32_t>(a_.size());
        out.write(reinterpret_cast<const char*>(&len), 4);
        out.write(reinterpret_cast<const char*>(&rho_max_), 8);
        for (const auto* v : {&a_, &b_, &ap_, &bp_})
            out.write(reinterpret_cast<const char*>(v->data()), 8 * len);
        return static_cast<bool>(out);
    }

    void build() {
        rho_max_ = kRhoMax;
        a_.resize(kLength);
        b_.resize(kLength);
        ap_.resize(kLength);
        bp_.resize(kLength);
        const double drho = kRhoMax / (kLength - 1);
        // The symbol factor exp(-4 pi^2 r^2) is below 2e-27 at r = 1.25.
        const double rtop = 1.25;
        const int panels = 64;
        for (int i = 0; i < kLength; ++i) {
            const double rho = i * drho;
            const double tp = kTwoPiLocal * rho;
            a_[i] = 4.0 * M_PI *
                    detail::gl_integrate(
                        [&](double r) {
                            const double e = r * r * std::exp(-kFourPi2Local * r * r);
                            const double z = tp * r;
                            return e * (detail::sphj0(z) - detail::sphj1_over_z(z));
                        },
                        0.0, rtop, panels);
            b_[i] = 4.0 * M_PI *
                    detail::gl_integrate(
                        [&](double r) {
                            const double e = r * r * std::exp(-kFourPi2Local * r * r);
                            const double z = tp * r;
                            return e * (3.0 * detail::sphj1_over_z(z) - detail::sphj0(z));
                        },
                        0.0, rtop, panels);
            ap_[i] = 8.0 * M_PI * M_PI *
                     detail::gl_integrate(
                         [&](double r) {
                             const double e = r * r * r * std::exp(-kFourPi2Local * r * r);
                             const double z = tp * r;
                             return e * (detail::sphj0_d(z) - detail::sphj1_over_z_d(z));
                         },
                         0.0, rtop, panels);
            bp_[i] = 8.0 * M_PI * M_PI *
                     detail::gl_integrate(
                         [&](double r) {
                             const double e = r * r * r * std::exp(-kFourPi2Local * r * r);
                             const double z = tp * r;
                             return e * (3.0 * detail::sphj1_over_z_d(z) - detail::sphj0_d(z));
                         },
                         0.0, rtop, panels);
        }
    }

private:
    KernelTable() = default;
    static constexpr double kTwoPiLocal = 2.0 * M_PI;
    static constexpr double kFourPi2Local = 4.0 * M_PI * M_PI;

    // Catmull-Rom cubic on the uniform rho grid; profiles extend evenly
    // (A, B) or oddly (A', B') through rho = 0.
    double interp(const std::vector<double>& v, double rho, bool odd) const {
        const double drho = rho_max_ / (v.size() - 1);
        const double s = rho / drho;
        int i = static_cast<int>(std::floor(s));
        if (i < 0) i = 0;
        if (i > static_cast<int>(v.size()) - 2) i = static_cast<int>(v.size()) - 2;
        const double u = s - i;
        auto get = [&](int k) {
            if (k >= 0) return v[static_cast<std::size_t>(k)];
            return odd ? -v[static_cast<std::size_t>(-k)] : v[static_cast<std::size_t>(-k)];
        };
        const double p0 = get(i - 1), p1 = get(i), p2 = get(i + 1), p3 = get(i + 2);
        const double u2 = u * u, u3 = u2 * u;
        return 0.5 * ((2.0 * p1) + (-p0 + p2) * u + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u2 +
                      (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u3);
    }

    std::vector<double> a_, b_, ap_, bp_;
    double rho_max_ = kRhoMax;
};

// ---------------------------------------------------------------------------
// Kernel evaluation
// ---------------------------------------------------------------------------

/// K(x, t), the matrix kernel of e^{tDelta} P. `asymptotic`, when given, is
/// set if |x|/sqrt(t) fell outside the table and the potential-theoretic
/// limit E''(x) was returned instead (residual below double noise there).
inline Mat3 oseen(const Vec3& x, double t, bool* asymptotic = nullptr,
                  const KernelTable& table = KernelTable::shared()) {
    detail::require(t > 0.0, "oseen: t must be > 0");
    const double st = std::sqrt(t);
    const double rho = norm2(x) / st;
    if (asymptotic) *asymptotic = false;
    if (rho > KernelTable::kRhoAsymptotic) {
        if (asymptotic) *asymptotic = true;
        return fundamental_second(x);
    }
    const double ts = std::pow(t, -1.5);
    const double a = table.A(rho) * ts, b = table.B(rho) * ts;
    Mat3 out{};
    if (rho == 0.0) {
        for (int j = 0; j < 3; ++j) out[j][j] = a;
        return out;
    }
    const Vec3 xh = scale(x, 1.0 / (rho * st));
    for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) out[j][k] = (j == k ? a : 0.0) + b * xh[j] * xh[k];
    return out;
}

/// grad K(x, t) with layout [l][j][k] = d K_jk / d x_l; also the kernel F of
/// e^{tDelta} P div acting on u (x) v through F_{j,lk} (u_l v_k).
inline Ten3 oseen_grad(const Vec3& x, double t, bool* asymptotic = nullptr,
                       const KernelTable& table = KernelTable::shared()) {
    detail::require(t > 0.0, "oseen_grad: t must be > 0");
    const double st = std::sqrt(t);
    const double r = norm2(x);
    const double rho = r / st;
    if (asymptotic) *asymptotic = false;
    if (rho > KernelTable::kRhoAsymptotic) {
        if (asymptotic) *asymptotic = true;
        return fundamental_third(x);
    }
    detail::require(rho > 0.0, "oseen_grad: x must be nonzero");
    const double ts = std::pow(t, -2.0);
    const double ap = table.Ap(rho) * ts, bp = table.Bp(rho) * ts;
    const double b_over = table.B(rho) / rho * ts;
    const Vec3 xh = scale(x, 1.0 / r);
    Ten3 out{};
    for (int l = 0; l < 3; ++l)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
                double v = ap * xh[l] * (j == k ? 1.0 : 0.0) + bp * xh[l] * xh[j] * xh[k];
                v += b_over * ((l == j ? xh[k] : 0.0) + (l == k ? xh[j] : 0.0) -
                               2.0 * xh[l] * xh[j] * xh[k]);
                out[l][j][k] = v;
            }
    return out;
}

/// Psi(y) = |y|^3 (K(y,1) - E''(y)): the decomposition residual. Decays at a
/// Gaussian rate in |y|.
inline Mat3 residual_psi(const Vec3& y, const KernelTable& table = KernelTable::shared()) {
    const double r = norm2(y);
    detail::require(r > 0.0, "residual_psi: y must be nonzero");
    const Mat3 k = oseen(y, 1.0, nullptr, table);
    const Mat3 e = fundamental_second(y);
    const double r3 = r * r * r;
    Mat3 out;
    for (int j = 0; j < 3; ++j)
        for (int kk = 0; kk < 3; ++kk) out[j][kk] = r3 * (k[j][kk] - e[j][kk]);
    return out;
}

/// PsiTilde(y) = |y|^4 (grad K(y,1) - E'''(y)).
inline Ten3 residual_psi_grad(const Vec3& y, const KernelTable& table = KernelTable::shared()) {
    const double r = norm2(y);
    detail::require(r > 0.0, "residual_psi_grad: y must be nonzero");
    const Ten3 k = oseen_grad(y, 1.0, nullptr, table);
    const Ten3 e = fundamental_third(y);
    const double r4 = r * r * r * r;
    Ten3 out;
    for (int l = 0; l < 3; ++l)
        for (int j = 0; j < 3; ++j)
            for (int kk = 0; kk < 3; ++kk) out[l][j][kk] = r4 * (k[l][j][kk] - e[l][j][kk]);
    return out;
}

// ---------------------------------------------------------------------------
// Envelope audits
// ---------------------------------------------------------------------------

enum class KernelId : std::uint8_t {
    heat,
    oseen_K,
    oseen_grad_F,
    heat_grad_Ftilde,
    E_second,
    E_third
};

inline const char* kernel_name(KernelId id) {
    switch (id) {
        case KernelId::heat: return "heat";
        case KernelId::oseen_K: return "oseen_K";
        case KernelId::oseen_grad_F: return "oseen_grad_F";
        case KernelId::heat_grad_Ftilde: return "heat_grad_Ftilde";
        case KernelId::E_second: return "E_second";
        case KernelId::E_third: return "E_third";
    }
    return "?";
}

struct EnvelopeSample {
    Vec3 x;
    double t;
};

/// Result of fitting the smallest C with |kernel(x,t)| <= C |x|^-eta
/// t^{-(d-eta)/2} over a sample set.
struct EnvelopeReport {
    KernelId kernel = KernelId::heat;
    double eta = 0.0;
    double C = 0.0;
    std::string samples;
    double max_violation = 0.0;  // <= 0 when the fitted bound holds
    int violation_count = 0;
};

/// 26 cube directions (faces, edges, corners), unit length.
inline std::vector<Vec3> cube_directions() {
    std::vector<Vec3> dirs;
    for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b)
            for (int c = -1; c <= 1; ++c) {
                if (a == 0 && b == 0 && c == 0) continue;
                Vec3 d = {double(a), double(b), double(c)};
                dirs.push_back(scale(d, 1.0 / norm2(d)));
            }
    return dirs;
}

/// Log-spaced radii times the 26 cube directions at a few times; covers
/// 0.5 <= |x|/sqrt(t) <= 8.
inline std::vector<EnvelopeSample> default_envelope_samples() {
    std::vector<EnvelopeSample> out;
    const auto dirs = cube_directions();
    const int nr = 17;
    for (double t : {0.25, 1.0, 4.0}) {
        const double st = std::sqrt(t);
        for (int i = 0; i < nr; ++i) {
            const double rho = 0.5 * std::pow(16.0, i / double(nr - 1));
            for (const auto& d : dirs) out.push_back({scale(d, rho * st), t});
        }
    }
    return out;
}

inline double kernel_magnitude(KernelId id, const Vec3& x, double t,
                               const KernelTable& table = KernelTable::shared()) {
    switch (id) {
        case KernelId::heat: return heat_kernel(x, t);
        case KernelId::oseen_K: return frobenius(oseen(x, t, nullptr, table));
        case KernelId::oseen_grad_F: return frobenius(oseen_grad(x, t, nullptr, table));
        case KernelId::heat_grad_Ftilde: return norm2(heat_kernel_grad(x, t));
        case KernelId::E_second: return frobenius(fundamental_second(x));
        case KernelId::E_third: return frobenius(fundamental_third(x));
    }
    return 0.0;
}

// Admissible pointwise-envelope exponent range per kernel, and the exponent
// base d of the time factor t^{-(d-eta)/2}.
inline void envelope_eta_range(KernelId id, double& lo, double& hi, double& d) {
    switch (id) {
        case KernelId::heat:
            lo = 0.0; hi = std::numeric_limits<double>::infinity(); d = 3.0; break;
        case KernelId::oseen_K:
            lo = 0.0; hi = 3.0; d = 3.0; break;
        case KernelId::oseen_grad_F:
            lo = 0.0; hi = 4.0; d = 4.0; break;
        case KernelId::heat_grad_Ftilde:
            // same spatial envelopes as F but with no upper limit on eta
            lo = 0.0; hi = std::numeric_limits<double>::infinity(); d = 4.0; break;
        case KernelId::E_second:
            lo = 3.0; hi = 3.0; d = 3.0; break;
        case KernelId::E_third:
            lo = 4.0; hi = 4.0; d = 4.0; break;
    }
}

inline EnvelopeReport envelope_audit(KernelId id, double eta,
                                     const std::vector<EnvelopeSample>& samples,
                                     const KernelTable& table = KernelTable::shared()) {
    double lo, hi, d;
    envelope_eta_range(id, lo, hi, d);
    if (eta < lo || eta > hi) {
        std::ostringstream os;
        os << "envelope_audit: eta=" << eta << " out of admissible range [" << lo << ", ";
        if (std::isfinite(hi))
            os << hi;
        else
            os << "inf";
        os << ") for kernel " << kernel_name(id);
        throw std::invalid_argument(os.str());
    }
    detail::require(!samples.empty(), "envelope_audit: empty sample set");
    EnvelopeReport rep;
    rep.kernel = id;
    rep.eta = eta;
    double c = 0.0;
    for (const auto& s : samples) {
        const double v = kernel_magnitude(id, s.x, s.t, table);
        const double scaled = v * std::pow(norm2(s.x), eta) * std::pow(s.t, (d - eta) / 2.0);
        c = std::max(c, scaled);
    }
    rep.C = c;
    rep.max_violation = 0.0;
    rep.violation_count = 0;
    for (const auto& s : samples) {
        const double v = kernel_magnitude(id, s.x, s.t, table);
        const double bound = c * std::pow(norm2(s.x), -eta) * std::pow(s.t, -(d - eta) / 2.0);
        const double viol = v - bound;
        rep.max_violation = std::max(rep.max_violation, viol);
        if (viol > 1e-12 * bound) ++rep.violation_count;
    }
    std::ostringstream os;
    os << samples.size() << " samples, cube directions, 0.5<=|x|/sqrt(t)<=8";
    rep.samples = os.str();
    return rep;
}

/// ||kernel(., t)||_p by radial quadrature of the tabulated profiles plus the
/// homogeneous tail. K is not integrable (p = 1 rejected); F and Ftilde are.
inline double kernel_lp_norm(KernelId id, double p, double t,
                             const KernelTable& table = KernelTable::shared()) {
    detail::require(t > 0.0, "kernel_lp_norm: t must be > 0");
    detail::require(p >= 1.0 && std::isfinite(p), "kernel_lp_norm: p must be in [1, inf)");
    if (id == KernelId::oseen_K)
        detail::require(p > 1.0, "kernel_lp_norm: K is not integrable, need p > 1");
    const double st = std::sqrt(t);
    const Vec3 dir = {0.0, 0.0, 1.0};  // magnitudes are direction-free
    const double r_in = 1e-3 * st, r_out = KernelTable::kRhoAsymptotic * st;
    double acc = detail::gl_integrate(
        [&](double r) {
            const double v = kernel_magnitude(id, scale(dir, r), t, table);
            return 4.0 * M_PI * r * r * std::pow(v, p);
        },
        r_in, r_out, 512);
    // Homogeneous |x|^-d tail beyond the table.
    double d = (id == KernelId::oseen_K || id == KernelId::heat || id == KernelId::E_second)
                   ? 3.0
                   : 4.0;
    if (id == KernelId::heat || id == KernelId::heat_grad_Ftilde) {
        d = 0.0;  // Gaussian kernels: tail negligible
    } else {
        const double vat = kernel_magnitude(id, scale(dir, r_out), t, table);
        const double cpow = d * p - 2.0;
        if (cpow > 1.0) acc += 4.0 * M_PI * std::pow(vat, p) * std::pow(r_out, 3) / (cpow - 1.0);
    }
    // Small-ball contribution (kernel bounded at the origin for t > 0).
    const double v0 = kernel_magnitude(id, scale(dir, r_in), t, table);
    acc += 4.0 / 3.0 * M_PI * std::pow(r_in, 3) * std::pow(v0, p);
    return std::pow(acc, 1.0 / p);
}

}  // namespace bq

#endif  // BQ_KERNELS_HPP
