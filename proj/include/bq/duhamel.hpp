#ifndef BQ_DUHAMEL_HPP
#define BQ_DUHAMEL_HPP

#include <deque>
#include <functional>

#include "bq/operators.hpp"
#include "bq/spaces.hpp"

namespace bq {

namespace detail {

// Quadrature weights (c_a, c_b) for int_a^b exp(-lambda (b-s)) G(s) ds with
// G piecewise linear between the endpoints: trapezoid over panels refined
// geometrically toward s = b, where the heat multiplier varies fastest.
// kPanels halvings resolve exp(-lambda (b-s)) down to offsets dt 2^-kPanels.
constexpr int kDuhamelPanels = 8;

struct EndpointWeights {
    double ca, cb;
};

inline EndpointWeights duhamel_weights(double lambda, double dt) {
    // expd[j] = exp(-lambda dt 2^-j), finest first, then repeated squaring.
    std::array<double, kDuhamelPanels> expd;
    expd[kDuhamelPanels - 1] = std::exp(-lambda * dt / double(1 << (kDuhamelPanels - 1)));
    for (int j = kDuhamelPanels - 2; j >= 0; --j) expd[j] = expd[j + 1] * expd[j + 1];

    double ca = 0.0, cb = 0.0;
    // Panel p: [b - dt 2^-p, b - dt 2^-(p+1)] for p = 0..kPanels-2, last
    // panel reaches b. u = (s-a)/dt.
    for (int p = 0; p < kDuhamelPanels; ++p) {
        const double offL = dt / double(1 << p);
        const double offR = (p == kDuhamelPanels - 1) ? 0.0 : dt / double(1 << (p + 1));
        const double w = offL - offR;
        const double uL = 1.0 - offL / dt;
        const double uR = 1.0 - offR / dt;
        const double eL = expd[p];
        const double eR = (p == kDuhamelPanels - 1) ? 1.0 : expd[p + 1];
        ca += 0.5 * w * (eL * (1.0 - uL) + eR * (1.0 - uR));
        cb += 0.5 * w * (eL * uL + eR * uR);
    }
    return {ca, cb};
}

// Marching Duhamel accumulator for one spectral component:
//   acc(t_{i+1}) = exp(-lambda dt) acc(t_i) + int_{t_i}^{t_{i+1}} ...
inline void duhamel_advance(PadSpec& acc, const PadSpec& Ga, const PadSpec& Gb, double dt) {
    for_each_mode(acc, [&](std::size_t i, double xx, double xy, double xz, double) {
        const double lambda = kFourPi2 * (xx * xx + xy * xy + xz * xz);
        const auto w = duhamel_weights(lambda, dt);
        acc[i] = std::exp(-lambda * dt) * acc[i] + w.ca * Ga[i] + w.cb * Gb[i];
    });
}

inline std::size_t series_index_of(const std::vector<double>& times, double t) {
    for (std::size_t i = 0; i < times.size(); ++i)
        if (std::abs(times[i] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return i;
    throw std::invalid_argument("duhamel: t must coincide with a sample time");
}

inline void check_coverage(const std::vector<double>& times, double t) {
    require(!times.empty() && times.front() <= 1e-12,
            "duhamel: series must start at t = 0");
    require(times.back() >= t - 1e-9, "duhamel: series does not cover [0, t]");
    require(t > 0.0, "duhamel: t must be > 0");
}

}  // namespace detail

/// L(theta)(t) = int_0^t e^{(t-s)Delta} P [theta(s) e3] ds on the padded
/// spectral grid. Marching quadrature: trapezoid in s with geometric substep
/// refinement toward the upper endpoint, exact heat factors between samples.
/// Output is in the range of the projector (solenoidal mode by mode).
inline std::array<PadSpec, 3> duhamel_L_spec(const ScalarSeries& theta, double t) {
    detail::check_coverage(theta.times, t);
    const std::size_t m = detail::series_index_of(theta.times, t);
    const Grid3& g = theta.grid();

    auto integrand = [&](std::size_t i, std::array<PadSpec, 3>& G) {
        PadSpec th = forward_fft(theta.fields[i]);
        G[0] = PadSpec(g);
        G[1] = PadSpec(g);
        G[2] = th;  // theta e3
        leray_apply(G[0], G[1], G[2]);
    };

    std::array<PadSpec, 3> acc = {PadSpec(g), PadSpec(g), PadSpec(g)};
    std::array<PadSpec, 3> Ga, Gb;
    integrand(0, Ga);
    for (std::size_t i = 0; i + 1 <= m; ++i) {
        integrand(i + 1, Gb);
        const double dt = theta.times[i + 1] - theta.times[i];
        for (int c = 0; c < 3; ++c) detail::duhamel_advance(acc[c], Ga[c], Gb[c], dt);
        if (i + 1 == m) break;
        Ga = std::move(Gb);
        Gb = {};
    }
    return acc;
}

inline VectorField duhamel_L(const ScalarSeries& theta, double t) {
    return crop3(duhamel_L_spec(theta, t));
}

namespace detail {

// Shared product-spectrum marching for the bilinear terms. `build`
// fills the vector accumulator integrand (may be empty) and the scalar one.
struct BilinearIntegrand {
    std::array<PadSpec, 3> Gu;  // velocity-equation integrand (projected)
    PadSpec Gth;                // temperature-equation integrand
    bool has_u = false, has_th = false;
};

inline PadSpec product_fft(const ScalarField& a, const ScalarField& b) {
    ScalarField p(a.grid());
    for (std::size_t i = 0, e = p.size(); i < e; ++i) p[i] = a[i] * b[i];
    return forward_fft(p);
}

}  // namespace detail

/// B(u, v)(t) = -int_0^t e^{(t-s)Delta} P div (u (x) v)(s) ds, the sign folded
/// so that u = e^{tDelta}u0 + B(u,u) + L(theta) is the fixed-point form.
inline std::array<PadSpec, 3> duhamel_B_spec(const VectorSeries& useries,
                                             const VectorSeries& vseries, double t) {
    detail::require(useries.grid() == vseries.grid(), "duhamel_B: grid mismatch");
    detail::require(useries.times == vseries.times, "duhamel_B: sample times differ");
    detail::check_coverage(useries.times, t);
    const std::size_t m = detail::series_index_of(useries.times, t);
    const Grid3& g = useries.grid();

    auto integrand = [&](std::size_t idx, std::array<PadSpec, 3>& G) {
        for (int j = 0; j < 3; ++j) {
            PadSpec acc(g);
            for (int i = 0; i < 3; ++i) {
                PadSpec s = detail::product_fft(useries.fields[idx].comp(i),
                                                vseries.fields[idx].comp(j));
                derivative_apply(s, i);
                for (std::size_t q = 0, e = acc.size(); q < e; ++q) acc[q] += s[q];
            }
            for (std::size_t q = 0, e = acc.size(); q < e; ++q) acc[q] = -acc[q];
            G[j] = std::move(acc);
        }
        leray_apply(G[0], G[1], G[2]);
    };

    std::array<PadSpec, 3> acc = {PadSpec(g), PadSpec(g), PadSpec(g)};
    std::array<PadSpec, 3> Ga, Gb;
    integrand(0, Ga);
    for (std::size_t i = 0; i + 1 <= m; ++i) {
        integrand(i + 1, Gb);
        const double dt = useries.times[i + 1] - useries.times[i];
        for (int c = 0; c < 3; ++c) detail::duhamel_advance(acc[c], Ga[c], Gb[c], dt);
        if (i + 1 == m) break;
        Ga = std::move(Gb);
        Gb = {};
    }
    return acc;
}

inline VectorField duhamel_B(const VectorSeries& useries, const VectorSeries& vseries,
                             double t) {
    return crop3(duhamel_B_spec(useries, vseries, t));
}

/// Btilde(theta, u)(t) = -int_0^t e^{(t-s)Delta} div (theta u)(s) ds.
/// The divergence form pins the spatial mean of the output to zero.
inline PadSpec duhamel_Btilde_spec(const ScalarSeries& theta, const VectorSeries& useries,
                                   double t) {
    detail::require(theta.grid() == useries.grid(), "duhamel_Btilde: grid mismatch");
    detail::require(theta.times == useries.times, "duhamel_Btilde: sample times differ");
    detail::check_coverage(theta.times, t);
    const std::size_t m = detail::series_index_of(theta.times, t);
    const Grid3& g = theta.grid();

    auto integrand = [&](std::size_t idx, PadSpec& G) {
        G = PadSpec(g);
        for (int i = 0; i < 3; ++i) {
            PadSpec s = detail::product_fft(theta.fields[idx], useries.fields[idx].comp(i));
            derivative_apply(s, i);
            for (std::size_t q = 0, e = G.size(); q < e; ++q) G[q] -= s[q];
        }
    };

    PadSpec acc(g), Ga, Gb;
    integrand(0, Ga);
    for (std::size_t i = 0; i + 1 <= m; ++i) {
        integrand(i + 1, Gb);
        const double dt = theta.times[i + 1] - theta.times[i];
        detail::duhamel_advance(acc, Ga, Gb, dt);
        if (i + 1 == m) break;
        Ga = std::move(Gb);
    }
    return acc;
}

inline ScalarField duhamel_Btilde(const ScalarSeries& theta, const VectorSeries& useries,
                                  double t) {
    return crop(inverse_fft(duhamel_Btilde_spec(theta, useries, t)));
}

// ---------------------------------------------------------------------------
// Retarded mollifier
// ---------------------------------------------------------------------------

/// Smooth space-time bump supported in {|z|^2 < sigma, 1 < sigma < 2}; the
/// overall constant is irrelevant because the discrete kernel is normalized
/// to unit mass.
inline double mollifier_bump(const Vec3& z, double sigma) {
    if (sigma <= 1.0 || sigma >= 2.0) return 0.0;
    const double q = dot(z, z);
    if (q >= sigma) return 0.0;
    return std::exp(-1.0 / (sigma - q)) * std::exp(-1.0 / ((sigma - 1.0) * (2.0 - sigma)));
}

/// Psi_delta(u)(., t) from past samples: mollification in space (FFT
/// convolution) and time over the window [t - 2 delta, t - delta], using only
/// strictly past values with zero extension before t = 0. The discrete
/// space-time kernel is normalized to unit mass, so a constant past history
/// reproduces the constant exactly and div commutes with the smoothing.
inline VectorField retarded_mollify(const VectorSeries& history, double delta, double t) {
    detail::require(delta > 0.0, "retarded_mollify: delta must be > 0");
    detail::require(!history.times.empty(), "retarded_mollify: empty history");
    const Grid3& g = history.grid();
    const int N = 2 * g.n;
    const double h = g.h();

    // Quadrature nodes in tau over (delta, 2 delta): the sample times of the
    // history that fall in [t - 2 delta, t - delta], zero-extended outside
    // the recorded range.
    const int q = 9;  // fixed tau rule, trapezoid
    std::array<PadSpec, 3> acc = {PadSpec(g), PadSpec(g), PadSpec(g)};
    double mass = 0.0;
    for (int iq = 0; iq < q; ++iq) {
        const double tau = delta * (1.0 + iq / double(q - 1));
        const double wq = (iq == 0 || iq == q - 1) ? 0.5 : 1.0;
        const double s = t - tau;
        if (s < history.times.front() - 1e-12 || s > history.times.back() + 1e-12)
            continue;  // zero extension
        // nearest recorded sample (histories are recorded on the step grid)
        std::size_t best = 0;
        double bd = std::abs(history.times[0] - s);
        for (std::size_t i = 1; i < history.times.size(); ++i) {
            const double d = std::abs(history.times[i] - s);
            if (d < bd) {
                bd = d;
                best = i;
            }
        }
        // spatial kernel slice at this tau, sampled at circular offsets
        PadReal ker(g);
        double slice_mass = 0.0;
        const double sigma = tau / delta;
        const double rad = std::sqrt(sigma) * delta;
        for (int dz = 0; dz < N; ++dz) {
            const double oz = (dz <= N / 2 ? dz : dz - N) * h;
            if (std::abs(oz) > rad) continue;
            for (int dy = 0; dy < N; ++dy) {
                const double oy = (dy <= N / 2 ? dy : dy - N) * h;
                if (std::abs(oy) > rad) continue;
                for (int dx = 0; dx < N; ++dx) {
                    const double ox = (dx <= N / 2 ? dx : dx - N) * h;
                    if (std::abs(ox) > rad) continue;
                    const double v =
                        mollifier_bump({ox / delta, oy / delta, oz / delta}, sigma);
                    if (v == 0.0) continue;
                    ker[ker.flat(dx, dy, dz)] = v;
                    slice_mass += v;
                }
            }
        }
        if (slice_mass == 0.0) continue;
        PadSpec kf = forward_fft(ker);
        for (int c = 0; c < 3; ++c) {
            PadSpec uf = forward_fft(pad(history.fields[best].comp(c)));
            // coefficient product: circular convolution of the samples; the
            // quadrature weights cancel against the discrete kernel mass
            for (std::size_t i = 0, e = uf.size(); i < e; ++i)
                acc[c][i] += wq * (kf[i] * uf[i]);
        }
        mass += wq * slice_mass * h * h * h;
    }
    if (mass == 0.0) return VectorField(g);  // t < delta with zero history
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0, e = acc[c].size(); i < e; ++i) acc[c][i] /= mass;
    return crop3(acc);
}

}  // namespace bq

#endif  // BQ_DUHAMEL_HPP
