#ifndef BQ_OPERATORS_HPP
#define BQ_OPERATORS_HPP

#include <array>
#include <utility>

#include "bq/fft.hpp"

namespace bq {

constexpr double kTwoPi = 2.0 * M_PI;
constexpr double kFourPi2 = 4.0 * M_PI * M_PI;

/// Multiply by the heat symbol exp(-4 pi^2 |xi|^2 t).
inline void heat_apply(PadSpec& s, double t) {
    detail::require(t >= 0.0, "heat_apply: t must be >= 0");
    if (t == 0.0) return;
    for_each_mode(s, [&](std::size_t i, double xx, double xy, double xz, double) {
        s[i] *= std::exp(-kFourPi2 * (xx * xx + xy * xy + xz * xz) * t);
    });
}

/// Multiply by 2 pi i xi_axis (spectral partial derivative). The Nyquist
/// plane of the differentiated axis is zeroed to keep the result real.
inline void derivative_apply(PadSpec& s, int axis) {
    const int N = s.N();
    const int nxh = s.nx_half();
    const double dxi = 1.0 / (4.0 * s.grid().L);
    std::size_t idx = 0;
    for (int kz = 0; kz < N; ++kz) {
        const int skz = kz <= N / 2 ? kz : kz - N;
        for (int ky = 0; ky < N; ++ky) {
            const int sky = ky <= N / 2 ? ky : ky - N;
            for (int kx = 0; kx < nxh; ++kx, ++idx) {
                int k = axis == 0 ? kx : (axis == 1 ? sky : skz);
                if (std::abs(k) == N / 2) k = 0;
                s[idx] *= cplx(0.0, kTwoPi * dxi * k);
            }
        }
    }
}

/// Leray projection symbol I - xi xi^T / |xi|^2 applied in place.
/// Convention: identity at xi = 0 (a constant field is divergence-free).
inline void leray_apply(PadSpec& sx, PadSpec& sy, PadSpec& sz) {
    for_each_mode(sx, [&](std::size_t i, double xx, double xy, double xz, double) {
        const double q = xx * xx + xy * xy + xz * xz;
        if (q == 0.0) return;
        const cplx d = (xx * sx[i] + xy * sy[i] + xz * sz[i]) / q;
        sx[i] -= xx * d;
        sy[i] -= xy * d;
        sz[i] -= xz * d;
    });
}

/// Divide by 4 pi^2 |xi|^2 (inverse of -Laplacian); zero mode set to 0.
inline void invert_neg_laplacian(PadSpec& s) {
    for_each_mode(s, [&](std::size_t i, double xx, double xy, double xz, double) {
        const double q = kFourPi2 * (xx * xx + xy * xy + xz * xz);
        s[i] = q == 0.0 ? cplx(0.0, 0.0) : s[i] / q;
    });
}

/// 2/3-rule dealias mask, applied per axis on the padded index grid.
inline void dealias_23(PadSpec& s) {
    const int N = s.N();
    const int cut = (2 * (N / 2)) / 3;  // keep |k| <= cut
    const int nxh = s.nx_half();
    std::size_t idx = 0;
    for (int kz = 0; kz < N; ++kz) {
        const int akz = std::abs(kz <= N / 2 ? kz : kz - N);
        for (int ky = 0; ky < N; ++ky) {
            const int aky = std::abs(ky <= N / 2 ? ky : ky - N);
            const bool kill_yz = akz > cut || aky > cut;
            for (int kx = 0; kx < nxh; ++kx, ++idx) {
                if (kill_yz || kx > cut) s[idx] = cplx(0.0, 0.0);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Field-level operations
// ---------------------------------------------------------------------------

/// Forward transform with input validation; see SpectralField for the
/// coefficient convention.
inline SpectralField spectral_transform(const ScalarField& f) {
    detail::require(f.finite(), "spectral_transform: non-finite input field");
    return SpectralField(forward_fft(f));
}

inline ScalarField spectral_inverse(const SpectralField& s) {
    return crop(inverse_fft(s.raw()));
}

inline ScalarField heat_propagate(const ScalarField& f, double t) {
    detail::require(t >= 0.0, "heat_propagate: t must be >= 0");
    detail::require(f.finite(), "heat_propagate: non-finite input field");
    PadSpec s = forward_fft(f);
    heat_apply(s, t);
    return crop(inverse_fft(s));
}

inline std::array<PadSpec, 3> forward_fft3(const VectorField& v) {
    return {forward_fft(v.comp(0)), forward_fft(v.comp(1)), forward_fft(v.comp(2))};
}

inline VectorField crop3(const std::array<PadSpec, 3>& s) {
    VectorField out(s[0].grid());
    for (int j = 0; j < 3; ++j) out.comp(j) = crop(inverse_fft(s[j]));
    return out;
}

inline VectorField heat_propagate(const VectorField& v, double t) {
    detail::require(t >= 0.0, "heat_propagate: t must be >= 0");
    detail::require(v.finite(), "heat_propagate: non-finite input field");
    auto s = forward_fft3(v);
    for (auto& c : s) heat_apply(c, t);
    return crop3(s);
}

inline VectorField leray_project(const VectorField& v) {
    detail::require(v.finite(), "leray_project: non-finite input field");
    auto s = forward_fft3(v);
    leray_apply(s[0], s[1], s[2]);
    return crop3(s);
}

inline ScalarField divergence(const VectorField& v) {
    detail::require(v.finite(), "divergence: non-finite input field");
    auto s = forward_fft3(v);
    for (int j = 0; j < 3; ++j) derivative_apply(s[j], j);
    PadSpec acc = std::move(s[0]);
    for (std::size_t i = 0, m = acc.size(); i < m; ++i) acc[i] += s[1][i] + s[2][i];
    return crop(inverse_fft(acc));
}

inline VectorField gradient(const ScalarField& f) {
    PadSpec base = forward_fft(f);
    VectorField out(f.grid());
    for (int j = 0; j < 3; ++j) {
        PadSpec s(base);
        derivative_apply(s, j);
        out.comp(j) = crop(inverse_fft(s));
    }
    return out;
}

inline VectorField curl(const VectorField& a) {
    auto s = forward_fft3(a);
    auto d = [&](int comp, int axis) {
        PadSpec t(s[comp]);
        derivative_apply(t, axis);
        return t;
    };
    PadSpec cx = d(2, 1), cx2 = d(1, 2);
    PadSpec cy = d(0, 2), cy2 = d(2, 0);
    PadSpec cz = d(1, 0), cz2 = d(0, 1);
    for (std::size_t i = 0, m = cx.size(); i < m; ++i) {
        cx[i] -= cx2[i];
        cy[i] -= cy2[i];
        cz[i] -= cz2[i];
    }
    VectorField out(a.grid());
    out.comp(0) = crop(inverse_fft(cx));
    out.comp(1) = crop(inverse_fft(cy));
    out.comp(2) = crop(inverse_fft(cz));
    return out;
}

/// L2 size of the spectral divergence relative to the gradient scale of v;
/// 0 for the zero field.
inline double divergence_rel(const VectorField& v) {
    auto s = forward_fft3(v);
    double grad_sq = 0.0;
    for (int j = 0; j < 3; ++j) grad_sq += h1_seminorm_sq(s[j]);
    for (int j = 0; j < 3; ++j) derivative_apply(s[j], j);
    PadSpec acc = std::move(s[0]);
    for (std::size_t i = 0, m = acc.size(); i < m; ++i) acc[i] += s[1][i] + s[2][i];
    const double div_l2 = std::sqrt(l2_norm_sq(acc));
    if (grad_sq == 0.0) return 0.0;
    return div_l2 / std::sqrt(grad_sq);
}

/// Pressure split of the velocity equation: -Lap p1 = div div (u (x) u),
/// -Lap p2 = -d_3 theta, i.e. p = p1 + p2 with -p2 the x3-derivative of the
/// Newtonian potential of theta. Quadratic products are dealiased. Zero
/// modes are set to 0 (pressure is defined up to a constant).
inline std::pair<ScalarField, ScalarField> pressure_recover(const VectorField& u,
                                                            const ScalarField& theta) {
    detail::require(u.grid() == theta.grid(), "pressure_recover: grid mismatch");
    detail::require(u.finite() && theta.finite(), "pressure_recover: non-finite input");
    const Grid3& g = u.grid();

    // Dealiased velocity samples on the padded grid.
    std::array<PadReal, 3> ur;
    {
        auto s = forward_fft3(u);
        for (int j = 0; j < 3; ++j) {
            dealias_23(s[j]);
            ur[j] = inverse_fft(s[j]);
        }
    }

    // p1_hat = -xi_i xi_j S_ij / |xi|^2, assembled as div div S then
    // inverted against -Lap.
    PadSpec rhs1(g);
    PadReal prod(g);
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            const double* a = ur[i].data();
            const double* b = ur[j].data();
            double* p = prod.data();
            for (std::size_t m = 0, e = prod.size(); m < e; ++m) p[m] = a[m] * b[m];
            PadSpec s = forward_fft(prod);
            derivative_apply(s, i);
            derivative_apply(s, j);
            const double w = (i == j) ? 1.0 : 2.0;
            for (std::size_t m = 0, e = rhs1.size(); m < e; ++m) rhs1[m] += w * s[m];
        }
    // Lap p1 = -div div S  =>  (-Lap) p1 = div div S.
    invert_neg_laplacian(rhs1);
    ScalarField p1 = crop(inverse_fft(rhs1));

    // Lap p2 = d_3 theta  =>  (-Lap) p2 = -d_3 theta.
    PadSpec s2 = forward_fft(theta);
    derivative_apply(s2, 2);
    for (std::size_t m = 0, e = s2.size(); m < e; ++m) s2[m] = -s2[m];
    invert_neg_laplacian(s2);
    ScalarField p2 = crop(inverse_fft(s2));

    return {std::move(p1), std::move(p2)};
}

}  // namespace bq

#endif  // BQ_OPERATORS_HPP
