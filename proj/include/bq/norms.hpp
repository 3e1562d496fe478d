#ifndef BQ_NORMS_HPP
#define BQ_NORMS_HPP

#include <algorithm>
#include <cstdint>
#include <limits>
#include <sstream>
#include <vector>

#include "bq/grid.hpp"
#include "bq/fft.hpp"

namespace bq {

enum class NormKind : std::uint8_t { lebesgue, weighted, weak };

/// Which norm to sample: L^p, weighted L^p_r with weight (1+|x|)^r, or the
/// weak-L^p quasinorm sup_s s lambda(s)^{1/p}.
struct NormDescriptor {
    double p = 2.0;  // exponent, may be infinity for lebesgue
    double r = 0.0;  // weight exponent
    NormKind kind = NormKind::lebesgue;

    void validate() const {
        detail::require(p >= 1.0, "NormDescriptor: p must be >= 1");
        detail::require(r >= 0.0, "NormDescriptor: r must be >= 0");
        if (kind == NormKind::weak)
            detail::require(p > 1.0 && std::isfinite(p),
                            "NormDescriptor: weak norm requires 1 < p < inf");
        if (kind == NormKind::weighted)
            detail::require(std::isfinite(p), "NormDescriptor: weighted norm requires p < inf");
    }

    std::string label() const {
        std::ostringstream os;
        auto num = [](double x) {
            std::ostringstream o;
            if (!std::isfinite(x)) {
                o << "inf";
            } else if (x == static_cast<long long>(x)) {
                o << static_cast<long long>(x);
            } else {
                o << x;
            }
            return o.str();
        };
        if (kind == NormKind::weak)
            os << "weak_Lp:p=" << num(p);
        else
            os << "Lp_r:p=" << num(p) << ",r=" << num(r);
        return os.str();
    }
};

struct NormSample {
    double t = 0.0;
    double value = 0.0;
};

/// A norm bound to one of the state fields for time-series recording.
struct TrackedNorm {
    std::string field;  // "u" or "theta"
    NormDescriptor descriptor;
    std::string label() const { return field + ":" + descriptor.label(); }
};

/// Sampled time evolution of one norm.
struct NormSeries {
    NormDescriptor descriptor;
    std::vector<NormSample> samples;

    void push(double t, double value) {
        detail::require(std::isfinite(value) && value >= 0.0,
                        "NormSeries: value must be finite and >= 0");
        detail::require(samples.empty() || t > samples.back().t,
                        "NormSeries: times must be strictly increasing");
        samples.push_back({t, value});
    }
};

namespace detail {

// Core quadrature shared by box fields and padded-domain fields. `value`
// maps a flat index to |f(x)|, `coord` to the node position.
template <typename ValueFn, typename CoordFn>
double norm_impl(std::size_t count, double h, const NormDescriptor& d,
                 ValueFn&& value, CoordFn&& coord) {
    d.validate();
    const double h3 = h * h * h;
    if (d.kind == NormKind::weak) {
        std::vector<double> v(count);
        for (std::size_t i = 0; i < count; ++i) v[i] = value(i);
        std::sort(v.begin(), v.end(), std::greater<double>());
        // sup over the attained levels s of s (h^3 #{|f| > s})^{1/p}; the
        // strict count keeps a sampled singularity from over-weighting its
        // own cells. Ties are detected up to rounding so that symmetric node
        // shells collapse to one level.
        double best = 0.0;
        for (std::size_t k = 1; k < v.size(); ++k) {
            if (v[k] <= 0.0) break;
            if (v[k] >= v[k - 1] * (1.0 - 1e-12)) continue;
            best = std::max(best, v[k] * std::pow(h3 * k, 1.0 / d.p));
        }
        return best;
    }
    if (!std::isfinite(d.p)) {  // lebesgue, p = inf
        double m = 0.0;
        for (std::size_t i = 0; i < count; ++i) m = std::max(m, value(i));
        return m;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        double a = value(i);
        if (a == 0.0) continue;
        double term = std::pow(a, d.p);
        if (d.kind == NormKind::weighted && d.r > 0.0) {
            const Vec3 x = coord(i);
            term *= std::pow(1.0 + norm2(x), d.p * d.r);
        }
        acc += term;
    }
    return std::pow(h3 * acc, 1.0 / d.p);
}

inline Vec3 box_coord(const Grid3& g, std::size_t i) {
    const int n = g.n;
    const int ix = static_cast<int>(i % n);
    const int iy = static_cast<int>((i / n) % n);
    const int iz = static_cast<int>(i / (static_cast<std::size_t>(n) * n));
    return {g.node(ix), g.node(iy), g.node(iz)};
}

inline Vec3 pad_coord(const PadReal& p, std::size_t i) {
    const int N = p.N();
    const int ix = static_cast<int>(i % N);
    const int iy = static_cast<int>((i / N) % N);
    const int iz = static_cast<int>(i / (static_cast<std::size_t>(N) * N));
    return {p.coord(ix), p.coord(iy), p.coord(iz)};
}

}  // namespace detail

inline double norm(const ScalarField& f, const NormDescriptor& d) {
    return detail::norm_impl(
        f.size(), f.grid().h(), d, [&](std::size_t i) { return std::abs(f[i]); },
        [&](std::size_t i) { return detail::box_coord(f.grid(), i); });
}

inline double norm(const VectorField& v, const NormDescriptor& d) {
    auto mag = [&](std::size_t i) {
        const double a = v.comp(0)[i], b = v.comp(1)[i], c = v.comp(2)[i];
        return std::sqrt(a * a + b * b + c * c);
    };
    return detail::norm_impl(v.comp(0).size(), v.grid().h(), d, mag,
                             [&](std::size_t i) { return detail::box_coord(v.grid(), i); });
}

/// Norm over the full padded domain (the solver's whole-space proxy).
inline double norm_padded(const PadReal& f, const NormDescriptor& d) {
    return detail::norm_impl(
        f.size(), f.grid().h(), d, [&](std::size_t i) { return std::abs(f[i]); },
        [&](std::size_t i) { return detail::pad_coord(f, i); });
}

inline double norm_padded(const std::array<PadReal, 3>& v, const NormDescriptor& d) {
    auto mag = [&](std::size_t i) {
        const double a = v[0][i], b = v[1][i], c = v[2][i];
        return std::sqrt(a * a + b * b + c * c);
    };
    return detail::norm_impl(v[0].size(), v[0].grid().h(), d, mag,
                             [&](std::size_t i) { return detail::pad_coord(v[0], i); });
}

struct Moments {
    double m0 = 0.0;
    Vec3 m1 = {0.0, 0.0, 0.0};
};

/// Zeroth and first moments h^3 sum theta, h^3 sum x theta.
inline Moments moments(const ScalarField& f) {
    const Grid3& g = f.grid();
    Moments out;
    double m1x = 0.0, m1y = 0.0, m1z = 0.0, m0 = 0.0;
    std::size_t i = 0;
    for (int iz = 0; iz < g.n; ++iz) {
        const double z = g.node(iz);
        for (int iy = 0; iy < g.n; ++iy) {
            const double y = g.node(iy);
            for (int ix = 0; ix < g.n; ++ix, ++i) {
                const double x = g.node(ix);
                const double v = f[i];
                m0 += v;
                m1x += x * v;
                m1y += y * v;
                m1z += z * v;
            }
        }
    }
    const double h3 = std::pow(g.h(), 3);
    out.m0 = h3 * m0;
    out.m1 = {h3 * m1x, h3 * m1y, h3 * m1z};
    return out;
}

inline Moments moments_padded(const PadReal& f) {
    Moments out;
    double m1x = 0.0, m1y = 0.0, m1z = 0.0, m0 = 0.0;
    const int N = f.N();
    std::size_t i = 0;
    for (int iz = 0; iz < N; ++iz) {
        const double z = f.coord(iz);
        for (int iy = 0; iy < N; ++iy) {
            const double y = f.coord(iy);
            for (int ix = 0; ix < N; ++ix, ++i) {
                const double x = f.coord(ix);
                const double v = f[i];
                m0 += v;
                m1x += x * v;
                m1y += y * v;
                m1z += z * v;
            }
        }
    }
    const double h3 = std::pow(f.grid().h(), 3);
    out.m0 = h3 * m0;
    out.m1 = {h3 * m1x, h3 * m1y, h3 * m1z};
    return out;
}

/// Fraction of the quadratic mass sum f^2 inside |x| <= L/2; 1 for the zero
/// field. Gauges how well the free-space approximation still holds.
inline double containment(const PadReal& f) {
    const double half = f.grid().L / 2.0;
    double inside = 0.0, total = 0.0;
    const int N = f.N();
    std::size_t i = 0;
    for (int iz = 0; iz < N; ++iz) {
        const double z = f.coord(iz);
        for (int iy = 0; iy < N; ++iy) {
            const double y = f.coord(iy);
            for (int ix = 0; ix < N; ++ix, ++i) {
                const double x = f.coord(ix);
                const double q = f[i] * f[i];
                total += q;
                if (x * x + y * y + z * z <= half * half) inside += q;
            }
        }
    }
    return total == 0.0 ? 1.0 : inside / total;
}

}  // namespace bq

#endif  // BQ_NORMS_HPP
