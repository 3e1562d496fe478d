#ifndef BQ_GRID_HPP
#define BQ_GRID_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace bq {

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace detail

/// Uniform cell-centered cubic grid on [-L, L]^3.
///
/// Nodes along each axis sit at x_i = -L + (i + 1/2) h with h = 2L/n, so no
/// node ever coincides with the origin and the node set is symmetric under
/// x -> -x. Transforms pad to 2n per axis; n must be even for the padded
/// grid to align.
struct Grid3 {
    int n = 0;       // nodes per axis
    double L = 0.0;  // box half-width

    Grid3() = default;
    Grid3(int n_, double L_) : n(n_), L(L_) {
        detail::require(n >= 8, "Grid3: n must be >= 8");
        detail::require(n % 2 == 0, "Grid3: n must be even");
        detail::require(L > 0.0, "Grid3: L must be positive");
    }

    double h() const { return 2.0 * L / n; }
    double node(int i) const { return -L + (i + 0.5) * h(); }
    std::size_t size() const { return static_cast<std::size_t>(n) * n * n; }

    // Row-major with x fastest: flat = (iz*n + iy)*n + ix.
    std::size_t flat(int ix, int iy, int iz) const {
        return (static_cast<std::size_t>(iz) * n + iy) * n + ix;
    }

    bool operator==(const Grid3& o) const { return n == o.n && L == o.L; }
    bool operator!=(const Grid3& o) const { return !(*this == o); }
};

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline double norm2(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 scale(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }

/// Real scalar samples on a Grid3 (temperature, pressure, ...).
class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(const Grid3& g, double fill = 0.0)
        : grid_(g), v_(g.size(), fill) {}

    const Grid3& grid() const { return grid_; }
    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }
    std::size_t size() const { return v_.size(); }
    double& operator[](std::size_t i) { return v_[i]; }
    double operator[](std::size_t i) const { return v_[i]; }
    double& at(int ix, int iy, int iz) { return v_[grid_.flat(ix, iy, iz)]; }
    double at(int ix, int iy, int iz) const { return v_[grid_.flat(ix, iy, iz)]; }

    bool finite() const {
        for (double x : v_)
            if (!std::isfinite(x)) return false;
        return true;
    }
    double max_abs() const {
        double m = 0.0;
        for (double x : v_) m = std::max(m, std::abs(x));
        return m;
    }

private:
    Grid3 grid_;
    std::vector<double> v_;
};

/// Real 3-component vector samples on a Grid3 (velocity).
class VectorField {
public:
    VectorField() = default;
    explicit VectorField(const Grid3& g)
        : grid_(g), c_{ScalarField(g), ScalarField(g), ScalarField(g)} {}

    const Grid3& grid() const { return grid_; }
    ScalarField& comp(int j) { return c_[j]; }
    const ScalarField& comp(int j) const { return c_[j]; }

    bool finite() const { return c_[0].finite() && c_[1].finite() && c_[2].finite(); }
    double max_abs() const {
        return std::max({c_[0].max_abs(), c_[1].max_abs(), c_[2].max_abs()});
    }
    Vec3 at(int ix, int iy, int iz) const {
        return {c_[0].at(ix, iy, iz), c_[1].at(ix, iy, iz), c_[2].at(ix, iy, iz)};
    }

private:
    Grid3 grid_;
    std::array<ScalarField, 3> c_;
};

}  // namespace bq

#endif  // BQ_GRID_HPP
