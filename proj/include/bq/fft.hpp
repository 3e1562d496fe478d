#ifndef BQ_FFT_HPP
#define BQ_FFT_HPP

#include <fftw3.h>

#include <complex>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>

#include "bq/grid.hpp"

namespace bq {

namespace detail {

template <typename T>
class FFTWBuffer {
public:
    FFTWBuffer() = default;
    explicit FFTWBuffer(std::size_t count) { allocate(count); }
    FFTWBuffer(const FFTWBuffer& o) {
        allocate(o.count_);
        if (count_) std::memcpy(p_, o.p_, count_ * sizeof(T));
    }
    FFTWBuffer(FFTWBuffer&& o) noexcept : p_(o.p_), count_(o.count_) {
        o.p_ = nullptr;
        o.count_ = 0;
    }
    FFTWBuffer& operator=(FFTWBuffer o) noexcept {
        std::swap(p_, o.p_);
        std::swap(count_, o.count_);
        return *this;
    }
    ~FFTWBuffer() {
        if (p_) fftw_free(p_);
    }

    T* data() { return p_; }
    const T* data() const { return p_; }
    std::size_t size() const { return count_; }
    T& operator[](std::size_t i) { return p_[i]; }
    const T& operator[](std::size_t i) const { return p_[i]; }
    void zero() {
        if (count_) std::memset(p_, 0, count_ * sizeof(T));
    }

private:
    void allocate(std::size_t count) {
        count_ = count;
        p_ = count ? static_cast<T*>(fftw_malloc(count * sizeof(T))) : nullptr;
        if (count && !p_) throw std::bad_alloc();
    }
    T* p_ = nullptr;
    std::size_t count_ = 0;
};

}  // namespace detail

using cplx = std::complex<double>;

/// Real workspace on the zero-padded grid: N = 2n nodes per axis covering
/// [-2L, 2L], same spacing h as the inner grid. The inner box occupies the
/// centered index window [n/2, 3n/2).
class PadReal {
public:
    PadReal() = default;
    explicit PadReal(const Grid3& g)
        : grid_(g), buf_(static_cast<std::size_t>(2 * g.n) * (2 * g.n) * (2 * g.n)) {
        buf_.zero();
    }

    const Grid3& grid() const { return grid_; }
    int N() const { return 2 * grid_.n; }
    double coord(int j) const { return -2.0 * grid_.L + (j + 0.5) * grid_.h(); }
    std::size_t flat(int jx, int jy, int jz) const {
        return (static_cast<std::size_t>(jz) * N() + jy) * N() + jx;
    }
    double* data() { return buf_.data(); }
    const double* data() const { return buf_.data(); }
    std::size_t size() const { return buf_.size(); }
    double& operator[](std::size_t i) { return buf_[i]; }
    double operator[](std::size_t i) const { return buf_[i]; }
    void zero() { buf_.zero(); }

private:
    Grid3 grid_;
    detail::FFTWBuffer<double> buf_;
};

/// Half-complex (r2c) coefficients on the padded grid. Index layout is
/// (kz, ky, kx) row-major with kx in [0, N/2]; ky, kz wrap negative
/// frequencies FFTW-style. Values follow the convention
/// F(xi) = h^3 sum_x f(x) exp(-2 pi i x.xi) up to the fixed grid phase
/// (see SpectralField::coefficient for the phase-correct accessor).
class PadSpec {
public:
    PadSpec() = default;
    explicit PadSpec(const Grid3& g)
        : grid_(g),
          buf_(static_cast<std::size_t>(2 * g.n) * (2 * g.n) * (g.n + 1)) {
        buf_.zero();
    }

    const Grid3& grid() const { return grid_; }
    int N() const { return 2 * grid_.n; }
    int nx_half() const { return grid_.n + 1; }  // stored kx count
    std::size_t flat(int kx, int ky, int kz) const {
        return (static_cast<std::size_t>(kz) * N() + ky) * nx_half() + kx;
    }
    cplx* data() { return buf_.data(); }
    const cplx* data() const { return buf_.data(); }
    std::size_t size() const { return buf_.size(); }
    cplx& operator[](std::size_t i) { return buf_[i]; }
    const cplx& operator[](std::size_t i) const { return buf_[i]; }
    void zero() { buf_.zero(); }

    /// Signed frequency index for a stored wrap-around index.
    int signed_k(int k) const { return k <= N() / 2 ? k : k - N(); }
    /// Physical frequency for a signed index: xi = k / (4 L).
    double xi(int k_signed) const { return k_signed / (4.0 * grid_.L); }

private:
    Grid3 grid_;
    detail::FFTWBuffer<cplx> buf_;
};

/// FFTW plan pair for one padded size, shared process-wide. Plans are
/// created once with FFTW_ESTIMATE (deterministic plan choice) and executed
/// on caller buffers via the new-array interface; all buffers come from
/// fftw_malloc so alignment always matches.
class SpectralEngine {
public:
    static SpectralEngine& get(const Grid3& g) {
        static std::mutex mu;
        static std::map<int, std::unique_ptr<SpectralEngine>> cache;
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(g.n);
        if (it == cache.end())
            it = cache.emplace(g.n, std::unique_ptr<SpectralEngine>(new SpectralEngine(g.n))).first;
        return *it->second;
    }

    /// out = h^3 * DFT(in). Input is preserved.
    void forward(const Grid3& g, const PadReal& in, PadSpec& out) const {
        PadReal tmp(in);  // r2c may destroy its input
        fftw_execute_dft_r2c(r2c_, tmp.data(),
                             reinterpret_cast<fftw_complex*>(out.data()));
        const double s = g.h() * g.h() * g.h();
        cplx* o = out.data();
        for (std::size_t i = 0, m = out.size(); i < m; ++i) o[i] *= s;
    }

    /// out = IDFT(in) / (N^3 h^3). Input is preserved.
    void inverse(const Grid3& g, const PadSpec& in, PadReal& out) const {
        PadSpec tmp(in);  // c2r destroys its input
        fftw_execute_dft_c2r(c2r_, reinterpret_cast<fftw_complex*>(tmp.data()),
                             out.data());
        const double vol = 4.0 * g.L * 4.0 * g.L * 4.0 * g.L;  // (N h)^3
        double* o = out.data();
        for (std::size_t i = 0, m = out.size(); i < m; ++i) o[i] /= vol;
    }

    SpectralEngine(const SpectralEngine&) = delete;
    SpectralEngine& operator=(const SpectralEngine&) = delete;
    ~SpectralEngine() {
        fftw_destroy_plan(r2c_);
        fftw_destroy_plan(c2r_);
    }

private:
    explicit SpectralEngine(int n) {
        const int N = 2 * n;
        detail::FFTWBuffer<double> r(static_cast<std::size_t>(N) * N * N);
        detail::FFTWBuffer<cplx> c(static_cast<std::size_t>(N) * N * (n + 1));
        r2c_ = fftw_plan_dft_r2c_3d(N, N, N, r.data(),
                                    reinterpret_cast<fftw_complex*>(c.data()),
                                    FFTW_ESTIMATE);
        c2r_ = fftw_plan_dft_c2r_3d(N, N, N,
                                    reinterpret_cast<fftw_complex*>(c.data()),
                                    r.data(), FFTW_ESTIMATE);
        if (!r2c_ || !c2r_) throw std::runtime_error("SpectralEngine: FFTW planning failed");
    }

    fftw_plan r2c_ = nullptr;
    fftw_plan c2r_ = nullptr;
};

/// Embed an inner-box field into the centered window of the padded grid.
inline PadReal pad(const ScalarField& f) {
    const Grid3& g = f.grid();
    PadReal out(g);
    const int n = g.n, off = g.n / 2, N = 2 * g.n;
    for (int iz = 0; iz < n; ++iz)
        for (int iy = 0; iy < n; ++iy) {
            const double* src = f.data() + g.flat(0, iy, iz);
            double* dst = out.data() + ((static_cast<std::size_t>(iz + off) * N + iy + off) * N + off);
            std::memcpy(dst, src, sizeof(double) * n);
        }
    return out;
}

/// Extract the centered inner-box window of a padded field.
inline ScalarField crop(const PadReal& p) {
    const Grid3& g = p.grid();
    ScalarField out(g);
    const int n = g.n, off = g.n / 2, N = 2 * g.n;
    for (int iz = 0; iz < n; ++iz)
        for (int iy = 0; iy < n; ++iy) {
            const double* src = p.data() + ((static_cast<std::size_t>(iz + off) * N + iy + off) * N + off);
            std::memcpy(out.data() + g.flat(0, iy, iz), src, sizeof(double) * n);
        }
    return out;
}

inline PadSpec forward_fft(const PadReal& r) {
    PadSpec out(r.grid());
    SpectralEngine::get(r.grid()).forward(r.grid(), r, out);
    return out;
}

inline PadReal inverse_fft(const PadSpec& s) {
    PadReal out(s.grid());
    SpectralEngine::get(s.grid()).inverse(s.grid(), s, out);
    return out;
}

inline PadSpec forward_fft(const ScalarField& f) { return forward_fft(pad(f)); }

/// Loop over all stored modes calling fn(flat_index, xi_x, xi_y, xi_z,
/// hermitian_weight). The weight is 2 for interior kx (conjugate partner not
/// stored), 1 on the kx = 0 and kx = N/2 planes; it makes Parseval sums over
/// the half storage equal full-cube sums.
template <typename F>
inline void for_each_mode(const PadSpec& s, F&& fn) {
    const int N = s.N(), nxh = s.nx_half();
    const double dxi = 1.0 / (4.0 * s.grid().L);
    std::size_t idx = 0;
    for (int kz = 0; kz < N; ++kz) {
        const double xz = dxi * (kz <= N / 2 ? kz : kz - N);
        for (int ky = 0; ky < N; ++ky) {
            const double xy = dxi * (ky <= N / 2 ? ky : ky - N);
            for (int kx = 0; kx < nxh; ++kx, ++idx) {
                const double w = (kx == 0 || kx == N / 2) ? 1.0 : 2.0;
                fn(idx, dxi * kx, xy, xz, w);
            }
        }
    }
}

/// Parseval: integral of f^2 over the padded box = sum w |F|^2 dxi^3.
inline double l2_norm_sq(const PadSpec& s) {
    const double dxi3 = std::pow(1.0 / (4.0 * s.grid().L), 3);
    double acc = 0.0;
    for_each_mode(s, [&](std::size_t i, double, double, double, double w) {
        acc += w * std::norm(s[i]);
    });
    return acc * dxi3;
}

/// Parseval with the |2 pi xi|^2 weight: integral of |grad f|^2.
inline double h1_seminorm_sq(const PadSpec& s) {
    const double dxi3 = std::pow(1.0 / (4.0 * s.grid().L), 3);
    const double fourpi2 = 4.0 * M_PI * M_PI;
    double acc = 0.0;
    for_each_mode(s, [&](std::size_t i, double xx, double xy, double xz, double w) {
        acc += w * fourpi2 * (xx * xx + xy * xy + xz * xz) * std::norm(s[i]);
    });
    return acc * dxi3;
}

/// User-facing spectral coefficients with the exact exp(-2 pi i x.xi)
/// convention (grid phases applied on access).
class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(PadSpec s) : spec_(std::move(s)) {}

    const Grid3& grid() const { return spec_.grid(); }
    const PadSpec& raw() const { return spec_; }
    PadSpec& raw() { return spec_; }

    /// Coefficient at signed frequency indices; kx may be negative (resolved
    /// via Hermitian symmetry of the real-field transform).
    cplx coefficient(int kx, int ky, int kz) const {
        const int N = spec_.N();
        bool conj = false;
        if (kx < 0) {
            kx = -kx;
            ky = -ky;
            kz = -kz;
            conj = true;
        }
        auto wrap = [N](int k) { return k < 0 ? k + N : k; };
        cplx v = spec_[spec_.flat(kx, wrap(ky), wrap(kz))];
        v *= phase(kx, N) * phase(ky, N) * phase(kz, N);
        return conj ? std::conj(v) : v;
    }

    double xi(int k_signed) const { return spec_.xi(k_signed); }

private:
    // Per-axis phase for node offset -2L + h/2: (-1)^k exp(-i pi k / N).
    static cplx phase(int k_signed, int N) {
        const double a = -M_PI * k_signed / N;
        double sgn = (k_signed % 2 == 0) ? 1.0 : -1.0;
        return sgn * cplx(std::cos(a), std::sin(a));
    }

    PadSpec spec_;
};

}  // namespace bq

#endif  // BQ_FFT_HPP
