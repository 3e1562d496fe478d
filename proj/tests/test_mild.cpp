#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"

using namespace bq;
using namespace bqtest;

TEST_CASE("duhamel_L: zero data, coverage errors") {
    Grid3 g(16, 8.0);
    ScalarSeries zero;
    for (int i = 0; i <= 4; ++i) zero.push(0.25 * i, ScalarField(g));
    VectorField out = duhamel_L(zero, 1.0);
    CHECK(out.max_abs() == 0.0);

    ScalarSeries late;
    late.push(0.5, ScalarField(g));
    late.push(1.0, ScalarField(g));
    CHECK_THROWS_AS(duhamel_L(late, 1.0), std::invalid_argument);   // misses t = 0
    CHECK_THROWS_AS(duhamel_L(zero, 2.0), std::invalid_argument);   // beyond the series
    CHECK_THROWS_AS(duhamel_L(zero, 0.37), std::invalid_argument);  // not a sample time
}

TEST_CASE("duhamel_L: potential-flow profile of a heat-spreading source") {
    // theta(s) = g_{1+s} (unit mass); at |x| >> sqrt(t) the buoyancy integral
    // approaches t E_{:,3}(x). Checked at x = 8 e3 against the prediction and
    // against a direct space-time quadrature of K against theta.
    Grid3 g(64, 16.0);
    const double T = 1.0;
    ScalarSeries theta;
    {
        PadSpec s = forward_fft(make_scalar(g, [](const Vec3& x) { return gaussian(x, 1.0); }));
        for (int i = 0; i <= 20; ++i) {
            if (i > 0) heat_apply(s, T / 20.0);
            theta.push(i * T / 20.0, crop(inverse_fft(s)));
        }
    }
    VectorField L = duhamel_L(theta, T);

    const Vec3 x = {g.node(32), g.node(32), g.node(48)};  // near (0, 0, 8)
    const double lz = L.comp(2).at(32, 32, 48);
    const double predicted = T * fundamental_second(x)[2][2];
    CHECK(lz == Catch::Approx(predicted).epsilon(0.10));

    // independent quadrature: L_3(x,t) = int_0^t int K_33(y,tau) g_{1+t-tau}(x-y) dy dtau
    const KernelTable& table = KernelTable::shared();
    double oracle = 0.0;
    {
        static const double gx[4] = {0.1834346424956498, 0.5255324099163290,
                                     0.7966664774136267, 0.9602898564975363};
        static const double gw[4] = {0.3626837833783620, 0.3137066458778873,
                                     0.2223810344533745, 0.1012285362903763};
        for (int q = 0; q < 8; ++q) {
            const double node = q < 4 ? -gx[q] : gx[q - 4];
            const double w = gw[q % 4];
            const double tau = 0.5 * T * (1.0 + node);
            double space = 0.0;
            const double hq = 0.5;
            const int nn = 64;
            for (int iz = 0; iz < nn; ++iz)
                for (int iy = 0; iy < nn; ++iy)
                    for (int ix = 0; ix < nn; ++ix) {
                        const Vec3 y = {-16.0 + (ix + 0.5) * hq, -16.0 + (iy + 0.5) * hq,
                                        -16.0 + (iz + 0.5) * hq};
                        const Mat3 K = oseen(y, tau, nullptr, table);
                        const Vec3 d = {x[0] - y[0], x[1] - y[1], x[2] - y[2]};
                        space += K[2][2] * gaussian(d, 1.0 + T - tau);
                    }
            oracle += w * space * hq * hq * hq * 0.5 * T;
        }
    }
    CHECK(lz == Catch::Approx(oracle).epsilon(0.03));

    // solenoidal by construction (projector range, padded representation)
    auto spec = duhamel_L_spec(theta, T);
    PadSpec div(g);
    double dmax = 0.0, smax = 0.0;
    for_each_mode(div, [&](std::size_t i, double xx, double xy, double xz, double) {
        const cplx dv = xx * spec[0][i] + xy * spec[1][i] + xz * spec[2][i];
        dmax = std::max(dmax, std::abs(dv));
        smax = std::max(smax, std::abs(spec[2][i]));
    });
    CHECK(dmax <= 1e-12 * smax);
}

TEST_CASE("duhamel_B and duhamel_Btilde: zero data, bilinearity, zero mean") {
    Grid3 g(24, 12.0);
    const double T = 0.5;
    VectorSeries useries, u2series, vseries;
    ScalarSeries thseries;
    for (int i = 0; i <= 5; ++i) {
        const double t = T / 5.0 * i;
        VectorField u = random_solenoidal(g, 40 + i);  // frozen smooth histories
        VectorField u2(g);
        for (int c = 0; c < 3; ++c)
            for (std::size_t q = 0; q < u2.comp(c).size(); ++q)
                u2.comp(c)[q] = 2.0 * u.comp(c)[q];
        useries.push(t, u);
        u2series.push(t, std::move(u2));
        vseries.push(t, random_solenoidal(g, 90 + i));
        thseries.push(t, random_smooth(g, 140 + i));
    }

    VectorSeries zvec;
    ScalarSeries zsc;
    for (int i = 0; i <= 5; ++i) {
        zvec.push(T / 5.0 * i, VectorField(g));
        zsc.push(T / 5.0 * i, ScalarField(g));
    }
    CHECK(duhamel_B(zvec, zvec, T).max_abs() == 0.0);
    CHECK(duhamel_Btilde(zsc, zvec, T).max_abs() == 0.0);
    CHECK(duhamel_Btilde(thseries, zvec, T).max_abs() == 0.0);

    // bilinearity in the first slot
    VectorField b1 = duhamel_B(u2series, vseries, T);
    VectorField b0 = duhamel_B(useries, vseries, T);
    double worst = 0.0;
    for (int c = 0; c < 3; ++c)
        for (std::size_t q = 0; q < b0.comp(c).size(); ++q)
            worst = std::max(worst, std::abs(b1.comp(c)[q] - 2.0 * b0.comp(c)[q]));
    CHECK(worst <= 1e-12 * b0.max_abs());

    // divergence form: the spatial mean of Btilde vanishes identically
    PadSpec bt = duhamel_Btilde_spec(thseries, useries, T);
    CHECK(std::abs(bt[0]) == 0.0);

    // grid mismatch rejected
    VectorSeries other;
    other.push(0.0, VectorField(Grid3(16, 12.0)));
    CHECK_THROWS_AS(duhamel_Btilde(thseries, other, T), std::invalid_argument);
}

TEST_CASE("retarded mollifier: constant history, zero extension, commutation") {
    Grid3 g(32, 8.0);
    const double delta = 1.0;

    SECTION("constant past reproduces the constant away from the box edge") {
        VectorSeries hist;
        for (int i = 0; i <= 12; ++i) {
            VectorField c(g);
            for (int j = 0; j < 3; ++j)
                for (std::size_t q = 0; q < c.comp(j).size(); ++q) c.comp(j)[q] = 0.5 + j;
            hist.push(0.25 * i, std::move(c));
        }
        VectorField out = retarded_mollify(hist, delta, 3.0);
        double worst = 0.0;
        for (int iz = 8; iz < 24; ++iz)
            for (int iy = 8; iy < 24; ++iy)
                for (int ix = 8; ix < 24; ++ix)
                    for (int j = 0; j < 3; ++j)
                        worst = std::max(worst,
                                         std::abs(out.comp(j).at(ix, iy, iz) - (0.5 + j)));
        CHECK(worst <= 1e-12);
    }

    SECTION("zero extension: t < delta with empty past gives 0") {
        VectorSeries hist;
        VectorField c(g);
        for (std::size_t q = 0; q < c.comp(0).size(); ++q) c.comp(0)[q] = 1.0;
        hist.push(0.0, std::move(c));
        VectorField out = retarded_mollify(hist, delta, 0.5);
        CHECK(out.max_abs() == 0.0);
    }

    SECTION("solenoidal history stays solenoidal") {
        Grid3 gw(48, 12.0);  // contained and spectrally resolved history fields
        VectorSeries hist;
        for (int i = 0; i <= 10; ++i) hist.push(0.25 * i, random_solenoidal(gw, 60 + i));
        VectorField out = retarded_mollify(hist, delta, 2.5);
        CHECK(divergence_rel(out) <= 1e-8);
    }

    SECTION("rejects nonpositive delta") {
        VectorSeries hist;
        hist.push(0.0, VectorField(g));
        CHECK_THROWS_AS(retarded_mollify(hist, 0.0, 1.0), std::invalid_argument);
    }
}

TEST_CASE("scaling norms: construction identities and parameter ranges") {
    Grid3 g(24, 8.0);

    // X-norm of u = 1/(sqrt t + |x|) is exactly 1 on any sample set
    VectorSeries xs;
    for (double t : {0.25, 1.0, 4.0}) {
        VectorField u = make_vector(g, [&](const Vec3& x) {
            const double v = 1.0 / (std::sqrt(t) + norm2(x));
            return Vec3{v, 0.0, 0.0};
        });
        xs.push(t, std::move(u));
    }
    CHECK(scaling_norm(xs, SpaceDescriptor{SpaceKind::X, 0.0}) ==
          Catch::Approx(1.0).epsilon(1e-12));

    // Y-norm of g_{1+t}: the L_inf(L1) part is 1; positive homogeneity
    ScalarSeries ys;
    for (double t : {0.0, 1.0, 4.0})
        ys.push(t, make_scalar(g, [&](const Vec3& x) { return gaussian(x, 1.0 + t); }));
    const double y = scaling_norm(ys, SpaceDescriptor{SpaceKind::Y, 0.0});
    CHECK(y >= 1.0 - 1e-6);
    CHECK(y < 3.0);
    ScalarSeries ys2;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        ScalarField f = ys.fields[i];
        for (std::size_t q = 0; q < f.size(); ++q) f[q] *= 2.0;
        ys2.push(ys.times[i], std::move(f));
    }
    CHECK(scaling_norm(ys2, SpaceDescriptor{SpaceKind::Y, 0.0}) ==
          Catch::Approx(2.0 * y).epsilon(1e-12));

    // zero series in the envelope spaces
    VectorSeries zs;
    zs.push(1.0, VectorField(g));
    CHECK(scaling_norm(zs, SpaceDescriptor{SpaceKind::Xa, 2.0}) == 0.0);

    // parameter ranges
    CHECK_THROWS_AS(scaling_norm(zs, SpaceDescriptor{SpaceKind::Xa, 3.5}),
                    std::invalid_argument);
    CHECK_THROWS_AS(scaling_norm(zs, SpaceDescriptor{SpaceKind::Xa_tilde, 1.0}),
                    std::invalid_argument);
    ScalarSeries zsc;
    zsc.push(1.0, ScalarField(g));
    CHECK_THROWS_AS(scaling_norm(zsc, SpaceDescriptor{SpaceKind::Yb, 2.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(scaling_norm(zsc, SpaceDescriptor{SpaceKind::Yb_tilde, 3.0}),
                    std::invalid_argument);
    // wrong field category
    CHECK_THROWS_AS(scaling_norm(zs, SpaceDescriptor{SpaceKind::Y, 0.0}),
                    std::invalid_argument);
}

TEST_CASE("smallness gate: measurement and thresholds") {
    Grid3 g(48, 12.0);
    const double eps = 0.05;

    SECTION("zero data passes") {
        GateReport r = smallness_gate(VectorField(g), ScalarField(g), eps);
        CHECK(r.pass());
        CHECK(r.theta_l1 == 0.0);
    }

    SECTION("Gaussian amplitude drives the L1 quantity") {
        for (double frac : {0.9, 1.1}) {
            const double A = frac * eps;
            ScalarField th =
                make_scalar(g, [&](const Vec3& x) { return A * gaussian(x, 1.0); });
            GateReport r = smallness_gate(VectorField(g), th, eps);
            CHECK(r.theta_l1 == Catch::Approx(A).epsilon(1e-8));
            CHECK(r.theta_l1_ok == (frac < 1.0));
        }
    }

    SECTION("sup |x|^3 theta against the 1D maximization oracle") {
        ScalarField th = make_scalar(g, [&](const Vec3& x) { return gaussian(x, 1.0); });
        GateReport r = smallness_gate(VectorField(g), th, 1.0);
        double oracle = 0.0;
        for (double rho = 0.1; rho < 8.0; rho += 1e-4)
            oracle = std::max(oracle, rho * rho * rho * gaussian({rho, 0, 0}, 1.0));
        // the continuum maximum sits at rho = sqrt(6)
        CHECK(oracle == Catch::Approx(std::pow(6.0, 1.5) * std::pow(4.0 * M_PI, -1.5) *
                                      std::exp(-1.5)).epsilon(1e-6));
        CHECK(r.theta_sup3 <= oracle * (1.0 + 1e-12));
        CHECK(r.theta_sup3 >= 0.98 * oracle);
    }

    CHECK_THROWS_AS(smallness_gate(VectorField(g), ScalarField(g), 0.0),
                    std::invalid_argument);
}
