#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"

using namespace bq;
using namespace bqtest;

TEST_CASE("fit_exponent: exact power laws and error paths") {
    NormSeries s;
    for (int i = 0; i <= 40; ++i) {
        const double t = 0.5 * i;
        s.push(t, std::pow(1.0 + t, -0.75));
    }
    FitResult f = fit_exponent(s, 0.0, 20.0);
    CHECK(f.slope == Catch::Approx(-0.75).margin(1e-10));
    CHECK(f.half_width <= 1e-10);
    CHECK(f.count == 41);

    NormSeries c;
    for (int i = 0; i <= 10; ++i) c.push(0.5 * i, 3.0);
    CHECK(fit_exponent(c, 0.0, 5.0).slope == Catch::Approx(0.0).margin(1e-14));

    NormSeries few;
    for (int i = 0; i < 4; ++i) few.push(i, 1.0);
    CHECK_THROWS_AS(fit_exponent(few, 0.0, 3.0), std::invalid_argument);

    NormSeries zero;
    for (int i = 0; i <= 10; ++i) zero.push(i, i < 5 ? 1.0 : 0.0);
    CHECK_THROWS_AS(zero.push(10.0, 1.0), std::invalid_argument);  // times must increase
    NormSeries nonpos;
    for (int i = 0; i <= 10; ++i) nonpos.push(i, 1.0);
    nonpos.samples[3].value = 0.0;
    CHECK_THROWS_AS(fit_exponent(nonpos, 0.0, 10.0), std::invalid_argument);
}

TEST_CASE("linear heat flows recover the claimed decay exponents") {
    // ||e^{tDelta} g_1||_2 = (8 pi (1+t))^{-3/4}: slope -3/4 in log(1+t);
    // the dipole -d3 g_1 gives the faster -5/4
    Grid3 g(48, 20.0);
    auto run = [&](bool dipole) {
        ScalarField th0 = make_scalar(g, [&](const Vec3& x) {
            const double base = gaussian(x, 1.0);
            return dipole ? x[2] / 2.0 * base : base;
        });
        NormSeries series;
        PadSpec s = forward_fft(th0);
        double t = 0.0;
        series.push(t, std::sqrt(l2_norm_sq(s)));
        for (int i = 1; i <= 25; ++i) {
            heat_apply(s, 2.0);
            t += 2.0;
            series.push(t, std::sqrt(l2_norm_sq(s)));
        }
        return fit_exponent(series, 5.0, 50.0);
    };
    FitResult gauss = run(false);
    CHECK(gauss.slope == Catch::Approx(-0.75).margin(0.01));
    FitResult dip = run(true);
    CHECK(dip.slope == Catch::Approx(-1.25).margin(0.01));
}

TEST_CASE("predicted_exponent: table, monotonicity, verdicts") {
    CHECK(predicted_exponent(2.0, 0.0, MeanCase::nonzero_mean).value ==
          Catch::Approx(0.25));
    CHECK(predicted_exponent(2.0, 0.0, MeanCase::zero_mean).value ==
          Catch::Approx(-0.25));
    CHECK(predicted_exponent(3.0, 0.0, MeanCase::nonzero_mean).value ==
          Catch::Approx(0.0).margin(1e-15));
    CHECK(predicted_exponent(2.0, 0.5, MeanCase::nonzero_mean).value ==
          Catch::Approx(0.5));
    CHECK(predicted_exponent(4.0, 0.0, MeanCase::nonzero_mean).value ==
          Catch::Approx(-0.125));

    // out-of-range verdicts
    CHECK(predicted_exponent(2.0, 2.0, MeanCase::nonzero_mean).verdict ==
          ExponentVerdict::infinite_norm);
    CHECK(predicted_exponent(2.0, 3.0, MeanCase::zero_mean).verdict ==
          ExponentVerdict::not_covered);
    CHECK(predicted_exponent(2.0, 2.0, MeanCase::zero_mean).verdict ==
          ExponentVerdict::finite);

    // monotone in r, antitone in p, and the two cases differ by exactly 1/2
    double prev = -1.0;
    for (double r : {0.0, 0.5, 1.0, 1.4}) {
        const double v = predicted_exponent(2.0, r, MeanCase::nonzero_mean).value;
        CHECK(v > prev);
        prev = v;
    }
    prev = 1.0;
    for (double p : {1.5, 2.0, 3.0, 6.0}) {
        const double v = predicted_exponent(p, 0.0, MeanCase::nonzero_mean).value;
        CHECK(v < prev);
        prev = v;
    }
    for (double p : {1.5, 2.0, 4.0})
        for (double r : {0.0, 0.5}) {
            auto a = predicted_exponent(p, r, MeanCase::nonzero_mean);
            auto b = predicted_exponent(p, r, MeanCase::zero_mean);
            if (a.verdict == ExponentVerdict::finite && b.verdict == ExponentVerdict::finite)
                CHECK(a.value - b.value == Catch::Approx(0.5));
        }

    CHECK_THROWS_AS(predicted_exponent(1.0, 0.0, MeanCase::nonzero_mean),
                    std::invalid_argument);
    CHECK_THROWS_AS(predicted_exponent(2.0, -0.1, MeanCase::nonzero_mean),
                    std::invalid_argument);
}

TEST_CASE("predicted_theta_rate: exponents and the data constant") {
    CHECK(predicted_theta_rate(2.0).exponent == Catch::Approx(-0.75));
    CHECK(predicted_theta_rate(4.0).exponent == Catch::Approx(-1.125));
    CHECK(predicted_theta_rate(1.0).exponent == 0.0);
    // A = (||theta0||_1 / ||theta0||_p)^{2p/(3p-3)}
    ThetaRate r = predicted_theta_rate(2.0, 2.0, 1.0);
    CHECK(r.A == Catch::Approx(std::pow(2.0, 4.0 / 3.0)).epsilon(1e-14));
    CHECK_THROWS_AS(predicted_theta_rate(0.5), std::invalid_argument);
}

TEST_CASE("energy audit: zero data, heat-only equality, theta0 = 0 monotonicity") {
    Grid3 g(24, 12.0);
    SimOptions opt;
    opt.dt = 0.05;
    opt.T = 1.0;
    opt.sample_every = 2;

    SECTION("zero data satisfies everything identically") {
        Trajectory traj = simulate(VectorField(g), ScalarField(g), opt);
        EnergyAuditReport r = energy_audit(traj);
        CHECK(r.worst_theta_violation == 0.0);
        CHECK(r.worst_u_violation <= 0.0);
        CHECK(r.pass());
    }

    SECTION("pure heat flow: the dissipation identity holds to integrator order") {
        SimOptions heat = opt;
        heat.nonlinear = false;
        heat.buoyancy = false;
        ScalarField th0 = make_scalar(g, [](const Vec3& x) { return gaussian(x, 1.0); });
        Trajectory traj = simulate(VectorField(g), th0, heat);
        EnergyAuditReport r = energy_audit(traj);
        CHECK(r.theta_deviation <= 0.01);
        CHECK(r.pass());
    }

    SECTION("theta0 = 0: the velocity norm cannot grow") {
        auto u0 = generate_u(g, "solenoidal:amplitude=0.1,width=1");
        Trajectory traj = simulate(u0, ScalarField(g), opt);
        EnergyAuditReport r = energy_audit(traj);
        CHECK(r.worst_u_violation <= 1e-10);
        for (std::size_t i = 1; i < traj.u_l2.size(); ++i)
            CHECK(traj.u_l2[i] <= traj.u_l2[i - 1] * (1.0 + 1e-12));
    }

    SECTION("small-data run passes within the 1% integrator slack") {
        ScalarField th0 = make_scalar(g, [](const Vec3& x) { return 0.02 * gaussian(x, 1.0); });
        auto u0 = generate_u(g, "solenoidal:amplitude=0.01,width=1");
        Trajectory traj = simulate(u0, th0, opt);
        CHECK(energy_audit(traj).pass());
    }
}

TEST_CASE("fourier splitting audit: radius, zero-velocity reduction") {
    Grid3 g(24, 12.0);
    SimOptions opt;
    opt.dt = 0.05;
    opt.T = 1.0;
    opt.sample_every = 4;
    opt.fourier_audit = true;
    opt.split_k = 3.5;
    opt.nonlinear = false;
    opt.buoyancy = false;  // u stays 0: the advective term in the bound drops out
    ScalarField th0 = make_scalar(g, [](const Vec3& x) {
        return 0.02 * x[2] / 2.0 * gaussian(x, 1.0);
    });
    Trajectory traj = simulate(VectorField(g), th0, opt);
    REQUIRE(!traj.split_rows.empty());
    for (const auto& row : traj.split_rows) {
        CHECK(row.radius == Catch::Approx(std::sqrt(3.5 / (2.0 * (row.t + 1.0)))));
        CHECK(row.c_theta == 0.0);  // pure heat: the transport term is absent
        CHECK(row.lowfreq_theta <= row.lowfreq_bound * (1.0 + 1e-9));
    }
    // the radius at t = 1 equals sqrt(7/8) when k = 7/2
    for (const auto& row : traj.split_rows)
        if (std::abs(row.t - 1.0) < 1e-9)
            CHECK(row.radius == Catch::Approx(std::sqrt(7.0 / 8.0)).epsilon(1e-12));
}

TEST_CASE("profile_compare: synthetic exact profiles round-trip") {
    Grid3 g(48, 24.0);
    const double t = 4.0;
    auto u0 = generate_u(g, "solenoidal:amplitude=0.001,width=1");
    const double m0 = 0.5;

    SECTION("nonzero mean: u := e^{tDelta}u0 + m0 t E'' column 3") {
        VectorField u = heat_propagate(u0, t);
        std::size_t i = 0;
        for (int iz = 0; iz < g.n; ++iz)
            for (int iy = 0; iy < g.n; ++iy)
                for (int ix = 0; ix < g.n; ++ix, ++i) {
                    const Vec3 x = {g.node(ix), g.node(iy), g.node(iz)};
                    const Mat3 e = fundamental_second(x);
                    for (int c = 0; c < 3; ++c) u.comp(c)[i] += m0 * t * e[c][2];
                }
        for (double A : {2.0, 4.0, 6.0}) {
            ProfileReport r = profile_compare_fields(u, u0, t, A, MeanCase::nonzero_mean,
                                                     m0, {0, 0, 0});
            for (int c = 0; c < 3; ++c)
                CHECK(r.median_ratio[c] == Catch::Approx(1.0).margin(1e-8));
            CHECK(r.remainder_ratio <= 1e-8);
            CHECK(r.shell_nodes >= 50);
        }
    }

    SECTION("zero mean: u := e^{tDelta}u0 - E''' . m") {
        const Vec3 m = {0.0, 0.0, 0.7};
        VectorField u = heat_propagate(u0, t);
        std::size_t i = 0;
        for (int iz = 0; iz < g.n; ++iz)
            for (int iy = 0; iy < g.n; ++iy)
                for (int ix = 0; ix < g.n; ++ix, ++i) {
                    const Vec3 x = {g.node(ix), g.node(iy), g.node(iz)};
                    const Ten3 e3 = fundamental_third(x);
                    for (int c = 0; c < 3; ++c) {
                        double s = 0.0;
                        for (int k = 0; k < 3; ++k) s += e3[c][2][k] * m[k];
                        u.comp(c)[i] -= s;
                    }
                }
        ProfileReport r =
            profile_compare_fields(u, u0, t, 3.0, MeanCase::zero_mean, 0.0, m);
        for (int c = 0; c < 3; ++c)
            CHECK(r.median_ratio[c] == Catch::Approx(1.0).margin(1e-8));
        CHECK(r.remainder_ratio <= 1e-8);
    }

    SECTION("region validation") {
        VectorField u = heat_propagate(u0, 0.01);
        CHECK_THROWS_AS(
            profile_compare_fields(u, u0, 400.0, 6.0, MeanCase::nonzero_mean, 1.0, {0, 0, 0}),
            std::invalid_argument);  // shell outside the box
        CHECK_THROWS_AS(
            profile_compare_fields(u, u0, 1.0, 1.5, MeanCase::nonzero_mean, 1.0, {0, 0, 0}),
            std::invalid_argument);  // A < 2
    }
}

TEST_CASE("tail_exponent_probe: homogeneous fields and guards") {
    Grid3 g(48, 24.0);

    SECTION("E'' column 3 has exponent 3") {
        VectorField u = make_vector(g, [](const Vec3& x) {
            const Mat3 e = fundamental_second(x);
            return Vec3{e[0][2], e[1][2], e[2][2]};
        });
        ConeProbe cone;
        cone.r0 = 2.0;
        cone.r1 = 20.0;
        CHECK(tail_exponent_probe(u, cone) == Catch::Approx(3.0).margin(0.01));
    }

    SECTION("degree -4 synthetic field has exponent 4") {
        VectorField u = make_vector(g, [](const Vec3& x) {
            const double r = norm2(x);
            return Vec3{x[0] / std::pow(r, 5), 0.0, 0.0};
        });
        ConeProbe cone;
        cone.r0 = 4.0;  // steeper field: keep clear of interpolation bias
        cone.r1 = 20.0;
        CHECK(tail_exponent_probe(u, cone) == Catch::Approx(4.0).margin(0.05));
    }

    SECTION("noise floor exclusion rejects an empty sample") {
        VectorField u(g);
        for (std::size_t q = 0; q < u.comp(0).size(); ++q) u.comp(0)[q] = 1e-16;
        ConeProbe cone;
        cone.r0 = 2.0;
        cone.r1 = 20.0;
        CHECK_THROWS_AS(tail_exponent_probe(u, cone), std::invalid_argument);
    }

    SECTION("radii outside the box are rejected") {
        VectorField u(g);
        ConeProbe cone;
        cone.r0 = 20.0;
        cone.r1 = 80.0;
        CHECK_THROWS_AS(tail_exponent_probe(u, cone), std::invalid_argument);
    }
}

TEST_CASE("moment accumulator: frozen dipole gives m(t) ~ t e3") {
    // theta(s) = -d3 g_{1+s} under the pure heat flow preserves the first
    // moment, so m(t)/t -> e3 and the liminf proxy is 1
    Grid3 g(32, 16.0);
    SimOptions opt;
    opt.dt = 0.1;
    opt.T = 4.0;
    opt.sample_every = 2;
    opt.nonlinear = false;
    opt.buoyancy = false;
    opt.containment_floor = 0.0;  // the accumulator is under test, not the box
    ScalarField th0 = make_scalar(g, [](const Vec3& x) {
        return x[2] / 2.0 * gaussian(x, 1.0);
    });
    Trajectory traj = simulate(VectorField(g), th0, opt);
    const Vec3 m_end = traj.m_accum.back();
    CHECK(m_end[2] == Catch::Approx(4.0).epsilon(1e-3));
    CHECK(std::abs(m_end[0]) < 1e-9);
    CHECK(m_tilde(traj) == Catch::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("clean_decade: containment-driven fit windows") {
    Trajectory traj;
    for (int i = 0; i <= 20; ++i) {
        traj.times.push_back(i * 1.0);
        const bool clean = i <= 15;
        traj.containment_u.push_back(clean ? 1.0 : 0.9);
        traj.containment_th.push_back(1.0);
    }
    FitWindow w = clean_decade(traj, 0.99);
    CHECK(w.ok);
    CHECK(w.t2 == Catch::Approx(15.0));
    CHECK(w.t1 == Catch::Approx(1.5));

    Trajectory bad;
    bad.times = {0.0, 1.0};
    bad.containment_u = {0.5, 0.5};
    bad.containment_th = {1.0, 1.0};
    CHECK_FALSE(clean_decade(bad, 0.99).ok);
}

TEST_CASE("envelope audit on snapshots: exact envelope data and growth flags") {
    Grid3 g(24, 12.0);
    auto env_field = [&](double t, double a, double extra) {
        return make_vector(g, [&](const Vec3& x) {
            const double r = norm2(x);
            const double env = std::min(std::pow(1.0 + t, -0.5),
                                        std::pow(r, -a) * std::pow(1.0 + t, (a - 1.0) / 2.0));
            return Vec3{env * extra, 0.0, 0.0};
        });
    };
    Trajectory traj;
    traj.grid = g;
    for (double t : {1.0, 2.0, 4.0, 8.0}) {
        Snapshot s;
        s.t = t;
        s.theta = ScalarField(g);
        s.u = env_field(t, 2.0, 1.0);
        traj.snapshots.push_back(std::move(s));
    }
    TrajectoryEnvelopeReport r = envelope_audit(traj, 2.0, 3.0, MeanCase::nonzero_mean);
    for (double c : r.c_u) CHECK(c == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(r.u_stable);

    // a spurious (1+t)^{1/2} factor must be flagged as a growth trend
    Trajectory grow;
    grow.grid = g;
    for (double t : {1.0, 2.0, 4.0, 8.0}) {
        Snapshot s;
        s.t = t;
        s.theta = ScalarField(g);
        s.u = env_field(t, 2.0, std::sqrt(1.0 + t));
        grow.snapshots.push_back(std::move(s));
    }
    TrajectoryEnvelopeReport rg = envelope_audit(grow, 2.0, 3.0, MeanCase::nonzero_mean);
    CHECK_FALSE(rg.u_stable);

    // parameter ranges
    CHECK_THROWS_AS(envelope_audit(traj, 0.5, 3.0, MeanCase::nonzero_mean),
                    std::invalid_argument);
    CHECK_THROWS_AS(envelope_audit(traj, 3.0, 4.0, MeanCase::zero_mean),
                    std::invalid_argument);
    CHECK_THROWS_AS(envelope_audit(traj, 2.0, 3.5, MeanCase::zero_mean),
                    std::invalid_argument);
}
