#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"

using namespace bq;
using namespace bqtest;

namespace {

ScalarField small_gaussian(const Grid3& g, double amplitude, double sigma = 1.0) {
    return make_scalar(g, [&](const Vec3& x) { return amplitude * gaussian(x, sigma); });
}

ScalarField dipole_field(const Grid3& g, double amplitude, double sigma = 1.0) {
    return make_scalar(g, [&](const Vec3& x) {
        return amplitude * x[2] / (2.0 * sigma) * gaussian(x, sigma);
    });
}

}  // namespace

TEST_CASE("step: zero data is a fixed point") {
    Grid3 g(16, 8.0);
    State s{0.0, VectorField(g), ScalarField(g)};
    State s2 = step(s, 0.05);
    CHECK(s2.t == Catch::Approx(0.05));
    CHECK(s2.u.max_abs() == 0.0);
    CHECK(s2.theta.max_abs() == 0.0);
}

TEST_CASE("step: CFL violation is rejected with a suggested dt") {
    Grid3 g(16, 8.0);
    State s{0.0, VectorField(g), ScalarField(g)};
    for (std::size_t q = 0; q < s.u.comp(0).size(); ++q) s.u.comp(0)[q] = 30.0;
    CHECK_THROWS_WITH(step(s, 0.5), Catch::Matchers::ContainsSubstring("suggested"));
}

TEST_CASE("step: linear flow matches the Duhamel quadrature at integrator order") {
    // u0 = 0, small theta0, nonlinear terms off: one step against duhamel_L
    // on a finely sampled exact heat series; the defect shrinks like dt^3.
    Grid3 g(32, 12.0);
    ScalarField th0 = small_gaussian(g, 0.02);
    SimOptions opt;
    opt.nonlinear = false;
    opt.buoyancy = true;

    auto one_step_error = [&](double dt) {
        State s{0.0, VectorField(g), th0};
        State out = step(s, dt, opt);

        ScalarSeries fine;
        PadSpec sp = forward_fft(th0);
        const int sub = 32;
        for (int i = 0; i <= sub; ++i) {
            if (i > 0) heat_apply(sp, dt / sub);
            fine.push(i * dt / sub, crop(inverse_fft(sp)));
        }
        VectorField ref = duhamel_L(fine, dt);
        return max_abs_diff(out.u, ref);
    };

    const double e1 = one_step_error(0.2);
    const double e2 = one_step_error(0.1);
    INFO("e(0.2) = " << e1 << ", e(0.1) = " << e2 << ", ratio " << e1 / e2);
    CHECK(e1 / e2 > 5.0);
    CHECK(e1 / e2 < 12.0);
}

TEST_CASE("simulate: zero data gives identically zero series") {
    Grid3 g(16, 8.0);
    SimOptions opt;
    opt.dt = 0.1;
    opt.T = 1.0;
    opt.sample_every = 2;
    opt.norms = parse_norm_list("u:p=2,r=0;theta:p=2,r=0");
    Trajectory traj = simulate(VectorField(g), ScalarField(g), opt);
    for (const auto& [tn, series] : traj.norm_series)
        for (const auto& s : series.samples) CHECK(s.value == 0.0);
    for (double c : traj.containment_u) CHECK(c == 1.0);
    CHECK_FALSE(traj.contaminated);
}

TEST_CASE("simulate: mass conservation and solenoidality along the trajectory") {
    Grid3 g(32, 16.0);
    SimOptions opt;
    opt.dt = 0.05;
    opt.T = 1.5;
    opt.sample_every = 5;
    auto u0 = generate_u(g, "solenoidal:amplitude=0.02,width=1.2");
    auto th0 = small_gaussian(g, 0.04, 1.2);
    Trajectory traj = simulate(u0, th0, opt);
    REQUIRE(traj.theta_mass.size() >= 3);
    for (double m : traj.theta_mass)
        CHECK(m == Catch::Approx(traj.theta_mass.front()).epsilon(1e-12));
    for (double d : traj.div_rel) CHECK(d <= 1e-10);
}

TEST_CASE("simulate: theta = 0 reduces exactly to the buoyancy-off system") {
    Grid3 g(24, 12.0);
    SimOptions opt;
    opt.dt = 0.05;
    opt.T = 0.5;
    opt.sample_every = 2;
    opt.snapshot_times = {0.25, 0.5};
    auto u0 = generate_u(g, "solenoidal:amplitude=0.5,width=1");

    SimOptions off = opt;
    off.buoyancy = false;
    Trajectory a = simulate(u0, ScalarField(g), opt);
    Trajectory b = simulate(u0, ScalarField(g), off);
    REQUIRE(a.snapshots.size() == b.snapshots.size());
    for (std::size_t s = 0; s < a.snapshots.size(); ++s) {
        for (int c = 0; c < 3; ++c)
            for (std::size_t q = 0; q < a.snapshots[s].u.comp(c).size(); ++q)
                CHECK(a.snapshots[s].u.comp(c)[q] == b.snapshots[s].u.comp(c)[q]);
        for (std::size_t q = 0; q < a.snapshots[s].theta.size(); ++q)
            CHECK(a.snapshots[s].theta[q] == 0.0);
    }
}

TEST_CASE("simulate: buoyancy drives growth; zero-mean data eventually decays") {
    Grid3 g(32, 16.0);
    SimOptions opt;
    opt.dt = 0.05;
    opt.T = 6.0;
    opt.sample_every = 4;
    opt.norms = parse_norm_list("u:p=2,r=0");
    opt.containment_floor = 0.0;  // short box; watch the raw series

    SECTION("nonzero mean: ||u||_2 increases from rest") {
        Trajectory traj = simulate(VectorField(g), small_gaussian(g, 0.02), opt);
        const auto& s = traj.norm_series[0].second.samples;
        CHECK(s.back().value > 10.0 * s[1].value * 0.1);
        CHECK(s.back().value > s[s.size() / 2].value);
    }

    SECTION("zero mean: ||u||_2 turns around and decays") {
        SimOptions longer = opt;
        longer.T = 12.0;  // the buoyancy-driven hump peaks near t = 4
        Trajectory traj = simulate(VectorField(g), dipole_field(g, 0.02), longer);
        const auto& s = traj.norm_series[0].second.samples;
        double peak = 0.0;
        std::size_t peak_at = 0;
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s[i].value > peak) {
                peak = s[i].value;
                peak_at = i;
            }
        CHECK(peak_at < s.size() - 1);          // the maximum is interior
        CHECK(s.back().value < 0.97 * peak);    // and the tail decays
    }
}

TEST_CASE("simulate: discrete scaling covariance") {
    // u -> lambda u(lambda x, lambda^2 t), theta -> lambda^3 theta(lambda x,
    // lambda^2 t) maps runs into runs when the grid and step are rescaled.
    const double lambda = 2.0;
    Grid3 g1(48, 24.0);
    Grid3 g2(48, 12.0);
    SimOptions o1;
    o1.dt = 0.08;
    o1.T = 0.8;
    o1.sample_every = 10;
    SimOptions o2 = o1;
    o2.dt = o1.dt / (lambda * lambda);
    o2.T = o1.T / (lambda * lambda);

    auto data = [&](const Grid3& g, double w) {
        auto u0 = generate_u(g, "solenoidal:amplitude=0.05,width=" + std::to_string(w));
        auto th0 = generate_theta(g, "gaussian:amplitude=0.05,width=" + std::to_string(w));
        return std::pair{u0, th0};
    };
    auto [u1, th1] = data(g1, 2.0);
    auto [u2, th2] = data(g2, 1.0);

    Trajectory t1 = simulate(u1, th1, o1);
    Trajectory t2 = simulate(u2, th2, o2);
    const Snapshot& s1 = t1.snapshots.back();
    const Snapshot& s2 = t2.snapshots.back();
    REQUIRE(s2.t == Catch::Approx(s1.t / (lambda * lambda)));
    double worst = 0.0, scale = 0.0;
    for (int c = 0; c < 3; ++c)
        for (std::size_t q = 0; q < s1.u.comp(c).size(); ++q) {
            worst = std::max(worst,
                             std::abs(s2.u.comp(c)[q] - lambda * s1.u.comp(c)[q]));
            scale = std::max(scale, std::abs(lambda * s1.u.comp(c)[q]));
        }
    CHECK(worst <= 1e-10 * scale);
}

TEST_CASE("simulate: contamination flag and early halt") {
    // theta too spread for the box: quadratic mass leaks past |x| <= L/2
    Grid3 g(16, 6.0);
    ScalarField th = make_scalar(g, [](const Vec3& x) { return gaussian(x, 1.5); });
    SimOptions opt;
    opt.dt = 0.05;
    opt.T = 1.0;
    opt.containment_floor = 0.999;
    Trajectory traj = simulate(VectorField(g), th, opt);
    CHECK(traj.contaminated);
    CHECK(traj.halted_early);
}

TEST_CASE("simulate: smallness gate enforcement") {
    Grid3 g(24, 12.0);
    SimOptions opt;
    opt.dt = 0.05;
    opt.T = 0.1;
    opt.gate_epsilon = 0.01;
    ScalarField th = small_gaussian(g, 0.5);  // far above the gate
    CHECK_THROWS_WITH(simulate(VectorField(g), th, opt),
                      Catch::Matchers::ContainsSubstring("gate"));
}

TEST_CASE("picard: zero data, first-iterate unfolding, contraction") {
    Grid3 g(32, 16.0);

    SECTION("zero data stays at zero") {
        PicardOptions opt;
        opt.T = 1.0;
        opt.dt = 0.25;
        opt.k_max = 2;
        PicardResult r = picard_solve(VectorField(g), ScalarField(g), opt);
        for (double d : r.x_distances) CHECK(d == 0.0);
        for (double d : r.y_distances) CHECK(d == 0.0);
    }

    SECTION("k = 1 iterate equals U + B(u0,u0) + L(theta0) from the standalone ops") {
        PicardOptions opt;
        opt.T = 0.6;
        opt.dt = 0.2;
        opt.k_max = 1;
        auto u0 = generate_u(g, "solenoidal:amplitude=0.02,width=1.2");
        auto th0 = small_gaussian(g, 0.02, 1.44);
        PicardResult r = picard_solve(u0, th0, opt);
        REQUIRE(r.u_iterates.size() == 2);
        const VectorSeries& U = r.u_iterates[0];
        const ScalarSeries& Th = r.theta_iterates[0];
        const double t = opt.T;
        VectorField expect = duhamel_B(U, U, t);
        VectorField l = duhamel_L(Th, t);
        for (int c = 0; c < 3; ++c)
            for (std::size_t q = 0; q < expect.comp(c).size(); ++q)
                expect.comp(c)[q] += l.comp(c)[q] + U.fields.back().comp(c)[q];
        const VectorField& got = r.u_iterates[1].fields.back();
        double worst = 0.0;
        for (int c = 0; c < 3; ++c)
            for (std::size_t q = 0; q < got.comp(c).size(); ++q)
                worst = std::max(worst, std::abs(got.comp(c)[q] - expect.comp(c)[q]));
        CHECK(worst <= 1e-12 * std::max(expect.max_abs(), 1e-30));
    }

    SECTION("contraction at a tenth of the gate") {
        PicardOptions opt;
        opt.T = 3.0;
        opt.dt = 0.15;
        opt.k_max = 6;
        auto u0 = generate_u(g, "solenoidal:amplitude=0.005,width=1");
        auto th0 = small_gaussian(g, 0.005);
        PicardResult r = picard_solve(u0, th0, opt);
        REQUIRE(r.x_distances.size() >= 5);
        CHECK_FALSE(r.diverged);
        for (std::size_t k = 1; k < 5; ++k) {
            INFO("k = " << k << ": " << r.x_distances[k] << " / " << r.x_distances[k - 1]);
            CHECK(r.x_distances[k] <= 0.5 * r.x_distances[k - 1]);
        }
        // uniform bound on the iterate X-norms
        const double eps = 0.05;
        for (double xn : r.x_norms) CHECK(xn <= 2.0 * eps);
    }

    SECTION("oversized data is reported as divergent, iterates returned") {
        PicardOptions opt;
        opt.T = 2.0;
        opt.dt = 0.25;
        opt.k_max = 8;
        VectorField u0 = generate_u(g, "solenoidal:amplitude=50,width=1");
        PicardResult r = picard_solve(u0, ScalarField(g), opt);
        CHECK(r.diverged);
        CHECK(r.u_iterates.size() >= 2);  // inspectable despite the blow-up
    }

    CHECK_THROWS_AS(picard_solve(VectorField(g), ScalarField(g), PicardOptions{1.0, 0.25, 0}),
                    std::invalid_argument);
}

TEST_CASE("simulate: mollified mode keeps the structure") {
    Grid3 g(24, 12.0);
    SimOptions opt;
    opt.dt = 0.05;
    opt.T = 1.0;
    opt.sample_every = 4;
    opt.mollify_delta = 0.3;
    opt.norms = parse_norm_list("u:p=2,r=0;theta:p=2,r=0");
    auto u0 = generate_u(g, "solenoidal:amplitude=0.02,width=1");
    auto th0 = small_gaussian(g, 0.04, 1.0);
    Trajectory traj = simulate(u0, th0, opt);
    for (double m : traj.theta_mass)
        CHECK(m == Catch::Approx(traj.theta_mass.front()).epsilon(1e-10));
    for (double d : traj.div_rel) CHECK(d <= 1e-10);

    // the lagged mollified advection converges to the plain system: compare
    // against the unmollified run at a coarse tolerance
    SimOptions plain = opt;
    plain.mollify_delta = 0.0;
    Trajectory ref = simulate(u0, th0, plain);
    const auto* a = traj.find_series("u", NormDescriptor{2.0, 0.0, NormKind::lebesgue});
    const auto* b = ref.find_series("u", NormDescriptor{2.0, 0.0, NormKind::lebesgue});
    REQUIRE(a);
    REQUIRE(b);
    CHECK(a->samples.back().value ==
          Catch::Approx(b->samples.back().value).epsilon(0.05));
}
