#ifndef BQ_SOLVER_HPP
#define BQ_SOLVER_HPP

#include <deque>
#include <optional>

#include "bq/duhamel.hpp"
#include "bq/kernels.hpp"

namespace bq {

struct State {
    double t = 0.0;
    VectorField u;
    ScalarField theta;
};

inline void validate_state(const State& s, double div_tol = 1e-8) {
    detail::require(s.t >= 0.0, "State: t must be >= 0");
    detail::require(s.u.finite() && s.theta.finite(), "State: non-finite fields");
    detail::require(s.u.grid() == s.theta.grid(), "State: grid mismatch");
    detail::require(divergence_rel(s.u) <= div_tol, "State: velocity not solenoidal");
}

struct SimOptions {
    double dt = 0.02;
    double T = 50.0;
    int sample_every = 5;                // record series every k steps
    std::vector<double> snapshot_times;  // snapped to the step grid
    std::vector<TrackedNorm> norms;
    bool dealias = true;
    bool nonlinear = true;
    bool buoyancy = true;
    double mollify_delta = 0.0;  // > 0 switches to the mollified system
    double containment_floor = 0.99;
    bool halt_on_contamination = true;
    bool fourier_audit = false;
    double split_k = 3.5;
    double gate_epsilon = 0.0;  // > 0 enforces the smallness gate up front
};

/// One row of the low-frequency splitting audit at a recorded time.
struct SplitRow {
    double t = 0.0;
    double radius = 0.0;         // sqrt(k / (2 (t+1)))
    double c_theta = 0.0;        // fitted C: |theta_hat| <= heat term + C |xi| I(t)
    double a_u = 0.0;            // fitted A: |u_hat|^2 <= A [heat^2 (u0^2+th0^2) + t^2 xi^2]
    double lowfreq_theta = 0.0;  // integral of |theta_hat|^2 over S
    double lowfreq_bound = 0.0;  // unit-constant shape bound for the same integral
};

struct Snapshot {
    double t = 0.0;
    VectorField u;
    ScalarField theta;
};

struct Trajectory {
    Grid3 grid;
    VectorField u0;
    ScalarField theta0;

    // per-step scalars (index aligned with step_times)
    std::vector<double> step_times, u_l2, th_l2, gu_l2, gth_l2;
    std::vector<double> int_u_th;  // running trapezoid of ||u|| ||theta||
    std::vector<double> int_th;    // running trapezoid of ||theta||

    // sample-time series
    std::vector<double> times;
    std::vector<double> containment_u, containment_th, theta_mass, div_rel;
    std::vector<Vec3> m1_series;  // first moment of theta
    std::vector<Vec3> m_accum;    // m(t) = int_0^t int y theta dy ds
    std::vector<std::pair<TrackedNorm, NormSeries>> norm_series;
    std::vector<Snapshot> snapshots;
    std::vector<SplitRow> split_rows;

    bool contaminated = false;
    double contaminated_at = -1.0;
    bool halted_early = false;

    const NormSeries* find_series(const std::string& field, const NormDescriptor& d) const {
        for (const auto& [tn, s] : norm_series)
            if (tn.field == field && tn.descriptor.label() == d.label() &&
                ((tn.descriptor.kind == d.kind)))
                return &s;
        return nullptr;
    }
};

// ---------------------------------------------------------------------------
// ETD2RK time stepper
// ---------------------------------------------------------------------------

namespace detail {

inline double phi1(double z) {
    if (std::abs(z) < 1e-5) return 1.0 + z * (0.5 + z / 6.0);
    return std::expm1(z) / z;
}
inline double phi2(double z) {
    if (std::abs(z) < 1e-4) return 0.5 + z * (1.0 / 6.0 + z / 24.0);
    return (std::expm1(z) - z) / (z * z);
}

}  // namespace detail

/// Exponential time differencing (second order, Runge-Kutta form) for the
/// Boussinesq system in spectral variables on the padded grid. The linear
/// heat part is integrated exactly; forcing terms (advection divergences and
/// buoyancy) enter through phi1/phi2 weights. Quadratic products are formed
/// in physical space from 2/3-dealiased samples.
class Simulator {
public:
    Simulator(const State& init, const SimOptions& opt)
        : g_(init.u.grid()), opt_(opt), t_(init.t) {
        detail::require(opt.dt > 0.0, "Simulator: dt must be > 0");
        detail::require(init.u.grid() == init.theta.grid(), "Simulator: grid mismatch");
        detail::require(init.u.finite() && init.theta.finite(),
                        "Simulator: non-finite initial data");
        if (opt.gate_epsilon > 0.0) {
            GateReport gr = smallness_gate(init.u, init.theta, opt.gate_epsilon);
            if (!gr.pass()) {
                std::ostringstream os;
                os << "Simulator: smallness gate failed (||theta0||_1=" << gr.theta_l1
                   << ", sup|x|^3|theta0|=" << gr.theta_sup3 << ", sup|x||u0|=" << gr.u_sup1
                   << ", epsilon=" << gr.epsilon << ")";
                throw std::invalid_argument(os.str());
            }
        }
        for (int c = 0; c < 3; ++c) u_[c] = forward_fft(pad(init.u.comp(c)));
        leray_apply(u_[0], u_[1], u_[2]);  // enforce the solenoidal invariant
        th_ = forward_fft(pad(init.theta));
        build_symbols();
        if (opt_.mollify_delta > 0.0) push_history();
    }

    double time() const { return t_; }
    const Grid3& grid() const { return g_; }

    /// Current state cropped to the inner box.
    State state() const {
        State s;
        s.t = t_;
        s.u = VectorField(g_);
        for (int c = 0; c < 3; ++c) s.u.comp(c) = crop(inverse_fft(u_[c]));
        s.theta = crop(inverse_fft(th_));
        return s;
    }

    std::array<PadReal, 3> velocity_padded() const {
        return {inverse_fft(u_[0]), inverse_fft(u_[1]), inverse_fft(u_[2])};
    }
    PadReal theta_padded() const { return inverse_fft(th_); }
    const std::array<PadSpec, 3>& velocity_spec() const { return u_; }
    const PadSpec& theta_spec() const { return th_; }

    /// One ETD2RK step of opt.dt. Throws on CFL violation or non-finite data.
    void advance() {
        std::array<PadReal, 3> vadv;
        const bool mollified = opt_.mollify_delta > 0.0;
        if (mollified) {
            VectorField v = retarded_mollify(history_, opt_.mollify_delta, t_);
            auto vs = forward_fft3(v);
            for (int c = 0; c < 3; ++c) vadv[c] = inverse_fft(vs[c]);
        }

        Forcing f1 = eval_forcing(u_, th_, mollified ? &vadv : nullptr);
        check_cfl(f1.umax);

        // stage: a = E v + P1 N(v)
        std::array<PadSpec, 3> ua;
        PadSpec tha(g_);
        for (int c = 0; c < 3; ++c) {
            ua[c] = PadSpec(g_);
            apply_etd(ua[c], u_[c], f1.u[c], nullptr, nullptr);
        }
        apply_etd(tha, th_, f1.th, nullptr, nullptr);

        Forcing f2 = eval_forcing(ua, tha, mollified ? &vadv : nullptr);

        // v+ = a + P2 (N(a) - N(v))
        for (int c = 0; c < 3; ++c) apply_etd(u_[c], u_[c], f1.u[c], &f2.u[c], &ua[c]);
        apply_etd(th_, th_, f1.th, &f2.th, &tha);
        leray_apply(u_[0], u_[1], u_[2]);  // re-project against drift

        t_ += opt_.dt;
        if (mollified) push_history();
    }

    struct StepNorms {
        double u_l2, th_l2, gu_l2, gth_l2;
    };
    StepNorms step_norms() const {
        StepNorms s{};
        double ul = 0.0, gu = 0.0;
        for (int c = 0; c < 3; ++c) {
            ul += l2_norm_sq(u_[c]);
            gu += h1_seminorm_sq(u_[c]);
        }
        s.u_l2 = std::sqrt(ul);
        s.gu_l2 = std::sqrt(gu);
        s.th_l2 = std::sqrt(l2_norm_sq(th_));
        s.gth_l2 = std::sqrt(h1_seminorm_sq(th_));
        detail::require(std::isfinite(s.u_l2) && std::isfinite(s.th_l2),
                        "Simulator: non-finite state (aborting)");
        return s;
    }

    double theta_mass() const { return th_[0].real(); }

    double divergence_rel_spec() const {
        double grad_sq = 0.0;
        for (int c = 0; c < 3; ++c) grad_sq += h1_seminorm_sq(u_[c]);
        PadSpec div(g_);
        for_each_mode(div, [&](std::size_t i, double xx, double xy, double xz, double) {
            div[i] = cplx(0.0, kTwoPi) *
                     (xx * u_[0][i] + xy * u_[1][i] + xz * u_[2][i]);
        });
        const double d = std::sqrt(l2_norm_sq(div));
        return grad_sq == 0.0 ? 0.0 : d / std::sqrt(grad_sq);
    }

    /// Low-frequency audit row against the stored initial spectra.
    SplitRow split_audit(double k, const std::array<PadSpec, 3>& u0s, const PadSpec& th0s,
                         double int_u_th) const {
        SplitRow row;
        row.t = t_;
        row.radius = std::sqrt(k / (2.0 * (t_ + 1.0)));
        const double r2 = row.radius * row.radius;
        const double dxi3 = std::pow(1.0 / (4.0 * g_.L), 3);
        double c_theta = 0.0, a_u = 0.0, lf = 0.0, lf_heat = 0.0;
        for_each_mode(th_, [&](std::size_t i, double xx, double xy, double xz, double w) {
            const double q = xx * xx + xy * xy + xz * xz;
            if (q > r2) return;
            const double heat = std::exp(-kFourPi2 * q * t_);
            const double tha = std::abs(th_[i]);
            lf += w * tha * tha;
            const double th0heat = heat * std::abs(th0s[i]);
            lf_heat += w * th0heat * th0heat;
            if (q > 0.0 && int_u_th > 0.0) {
                const double num = tha - th0heat;
                if (num > 0.0)
                    c_theta = std::max(c_theta, num / (std::sqrt(q) * int_u_th));
            }
            const double usq =
                std::norm(u_[0][i]) + std::norm(u_[1][i]) + std::norm(u_[2][i]);
            const double u0sq =
                std::norm(u0s[0][i]) + std::norm(u0s[1][i]) + std::norm(u0s[2][i]);
            const double den =
                heat * heat * (u0sq + std::norm(th0s[i])) + t_ * t_ * q;
            if (den > 1e-300) a_u = std::max(a_u, usq / den);
        });
        row.c_theta = c_theta;
        row.a_u = a_u;
        row.lowfreq_theta = lf * dxi3;
        row.lowfreq_bound = 2.0 * lf_heat * dxi3 +
                            2.0 * (4.0 * M_PI / 5.0) * std::pow(row.radius, 5) *
                                int_u_th * int_u_th;
        return row;
    }

private:
    struct Forcing {
        std::array<PadSpec, 3> u;
        PadSpec th;
        double umax = 0.0;
    };

    void build_symbols() {
        PadSpec probe(g_);
        lam_.resize(probe.size());
        eL_.resize(probe.size());
        p1_.resize(probe.size());
        p2_.resize(probe.size());
        const double dt = opt_.dt;
        for_each_mode(probe, [&](std::size_t i, double xx, double xy, double xz, double) {
            const double lambda = kFourPi2 * (xx * xx + xy * xy + xz * xz);
            lam_[i] = lambda;
            const double z = -lambda * dt;
            eL_[i] = std::exp(z);
            p1_[i] = dt * detail::phi1(z);
            p2_[i] = dt * detail::phi2(z);
        });
        // dealias mask
        mask_.assign(probe.size(), 1);
        if (opt_.dealias) {
            PadSpec m(g_);
            const int N = m.N(), cut = (2 * (N / 2)) / 3, nxh = m.nx_half();
            std::size_t idx = 0;
            for (int kz = 0; kz < N; ++kz) {
                const int akz = std::abs(kz <= N / 2 ? kz : kz - N);
                for (int ky = 0; ky < N; ++ky) {
                    const int aky = std::abs(ky <= N / 2 ? ky : ky - N);
                    for (int kx = 0; kx < nxh; ++kx, ++idx)
                        mask_[idx] = (akz > cut || aky > cut || kx > cut) ? 0 : 1;
                }
            }
        }
    }

    // out = E base + P1 f1  (stage form), or with f2: out = base + P2 (f2 - f1)
    // where base is the stage value.
    void apply_etd(PadSpec& out, const PadSpec& base, const PadSpec& f1, const PadSpec* f2,
                   const PadSpec* stage) {
        if (!f2) {
            for (std::size_t i = 0, e = out.size(); i < e; ++i)
                out[i] = eL_[i] * base[i] + p1_[i] * f1[i];
        } else {
            for (std::size_t i = 0, e = out.size(); i < e; ++i)
                out[i] = (*stage)[i] + p2_[i] * ((*f2)[i] - f1[i]);
        }
    }

    PadReal dealiased_physical(const PadSpec& s) const {
        PadSpec c(s);
        if (opt_.dealias)
            for (std::size_t i = 0, e = c.size(); i < e; ++i)
                if (!mask_[i]) c[i] = cplx(0.0, 0.0);
        return inverse_fft(c);
    }

    Forcing eval_forcing(const std::array<PadSpec, 3>& us, const PadSpec& ths,
                         const std::array<PadReal, 3>* vadv) {
        Forcing f;
        for (int c = 0; c < 3; ++c) f.u[c] = PadSpec(g_);
        f.th = PadSpec(g_);

        if (opt_.nonlinear) {
            std::array<PadReal, 3> ur = {dealiased_physical(us[0]), dealiased_physical(us[1]),
                                         dealiased_physical(us[2])};
            PadReal thr = dealiased_physical(ths);
            for (int c = 0; c < 3; ++c)
                for (std::size_t i = 0, e = ur[c].size(); i < e; ++i)
                    f.umax = std::max(f.umax, std::abs(ur[c][i]));

            const std::array<PadReal, 3>& vr = vadv ? *vadv : ur;
            PadReal prod(g_);

            // velocity advection: -d_i (v_i u_j), symmetric product when v=u
            if (!vadv) {
                for (int i = 0; i < 3; ++i)
                    for (int j = i; j < 3; ++j) {
                        mul(ur[i], ur[j], prod);
                        PadSpec s = forward_fft(prod);
                        PadSpec si(s);
                        derivative_apply(si, i);
                        sub_into(f.u[j], si);
                        if (i != j) {
                            derivative_apply(s, j);
                            sub_into(f.u[i], s);
                        }
                    }
            } else {
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) {
                        mul(vr[i], ur[j], prod);
                        PadSpec s = forward_fft(prod);
                        derivative_apply(s, i);
                        sub_into(f.u[j], s);
                    }
            }
            // temperature advection: -d_i (theta v_i)
            for (int i = 0; i < 3; ++i) {
                mul(thr, vr[i], prod);
                PadSpec s = forward_fft(prod);
                derivative_apply(s, i);
                sub_into(f.th, s);
            }
        }
        if (opt_.buoyancy) {
            for (std::size_t i = 0, e = f.u[2].size(); i < e; ++i) f.u[2][i] += ths[i];
        }
        leray_apply(f.u[0], f.u[1], f.u[2]);
        return f;
    }

    static void mul(const PadReal& a, const PadReal& b, PadReal& out) {
        const double* pa = a.data();
        const double* pb = b.data();
        double* po = out.data();
        for (std::size_t i = 0, e = out.size(); i < e; ++i) po[i] = pa[i] * pb[i];
    }
    static void sub_into(PadSpec& acc, const PadSpec& s) {
        for (std::size_t i = 0, e = acc.size(); i < e; ++i) acc[i] -= s[i];
    }

    void check_cfl(double umax) const {
        const double cfl = opt_.dt * umax / g_.h();
        if (cfl > 0.5) {
            std::ostringstream os;
            os << "Simulator: CFL violation (dt max|u|/h = " << cfl
               << " > 0.5); suggested dt <= " << 0.4 * g_.h() / umax;
            throw std::runtime_error(os.str());
        }
    }

    void push_history() {
        VectorField u(g_);
        for (int c = 0; c < 3; ++c) u.comp(c) = crop(inverse_fft(u_[c]));
        if (!history_.times.empty() && t_ <= history_.times.back()) return;
        history_.push(t_, std::move(u));
        // keep [t - 2 delta - dt, t]
        while (history_.times.size() > 2 &&
               history_.times.front() < t_ - 2.0 * opt_.mollify_delta - opt_.dt) {
            history_.times.erase(history_.times.begin());
            history_.fields.erase(history_.fields.begin());
        }
    }

    Grid3 g_;
    SimOptions opt_;
    double t_;
    std::array<PadSpec, 3> u_;
    PadSpec th_;
    std::vector<double> lam_, eL_, p1_, p2_;
    std::vector<char> mask_;
    VectorSeries history_;  // mollified mode only
};

/// Single restarted-Duhamel step of the public contract.
inline State step(const State& s, double dt) {
    detail::require(dt > 0.0, "step: dt must be > 0");
    SimOptions opt;
    opt.dt = dt;
    opt.T = dt;
    // CFL guard on the incoming data
    const double umax = s.u.max_abs();
    if (dt * umax / s.u.grid().h() > 0.5) {
        std::ostringstream os;
        os << "step: CFL violation (dt max|u|/h = " << dt * umax / s.u.grid().h()
           << " > 0.5); suggested dt <= " << 0.4 * s.u.grid().h() / std::max(umax, 1e-300);
        throw std::runtime_error(os.str());
    }
    Simulator sim(s, opt);
    sim.advance();
    return sim.state();
}

inline State step(const State& s, double dt, const SimOptions& base) {
    SimOptions opt = base;
    opt.dt = dt;
    opt.T = dt;
    Simulator sim(s, opt);
    sim.advance();
    return sim.state();
}

inline double containment_vec(const std::array<PadReal, 3>& v) {
    const double half = v[0].grid().L / 2.0;
    double inside = 0.0, total = 0.0;
    const int N = v[0].N();
    std::size_t i = 0;
    for (int iz = 0; iz < N; ++iz) {
        const double z = v[0].coord(iz);
        for (int iy = 0; iy < N; ++iy) {
            const double y = v[0].coord(iy);
            for (int ix = 0; ix < N; ++ix, ++i) {
                const double x = v[0].coord(ix);
                const double q = v[0][i] * v[0][i] + v[1][i] * v[1][i] + v[2][i] * v[2][i];
                total += q;
                if (x * x + y * y + z * z <= half * half) inside += q;
            }
        }
    }
    return total == 0.0 ? 1.0 : inside / total;
}

/// Run the full simulation, recording norm series, containment, moments and
/// (optionally) the low-frequency splitting audit. Halts early with a
/// contamination flag when the containment floor is crossed.
inline Trajectory simulate(const VectorField& u0, const ScalarField& theta0,
                           const SimOptions& opt) {
    detail::require(u0.grid() == theta0.grid(), "simulate: grid mismatch");
    Trajectory traj;
    traj.grid = u0.grid();
    traj.u0 = u0;
    traj.theta0 = theta0;
    for (const auto& tn : opt.norms) {
        tn.descriptor.validate();
        detail::require(tn.field == "u" || tn.field == "theta",
                        "simulate: tracked norm field must be 'u' or 'theta'");
        traj.norm_series.emplace_back(tn, NormSeries{tn.descriptor, {}});
    }

    State init{0.0, u0, theta0};
    Simulator sim(init, opt);

    std::array<PadSpec, 3> u0s;
    PadSpec th0s;
    if (opt.fourier_audit) {
        u0s = sim.velocity_spec();
        th0s = sim.theta_spec();
    }

    const int nsteps = static_cast<int>(std::llround(opt.T / opt.dt));
    detail::require(nsteps >= 1, "simulate: T must cover at least one step");

    auto want_snapshot = [&](double t) {
        if (t == 0.0) return true;
        for (double ts : opt.snapshot_times)
            if (std::abs(ts - t) <= opt.dt / 2.0) return true;
        return std::abs(t - opt.T) <= opt.dt / 2.0;
    };

    double prev_uth = 0.0, prev_th = 0.0;
    Vec3 prev_m1{0, 0, 0};
    double prev_sample_t = 0.0;
    bool have_prev_m1 = false;

    auto record_step = [&](double t) {
        auto n = sim.step_norms();
        if (!traj.step_times.empty() && t <= traj.step_times.back()) return;
        double i_uth = traj.int_u_th.empty() ? 0.0 : traj.int_u_th.back();
        double i_th = traj.int_th.empty() ? 0.0 : traj.int_th.back();
        if (!traj.step_times.empty()) {
            const double dt = t - traj.step_times.back();
            i_uth += 0.5 * dt * (prev_uth + n.u_l2 * n.th_l2);
            i_th += 0.5 * dt * (prev_th + n.th_l2);
        }
        prev_uth = n.u_l2 * n.th_l2;
        prev_th = n.th_l2;
        traj.step_times.push_back(t);
        traj.u_l2.push_back(n.u_l2);
        traj.th_l2.push_back(n.th_l2);
        traj.gu_l2.push_back(n.gu_l2);
        traj.gth_l2.push_back(n.gth_l2);
        traj.int_u_th.push_back(i_uth);
        traj.int_th.push_back(i_th);
    };

    auto record_sample = [&](double t) -> bool {
        auto ur = sim.velocity_padded();
        PadReal thr = sim.theta_padded();
        traj.times.push_back(t);
        const double cu = containment_vec(ur);
        traj.containment_u.push_back(cu);
        const double cth = containment(thr);
        traj.containment_th.push_back(cth);
        traj.theta_mass.push_back(sim.theta_mass());
        traj.div_rel.push_back(sim.divergence_rel_spec());
        Moments mm = moments_padded(thr);
        traj.m1_series.push_back(mm.m1);
        Vec3 acc = traj.m_accum.empty() ? Vec3{0, 0, 0} : traj.m_accum.back();
        if (have_prev_m1) {
            const double dt = t - prev_sample_t;
            for (int c = 0; c < 3; ++c) acc[c] += 0.5 * dt * (prev_m1[c] + mm.m1[c]);
        }
        traj.m_accum.push_back(acc);
        prev_m1 = mm.m1;
        prev_sample_t = t;
        have_prev_m1 = true;

        for (auto& [tn, series] : traj.norm_series) {
            double v = tn.field == "u" ? norm_padded(ur, tn.descriptor)
                                       : norm_padded(thr, tn.descriptor);
            series.push(t, v);
        }
        if (opt.fourier_audit) {
            traj.split_rows.push_back(sim.split_audit(
                opt.split_k, u0s, th0s, traj.int_u_th.empty() ? 0.0 : traj.int_u_th.back()));
        }
        if (want_snapshot(t)) {
            Snapshot snap;
            snap.t = t;
            snap.u = VectorField(traj.grid);
            for (int c = 0; c < 3; ++c) snap.u.comp(c) = crop(ur[c]);
            snap.theta = crop(thr);
            traj.snapshots.push_back(std::move(snap));
        }
        const double floor = opt.containment_floor;
        if (floor > 0.0 && (cu < floor || cth < floor)) {
            if (!traj.contaminated) {
                traj.contaminated = true;
                traj.contaminated_at = t;
            }
            if (opt.halt_on_contamination) return false;
        }
        return true;
    };

    record_step(0.0);
    if (!record_sample(0.0)) {
        traj.halted_early = true;
        return traj;
    }
    for (int k = 1; k <= nsteps; ++k) {
        sim.advance();
        record_step(sim.time());
        const bool sample_now = (k % opt.sample_every == 0) || k == nsteps;
        if (sample_now) {
            if (!record_sample(sim.time())) {
                traj.halted_early = (k != nsteps);
                break;
            }
        }
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Picard iteration on the integral form
// ---------------------------------------------------------------------------

struct PicardOptions {
    double T = 4.0;
    double dt = 0.1;  // series resolution (quadrature grid)
    int k_max = 6;
};

struct PicardResult {
    std::vector<double> times;
    std::vector<VectorSeries> u_iterates;     // u^0 .. u^k
    std::vector<ScalarSeries> theta_iterates;
    std::vector<double> x_distances;          // X-norm of u^{k+1} - u^k
    std::vector<double> y_distances;          // Y-norm of theta^{k+1} - theta^k
    std::vector<double> x_norms;              // X-norm of each iterate
    bool diverged = false;
};

namespace detail {

/// One marching pass of the combined Duhamel right-hand side
///   du(t)  = B(u,u)(t) + L(theta)(t)
///   dth(t) = Btilde(theta, u)(t)
/// recorded at every sample time of the series (same quadrature as the
/// standalone duhamel_* operations, shared product spectra).
inline void picard_rhs_series(const VectorSeries& uk, const ScalarSeries& thk,
                              std::vector<VectorField>& du, std::vector<ScalarField>& dth) {
    const Grid3& g = uk.grid();
    const std::size_t m = uk.size();
    du.clear();
    dth.clear();

    auto integrand = [&](std::size_t idx, std::array<PadSpec, 3>& Gu, PadSpec& Gth) {
        Gu[0] = PadSpec(g);
        Gu[1] = PadSpec(g);
        Gu[2] = forward_fft(thk.fields[idx]);  // buoyancy theta e3
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) {
                PadSpec s = product_fft(uk.fields[idx].comp(i), uk.fields[idx].comp(j));
                PadSpec si(s);
                derivative_apply(si, i);
                for (std::size_t q = 0, e = si.size(); q < e; ++q) Gu[j][q] -= si[q];
                if (i != j) {
                    derivative_apply(s, j);
                    for (std::size_t q = 0, e = s.size(); q < e; ++q) Gu[i][q] -= s[q];
                }
            }
        leray_apply(Gu[0], Gu[1], Gu[2]);
        Gth = PadSpec(g);
        for (int i = 0; i < 3; ++i) {
            PadSpec s = product_fft(thk.fields[idx], uk.fields[idx].comp(i));
            derivative_apply(s, i);
            for (std::size_t q = 0, e = s.size(); q < e; ++q) Gth[q] -= s[q];
        }
    };

    std::array<PadSpec, 3> accU = {PadSpec(g), PadSpec(g), PadSpec(g)};
    PadSpec accTh(g);
    du.push_back(VectorField(g));
    dth.push_back(ScalarField(g));

    std::array<PadSpec, 3> GuA, GuB;
    PadSpec GthA, GthB;
    integrand(0, GuA, GthA);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        integrand(i + 1, GuB, GthB);
        const double dt = uk.times[i + 1] - uk.times[i];
        for (int c = 0; c < 3; ++c) duhamel_advance(accU[c], GuA[c], GuB[c], dt);
        duhamel_advance(accTh, GthA, GthB, dt);
        du.push_back(crop3(accU));
        dth.push_back(crop(inverse_fft(accTh)));
        GuA = std::move(GuB);
        GthA = std::move(GthB);
        GuB = {};
    }
}

}  // namespace detail

/// Successive approximations u^{k+1} = U + B(u^k,u^k) + L(theta^k),
/// theta^{k+1} = Theta + Btilde(theta^k, u^k) on a uniform sample grid,
/// with the linear flows (U, Theta) as the zeroth iterate.
inline PicardResult picard_solve(const VectorField& u0, const ScalarField& theta0,
                                 const PicardOptions& opt) {
    detail::require(opt.k_max >= 1, "picard_solve: k_max must be >= 1");
    detail::require(u0.grid() == theta0.grid(), "picard_solve: grid mismatch");
    const Grid3& g = u0.grid();
    const int m = static_cast<int>(std::llround(opt.T / opt.dt));
    detail::require(m >= 1, "picard_solve: T must cover at least one sample");

    PicardResult res;

    // linear flows by incremental heat advance in spectral space
    VectorSeries U;
    ScalarSeries Th;
    {
        auto us = forward_fft3(u0);
        leray_apply(us[0], us[1], us[2]);
        PadSpec ths = forward_fft(theta0);
        for (int i = 0; i <= m; ++i) {
            const double t = i * opt.dt;
            if (i > 0) {
                for (auto& c : us) heat_apply(c, opt.dt);
                heat_apply(ths, opt.dt);
            }
            VectorField uf(g);
            for (int c = 0; c < 3; ++c) uf.comp(c) = crop(inverse_fft(us[c]));
            U.push(t, std::move(uf));
            Th.push(t, crop(inverse_fft(ths)));
            res.times.push_back(t);
        }
    }

    res.u_iterates.push_back(U);
    res.theta_iterates.push_back(Th);

    auto x_norm_of_diff = [&](const VectorSeries& a, const VectorSeries& b) {
        VectorSeries d;
        for (std::size_t i = 0; i < a.size(); ++i) {
            VectorField f(g);
            for (int c = 0; c < 3; ++c)
                for (std::size_t q = 0; q < f.comp(c).size(); ++q)
                    f.comp(c)[q] = a.fields[i].comp(c)[q] - b.fields[i].comp(c)[q];
            d.push(a.times[i], std::move(f));
        }
        return scaling_norm(d, SpaceDescriptor{SpaceKind::X, 0.0});
    };
    auto y_norm_of_diff = [&](const ScalarSeries& a, const ScalarSeries& b) {
        ScalarSeries d;
        for (std::size_t i = 0; i < a.size(); ++i) {
            ScalarField f(g);
            for (std::size_t q = 0; q < f.size(); ++q)
                f[q] = a.fields[i][q] - b.fields[i][q];
            d.push(a.times[i], std::move(f));
        }
        return scaling_norm(d, SpaceDescriptor{SpaceKind::Y, 0.0});
    };

    res.x_norms.push_back(scaling_norm(U, SpaceDescriptor{SpaceKind::X, 0.0}));

    int grow_streak = 0;
    for (int k = 0; k < opt.k_max; ++k) {
        const VectorSeries& uk = res.u_iterates.back();
        const ScalarSeries& thk = res.theta_iterates.back();
        std::vector<VectorField> du;
        std::vector<ScalarField> dth;
        detail::picard_rhs_series(uk, thk, du, dth);
        VectorSeries unext;
        ScalarSeries thnext;
        for (int i = 0; i <= m; ++i) {
            const double t = res.times[i];
            VectorField uf = U.fields[i];
            ScalarField tf = Th.fields[i];
            for (int c = 0; c < 3; ++c)
                for (std::size_t q = 0; q < uf.comp(c).size(); ++q)
                    uf.comp(c)[q] += du[i].comp(c)[q];
            for (std::size_t q = 0; q < tf.size(); ++q) tf[q] += dth[i][q];
            unext.push(t, std::move(uf));
            thnext.push(t, std::move(tf));
        }
        res.x_distances.push_back(x_norm_of_diff(unext, uk));
        res.y_distances.push_back(y_norm_of_diff(thnext, thk));
        res.x_norms.push_back(scaling_norm(unext, SpaceDescriptor{SpaceKind::X, 0.0}));
        res.u_iterates.push_back(std::move(unext));
        res.theta_iterates.push_back(std::move(thnext));
        const std::size_t nd = res.x_distances.size();
        if (!std::isfinite(res.x_distances.back()) || !std::isfinite(res.y_distances.back())) {
            res.diverged = true;
            break;
        }
        if (nd >= 2 && res.x_distances[nd - 1] > 2.0 * res.x_distances[nd - 2]) {
            if (++grow_streak >= 3) {
                res.diverged = true;
                break;
            }
        } else {
            grow_streak = 0;
        }
    }
    return res;
}

}  // namespace bq

#endif  // BQ_SOLVER_HPP
