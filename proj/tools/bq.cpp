// Command-line front end: scenario runs, kernel audits, Picard iteration,
// exponent fits, profile probes, parameter sweeps and report rendering.

#include <CLI11.hpp>

#include <thread>

#include "bq/bq.hpp"

namespace {

void add_config_flags(CLI::App* app, bq::ExperimentConfig& cfg, std::string& config_path,
                      std::vector<std::string>& sets) {
    app->add_option("--config", config_path, "config file (key = value lines); overrides flags");
    app->add_option("--set", sets, "extra key=value overrides (applied last)")
        ->take_all();
    app->add_option("--n", cfg.n, "nodes per axis");
    app->add_option("--L", cfg.L, "box half-width");
    app->add_option("--T", cfg.T, "final time");
    app->add_option("--dt", cfg.dt, "time step");
    app->add_option("--sample-every", cfg.sample_every, "series stride in steps");
    app->add_option("--scenario", cfg.scenario, "scenario id");
    app->add_option("--theta-init", cfg.theta_init, "temperature generator spec");
    app->add_option("--u-init", cfg.u_init, "velocity generator spec");
    app->add_option("--norms", cfg.norms, "tracked norm list");
    app->add_option("--fit-t1", cfg.fit_t1, "fit window start (0 = auto)");
    app->add_option("--fit-t2", cfg.fit_t2, "fit window end (0 = auto)");
    app->add_option("--split-k", cfg.split_k, "splitting exponent k");
    app->add_option("--profile-A", cfg.profile_A, "parabolic region parameter");
    app->add_option("--profile-t", cfg.profile_t, "profile time (0 = auto)");
    app->add_option("--env-a", cfg.env_a, "velocity envelope exponent a");
    app->add_option("--env-b", cfg.env_b, "temperature envelope exponent b");
    app->add_option("--mean-case", cfg.mean_case, "nonzero | zero");
    app->add_option("--gate-epsilon", cfg.gate_epsilon, "smallness gate threshold");
    app->add_option("--seed", cfg.seed, "seed for randomized probes");
    app->add_option("--outdir", cfg.outdir, "output directory");
    app->add_option("--dealias", cfg.dealias, "2/3-rule dealiasing on products");
    app->add_option("--buoyancy", cfg.buoyancy, "buoyancy forcing toggle");
    app->add_option("--nonlinear", cfg.nonlinear, "nonlinear terms toggle");
    app->add_option("--mollify-delta", cfg.mollify_delta, "retarded mollifier delta (0 = off)");
    app->add_option("--containment-floor", cfg.containment_floor, "free-space validity floor");
    app->add_option("--jobs", cfg.jobs, "sweep worker count");
}

bq::ExperimentConfig finalize_config(bq::ExperimentConfig cfg, const std::string& config_path,
                                     const std::vector<std::string>& sets) {
    if (!config_path.empty()) cfg = bq::parse_config_file(config_path, cfg);
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        bq::detail::require(eq != std::string::npos, "--set expects key=value");
        bq::apply_config_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

int cmd_fit(const std::string& csv, const std::string& column, double t1, double t2) {
    std::ifstream in(csv);
    bq::detail::require(static_cast<bool>(in), "fit: cannot open " + csv);
    std::string header;
    std::getline(in, header);
    std::vector<std::string> cols;
    {
        std::stringstream ss(header);
        std::string tok;
        while (std::getline(ss, tok, ',')) cols.push_back(tok);
    }
    int target = -1;
    for (std::size_t i = 0; i < cols.size(); ++i)
        if (cols[i] == column) target = static_cast<int>(i);
    bq::detail::require(target > 0, "fit: column '" + column + "' not found in " + csv);
    bq::NormSeries series;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> vals;
        while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
        series.push(vals.at(0), vals.at(static_cast<std::size_t>(target)));
    }
    bq::FitResult f = bq::fit_exponent(series, t1, t2);
    std::cout << bq::scenario_detail::fit_json(f).dump(2) << "\n";
    return 0;
}

int cmd_profile(const std::string& dir, double t, double A, const std::string& mean_case) {
    namespace fs = std::filesystem;
    // locate the snapshot nearest to t and the initial snapshot
    std::string best, init;
    double best_dt = 1e300;
    bq::SnapshotFile probe;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string p = e.path().string();
        if (p.find(".bqsnap") == std::string::npos) continue;
        bq::SnapshotFile s = bq::read_snapshot_file(p);
        if (s.t == 0.0) init = p;
        if (std::abs(s.t - t) < best_dt) {
            best_dt = std::abs(s.t - t);
            best = p;
        }
    }
    bq::detail::require(!best.empty() && !init.empty(),
                        "profile: need snapshots at t = 0 and near the requested time");
    double ts = 0.0, t0 = 0.0;
    auto [u_t, th_t] = bq::read_state_snapshot(best, &ts);
    auto [u_0, th_0] = bq::read_state_snapshot(init, &t0);

    // m(t): trapezoid of the first moment in the series file
    bq::Vec3 mvec{0, 0, 0};
    {
        std::ifstream in(dir + "/series.csv");
        bq::detail::require(static_cast<bool>(in), "profile: missing series.csv");
        std::string line;
        std::getline(in, line);
        double prev_t = 0.0;
        while (std::getline(in, line)) {
            std::stringstream ss(line);
            std::string tok;
            std::vector<double> vals;
            while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
            if (vals.at(0) > ts + 1e-9) break;
            mvec = {vals.at(8), vals.at(9), vals.at(10)};
            prev_t = vals.at(0);
        }
        (void)prev_t;
    }
    const double m0 = bq::moments(th_0).m0;
    const bq::MeanCase mc =
        mean_case == "zero" ? bq::MeanCase::zero_mean : bq::MeanCase::nonzero_mean;
    bq::ProfileReport r = bq::profile_compare_fields(u_t, u_0, ts, A, mc, m0, mvec);
    nlohmann::json j = {{"A", r.A},
                        {"t", r.t},
                        {"shell_nodes", r.shell_nodes},
                        {"admissible", r.admissible},
                        {"excluded", r.excluded},
                        {"median_ratio", r.median_ratio},
                        {"iqr", r.iqr},
                        {"remainder_ratio", r.remainder_ratio}};
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_sweep(const bq::ExperimentConfig& base, const std::string& vary, int jobs) {
    const auto eq = vary.find('=');
    bq::detail::require(eq != std::string::npos, "sweep: --vary expects key=v1,v2,...");
    const std::string key = vary.substr(0, eq);
    std::vector<std::string> values;
    {
        std::stringstream ss(vary.substr(eq + 1));
        std::string tok;
        while (std::getline(ss, tok, ',')) values.push_back(tok);
    }
    bq::detail::require(!values.empty(), "sweep: no values given");
    std::vector<bq::ExperimentConfig> cfgs;
    for (std::size_t i = 0; i < values.size(); ++i) {
        bq::ExperimentConfig c = base;
        bq::apply_config_key(c, key, values[i]);
        if (c.outdir.empty()) c.outdir = bq::scenario_detail::output_dir(base);
        c.outdir += "_" + key + "_" + values[i];
        c.validate();
        cfgs.push_back(c);
    }
    std::vector<int> codes(cfgs.size(), 0);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cfgs.size()) return;
            try {
                codes[i] = bq::run_scenario(cfgs[i]);
            } catch (const std::exception& e) {
                std::cerr << "sweep[" << cfgs[i].outdir << "]: " << e.what() << "\n";
                codes[i] = bq::kExitUsage;
            }
        }
    };
    const int nw = std::max(1, std::min<int>(jobs, static_cast<int>(cfgs.size())));
    std::vector<std::thread> pool;
    for (int i = 0; i < nw; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    int rc = 0;
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
        std::cout << cfgs[i].outdir << ": exit " << codes[i] << "\n";
        rc = std::max(rc, codes[i]);
    }
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"free-space Boussinesq pseudo-spectral simulator and verification harness"};
    app.require_subcommand(1);

    bq::ExperimentConfig cfg;
    std::string config_path;
    std::vector<std::string> sets;

    auto* sim = app.add_subcommand("simulate", "run a scenario and write its artifacts");
    add_config_flags(sim, cfg, config_path, sets);

    auto* ker = app.add_subcommand("kernels", "build kernel tables and run the kernel audits");
    add_config_flags(ker, cfg, config_path, sets);

    auto* pic = app.add_subcommand("picard", "run the fixed-point iteration diagnostics");
    add_config_flags(pic, cfg, config_path, sets);

    auto* fit = app.add_subcommand("fit", "fit a log-log exponent from a norms.csv column");
    std::string fit_csv, fit_column;
    double fit_t1 = 0.0, fit_t2 = 0.0;
    fit->add_option("--csv", fit_csv, "norms.csv path")->required();
    fit->add_option("--column", fit_column, "column header to fit")->required();
    fit->add_option("--t1", fit_t1, "window start")->required();
    fit->add_option("--t2", fit_t2, "window end")->required();

    auto* prof = app.add_subcommand("profile", "far-field profile comparison from a run directory");
    std::string prof_dir, prof_case = "nonzero";
    double prof_t = 0.0, prof_A = 6.0;
    prof->add_option("--dir", prof_dir, "run directory")->required();
    prof->add_option("--t", prof_t, "snapshot time")->required();
    prof->add_option("--A", prof_A, "region parameter (>= 2)");
    prof->add_option("--case", prof_case, "nonzero | zero");

    auto* sw = app.add_subcommand("sweep", "fan a scenario out over one varying key");
    std::string vary;
    add_config_flags(sw, cfg, config_path, sets);
    sw->add_option("--vary", vary, "key=v1,v2,... to sweep")->required();

    auto* rep = app.add_subcommand("report", "summarize a run directory");
    std::string rep_dir;
    rep->add_option("--dir", rep_dir, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            return bq::run_scenario(finalize_config(cfg, config_path, sets));
        }
        if (ker->parsed()) {
            bq::ExperimentConfig c = finalize_config(cfg, config_path, sets);
            c.scenario = "kernels";
            return bq::run_scenario(c);
        }
        if (pic->parsed()) {
            bq::ExperimentConfig c = finalize_config(cfg, config_path, sets);
            c.scenario = "picard";
            if (c.dt == bq::ExperimentConfig{}.dt) c.dt = 0.1;  // series resolution
            if (c.T == bq::ExperimentConfig{}.T) c.T = 4.0;
            return bq::run_scenario(c);
        }
        if (fit->parsed()) return cmd_fit(fit_csv, fit_column, fit_t1, fit_t2);
        if (prof->parsed()) return cmd_profile(prof_dir, prof_t, prof_A, prof_case);
        if (sw->parsed())
            return cmd_sweep(finalize_config(cfg, config_path, sets), vary, cfg.jobs);
        if (rep->parsed()) {
            std::cout << bq::report_dir(rep_dir);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "bq: " << e.what() << "\n";
        return bq::kExitUsage;
    }
    return 0;
}
