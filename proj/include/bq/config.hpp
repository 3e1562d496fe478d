#ifndef BQ_CONFIG_HPP
#define BQ_CONFIG_HPP

#include <charconv>
#include <map>
#include <set>

#include "bq/operators.hpp"
#include "bq/norms.hpp"

namespace bq {

/// Flat key-value run configuration. Unknown keys are errors so that typos
/// cannot silently fall back to defaults.
struct ExperimentConfig {
    int n = 64;
    double L = 40.0;
    double T = 50.0;
    double dt = 0.02;
    int sample_every = 5;
    std::string scenario = "growth";
    std::string theta_init = "gaussian:amplitude=0.025,width=1";
    std::string u_init = "zero";
    std::string norms = "u:p=2,r=0;theta:p=2,r=0";
    double fit_t1 = 0.0, fit_t2 = 0.0;  // 0 = automatic clean decade
    double split_k = 3.5;
    double profile_A = 6.0;
    double profile_t = 0.0;  // 0 = scenario default
    double env_a = 1.5, env_b = 3.0;
    std::string mean_case = "nonzero";  // nonzero | zero
    double gate_epsilon = 0.05;
    unsigned seed = 1;
    std::string outdir;
    bool dealias = true;
    bool buoyancy = true;
    bool nonlinear = true;
    double mollify_delta = 0.0;
    double containment_floor = 0.99;
    std::vector<double> snapshot_times;
    int jobs = 1;

    void validate() const {
        detail::require(n >= 8 && n % 2 == 0, "config: n must be even and >= 8");
        detail::require(L > 0 && T > 0 && dt > 0, "config: L, T, dt must be positive");
        detail::require(sample_every >= 1, "config: sample_every must be >= 1");
        detail::require(split_k > 0, "config: split_k must be positive");
        detail::require(profile_A >= 2.0, "config: profile_A must be >= 2");
        detail::require(gate_epsilon > 0, "config: gate_epsilon must be positive");
        detail::require(containment_floor >= 0 && containment_floor <= 1,
                        "config: containment_floor must lie in [0,1]");
        detail::require(mean_case == "nonzero" || mean_case == "zero",
                        "config: mean_case must be 'nonzero' or 'zero'");
        static const std::set<std::string> known = {
            "zero",   "growth", "decay_zero_mean", "theta_rates", "linear_decay",
            "fourier_splitting", "profile", "weighted_sweep", "tail", "picard",
            "mollified", "kernels"};
        detail::require(known.count(scenario) == 1, "config: unknown scenario '" + scenario + "'");
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

inline double to_double(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        require(pos == s.size(), "config: bad numeric value for " + key);
        return v;
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("config: bad numeric value for " + key);
    }
}

inline bool to_bool(const std::string& s, const std::string& key) {
    if (s == "true" || s == "1" || s == "on") return true;
    if (s == "false" || s == "0" || s == "off") return false;
    throw std::invalid_argument("config: bad boolean value for " + key);
}

}  // namespace detail

inline void apply_config_key(ExperimentConfig& c, const std::string& key,
                             const std::string& value) {
    using detail::to_bool;
    using detail::to_double;
    if (key == "n") c.n = static_cast<int>(to_double(value, key));
    else if (key == "L") c.L = to_double(value, key);
    else if (key == "T") c.T = to_double(value, key);
    else if (key == "dt") c.dt = to_double(value, key);
    else if (key == "sample_every") c.sample_every = static_cast<int>(to_double(value, key));
    else if (key == "scenario") c.scenario = value;
    else if (key == "theta_init") c.theta_init = value;
    else if (key == "u_init") c.u_init = value;
    else if (key == "norms") c.norms = value;
    else if (key == "fit_t1") c.fit_t1 = to_double(value, key);
    else if (key == "fit_t2") c.fit_t2 = to_double(value, key);
    else if (key == "split_k") c.split_k = to_double(value, key);
    else if (key == "profile_A") c.profile_A = to_double(value, key);
    else if (key == "profile_t") c.profile_t = to_double(value, key);
    else if (key == "env_a") c.env_a = to_double(value, key);
    else if (key == "env_b") c.env_b = to_double(value, key);
    else if (key == "mean_case") c.mean_case = value;
    else if (key == "gate_epsilon") c.gate_epsilon = to_double(value, key);
    else if (key == "seed") c.seed = static_cast<unsigned>(to_double(value, key));
    else if (key == "outdir") c.outdir = value;
    else if (key == "dealias") c.dealias = to_bool(value, key);
    else if (key == "buoyancy") c.buoyancy = to_bool(value, key);
    else if (key == "nonlinear") c.nonlinear = to_bool(value, key);
    else if (key == "mollify_delta") c.mollify_delta = to_double(value, key);
    else if (key == "containment_floor") c.containment_floor = to_double(value, key);
    else if (key == "jobs") c.jobs = static_cast<int>(to_double(value, key));
    else if (key == "snapshot_times") {
        c.snapshot_times.clear();
        std::stringstream ss(value);
        std::string tok;
        while (std::getline(ss, tok, ','))
            c.snapshot_times.push_back(to_double(detail::trim(tok), key));
    } else {
        throw std::invalid_argument("config: unknown key '" + key + "'");
    }
}

inline ExperimentConfig parse_config(const std::string& text,
                                     ExperimentConfig base = ExperimentConfig{}) {
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        detail::require(eq != std::string::npos,
                        "config: line " + std::to_string(lineno) + " is not 'key = value'");
        apply_config_key(base, detail::trim(line.substr(0, eq)),
                         detail::trim(line.substr(eq + 1)));
    }
    base.validate();
    return base;
}

inline ExperimentConfig parse_config_file(const std::string& path,
                                          ExperimentConfig base = ExperimentConfig{}) {
    std::ifstream in(path);
    detail::require(static_cast<bool>(in), "config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

/// Tracked-norm list: "u:p=2,r=0;theta:p=4,r=0;u:weak,p=3".
inline std::vector<TrackedNorm> parse_norm_list(const std::string& text) {
    std::vector<TrackedNorm> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        item = detail::trim(item);
        if (item.empty()) continue;
        const std::size_t colon = item.find(':');
        detail::require(colon != std::string::npos, "norms: entry needs 'field:params'");
        TrackedNorm tn;
        tn.field = detail::trim(item.substr(0, colon));
        std::stringstream ps(item.substr(colon + 1));
        std::string tok;
        while (std::getline(ps, tok, ',')) {
            tok = detail::trim(tok);
            if (tok == "weak") {
                tn.descriptor.kind = NormKind::weak;
            } else if (tok.rfind("p=", 0) == 0) {
                const std::string v = tok.substr(2);
                tn.descriptor.p = v == "inf" ? std::numeric_limits<double>::infinity()
                                             : detail::to_double(v, "norms.p");
            } else if (tok.rfind("r=", 0) == 0) {
                tn.descriptor.r = detail::to_double(tok.substr(2), "norms.r");
                if (tn.descriptor.r > 0.0 && tn.descriptor.kind == NormKind::lebesgue)
                    tn.descriptor.kind = NormKind::weighted;
            } else {
                throw std::invalid_argument("norms: bad token '" + tok + "'");
            }
        }
        tn.descriptor.validate();
        out.push_back(tn);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Initial data generators
// ---------------------------------------------------------------------------

namespace detail {

struct GenSpec {
    std::string name;
    std::map<std::string, std::string> args;
};

inline GenSpec parse_genspec(const std::string& text) {
    GenSpec g;
    const std::size_t colon = text.find(':');
    g.name = trim(colon == std::string::npos ? text : text.substr(0, colon));
    if (colon != std::string::npos) {
        std::stringstream ss(text.substr(colon + 1));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            tok = trim(tok);
            if (tok.empty()) continue;
            const std::size_t eq = tok.find('=');
            require(eq != std::string::npos, "generator: bad argument '" + tok + "'");
            g.args[trim(tok.substr(0, eq))] = trim(tok.substr(eq + 1));
        }
    }
    return g;
}

inline double gen_arg(const GenSpec& g, const std::string& key, double dflt) {
    auto it = g.args.find(key);
    return it == g.args.end() ? dflt : to_double(it->second, key);
}

// Compact-concentration check: reject widths whose Gaussian factor at the
// nearest box face exceeds 1e-12 of the center value.
inline void check_width(const Grid3& g, double sigma, const Vec3& center) {
    double dist = g.L;
    for (int c = 0; c < 3; ++c) dist = std::min(dist, g.L - std::abs(center[c]));
    require(dist > 0, "generator: center outside the box");
    require(std::exp(-dist * dist / (4.0 * sigma)) <= 1e-12,
            "generator: width too large for the box (edge value > 1e-12 of max)");
}

inline double gaussian_g(const Vec3& d, double sigma) {
    return std::pow(4.0 * M_PI * sigma, -1.5) * std::exp(-dot(d, d) / (4.0 * sigma));
}

template <typename F>
void fill(ScalarField& f, F&& fn) {
    const Grid3& g = f.grid();
    std::size_t i = 0;
    for (int iz = 0; iz < g.n; ++iz)
        for (int iy = 0; iy < g.n; ++iy)
            for (int ix = 0; ix < g.n; ++ix, ++i)
                f[i] = fn(Vec3{g.node(ix), g.node(iy), g.node(iz)});
}

}  // namespace detail

/// theta generators: gaussian (mass = amplitude), dipole (-d3 of a Gaussian:
/// zero mean, first moment amplitude*e3), two_blob (difference of offset
/// Gaussians: zero mean), zero.
inline ScalarField generate_theta(const Grid3& grid, const std::string& spec) {
    detail::GenSpec g = detail::parse_genspec(spec);
    ScalarField out(grid);
    if (g.name == "zero") return out;
    const double A = detail::gen_arg(g, "amplitude", 0.025);
    const double w = detail::gen_arg(g, "width", 1.0);
    const Vec3 c = {detail::gen_arg(g, "cx", 0.0), detail::gen_arg(g, "cy", 0.0),
                    detail::gen_arg(g, "cz", 0.0)};
    const double sigma = w * w;
    detail::require(w > 0, "generator: width must be positive");
    detail::check_width(grid, sigma, c);
    if (g.name == "gaussian") {
        detail::fill(out, [&](const Vec3& x) {
            return A * detail::gaussian_g({x[0] - c[0], x[1] - c[1], x[2] - c[2]}, sigma);
        });
    } else if (g.name == "dipole") {
        // -A d3 g_sigma: zero mean, first moment A e3
        detail::fill(out, [&](const Vec3& x) {
            const Vec3 d = {x[0] - c[0], x[1] - c[1], x[2] - c[2]};
            return A * d[2] / (2.0 * sigma) * detail::gaussian_g(d, sigma);
        });
    } else if (g.name == "two_blob") {
        const double off = detail::gen_arg(g, "offset", 2.0 * w);
        detail::fill(out, [&](const Vec3& x) {
            const Vec3 dm = {x[0] - c[0], x[1] - c[1], x[2] - c[2] - off};
            const Vec3 dp = {x[0] - c[0], x[1] - c[1], x[2] - c[2] + off};
            return 0.5 * A * (detail::gaussian_g(dm, sigma) - detail::gaussian_g(dp, sigma));
        });
    } else {
        throw std::invalid_argument("generator: unknown theta generator '" + g.name + "'");
    }
    return out;
}

/// u generators: solenoidal (spectral curl of a Gaussian vector potential,
/// normalized so that sup |x| |u| = amplitude in the continuum), zero.
inline VectorField generate_u(const Grid3& grid, const std::string& spec) {
    detail::GenSpec g = detail::parse_genspec(spec);
    VectorField out(grid);
    if (g.name == "zero") return out;
    detail::require(g.name == "solenoidal", "generator: unknown u generator '" + g.name + "'");
    const double A = detail::gen_arg(g, "amplitude", 0.01);
    const double w = detail::gen_arg(g, "width", 1.0);
    const Vec3 c = {detail::gen_arg(g, "cx", 0.0), detail::gen_arg(g, "cy", 0.0),
                    detail::gen_arg(g, "cz", 0.0)};
    const double sigma = w * w;
    detail::require(w > 0, "generator: width must be positive");
    detail::check_width(grid, sigma, c);
    // potential G(x) a with a = (1,1,1)/sqrt(3); sup_x |x| |grad G x a| =
    // 2 e^-1 (4 pi sigma)^{-3/2}, attained at |x| = 2 sqrt(sigma)
    const double peak = 2.0 * std::exp(-1.0) * std::pow(4.0 * M_PI * sigma, -1.5);
    const Vec3 a = {1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0)};
    VectorField pot(grid);
    for (int j = 0; j < 3; ++j) {
        detail::fill(pot.comp(j), [&](const Vec3& x) {
            const Vec3 d = {x[0] - c[0], x[1] - c[1], x[2] - c[2]};
            return (A / peak) * detail::gaussian_g(d, sigma) * a[j];
        });
    }
    return curl(pot);  // spectral curl: exactly solenoidal on the grid
}

inline std::pair<VectorField, ScalarField> generate_initial(const Grid3& grid,
                                                            const std::string& u_spec,
                                                            const std::string& theta_spec) {
    return {generate_u(grid, u_spec), generate_theta(grid, theta_spec)};
}

}  // namespace bq

#endif  // BQ_CONFIG_HPP
