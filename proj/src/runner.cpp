#include "qisd/runner.hpp"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "qisd/action.hpp"
#include "qisd/csv.hpp"
#include "qisd/influence.hpp"
#include "qisd/noise.hpp"
#include "qisd/oracle.hpp"

namespace qisd {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string hash_hex(std::uint64_t h) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return buf;
}

class Manifest {
  public:
    Manifest(const fs::path& dir, const std::string& subcommand, const Config& cfg,
             std::uint64_t seed)
        : path_(dir / "manifest.jsonl"), subcommand_(subcommand), seed_(seed),
          config_hash_(hash_hex(cfg.hash())), started_(std::chrono::steady_clock::now()) {
        out_.open(path_, std::ios::trunc);
        if (!out_) throw IoError("cannot open " + path_.string());
        json run{{"type", "run"},
                 {"subcommand", subcommand},
                 {"seed", seed},
                 {"config_hash", config_hash_},
                 {"version", QISD_VERSION},
                 {"config", cfg.canonical_text()}};
        out_ << run.dump() << "\n";
    }

    void output_file(const std::string& name) {
        json rec{{"type", "output"},
                 {"file", name},
                 {"subcommand", subcommand_},
                 {"seed", seed_},
                 {"config_hash", config_hash_},
                 {"version", QISD_VERSION}};
        out_ << rec.dump() << "\n";
    }

    void record(json rec) { out_ << rec.dump() << "\n"; }

    void finish() {
        const double runtime =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
        json rec{{"type", "done"}, {"runtime_s", runtime}};
        out_ << rec.dump() << "\n";
        out_.close();
    }

  private:
    fs::path path_;
    std::string subcommand_;
    std::uint64_t seed_;
    std::string config_hash_;
    std::chrono::steady_clock::time_point started_;
    std::ofstream out_;
};

EnsembleOptions ensemble_options(const Config& cfg, const RunContext& ctx) {
    EnsembleOptions opts;
    opts.threads = ctx.threads;
    opts.stride = static_cast<std::size_t>(cfg.get_int("output.stride", 1));
    const std::string policy = cfg.get_string("ensemble.policy", "abort");
    if (policy == "abort") opts.policy = FailurePolicy::abort;
    else if (policy == "skip") opts.policy = FailurePolicy::skip;
    else throw ConfigError("ensemble.policy: expected 'abort' or 'skip'");
    return opts;
}

int run_simulate(const Config& cfg, const RunContext& ctx, const fs::path& dir) {
    const LangevinSpec spec = build_langevin_spec(cfg);
    const TimeGrid grid = build_time_grid(cfg);
    const InitDistribution init = build_init_distribution(cfg, spec);
    const auto n = static_cast<std::size_t>(cfg.get_int("ensemble.n"));
    const std::uint64_t seed = cfg.get_u64("seed");
    const EnsembleOptions opts = ensemble_options(cfg, ctx);

    Manifest manifest(dir, "simulate", cfg, seed);
    const EnsembleStats stats = ensemble_statistics(spec, init, grid, n, seed, opts);
    {
        CsvWriter csv((dir / "stats.csv").string(),
                      {"t", "mean_x", "mean_v", "var_x", "var_v", "cov_xv", "se_mean_x",
                       "se_mean_v", "se_var_x", "se_var_v"});
        for (std::size_t i = 0; i < stats.t.size(); ++i)
            csv.row({stats.t[i], stats.mean_x[i], stats.mean_v[i], stats.var_x[i],
                     stats.var_v[i], stats.cov_xv[i], stats.se_mean_x[i], stats.se_mean_v[i],
                     stats.se_var_x[i], stats.se_var_v[i]});
    }
    manifest.output_file("stats.csv");
    if (!stats.failed_indices.empty())
        manifest.record(json{{"type", "skipped_trajectories"},
                             {"count", stats.failed_indices.size()},
                             {"indices", stats.failed_indices}});

    const auto n_noise = static_cast<std::size_t>(cfg.get_int("output.noise_paths", 0));
    if (n_noise > 0) {
        const NoiseSampler sampler(spec.noise, grid, seed);
        CsvWriter csv((dir / "noise.csv").string(), {"draw_index", "t", "eta"});
        for (std::size_t i = 0; i < n_noise; ++i) {
            const NoisePath path = sampler.sample(i);
            for (std::size_t k = 0; k < grid.n_steps(); ++k)
                csv.row({static_cast<double>(i), grid.time(k),
                         path.values[static_cast<Eigen::Index>(k)]});
        }
        manifest.output_file("noise.csv");
    }

    if (cfg.get_bool("output.dump_trajectories", false)) {
        const auto trajs = run_ensemble(spec, init, grid, n, seed, opts);
        CsvWriter csv((dir / "trajectories.csv").string(), {"trajectory_id", "t", "x", "v"});
        const std::size_t stride = opts.stride;
        for (std::size_t i = 0; i < trajs.size(); ++i)
            for (std::size_t k = 0; k <= grid.n_steps(); k += stride)
                csv.row({static_cast<double>(i), grid.time(k), trajs[i].x[k], trajs[i].v[k]});
        manifest.output_file("trajectories.csv");
    }
    manifest.finish();
    return 0;
}

int run_action(const Config& cfg, const RunContext& ctx, const fs::path& dir) {
    const LangevinSpec spec = build_langevin_spec(cfg);
    const TimeGrid grid = build_time_grid(cfg);
    const InitDistribution init = build_init_distribution(cfg, spec);
    const auto n = static_cast<std::size_t>(cfg.get_int("ensemble.n"));
    const std::uint64_t seed = cfg.get_u64("seed");
    const EnsembleOptions opts = ensemble_options(cfg, ctx);

    Manifest manifest(dir, "action", cfg, seed);
    std::vector<ActionValue> values(n);
    std::vector<char> ok(n, 0);
    for_each_trajectory(spec, init, grid, n, seed, opts,
                        [&](std::size_t i, const Trajectory& traj) {
                            values[i] = om_action(traj, spec);
                            ok[i] = 1;
                        });
    CsvWriter csv((dir / "action.csv").string(),
                  {"trajectory_id", "s", "log_measure_correction"});
    for (std::size_t i = 0; i < n; ++i)
        if (ok[i]) csv.row({static_cast<double>(i), values[i].s,
                            values[i].log_measure_correction});
    csv.close();
    manifest.output_file("action.csv");
    manifest.finish();
    return 0;
}

int run_wigner(const Config& cfg, const RunContext& ctx, const fs::path& dir) {
    const LangevinSpec spec = build_langevin_spec(cfg);
    const StateSpec state = build_state_spec(cfg, spec);
    const auto n = static_cast<std::size_t>(cfg.get_int("wigner.n_samples"));
    const double tau = cfg.get_double("wigner.tau");
    const auto n_steps = static_cast<std::size_t>(cfg.get_int("wigner.n_steps", 1));
    const std::uint64_t seed = cfg.get_u64("seed");
    PhaseWindow window{cfg.get_double("wigner.window.x_min"),
                       cfg.get_double("wigner.window.x_max"),
                       cfg.get_double("wigner.window.p_min"),
                       cfg.get_double("wigner.window.p_max")};
    const auto nx = static_cast<Eigen::Index>(cfg.get_int("wigner.bins.x"));
    const auto np = static_cast<Eigen::Index>(cfg.get_int("wigner.bins.p"));

    Manifest manifest(dir, "wigner", cfg, seed);
    const WignerEnsemble initial = sample_initial_state(state, n, seed);
    const WignerEnsemble final_ens =
        propagate_wigner(initial, spec, tau, n_steps, seed, ctx.threads);
    const WignerGrid grid = estimate_grid(final_ens, window, nx, np);
    {
        CsvWriter csv((dir / "wigner_grid.csv").string(), {"x", "p", "W", "stderr"});
        for (Eigen::Index i = 0; i < grid.nx; ++i)
            for (Eigen::Index j = 0; j < grid.np; ++j)
                csv.row({grid.x_center(i), grid.p_center(j), grid.values(i, j),
                         grid.stderr_(i, j)});
    }
    manifest.output_file("wigner_grid.csv");
    manifest.record(json{{"type", "wigner_meta"},
                         {"state", state.name()},
                         {"config_hash", hash_hex(cfg.hash())},
                         {"seed", seed},
                         {"n_samples", n},
                         {"tau", tau},
                         {"negativity", negativity(grid)},
                         {"coverage", grid.coverage},
                         {"weight_sum", final_ens.weight_sum()},
                         {"effective_sample_size", initial.effective_sample_size}});
    manifest.finish();
    return 0;
}

void write_kernel_config(std::ofstream& out, const fs::path& dir, const std::string& prefix,
                         const KernelSpec& k) {
    switch (k.kind()) {
        case KernelSpec::Kind::delta:
            out << prefix << ".kind = delta\n";
            out << prefix << ".amplitude = " << k.amplitude() << "\n";
            break;
        case KernelSpec::Kind::delta_derivative:
            out << prefix << ".kind = delta_derivative\n";
            out << prefix << ".amplitude = " << k.amplitude() << "\n";
            break;
        case KernelSpec::Kind::exponential:
            out << prefix << ".kind = exponential\n";
            out << prefix << ".amplitude = " << k.amplitude() << "\n";
            out << prefix << ".correlation_time = " << k.correlation_time() << "\n";
            break;
        case KernelSpec::Kind::tabulated: {
            std::string base = prefix;
            for (auto& c : base)
                if (c == '.') c = '_';
            const fs::path table = dir / (base + "_table.csv");
            std::ofstream tab(table);
            const auto& times = k.table_times();
            const auto& vals = k.table_values();
            tab.precision(17);
            for (std::size_t i = 0; i < times.size(); ++i) {
                tab << times[i];
                for (Eigen::Index j = 0; j < vals.cols(); ++j)
                    tab << "," << vals(static_cast<Eigen::Index>(i), j);
                tab << "\n";
            }
            out << prefix << ".kind = tabulated\n";
            out << prefix << ".file = " << table.string() << "\n";
            break;
        }
    }
}

void write_coupling_config(std::ofstream& out, const std::string& prefix,
                           const CouplingFunction& f) {
    switch (f.kind()) {
        case CouplingFunction::Kind::linear:
            out << prefix << ".kind = linear\n";
            break;
        case CouplingFunction::Kind::constant:
            out << prefix << ".kind = constant\n";
            out << prefix << ".value = " << f.constant_value() << "\n";
            break;
        case CouplingFunction::Kind::power:
            out << prefix << ".kind = power\n";
            out << prefix << ".exponent = " << f.power_exponent() << "\n";
            break;
        case CouplingFunction::Kind::tabulated:
            out << prefix << ".kind = tabulated\n";
            out << "# tabulated coupling: re-supply the table file\n";
            break;
    }
}

int run_inverse(const Config& cfg, const RunContext& ctx, const fs::path& dir) {
    (void)ctx;
    const LangevinSpec spec = build_langevin_spec(cfg);
    const std::uint64_t seed = cfg.get_u64("seed");
    Manifest manifest(dir, "inverse", cfg, seed);

    const InfluenceFunctionalSpec ifs = build_influence_functional(spec);
    {
        std::ofstream out(dir / "influence_spec.cfg");
        out.precision(17);
        out << "hbar = " << ifs.hbar << "\n";
        out << "mode = "
            << (ifs.mode == CouplingMode::qisd ? "qisd" : "langevin") << "\n";
        write_coupling_config(out, "coupling.f", ifs.f);
        write_coupling_config(out, "coupling.g", ifs.g);
        write_kernel_config(out, dir, "kernel.D", ifs.dissipation);
        write_kernel_config(out, dir, "kernel.N", ifs.noise);
    }
    manifest.output_file("influence_spec.cfg");

    const double y0_min = cfg.get_double("inverse.y0.min", 0.0);
    const double y0_max = cfg.get_double("inverse.y0.max", 1.0);
    const auto y0_count = static_cast<std::size_t>(cfg.get_int("inverse.y0.count", 11));
    const double tau_min = cfg.get_double("inverse.tau.min", 0.1);
    const double tau_max = cfg.get_double("inverse.tau.max", 1.0);
    const auto tau_count = static_cast<std::size_t>(cfg.get_int("inverse.tau.count", 10));
    const double x_ref = cfg.get_double("inverse.x_ref", 1.0);
    const auto n_steps = static_cast<std::size_t>(cfg.get_int("inverse.n_steps", 128));
    if (y0_count < 1 || tau_count < 1)
        throw ConfigError("inverse: y0.count and tau.count must be >= 1");

    CsvWriter csv((dir / "decoherence.csv").string(), {"y0", "tau", "factor"});
    for (std::size_t a = 0; a < y0_count; ++a) {
        const double y0 = y0_count == 1
                              ? y0_min
                              : y0_min + (y0_max - y0_min) * static_cast<double>(a) /
                                             static_cast<double>(y0_count - 1);
        for (std::size_t b = 0; b < tau_count; ++b) {
            const double tau = tau_count == 1
                                   ? tau_min
                                   : tau_min + (tau_max - tau_min) * static_cast<double>(b) /
                                                   static_cast<double>(tau_count - 1);
            PathPair pair{TimeGrid(tau, n_steps),
                          Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_steps), x_ref),
                          Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_steps), y0)};
            csv.row({y0, tau, decoherence_factor(ifs, pair)});
        }
    }
    csv.close();
    manifest.output_file("decoherence.csv");
    manifest.finish();
    return 0;
}

int run_validate(const Config& cfg, const RunContext& ctx, const fs::path& dir) {
    const double gamma = cfg.get_double("cl.gamma", 0.5);
    const double kBT = cfg.get_double("cl.kbt", 2.0);
    const double mass = cfg.get_double("mass", 1.0);
    const double omega = cfg.get_double("potential.omega", 1.0);
    const std::uint64_t seed = cfg.get_u64("seed");

    Manifest manifest(dir, "validate", cfg, seed);
    const auto checks = oracle_consistency_checks(mass, omega, gamma, kBT);
    CsvWriter csv((dir / "validate.csv").string(), {"value", "threshold", "pass"});
    bool all_pass = true;
    for (const auto& c : checks) {
        all_pass = all_pass && c.pass;
        if (!ctx.quiet)
            std::printf("%-34s %s  (%.3e <= %.3e)%s%s\n", c.name.c_str(),
                        c.pass ? "PASS" : "FAIL", c.value, c.threshold,
                        c.detail.empty() ? "" : "  ", c.detail.c_str());
        csv.row({c.value, c.threshold, c.pass ? 1.0 : 0.0});
    }
    csv.close();
    manifest.output_file("validate.csv");
    manifest.finish();
    return all_pass ? 0 : 4;
}

} // namespace

std::vector<CheckResult> oracle_consistency_checks(double mass, double omega, double gamma,
                                                   double kBT) {
    std::vector<CheckResult> out;

    // Endpoint covariance: block-eliminated quadratic form vs moment equations.
    const TimeGrid grid(1.0, 1000);
    const oracle::GaussianPropagator prop(mass, omega, gamma, kBT, grid);
    oracle::GaussianState init;
    const oracle::GaussianState ode =
        oracle::moment_ode_evolve(mass, omega, gamma, kBT, init, grid.t_end(), 1e-4);
    {
        const Eigen::Matrix2d diff = prop.covariance() - ode.cov;
        const double rel = diff.norm() / ode.cov.norm();
        out.push_back({"covariance_quadratic_vs_ode", rel < 1e-3, rel, 1e-3, ""});
    }
    {
        oracle::GaussianState start;
        start.mean << 1.0, 0.5;
        const oracle::GaussianState moved =
            oracle::moment_ode_evolve(mass, omega, gamma, kBT, start, grid.t_end(), 1e-4);
        const Eigen::Vector2d mapped = prop.mean_map() * start.mean;
        const double rel = (mapped - moved.mean).norm() / moved.mean.norm();
        out.push_back({"mean_map_quadratic_vs_ode", rel < 1e-3, rel, 1e-3, ""});
    }

    // Grid solver moments vs moment equations at grid-resolution tolerance.
    {
        const double tau = 1.0;
        const StateSpec state = StateSpec::gaussian(1.0, 0.0, 0.4, 0.8, 0.0);
        const PhaseWindow window{-6.5, 6.5, -7.5, 7.5};
        const Eigen::Index nx = 260, np = 300;
        const WignerGrid w0 = grid_from_state(state, window, nx, np);
        const auto res = oracle::kramers_grid_solve(
            mass, Potential::harmonic(mass * omega * omega), gamma, kBT, w0, tau);
        const PhaseMoments pde = grid_moments(res.w);

        oracle::GaussianState s0;
        s0.mean << state.mean_x, state.mean_p;
        s0.cov << state.var_x, state.cov_xp, state.cov_xp, state.var_p;
        const oracle::GaussianState ref =
            oracle::moment_ode_evolve(mass, omega, gamma, kBT, s0, tau, 1e-4);

        const double dx = res.w.dx(), dp = res.w.dp();
        const double p_rms = std::sqrt(std::max(ref.cov(1, 1), s0.cov(1, 1)) +
                                       ref.mean[1] * ref.mean[1]);
        const double x_rms = std::sqrt(std::max(ref.cov(0, 0), s0.cov(0, 0)) +
                                       ref.mean[0] * ref.mean[0]);
        const double f_rms = mass * omega * omega * x_rms + gamma * p_rms / mass;
        // First-order upwind numerical-diffusion bound on the moment drift.
        const double tol_mean = dx + dp;
        const double tol_var_x = dx * p_rms / mass * tau + dx * dx;
        const double tol_var_p = dp * f_rms * tau + dp * dp;

        out.push_back({"pde_mean_x_vs_ode", std::abs(pde.mean_x - ref.mean[0]) < tol_mean,
                       std::abs(pde.mean_x - ref.mean[0]), tol_mean, ""});
        out.push_back({"pde_mean_p_vs_ode", std::abs(pde.mean_p - ref.mean[1]) < tol_mean,
                       std::abs(pde.mean_p - ref.mean[1]), tol_mean, ""});
        out.push_back({"pde_var_x_vs_ode", std::abs(pde.var_x - ref.cov(0, 0)) < tol_var_x,
                       std::abs(pde.var_x - ref.cov(0, 0)), tol_var_x, ""});
        out.push_back({"pde_var_p_vs_ode", std::abs(pde.var_p - ref.cov(1, 1)) < tol_var_p,
                       std::abs(pde.var_p - ref.cov(1, 1)), tol_var_p, ""});
        out.push_back({"pde_mass_conservation",
                       std::abs(res.w.normalization() - (1.0 - res.leakage)) < 5e-3 &&
                           res.leakage < 0.02,
                       res.leakage, 0.02, "leakage"});
    }

    // Path-weight ratios: action sums vs conditional-density exponents.
    {
        LangevinSpec spec;
        spec.mass = mass;
        spec.potential = Potential::harmonic(mass * omega * omega);
        auto [d, nker] = cl_kernels(gamma, kBT);
        spec.dissipation = d;
        spec.noise = nker;
        double worst = 0.0;
        const double ends[3][4] = {{1.0, 0.0, 0.6, -0.3}, {0.0, 1.0, 0.8, 0.4},
                                   {-0.5, 0.2, 0.1, 0.9}};
        std::vector<Trajectory> trajs;
        std::vector<double> smin;
        for (const auto& e : ends) {
            Trajectory t{grid, prop.minimizing_path(e[0], e[1], e[2], e[3]),
                         std::vector<double>(grid.n_steps() + 1, 0.0)};
            trajs.push_back(std::move(t));
            smin.push_back(prop.min_action(e[0], e[1], e[2], e[3]));
        }
        for (std::size_t i = 0; i < trajs.size(); ++i)
            for (std::size_t j = i + 1; j < trajs.size(); ++j) {
                const double impl = relative_path_weight(trajs[i], trajs[j], spec);
                const double ref = std::exp(-smin[i] + smin[j]);
                worst = std::max(worst, std::abs(impl / ref - 1.0));
            }
        out.push_back({"path_weight_vs_propagator", worst < 0.01, worst, 0.01, ""});
    }
    return out;
}

int run_subcommand(const std::string& name, const Config& cfg, const RunContext& ctx) {
    const fs::path dir(ctx.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string());

    if (name == "simulate") return run_simulate(cfg, ctx, dir);
    if (name == "action") return run_action(cfg, ctx, dir);
    if (name == "wigner") return run_wigner(cfg, ctx, dir);
    if (name == "inverse") return run_inverse(cfg, ctx, dir);
    if (name == "validate") return run_validate(cfg, ctx, dir);
    throw ConfigError("unknown subcommand '" + name + "'");
}

} // namespace qisd
