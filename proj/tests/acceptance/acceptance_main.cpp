// Acceptance suite: one pass/fail line per criterion. Exits nonzero when any
// criterion fails. `--cli <path>` points at the command-line binary used by
// the determinism criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "qisd/action.hpp"
#include "qisd/influence.hpp"
#include "qisd/noise.hpp"
#include "qisd/oracle.hpp"
#include "qisd/rng.hpp"
#include "qisd/runner.hpp"
#include "qisd/wigner.hpp"

using namespace qisd;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] C%-2d %-36s %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void run(int id, const std::string& name, const std::function<std::pair<bool, std::string>()>& fn) {
    try {
        auto [pass, detail] = fn();
        report(id, name, pass, detail);
    } catch (const std::exception& e) {
        report(id, name, false, std::string("exception: ") + e.what());
    }
}

LangevinSpec benchmark_spec() {
    LangevinSpec spec;
    spec.mass = 1.0;
    spec.potential = Potential::harmonic(1.0);
    auto [d, n] = cl_kernels(0.5, 2.0);
    spec.dissipation = d;
    spec.noise = n;
    return spec;
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c);
    return buf;
}

// C1: stationary second moments of the thermal benchmark.
std::pair<bool, std::string> criterion_equilibrium() {
    const auto t0 = std::chrono::steady_clock::now();
    const LangevinSpec spec = benchmark_spec();
    const TimeGrid grid(50.0, 50000); // dt = 1e-3
    EnsembleOptions opts;
    opts.threads = 1;
    opts.stride = 50000;
    const EnsembleStats stats =
        ensemble_statistics(spec, InitDistribution::point(0.0, 0.0), grid, 10000, 1001, opts);
    const double runtime =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::size_t k = stats.t.size() - 1;
    const double zx = std::abs(stats.var_x[k] - 2.0) / stats.se_var_x[k];
    const double zv = std::abs(stats.var_v[k] - 2.0) / stats.se_var_v[k];
    const bool pass = zx < 3.0 && zv < 3.0 && runtime < 120.0;
    return {pass, fmt("<x^2>=%.4f (z=%.2f), <p^2>=%.4f", stats.var_x[k], zx, stats.var_v[k]) +
                      fmt(" (z=%.2f), %.1fs", zv, runtime)};
}

// C2: transient moments against the moment equations.
std::pair<bool, std::string> criterion_moment_tracking() {
    const auto t0 = std::chrono::steady_clock::now();
    const LangevinSpec spec = benchmark_spec();
    const StateSpec state = StateSpec::coherent(2.0, 0.0, 1.0, 1.0);
    const InitDistribution init =
        InitDistribution::gaussian(state.mean_x, state.mean_p, state.var_x, state.var_p);
    const TimeGrid grid(10.0, 10000);
    EnsembleOptions opts;
    opts.threads = 1;
    opts.stride = 1000; // checkpoints at integer times
    const std::size_t n = 10000;
    const EnsembleStats stats = ensemble_statistics(spec, init, grid, n, 2002, opts);

    oracle::GaussianState s0;
    s0.mean << state.mean_x, state.mean_p;
    s0.cov << state.var_x, 0.0, 0.0, state.var_p;
    double worst_z = 0.0;
    for (double tau : {1.0, 5.0, 10.0}) {
        std::size_t i = 0;
        while (i < stats.t.size() && std::abs(stats.t[i] - tau) > 1e-9) ++i;
        if (i == stats.t.size()) return {false, "checkpoint missing"};
        const oracle::GaussianState ref =
            oracle::moment_ode_evolve(1.0, 1.0, 0.5, 2.0, s0, tau, 1e-4);
        const double se_cov = std::sqrt(
            (stats.var_x[i] * stats.var_v[i] + stats.cov_xv[i] * stats.cov_xv[i]) /
            static_cast<double>(n));
        const double zs[5] = {
            std::abs(stats.mean_x[i] - ref.mean[0]) / stats.se_mean_x[i],
            std::abs(stats.mean_v[i] - ref.mean[1]) / stats.se_mean_v[i],
            std::abs(stats.var_x[i] - ref.cov(0, 0)) / stats.se_var_x[i],
            std::abs(stats.var_v[i] - ref.cov(1, 1)) / stats.se_var_v[i],
            std::abs(stats.cov_xv[i] - ref.cov(0, 1)) / se_cov,
        };
        for (double z : zs) worst_z = std::max(worst_z, z);
    }
    const double runtime =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {worst_z < 3.0 && runtime < 120.0,
            fmt("worst |z| = %.2f over {1,5,10}, %.1fs", worst_z, runtime)};
}

// C3: path-weight exponent of the benchmark.
std::pair<bool, std::string> criterion_om_consistency() {
    const LangevinSpec spec = benchmark_spec();
    const TimeGrid grid(1.0, 1000);
    const NoisePath zero{grid, Eigen::VectorXd::Zero(1000)};
    const Trajectory det = integrate_langevin(spec, {1.0, 0.0}, zero, grid);
    const double s_det = om_action(det, spec).s;

    Trajectory constant{grid, std::vector<double>(1001, 1.0), std::vector<double>(1001, 0.0)};
    const double s_const = om_action(constant, spec).s;

    // quadratic scaling fit around the minimizer
    std::vector<double> lx, ly;
    for (double eps : {0.01, 0.03, 0.1, 0.3, 1.0}) {
        Trajectory pert = det;
        for (std::size_t k = 1; k < grid.n_steps(); ++k)
            pert.x[k] += eps * std::sin(M_PI * grid.time(k));
        lx.push_back(std::log(eps));
        ly.push_back(std::log(om_action(pert, spec).s - s_det));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
    mx /= static_cast<double>(lx.size());
    my /= static_cast<double>(ly.size());
    double num = 0, den = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) * (lx[i] - mx);
    }
    const double slope = num / den;

    const bool pass = s_det < 1e-2 && std::abs(s_const - 0.25) < 0.05 * 0.25 &&
                      std::abs(slope - 2.0) < 0.05;
    return {pass, fmt("s_det=%.2e, s_const=%.5f, fit=%.4f", s_det, s_const, slope)};
}

// C4: path-weight ratios against the endpoint-density exponents.
std::pair<bool, std::string> criterion_measure_equivalence() {
    const LangevinSpec spec = benchmark_spec();
    const TimeGrid grid(1.0, 1000);
    const oracle::GaussianPropagator prop(1.0, 1.0, 0.5, 2.0, grid);
    rng::CounterRng gen(404, rng::Stream::scratch, 0);
    double worst = 0.0;
    for (int pair_index = 0; pair_index < 20; ++pair_index) {
        double u[2][4];
        for (auto& end : u)
            for (double& c : end) c = 1.2 * (2.0 * gen.next_uniform() - 1.0);
        Trajectory a{grid, prop.minimizing_path(u[0][0], u[0][1], u[0][2], u[0][3]),
                     std::vector<double>(1001, 0.0)};
        Trajectory b{grid, prop.minimizing_path(u[1][0], u[1][1], u[1][2], u[1][3]),
                     std::vector<double>(1001, 0.0)};
        const double impl = relative_path_weight(a, b, spec);
        const double ref = std::exp(-prop.min_action(u[0][0], u[0][1], u[0][2], u[0][3]) +
                                    prop.min_action(u[1][0], u[1][1], u[1][2], u[1][3]));
        worst = std::max(worst, std::abs(impl / ref - 1.0));
    }
    return {worst < 0.01, fmt("worst ratio error = %.2e over 20 endpoint pairs", worst)};
}

// C5: two-stage phase-space propagation equals the direct run.
std::pair<bool, std::string> criterion_composition() {
    const LangevinSpec spec = benchmark_spec();
    const StateSpec state = StateSpec::coherent(1.5, 0.5, 1.0, 1.0);
    const std::size_t n = 100000;
    const auto initial = sample_initial_state(state, n, 3001);
    const double w0 = initial.weight_sum();

    const auto direct = propagate_wigner(initial, spec, 2.0, 200, 3002);
    const auto stage1 = propagate_wigner(initial, spec, 1.0, 100, 3003);
    const auto stage2 = propagate_wigner(stage1, spec, 1.0, 100, 3004);
    if (direct.weight_sum() != w0 || stage2.weight_sum() != w0)
        return {false, "weight sum changed"};

    const PhaseMoments a = direct.moments();
    const PhaseMoments b = stage2.moments();
    const double nn = static_cast<double>(n);
    const double se_mx = std::sqrt((a.var_x + b.var_x) / nn);
    const double se_mp = std::sqrt((a.var_p + b.var_p) / nn);
    const double se_vx = std::sqrt(2.0 / nn) * std::max(a.var_x, b.var_x) * M_SQRT2;
    const double se_vp = std::sqrt(2.0 / nn) * std::max(a.var_p, b.var_p) * M_SQRT2;
    const double se_cv = std::sqrt(2.0 * (a.var_x * a.var_p + a.cov_xp * a.cov_xp) / nn);
    const double zs[5] = {std::abs(a.mean_x - b.mean_x) / se_mx,
                          std::abs(a.mean_p - b.mean_p) / se_mp,
                          std::abs(a.var_x - b.var_x) / se_vx,
                          std::abs(a.var_p - b.var_p) / se_vp,
                          std::abs(a.cov_xp - b.cov_xp) / se_cv};
    double worst = 0.0;
    for (double z : zs) worst = std::max(worst, z);
    return {worst < 3.0, fmt("worst moment |z| = %.2f, weights conserved", worst)};
}

// C6: negativity of the signed state decays away under the open dynamics.
std::pair<bool, std::string> criterion_fock_decoherence() {
    const StateSpec fock = StateSpec::fock1(1.0, 1.0);
    const double analytic = 2.0 * std::exp(-0.5) - 1.0;

    const auto big = sample_initial_state(fock, 1000000, 6001);
    const WignerGrid g0 = estimate_grid(big, {-4.2, 4.2, -4.2, 4.2}, 70, 70);
    const double neg0 = negativity(g0);
    const double rel0 = std::abs(neg0 - analytic) / analytic;

    // tau = 5 / gamma
    const LangevinSpec spec = benchmark_spec();
    const std::size_t n_prop = 300000;
    WignerEnsemble small;
    small.points.assign(big.points.begin(), big.points.begin() + n_prop);
    double wsum = 0.0;
    for (auto& pt : small.points) wsum += pt.weight;
    for (auto& pt : small.points) pt.weight /= wsum;
    const auto late = propagate_wigner(small, spec, 10.0, 500, 6002);
    const WignerGrid g1 = estimate_grid(late, {-6.4, 6.4, -6.4, 6.4}, 32, 32);
    double z_min = 0.0;
    for (Eigen::Index i = 0; i < g1.nx; ++i)
        for (Eigen::Index j = 0; j < g1.np; ++j)
            if (g1.values(i, j) < 0.0 && g1.stderr_(i, j) > 0.0)
                z_min = std::min(z_min, g1.values(i, j) / g1.stderr_(i, j));

    // grid-solver route on the same window: negativity decays monotonically
    const WignerGrid w0 = grid_from_state(fock, {-6.4, 6.4, -6.4, 6.4}, 200, 200);
    std::vector<double> negs{negativity(w0)};
    oracle::kramers_grid_solve(1.0, Potential::harmonic(1.0), 0.5, 2.0, w0,
                               {1.0, 2.5, 5.0, 10.0},
                               [&](double, const WignerGrid& w) {
                                   negs.push_back(negativity(w));
                               });
    bool monotone = true;
    for (std::size_t i = 1; i < negs.size(); ++i)
        monotone = monotone && negs[i] <= negs[i - 1] + 1e-12;

    const bool pass = rel0 < 0.05 && z_min > -3.0 && monotone && negs.back() < 1e-3;
    return {pass, fmt("neg(0)=%.4f (err %.1f%%), late z_min=%.2f, ", neg0, 100.0 * rel0,
                      z_min) +
                      fmt("pde negativity %.3f -> %.2e monotone", negs.front(), negs.back())};
}

// C7: influence-kernel construction round trip and exponent structure.
std::pair<bool, std::string> criterion_inverse_round_trip() {
    LangevinSpec spec = benchmark_spec();
    spec.mode = CouplingMode::langevin;
    const InfluenceFunctionalSpec ifs = build_influence_functional(spec);
    const LangevinSpec back = langevin_from_influence(ifs, spec.mass, spec.potential);
    const bool exact = back.noise.kind() == spec.noise.kind() &&
                       back.noise.amplitude() == spec.noise.amplitude() &&
                       back.dissipation.kind() == spec.dissipation.kind() &&
                       back.dissipation.amplitude() == spec.dissipation.amplitude() &&
                       back.f.kind() == spec.f.kind() && back.g.kind() == spec.g.kind() &&
                       back.mass == spec.mass && back.hbar == spec.hbar;

    const TimeGrid grid(1.0, 64);
    bool structure = true;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        rng::CounterRng gen(7007, rng::Stream::scratch, i);
        PathPair pair{grid, Eigen::VectorXd(64), Eigen::VectorXd(64)};
        for (Eigen::Index k = 0; k < 64; ++k) {
            pair.x[k] = 2.0 * gen.next_gaussian();
            pair.y[k] = 0.5 * gen.next_gaussian();
        }
        const auto e1 = evaluate_influence_exponent(ifs, pair);
        PathPair scaled = pair;
        scaled.y *= 2.0;
        const auto e2 = evaluate_influence_exponent(ifs, scaled);
        structure = structure && std::abs(e2.real() - 4.0 * e1.real()) <=
                                     1e-12 * std::max(1.0, std::abs(e1.real()) * 4.0);
        structure = structure && std::abs(e2.imag() - 2.0 * e1.imag()) <=
                                     1e-12 * std::max(1.0, std::abs(e1.imag()) * 2.0);
        PathPair diag = pair;
        diag.y.setZero();
        structure = structure && decoherence_factor(ifs, diag) == 1.0;
    }
    return {exact && structure,
            std::string(exact ? "kernels restored exactly" : "round trip mismatch") +
                ", scaling/identity on 1000 paths"};
}

// C8: colored-noise covariance and normalization identity.
std::pair<bool, std::string> criterion_noise_fidelity() {
    const TimeGrid grid(2.0, 64);
    const NoiseSampler sampler(KernelSpec::exponential(1.0, 0.5), grid, 8001);
    const std::size_t draws = 10000;
    const auto n = static_cast<Eigen::Index>(grid.n_steps());
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    double quad = 0.0;
    const Eigen::MatrixXd& l = sampler.factor();
    for (std::size_t i = 0; i < draws; ++i) {
        const NoisePath path = sampler.sample(i);
        cov.noalias() += path.values * path.values.transpose();
        const Eigen::VectorXd y = l.triangularView<Eigen::Lower>().solve(path.values);
        quad += 0.5 * y.squaredNorm();
    }
    cov /= static_cast<double>(draws);
    quad /= static_cast<double>(draws);

    const Eigen::MatrixXd& k = sampler.covariance();
    double worst = 0.0;
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) {
            const double se = std::sqrt(
                (k(a, a) * k(b, b) + k(a, b) * k(a, b)) / static_cast<double>(draws));
            worst = std::max(worst, std::abs(cov(a, b) - k(a, b)) / se);
        }
    const double half_n = static_cast<double>(n) / 2.0;
    const double z_quad = std::abs(quad - half_n) / std::sqrt(half_n /
                                                              static_cast<double>(draws));
    return {worst < 5.0 && z_quad < 5.0,
            fmt("max cov |z| = %.2f, quad form z = %.2f", worst, z_quad)};
}

// C9: the three reference solvers agree.
std::pair<bool, std::string> criterion_oracle_triangle() {
    const auto checks = oracle_consistency_checks(1.0, 1.0, 0.5, 2.0);
    bool all = true;
    std::string worst_name;
    for (const auto& c : checks)
        if (!c.pass) {
            all = false;
            worst_name += " " + c.name;
        }
    return {all, all ? std::to_string(checks.size()) + " checks consistent"
                     : "failed:" + worst_name};
}

// C10: command-line runs are byte-stable across reruns and thread counts.
std::pair<bool, std::string> criterion_determinism(const std::string& cli) {
    if (cli.empty()) return {false, "no --cli path provided"};
    const fs::path work = fs::temp_directory_path() / "qisd_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);
    const fs::path cfg_path = work / "run.cfg";
    {
        std::ofstream cfg(cfg_path);
        cfg << "seed = 99\nmass = 1.0\npotential.kind = harmonic\npotential.omega = 1.0\n"
               "cl.gamma = 0.5\ncl.kbt = 2.0\ngrid.t_end = 1.0\ngrid.n_steps = 1000\n"
               "ensemble.n = 2000\noutput.stride = 10\n"
               "inverse.y0.count = 5\ninverse.tau.count = 5\n";
    }
    auto run_cli = [&](const std::string& sub, const std::string& out, int threads) {
        std::ostringstream cmd;
        cmd << cli << " --config " << cfg_path.string() << " --out " << (work / out).string()
            << " --threads " << threads << " " << sub << " > /dev/null 2>&1";
        return std::system(cmd.str().c_str());
    };
    auto file_bytes = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    if (run_cli("simulate", "a", 1) != 0) return {false, "simulate run failed"};
    if (run_cli("simulate", "b", 1) != 0) return {false, "simulate rerun failed"};
    if (run_cli("simulate", "c", 4) != 0) return {false, "threaded simulate failed"};
    if (run_cli("inverse", "ia", 1) != 0) return {false, "inverse run failed"};
    if (run_cli("inverse", "ib", 2) != 0) return {false, "inverse rerun failed"};
    const std::string sa = file_bytes(work / "a" / "stats.csv");
    const bool stats_ok = !sa.empty() && sa == file_bytes(work / "b" / "stats.csv") &&
                          sa == file_bytes(work / "c" / "stats.csv");
    const std::string da = file_bytes(work / "ia" / "decoherence.csv");
    const bool inv_ok = !da.empty() && da == file_bytes(work / "ib" / "decoherence.csv");
    return {stats_ok && inv_ok, stats_ok && inv_ok ? "byte-identical across reruns and threads"
                                                   : "outputs differ"};
}

} // namespace

int main(int argc, char** argv) {
    std::string cli;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--cli") cli = argv[i + 1];

    run(1, "thermal equilibrium", criterion_equilibrium);
    run(2, "moment tracking", criterion_moment_tracking);
    run(3, "path-weight consistency", criterion_om_consistency);
    run(4, "measure equivalence", criterion_measure_equivalence);
    run(5, "composition law", criterion_composition);
    run(6, "signed-state decoherence", criterion_fock_decoherence);
    run(7, "inverse round trip", criterion_inverse_round_trip);
    run(8, "noise fidelity", criterion_noise_fidelity);
    run(9, "oracle triangle", criterion_oracle_triangle);
    run(10, "output determinism", [&] { return criterion_determinism(cli); });

    if (g_failures == 0) {
        std::printf("all criteria passed\n");
        return 0;
    }
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
}
