#include "qisd/dynamics.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <string>
#include <thread>

#include "qisd/rng.hpp"

namespace qisd {

namespace {

constexpr std::size_t kEnsembleBlock = 256;

void check_finite(double x, double v, std::size_t k) {
    if (!std::isfinite(x) || !std::isfinite(v))
        throw DivergenceError("integrate_langevin: non-finite state at time index " +
                                  std::to_string(k),
                              k);
}

// Local drag coefficient and noise coupling for the white-noise fast path.
struct LocalWhiteParams {
    double drag = 0.0;      // gamma_d: m vdot = -V' - gamma_d v + c eta
    double coupling = 1.0;  // c
    double noise_amp = 0.0; // A with <eta eta> = A delta
};

LocalWhiteParams local_white_params(const LangevinSpec& spec) {
    LocalWhiteParams p;
    const double gamma = spec.dissipation.amplitude();
    p.noise_amp = spec.noise.amplitude();
    if (spec.mode == CouplingMode::qisd) {
        const double c = spec.f.deriv(0.0); // constant by fast-path precondition
        p.coupling = c;
        p.drag = gamma * c * c;
    } else {
        p.coupling = spec.f.value(0.0);
        p.drag = gamma * spec.g.deriv(0.0);
    }
    return p;
}

Trajectory integrate_white_local(const LangevinSpec& spec, const InitialCondition& init,
                                 const NoisePath& noise, const TimeGrid& grid,
                                 const IntegratorOptions& options) {
    const std::size_t n = grid.n_steps();
    const double dt = grid.dt();
    const double m = spec.mass;
    const LocalWhiteParams p = local_white_params(spec);

    if (spec.mode == CouplingMode::qisd &&
        std::abs(p.coupling) < options.singular_jacobian_threshold)
        throw SingularJacobianError("integrate_langevin: |f'(x)| below threshold at time index 0",
                                    0);

    // Map the supplied white path (per-step variance A/dt) back to the unit
    // normals consumed by the exact Ornstein-Uhlenbeck sub-step.
    const double eta_to_xi = p.noise_amp > 0.0 ? std::sqrt(dt / p.noise_amp) : 0.0;
    const double c1 = std::exp(-p.drag * dt / m);
    double sigma_v;
    if (p.drag > 0.0) {
        const double var_stat = p.coupling * p.coupling * p.noise_amp / (2.0 * p.drag * m);
        sigma_v = std::sqrt(var_stat * (1.0 - c1 * c1));
    } else {
        sigma_v = std::abs(p.coupling) * std::sqrt(p.noise_amp * dt) / m;
    }

    Trajectory traj{grid, std::vector<double>(n + 1), std::vector<double>(n + 1)};
    double x = init.x0, v = init.v0;
    traj.x[0] = x;
    traj.v[0] = v;
    for (std::size_t k = 0; k < n; ++k) {
        const double xi = noise.values[static_cast<Eigen::Index>(k)] * eta_to_xi;
        v += 0.5 * dt * (-spec.potential.deriv(x)) / m;
        x += 0.5 * dt * v;
        v = c1 * v + sigma_v * xi;
        x += 0.5 * dt * v;
        v += 0.5 * dt * (-spec.potential.deriv(x)) / m;
        check_finite(x, v, k + 1);
        traj.x[k + 1] = x;
        traj.v[k + 1] = v;
    }
    return traj;
}

// Heun integration driven by a pre-sampled noise path held constant over each
// step. The memory drive integrates the realized past by trapezoid; the
// delta-derivative kernel degenerates to a causal backward difference.
Trajectory integrate_memory(const LangevinSpec& spec, const InitialCondition& init,
                            const NoisePath& noise, const TimeGrid& grid,
                            const IntegratorOptions& options) {
    const std::size_t n = grid.n_steps();
    const double dt = grid.dt();
    const double m = spec.mass;
    const bool qisd = spec.mode == CouplingMode::qisd;
    const bool local_drive = spec.dissipation.kind() == KernelSpec::Kind::delta_derivative;
    const CouplingFunction& drive_fn = qisd ? spec.f : spec.g;

    Trajectory traj{grid, std::vector<double>(n + 1), std::vector<double>(n + 1)};
    std::vector<double> hist(n + 1); // f(x_j) (qisd) or g(x_j) (langevin)
    double x = init.x0, v = init.v0;
    traj.x[0] = x;
    traj.v[0] = v;
    hist[0] = drive_fn.value(x);

    // Trapezoid over history nodes 0..k at observation time t; `tip` stands in
    // for the value at the final node (so predicted states can be used).
    auto memory_integral = [&](std::size_t k, double t, double tip) -> double {
        if (k == 0) return 0.0;
        if (local_drive) return spec.dissipation.amplitude() * (tip - hist[k - 1]) / dt;
        double acc = 0.5 * spec.dissipation.value(t, 0.0) * hist[0];
        for (std::size_t j = 1; j < k; ++j)
            acc += spec.dissipation.value(t, grid.time(j)) * hist[j];
        acc += 0.5 * spec.dissipation.value(t, t) * tip;
        return acc * dt;
    };

    auto accel = [&](double xs, std::size_t k, double t, double tip, double coup,
                     double eta) -> double {
        const double mem = memory_integral(k, t, tip);
        const double drive = qisd ? spec.f.deriv(xs) * mem : mem;
        return (-spec.potential.deriv(xs) - drive + coup * eta) / m;
    };

    for (std::size_t k = 0; k < n; ++k) {
        const double eta = noise.values[static_cast<Eigen::Index>(k)];
        const double coup = qisd ? spec.f.deriv(x) : spec.f.value(x);
        if (qisd && std::abs(coup) < options.singular_jacobian_threshold)
            throw SingularJacobianError(
                "integrate_langevin: |f'(x)| below threshold at time index " + std::to_string(k),
                k);

        const double a0 = accel(x, k, grid.time(k), hist[k], coup, eta);
        const double xp = x + dt * v;
        const double vp = v + dt * a0;

        double coup_c = coup;
        if (options.coupling_eval == CouplingEval::midpoint) {
            const double xm = 0.5 * (x + xp);
            coup_c = qisd ? spec.f.deriv(xm) : spec.f.value(xm);
        }
        const double a1 = accel(xp, k + 1, grid.time(k + 1), drive_fn.value(xp), coup_c, eta);

        x += 0.5 * dt * (v + vp);
        v += 0.5 * dt * (a0 + a1);
        check_finite(x, v, k + 1);
        traj.x[k + 1] = x;
        traj.v[k + 1] = v;
        hist[k + 1] = drive_fn.value(x);
    }
    return traj;
}

template <typename BlockFn>
void run_blocks(std::size_t n_items, int threads, BlockFn&& fn) {
    const std::size_t n_blocks = (n_items + kEnsembleBlock - 1) / kEnsembleBlock;
    const int n_workers = std::max(1, std::min<int>(threads, static_cast<int>(n_blocks)));
    if (n_workers == 1) {
        for (std::size_t b = 0; b < n_blocks; ++b)
            fn(b, b * kEnsembleBlock, std::min(n_items, (b + 1) * kEnsembleBlock));
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t b = next.fetch_add(1);
                if (b >= n_blocks) return;
                try {
                    fn(b, b * kEnsembleBlock, std::min(n_items, (b + 1) * kEnsembleBlock));
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct MomentAccumulator {
    std::vector<double> sx, sv, sxx, svv, sxv, sx4, sv4;
    std::size_t count = 0;

    explicit MomentAccumulator(std::size_t nodes)
        : sx(nodes, 0.0), sv(nodes, 0.0), sxx(nodes, 0.0), svv(nodes, 0.0), sxv(nodes, 0.0),
          sx4(nodes, 0.0), sv4(nodes, 0.0) {}

    void add(const Trajectory& traj, const std::vector<std::size_t>& nodes) {
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const double x = traj.x[nodes[i]];
            const double v = traj.v[nodes[i]];
            sx[i] += x;
            sv[i] += v;
            sxx[i] += x * x;
            svv[i] += v * v;
            sxv[i] += x * v;
            sx4[i] += x * x * x * x;
            sv4[i] += v * v * v * v;
        }
        ++count;
    }

    void merge(const MomentAccumulator& other) {
        for (std::size_t i = 0; i < sx.size(); ++i) {
            sx[i] += other.sx[i];
            sv[i] += other.sv[i];
            sxx[i] += other.sxx[i];
            svv[i] += other.svv[i];
            sxv[i] += other.sxv[i];
            sx4[i] += other.sx4[i];
            sv4[i] += other.sv4[i];
        }
        count += other.count;
    }
};

// Per-block ensemble driver with deterministic block-ordered merging of both
// results and failure records.
template <typename StateT, typename MakeState, typename PerTrajectory>
void blocked_ensemble(const LangevinSpec& spec, const InitDistribution& init,
                      const TimeGrid& grid, std::size_t n_traj, std::uint64_t seed,
                      const EnsembleOptions& options, MakeState&& make_state,
                      PerTrajectory&& per_traj, std::vector<StateT>& block_states,
                      std::vector<std::vector<std::size_t>>& block_failures) {
    spec.validate();
    if (n_traj < 1) throw InvalidParameterError("ensemble: n_traj must be >= 1");
    const NoiseSampler sampler(spec.noise, grid, seed);
    const std::size_t n_blocks = (n_traj + kEnsembleBlock - 1) / kEnsembleBlock;
    block_states.clear();
    block_states.reserve(n_blocks);
    for (std::size_t b = 0; b < n_blocks; ++b) block_states.push_back(make_state());
    block_failures.assign(n_blocks, {});
    run_blocks(n_traj, options.threads, [&](std::size_t b, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const InitialCondition ic = init.draw(seed, i);
            const NoisePath path = sampler.sample(i);
            try {
                const Trajectory traj = integrate_langevin(spec, ic, path, grid,
                                                           options.integrator);
                per_traj(block_states[b], i, traj);
            } catch (const Error& e) {
                if (options.policy == FailurePolicy::abort)
                    throw Error(e.category(),
                                "trajectory " + std::to_string(i) + ": " + e.what());
                block_failures[b].push_back(i);
            }
        }
    });
}

} // namespace

InitDistribution InitDistribution::point(double x0, double v0) {
    InitDistribution d;
    d.kind = Kind::point;
    d.mean_x = x0;
    d.mean_v = v0;
    return d;
}

InitDistribution InitDistribution::gaussian(double mean_x, double mean_v, double var_x,
                                            double var_v, double cov_xv) {
    if (var_x < 0.0 || var_v < 0.0 || cov_xv * cov_xv > var_x * var_v)
        throw InvalidParameterError("InitDistribution: covariance must be PSD");
    InitDistribution d;
    d.kind = Kind::gaussian;
    d.mean_x = mean_x;
    d.mean_v = mean_v;
    d.var_x = var_x;
    d.var_v = var_v;
    d.cov_xv = cov_xv;
    return d;
}

InitialCondition InitDistribution::draw(std::uint64_t seed, std::uint64_t index) const {
    if (kind == Kind::point) return {mean_x, mean_v};
    rng::CounterRng gen(seed, rng::Stream::init, index);
    const double z1 = gen.next_gaussian();
    const double z2 = gen.next_gaussian();
    // 2x2 Cholesky of [[var_x, cov_xv], [cov_xv, var_v]].
    const double lxx = std::sqrt(var_x);
    const double lvx = lxx > 0.0 ? cov_xv / lxx : 0.0;
    const double lvv = std::sqrt(std::max(0.0, var_v - lvx * lvx));
    return {mean_x + lxx * z1, mean_v + lvx * z1 + lvv * z2};
}

Trajectory integrate_langevin(const LangevinSpec& spec, const InitialCondition& init,
                              const NoisePath& noise, const TimeGrid& grid,
                              const IntegratorOptions& options) {
    spec.validate();
    require_same_grid(noise.grid, grid, "integrate_langevin");
    if (noise.values.size() != static_cast<Eigen::Index>(grid.n_steps()))
        throw GridMismatchError("integrate_langevin: noise path length != n_steps");
    if (!std::isfinite(init.x0) || !std::isfinite(init.v0))
        throw InvalidParameterError("integrate_langevin: initial condition must be finite");
    if (spec.is_white_noise_local())
        return integrate_white_local(spec, init, noise, grid, options);
    return integrate_memory(spec, init, noise, grid, options);
}

std::vector<Trajectory> run_ensemble(const LangevinSpec& spec, const InitDistribution& init,
                                     const TimeGrid& grid, std::size_t n_traj,
                                     std::uint64_t seed, const EnsembleOptions& options) {
    std::vector<std::vector<Trajectory>> blocks;
    std::vector<std::vector<std::size_t>> failures;
    blocked_ensemble(
        spec, init, grid, n_traj, seed, options, [] { return std::vector<Trajectory>{}; },
        [](std::vector<Trajectory>& state, std::size_t, const Trajectory& traj) {
            state.push_back(traj);
        },
        blocks, failures);
    std::vector<Trajectory> all;
    all.reserve(n_traj);
    for (auto& b : blocks)
        for (auto& t : b) all.push_back(std::move(t));
    return all;
}

EnsembleStats ensemble_statistics(const LangevinSpec& spec, const InitDistribution& init,
                                  const TimeGrid& grid, std::size_t n_traj, std::uint64_t seed,
                                  const EnsembleOptions& options) {
    const std::size_t stride = std::max<std::size_t>(1, options.stride);
    std::vector<std::size_t> nodes;
    for (std::size_t k = 0; k <= grid.n_steps(); k += stride) nodes.push_back(k);
    if (nodes.back() != grid.n_steps()) nodes.push_back(grid.n_steps());

    std::vector<MomentAccumulator> blocks;
    std::vector<std::vector<std::size_t>> failures;
    blocked_ensemble(
        spec, init, grid, n_traj, seed, options,
        [&] { return MomentAccumulator(nodes.size()); },
        [&](MomentAccumulator& acc, std::size_t, const Trajectory& traj) {
            acc.add(traj, nodes);
        },
        blocks, failures);

    MomentAccumulator total(nodes.size());
    for (const auto& b : blocks) total.merge(b);

    EnsembleStats stats;
    stats.n_requested = n_traj;
    stats.n_completed = total.count;
    for (const auto& f : failures)
        stats.failed_indices.insert(stats.failed_indices.end(), f.begin(), f.end());
    const auto n = static_cast<double>(total.count);
    if (total.count == 0)
        throw InvalidParameterError("ensemble_statistics: every trajectory failed");
    stats.t.reserve(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double mx = total.sx[i] / n;
        const double mv = total.sv[i] / n;
        const double vx = total.sxx[i] / n - mx * mx;
        const double vv = total.svv[i] / n - mv * mv;
        const double cxv = total.sxv[i] / n - mx * mv;
        const double m4x = total.sx4[i] / n;
        const double m4v = total.sv4[i] / n;
        const double mxx = total.sxx[i] / n;
        const double mvv = total.svv[i] / n;
        stats.t.push_back(grid.time(nodes[i]));
        stats.mean_x.push_back(mx);
        stats.mean_v.push_back(mv);
        stats.var_x.push_back(vx);
        stats.var_v.push_back(vv);
        stats.cov_xv.push_back(cxv);
        stats.se_mean_x.push_back(std::sqrt(std::max(0.0, vx) / n));
        stats.se_mean_v.push_back(std::sqrt(std::max(0.0, vv) / n));
        // standard error of the second raw moment, a conservative stand-in
        // for the variance estimate's error
        stats.se_var_x.push_back(std::sqrt(std::max(0.0, m4x - mxx * mxx) / n));
        stats.se_var_v.push_back(std::sqrt(std::max(0.0, m4v - mvv * mvv) / n));
    }
    return stats;
}

void for_each_trajectory(const LangevinSpec& spec, const InitDistribution& init,
                         const TimeGrid& grid, std::size_t n_traj, std::uint64_t seed,
                         const EnsembleOptions& options,
                         const std::function<void(std::size_t, const Trajectory&)>& fn) {
    std::vector<int> blocks; // no per-block state needed
    std::vector<std::vector<std::size_t>> failures;
    blocked_ensemble(
        spec, init, grid, n_traj, seed, options, [] { return 0; },
        [&](int&, std::size_t i, const Trajectory& traj) { fn(i, traj); }, blocks, failures);
}

} // namespace qisd
