#ifndef QISD_DYNAMICS_HPP
#define QISD_DYNAMICS_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "qisd/model.hpp"
#include "qisd/noise.hpp"
#include "qisd/time_grid.hpp"

namespace qisd {

// A sampled path with velocities; x and v carry n_steps + 1 points.
struct Trajectory {
    TimeGrid grid;
    std::vector<double> x;
    std::vector<double> v;
};

struct InitialCondition {
    double x0 = 0.0;
    double v0 = 0.0;
};

// Initial-condition distribution for ensembles; Gaussian in (x, v).
struct InitDistribution {
    enum class Kind { point, gaussian };
    Kind kind = Kind::point;
    double mean_x = 0.0;
    double mean_v = 0.0;
    double var_x = 0.0;
    double var_v = 0.0;
    double cov_xv = 0.0;

    static InitDistribution point(double x0, double v0);
    static InitDistribution gaussian(double mean_x, double mean_v, double var_x, double var_v,
                                     double cov_xv = 0.0);
    InitialCondition draw(std::uint64_t seed, std::uint64_t index) const;
};

// Where the multiplicative coupling factor is evaluated within a step.
enum class CouplingEval { begin, midpoint };

struct IntegratorOptions {
    CouplingEval coupling_eval = CouplingEval::begin;
    double singular_jacobian_threshold = 1e-12;
};

// Integrates m*xddot + V'(x) + drive = coupling * eta over the grid, where
// drive and coupling follow the spec's mode (see CouplingMode). Local white
// kernels use a BAOAB splitting; memory kernels pre-sample the noise path and
// integrate the driven ODE with Heun's method (quadratic in path length).
Trajectory integrate_langevin(const LangevinSpec& spec, const InitialCondition& init,
                              const NoisePath& noise, const TimeGrid& grid,
                              const IntegratorOptions& options = {});

enum class FailurePolicy { abort, skip };

struct EnsembleOptions {
    int threads = 1;
    FailurePolicy policy = FailurePolicy::abort;
    std::size_t stride = 1;  // thinning of the recorded statistics nodes
    IntegratorOptions integrator = {};
};

// Per-node ensemble moments with standard errors.
struct EnsembleStats {
    std::vector<double> t;
    std::vector<double> mean_x, mean_v;
    std::vector<double> var_x, var_v, cov_xv;
    std::vector<double> se_mean_x, se_mean_v;
    std::vector<double> se_var_x, se_var_v;
    std::size_t n_requested = 0;
    std::size_t n_completed = 0;
    std::vector<std::size_t> failed_indices;
};

// n_traj independent trajectories; trajectory i uses noise draw index i and
// an initial condition drawn with the same splittable seed scheme.
std::vector<Trajectory> run_ensemble(const LangevinSpec& spec, const InitDistribution& init,
                                     const TimeGrid& grid, std::size_t n_traj,
                                     std::uint64_t seed, const EnsembleOptions& options = {});

// Streaming ensemble moments; accumulation is blocked and merged in fixed
// order so results are byte-identical for any thread count.
EnsembleStats ensemble_statistics(const LangevinSpec& spec, const InitDistribution& init,
                                  const TimeGrid& grid, std::size_t n_traj, std::uint64_t seed,
                                  const EnsembleOptions& options = {});

// Runs fn(i, trajectory) for each ensemble member, parallelized over fixed
// blocks; fn must be safe to call concurrently for distinct i.
void for_each_trajectory(const LangevinSpec& spec, const InitDistribution& init,
                         const TimeGrid& grid, std::size_t n_traj, std::uint64_t seed,
                         const EnsembleOptions& options,
                         const std::function<void(std::size_t, const Trajectory&)>& fn);

} // namespace qisd

#endif
