#ifndef QISD_ORACLE_HPP
#define QISD_ORACLE_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <vector>

#include "qisd/model.hpp"
#include "qisd/phase_grid.hpp"
#include "qisd/time_grid.hpp"

namespace qisd::oracle {

// Reference solvers for the linear (harmonic + local-drag, white-noise) case.
// These are kept independent of the trajectory integrators so the two routes
// can be compared against each other.

struct GaussianState {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero(); // (x, p)
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();  // (x, p)
};

// Integrates the first- and second-moment equations
//   d<x>/dt = <p>/m,  d<p>/dt = -m w^2 <x> - (gamma/m) <p>
// and the matching covariance equations with source 2 gamma kBT, with RK4 at
// step <= max_step.
GaussianState moment_ode_evolve(double mass, double omega, double gamma, double kBT,
                                const GaussianState& initial, double tau,
                                double max_step = 1e-4);

// Exact conditional endpoint density parameters extracted from the discretized
// path-weight quadratic form by block elimination of the interior nodes.
class GaussianPropagator {
  public:
    GaussianPropagator(double mass, double omega, double gamma, double kBT,
                       const TimeGrid& grid);

    // (x, p) mean map: end mean = mean_map() * (x0, p0).
    Eigen::Matrix2d mean_map() const { return mean_map_; }
    // Conditional (x, p) covariance of the endpoint, independent of the start.
    Eigen::Matrix2d covariance() const { return cov_; }

    // Minimized discrete path weight exponent for pinned start/end state.
    double min_action(double x0, double v0, double xt, double vt) const;
    // The minimizing nodal path (n_steps + 1 values).
    std::vector<double> minimizing_path(double x0, double v0, double xt, double vt) const;

    const TimeGrid& grid() const { return grid_; }

  private:
    Eigen::Vector4d boundary_nodes(double x0, double v0, double xt, double vt) const;

    TimeGrid grid_;
    double mass_;
    Eigen::Matrix4d quad_form_;           // in (x0, v0, xt, vt)
    Eigen::Matrix4d boundary_map_;        // (x_0, x_1, x_{n-1}, x_n) from (x0, v0, xt, vt)
    Eigen::Matrix2d mean_map_, cov_;      // in (x, p)
    Eigen::MatrixXd interior_solve_;      // interior response to the 4 pinned nodes
    std::vector<std::size_t> pinned_;     // node indices {0, 1, n-1, n}
};

inline GaussianPropagator gaussian_path_propagator(double mass, double omega, double gamma,
                                                   double kBT, const TimeGrid& grid) {
    return GaussianPropagator(mass, omega, gamma, kBT, grid);
}

struct KramersOptions {
    double max_dt = 0.0;  // 0: choose the stability-limited step automatically
    double safety = 0.9;
    double leakage_warn = 0.01;
};

struct KramersResult {
    WignerGrid w;
    double leakage = 0.0;
    bool leakage_warning = false;
    std::size_t n_steps = 0;
    double dt = 0.0;
};

// Explicit upwind/centered finite-difference solution of
//   dW/dt = -(p/m) dW/dx + d/dp[(V'(x) + gamma p / m) W] + gamma kBT d2W/dp2
// on the window of `initial`, absorbing tails, stability-limited steps.
KramersResult kramers_grid_solve(double mass, const Potential& potential, double gamma,
                                 double kBT, const WignerGrid& initial, double tau,
                                 const KramersOptions& options = {});

// Same, invoking `on_checkpoint(t, state)` at each requested time (the times
// must be increasing and end at tau).
KramersResult kramers_grid_solve(double mass, const Potential& potential, double gamma,
                                 double kBT, const WignerGrid& initial,
                                 const std::vector<double>& checkpoints,
                                 const std::function<void(double, const WignerGrid&)>& on_checkpoint,
                                 const KramersOptions& options = {});

} // namespace qisd::oracle

#endif
