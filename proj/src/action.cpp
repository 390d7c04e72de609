#include "qisd/action.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>

#include "qisd/noise.hpp"

namespace qisd {

namespace {

// Residual m xddot + V'(x) + drive at the interior nodes 1..n-1, divided by
// the mode's coupling factor, plus the measure correction.
struct ResidualData {
    Eigen::VectorXd r;            // scaled residual per interior node
    double log_measure = 0.0;     // -sum log|coupling|
};

ResidualData interior_residuals(const Trajectory& traj, const LangevinSpec& spec) {
    const std::size_t n = traj.grid.n_steps();
    if (n < 3)
        throw InvalidParameterError("om_action: need at least 3 steps for interior residuals");
    const double dt = traj.grid.dt();
    const double m = spec.mass;
    const bool qisd = spec.mode == CouplingMode::qisd;
    const bool local_drive = spec.dissipation.kind() == KernelSpec::Kind::delta_derivative;
    const CouplingFunction& drive_fn = qisd ? spec.f : spec.g;

    std::vector<double> hist(n + 1);
    for (std::size_t j = 0; j <= n; ++j) hist[j] = drive_fn.value(traj.x[j]);

    ResidualData out;
    out.r.resize(static_cast<Eigen::Index>(n - 1));
    for (std::size_t k = 1; k < n; ++k) {
        const double xdd = (traj.x[k + 1] - 2.0 * traj.x[k] + traj.x[k - 1]) / (dt * dt);
        double mem;
        if (local_drive) {
            // Centered stencil keeps the drag limit; matches the kernel
            // discretization convention.
            mem = spec.dissipation.amplitude() * (hist[k + 1] - hist[k - 1]) / (2.0 * dt);
        } else {
            // Causal trapezoid over the realized past, as in the integrator.
            double acc = 0.5 * spec.dissipation.value(traj.grid.time(k), 0.0) * hist[0];
            for (std::size_t j = 1; j < k; ++j)
                acc += spec.dissipation.value(traj.grid.time(k), traj.grid.time(j)) * hist[j];
            acc += 0.5 * spec.dissipation.value(traj.grid.time(k), traj.grid.time(k)) * hist[k];
            mem = acc * dt;
        }
        const double drive = qisd ? spec.f.deriv(traj.x[k]) * mem : mem;
        const double coup = qisd ? spec.f.deriv(traj.x[k]) : spec.f.value(traj.x[k]);
        if (std::abs(coup) < 1e-12)
            throw SingularJacobianError("om_action: coupling factor below threshold at time index " +
                                            std::to_string(k),
                                        k);
        const double resid = m * xdd + spec.potential.deriv(traj.x[k]) + drive;
        out.r[static_cast<Eigen::Index>(k - 1)] = resid / coup;
        out.log_measure -= std::log(std::abs(coup));
    }
    return out;
}

} // namespace

ActionValue om_action(const Trajectory& traj, const LangevinSpec& spec) {
    spec.validate();
    const std::size_t n = traj.grid.n_steps();
    if (traj.x.size() != n + 1 || traj.v.size() != n + 1)
        throw GridMismatchError("om_action: trajectory arrays must hold n_steps + 1 points");
    const double dt = traj.grid.dt();

    ResidualData data = interior_residuals(traj, spec);
    ActionValue val;
    val.log_measure_correction = data.log_measure;

    if (spec.noise.kind() == KernelSpec::Kind::delta) {
        const double amp = spec.noise.amplitude();
        if (amp <= 0.0)
            throw InvalidParameterError("om_action: zero noise kernel gives no path measure");
        val.s = data.r.squaredNorm() * dt / (2.0 * amp);
    } else {
        std::vector<double> nodes;
        nodes.reserve(n - 1);
        for (std::size_t k = 1; k < n; ++k) nodes.push_back(traj.grid.time(k));
        const KernelMatrix m = discretize_kernel_on_nodes(spec.noise, nodes, dt);
        const Eigen::MatrixXd l = floored_psd_factor(m, "om_action");
        // s = 1/2 r^T M^{-1} r via the triangular factor.
        const Eigen::VectorXd y =
            l.triangularView<Eigen::Lower>().solve(data.r);
        val.s = 0.5 * y.squaredNorm();
    }
    val.total_log_weight = -val.s + val.log_measure_correction;
    return val;
}

double relative_path_weight(const Trajectory& a, const Trajectory& b, const LangevinSpec& spec) {
    require_same_grid(a.grid, b.grid, "relative_path_weight");
    const ActionValue va = om_action(a, spec);
    const ActionValue vb = om_action(b, spec);
    return std::exp(va.total_log_weight - vb.total_log_weight);
}

} // namespace qisd
