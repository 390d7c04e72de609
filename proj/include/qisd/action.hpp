#ifndef QISD_ACTION_HPP
#define QISD_ACTION_HPP

#include "qisd/dynamics.hpp"
#include "qisd/model.hpp"

namespace qisd {

// Path-weight exponent with the multiplicative-measure correction. Only
// path-dependent terms are kept; constant measure prefactors cancel in
// weight ratios.
struct ActionValue {
    double s = 0.0;                      // >= 0 for PSD noise kernels
    double log_measure_correction = 0.0; // -sum log|coupling(x_k)| over interior nodes
    double total_log_weight = 0.0;       // -s + log_measure_correction
};

// Stochastic path-weight exponent of a trajectory: the squared residual of
// the equation of motion, contracted with the inverse discretized noise
// kernel. Second derivatives use central differences; the two endpoint
// slices are excluded from the sums. Local white kernels take a closed-form
// fast path.
ActionValue om_action(const Trajectory& traj, const LangevinSpec& spec);

// exp(total_log_weight(a) - total_log_weight(b)); both paths must share the
// time grid.
double relative_path_weight(const Trajectory& a, const Trajectory& b, const LangevinSpec& spec);

} // namespace qisd

#endif
