#ifndef QISD_INFLUENCE_HPP
#define QISD_INFLUENCE_HPP

#include <complex>

#include "qisd/model.hpp"
#include "qisd/time_grid.hpp"

namespace qisd {

// Forward/backward path pair in mean/difference coordinates: q = x + y/2,
// q' = x - y/2. Values live on the grid nodes (one per step).
struct PathPair {
    TimeGrid grid;
    Eigen::VectorXd x; // mean coordinate
    Eigen::VectorXd y; // difference (coherence) coordinate

    void validate() const {
        const auto n = static_cast<Eigen::Index>(grid.n_steps());
        if (x.size() != n || y.size() != n)
            throw GridMismatchError("PathPair: x and y must hold one value per grid node");
    }
};

// Exponent convention selector. `langevin` takes the coupling through f(x)
// with weight 1/(2 hbar^2) on the noise term and drive kernel g(x_t) D;
// `qisd` takes it through f'(x) with weight 1/(2 hbar) and drive kernel
// f'(x_t) f(x_{t'}) D.
struct InfluenceFunctionalSpec {
    CouplingFunction f = CouplingFunction::linear();
    CouplingFunction g = CouplingFunction::linear();
    KernelSpec dissipation = KernelSpec::delta_derivative(0.0);
    KernelSpec noise = KernelSpec::delta(0.0);
    double hbar = 1.0;
    CouplingMode mode = CouplingMode::langevin;
};

// Kernel-identity map from a stochastic process to its influence-functional
// specification; validates that the noise kernel is an admissible (symmetric
// PSD) quantum noise kernel.
InfluenceFunctionalSpec build_influence_functional(const LangevinSpec& spec);

// Inverse identification: reassemble the stochastic process from the kernels
// (the system part - mass and potential - is supplied by the caller).
LangevinSpec langevin_from_influence(const InfluenceFunctionalSpec& ifs, double mass,
                                     const Potential& potential);

// Influence exponent on a discretized path pair. The real part is a negative
// semi-definite quadratic form in y (decoherence); the imaginary part is the
// dissipation term, linear in y.
std::complex<double> evaluate_influence_exponent(const InfluenceFunctionalSpec& ifs,
                                                 const PathPair& pair);

// exp(real part) in (0, 1]; equals 1 iff y * coupling(x) vanishes on the grid.
double decoherence_factor(const InfluenceFunctionalSpec& ifs, const PathPair& pair);

} // namespace qisd

#endif
