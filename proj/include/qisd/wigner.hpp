#ifndef QISD_WIGNER_HPP
#define QISD_WIGNER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "qisd/dynamics.hpp"
#include "qisd/model.hpp"
#include "qisd/phase_grid.hpp"

namespace qisd {

// Phase-space quasi-distribution specification for initial states.
struct StateSpec {
    enum class Kind { gaussian, coherent, thermal, fock1 };
    Kind kind = Kind::gaussian;
    // gaussian
    double mean_x = 0.0, mean_p = 0.0;
    double var_x = 0.0, var_p = 0.0, cov_xp = 0.0;
    // oscillator states
    double alpha_re = 0.0, alpha_im = 0.0;
    double omega = 1.0, mass = 1.0, hbar = 1.0, kBT = 0.0;

    static StateSpec gaussian(double mean_x, double mean_p, double var_x, double var_p,
                              double cov_xp = 0.0);
    static StateSpec coherent(double alpha_re, double alpha_im, double omega, double mass,
                              double hbar = 1.0);
    static StateSpec thermal(double omega, double mass, double kBT, double hbar = 1.0);
    static StateSpec fock1(double omega, double mass, double hbar = 1.0);

    std::string name() const;
};

// Closed-form phase-space density of the state at (x, p).
double wigner_value(const StateSpec& state, double x, double p);

// Exact first/second moments of the state.
PhaseMoments state_moments(const StateSpec& state);

struct PhasePoint {
    double x = 0.0;
    double p = 0.0;
    double weight = 0.0; // signed; ensemble weights sum to 1
};

struct WignerEnsemble {
    std::vector<PhasePoint> points;
    double time = 0.0;
    double effective_sample_size = 0.0;

    double weight_sum() const {
        double s = 0.0;
        for (const auto& pt : points) s += pt.weight;
        return s;
    }
    PhaseMoments moments() const;
};

// Draws a weighted particle representation of the state. Nonnegative states
// sample i.i.d. with uniform weights; the signed fock1 state importance-samples
// a Gaussian envelope (1.5x the state's marginal variances) and carries signed
// weights renormalized to sum 1.
WignerEnsemble sample_initial_state(const StateSpec& state, std::size_t n, std::uint64_t seed);

// Pushes each point through the Langevin dynamics with an independent noise
// draw (index = point index); weights are untouched. tau == 0 returns the
// ensemble unchanged.
WignerEnsemble propagate_wigner(const WignerEnsemble& ens, const LangevinSpec& spec, double tau,
                                std::size_t n_steps, std::uint64_t seed, int threads = 1,
                                const IntegratorOptions& options = {});

// Signed-weight histogram normalized per bin area, with per-bin standard
// errors and the in-window weight fraction.
WignerGrid estimate_grid(const WignerEnsemble& ens, const PhaseWindow& window, Eigen::Index nx,
                         Eigen::Index np);

// Fills a grid with the closed-form density of a state (cell centers).
WignerGrid grid_from_state(const StateSpec& state, const PhaseWindow& window, Eigen::Index nx,
                           Eigen::Index np);

} // namespace qisd

#endif
