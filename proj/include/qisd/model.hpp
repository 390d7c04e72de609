#ifndef QISD_MODEL_HPP
#define QISD_MODEL_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "qisd/errors.hpp"
#include "qisd/time_grid.hpp"

namespace qisd {

// One-dimensional potential V(x). Tabulated potentials interpolate linearly
// and differentiate by centered differences on the table spacing.
class Potential {
  public:
    enum class Kind { free, harmonic, quartic, tabulated };

    static Potential free_particle();
    // V(x) = 1/2 * stiffness * x^2 with stiffness = m * omega^2.
    static Potential harmonic(double stiffness);
    // V(x) = 1/2 * a * x^2 + 1/4 * b * x^4.
    static Potential quartic(double a, double b);
    // Uniformly spaced samples of V; x strictly increasing.
    static Potential tabulated(std::vector<double> x, std::vector<double> v);

    Kind kind() const { return kind_; }
    double value(double x) const;
    double deriv(double x) const;
    double param_a() const { return a_; }
    double param_b() const { return b_; }

  private:
    Potential(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}
    Kind kind_;
    double a_ = 0.0;
    double b_ = 0.0;
    std::vector<double> tab_x_, tab_v_;
};

// Coupling function f(x) with derivative, used both as noise coupling and as
// dissipation coupling.
class CouplingFunction {
  public:
    enum class Kind { linear, constant, power, tabulated };

    static CouplingFunction linear();
    static CouplingFunction constant(double c);
    // f(x) = x^n, integer n >= 1.
    static CouplingFunction power(int n);
    static CouplingFunction tabulated(std::vector<double> x, std::vector<double> f);

    Kind kind() const { return kind_; }
    double value(double x) const;
    double deriv(double x) const;
    // True when f'(x) is the same for all x (enables the white-noise fast path).
    bool has_constant_deriv() const { return kind_ == Kind::linear || kind_ == Kind::constant; }
    double constant_value() const { return c_; }
    int power_exponent() const { return n_; }

  private:
    CouplingFunction(Kind kind, double c, int n) : kind_(kind), c_(c), n_(n) {}
    Kind kind_;
    double c_ = 0.0;
    int n_ = 1;
    std::vector<double> tab_x_, tab_f_;
};

using KernelMatrix = Eigen::MatrixXd;

// Stationary or tabulated two-time kernel k(t, t').
class KernelSpec {
  public:
    enum class Kind { delta, delta_derivative, exponential, tabulated };

    // k(t,t') = amplitude * delta(t - t'); discretizes to (amplitude/dt) * I.
    static KernelSpec delta(double amplitude);
    // k(t,s) = amplitude * d/dt delta(t - s); convolution returns amplitude * xdot.
    static KernelSpec delta_derivative(double amplitude);
    // k(t,t') = amplitude * exp(-|t-t'| / tc) / (2 tc); integrates to amplitude.
    static KernelSpec exponential(double amplitude, double correlation_time);
    // Values on a uniform time table covering the usage window; bilinear
    // interpolation in between.
    static KernelSpec tabulated(std::vector<double> times, Eigen::MatrixXd values,
                                bool symmetric = true);

    Kind kind() const { return kind_; }
    double amplitude() const { return amplitude_; }
    double correlation_time() const { return tc_; }
    bool symmetric() const { return symmetric_; }

    // Pointwise kernel value; not defined for delta kinds.
    double value(double t, double s) const;

    bool is_distributional() const {
        return kind_ == Kind::delta || kind_ == Kind::delta_derivative;
    }

    const std::vector<double>& table_times() const { return tab_t_; }
    const Eigen::MatrixXd& table_values() const { return tab_v_; }

  private:
    KernelSpec(Kind kind, double amplitude, double tc, bool symmetric)
        : kind_(kind), amplitude_(amplitude), tc_(tc), symmetric_(symmetric) {}
    Kind kind_;
    double amplitude_ = 0.0;
    double tc_ = 0.0;
    bool symmetric_ = true;
    std::vector<double> tab_t_;
    Eigen::MatrixXd tab_v_;
};

// Coupling convention selector for the equation of motion and the influence
// exponent: `qisd` drives the noise through f'(x) with drive f'(x) D f(x);
// `langevin` drives it through f(x) with drive g(x) D.
enum class CouplingMode { qisd, langevin };

// Full classical process specification.
struct LangevinSpec {
    double mass = 1.0;
    double hbar = 1.0;
    Potential potential = Potential::free_particle();
    CouplingFunction f = CouplingFunction::linear();  // noise coupling
    CouplingFunction g = CouplingFunction::linear();  // dissipation coupling
    KernelSpec dissipation = KernelSpec::delta_derivative(0.0);
    KernelSpec noise = KernelSpec::delta(0.0);
    CouplingMode mode = CouplingMode::qisd;

    void validate() const;
    // True when the white-noise fast path applies: local drag + white noise
    // with a position-independent coupling.
    bool is_white_noise_local() const;
};

// High-temperature Brownian-limit kernels: D = gamma * d/dt delta,
// N = 2 * gamma * kBT * delta; with f(x) = x the drive reduces to
// gamma * xdot and the noise is white with strength 2 gamma kBT.
std::pair<KernelSpec, KernelSpec> cl_kernels(double gamma, double kBT);

// Kernel values on the n_steps x n_steps node matrix of `grid`.
KernelMatrix discretize_kernel(const KernelSpec& k, const TimeGrid& grid);

// Same, but on an arbitrary strictly increasing uniform node list (spacing dt).
KernelMatrix discretize_kernel_on_nodes(const KernelSpec& k, const std::vector<double>& nodes,
                                        double dt);

// Discrete convolution sum_j M[i][j] x[j] dt of a discretized kernel row
// against nodal values.
Eigen::VectorXd apply_kernel(const KernelMatrix& m, const Eigen::VectorXd& x, double dt);

} // namespace qisd

#endif
