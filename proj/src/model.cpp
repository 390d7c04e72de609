#include "qisd/model.hpp"

#include <algorithm>
#include <cmath>

namespace qisd {

namespace {

// Linear interpolation with clamped slope lookup for the derivative.
double interp1(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x < xs.front() || x > xs.back())
        throw OutOfRangeError("tabulated function evaluated outside its table");
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t hi = std::min<std::size_t>(xs.size() - 1, static_cast<std::size_t>(it - xs.begin()));
    if (hi == 0) hi = 1;
    const std::size_t lo = hi - 1;
    const double w = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return ys[lo] + w * (ys[hi] - ys[lo]);
}

double centered_deriv(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    const double h = xs[1] - xs[0];
    const double lo = xs.front(), hi = xs.back();
    if (x - h < lo) return (interp1(xs, ys, x + h) - interp1(xs, ys, x)) / h;
    if (x + h > hi) return (interp1(xs, ys, x) - interp1(xs, ys, x - h)) / h;
    return (interp1(xs, ys, x + h) - interp1(xs, ys, x - h)) / (2.0 * h);
}

void check_table(const std::vector<double>& x, std::size_t ny, const char* what) {
    if (x.size() < 2 || x.size() != ny)
        throw InvalidParameterError(std::string(what) + ": table needs >= 2 matching samples");
    for (std::size_t i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1]))
            throw InvalidParameterError(std::string(what) + ": table abscissae must increase");
}

} // namespace

Potential Potential::free_particle() { return Potential(Kind::free, 0.0, 0.0); }

Potential Potential::harmonic(double stiffness) {
    if (!(stiffness >= 0.0) || !std::isfinite(stiffness))
        throw InvalidParameterError("Potential::harmonic: stiffness must be >= 0");
    return Potential(Kind::harmonic, stiffness, 0.0);
}

Potential Potential::quartic(double a, double b) {
    if (!std::isfinite(a) || !std::isfinite(b))
        throw InvalidParameterError("Potential::quartic: parameters must be finite");
    return Potential(Kind::quartic, a, b);
}

Potential Potential::tabulated(std::vector<double> x, std::vector<double> v) {
    check_table(x, v.size(), "Potential::tabulated");
    Potential p(Kind::tabulated, 0.0, 0.0);
    p.tab_x_ = std::move(x);
    p.tab_v_ = std::move(v);
    return p;
}

double Potential::value(double x) const {
    switch (kind_) {
        case Kind::free: return 0.0;
        case Kind::harmonic: return 0.5 * a_ * x * x;
        case Kind::quartic: return 0.5 * a_ * x * x + 0.25 * b_ * x * x * x * x;
        case Kind::tabulated: return interp1(tab_x_, tab_v_, x);
    }
    return 0.0;
}

double Potential::deriv(double x) const {
    switch (kind_) {
        case Kind::free: return 0.0;
        case Kind::harmonic: return a_ * x;
        case Kind::quartic: return a_ * x + b_ * x * x * x;
        case Kind::tabulated: return centered_deriv(tab_x_, tab_v_, x);
    }
    return 0.0;
}

CouplingFunction CouplingFunction::linear() { return CouplingFunction(Kind::linear, 1.0, 1); }

CouplingFunction CouplingFunction::constant(double c) {
    if (!std::isfinite(c))
        throw InvalidParameterError("CouplingFunction::constant: value must be finite");
    return CouplingFunction(Kind::constant, c, 0);
}

CouplingFunction CouplingFunction::power(int n) {
    if (n < 1) throw InvalidParameterError("CouplingFunction::power: exponent must be >= 1");
    if (n == 1) return linear();
    return CouplingFunction(Kind::power, 1.0, n);
}

CouplingFunction CouplingFunction::tabulated(std::vector<double> x, std::vector<double> f) {
    check_table(x, f.size(), "CouplingFunction::tabulated");
    CouplingFunction c(Kind::tabulated, 0.0, 0);
    c.tab_x_ = std::move(x);
    c.tab_f_ = std::move(f);
    return c;
}

double CouplingFunction::value(double x) const {
    switch (kind_) {
        case Kind::linear: return x;
        case Kind::constant: return c_;
        case Kind::power: return std::pow(x, n_);
        case Kind::tabulated: return interp1(tab_x_, tab_f_, x);
    }
    return 0.0;
}

double CouplingFunction::deriv(double x) const {
    switch (kind_) {
        case Kind::linear: return 1.0;
        case Kind::constant: return 0.0;
        case Kind::power: return static_cast<double>(n_) * std::pow(x, n_ - 1);
        case Kind::tabulated: return centered_deriv(tab_x_, tab_f_, x);
    }
    return 0.0;
}

KernelSpec KernelSpec::delta(double amplitude) {
    if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
        throw InvalidParameterError("KernelSpec::delta: amplitude must be >= 0");
    return KernelSpec(Kind::delta, amplitude, 0.0, true);
}

KernelSpec KernelSpec::delta_derivative(double amplitude) {
    if (!std::isfinite(amplitude))
        throw InvalidParameterError("KernelSpec::delta_derivative: amplitude must be finite");
    return KernelSpec(Kind::delta_derivative, amplitude, 0.0, false);
}

KernelSpec KernelSpec::exponential(double amplitude, double correlation_time) {
    if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
        throw InvalidParameterError("KernelSpec::exponential: amplitude must be >= 0");
    if (!(correlation_time > 0.0) || !std::isfinite(correlation_time))
        throw InvalidParameterError("KernelSpec::exponential: correlation time must be > 0");
    return KernelSpec(Kind::exponential, amplitude, correlation_time, true);
}

KernelSpec KernelSpec::tabulated(std::vector<double> times, Eigen::MatrixXd values,
                                 bool symmetric) {
    check_table(times, static_cast<std::size_t>(values.rows()), "KernelSpec::tabulated");
    if (values.rows() != values.cols())
        throw InvalidParameterError("KernelSpec::tabulated: value matrix must be square");
    KernelSpec k(Kind::tabulated, 0.0, 0.0, symmetric);
    k.tab_t_ = std::move(times);
    k.tab_v_ = std::move(values);
    return k;
}

double KernelSpec::value(double t, double s) const {
    switch (kind_) {
        case Kind::exponential:
            return amplitude_ * std::exp(-std::abs(t - s) / tc_) / (2.0 * tc_);
        case Kind::tabulated: {
            const auto& ts = tab_t_;
            if (t < ts.front() || t > ts.back() || s < ts.front() || s > ts.back())
                throw OutOfRangeError("KernelSpec::tabulated: (t, s) outside the table window");
            const double h = ts[1] - ts[0];
            auto locate = [&](double u, std::size_t& lo, double& w) {
                lo = std::min(ts.size() - 2,
                              static_cast<std::size_t>(std::max(0.0, (u - ts.front()) / h)));
                w = (u - ts[lo]) / h;
            };
            std::size_t i, j;
            double wi, wj;
            locate(t, i, wi);
            locate(s, j, wj);
            return (1 - wi) * (1 - wj) * tab_v_(i, j) + wi * (1 - wj) * tab_v_(i + 1, j) +
                   (1 - wi) * wj * tab_v_(i, j + 1) + wi * wj * tab_v_(i + 1, j + 1);
        }
        case Kind::delta:
        case Kind::delta_derivative:
            throw InvalidParameterError("KernelSpec::value: distributional kernel has no "
                                        "pointwise values; discretize it instead");
    }
    return 0.0;
}

void LangevinSpec::validate() const {
    if (!(mass > 0.0) || !std::isfinite(mass))
        throw InvalidParameterError("LangevinSpec: mass must be > 0");
    if (!(hbar > 0.0) || !std::isfinite(hbar))
        throw InvalidParameterError("LangevinSpec: hbar must be > 0");
    if (noise.kind() == KernelSpec::Kind::delta_derivative)
        throw InvalidParameterError("LangevinSpec: noise kernel must be symmetric PSD; "
                                    "delta_derivative is not");
}

bool LangevinSpec::is_white_noise_local() const {
    const bool local_drive = dissipation.kind() == KernelSpec::Kind::delta_derivative;
    const bool white = noise.kind() == KernelSpec::Kind::delta;
    const bool const_coupling = (mode == CouplingMode::qisd)
                                    ? f.has_constant_deriv()
                                    : (f.kind() == CouplingFunction::Kind::constant);
    const bool const_drive = (mode == CouplingMode::qisd)
                                 ? f.has_constant_deriv()
                                 : g.has_constant_deriv();
    return local_drive && white && const_coupling && const_drive;
}

std::pair<KernelSpec, KernelSpec> cl_kernels(double gamma, double kBT) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
        throw InvalidParameterError("cl_kernels: gamma must be >= 0");
    if (!(kBT >= 0.0) || !std::isfinite(kBT))
        throw InvalidParameterError("cl_kernels: kBT must be >= 0");
    return {KernelSpec::delta_derivative(gamma), KernelSpec::delta(2.0 * gamma * kBT)};
}

KernelMatrix discretize_kernel_on_nodes(const KernelSpec& k, const std::vector<double>& nodes,
                                        double dt) {
    const auto n = static_cast<Eigen::Index>(nodes.size());
    if (n < 1) throw InvalidParameterError("discretize_kernel: empty node list");
    KernelMatrix m = KernelMatrix::Zero(n, n);
    switch (k.kind()) {
        case KernelSpec::Kind::delta:
            m.diagonal().setConstant(k.amplitude() / dt);
            break;
        case KernelSpec::Kind::delta_derivative: {
            // Antisymmetric first-difference stencil: convolving against nodal
            // values x returns amplitude * xdot. One-sided rows at the ends.
            const double a = k.amplitude();
            if (n == 1) break;
            for (Eigen::Index i = 1; i + 1 < n; ++i) {
                m(i, i + 1) = a / (2.0 * dt * dt);
                m(i, i - 1) = -a / (2.0 * dt * dt);
            }
            m(0, 0) = -a / (dt * dt);
            m(0, 1) = a / (dt * dt);
            m(n - 1, n - 1) = a / (dt * dt);
            m(n - 1, n - 2) = -a / (dt * dt);
            break;
        }
        case KernelSpec::Kind::exponential:
        case KernelSpec::Kind::tabulated:
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j)
                    m(i, j) = k.value(nodes[static_cast<std::size_t>(i)],
                                      nodes[static_cast<std::size_t>(j)]);
            break;
    }
    return m;
}

KernelMatrix discretize_kernel(const KernelSpec& k, const TimeGrid& grid) {
    return discretize_kernel_on_nodes(k, grid.node_times(), grid.dt());
}

Eigen::VectorXd apply_kernel(const KernelMatrix& m, const Eigen::VectorXd& x, double dt) {
    if (m.cols() != x.size())
        throw GridMismatchError("apply_kernel: matrix and vector sizes differ");
    return (m * x) * dt;
}

} // namespace qisd
