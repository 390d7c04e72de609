#include "qisd/influence.hpp"

#include <cmath>

#include "qisd/noise.hpp"

namespace qisd {

namespace {

// PSD probe grid for the noise kernel: resolves the kernel's own time scale.
TimeGrid psd_probe_grid(const KernelSpec& noise) {
    double span = 1.0;
    if (noise.kind() == KernelSpec::Kind::exponential)
        span = std::max(1.0, 8.0 * noise.correlation_time());
    if (noise.kind() == KernelSpec::Kind::tabulated)
        span = noise.table_times().back() - noise.table_times().front();
    return TimeGrid(span, 64);
}

} // namespace

InfluenceFunctionalSpec build_influence_functional(const LangevinSpec& spec) {
    spec.validate();
    if (spec.noise.kind() != KernelSpec::Kind::delta) {
        // Factorization success after flooring is the PSD gate.
        const TimeGrid probe = psd_probe_grid(spec.noise);
        floored_psd_factor(discretize_kernel(spec.noise, probe), "build_influence_functional");
    }
    InfluenceFunctionalSpec ifs;
    ifs.f = spec.f;
    ifs.g = spec.g;
    ifs.dissipation = spec.dissipation;
    ifs.noise = spec.noise;
    ifs.hbar = spec.hbar;
    ifs.mode = spec.mode;
    return ifs;
}

LangevinSpec langevin_from_influence(const InfluenceFunctionalSpec& ifs, double mass,
                                     const Potential& potential) {
    LangevinSpec spec;
    spec.mass = mass;
    spec.potential = potential;
    spec.f = ifs.f;
    spec.g = ifs.g;
    spec.dissipation = ifs.dissipation;
    spec.noise = ifs.noise;
    spec.hbar = ifs.hbar;
    spec.mode = ifs.mode;
    spec.validate();
    return spec;
}

std::complex<double> evaluate_influence_exponent(const InfluenceFunctionalSpec& ifs,
                                                 const PathPair& pair) {
    pair.validate();
    const auto n = static_cast<Eigen::Index>(pair.grid.n_steps());
    const double dt = pair.grid.dt();
    const bool qisd = ifs.mode == CouplingMode::qisd;

    // Noise coupling per node: y_k * f(x_k) (or y_k * f'(x_k)).
    Eigen::VectorXd yc(n);
    for (Eigen::Index k = 0; k < n; ++k)
        yc[k] = pair.y[k] * (qisd ? ifs.f.deriv(pair.x[k]) : ifs.f.value(pair.x[k]));

    const std::vector<double> nodes = pair.grid.node_times();
    double real_quad;
    if (ifs.noise.kind() == KernelSpec::Kind::delta) {
        // (amplitude/dt) * sum yc_k^2 * dt^2
        real_quad = ifs.noise.amplitude() * dt * yc.squaredNorm();
    } else {
        const KernelMatrix m = discretize_kernel_on_nodes(ifs.noise, nodes, dt);
        real_quad = dt * dt * yc.dot(m * yc);
    }
    const double real_weight = qisd ? 1.0 / (2.0 * ifs.hbar) : 1.0 / (2.0 * ifs.hbar * ifs.hbar);
    const double real_part = -real_weight * real_quad;

    // Dissipation term, linear in y.
    double imag_sum = 0.0;
    if (qisd) {
        // sum_{k,l} y_k f'(x_k) D_{kl} f(x_l) dt^2
        Eigen::VectorXd fx(n), ydf(n);
        for (Eigen::Index k = 0; k < n; ++k) {
            fx[k] = ifs.f.value(pair.x[k]);
            ydf[k] = pair.y[k] * ifs.f.deriv(pair.x[k]);
        }
        const KernelMatrix d = discretize_kernel_on_nodes(ifs.dissipation, nodes, dt);
        imag_sum = dt * dt * ydf.dot(d * fx);
    } else {
        // sum_{k,l} y_k g(x_k) D_{kl} dt^2 (no function at the second time)
        const KernelMatrix d = discretize_kernel_on_nodes(ifs.dissipation, nodes, dt);
        const Eigen::VectorXd row_sums = d.rowwise().sum() * dt;
        for (Eigen::Index k = 0; k < n; ++k)
            imag_sum += pair.y[k] * ifs.g.value(pair.x[k]) * row_sums[k] * dt;
    }
    const double imag_part = (qisd ? 1.0 : -1.0) * imag_sum / ifs.hbar;
    return {real_part, imag_part};
}

double decoherence_factor(const InfluenceFunctionalSpec& ifs, const PathPair& pair) {
    return std::exp(evaluate_influence_exponent(ifs, pair).real());
}

} // namespace qisd
