#include "qisd/wigner.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <string>
#include <thread>

#include "qisd/rng.hpp"

namespace qisd {

namespace {

double thermal_width_factor(double omega, double kBT, double hbar) {
    if (kBT <= 0.0) return 1.0;
    return 1.0 / std::tanh(hbar * omega / (2.0 * kBT));
}

struct Gaussian2d {
    double mx, mp, sxx, spp, sxp;

    double density(double x, double p) const {
        const double det = sxx * spp - sxp * sxp;
        const double dx = x - mx, dp = p - mp;
        const double q = (spp * dx * dx - 2.0 * sxp * dx * dp + sxx * dp * dp) / det;
        return std::exp(-0.5 * q) / (2.0 * M_PI * std::sqrt(det));
    }
};

} // namespace

StateSpec StateSpec::gaussian(double mean_x, double mean_p, double var_x, double var_p,
                              double cov_xp) {
    if (var_x < 0.0 || var_p < 0.0 || cov_xp * cov_xp > var_x * var_p)
        throw InvalidParameterError("StateSpec::gaussian: covariance must be PSD");
    StateSpec s;
    s.kind = Kind::gaussian;
    s.mean_x = mean_x;
    s.mean_p = mean_p;
    s.var_x = var_x;
    s.var_p = var_p;
    s.cov_xp = cov_xp;
    return s;
}

StateSpec StateSpec::coherent(double alpha_re, double alpha_im, double omega, double mass,
                              double hbar) {
    if (!(omega > 0.0) || !(mass > 0.0) || !(hbar > 0.0))
        throw InvalidParameterError("StateSpec::coherent: omega, mass, hbar must be > 0");
    StateSpec s;
    s.kind = Kind::coherent;
    s.alpha_re = alpha_re;
    s.alpha_im = alpha_im;
    s.omega = omega;
    s.mass = mass;
    s.hbar = hbar;
    s.mean_x = std::sqrt(2.0 * hbar / (mass * omega)) * alpha_re;
    s.mean_p = std::sqrt(2.0 * hbar * mass * omega) * alpha_im;
    s.var_x = hbar / (2.0 * mass * omega);
    s.var_p = mass * omega * hbar / 2.0;
    return s;
}

StateSpec StateSpec::thermal(double omega, double mass, double kBT, double hbar) {
    if (!(omega > 0.0) || !(mass > 0.0) || !(hbar > 0.0) || kBT < 0.0)
        throw InvalidParameterError("StateSpec::thermal: invalid parameters");
    StateSpec s;
    s.kind = Kind::thermal;
    s.omega = omega;
    s.mass = mass;
    s.hbar = hbar;
    s.kBT = kBT;
    const double c = thermal_width_factor(omega, kBT, hbar);
    s.var_x = hbar / (2.0 * mass * omega) * c;
    s.var_p = mass * omega * hbar / 2.0 * c;
    return s;
}

StateSpec StateSpec::fock1(double omega, double mass, double hbar) {
    if (!(omega > 0.0) || !(mass > 0.0) || !(hbar > 0.0))
        throw InvalidParameterError("StateSpec::fock1: omega, mass, hbar must be > 0");
    StateSpec s;
    s.kind = Kind::fock1;
    s.omega = omega;
    s.mass = mass;
    s.hbar = hbar;
    s.var_x = 3.0 * hbar / (2.0 * mass * omega);
    s.var_p = 3.0 * mass * omega * hbar / 2.0;
    return s;
}

std::string StateSpec::name() const {
    switch (kind) {
        case Kind::gaussian: return "gaussian";
        case Kind::coherent: return "coherent";
        case Kind::thermal: return "thermal";
        case Kind::fock1: return "fock1";
    }
    return "?";
}

double wigner_value(const StateSpec& state, double x, double p) {
    switch (state.kind) {
        case StateSpec::Kind::gaussian:
        case StateSpec::Kind::coherent:
        case StateSpec::Kind::thermal: {
            if (state.var_x <= 0.0 || state.var_p <= 0.0)
                throw InvalidParameterError("wigner_value: degenerate covariance");
            return Gaussian2d{state.mean_x, state.mean_p, state.var_x, state.var_p,
                              state.cov_xp}
                .density(x, p);
        }
        case StateSpec::Kind::fock1: {
            const double h =
                p * p / (2.0 * state.mass) +
                0.5 * state.mass * state.omega * state.omega * x * x;
            const double u = 2.0 * h / (state.hbar * state.omega);
            return (2.0 * u - 1.0) * std::exp(-u) / (M_PI * state.hbar);
        }
    }
    return 0.0;
}

PhaseMoments state_moments(const StateSpec& state) {
    PhaseMoments m;
    m.mass = 1.0;
    m.mean_x = state.mean_x;
    m.mean_p = state.mean_p;
    m.var_x = state.var_x;
    m.var_p = state.var_p;
    m.cov_xp = state.cov_xp;
    return m;
}

PhaseMoments WignerEnsemble::moments() const {
    PhaseMoments m;
    double sw = 0, sx = 0, sp = 0, sxx = 0, spp = 0, sxp = 0;
    for (const auto& pt : points) {
        sw += pt.weight;
        sx += pt.weight * pt.x;
        sp += pt.weight * pt.p;
        sxx += pt.weight * pt.x * pt.x;
        spp += pt.weight * pt.p * pt.p;
        sxp += pt.weight * pt.x * pt.p;
    }
    if (sw == 0.0) throw InvalidParameterError("WignerEnsemble::moments: zero weight sum");
    m.mass = sw;
    m.mean_x = sx / sw;
    m.mean_p = sp / sw;
    m.var_x = sxx / sw - m.mean_x * m.mean_x;
    m.var_p = spp / sw - m.mean_p * m.mean_p;
    m.cov_xp = sxp / sw - m.mean_x * m.mean_p;
    return m;
}

WignerEnsemble sample_initial_state(const StateSpec& state, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw InvalidParameterError("sample_initial_state: n must be >= 1");
    WignerEnsemble ens;
    ens.points.resize(n);

    if (state.kind != StateSpec::Kind::fock1) {
        // Cholesky of [[var_x, cov_xp], [cov_xp, var_p]] (PSD, possibly zero).
        const double lxx = std::sqrt(state.var_x);
        const double lpx = lxx > 0.0 ? state.cov_xp / lxx : 0.0;
        const double lpp = std::sqrt(std::max(0.0, state.var_p - lpx * lpx));
        const double w = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            rng::CounterRng gen(seed, rng::Stream::state, i);
            const double z1 = gen.next_gaussian();
            const double z2 = gen.next_gaussian();
            ens.points[i] = {state.mean_x + lxx * z1, state.mean_p + lpx * z1 + lpp * z2, w};
        }
        ens.effective_sample_size = static_cast<double>(n);
        return ens;
    }

    // Signed state: importance sampling from a widened Gaussian envelope.
    const Gaussian2d envelope{0.0, 0.0, 1.5 * state.var_x, 1.5 * state.var_p, 0.0};
    const double sx = std::sqrt(envelope.sxx);
    const double sp = std::sqrt(envelope.spp);
    double wsum = 0.0, wsq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        rng::CounterRng gen(seed, rng::Stream::state, i);
        const double x = sx * gen.next_gaussian();
        const double p = sp * gen.next_gaussian();
        const double w = wigner_value(state, x, p) / envelope.density(x, p);
        ens.points[i] = {x, p, w};
        wsum += w;
    }
    if (!(wsum > 0.0))
        throw ConditioningError("sample_initial_state: degenerate signed-weight sample");
    for (auto& pt : ens.points) {
        pt.weight /= wsum;
        wsq += pt.weight * pt.weight;
    }
    ens.effective_sample_size = 1.0 / wsq;
    return ens;
}

WignerEnsemble propagate_wigner(const WignerEnsemble& ens, const LangevinSpec& spec, double tau,
                                std::size_t n_steps, std::uint64_t seed, int threads,
                                const IntegratorOptions& options) {
    if (ens.points.empty())
        throw InvalidParameterError("propagate_wigner: empty ensemble");
    if (tau < 0.0) throw InvalidParameterError("propagate_wigner: tau must be >= 0");
    WignerEnsemble out = ens;
    if (tau == 0.0) return out;

    const TimeGrid grid(tau, n_steps);
    const NoiseSampler sampler(spec.noise, grid, seed);
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const std::size_t block = 1024;
    const std::size_t n_blocks = (ens.points.size() + block - 1) / block;
    auto work = [&](std::size_t b) {
        const std::size_t begin = b * block;
        const std::size_t end = std::min(ens.points.size(), begin + block);
        for (std::size_t i = begin; i < end; ++i) {
            const auto& pt = ens.points[i];
            const NoisePath path = sampler.sample(i);
            try {
                const Trajectory traj = integrate_langevin(
                    spec, {pt.x, pt.p / spec.mass}, path, grid, options);
                out.points[i] = {traj.x.back(), spec.mass * traj.v.back(), pt.weight};
            } catch (const Error& e) {
                throw Error(e.category(), "point " + std::to_string(i) + ": " + e.what());
            }
        }
    };
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n_blocks)));
    if (workers == 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) work(b);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t)
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t b = next.fetch_add(1);
                    if (b >= n_blocks) return;
                    try {
                        work(b);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(error_mutex);
                        if (!first_error) first_error = std::current_exception();
                        return;
                    }
                }
            });
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }
    out.time = ens.time + tau;
    return out;
}

WignerGrid estimate_grid(const WignerEnsemble& ens, const PhaseWindow& window, Eigen::Index nx,
                         Eigen::Index np) {
    window.validate();
    if (nx < 2 || np < 2)
        throw InvalidParameterError("estimate_grid: need at least 2 bins per axis");
    if (ens.points.empty()) throw InvalidParameterError("estimate_grid: empty ensemble");

    WignerGrid g;
    g.window = window;
    g.nx = nx;
    g.np = np;
    g.values = Eigen::MatrixXd::Zero(nx, np);
    Eigen::MatrixXd sumsq = Eigen::MatrixXd::Zero(nx, np);
    const double dx = g.dx(), dp = g.dp(), area = g.cell_area();
    double in_weight = 0.0;
    for (const auto& pt : ens.points) {
        if (!window.contains(pt.x, pt.p)) continue;
        const auto i = static_cast<Eigen::Index>((pt.x - window.x_min) / dx);
        const auto j = static_cast<Eigen::Index>((pt.p - window.p_min) / dp);
        const double c = pt.weight / area;
        g.values(i, j) += c;
        sumsq(i, j) += c * c;
        in_weight += pt.weight;
    }
    g.coverage = in_weight;
    // Per-bin standard error of the summed contributions.
    const auto n = static_cast<double>(ens.points.size());
    g.stderr_ = Eigen::MatrixXd::Zero(nx, np);
    for (Eigen::Index i = 0; i < nx; ++i)
        for (Eigen::Index j = 0; j < np; ++j) {
            const double mean = g.values(i, j) / n;
            const double var = std::max(0.0, sumsq(i, j) - n * mean * mean);
            g.stderr_(i, j) = std::sqrt(var);
        }
    return g;
}

WignerGrid grid_from_state(const StateSpec& state, const PhaseWindow& window, Eigen::Index nx,
                           Eigen::Index np) {
    window.validate();
    if (nx < 2 || np < 2)
        throw InvalidParameterError("grid_from_state: need at least 2 bins per axis");
    WignerGrid g;
    g.window = window;
    g.nx = nx;
    g.np = np;
    g.values.resize(nx, np);
    for (Eigen::Index i = 0; i < nx; ++i)
        for (Eigen::Index j = 0; j < np; ++j)
            g.values(i, j) = wigner_value(state, g.x_center(i), g.p_center(j));
    g.coverage = g.normalization();
    return g;
}

} // namespace qisd
