#include "qisd/oracle.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace qisd::oracle {

namespace {

using Vec5 = std::array<double, 5>; // (mean_x, mean_p, Sxx, Sxp, Spp)

Vec5 moment_rhs(double mass, double omega, double gamma, double kBT, const Vec5& s) {
    const double w2 = omega * omega;
    const double g = gamma / mass;
    return {
        s[1] / mass,
        -mass * w2 * s[0] - g * s[1],
        2.0 * s[3] / mass,
        s[4] / mass - mass * w2 * s[2] - g * s[3],
        -2.0 * mass * w2 * s[3] - 2.0 * g * s[4] + 2.0 * gamma * kBT,
    };
}

Vec5 axpy(const Vec5& a, double h, const Vec5& b) {
    Vec5 r;
    for (int i = 0; i < 5; ++i) r[i] = a[i] + h * b[i];
    return r;
}

} // namespace

GaussianState moment_ode_evolve(double mass, double omega, double gamma, double kBT,
                                const GaussianState& initial, double tau, double max_step) {
    if (!(mass > 0.0)) throw InvalidParameterError("moment_ode_evolve: mass must be > 0");
    if (gamma < 0.0 || kBT < 0.0)
        throw InvalidParameterError("moment_ode_evolve: gamma and kBT must be >= 0");
    if (tau < 0.0) throw InvalidParameterError("moment_ode_evolve: tau must be >= 0");
    Vec5 s = {initial.mean[0], initial.mean[1], initial.cov(0, 0), initial.cov(0, 1),
              initial.cov(1, 1)};
    if (tau > 0.0) {
        const auto n = static_cast<std::size_t>(std::ceil(tau / max_step));
        const double h = tau / static_cast<double>(n);
        for (std::size_t k = 0; k < n; ++k) {
            const Vec5 k1 = moment_rhs(mass, omega, gamma, kBT, s);
            const Vec5 k2 = moment_rhs(mass, omega, gamma, kBT, axpy(s, 0.5 * h, k1));
            const Vec5 k3 = moment_rhs(mass, omega, gamma, kBT, axpy(s, 0.5 * h, k2));
            const Vec5 k4 = moment_rhs(mass, omega, gamma, kBT, axpy(s, h, k3));
            for (int i = 0; i < 5; ++i)
                s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    GaussianState out;
    out.mean << s[0], s[1];
    out.cov << s[2], s[3], s[3], s[4];
    return out;
}

GaussianPropagator::GaussianPropagator(double mass, double omega, double gamma, double kBT,
                                       const TimeGrid& grid)
    : grid_(grid), mass_(mass) {
    if (!(mass > 0.0) || !(gamma > 0.0) || !(kBT > 0.0))
        throw InvalidParameterError("GaussianPropagator: needs mass > 0, gamma > 0, kBT > 0");
    const auto n = static_cast<Eigen::Index>(grid.n_steps());
    if (n < 5)
        throw InvalidParameterError("GaussianPropagator: grid too coarse (need >= 5 steps)");
    const double dt = grid.dt();
    const double w = dt / (2.0 * gamma * kBT); // weight of each squared residual row

    // Residual stencil at interior node k on (x_{k-1}, x_k, x_{k+1}):
    //   m xddot + m w^2 x + gamma xdot  (central differences)
    const double cm = mass / (dt * dt) - gamma / (2.0 * dt);
    const double c0 = -2.0 * mass / (dt * dt) + mass * omega * omega;
    const double cp = mass / (dt * dt) + gamma / (2.0 * dt);

    // Quadratic form A = sum_k w b_k b_k^T over nodes 0..n (pentadiagonal).
    Eigen::SparseMatrix<double> a(n + 1, n + 1);
    {
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(static_cast<std::size_t>(9 * n));
        const double s[3] = {cm, c0, cp};
        for (Eigen::Index k = 1; k < n; ++k)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    trips.emplace_back(k - 1 + i, k - 1 + j, w * s[i] * s[j]);
        a.setFromTriplets(trips.begin(), trips.end());
    }

    pinned_ = {0, 1, static_cast<std::size_t>(n - 1), static_cast<std::size_t>(n)};
    std::vector<Eigen::Index> interior;
    interior.reserve(static_cast<std::size_t>(n - 3));
    for (Eigen::Index k = 2; k <= n - 2; ++k) interior.push_back(k);
    const auto ni = static_cast<Eigen::Index>(interior.size());

    Eigen::SparseMatrix<double> a_ii(ni, ni);
    {
        std::vector<Eigen::Triplet<double>> trips;
        Eigen::MatrixXd a_ib = Eigen::MatrixXd::Zero(ni, 4);
        const Eigen::MatrixXd dense_band(a); // small n, dense view is fine
        for (Eigen::Index r = 0; r < ni; ++r) {
            for (Eigen::Index c = 0; c < ni; ++c) {
                const double val = dense_band(interior[r], interior[c]);
                if (val != 0.0) trips.emplace_back(r, c, val);
            }
            for (int b = 0; b < 4; ++b)
                a_ib(r, b) = dense_band(interior[r], static_cast<Eigen::Index>(pinned_[b]));
        }
        a_ii.setFromTriplets(trips.begin(), trips.end());
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(a_ii);
        if (solver.info() != Eigen::Success)
            throw ConditioningError("GaussianPropagator: interior quadratic form is singular");
        interior_solve_ = solver.solve(a_ib); // A_II^{-1} A_IB, (ni x 4)

        Eigen::Matrix4d a_bb;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c)
                a_bb(r, c) = dense_band(static_cast<Eigen::Index>(pinned_[r]),
                                        static_cast<Eigen::Index>(pinned_[c]));
        const Eigen::Matrix4d schur = a_bb - a_ib.transpose() * interior_solve_;

        // Map pinned nodes from (x0, v0, xt, vt); endpoint velocities pinned
        // through a second-order backward/forward Taylor step of the drift.
        Eigen::Matrix4d t = Eigen::Matrix4d::Zero();
        const double w2 = omega * omega, g = gamma / mass;
        t(0, 0) = 1.0;
        t(1, 0) = 1.0 - 0.5 * dt * dt * w2;
        t(1, 1) = dt - 0.5 * dt * dt * g;
        t(3, 2) = 1.0;
        t(2, 2) = 1.0 - 0.5 * dt * dt * w2;
        t(2, 3) = -dt + 0.5 * dt * dt * g;
        boundary_map_ = t;
        quad_form_ = t.transpose() * schur * t;
    }

    // Conditional end-state density: precision = G_ee, mean = -G_ee^{-1} G_es u_s.
    const Eigen::Matrix2d g_ee = quad_form_.bottomRightCorner<2, 2>();
    const Eigen::Matrix2d g_es = quad_form_.bottomLeftCorner<2, 2>();
    const Eigen::Matrix2d g_ee_inv = g_ee.inverse();
    const Eigen::Matrix2d mean_v = -g_ee_inv * g_es;        // (x, v) map
    Eigen::Matrix2d to_p = Eigen::Matrix2d::Identity();
    to_p(1, 1) = mass;
    Eigen::Matrix2d from_p = Eigen::Matrix2d::Identity();
    from_p(1, 1) = 1.0 / mass;
    mean_map_ = to_p * mean_v * from_p;
    cov_ = to_p * g_ee_inv * to_p.transpose();
}

Eigen::Vector4d GaussianPropagator::boundary_nodes(double x0, double v0, double xt,
                                                   double vt) const {
    return boundary_map_ * Eigen::Vector4d(x0, v0, xt, vt);
}

double GaussianPropagator::min_action(double x0, double v0, double xt, double vt) const {
    const Eigen::Vector4d u(x0, v0, xt, vt);
    return 0.5 * u.dot(quad_form_ * u);
}

std::vector<double> GaussianPropagator::minimizing_path(double x0, double v0, double xt,
                                                        double vt) const {
    const auto n = static_cast<Eigen::Index>(grid_.n_steps());
    const Eigen::Vector4d xb = boundary_nodes(x0, v0, xt, vt);
    const Eigen::VectorXd xi = -interior_solve_ * xb;
    std::vector<double> path(static_cast<std::size_t>(n + 1));
    path[0] = xb[0];
    path[1] = xb[1];
    path[static_cast<std::size_t>(n - 1)] = xb[2];
    path[static_cast<std::size_t>(n)] = xb[3];
    for (Eigen::Index k = 2; k <= n - 2; ++k)
        path[static_cast<std::size_t>(k)] = xi[k - 2];
    return path;
}

namespace {

struct KramersStepper {
    double mass, gamma, kBT;
    const Potential* pot;
    Eigen::Index nx, np;
    double dx, dp;
    std::vector<double> ax_face;   // x-velocity p/m at each p row
    std::vector<double> ap_face;   // p-velocity at each (x, p-face)
    std::vector<double> vprime;    // V'(x_i)

    KramersStepper(double mass_, const Potential& pot_, double gamma_, double kBT_,
                   const WignerGrid& g)
        : mass(mass_), gamma(gamma_), kBT(kBT_), pot(&pot_), nx(g.nx), np(g.np), dx(g.dx()),
          dp(g.dp()) {
        vprime.resize(static_cast<std::size_t>(nx));
        for (Eigen::Index i = 0; i < nx; ++i)
            vprime[static_cast<std::size_t>(i)] = pot->deriv(g.x_center(i));
    }

    double max_stable_dt(const WignerGrid& g, double safety) const {
        double max_ax = 0.0, max_ap = 0.0;
        for (Eigen::Index j = 0; j < np; ++j)
            max_ax = std::max(max_ax, std::abs(g.p_center(j)) / mass);
        for (Eigen::Index i = 0; i < nx; ++i) {
            const double f = std::abs(vprime[static_cast<std::size_t>(i)]);
            max_ap = std::max(max_ap,
                              f + gamma * std::max(std::abs(g.window.p_min),
                                                   std::abs(g.window.p_max)) / mass);
        }
        const double diff = 2.0 * gamma * kBT / (dp * dp);
        const double rate = max_ax / dx + max_ap / dp + diff;
        if (rate <= 0.0) return 1e30;
        return safety / rate;
    }

    // One conservative upwind/centered step; ghost cells are zero (absorbing).
    void step(const Eigen::MatrixXd& w, Eigen::MatrixXd& out, double dt,
              const WignerGrid& g) const {
        out.setZero();
        // x-direction fluxes: velocity p/m constant along x.
        for (Eigen::Index j = 0; j < np; ++j) {
            const double a = g.p_center(j) / mass;
            for (Eigen::Index face = 0; face <= nx; ++face) {
                const double wl = (face > 0) ? w(face - 1, j) : 0.0;
                const double wr = (face < nx) ? w(face, j) : 0.0;
                const double flux = a > 0.0 ? a * wl : a * wr;
                if (face > 0) out(face - 1, j) -= dt * flux / dx;
                if (face < nx) out(face, j) += dt * flux / dx;
            }
        }
        // p-direction advective + diffusive fluxes.
        const double diff = gamma * kBT;
        for (Eigen::Index i = 0; i < nx; ++i) {
            const double f = vprime[static_cast<std::size_t>(i)];
            for (Eigen::Index face = 0; face <= np; ++face) {
                const double p_face = g.window.p_min + static_cast<double>(face) * dp;
                const double a = -(f + gamma * p_face / mass);
                const double wl = (face > 0) ? w(i, face - 1) : 0.0;
                const double wr = (face < np) ? w(i, face) : 0.0;
                double flux = a > 0.0 ? a * wl : a * wr;
                flux -= diff * (wr - wl) / dp;
                if (face > 0) out(i, face - 1) -= dt * flux / dp;
                if (face < np) out(i, face) += dt * flux / dp;
            }
        }
        out += w;
    }
};

} // namespace

KramersResult kramers_grid_solve(double mass, const Potential& potential, double gamma,
                                 double kBT, const WignerGrid& initial,
                                 const std::vector<double>& checkpoints,
                                 const std::function<void(double, const WignerGrid&)>& on_checkpoint,
                                 const KramersOptions& options) {
    if (!(mass > 0.0) || gamma < 0.0 || kBT < 0.0)
        throw InvalidParameterError("kramers_grid_solve: invalid parameters");
    if (checkpoints.empty())
        throw InvalidParameterError("kramers_grid_solve: no checkpoint times");
    for (std::size_t i = 1; i < checkpoints.size(); ++i)
        if (!(checkpoints[i] > checkpoints[i - 1]))
            throw InvalidParameterError("kramers_grid_solve: checkpoints must increase");
    initial.window.validate();
    if (initial.nx < 3 || initial.np < 3)
        throw InvalidParameterError("kramers_grid_solve: grid too coarse");

    KramersStepper stepper(mass, potential, gamma, kBT, initial);
    const double stable = stepper.max_stable_dt(initial, options.safety);
    double dt = stable;
    if (options.max_dt > 0.0) {
        if (options.max_dt > stable)
            throw StepSizeError("kramers_grid_solve: requested step " +
                                std::to_string(options.max_dt) +
                                " exceeds the stability limit " + std::to_string(stable));
        dt = options.max_dt;
    }

    KramersResult res;
    res.w = initial;
    res.w.stderr_.resize(0, 0);
    const double mass0 = res.w.normalization();

    Eigen::MatrixXd next(initial.nx, initial.np);
    double t = 0.0;
    std::size_t total_steps = 0;
    for (double t_target : checkpoints) {
        const double span = t_target - t;
        if (span > 0.0) {
            const auto n = static_cast<std::size_t>(std::ceil(span / dt - 1e-12));
            const double h = span / static_cast<double>(n);
            for (std::size_t k = 0; k < n; ++k) {
                stepper.step(res.w.values, next, h, res.w);
                res.w.values.swap(next);
            }
            total_steps += n;
        }
        t = t_target;
        if (on_checkpoint) {
            res.w.coverage = mass0 != 0.0 ? res.w.normalization() / mass0 : 0.0;
            on_checkpoint(t, res.w);
        }
    }
    res.dt = dt;
    res.n_steps = total_steps;
    res.w.coverage = mass0 != 0.0 ? res.w.normalization() / mass0 : 0.0;
    res.leakage = 1.0 - res.w.coverage;
    res.leakage_warning = res.leakage > options.leakage_warn;
    return res;
}

KramersResult kramers_grid_solve(double mass, const Potential& potential, double gamma,
                                 double kBT, const WignerGrid& initial, double tau,
                                 const KramersOptions& options) {
    if (!(tau > 0.0)) {
        KramersResult res;
        res.w = initial;
        return res;
    }
    return kramers_grid_solve(mass, potential, gamma, kBT, initial, std::vector<double>{tau},
                              nullptr, options);
}

} // namespace qisd::oracle
