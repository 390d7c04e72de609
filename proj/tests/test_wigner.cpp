#include <doctest.h>

#include <cmath>

#include "qisd/oracle.hpp"
#include "qisd/wigner.hpp"

using namespace qisd;

namespace {

LangevinSpec harmonic_cl(double gamma, double kBT) {
    LangevinSpec spec;
    spec.potential = Potential::harmonic(1.0);
    auto [d, n] = cl_kernels(gamma, kBT);
    spec.dissipation = d;
    spec.noise = n;
    return spec;
}

} // namespace

TEST_CASE("zero-width state collapses every sample onto the mean") {
    const auto ens = sample_initial_state(StateSpec::gaussian(1.5, -0.5, 0.0, 0.0), 100, 1);
    for (const auto& pt : ens.points) {
        CHECK(pt.x == 1.5);
        CHECK(pt.p == -0.5);
        CHECK(pt.weight == doctest::Approx(0.01));
    }
    CHECK(ens.weight_sum() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("ground-state samples have the right moments") {
    const StateSpec state = StateSpec::coherent(0.0, 0.0, 1.0, 1.0);
    const std::size_t n = 100000;
    const auto ens = sample_initial_state(state, n, 77);
    const PhaseMoments m = ens.moments();
    const double se_mean = std::sqrt(0.5 / static_cast<double>(n));
    const double se_var = 0.5 * std::sqrt(2.0 / static_cast<double>(n));
    CHECK(std::abs(m.mean_x) < 5.0 * se_mean);
    CHECK(std::abs(m.mean_p) < 5.0 * se_mean);
    CHECK(std::abs(m.var_x - 0.5) < 5.0 * se_var);
    CHECK(std::abs(m.var_p - 0.5) < 5.0 * se_var);
}

TEST_CASE("displaced coherent state lands at the classical point") {
    const StateSpec state = StateSpec::coherent(2.0, -1.0, 1.0, 1.0);
    CHECK(state.mean_x == doctest::Approx(2.0 * std::sqrt(2.0)));
    CHECK(state.mean_p == doctest::Approx(-std::sqrt(2.0)));
    const auto ens = sample_initial_state(state, 20000, 3);
    const PhaseMoments m = ens.moments();
    CHECK(m.mean_x == doctest::Approx(state.mean_x).epsilon(0.02));
    CHECK(m.mean_p == doctest::Approx(state.mean_p).epsilon(0.05));
}

TEST_CASE("thermal state widens with temperature and closes onto the ground state") {
    const StateSpec cold = StateSpec::thermal(1.0, 1.0, 0.0);
    CHECK(cold.var_x == doctest::Approx(0.5));
    const StateSpec hot = StateSpec::thermal(1.0, 1.0, 5.0);
    CHECK(hot.var_x == doctest::Approx(5.0).epsilon(0.01)); // classical kBT / (m w^2)
}

TEST_CASE("signed state sampling") {
    const StateSpec fock = StateSpec::fock1(1.0, 1.0);
    const std::size_t n = 200000;
    const auto ens = sample_initial_state(fock, n, 11);

    SUBCASE("weights are signed yet sum to one") {
        bool has_negative = false;
        for (const auto& pt : ens.points) has_negative = has_negative || pt.weight < 0.0;
        CHECK(has_negative);
        CHECK(ens.weight_sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(ens.effective_sample_size > 0.0);
        CHECK(ens.effective_sample_size < static_cast<double>(n));
    }

    SUBCASE("the density estimate at the origin is negative") {
        const WignerGrid g = estimate_grid(ens, {-4.0, 4.0, -4.0, 4.0}, 80, 80);
        const Eigen::Index i = 40, j = 40; // cell just above the origin
        CHECK(g.values(i, j) < 0.0);
        CHECK(std::abs(g.values(i, j) - (-1.0 / M_PI)) < 5.0 * g.stderr_(i, j) + 0.02);
    }

    SUBCASE("closed-form grid negativity matches the analytic value") {
        const WignerGrid g = grid_from_state(fock, {-5.0, 5.0, -5.0, 5.0}, 400, 400);
        const double analytic = 2.0 * std::exp(-0.5) - 1.0;
        CHECK(negativity(g) == doctest::Approx(analytic).epsilon(0.005));
        CHECK(g.normalization() == doctest::Approx(1.0).epsilon(1e-3));
    }

    SUBCASE("sampled negativity approaches the quadrature value") {
        const WignerGrid g = estimate_grid(ens, {-4.0, 4.0, -4.0, 4.0}, 60, 60);
        const double analytic = 2.0 * std::exp(-0.5) - 1.0;
        CHECK(negativity(g) == doctest::Approx(analytic).epsilon(0.10));
    }
}

TEST_CASE("zero-time propagation is the identity") {
    const auto ens = sample_initial_state(StateSpec::coherent(1.0, 0.0, 1.0, 1.0), 1000, 5);
    const LangevinSpec spec = harmonic_cl(0.5, 2.0);
    const auto out = propagate_wigner(ens, spec, 0.0, 100, 9);
    REQUIRE(out.points.size() == ens.points.size());
    for (std::size_t i = 0; i < ens.points.size(); ++i) {
        CHECK(out.points[i].x == ens.points[i].x);
        CHECK(out.points[i].p == ens.points[i].p);
        CHECK(out.points[i].weight == ens.points[i].weight);
    }
}

TEST_CASE("propagated moments follow the moment equations, weights conserved") {
    const StateSpec state = StateSpec::coherent(2.0, 0.0, 1.0, 1.0);
    const LangevinSpec spec = harmonic_cl(0.5, 2.0);
    const std::size_t n = 20000;
    const auto ens = sample_initial_state(state, n, 31);
    const double w_before = ens.weight_sum();
    const auto out = propagate_wigner(ens, spec, 1.0, 100, 32, 2);
    CHECK(out.weight_sum() == w_before); // bitwise: weights are copied

    oracle::GaussianState s0;
    s0.mean << state.mean_x, state.mean_p;
    s0.cov << state.var_x, 0.0, 0.0, state.var_p;
    const oracle::GaussianState ref = oracle::moment_ode_evolve(1.0, 1.0, 0.5, 2.0, s0, 1.0);
    const PhaseMoments m = out.moments();
    const double se_mean_x = std::sqrt(ref.cov(0, 0) / static_cast<double>(n));
    const double se_mean_p = std::sqrt(ref.cov(1, 1) / static_cast<double>(n));
    CHECK(std::abs(m.mean_x - ref.mean[0]) < 3.0 * se_mean_x);
    CHECK(std::abs(m.mean_p - ref.mean[1]) < 3.0 * se_mean_p);
    const double se_var_x = ref.cov(0, 0) * std::sqrt(2.0 / static_cast<double>(n));
    const double se_var_p = ref.cov(1, 1) * std::sqrt(2.0 / static_cast<double>(n));
    CHECK(std::abs(m.var_x - ref.cov(0, 0)) < 4.0 * se_var_x);
    CHECK(std::abs(m.var_p - ref.cov(1, 1)) < 4.0 * se_var_p);
}

TEST_CASE("two-stage propagation composes") {
    const StateSpec state = StateSpec::coherent(1.5, 0.5, 1.0, 1.0);
    const LangevinSpec spec = harmonic_cl(0.5, 2.0);
    const std::size_t n = 20000;
    const auto ens = sample_initial_state(state, n, 41);
    const auto direct = propagate_wigner(ens, spec, 2.0, 200, 42);
    const auto stage1 = propagate_wigner(ens, spec, 1.0, 100, 43);
    const auto stage2 = propagate_wigner(stage1, spec, 1.0, 100, 44);
    CHECK(stage2.time == doctest::Approx(2.0));

    const PhaseMoments a = direct.moments();
    const PhaseMoments b = stage2.moments();
    const double se = std::sqrt(2.0 * 2.0 / static_cast<double>(n)); // generous scale
    CHECK(std::abs(a.mean_x - b.mean_x) < 3.0 * M_SQRT2 * se);
    CHECK(std::abs(a.mean_p - b.mean_p) < 3.0 * M_SQRT2 * se);
    CHECK(std::abs(a.var_x - b.var_x) < 5.0 * se);
    CHECK(std::abs(a.var_p - b.var_p) < 5.0 * se);
}

TEST_CASE("histogram estimator") {
    SUBCASE("single point occupies one bin") {
        WignerEnsemble ens;
        ens.points = {{0.25, 0.25, 1.0}};
        const WignerGrid g = estimate_grid(ens, {0.0, 1.0, 0.0, 1.0}, 2, 2);
        CHECK(g.values(0, 0) == doctest::Approx(1.0 / 0.25)); // one bin, density 1/area
        CHECK(g.values(1, 1) == 0.0);
        CHECK(g.coverage == doctest::Approx(1.0));
        CHECK(g.normalization() == doctest::Approx(1.0));
    }
    SUBCASE("normalization equals the in-window weight") {
        const auto ens = sample_initial_state(StateSpec::coherent(0, 0, 1, 1), 50000, 8);
        const WignerGrid g = estimate_grid(ens, {-1.0, 1.0, -1.0, 1.0}, 20, 20);
        CHECK(g.normalization() == doctest::Approx(g.coverage).epsilon(1e-12));
        CHECK(g.coverage < 1.0); // tails clipped
        CHECK(g.coverage > 0.5);
    }
    SUBCASE("per-bin values track the closed form") {
        const StateSpec state = StateSpec::coherent(0, 0, 1, 1);
        const auto ens = sample_initial_state(state, 100000, 13);
        const WignerGrid g = estimate_grid(ens, {-3.0, 3.0, -3.0, 3.0}, 30, 30);
        for (Eigen::Index i : {5, 15, 22})
            for (Eigen::Index j : {7, 15, 25}) {
                const double ref = wigner_value(state, g.x_center(i), g.p_center(j));
                CHECK(std::abs(g.values(i, j) - ref) < 5.0 * g.stderr_(i, j) + 2e-3);
            }
    }
    SUBCASE("degenerate requests are rejected") {
        WignerEnsemble ens;
        ens.points = {{0.0, 0.0, 1.0}};
        CHECK_THROWS_AS(estimate_grid(ens, {1.0, 1.0, 0.0, 1.0}, 4, 4),
                        InvalidParameterError);
        CHECK_THROWS_AS(estimate_grid(ens, {0.0, 1.0, 0.0, 1.0}, 1, 4),
                        InvalidParameterError);
    }
}

TEST_CASE("long evolution washes negativity out") {
    const StateSpec fock = StateSpec::fock1(1.0, 1.0);
    const LangevinSpec spec = harmonic_cl(0.5, 2.0);
    const std::size_t n = 50000;
    const auto ens = sample_initial_state(fock, n, 21);
    const auto out = propagate_wigner(ens, spec, 4.0, 400, 22, 2);
    const WignerGrid g = estimate_grid(out, {-6.0, 6.0, -6.0, 6.0}, 40, 40);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < g.nx; ++i)
        for (Eigen::Index j = 0; j < g.np; ++j)
            if (g.values(i, j) < 0.0)
                worst = std::max(worst, -g.values(i, j) / std::max(g.stderr_(i, j), 1e-12));
    CHECK(worst < 3.0); // no bin significantly below zero
}
