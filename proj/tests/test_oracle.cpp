#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qisd/oracle.hpp"
#include "qisd/runner.hpp"
#include "qisd/wigner.hpp"

using namespace qisd;
using oracle::GaussianState;

TEST_CASE("moment equations: undamped motion is periodic") {
    GaussianState s0;
    s0.mean << 1.0, 0.0;
    s0.cov << 0.3, 0.0, 0.0, 0.6; // squeezed, so rotation is visible
    const double period = 2.0 * M_PI;
    const GaussianState s1 = oracle::moment_ode_evolve(1.0, 1.0, 0.0, 0.7, s0, period, 1e-4);
    CHECK(s1.mean[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(s1.mean[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
    CHECK((s1.cov - s0.cov).norm() < 1e-7);

    SUBCASE("half period swaps the squeezed axes") {
        const GaussianState s2 =
            oracle::moment_ode_evolve(1.0, 1.0, 0.0, 0.7, s0, period / 4.0, 1e-4);
        CHECK(s2.cov(0, 0) == doctest::Approx(0.6).epsilon(1e-7));
        CHECK(s2.cov(1, 1) == doctest::Approx(0.3).epsilon(1e-7));
    }
}

TEST_CASE("moment equations: late-time covariance forgets the initial state") {
    const double gamma = 0.5, kBT = 2.0;
    for (double vx : {0.1, 2.5}) {
        GaussianState s0;
        s0.mean << -1.0, 2.0;
        s0.cov << vx, 0.0, 0.0, 3.0 * vx;
        const GaussianState s1 =
            oracle::moment_ode_evolve(1.0, 1.0, gamma, kBT, s0, 80.0, 1e-3);
        CHECK(s1.cov(0, 0) == doctest::Approx(kBT).epsilon(1e-6));
        CHECK(s1.cov(1, 1) == doctest::Approx(kBT).epsilon(1e-6));
        CHECK(std::abs(s1.cov(0, 1)) < 1e-6);
        CHECK(std::abs(s1.mean[0]) < 1e-6);
    }
}

TEST_CASE("endpoint-density propagator") {
    const TimeGrid grid(1.0, 1000);
    const oracle::GaussianPropagator prop(1.0, 1.0, 0.5, 2.0, grid);

    SUBCASE("covariance and mean map agree with the moment equations") {
        GaussianState s0;
        s0.mean << 1.0, 0.5;
        const GaussianState ref = oracle::moment_ode_evolve(1.0, 1.0, 0.5, 2.0, s0, 1.0, 1e-4);
        const double cov_rel = (prop.covariance() - ref.cov).norm() / ref.cov.norm();
        CHECK(cov_rel < 1e-3);
        const Eigen::Vector2d mapped = prop.mean_map() * s0.mean;
        CHECK((mapped - ref.mean).norm() / ref.mean.norm() < 1e-3);
    }

    SUBCASE("small-noise limit collapses onto the deterministic flow") {
        const oracle::GaussianPropagator tight(1.0, 1.0, 0.5, 1e-8, grid);
        CHECK(tight.covariance().norm() < 1e-6);
        GaussianState s0;
        s0.mean << 1.0, 0.0;
        const GaussianState ref =
            oracle::moment_ode_evolve(1.0, 1.0, 0.5, 0.0, s0, 1.0, 1e-4);
        CHECK((tight.mean_map() * s0.mean - ref.mean).norm() < 2e-3);
    }

    SUBCASE("minimizing path honors its boundary data") {
        const auto path = prop.minimizing_path(1.0, 0.0, 0.4, -0.2);
        CHECK(path.size() == 1001);
        CHECK(path[0] == doctest::Approx(1.0));
        CHECK(path[1000] == doctest::Approx(0.4));
        // forward difference approximates v0 = 0 up to the drift correction
        CHECK(std::abs((path[1] - path[0]) / grid.dt()) < 2e-3);
        CHECK(prop.min_action(1.0, 0.0, 0.4, -0.2) > 0.0);
        CHECK(prop.min_action(0.0, 0.0, 0.0, 0.0) == doctest::Approx(0.0));
    }
}

TEST_CASE("phase-space grid solver") {
    const double gamma = 0.5, kBT = 2.0;
    const Potential pot = Potential::harmonic(1.0);

    SUBCASE("zero stays zero") {
        WignerGrid w0;
        w0.window = {-3.0, 3.0, -3.0, 3.0};
        w0.nx = 30;
        w0.np = 30;
        w0.values = Eigen::MatrixXd::Zero(30, 30);
        const auto res = oracle::kramers_grid_solve(1.0, pot, gamma, kBT, w0, 0.5);
        CHECK(res.w.values.norm() == 0.0);
    }

    SUBCASE("requested step above the stability limit is rejected") {
        const WignerGrid w0 =
            grid_from_state(StateSpec::gaussian(0, 0, 0.5, 0.5), {-5, 5, -5, 5}, 50, 50);
        oracle::KramersOptions opts;
        opts.max_dt = 1.0;
        CHECK_THROWS_AS(oracle::kramers_grid_solve(1.0, pot, gamma, kBT, w0, 0.5, opts),
                        StepSizeError);
    }

    SUBCASE("probability balance: retained mass plus leakage is one") {
        const WignerGrid w0 =
            grid_from_state(StateSpec::gaussian(1.0, 0.0, 0.4, 0.8), {-6, 6, -7, 7}, 120, 140);
        const auto res = oracle::kramers_grid_solve(1.0, pot, gamma, kBT, w0, 1.0);
        const double initial_mass = w0.normalization();
        CHECK(res.w.normalization() / initial_mass + res.leakage ==
              doctest::Approx(1.0).epsilon(1e-10));
        CHECK(res.leakage < 0.02);
    }

    SUBCASE("signed initial data relaxes toward a nonnegative profile") {
        const StateSpec fock = StateSpec::fock1(1.0, 1.0);
        const WignerGrid w0 = grid_from_state(fock, {-6, 6, -6, 6}, 140, 140);
        std::vector<double> mins;
        oracle::kramers_grid_solve(
            1.0, pot, gamma, kBT, w0, {0.5, 1.0, 2.0, 4.0},
            [&](double, const WignerGrid& w) { mins.push_back(w.values.minCoeff()); });
        REQUIRE(mins.size() == 4);
        CHECK(w0.values.minCoeff() < -0.25); // starts strongly negative
        for (std::size_t i = 1; i < mins.size(); ++i) CHECK(mins[i] >= mins[i - 1] - 1e-12);
        CHECK(mins.back() > -1e-4);
    }
}

TEST_CASE("oracle consistency checks all pass") {
    const auto checks = oracle_consistency_checks(1.0, 1.0, 0.5, 2.0);
    for (const auto& c : checks) {
        INFO(c.name, ": ", c.value, " vs ", c.threshold);
        CHECK(c.pass);
    }
}

TEST_CASE("frozen fixture replay") {
    const std::string path = std::string(QISD_FIXTURE_DIR) + "/oracle_moments.jsonl";
    const bool regen = std::getenv("QISD_REGEN_FIXTURES") != nullptr;
    using nlohmann::json;

    struct Case {
        double mass, omega, gamma, kBT, tau;
        GaussianState init;
    };
    std::vector<Case> cases;
    {
        GaussianState a;
        a.mean << 2.0, 0.0;
        a.cov << 0.5, 0.0, 0.0, 0.5;
        cases.push_back({1.0, 1.0, 0.5, 2.0, 1.0, a});
        cases.push_back({1.0, 1.0, 0.5, 2.0, 5.0, a});
        cases.push_back({1.0, 1.0, 0.5, 2.0, 10.0, a});
        GaussianState b;
        b.mean << -1.0, 1.5;
        b.cov << 0.3, 0.1, 0.1, 0.9;
        cases.push_back({2.0, 0.7, 0.2, 1.3, 3.0, b});
    }

    if (regen) {
        std::ofstream out(path);
        REQUIRE(out.good());
        for (const auto& c : cases) {
            const GaussianState r =
                oracle::moment_ode_evolve(c.mass, c.omega, c.gamma, c.kBT, c.init, c.tau, 1e-4);
            json rec{{"mass", c.mass},
                     {"omega", c.omega},
                     {"gamma", c.gamma},
                     {"kBT", c.kBT},
                     {"tau", c.tau},
                     {"mean0", {c.init.mean[0], c.init.mean[1]}},
                     {"cov0", {c.init.cov(0, 0), c.init.cov(0, 1), c.init.cov(1, 1)}},
                     {"mean", {r.mean[0], r.mean[1]}},
                     {"cov", {r.cov(0, 0), r.cov(0, 1), r.cov(1, 1)}}};
            out << rec.dump() << "\n";
        }
        MESSAGE("fixtures regenerated at ", path);
        return;
    }

    std::ifstream in(path);
    REQUIRE_MESSAGE(in.good(), "missing fixture file ", path);
    std::string line;
    std::size_t idx = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        REQUIRE(idx < cases.size());
        const json rec = json::parse(line);
        const auto& c = cases[idx];
        CHECK(rec["mass"].get<double>() == c.mass);
        CHECK(rec["tau"].get<double>() == c.tau);
        const GaussianState r =
            oracle::moment_ode_evolve(c.mass, c.omega, c.gamma, c.kBT, c.init, c.tau, 1e-4);
        CHECK(r.mean[0] == doctest::Approx(rec["mean"][0].get<double>()).epsilon(1e-12));
        CHECK(r.mean[1] == doctest::Approx(rec["mean"][1].get<double>()).epsilon(1e-12));
        CHECK(r.cov(0, 0) == doctest::Approx(rec["cov"][0].get<double>()).epsilon(1e-12));
        CHECK(r.cov(0, 1) == doctest::Approx(rec["cov"][1].get<double>()).epsilon(1e-12));
        CHECK(r.cov(1, 1) == doctest::Approx(rec["cov"][2].get<double>()).epsilon(1e-12));
        ++idx;
    }
    CHECK(idx == cases.size());
}
