#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "sindympc/errors.hpp"

using namespace sindympc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Index of the library term with the given exponents.
Eigen::Index term(const features::FeatureLibrary& lib, const features::Exponents& e) {
    const auto& t = lib.terms();
    return static_cast<Eigen::Index>(std::find(t.begin(), t.end(), e) - t.begin());
}

MatrixXd seir_xi(const features::FeatureLibrary& lib) {
    MatrixXd xi = MatrixXd::Zero(lib.size(), 4);
    const auto siu = term(lib, {1, 0, 1, 0, 1});
    const auto e   = term(lib, {0, 1, 0, 0, 0});
    const auto i   = term(lib, {0, 0, 1, 0, 0});
    xi(siu, 0) = -1.0;
    xi(siu, 1) = 1.0;
    xi(e, 1)   = -0.2;
    xi(e, 2)   = 0.2;
    xi(i, 2)   = -0.2;
    xi(i, 3)   = 0.2;
    return xi;
}

Trajectory linear_data(const MatrixXd& a, const MatrixXd& b, std::uint64_t seed, Eigen::Index m) {
    std::mt19937_64 rng(seed);
    const MatrixXd  u = fixtures::random_matrix(rng, m, b.cols());
    MatrixXd        x(m, a.rows());
    x.row(0) = fixtures::random_matrix(rng, 1, a.rows());
    for (Eigen::Index k = 0; k + 1 < m; ++k) {
        x.row(k + 1) = (a * x.row(k).transpose() + b * u.row(k).transpose()).transpose();
    }
    return Trajectory(VectorXd::LinSpaced(m, 0.0, 0.1 * static_cast<double>(m - 1)), x, u);
}

} // namespace

TEST_SUITE("sysid") {

TEST_CASE("least squares") {
    CHECK(sysid::least_squares(MatrixXd::Identity(3, 3), Eigen::Vector3d(1, 2, 3)).isApprox(Eigen::Vector3d(1, 2, 3), 1e-15));

    std::mt19937_64 rng(11);
    const MatrixXd  theta = fixtures::random_matrix(rng, 40, 6);
    const MatrixXd  c     = fixtures::random_matrix(rng, 6, 2);
    CHECK((sysid::least_squares(theta, theta * c) - c).norm() <= 1e-10 * c.norm());

    MatrixXd dup(40, 7);
    dup << theta, theta.col(2);
    const MatrixXd y     = fixtures::random_matrix(rng, 40, 1);
    const MatrixXd full  = sysid::least_squares(theta, y);
    const MatrixXd dsol  = sysid::least_squares(dup, y);
    CHECK(dsol.allFinite());
    CHECK((dup * dsol - y).norm() == doctest::Approx((theta * full - y).norm()).epsilon(1e-10));
    // Minimum norm splits the duplicated coefficient evenly.
    CHECK(dsol(2, 0) == doctest::Approx(dsol(6, 0)).epsilon(1e-9));

    MatrixXd bad = theta;
    bad(3, 3)    = std::nan("");
    CHECK_THROWS_AS((void)sysid::least_squares(bad, y), InvalidData);
}

TEST_CASE("stls with lambda 0 is least squares") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const MatrixXd theta = fixtures::random_matrix(rng, 30, 8);
        const MatrixXd y     = fixtures::random_matrix(rng, 30, 3);
        CHECK((sysid::stls(theta, y, 0.0).xi - sysid::least_squares(theta, y)).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("synthetic sparse recovery on the SEIR library") {
    std::mt19937_64 rng(2);
    const auto lib   = features::build_library(4, 1, 3);
    const MatrixXd x = fixtures::random_matrix(rng, 500, 4, 0.0, 1.0);
    const MatrixXd u = fixtures::random_matrix(rng, 500, 1, 0.0, 1.0);
    const MatrixXd theta = features::evaluate(lib, x, u);
    MatrixXd xi_true     = MatrixXd::Zero(56, 4);
    std::uniform_int_distribution<int> pick(0, 55);
    std::uniform_real_distribution<double> mag(0.2, 2.0);
    for (Eigen::Index k = 0; k < 4; ++k) {
        for (int t = 0; t < 4; ++t) {
            xi_true(pick(rng), k) = (t % 2 ? -1.0 : 1.0) * mag(rng);
        }
    }
    const auto fit = sysid::stls(theta, theta * xi_true, 0.1);
    CHECK(((fit.xi.array() != 0.0) == (xi_true.array() != 0.0)).all());
    CHECK((fit.xi - xi_true).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("SEIR recovery and stls invariants") {
    const auto& d = fixtures::seir_training();
    for (double lambda : {0.1, 0.001}) {
        CAPTURE(lambda);
        const auto fit = sysid::fit_sindy(d.traj, d.sys, sysid::DerivativeMode::exact, 3, lambda);
        CHECK(fit.model.active_terms() == 6);
        CHECK(fit.warnings.empty());
        const MatrixXd expected = seir_xi(fit.model.library);
        CHECK(((fit.model.xi.array() != 0.0) == (expected.array() != 0.0)).all());
        CHECK((fit.model.xi - expected).cwiseAbs().maxCoeff() <= 1e-6);

        // Hard sparsity.
        CHECK(((fit.model.xi.array() == 0.0) || (fit.model.xi.array().abs() >= lambda)).all());

        // Fixed point: refitting on the returned support changes nothing.
        const MatrixXd theta = features::evaluate(fit.model.library, d.traj.states(), d.traj.inputs());
        for (Eigen::Index k = 0; k < 4; ++k) {
            std::vector<Eigen::Index> support;
            for (Eigen::Index j = 0; j < 56; ++j) {
                if (fit.model.xi(j, k) != 0.0) support.push_back(j);
            }
            const auto again = sysid::stls(theta(Eigen::all, support), d.xdot.col(k), lambda);
            for (std::size_t s = 0; s < support.size(); ++s) {
                CHECK(again.xi(static_cast<Eigen::Index>(s), 0) == doctest::Approx(fit.model.xi(support[s], k)).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("identified vector field matches the plant") {
    const auto& d   = fixtures::seir_training();
    const auto  fit = sysid::fit_sindy(d.traj, d.xdot, 3, 0.1);
    std::mt19937_64 rng(4);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const VectorXd x = fixtures::random_matrix(rng, 4, 1, 0.0, 1.0);
        const VectorXd u = fixtures::random_matrix(rng, 1, 1, 0.15, 0.5);
        worst = std::max(worst, (fit.model.rhs(x, u) - seir_rhs(x, u[0], SeirParams{})).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("parallel stls is bit-identical to the serial reference") {
    const auto& d     = fixtures::seir_training();
    const auto  lib   = features::build_library(4, 1, 3);
    const auto  theta = features::evaluate(lib, d.traj.states(), d.traj.inputs());
    for (double lambda : {0.0, 0.001, 0.1, 10.0}) {
        const auto par = sysid::stls(theta, d.xdot, lambda);
        const auto ser = sysid::stls_serial(theta, d.xdot, lambda);
        CHECK(par.xi == ser.xi);
        CHECK(par.sweeps == ser.sweeps);
        CHECK(par.pruned == ser.pruned);
    }
}

TEST_CASE("empty models warn") {
    const auto& d   = fixtures::seir_training();
    const auto  fit = sysid::fit_sindy(d.traj, d.xdot, 3, 10.0);
    CHECK(fit.model.active_terms() == 0);
    CHECK(fit.warnings.size() == 4);
    CHECK(fit.regression.empty_states.size() == 4);

    const Trajectory flat(VectorXd::LinSpaced(100, 0, 9.9), MatrixXd::Constant(100, 2, 0.3),
                          VectorXd::LinSpaced(100, 0, 1));
    const auto zero = sysid::fit_sindy(flat, MatrixXd::Zero(100, 2), 2, 0.1);
    CHECK(zero.model.xi.isZero(0.0));
    CHECK(zero.warnings.size() == 2);
}

TEST_CASE("dmdc") {
    SUBCASE("scalar system") {
        const auto m = sysid::fit_dmdc(linear_data(MatrixXd::Constant(1, 1, 0.9), MatrixXd::Constant(1, 1, 0.1), 1, 50));
        CHECK(m.a(0, 0) == doctest::Approx(0.9).epsilon(1e-10));
        CHECK(m.b(0, 0) == doctest::Approx(0.1).epsilon(1e-10));
        CHECK(m.dt == doctest::Approx(0.1));
    }
    SUBCASE("random systems") {
        std::mt19937_64 rng(8);
        for (int trial = 0; trial < 10; ++trial) {
            const MatrixXd a = 0.5 * fixtures::random_matrix(rng, 3, 3);
            const MatrixXd b = fixtures::random_matrix(rng, 3, 2);
            const auto     m = sysid::fit_dmdc(linear_data(a, b, 100 + trial, 40));
            CHECK((m.a - a).cwiseAbs().maxCoeff() <= 1e-8);
            CHECK((m.b - b).cwiseAbs().maxCoeff() <= 1e-8);
        }
    }
    SUBCASE("constant trajectory") {
        const Trajectory flat(VectorXd::LinSpaced(20, 0, 1.9), MatrixXd::Constant(20, 2, 0.4), MatrixXd::Zero(20, 1));
        const auto       m = sysid::fit_dmdc(flat);
        CHECK((m.a * Eigen::Vector2d(0.4, 0.4) - Eigen::Vector2d(0.4, 0.4)).norm() <= 1e-12);
        CHECK(m.spectral_radius() == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("benchmark fit is unstable") {
        CHECK(sysid::fit_dmdc(fixtures::seir_training().traj).spectral_radius() > 1.0);
    }
    SUBCASE("needs two snapshots") {
        const Trajectory one(VectorXd::Zero(1), MatrixXd::Zero(1, 2), MatrixXd::Zero(1, 1));
        CHECK_THROWS_AS((void)sysid::fit_dmdc(one), InsufficientData);
    }
}

TEST_CASE("discrete SINDy with a linear library reduces to DMDc") {
    const auto& d    = fixtures::seir_training();
    const auto  dmd  = sysid::fit_dmdc(d.traj);
    const auto  fit  = sysid::fit_sindy_discrete(d.traj, 1, 0.0, false);
    const MatrixXd g = fit.model.xi;
    CHECK((g.topRows(4).transpose() - dmd.a).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((g.bottomRows(1).transpose() - dmd.b).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("linear simulation") {
    sysid::LinearDiscreteModel m{MatrixXd::Constant(1, 1, 0.5), MatrixXd::Ones(1, 1), 1.0};
    const auto traj = sysid::simulate_linear(m, VectorXd::Zero(1), MatrixXd::Ones(3, 1), 3);
    CHECK(traj.states()(3, 0) == 1.75);

    sysid::LinearDiscreteModel id{MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 1), 0.1};
    const auto flat = sysid::simulate_linear(id, Eigen::Vector2d(1, -1), MatrixXd::Ones(10, 1), 10);
    CHECK((flat.states().rowwise() - Eigen::RowVector2d(1, -1)).isZero(0.0));

    sysid::LinearDiscreteModel grow{MatrixXd::Constant(1, 1, 2.0), MatrixXd::Zero(1, 1), 0.1};
    const auto sim = sysid::try_simulate_linear(grow, VectorXd::Ones(1), MatrixXd::Zero(100, 1), 100);
    REQUIRE(sim.diverged());
    CHECK(*sim.diverged_step == 19); // 2^20 > 1e6
    CHECK_THROWS_AS((void)sysid::simulate_linear(grow, VectorXd::Ones(1), MatrixXd::Zero(100, 1), 100), IntegrationDiverged);
}

TEST_CASE("sparse simulation") {
    const auto& d   = fixtures::seir_training();
    const auto  fit = sysid::fit_sindy(d.traj, d.xdot, 3, 0.1);

    sysid::SparseModel zero = fit.model;
    zero.xi.setZero();
    const auto still = sysid::simulate_sparse(zero, seir_default_x0(), d.traj.inputs(), 0.1, 100);
    CHECK((still.states().rowwise() - seir_default_x0().transpose()).isZero(0.0));

    const auto replay = sysid::simulate_sparse(fit.model, seir_default_x0(), d.traj.inputs(), 0.1, 1000);
    CHECK((replay.states().col(2) - d.traj.states().col(2)).cwiseAbs().maxCoeff() <= 1e-4);

    // Held-out PRBS over days 100..200 with a new seed.
    signals::SignalSpec spec;
    spec.seed          = 12345;
    spec.duration      = 200.0;
    const VectorXd u   = signals::generate(spec).tail(1001);
    const auto truth_x = d.traj.states().row(1000).transpose();
    const auto truth   = integrate_rk4(d.sys, truth_x, u, 0.1, 1000, 100.0);
    const auto pred    = sysid::simulate_sparse(fit.model, truth_x, u, 0.1, 1000, 100.0);
    CHECK(sysid::prediction_rmse(pred, truth, 2).rmse < 1e-3);

    // The linear fit is far off the plant well before it diverges.
    const auto dmd   = sysid::fit_dmdc(d.traj);
    const auto dpred = sysid::try_simulate_linear(dmd, truth_x, u, 1000, 100.0, 2.0);
    CHECK(sysid::prediction_rmse(dpred.trajectory, truth, 2).rmse > 1e-2);
}

TEST_CASE("prediction rmse") {
    const auto& t = fixtures::seir_training().traj;
    CHECK(sysid::prediction_rmse(t, t, 2).rmse == 0.0);

    MatrixXd shifted = t.states();
    shifted.col(1).array() += 0.03;
    const Trajectory off(t.times(), shifted, t.inputs());
    CHECK(sysid::prediction_rmse(off, t, 1).rmse == doctest::Approx(0.03).epsilon(1e-12));

    const auto part = sysid::prediction_rmse(t.head(10), t, 0);
    CHECK(part.saturated);
    CHECK(part.samples == 10);

    MatrixXd bad = t.states();
    bad(5, 0)    = std::numeric_limits<double>::infinity();
    const auto sat = sysid::prediction_rmse(Trajectory(t.times(), bad, t.inputs()), t, 0);
    CHECK(sat.saturated);
    CHECK(std::isfinite(sat.rmse));
    CHECK_THROWS_AS((void)sysid::prediction_rmse(t, t.head(5), 0), ContractViolation);
}

} // TEST_SUITE
