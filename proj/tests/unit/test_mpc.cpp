#include <doctest.h>

#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "sindympc/errors.hpp"
#include "sindympc/mpc.hpp"

using namespace sindympc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
    VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

mpc::MpcConfig scalar_config() {
    mpc::MpcConfig cfg;
    cfg.q_weights               = vec({1.0});
    cfg.reference               = vec({0.0});
    cfg.ru                      = vec({0.0});
    cfg.rdu                     = vec({0.0});
    cfg.input_reference         = vec({0.0});
    cfg.u_min                   = vec({-10.0});
    cfg.u_max                   = vec({10.0});
    cfg.initial_input           = vec({0.0});
    cfg.prediction_horizon_days = 1.0;
    cfg.control_horizon_days    = 1.0;
    cfg.control_sample_days     = 1.0;
    cfg.inner_dt                = 1.0;
    cfg.duration_days           = 5.0;
    return cfg;
}

const SparsePredictor& seir_sindy() {
    static const SparsePredictor p = [] {
        const auto& d = fixtures::seir_training();
        return SparsePredictor(sysid::fit_sindy(d.traj, d.xdot, 3, 0.1).model);
    }();
    return p;
}

} // namespace

TEST_SUITE("mpc") {

TEST_CASE("benchmark config shape") {
    const auto cfg = mpc::MpcConfig::seir_benchmark(true);
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.moves() == 2);
    CHECK(cfg.steps_per_move() == 70);
    CHECK(cfg.horizon_steps() == 140);
    REQUIRE(cfg.state_constraint);
    CHECK(cfg.state_constraint->component == 2);
    CHECK_FALSE(mpc::MpcConfig::seir_benchmark(false).state_constraint);
}

TEST_CASE("config validation") {
    auto cfg = mpc::MpcConfig::seir_benchmark(false);
    cfg.control_horizon_days = 21.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidSpec);
    cfg = mpc::MpcConfig::seir_benchmark(false);
    cfg.control_sample_days = 5.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidSpec);
    cfg = mpc::MpcConfig::seir_benchmark(false);
    cfg.u_min = vec({0.6});
    CHECK_THROWS_AS(cfg.validate(), InvalidSpec);
    cfg = mpc::MpcConfig::seir_benchmark(false);
    cfg.ru = vec({-1.0});
    CHECK_THROWS_AS(cfg.validate(), InvalidSpec);
}

TEST_CASE("zero-order hold expansion") {
    const auto cfg = mpc::MpcConfig::seir_benchmark(false);
    const auto u   = mpc::expand_moves(vec({0.2, 0.4}), cfg);
    REQUIRE(u.rows() == 140);
    CHECK((u.topRows(70).array() == 0.2).all());
    CHECK((u.bottomRows(70).array() == 0.4).all());
    CHECK_THROWS_AS((void)mpc::expand_moves(vec({0.2}), cfg), ContractViolation);

    auto longer                    = cfg;
    longer.prediction_horizon_days = 28.0;
    const auto held                = mpc::expand_moves(vec({0.2, 0.4}), longer);
    CHECK((held.bottomRows(210).array() == 0.4).all());
}

TEST_CASE("predictions") {
    const auto cfg = mpc::MpcConfig::seir_benchmark(false);
    const SystemPredictor still(ControlledSystem{4, 1, [](double, const VectorXd&, const VectorXd&) -> VectorXd {
        return VectorXd::Zero(4);
    }});
    const auto flat = mpc::predict_horizon(still, seir_default_x0(), vec({0.15, 0.5}), cfg);
    CHECK((flat.trajectory.states().rowwise() - seir_default_x0().transpose()).isZero(0.0));

    const auto pred  = mpc::predict_horizon(seir_sindy(), seir_default_x0(), vec({0.5, 0.5}), cfg);
    const auto truth = integrate_rk4(seir_system(SeirParams{}), seir_default_x0(), MatrixXd::Constant(140, 1, 0.5), 0.1, 140);
    CHECK((pred.trajectory.states().col(2) - truth.states().col(2)).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("cost") {
    auto cfg = scalar_config();
    const Trajectory two(vec({0.0, 1.0}), vec({2.0, 3.0}), MatrixXd::Zero(2, 1));
    CHECK(mpc::cost({two, false}, vec({0.0}), vec({0.0}), cfg) == 13.0);
    CHECK(mpc::cost({two, true}, vec({0.0}), vec({0.0}), cfg) == std::numeric_limits<double>::infinity());

    const Trajectory at_ref(vec({0.0, 1.0}), MatrixXd::Zero(2, 1), MatrixXd::Zero(2, 1));
    cfg.ru  = vec({0.7});
    cfg.rdu = vec({0.3});
    CHECK(mpc::cost({at_ref, false}, vec({0.0}), vec({0.0}), cfg) == 0.0);
    // R_u*(u - u_ref)^2 + R_du*(u - u_prev)^2
    cfg.input_reference = vec({0.5});
    CHECK(mpc::cost({at_ref, false}, vec({2.0}), vec({1.0}), cfg) == doctest::Approx(0.7 * 2.25 + 0.3));

    // Only I counts under the benchmark weights.
    const auto seir = mpc::MpcConfig::seir_benchmark(false);
    auto       a    = mpc::predict_horizon(seir_sindy(), seir_default_x0(), vec({0.5, 0.5}), seir);
    MatrixXd   s    = a.trajectory.states();
    s.col(0).array() += 0.1;
    s.col(1).array() += 0.1;
    s.col(3).array() += 0.1;
    const mpc::HorizonPrediction b{Trajectory(a.trajectory.times(), s, a.trajectory.inputs()), false};
    CHECK(mpc::cost(a, vec({0.5, 0.5}), vec({0.5}), seir) == mpc::cost(b, vec({0.5, 0.5}), vec({0.5}), seir));
}

TEST_CASE("constraint violation") {
    auto cfg             = scalar_config();
    cfg.state_constraint = mpc::StateConstraint{0, 0.05};
    const Trajectory one(vec({0.0, 1.0}), vec({0.07, 0.01}), MatrixXd::Zero(2, 1));
    CHECK(mpc::constraint_violation({one, false}, cfg) == doctest::Approx(0.02));
    const Trajectory ok(vec({0.0, 1.0}), vec({0.05, 0.01}), MatrixXd::Zero(2, 1));
    CHECK(mpc::constraint_violation({ok, false}, cfg) <= 0.0);
    CHECK(mpc::constraint_violation({ok, true}, cfg) == std::numeric_limits<double>::infinity());
    cfg.state_constraint.reset();
    CHECK(mpc::constraint_violation({one, false}, cfg) == -std::numeric_limits<double>::infinity());

    auto seir                    = mpc::MpcConfig::seir_benchmark(true);
    seir.prediction_horizon_days = 98.0;
    seir.control_horizon_days    = 14.0;
    const auto p = mpc::predict_horizon(SystemPredictor(seir_system(SeirParams{})), seir_default_x0(), vec({0.5, 0.5}), seir);
    CHECK(mpc::constraint_violation(p, seir) == doctest::Approx(0.065).epsilon(0.1));
}

TEST_CASE("solve_ocp matches the analytic quadratic optimum") {
    // x+ = 0.9 x + 0.5 u; J = sum_k x_k^2 + 0.2 sum (u_i - 1)^2 + 0.1 sum (u_i - u_{i-1})^2.
    const LinearPredictor model({MatrixXd::Constant(1, 1, 0.9), MatrixXd::Constant(1, 1, 0.5), 1.0});
    auto cfg                    = scalar_config();
    cfg.ru                      = vec({0.2});
    cfg.rdu                     = vec({0.1});
    cfg.input_reference         = vec({1.0});
    cfg.prediction_horizon_days = 6.0;
    cfg.control_horizon_days    = 3.0;
    const VectorXd x0     = vec({2.0});
    const VectorXd u_prev = vec({0.4});

    // x_k is affine in the moves: x = f + G v.
    const Eigen::Index M = cfg.moves();
    auto states = [&](const VectorXd& v) {
        return mpc::predict_horizon(model, x0, v, cfg).trajectory.states().col(0).eval();
    };
    const VectorXd f = states(VectorXd::Zero(M));
    MatrixXd       G(f.size(), M);
    for (Eigen::Index i = 0; i < M; ++i) {
        G.col(i) = states(VectorXd::Unit(M, i)) - f;
    }
    MatrixXd D = MatrixXd::Identity(M, M);
    for (Eigen::Index i = 1; i < M; ++i) D(i, i - 1) = -1.0;
    VectorXd e = VectorXd::Zero(M);
    e[0]       = u_prev[0];
    const MatrixXd H   = G.transpose() * G + 0.2 * MatrixXd::Identity(M, M) + 0.1 * D.transpose() * D;
    const VectorXd rhs = -G.transpose() * f + 0.2 * VectorXd::Ones(M) + 0.1 * D.transpose() * e;
    const VectorXd v   = H.ldlt().solve(rhs);

    const auto sol = mpc::solve_ocp(model, x0, VectorXd::Zero(M), u_prev, cfg);
    CHECK((sol.moves - v).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(sol.feasible);
}

TEST_CASE("dominant input weight drives moves to u_min") {
    auto cfg            = mpc::MpcConfig::seir_benchmark(false);
    cfg.ru              = vec({1e9});
    cfg.rdu             = vec({0.0});
    cfg.input_reference = vec({0.0});
    const auto sol      = mpc::solve_ocp(seir_sindy(), seir_default_x0(), vec({0.5, 0.5}), vec({0.5}), cfg);
    CHECK(sol.moves == vec({0.15, 0.15}));
}

TEST_CASE("constrained solve keeps the prediction under the bound") {
    const auto cfg = mpc::MpcConfig::seir_benchmark(true);
    // A state near the uncontrolled peak build-up.
    const auto pre = integrate_rk4(seir_system(SeirParams{}), seir_default_x0(), MatrixXd::Constant(300, 1, 0.5), 0.1, 300);
    for (Eigen::Index row : {Eigen::Index{0}, Eigen::Index{200}, Eigen::Index{300}}) {
        const VectorXd x   = pre.states().row(row).transpose();
        const auto     sol = mpc::solve_ocp(seir_sindy(), x, vec({0.5, 0.5}), vec({0.5}), cfg);
        CHECK(sol.moves.minCoeff() >= 0.15);
        CHECK(sol.moves.maxCoeff() <= 0.5);
        if (!sol.infeasible_problem) {
            const auto p = mpc::predict_horizon(seir_sindy(), x, sol.moves, cfg);
            CHECK(p.trajectory.states().col(2).maxCoeff() <= 0.05 + 1e-4);
            CHECK(sol.feasible);
        }
    }
}

TEST_CASE("infeasible problems return the least violating moves") {
    const auto cfg = mpc::MpcConfig::seir_benchmark(true);
    const VectorXd x = vec({0.7, 0.1, 0.1, 0.1});
    const auto     sol = mpc::solve_ocp(seir_sindy(), x, vec({0.5, 0.5}), vec({0.5}), cfg);
    CHECK(sol.infeasible_problem);
    CHECK_FALSE(sol.feasible);
    const auto probe = mpc::predict_horizon(seir_sindy(), x, vec({0.15, 0.15}), cfg);
    CHECK(sol.violation <= mpc::constraint_violation(probe, cfg));
}

TEST_CASE("no actuation freedom reproduces the uncontrolled plant") {
    auto cfg            = mpc::MpcConfig::seir_benchmark(false);
    cfg.ru              = vec({0.0});
    cfg.rdu             = vec({0.0});
    cfg.u_min           = vec({0.5});
    cfg.u_max           = vec({0.5});
    const auto plant    = seir_system(SeirParams{});
    const auto result   = mpc::run_closed_loop(plant, seir_sindy(), seir_default_x0(), cfg);
    const auto open     = integrate_rk4(plant, seir_default_x0(), MatrixXd::Constant(1000, 1, 0.5), 0.1, 1000);
    CHECK(result.closed_loop.rows() == 1001);
    CHECK(result.closed_loop.states() == open.states());
}

TEST_CASE("closed loop with the true plant as model") {
    const auto cfg   = mpc::MpcConfig::seir_benchmark(false);
    const auto plant = seir_system(SeirParams{});
    const SystemPredictor oracle(plant);
    const auto result = mpc::run_closed_loop(plant, oracle, seir_default_x0(), cfg);
    CHECK(result.steps.size() == 15);
    CHECK_FALSE(result.aborted);
    for (const auto& s : result.steps) {
        CHECK(s.prediction_error <= 1e-10);
        CHECK(s.solution.cost <= s.solution.warm_cost + 1e-12);
    }
    CHECK(mpc::peak(result.closed_loop, 2) == doctest::Approx(0.075).epsilon(0.14));
    CHECK(result.closed_loop.inputs().minCoeff() >= 0.15);
    CHECK(result.closed_loop.inputs().maxCoeff() <= 0.5);
    CHECK(std::isnan(result.row_violation[0]));
    CHECK(result.row_stage_cost.size() == result.closed_loop.rows());

    // Bit-identical on a rerun.
    const auto again = mpc::run_closed_loop(plant, oracle, seir_default_x0(), cfg);
    CHECK(again.closed_loop.states() == result.closed_loop.states());
    CHECK(again.closed_loop.inputs() == result.closed_loop.inputs());
}

TEST_CASE("constraint lowers the peak") {
    const auto plant = seir_system(SeirParams{});
    const auto free  = mpc::run_closed_loop(plant, seir_sindy(), seir_default_x0(), mpc::MpcConfig::seir_benchmark(false));
    const auto tight = mpc::run_closed_loop(plant, seir_sindy(), seir_default_x0(), mpc::MpcConfig::seir_benchmark(true));
    CHECK(mpc::peak(tight.closed_loop, 2) <= mpc::peak(free.closed_loop, 2) + 1e-9);
    CHECK(mpc::peak(tight.closed_loop, 2) <= 0.052);
    CHECK(tight.row_violation.maxCoeff() <= 0.002);
}

TEST_CASE("metrics") {
    const Trajectory t(vec({0, 1, 2}), MatrixXd((MatrixXd(3, 2) << 0, 1, 0, 3, 0, 2).finished()), MatrixXd::Zero(3, 1));
    CHECK(mpc::peak(t, 1) == 3.0);
    CHECK(mpc::cumulative(t, 1) == 4.5);

    mpc::MpcResult r;
    r.closed_loop = Trajectory(VectorXd::LinSpaced(11, 0, 10), MatrixXd::Zero(11, 1), MatrixXd::Zero(11, 1));
    mpc::StepRecord a, b;
    a.time    = 0.0;
    a.applied = vec({0.3});
    b.time    = 7.0;
    b.applied = vec({0.5});
    r.steps   = {a, b};
    CHECK(mpc::control_effort(r, vec({0.5})) == doctest::Approx(0.2 * 7.0));
}

TEST_CASE("box optimizer") {
    const auto res = opt::minimize_box(
        [](const VectorXd& x) { return std::pow(1 - x[0], 2) + 10 * std::pow(x[1] - x[0] * x[0], 2); }, vec({-0.5, 1.5}),
        {vec({-2.0, -2.0}), vec({2.0, 2.0})}, 2000, opt::Options{});
    CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(res.x[1] == doctest::Approx(1.0).epsilon(1e-4));

    // Minimum outside the box lands on the boundary.
    const opt::Box box{vec({-1.0, 0.5}), vec({2.0, 2.0})};
    const auto edge = opt::minimize_box([](const VectorXd& x) { return (x - vec({3.0, 0.0})).squaredNorm(); },
                                        vec({0.0, 1.0}), box, 500, opt::Options{});
    CHECK(edge.x[0] == 2.0);
    CHECK(edge.x[1] == 0.5);

    // min x0 + x1 subject to 1 - x0*x1 <= 0 over [0.1, 3]^2 -> x0 = x1 = 1.
    const opt::Problem p = [](const VectorXd& x) { return opt::Evaluation{x[0] + x[1], 1.0 - x[0] * x[1]}; };
    const auto al = opt::minimize_augmented_lagrangian(p, vec({2.5, 2.5}), {vec({0.1, 0.1}), vec({3.0, 3.0})}, true,
                                                       opt::Options{});
    CHECK(al.x[0] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(al.x[1] == doctest::Approx(1.0).epsilon(1e-3));
}

} // TEST_SUITE
