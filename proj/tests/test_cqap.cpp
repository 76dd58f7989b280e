#include <doctest.h>

#include "oracles.hpp"
#include "otqap/cqap.hpp"

using namespace otqap;

namespace {

CqapInstance tiny(int u, int d, double c)
{
    CqapInstance inst;
    inst.agent_pos = Matrix::Zero(1, 2);
    inst.task_pos = Matrix::Zero(1, 2);
    inst.capacity = {u};
    inst.demand = {d};
    inst.flow = Matrix::Zero(1, 1);
    inst.distance = Matrix::Zero(1, 1);
    inst.linear_cost = Matrix::Constant(1, 1, c);
    return inst;
}

CqapInstance two_by_two()
{
    CqapInstance inst = tiny(1, 1, 0.0);
    inst.agent_pos = Matrix::Zero(2, 2);
    inst.task_pos = Matrix::Zero(2, 2);
    inst.capacity = {1, 1};
    inst.demand = {1, 1};
    inst.flow.resize(2, 2);
    inst.flow << 0, 1, 1, 0;
    inst.distance.resize(2, 2);
    inst.distance << 0, 2, 2, 0;
    inst.linear_cost = Matrix::Zero(2, 2);
    return inst;
}

}  // namespace

TEST_CASE("cqap_objective examples")
{
    const CqapInstance one = tiny(5, 3, 7.0);
    CHECK(cqap_objective(one, AssignmentMatrix(1, 1)) == 0.0);
    AssignmentMatrix x(1, 1);
    x(0, 0) = 1;
    CHECK(cqap_objective(one, x) == 7.0);

    const CqapInstance two = two_by_two();
    CHECK(cqap_objective(two, AssignmentMatrix(Eigen::MatrixXi::Identity(2, 2))) == 4.0);
    CHECK_THROWS_AS(cqap_objective(two, AssignmentMatrix(3, 2)), Error);

    Rng rng(SeedPolicy{1, 0});
    for (int t = 0; t < 50; ++t) {
        const CqapInstance inst = oracle::random_instance(rng, 4, 3);
        Eigen::MatrixXi r(4, 3);
        for (Eigen::Index i = 0; i < 4; ++i)
            for (Eigen::Index j = 0; j < 3; ++j)
                r(i, j) = static_cast<int>(rng.uniform_int(0, 1));
        CHECK(cqap_objective(inst, AssignmentMatrix(r)) ==
              doctest::Approx(oracle::cqap_direct(inst, r)).epsilon(1e-12));
    }
}

TEST_CASE("check_feasible")
{
    const CqapInstance one = tiny(5, 3, 0.0);
    const Feasibility empty = check_feasible(one, AssignmentMatrix(1, 1));
    CHECK_FALSE(empty.ok);
    REQUIRE(empty.violations.size() == 1);
    CHECK(empty.violations[0].kind == Violation::Kind::Demand);

    AssignmentMatrix x(1, 1);
    x(0, 0) = 1;
    CHECK(check_feasible(one, x).ok);

    const Feasibility over = check_feasible(tiny(2, 3, 0.0), x);
    CHECK_FALSE(over.ok);
    CHECK(over.violations[0].kind == Violation::Kind::Capacity);
    CHECK(over.violations[0].lhs == 3.0);
    CHECK(over.violations[0].rhs == 2.0);
    CHECK(over.violations[0].slack == -1.0);

    Rng rng(SeedPolicy{1, 1});
    for (int t = 0; t < 100; ++t) {
        const CqapInstance inst = oracle::random_instance(rng, 3, 3);
        Eigen::MatrixXi r(3, 3);
        for (Eigen::Index i = 0; i < 3; ++i)
            for (Eigen::Index j = 0; j < 3; ++j)
                r(i, j) = static_cast<int>(rng.uniform_int(0, 1));
        CHECK(check_feasible(inst, AssignmentMatrix(r)).ok == oracle::cqap_feasible(inst, r));
    }
}

TEST_CASE("to_gw_problem marginals")
{
    CqapInstance inst = two_by_two();
    CHECK(to_gw_problem(inst).h()[0] == 0.5);
    CHECK(to_gw_problem(inst).g()[1] == 0.5);
    inst.capacity = {2, 1};
    inst.demand = {1, 2};
    const GwProblem p = to_gw_problem(inst);
    CHECK(p.h()[0] * 3.0 == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(p.g()[0] * 3.0 == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p.source.features.has_value());

    Rng rng(SeedPolicy{1, 2});
    for (int t = 0; t < 20; ++t) {
        const CqapInstance r = oracle::random_instance(rng, 5, 4);
        const GwProblem q = to_gw_problem(r);
        CHECK(std::abs(q.h().weights().sum() - 1.0) <= tol::histogram_sum);
        long su = 0;
        for (int u : r.capacity)
            su += u;
        for (Eigen::Index i = 0; i < 5; ++i)
            CHECK(q.h()[i] == doctest::Approx(static_cast<double>(r.capacity[i]) / su).epsilon(1e-15));
        CHECK(gw_loss(q, Coupling::product(q.h(), q.g())) >= 0.0);
    }
}

TEST_CASE("to_fgw_problem")
{
    const CqapInstance inst = two_by_two();
    CHECK(to_fgw_problem(inst, 0.7).feature_cost == inst.linear_cost);
    CHECK_THROWS_AS(to_fgw_problem(inst, -0.1), Error);
    CHECK_THROWS_AS(to_fgw_problem(inst, 1.5), Error);
}

TEST_CASE("coupling_objective")
{
    const CqapInstance one = tiny(4, 4, 2.5);
    const Coupling c(Matrix::Ones(1, 1), Histogram::uniform(1), Histogram::uniform(1));
    CHECK(coupling_scale(one) == 4.0);
    CHECK(coupling_objective(one, c) == 4.0 * 2.5);

    CqapInstance flat = two_by_two();
    flat.flow.setZero();
    flat.distance.setZero();
    const Histogram u = Histogram::uniform(2);
    CHECK(coupling_objective(flat, Coupling::product(u, u)) == 0.0);

    // uniform 2x2: X = 2 * 0.25 everywhere = 0.5; sum F_ik D_jl X_ij X_kl = 0.25 * sum F * sum D = 0.25 * 2 * 4
    const CqapInstance two = two_by_two();
    CHECK(coupling_objective(two, Coupling::product(u, u)) == doctest::Approx(2.0));
}

TEST_CASE("round_coupling")
{
    const CqapInstance two = two_by_two();
    const Coupling diag(Matrix::Identity(2, 2) / 2.0, Histogram::uniform(2), Histogram::uniform(2));
    CHECK(round_coupling(two, diag).x == Eigen::MatrixXi::Identity(2, 2));

    const CqapInstance one = tiny(5, 3, 1.0);
    const Coupling c(Matrix::Ones(1, 1), Histogram::uniform(1), Histogram::uniform(1));
    CHECK(round_coupling(one, c).x(0, 0) == 1);

    Rng rng(SeedPolicy{1, 3});
    int feasible = 0;
    for (int t = 0; t < 100; ++t) {
        const CqapInstance inst = oracle::random_instance(rng, 3, 3);
        const oracle::BruteForce bf = oracle::cqap_brute_force(inst);
        if (!bf.feasible)
            continue;
        const GwProblem p = to_gw_problem(inst);
        const AssignmentMatrix x = round_coupling(inst, Coupling::product(p.h(), p.g()));
        if (check_feasible(inst, x).ok) {
            ++feasible;
            CHECK(cqap_objective(inst, x) >= bf.best - 1e-9);
        }
    }
    CHECK(feasible > 0);
}

TEST_CASE("oracle examples")
{
    const OracleResult r = solve_exact_enum(tiny(5, 3, 7.0));
    CHECK(r.objective == 7.0);
    CHECK(r.proven);
    CHECK(r.x.x(0, 0) == 1);
    CHECK_THROWS_AS(solve_exact_enum(tiny(2, 3, 1.0)), Error);
    try {
        solve_exact_enum(tiny(2, 3, 1.0));
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Infeasible);
    }
}

TEST_CASE("oracle equals unpruned brute force")
{
    Rng rng(SeedPolicy{1, 4});
    int checked = 0;
    for (int t = 0; t < 150; ++t) {
        const int n = static_cast<int>(rng.uniform_int(1, 4));
        const int m = static_cast<int>(rng.uniform_int(1, 12 / n));
        const CqapInstance inst = oracle::random_instance(rng, n, m);
        const oracle::BruteForce bf = oracle::cqap_brute_force(inst);
        if (!bf.feasible) {
            CHECK_THROWS_AS(solve_exact_enum(inst), Error);
            continue;
        }
        const OracleResult r = solve_exact_enum(inst);
        CHECK(r.proven);
        CHECK(r.objective == bf.best);
        bool in_tie_set = false;
        for (const auto& x : bf.optimizers)
            in_tie_set |= x == r.x.x;
        CHECK(in_tie_set);
        ++checked;
    }
    CHECK(checked > 50);
}

TEST_CASE("oracle node cap")
{
    Rng rng(SeedPolicy{1, 5});
    CqapInstance inst = oracle::random_instance(rng, 4, 3, 12);
    while (!oracle::cqap_brute_force(inst).feasible)
        inst = oracle::random_instance(rng, 4, 3, 12);
    const OracleResult full = solve_exact_enum(inst);
    REQUIRE(full.nodes > 3);
    try {
        const OracleResult capped = solve_exact_enum(inst, 3);
        CHECK_FALSE(capped.proven);
        CHECK(capped.objective >= full.objective);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoConvergence);
    }
    CHECK(oracle_search_estimate(inst) >= 1.0);
}

TEST_CASE("gap_percent")
{
    CHECK(gap_percent(5.0, 5.0) == 0.0);
    CHECK(gap_percent(11.0, 10.0) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(gap_percent(981.63, 981.63) == 0.0);
    CHECK(gap_percent(9.0, 10.0) < 0.0);
    CHECK_THROWS_AS(gap_percent(1.0, 0.0), Error);
}
