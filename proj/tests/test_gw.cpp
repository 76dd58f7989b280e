#include <doctest.h>

#include "oracles.hpp"
#include "otqap/gw.hpp"
#include "otqap/linear_ot.hpp"

using namespace otqap;

namespace {

Coupling as_coupling(const Matrix& p)
{
    return Coupling(p, normalize_masses(p.rowwise().sum()), normalize_masses(p.colwise().sum().transpose()));
}

GwProblem identical_problem(Rng& rng, Eigen::Index n)
{
    const Matrix c = oracle::random_symmetric(rng, n);
    return GwProblem(MmSpace(SymCostMatrix(c), Histogram::uniform(n)), MmSpace(SymCostMatrix(c), Histogram::uniform(n)));
}

GwProblem random_problem(Rng& rng, Eigen::Index n, Eigen::Index m, bool features = false)
{
    auto hist = [&](Eigen::Index k) {
        Vector v(k);
        for (Eigen::Index i = 0; i < k; ++i)
            v[i] = 0.2 + rng.uniform();
        return normalize_masses(v);
    };
    auto pts = [&](Eigen::Index k) {
        Matrix p(k, 2);
        for (Eigen::Index i = 0; i < k; ++i)
            p.row(i) << rng.uniform(0, 10), rng.uniform(0, 10);
        return p;
    };
    const Matrix a = pts(n), b = pts(m);
    std::optional<Matrix> fa, fb;
    if (features) {
        fa = a;
        fb = b;
    }
    return GwProblem(MmSpace(SymCostMatrix::euclidean(a), hist(n), fa), MmSpace(SymCostMatrix::euclidean(b), hist(m), fb));
}

bool non_increasing(const std::vector<double>& h)
{
    for (std::size_t k = 1; k < h.size(); ++k) {
        if (h[k] > h[k - 1])
            return false;
    }
    return true;
}

}  // namespace

TEST_CASE("gw_loss examples")
{
    Rng rng(SeedPolicy{1, 0});
    const GwProblem same = identical_problem(rng, 5);
    const Coupling diag(Matrix::Identity(5, 5) / 5.0, Histogram::uniform(5), Histogram::uniform(5));
    CHECK(gw_loss(same, diag) == doctest::Approx(0.0).epsilon(1e-12));

    const GwProblem single(MmSpace(SymCostMatrix(Matrix::Zero(1, 1)), Histogram::uniform(1)),
                           MmSpace(SymCostMatrix(Matrix::Zero(1, 1)), Histogram::uniform(1)));
    CHECK(gw_loss(single, Coupling(Matrix::Ones(1, 1), Histogram::uniform(1), Histogram::uniform(1))) == 0.0);

    for (int t = 0; t < 20; ++t) {
        const GwProblem p = random_problem(rng, 4, 4);
        const Coupling c = as_coupling(oracle::random_plan(rng, 4, 4));
        const GwProblem q(MmSpace(p.source.structure, c.row_marginal()), MmSpace(p.target.structure, c.col_marginal()));
        const double ref = oracle::gw_quadruple(q.c1(), q.c2(), c.plan());
        CHECK(std::abs(gw_loss(q, c) - ref) <= 1e-10 * ref);
    }
}

TEST_CASE("gw_loss rejects mismatched plans")
{
    Rng rng(SeedPolicy{1, 1});
    const GwProblem p = random_problem(rng, 3, 4);
    CHECK_THROWS_AS(gw_loss(p, Coupling::product(Histogram::uniform(4), Histogram::uniform(3))), Error);
}

TEST_CASE("gw_gradient hand instance and finite differences")
{
    Matrix c1(2, 2), c2(2, 2);
    c1 << 0, 1, 1, 0;
    c2 << 0, 2, 2, 0;
    const Histogram u = Histogram::uniform(2);
    const GwProblem p(MmSpace(SymCostMatrix(c1), u), MmSpace(SymCostMatrix(c2), u));
    const Coupling prod = Coupling::product(u, u);
    // G_ik = 2 * sum_jl (c1_ij - c2_kl)^2 / 4; each (i, k) sees differences {0, -2, 1, -1}
    // -> 2 * (0 + 4 + 1 + 1) / 4 = 3
    CHECK(gw_gradient(p, prod).isApprox(Matrix::Constant(2, 2, 3.0), 1e-14));
    CHECK(gw_loss(p, prod) == doctest::Approx(1.5));

    Rng rng(SeedPolicy{1, 2});
    for (int t = 0; t < 10; ++t) {
        const GwProblem r = random_problem(rng, 3, 3);
        const Coupling c = as_coupling(oracle::random_plan(rng, 3, 3));
        const GwProblem q(MmSpace(r.source.structure, c.row_marginal()), MmSpace(r.target.structure, c.col_marginal()));
        const Matrix fd = oracle::gw_finite_difference(q.c1(), q.c2(), c.plan());
        CHECK((gw_gradient(q, c) - fd).cwiseAbs().maxCoeff() <= 1e-4);
    }
}

TEST_CASE("zero-loss plan is a fixed point of the linearization")
{
    Rng rng(SeedPolicy{1, 3});
    const GwProblem p = identical_problem(rng, 6);
    const Coupling diag(Matrix::Identity(6, 6) / 6.0, Histogram::uniform(6), Histogram::uniform(6));
    const LapResult lap = solve_lap(gw_gradient(p, diag));
    for (int i = 0; i < 6; ++i)
        CHECK(lap.assignment.perm[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("solve_gw basics")
{
    Rng rng(SeedPolicy{2, 0});
    for (Eigen::Index n : {5, 10, 20}) {
        const GwSolution s = solve_gw(identical_problem(rng, n));
        CHECK(s.objective <= 1e-8);
        CHECK(s.converged);
    }
    const GwProblem one(MmSpace(SymCostMatrix(Matrix::Zero(1, 1)), Histogram::uniform(1)),
                        MmSpace(SymCostMatrix(Matrix::Zero(1, 1)), Histogram::uniform(1)));
    const GwSolution s1 = solve_gw(one);
    CHECK(s1.coupling.plan()(0, 0) == 1.0);
    CHECK(s1.iterations <= 1);

    const GwProblem p = random_problem(rng, 4, 5);
    CHECK_THROWS_AS(solve_gw(p, Coupling::product(Histogram::uniform(4), Histogram::uniform(5))), Error);
    CHECK_THROWS_AS(solve_gw(GwProblem(p.source, p.target, 3)), Error);
}

TEST_CASE("solve_gw descends and reports a recomputable objective")
{
    Rng rng(SeedPolicy{2, 1});
    for (int t = 0; t < 30; ++t) {
        const GwProblem p = random_problem(rng, rng.uniform_int(2, 9), rng.uniform_int(2, 9));
        const GwSolution s = solve_gw(p);
        CHECK(non_increasing(s.history));
        CHECK(marginal_violation(s.coupling).max() <= tol::coupling_marginal);
        CHECK(std::abs(s.objective - gw_loss(p, s.coupling)) <= 1e-10 * std::max(1.0, s.objective));
        CHECK(s.objective <= gw_loss(p, Coupling::product(p.h(), p.g())) + 1e-12);
    }
}

TEST_CASE("isometries leave the loss unchanged")
{
    Rng rng(SeedPolicy{2, 2});
    Matrix a(6, 2);
    for (Eigen::Index i = 0; i < 6; ++i)
        a.row(i) << rng.uniform(0, 10), rng.uniform(0, 10);
    const double th = 0.7;
    Matrix rot(2, 2);
    rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    const Matrix moved = (a * rot.transpose()).rowwise() + Eigen::RowVector2d(3.0, -1.0);
    const SymCostMatrix ca = SymCostMatrix::euclidean(a);
    const SymCostMatrix cm = SymCostMatrix::euclidean(moved);
    const Histogram u = Histogram::uniform(6);
    const GwProblem p1(MmSpace(ca, u), MmSpace(ca, u));
    const GwProblem p2(MmSpace(ca, u), MmSpace(cm, u));
    for (int t = 0; t < 5; ++t) {
        const Coupling c = sinkhorn_project(oracle::random_plan(rng, 6, 6).array() + 1e-6, u, u);
        CHECK(gw_loss(p1, c) == doctest::Approx(gw_loss(p2, c)).epsilon(1e-12));
    }
}

TEST_CASE("multi-init")
{
    Rng rng(SeedPolicy{3, 0});
    const GwProblem p = random_problem(rng, 6, 5);
    MultiInitConfig cfg;
    cfg.seed = SeedPolicy{77, 0};

    cfg.trials = 0;
    const GwSolution zero = solve_gw_multi_init(p, cfg);
    const GwSolution plain = solve_gw(p);
    CHECK(zero.objective == plain.objective);
    CHECK(zero.coupling.plan() == plain.coupling.plan());
    CHECK(zero.trial_of_origin == -1);

    cfg.trials = 20;
    std::vector<TrialRecord> log;
    const GwSolution best = solve_gw_multi_init(p, cfg, kDefaultMaxIter, kDefaultTol, &log);
    REQUIRE(log.size() == 21);
    CHECK(log[0].trial == -1);
    CHECK(log[0].objective == plain.objective);
    for (const auto& r : log) {
        if (!r.failed)
            CHECK(best.objective <= r.objective);
    }
    CHECK(best.objective <= plain.objective);
    CHECK(marginal_violation(best.coupling).max() <= tol::coupling_marginal);

    cfg.workers = 4;
    const GwSolution parallel = solve_gw_multi_init(p, cfg);
    CHECK(parallel.objective == best.objective);
    CHECK(parallel.trial_of_origin == best.trial_of_origin);
    CHECK(parallel.coupling.plan() == best.coupling.plan());

    const GwProblem same = identical_problem(rng, 7);
    cfg.trials = 5;
    CHECK(solve_gw_multi_init(same, cfg).objective <= 1e-8);

    MultiInitConfig bad;
    bad.trials = -1;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("entropic GW")
{
    Rng rng(SeedPolicy{4, 0});
    // unit-diameter structure so that epsilon = 10 dominates the gradient scale
    const Matrix unit = oracle::random_symmetric(rng, 6) / 20.0;
    const GwProblem same(MmSpace(SymCostMatrix(unit), Histogram::uniform(6)), MmSpace(SymCostMatrix(unit), Histogram::uniform(6)));
    const GwSolution big = solve_entropic_gw(same, EntropicOptions{10.0});
    const Matrix prod = Coupling::product(same.h(), same.g()).plan();
    CHECK((big.coupling.plan() - prod).cwiseAbs().maxCoeff() < 0.5 * prod.maxCoeff());
    CHECK(big.objective >= solve_gw(same).objective);
    CHECK(std::abs(big.objective - gw_loss(same, big.coupling)) <= 1e-10 * std::max(1.0, big.objective));

    const GwProblem one(MmSpace(SymCostMatrix(Matrix::Zero(1, 1)), Histogram::uniform(1)),
                        MmSpace(SymCostMatrix(Matrix::Zero(1, 1)), Histogram::uniform(1)));
    for (double eps : {0.1, 1.0, 10.0})
        CHECK(solve_entropic_gw(one, EntropicOptions{eps}).coupling.plan()(0, 0) == 1.0);

    for (int t = 0; t < 10; ++t) {
        const GwProblem p = random_problem(rng, 5, 6);
        const GwSolution s = solve_entropic_gw(p, EntropicOptions{0.8});
        CHECK(marginal_violation(s.coupling).max() <= tol::coupling_marginal);
    }
    CHECK_THROWS_AS(solve_entropic_gw(same, EntropicOptions{0.0}), Error);
}

TEST_CASE("FGW endpoints and hand instance")
{
    Rng rng(SeedPolicy{5, 0});
    const GwProblem p = random_problem(rng, 5, 6, true);
    const FgwProblem f0 = FgwProblem::from_features(p, 0.0);
    const GwSolution s0 = solve_fgw(f0);
    CHECK(std::abs(s0.objective - solve_exact_ot(f0.feature_cost, p.h(), p.g()).objective) <= 1e-8);

    const GwSolution s1 = solve_fgw(FgwProblem::from_features(p, 1.0));
    const GwSolution g1 = solve_gw(p);
    CHECK(s1.history == g1.history);
    CHECK(s1.coupling.plan() == g1.coupling.plan());

    CHECK_THROWS_AS(FgwProblem::from_features(p, 1.2), Error);
    CHECK_THROWS_AS(FgwProblem(p, Matrix::Zero(6, 5), 0.5), Error);
    const GwProblem bare = random_problem(rng, 3, 3);
    CHECK_THROWS_AS(FgwProblem::from_features(bare, 0.5), Error);

    // 2x2 uniform: couplings are [[s, 1/2 - s], [1/2 - s, s]] for s in [0, 1/2]
    Matrix c1(2, 2), c2(2, 2), m(2, 2);
    c1 << 0, 1, 1, 0;
    c2 << 0, 3, 3, 0;
    m << 0.2, 1.0, 0.7, 0.1;
    const Histogram u = Histogram::uniform(2);
    const GwProblem hp(MmSpace(SymCostMatrix(c1), u, Matrix::Zero(2, 1)), MmSpace(SymCostMatrix(c2), u, Matrix::Zero(2, 1)));
    const FgwProblem half(hp, m, 0.5);
    double grid_best = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 100000; ++k) {
        const double s = 0.5 * k / 100000.0;
        Matrix pl(2, 2);
        pl << s, 0.5 - s, 0.5 - s, s;
        const double v = 0.5 * m.cwiseProduct(pl).sum() + 0.5 * oracle::gw_quadruple(c1, c2, pl);
        grid_best = std::min(grid_best, v);
    }
    CHECK(std::abs(solve_fgw(half).objective - grid_best) <= 1e-4);
}

TEST_CASE("FGW descends")
{
    Rng rng(SeedPolicy{5, 1});
    for (double alpha : {0.0, 0.3, 0.5, 0.7, 1.0}) {
        const GwProblem p = random_problem(rng, 6, 5, true);
        const FgwProblem f = FgwProblem::from_features(p, alpha);
        const GwSolution s = solve_fgw(f);
        CHECK(non_increasing(s.history));
        CHECK(std::abs(s.objective - fgw_loss(f, s.coupling)) <= 1e-10 * std::max(1.0, s.objective));
        CHECK(marginal_violation(s.coupling).max() <= tol::coupling_marginal);
    }
}
