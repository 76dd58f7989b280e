#include <algorithm>
#include <numeric>
#include <tuple>

#include "otqap/cqap.hpp"

namespace otqap {

namespace {

void check_dims(const CqapInstance& inst, const AssignmentMatrix& x)
{
    if (x.rows() != inst.agents() || x.cols() != inst.tasks())
        throw Error(ErrorCode::DimensionMismatch, "assignment is " + std::to_string(x.rows()) + "x" +
                                                      std::to_string(x.cols()) + ", instance " +
                                                      std::to_string(inst.agents()) + "x" +
                                                      std::to_string(inst.tasks()));
}

Vector to_vector(const std::vector<int>& v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = v[i];
    return out;
}

}  // namespace

void CqapInstance::validate() const
{
    const Eigen::Index n = agents();
    const Eigen::Index m = tasks();
    if (n < 1 || m < 1)
        throw Error(ErrorCode::EmptyInput, "instance needs at least one agent and one task");
    if (agent_pos.rows() != n || task_pos.rows() != m || agent_pos.cols() != task_pos.cols())
        throw Error(ErrorCode::DimensionMismatch, "positions do not match agent/task counts");
    if (flow.rows() != n || flow.cols() != n || distance.rows() != m || distance.cols() != m)
        throw Error(ErrorCode::DimensionMismatch, "flow must be n x n and distance m x m");
    if (linear_cost.rows() != n || linear_cost.cols() != m)
        throw Error(ErrorCode::DimensionMismatch, "linear cost must be n x m");
    for (int u : capacity) {
        if (u < 1)
            throw Error(ErrorCode::InvalidArgument, "capacities must be >= 1");
    }
    for (int d : demand) {
        if (d < 1)
            throw Error(ErrorCode::InvalidArgument, "demands must be >= 1");
    }
    require_finite(linear_cost, "linear cost");
    // Symmetry and finiteness are enforced by SymCostMatrix.
    const SymCostMatrix f(flow);
    const SymCostMatrix d(distance);
    if (f.entries().diagonal().cwiseAbs().maxCoeff() != 0.0 || d.entries().diagonal().cwiseAbs().maxCoeff() != 0.0)
        throw Error(ErrorCode::InvalidArgument, "flow and distance need a zero diagonal");
}

AssignmentMatrix::AssignmentMatrix(Eigen::MatrixXi v) : x(std::move(v))
{
    if (((x.array() != 0) && (x.array() != 1)).any())
        throw Error(ErrorCode::InvalidArgument, "assignment entries must be 0 or 1");
}

double cqap_objective(const CqapInstance& inst, const AssignmentMatrix& x)
{
    check_dims(inst, x);
    const Eigen::Index n = inst.agents();
    const Eigen::Index m = inst.tasks();
    double quad = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            if (x(i, j) == 0)
                continue;
            for (Eigen::Index k = 0; k < n; ++k) {
                for (Eigen::Index l = 0; l < m; ++l) {
                    if (x(k, l) != 0)
                        quad += inst.flow(i, k) * inst.distance(j, l);
                }
            }
        }
    }
    double lin = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            if (x(i, j) != 0)
                lin += inst.linear_cost(i, j);
        }
    }
    return quad + lin;
}

Feasibility check_feasible(const CqapInstance& inst, const AssignmentMatrix& x)
{
    check_dims(inst, x);
    Feasibility out;
    for (Eigen::Index i = 0; i < inst.agents(); ++i) {
        double load = 0.0;
        for (Eigen::Index j = 0; j < inst.tasks(); ++j)
            load += inst.demand[j] * x(i, j);
        const double cap = inst.capacity[i];
        if (load > cap) {
            out.ok = false;
            out.violations.push_back({Violation::Kind::Capacity, static_cast<int>(i), load, cap, cap - load});
        }
    }
    for (Eigen::Index j = 0; j < inst.tasks(); ++j) {
        double cover = 0.0;
        for (Eigen::Index i = 0; i < inst.agents(); ++i)
            cover += inst.capacity[i] * x(i, j);
        const double need = inst.demand[j];
        if (cover < need) {
            out.ok = false;
            out.violations.push_back({Violation::Kind::Demand, static_cast<int>(j), cover, need, cover - need});
        }
    }
    return out;
}

GwProblem to_gw_problem(const CqapInstance& inst)
{
    MmSpace source(SymCostMatrix(inst.flow), normalize_masses(to_vector(inst.capacity)), inst.agent_pos);
    MmSpace target(SymCostMatrix(inst.distance), normalize_masses(to_vector(inst.demand)), inst.task_pos);
    return GwProblem(std::move(source), std::move(target), 2);
}

FgwProblem to_fgw_problem(const CqapInstance& inst, double alpha)
{
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw Error(ErrorCode::AlphaOutOfRange, "alpha must lie in [0, 1], got " + std::to_string(alpha));
    return FgwProblem(to_gw_problem(inst), inst.linear_cost, alpha);
}

double coupling_scale(const CqapInstance& inst)
{
    return std::accumulate(inst.capacity.begin(), inst.capacity.end(), 0.0);
}

double coupling_objective(const CqapInstance& inst, const Coupling& plan)
{
    if (plan.rows() != inst.agents() || plan.cols() != inst.tasks())
        throw Error(ErrorCode::DimensionMismatch, "coupling shape does not match the instance");
    const Matrix x = coupling_scale(inst) * plan.plan();
    const Matrix xdx = x * inst.distance * x.transpose();
    return inst.flow.cwiseProduct(xdx).sum() + inst.linear_cost.cwiseProduct(x).sum();
}

namespace {

// Depth-first packing search: largest demands first, agents tried in order of
// decreasing plan mass.
struct PackingSearch {
    const CqapInstance& inst;
    const Matrix& plan;
    std::vector<Eigen::Index> tasks;
    std::vector<long> residual;
    std::vector<Eigen::Index> owner;
    long long nodes = 0;
    long long cap;

    bool run(std::size_t k)
    {
        if (k == tasks.size())
            return true;
        if (++nodes > cap)
            return false;
        const Eigen::Index j = tasks[k];
        std::vector<Eigen::Index> agents;
        for (Eigen::Index i = 0; i < inst.agents(); ++i) {
            if (residual[i] >= inst.demand[j])
                agents.push_back(i);
        }
        std::stable_sort(agents.begin(), agents.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return plan(a, j) > plan(b, j); });
        for (Eigen::Index i : agents) {
            residual[i] -= inst.demand[j];
            owner[j] = i;
            if (run(k + 1))
                return true;
            residual[i] += inst.demand[j];
            if (nodes > cap)
                return false;
        }
        return false;
    }
};

constexpr long long kRepairNodeCap = 1'000'000;

}  // namespace

AssignmentMatrix round_coupling(const CqapInstance& inst, const Coupling& plan)
{
    if (plan.rows() != inst.agents() || plan.cols() != inst.tasks())
        throw Error(ErrorCode::DimensionMismatch, "coupling shape does not match the instance");
    const Eigen::Index n = inst.agents();
    const Eigen::Index m = inst.tasks();

    std::vector<std::tuple<double, Eigen::Index, Eigen::Index>> order;
    order.reserve(static_cast<std::size_t>(n * m));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j)
            order.emplace_back(plan.plan()(i, j), i, j);
    }
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (std::get<0>(a) != std::get<0>(b))
            return std::get<0>(a) > std::get<0>(b);
        return std::tie(std::get<1>(a), std::get<2>(a)) < std::tie(std::get<1>(b), std::get<2>(b));
    });

    AssignmentMatrix x(n, m);
    std::vector<long> load(static_cast<std::size_t>(n), 0);
    std::vector<char> placed(static_cast<std::size_t>(m), 0);
    Eigen::Index left = m;
    for (const auto& [mass, i, j] : order) {
        if (placed[j] || load[i] + inst.demand[j] > inst.capacity[i])
            continue;
        x(i, j) = 1;
        load[i] += inst.demand[j];
        placed[j] = 1;
        if (--left == 0)
            return x;
    }

    for (Eigen::Index j = 0; j < m; ++j) {
        if (placed[j])
            continue;
        Eigen::Index best = -1;
        long best_residual = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
            const long residual = inst.capacity[i] - load[i];
            if (residual >= inst.demand[j] && residual > best_residual) {
                best = i;
                best_residual = residual;
            }
        }
        if (best < 0)
            continue;
        x(best, j) = 1;
        load[best] += inst.demand[j];
        placed[j] = 1;
        --left;
    }
    if (left == 0)
        return x;

    PackingSearch search{inst, plan.plan(), {}, {}, std::vector<Eigen::Index>(static_cast<std::size_t>(m), -1), 0,
                         kRepairNodeCap};
    search.tasks.resize(static_cast<std::size_t>(m));
    std::iota(search.tasks.begin(), search.tasks.end(), 0);
    std::stable_sort(search.tasks.begin(), search.tasks.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return inst.demand[a] > inst.demand[b]; });
    search.residual.assign(inst.capacity.begin(), inst.capacity.end());
    if (!search.run(0))
        return x;
    AssignmentMatrix packed(n, m);
    for (Eigen::Index j = 0; j < m; ++j)
        packed(search.owner[j], j) = 1;
    return packed;
}

bool has_greedy_packing(const CqapInstance& inst)
{
    std::vector<Eigen::Index> tasks(static_cast<std::size_t>(inst.tasks()));
    std::iota(tasks.begin(), tasks.end(), 0);
    std::stable_sort(tasks.begin(), tasks.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return inst.demand[a] > inst.demand[b]; });
    std::vector<long> residual(inst.capacity.begin(), inst.capacity.end());
    for (Eigen::Index j : tasks) {
        long best_slack = -1;
        std::size_t best = 0;
        for (std::size_t i = 0; i < residual.size(); ++i) {
            const long slack = residual[i] - inst.demand[j];
            if (slack >= 0 && (best_slack < 0 || slack < best_slack)) {
                best_slack = slack;
                best = i;
            }
        }
        if (best_slack < 0)
            return false;
        residual[best] -= inst.demand[j];
    }
    return true;
}

double gap_percent(double approx, double exact)
{
    if (!(exact > 0.0))
        throw Error(ErrorCode::NonPositiveExact, "gap needs a positive exact objective");
    return (approx - exact) / exact * 100.0;
}

}  // namespace otqap
