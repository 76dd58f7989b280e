#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "otqap/core.hpp"
#include "otqap/gw.hpp"

namespace otqap {

/// Capacitated QAP: agents (facilities) with capacities u, tasks (locations) with
/// demands d, flow F between agents, distance D between tasks, linear cost C.
struct CqapInstance {
    std::string test_id = "custom";
    Matrix agent_pos;  // n x 2
    Matrix task_pos;   // m x 2
    std::vector<int> capacity;
    std::vector<int> demand;
    Matrix flow;         // F, n x n
    Matrix distance;     // D, m x m
    Matrix linear_cost;  // C, n x m
    SeedPolicy seed{};

    Eigen::Index agents() const { return static_cast<Eigen::Index>(capacity.size()); }
    Eigen::Index tasks() const { return static_cast<Eigen::Index>(demand.size()); }

    /// Throws DimensionMismatch / NotSymmetric / InvalidArgument on a malformed instance.
    void validate() const;
};

/// Binary assignment x(i, j) = 1 when agent i serves task j.
struct AssignmentMatrix {
    Eigen::MatrixXi x;

    AssignmentMatrix() = default;
    AssignmentMatrix(Eigen::Index n, Eigen::Index m) : x(Eigen::MatrixXi::Zero(n, m)) {}
    explicit AssignmentMatrix(Eigen::MatrixXi v);

    Eigen::Index rows() const { return x.rows(); }
    Eigen::Index cols() const { return x.cols(); }
    int operator()(Eigen::Index i, Eigen::Index j) const { return x(i, j); }
    int& operator()(Eigen::Index i, Eigen::Index j) { return x(i, j); }
    friend bool operator==(const AssignmentMatrix& a, const AssignmentMatrix& b) { return a.x == b.x; }
};

/// sum F(i,k) D(j,l) x(i,j) x(k,l) + sum C(i,j) x(i,j), by direct summation.
double cqap_objective(const CqapInstance& inst, const AssignmentMatrix& x);

struct Violation {
    enum class Kind { Capacity, Demand } kind;
    int index = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    /// Negative when violated: rhs - lhs for capacity rows, lhs - rhs for demand columns.
    double slack = 0.0;
};

struct Feasibility {
    bool ok = true;
    std::vector<Violation> violations;
};

Feasibility check_feasible(const CqapInstance& inst, const AssignmentMatrix& x);

/// Source mm-space (F, u / sum u, agent positions), target (D, d / sum d, task positions).
GwProblem to_gw_problem(const CqapInstance& inst);
/// As to_gw_problem with feature cost M = C.
FgwProblem to_fgw_problem(const CqapInstance& inst, double alpha);

/// Mass scale S = sum of capacities, used to express a coupling in capacity units.
double coupling_scale(const CqapInstance& inst);

/// Relaxed CQAP value of X = S * plan.
double coupling_objective(const CqapInstance& inst, const Coupling& plan);

/// Greedy by descending plan mass (ties lowest (i, j)) under capacity; a task is
/// covered by the first agent it fits. Uncovered tasks then go to the agent with the
/// largest residual capacity. If some task still fits nowhere, a bounded packing
/// search ordered by plan mass replaces the result. Feasibility is not guaranteed.
AssignmentMatrix round_coupling(const CqapInstance& inst, const Coupling& plan);

struct OracleResult {
    AssignmentMatrix x;
    double objective = 0.0;
    bool proven = false;
    long long nodes = 0;
};

inline constexpr long long kDefaultNodeCap = 100'000'000;
inline constexpr int kOracleMaxAgents = 16;

/// Depth-first search over task columns with capacity pruning and a cost bound.
/// Throws Infeasible when a complete search finds no assignment.
OracleResult solve_exact_enum(const CqapInstance& inst, long long node_cap = kDefaultNodeCap);

/// Size of the single-assignment search space, prod_j #{i : u_i >= d_j}. Used to
/// skip the oracle before starting when it exceeds the node cap.
double oracle_search_estimate(const CqapInstance& inst);

/// Quick constructive feasibility certificate (best-fit decreasing).
bool has_greedy_packing(const CqapInstance& inst);

/// (approx - exact) / exact * 100. Throws NonPositiveExact.
double gap_percent(double approx, double exact);

}  // namespace otqap
