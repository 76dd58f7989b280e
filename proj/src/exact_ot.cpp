#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "otqap/linear_ot.hpp"

namespace otqap {

namespace {

struct BasicCell {
    int row;
    int col;
    double flow;
};

// Spanning-tree basis of the transportation problem. Nodes 0..n-1 are rows,
// n..n+m-1 are columns; every basic cell is a tree edge.
class TransportSimplex {
public:
    TransportSimplex(const Matrix& cost, const Vector& supply, const Vector& demand)
        : cost_(cost), n_(static_cast<int>(cost.rows())), m_(static_cast<int>(cost.cols())),
          cell_of_(n_ * m_, -1), u_(n_), v_(m_), parent_edge_(n_ + m_), parent_node_(n_ + m_),
          depth_(n_ + m_), adj_(n_ + m_)
    {
        northwest_corner(supply, demand);
        scale_ = std::max(1.0, cost_.cwiseAbs().maxCoeff());
    }

    long solve()
    {
        // Consecutive degenerate pivots before switching to Bland's rule.
        const int degenerate_limit = 50 + 2 * (n_ + m_);
        const double eps = 1e-12 * scale_;
        int degenerate_run = 0;
        long pivots = 0;
        const long pivot_cap = 1000L * (n_ + m_) * (n_ + m_) + 10000;
        for (;;) {
            build_tree();
            const bool bland = degenerate_run > degenerate_limit;
            int ei = -1;
            int ej = -1;
            double best = -eps;
            for (int i = 0; i < n_ && !(bland && ei >= 0); ++i) {
                for (int j = 0; j < m_; ++j) {
                    if (cell_of_[i * m_ + j] >= 0)
                        continue;
                    const double r = cost_(i, j) - u_[i] - v_[j];
                    if (r < best) {
                        best = r;
                        ei = i;
                        ej = j;
                        if (bland)
                            break;
                    }
                }
            }
            if (ei < 0)
                return pivots;
            if (++pivots > pivot_cap)
                throw Error(ErrorCode::NoConvergence, "transportation simplex pivot cap reached");
            const double theta = pivot(ei, ej);
            degenerate_run = theta > 0.0 ? 0 : degenerate_run + 1;
        }
    }

    Matrix plan() const
    {
        Matrix p = Matrix::Zero(n_, m_);
        for (const auto& c : cells_)
            p(c.row, c.col) = c.flow;
        return p;
    }

private:
    void add_cell(int i, int j, double flow)
    {
        cell_of_[i * m_ + j] = static_cast<int>(cells_.size());
        cells_.push_back({i, j, flow});
    }

    void northwest_corner(const Vector& supply, const Vector& demand)
    {
        Vector a = supply;
        Vector b = demand;
        int i = 0;
        int j = 0;
        cells_.reserve(n_ + m_ - 1);
        for (;;) {
            const double x = std::min(a[i], b[j]);
            add_cell(i, j, std::max(0.0, x));
            a[i] -= x;
            b[j] -= x;
            if (i == n_ - 1 && j == m_ - 1)
                break;
            if (j == m_ - 1 || (i < n_ - 1 && a[i] <= b[j]))
                ++i;
            else
                ++j;
        }
    }

    // Potentials u_i + v_j = c_ij on the tree, plus parent pointers for cycle search.
    void build_tree()
    {
        for (auto& a : adj_)
            a.clear();
        for (int k = 0; k < static_cast<int>(cells_.size()); ++k) {
            adj_[cells_[k].row].push_back(k);
            adj_[n_ + cells_[k].col].push_back(k);
        }
        std::fill(depth_.begin(), depth_.end(), -1);
        stack_.clear();
        stack_.push_back(0);
        depth_[0] = 0;
        parent_edge_[0] = -1;
        parent_node_[0] = -1;
        u_[0] = 0.0;
        while (!stack_.empty()) {
            const int node = stack_.back();
            stack_.pop_back();
            for (int k : adj_[node]) {
                const auto& c = cells_[k];
                const int other = node < n_ ? n_ + c.col : c.row;
                if (depth_[other] >= 0)
                    continue;
                depth_[other] = depth_[node] + 1;
                parent_edge_[other] = k;
                parent_node_[other] = node;
                if (other < n_)
                    u_[c.row] = cost_(c.row, c.col) - v_[c.col];
                else
                    v_[c.col] = cost_(c.row, c.col) - u_[c.row];
                stack_.push_back(other);
            }
        }
    }

    // Moves mass around the cycle closed by the entering cell; returns the step.
    double pivot(int ei, int ej)
    {
        // Path from column node back to row node through the tree, edges in order.
        int a = ei;
        int b = n_ + ej;
        path_a_.clear();
        path_b_.clear();
        while (depth_[a] > depth_[b]) {
            path_a_.push_back(parent_edge_[a]);
            a = parent_node_[a];
        }
        while (depth_[b] > depth_[a]) {
            path_b_.push_back(parent_edge_[b]);
            b = parent_node_[b];
        }
        while (a != b) {
            path_a_.push_back(parent_edge_[a]);
            a = parent_node_[a];
            path_b_.push_back(parent_edge_[b]);
            b = parent_node_[b];
        }
        cycle_.assign(path_b_.begin(), path_b_.end());
        cycle_.insert(cycle_.end(), path_a_.rbegin(), path_a_.rend());

        // Even positions lose mass, odd positions gain it.
        double theta = std::numeric_limits<double>::infinity();
        int leave = -1;
        for (std::size_t p = 0; p < cycle_.size(); p += 2) {
            const auto& c = cells_[cycle_[p]];
            const bool better = c.flow < theta ||
                                (c.flow == theta && leave >= 0 &&
                                 (c.row < cells_[leave].row ||
                                  (c.row == cells_[leave].row && c.col < cells_[leave].col)));
            if (better) {
                theta = c.flow;
                leave = cycle_[p];
            }
        }
        for (std::size_t p = 0; p < cycle_.size(); ++p) {
            auto& c = cells_[cycle_[p]];
            if (p % 2 == 0)
                c.flow = std::max(0.0, c.flow - theta);
            else
                c.flow += theta;
        }
        auto& out = cells_[leave];
        cell_of_[out.row * m_ + out.col] = -1;
        out = {ei, ej, theta};
        cell_of_[ei * m_ + ej] = leave;
        return theta;
    }

    const Matrix& cost_;
    int n_;
    int m_;
    double scale_ = 1.0;
    std::vector<BasicCell> cells_;
    std::vector<int> cell_of_;
    Vector u_;
    Vector v_;
    std::vector<int> parent_edge_;
    std::vector<int> parent_node_;
    std::vector<int> depth_;
    std::vector<std::vector<int>> adj_;
    std::vector<int> stack_;
    std::vector<int> path_a_;
    std::vector<int> path_b_;
    std::vector<int> cycle_;
};

}  // namespace

OtResult solve_exact_ot(const Matrix& cost, const Histogram& h, const Histogram& g)
{
    if (cost.rows() != h.size() || cost.cols() != g.size())
        throw Error(ErrorCode::DimensionMismatch, "cost is " + std::to_string(cost.rows()) + "x" +
                                                      std::to_string(cost.cols()) + ", marginals " +
                                                      std::to_string(h.size()) + "/" + std::to_string(g.size()));
    require_finite(cost, "cost");

    TransportSimplex simplex(cost, h.weights(), g.weights());
    const long pivots = simplex.solve();
    Matrix plan = simplex.plan();
    for (Eigen::Index i = 0; i < plan.rows(); ++i) {
        if (h[i] == 0.0)
            plan.row(i).setZero();
    }
    for (Eigen::Index j = 0; j < plan.cols(); ++j) {
        if (g[j] == 0.0)
            plan.col(j).setZero();
    }
    const double objective = cost.cwiseProduct(plan).sum();
    return {Coupling(std::move(plan), h, g), objective, pivots};
}

Matrix ground_cost(const Matrix& x, const Matrix& y, int p)
{
    if (p < 1)
        throw Error(ErrorCode::InvalidArgument, "ground cost exponent must be >= 1");
    if (x.cols() != y.cols())
        throw Error(ErrorCode::DimensionMismatch, "point clouds live in different dimensions");
    Matrix c(x.rows(), y.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < y.rows(); ++j) {
            const double d = (x.row(i) - y.row(j)).norm();
            c(i, j) = p == 2 ? d * d : std::pow(d, p);
        }
    }
    return c;
}

double wasserstein_pp(const Matrix& x, const Histogram& h, const Matrix& y, const Histogram& g, int p)
{
    return solve_exact_ot(ground_cost(x, y, p), h, g).objective;
}

}  // namespace otqap
