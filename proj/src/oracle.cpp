#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <vector>

#include "otqap/cqap.hpp"

namespace otqap {

namespace {

class ColumnSearch {
public:
    ColumnSearch(const CqapInstance& inst, long long node_cap)
        : inst_(inst), n_(static_cast<int>(inst.agents())), m_(static_cast<int>(inst.tasks())), node_cap_(node_cap),
          x_(inst.agents(), inst.tasks()), load_(n_, 0)
    {
        bounded_ = (inst.flow.array() >= 0.0).all() && (inst.distance.array() >= 0.0).all() &&
                   (inst.linear_cost.array() >= 0.0).all();
        // Cheapest possible linear charge for each remaining suffix of tasks.
        tail_bound_.assign(m_ + 1, 0.0);
        for (int j = m_ - 1; j >= 0; --j) {
            double cheapest = std::numeric_limits<double>::infinity();
            for (int i = 0; i < n_; ++i) {
                if (inst.capacity[i] >= inst.demand[j])
                    cheapest = std::min(cheapest, inst.linear_cost(i, j));
            }
            tail_bound_[j] = tail_bound_[j + 1] + (std::isfinite(cheapest) ? cheapest : 0.0);
        }
        // Subsets of agents ordered by size, then by bitmask.
        for (int size = 1; size <= n_; ++size) {
            for (unsigned mask = 0; mask < (1u << n_); ++mask) {
                if (std::popcount(mask) == size)
                    subsets_.push_back(mask);
            }
        }
    }

    void run() { descend(0, 0.0); }

    bool found() const { return found_; }
    bool capped() const { return capped_; }
    long long nodes() const { return nodes_; }
    const AssignmentMatrix& best() const { return best_x_; }
    double best_value() const { return best_exact_; }

private:
    // Cost of setting x(i, j) = 1 given the assignments already placed.
    double increment(int i, int j) const
    {
        double c = inst_.linear_cost(i, j) + inst_.flow(i, i) * inst_.distance(j, j);
        for (const auto& [k, l] : placed_)
            c += inst_.flow(i, k) * inst_.distance(j, l) + inst_.flow(k, i) * inst_.distance(l, j);
        return c;
    }

    void descend(int j, double cost)
    {
        if (capped_)
            return;
        if (j == m_) {
            const double exact = cqap_objective(inst_, x_);
            if (!found_ || exact < best_exact_) {
                found_ = true;
                best_exact_ = exact;
                best_partial_ = cost;
                best_x_ = x_;
            }
            return;
        }
        const int d = inst_.demand[j];
        for (unsigned mask : subsets_) {
            bool fits = true;
            long cover = 0;
            for (int i = 0; i < n_ && fits; ++i) {
                if (mask & (1u << i)) {
                    fits = load_[i] + d <= inst_.capacity[i];
                    cover += inst_.capacity[i];
                }
            }
            if (!fits || cover < d)
                continue;
            if (++nodes_ > node_cap_) {
                capped_ = true;
                return;
            }
            double next = cost;
            const std::size_t before = placed_.size();
            for (int i = 0; i < n_; ++i) {
                if (mask & (1u << i)) {
                    next += increment(i, j);
                    placed_.emplace_back(i, j);
                    x_(i, j) = 1;
                    load_[i] += d;
                }
            }
            const bool prune =
                bounded_ && found_ && next + tail_bound_[j + 1] > best_partial_ + 1e-9 * std::max(1.0, std::abs(best_partial_));
            if (!prune)
                descend(j + 1, next);
            for (std::size_t p = placed_.size(); p > before; --p) {
                const auto [i, jj] = placed_[p - 1];
                x_(i, jj) = 0;
                load_[i] -= d;
            }
            placed_.resize(before);
            if (capped_)
                return;
        }
    }

    const CqapInstance& inst_;
    int n_;
    int m_;
    long long node_cap_;
    bool bounded_ = false;
    std::vector<double> tail_bound_;
    std::vector<unsigned> subsets_;
    AssignmentMatrix x_;
    std::vector<long> load_;
    std::vector<std::pair<int, int>> placed_;
    long long nodes_ = 0;
    bool capped_ = false;
    bool found_ = false;
    double best_exact_ = 0.0;
    double best_partial_ = 0.0;
    AssignmentMatrix best_x_;
};

}  // namespace

double oracle_search_estimate(const CqapInstance& inst)
{
    double log_size = 0.0;
    for (Eigen::Index j = 0; j < inst.tasks(); ++j) {
        int k = 0;
        for (Eigen::Index i = 0; i < inst.agents(); ++i)
            k += inst.capacity[i] >= inst.demand[j] ? 1 : 0;
        if (k == 0)
            return 0.0;
        log_size += std::log(static_cast<double>(k));
    }
    return std::exp(log_size);
}

OracleResult solve_exact_enum(const CqapInstance& inst, long long node_cap)
{
    inst.validate();
    if (inst.agents() > kOracleMaxAgents)
        throw Error(ErrorCode::InvalidArgument, "oracle supports at most " + std::to_string(kOracleMaxAgents) + " agents");
    if (node_cap < 1)
        throw Error(ErrorCode::InvalidArgument, "node cap must be positive");

    ColumnSearch search(inst, node_cap);
    search.run();
    if (!search.found()) {
        if (search.capped())
            throw Error(ErrorCode::NoConvergence, "node cap reached before any feasible assignment was found");
        throw Error(ErrorCode::Infeasible, "no assignment satisfies capacity and demand constraints");
    }
    return {search.best(), search.best_value(), !search.capped(), search.nodes()};
}

}  // namespace otqap
