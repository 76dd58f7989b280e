#include <limits>
#include <vector>

#include "otqap/linear_ot.hpp"

namespace otqap {

bool Assignment::is_bijection() const
{
    std::vector<char> seen(perm.size(), 0);
    for (int t : perm) {
        if (t < 0 || t >= static_cast<int>(perm.size()) || seen[t])
            return false;
        seen[t] = 1;
    }
    return true;
}

Matrix Assignment::to_matrix() const
{
    const auto n = static_cast<Eigen::Index>(perm.size());
    Matrix p = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        p(i, perm[i]) = 1.0;
    return p;
}

LapResult solve_lap(const Matrix& cost)
{
    if (cost.rows() != cost.cols())
        throw Error(ErrorCode::NonSquare, "LAP cost must be square");
    require_finite(cost, "cost");
    const int n = static_cast<int>(cost.rows());
    if (n == 0)
        return {};

    // 1-based arrays; column 0 is a virtual source. way[j] is the previous column
    // on the alternating path, owner[j] the row matched to column j.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> owner(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);

    for (int i = 1; i <= n; ++i) {
        owner[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = owner[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j])
                    continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (owner[j0] != 0);
        do {
            const int j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    LapResult r;
    r.assignment.perm.assign(n, -1);
    for (int j = 1; j <= n; ++j)
        r.assignment.perm[owner[j] - 1] = j - 1;
    for (int i = 0; i < n; ++i)
        r.objective += cost(i, r.assignment.perm[i]);
    return r;
}

}  // namespace otqap
