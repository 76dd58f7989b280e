#include <algorithm>
#include <limits>

#include "otqap/ga.hpp"

namespace otqap {

void GaConfig::validate() const
{
    if (population < 2)
        throw Error(ErrorCode::InvalidArgument, "population must be >= 2");
    if (generations < 0)
        throw Error(ErrorCode::InvalidArgument, "generations must be >= 0");
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0) || !(mutation_rate >= 0.0 && mutation_rate <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "rates must lie in [0, 1]");
    if (tournament_size < 2 || tournament_size > population)
        throw Error(ErrorCode::InvalidArgument, "tournament size must lie in [2, population]");
}

bool Chromosome::is_permutation() const
{
    std::vector<char> seen(priority.size(), 0);
    for (int t : priority) {
        if (t < 0 || t >= static_cast<int>(priority.size()) || seen[t])
            return false;
        seen[t] = 1;
    }
    return true;
}

Decoded decode(const CqapInstance& inst, const Chromosome& chrom)
{
    const auto n = static_cast<int>(inst.agents());
    const auto m = static_cast<int>(inst.tasks());
    if (static_cast<int>(chrom.priority.size()) != m || !chrom.is_permutation())
        throw Error(ErrorCode::InvalidArgument, "chromosome is not a permutation of the tasks");

    Decoded out{AssignmentMatrix(n, m), 0, 0.0};
    std::vector<long> residual(inst.capacity.begin(), inst.capacity.end());
    std::vector<std::pair<int, int>> placed;
    placed.reserve(static_cast<std::size_t>(m));
    for (int j : chrom.priority) {
        int best = -1;
        double best_delta = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            if (residual[i] < inst.demand[j])
                continue;
            double delta = inst.linear_cost(i, j) + inst.flow(i, i) * inst.distance(j, j);
            for (const auto& [k, l] : placed)
                delta += inst.flow(i, k) * inst.distance(j, l) + inst.flow(k, i) * inst.distance(l, j);
            if (delta < best_delta) {
                best_delta = delta;
                best = i;
            }
        }
        if (best < 0) {
            ++out.unassigned;
            continue;
        }
        out.x(best, j) = 1;
        residual[best] -= inst.demand[j];
        placed.emplace_back(best, j);
    }
    out.objective = cqap_objective(inst, out.x);
    return out;
}

Chromosome random_chromosome(int m, Rng& rng)
{
    Chromosome c;
    c.priority.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i)
        c.priority[i] = i;
    for (int i = m - 1; i > 0; --i)
        std::swap(c.priority[i], c.priority[rng.uniform_int(0, i)]);
    return c;
}

Chromosome order_crossover(const Chromosome& a, const Chromosome& b, Rng& rng)
{
    const auto m = static_cast<int>(a.priority.size());
    if (m == 0)
        return a;
    int lo = static_cast<int>(rng.uniform_int(0, m - 1));
    int hi = static_cast<int>(rng.uniform_int(0, m - 1));
    if (lo > hi)
        std::swap(lo, hi);

    Chromosome child;
    child.priority.assign(static_cast<std::size_t>(m), -1);
    std::vector<char> used(static_cast<std::size_t>(m), 0);
    for (int p = lo; p <= hi; ++p) {
        child.priority[p] = a.priority[p];
        used[a.priority[p]] = 1;
    }
    int write = (hi + 1) % m;
    for (int k = 0; k < m; ++k) {
        const int gene = b.priority[(hi + 1 + k) % m];
        if (used[gene])
            continue;
        child.priority[write] = gene;
        used[gene] = 1;
        write = (write + 1) % m;
    }
    return child;
}

void swap_mutation(Chromosome& c, Rng& rng)
{
    const auto m = static_cast<int>(c.priority.size());
    if (m < 2)
        return;
    const int i = static_cast<int>(rng.uniform_int(0, m - 1));
    int j = static_cast<int>(rng.uniform_int(0, m - 2));
    if (j >= i)
        ++j;
    std::swap(c.priority[i], c.priority[j]);
}

GaResult solve_ga(const CqapInstance& inst, const GaConfig& config)
{
    config.validate();
    inst.validate();
    const auto m = static_cast<int>(inst.tasks());
    Rng rng(config.seed);

    std::vector<Chromosome> pop;
    std::vector<Decoded> decoded;
    pop.reserve(static_cast<std::size_t>(config.population));
    for (int k = 0; k < config.population; ++k) {
        pop.push_back(random_chromosome(m, rng));
        decoded.push_back(decode(inst, pop.back()));
    }

    auto best_index = [&] {
        std::size_t best = 0;
        for (std::size_t k = 1; k < decoded.size(); ++k) {
            if (decoded[k].fitness() < decoded[best].fitness())
                best = k;
        }
        return best;
    };
    auto tournament = [&]() -> const Chromosome& {
        std::size_t winner = static_cast<std::size_t>(rng.uniform_int(0, config.population - 1));
        for (int r = 1; r < config.tournament_size; ++r) {
            const auto k = static_cast<std::size_t>(rng.uniform_int(0, config.population - 1));
            if (decoded[k].fitness() < decoded[winner].fitness() ||
                (decoded[k].fitness() == decoded[winner].fitness() && k < winner))
                winner = k;
        }
        return pop[winner];
    };

    GaResult result;
    std::size_t best = best_index();
    result.history.push_back(decoded[best].fitness());

    for (int gen = 1; gen <= config.generations; ++gen) {
        std::vector<Chromosome> next;
        std::vector<Decoded> next_decoded;
        next.reserve(pop.size());
        next.push_back(pop[best]);
        next_decoded.push_back(decoded[best]);
        while (static_cast<int>(next.size()) < config.population) {
            const Chromosome& a = tournament();
            const Chromosome& b = tournament();
            Chromosome child = rng.uniform() < config.crossover_rate ? order_crossover(a, b, rng) : a;
            if (rng.uniform() < config.mutation_rate)
                swap_mutation(child, rng);
            next_decoded.push_back(decode(inst, child));
            next.push_back(std::move(child));
        }
        pop = std::move(next);
        decoded = std::move(next_decoded);
        best = best_index();
        result.history.push_back(decoded[best].fitness());
    }

    result.x = decoded[best].x;
    result.objective = decoded[best].objective;
    result.unassigned = decoded[best].unassigned;
    result.best = pop[best];
    return result;
}

}  // namespace otqap
