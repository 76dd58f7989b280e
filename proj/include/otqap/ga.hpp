#pragma once

#include <vector>

#include "otqap/core.hpp"
#include "otqap/cqap.hpp"

namespace otqap {

struct GaConfig {
    int population = 100;
    int generations = 200;
    double crossover_rate = 0.9;
    double mutation_rate = 0.2;
    int tournament_size = 3;
    SeedPolicy seed{};

    void validate() const;
};

inline constexpr double kUnassignedPenalty = 1e6;

/// Task priority order; a permutation of 0..m-1.
struct Chromosome {
    std::vector<int> priority;

    bool is_permutation() const;
    friend bool operator==(const Chromosome&, const Chromosome&) = default;
};

struct Decoded {
    AssignmentMatrix x;
    int unassigned = 0;
    double objective = 0.0;  // cqap_objective(x)
    double fitness() const { return objective + kUnassignedPenalty * unassigned; }
};

/// Visits tasks in priority order and gives each to the agent with enough residual
/// capacity whose marginal objective increase is smallest (ties to the lower index).
/// Tasks that fit nowhere stay unassigned.
Decoded decode(const CqapInstance& inst, const Chromosome& chrom);

/// Order crossover: keeps parent a's slice [lo, hi] and fills the rest in parent b's order.
Chromosome order_crossover(const Chromosome& a, const Chromosome& b, Rng& rng);
void swap_mutation(Chromosome& c, Rng& rng);
Chromosome random_chromosome(int m, Rng& rng);

struct GaResult {
    AssignmentMatrix x;
    double objective = 0.0;
    int unassigned = 0;
    Chromosome best;
    /// Best fitness after each generation, generation 0 included.
    std::vector<double> history;
};

GaResult solve_ga(const CqapInstance& inst, const GaConfig& config);

}  // namespace otqap
