#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "smbne/cgp.hpp"

namespace smbne {

using Objective = std::function<double(const Genotype&)>;

/// (1+lambda)-ES setup. `budget` counts objective evaluations, including the
/// initial parent evaluation unless `initial_fitness` supplies it for free.
struct EsConfig {
  int lambda = 4;
  MutationSpec mutation{};
  long long budget = 0;
  std::optional<Genotype> initial;        // absent: random from `config`
  std::optional<double> initial_fitness;  // absent: parent evaluated (and counted)
  CgpConfigPtr config;                    // required when `initial` is absent
  void validate() const;
};

struct EsResult {
  Genotype best;
  double best_fitness = 0.0;
  long long evals = 0;
  std::vector<double> eval_trace;  // raw fitness of each evaluation
  std::vector<double> best_trace;  // best-so-far after each evaluation
};

/// Maximizes the objective with a (1+lambda)-ES. Selection favors offspring:
/// the best offspring replaces the parent whenever its fitness is >= the
/// parent's (ties between offspring go to the lowest index). The final
/// generation shrinks to the remaining budget, so the evaluation count is
/// exact. A non-finite objective value aborts with a diagnostic.
EsResult es_run(const Objective& objective, const EsConfig& cfg, Rng& rng);

/// Uniform-random baseline: `budget` independent genotypes, returns the first
/// best.
EsResult random_search(const Objective& objective, long long budget, CgpConfigPtr config, Rng& rng);

}  // namespace smbne
