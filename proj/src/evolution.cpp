#include "smbne/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace smbne {

void EsConfig::validate() const {
  if (lambda < 1) throw std::invalid_argument("es: lambda must be >= 1");
  if (!initial && !config) throw std::invalid_argument("es: neither initial genotype nor config");
  const long long parent_cost = initial_fitness ? 0 : 1;
  if (budget < lambda + parent_cost)
    throw std::invalid_argument("es: budget must cover the parent and one full generation");
  if (initial) check_genotype(*initial);
  if (initial_fitness && !std::isfinite(*initial_fitness))
    throw std::invalid_argument("es: non-finite initial fitness");
}

EsResult es_run(const Objective& objective, const EsConfig& cfg, Rng& rng) {
  cfg.validate();
  EsResult res;
  double running_best = -std::numeric_limits<double>::infinity();
  auto eval = [&](const Genotype& g) {
    const double f = objective(g);
    if (!std::isfinite(f)) throw std::runtime_error("es_run: objective returned a non-finite value");
    ++res.evals;
    running_best = std::max(running_best, f);
    res.eval_trace.push_back(f);
    res.best_trace.push_back(running_best);
    return f;
  };

  Genotype parent = cfg.initial ? *cfg.initial : random_genotype(cfg.config, rng);
  double parent_fit;
  if (cfg.initial_fitness) {
    parent_fit = *cfg.initial_fitness;
    running_best = parent_fit;
  } else {
    parent_fit = eval(parent);
  }
  res.best = parent;
  res.best_fitness = parent_fit;

  std::vector<double> kid_fit(cfg.lambda);
  std::vector<Genotype> kids;
  kids.reserve(cfg.lambda);
  while (res.evals < cfg.budget) {
    const int gen = static_cast<int>(std::min<long long>(cfg.lambda, cfg.budget - res.evals));
    kids.clear();
    int best_k = -1;
    for (int i = 0; i < gen; ++i) {
      kids.push_back(apply_mutation(parent, cfg.mutation, rng));
      kid_fit[i] = eval(kids[i]);
      if (best_k < 0 || kid_fit[i] > kid_fit[best_k]) best_k = i;  // ties: lowest index
    }
    // Offspring are favored: an equally fit best offspring replaces the parent.
    if (kid_fit[best_k] >= parent_fit) {
      parent = std::move(kids[best_k]);
      parent_fit = kid_fit[best_k];
      if (parent_fit >= res.best_fitness) {
        res.best = parent;
        res.best_fitness = parent_fit;
      }
    }
  }
  return res;
}

EsResult random_search(const Objective& objective, long long budget, CgpConfigPtr config, Rng& rng) {
  if (budget < 1) throw std::invalid_argument("random_search: budget must be >= 1");
  if (!config) throw std::invalid_argument("random_search: null config");
  config->validate();
  EsResult res;
  for (long long i = 0; i < budget; ++i) {
    Genotype g = random_genotype(config, rng);
    const double f = objective(g);
    if (!std::isfinite(f))
      throw std::runtime_error("random_search: objective returned a non-finite value");
    ++res.evals;
    if (i == 0 || f > res.best_fitness) {
      res.best = std::move(g);
      res.best_fitness = f;
    }
    res.eval_trace.push_back(f);
    res.best_trace.push_back(res.best_fitness);
  }
  return res;
}

}  // namespace smbne
