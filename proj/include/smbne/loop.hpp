#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "smbne/distances.hpp"
#include "smbne/evolution.hpp"
#include "smbne/kriging.hpp"

namespace smbne {

enum class Phase : std::uint8_t { Init, Local, Global, Fallback };
const char* phase_name(Phase p);

/// One row per true evaluation. Model columns are NaN (empty in CSV) for rows
/// proposed without a model (initialization, fallback) and the beta columns
/// additionally for single-distance models.
struct TraceRow {
  long long iteration = 0;  // 0 during initialization
  long long true_evals = 0;
  Phase phase = Phase::Init;
  double fitness = 0.0;
  double best_fitness = 0.0;
  double theta = kNan;
  double beta1 = kNan;
  double beta2 = kNan;
  double beta3 = kNan;
  double nugget = kNan;

  static constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
};

std::string trace_to_csv(const std::vector<TraceRow>& trace);

/// Per-phase surrogate search setup: `screen` initial candidates feed the ES
/// (local: incumbent + screen-1 mutants; global: screen random genotypes),
/// then `es_budget` further surrogate evaluations.
struct PhaseSpec {
  MutationSpec mutation{};
  int screen = 10;
  long long es_budget = 400;
};

struct SmbneConfig {
  int k = 50;               // random initial designs, truthfully evaluated
  long long budget = 250;   // total true evaluations
  int m = 100;              // modeling subset size
  DistanceParams distance{};
  PhenotypeInputSet inputs;  // required by Phd/Md
  PhaseSpec local{{MutationSpec::Probabilistic, 0.05}, 10, 400};
  PhaseSpec global{{MutationSpec::Probabilistic, 0.15}, 1000, 400};
  CgpConfigPtr config;
  std::uint64_t seed = 1;
  void validate() const;
};

struct SmbneResult {
  Genotype best;
  double best_fitness = 0.0;
  std::vector<TraceRow> trace;
  long long true_evals = 0;
  long long surrogate_evals = 0;
  long long fallbacks = 0;  // iterations that degenerated to a random proposal
};

/// Modeling subset: everything while the archive fits within m, otherwise the
/// floor(m/5) best entries plus uniformly drawn remainder, all distinct.
std::vector<int> select_modeling_indices(const std::vector<double>& fitness, int m, Rng& rng);

/// The surrogate loop: k random networks are truthfully evaluated, then each
/// iteration rebuilds the model on the modeling subset, proposes one candidate
/// by maximizing expected improvement with a (1+4)-ES (phases alternate
/// local/global, starting local), truthfully evaluates it, and appends it to
/// the archive. A degenerate model fit falls back to a random proposal for
/// that iteration. Exactly `budget` true evaluations are spent.
SmbneResult smbne_run(const Objective& objective, const SmbneConfig& config);

}  // namespace smbne
