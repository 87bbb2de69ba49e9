#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "smbne/data.hpp"
#include "smbne/loop.hpp"

namespace smbne {

/// Invalid configuration file or value; the CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Method : std::uint8_t { Random, Cgpann, Smbne };
const char* method_name(Method m);

enum class InputSetKind : std::uint8_t { Full, Factorial, Lhs, Csv };

struct ExperimentSpec {
  std::string name;
  std::string dataset_path;
  std::string label_column;  // empty: last column
  bool header = true;
  double subsample_fraction = 0.0;  // 0: keep all rows

  Method method = Method::Smbne;
  CgpConfig cgp;  // num_inputs/num_outputs filled from the dataset on load
  long long budget = 250;
  int replications = 30;
  std::uint64_t base_seed = 1;

  MutationSpec mutation{};  // cgpann

  // smbne
  int k = 50;
  int m = 100;
  DistanceParams distance{};
  InputSetKind input_set = InputSetKind::Full;
  int input_size = 0;  // factorial / lhs
  std::string input_csv;
  PhaseSpec local{{MutationSpec::Probabilistic, 0.05}, 10, 400};
  PhaseSpec global{{MutationSpec::Probabilistic, 0.15}, 1000, 400};

  void validate() const;
};

/// Parses the key = value / [section] experiment file format.
ExperimentSpec parse_config_text(const std::string& text, const std::string& origin = "config");
ExperimentSpec parse_config_file(const std::string& path);

struct RepResult {
  int rep = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  double best_fitness = 0.0;
  long long true_evals = 0;
  long long surrogate_evals = 0;
  double wall_seconds = 0.0;  // informational; kept out of deterministic CSVs
  std::string trace_csv;      // rendered rows in the loop trace schema
};

struct Summary {
  int reps = 0;
  int failed = 0;
  double median = 0.0, mean = 0.0, sd = 0.0, min = 0.0, max = 0.0;
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<RepResult> reps;
  Summary summary;
};

/// Runs every replication (seed = base_seed + r) on a worker pool. A failed
/// replication is recorded and the rest continue. When `out_dir` is non-empty,
/// writes <name>_results.csv, <name>_summary.csv, and per-replication traces
/// under <name>_traces/, each file atomically.
ExperimentResult run_experiment(const ExperimentSpec& spec, int threads = 1,
                                const std::string& out_dir = "");

Summary summarize(const std::vector<RepResult>& reps);
double median_of(std::vector<double> v);

std::string results_to_csv(const std::vector<RepResult>& reps);
std::string summary_to_csv(const ExperimentSpec& spec, const Summary& s);

/// Rank-sum test with average ranks, tie-corrected normal approximation, and
/// continuity correction. Degenerate fully-tied samples report p = 1.
struct WilcoxonResult {
  double u_a = 0.0;        // rank-sum statistic of sample a
  double p_two_sided = 1.0;
  double p_a_greater = 1.0;  // one-sided: a shifted above b
  double p_b_greater = 1.0;
};
WilcoxonResult wilcoxon_rank_sum(const std::vector<double>& a, const std::vector<double>& b);

struct CompareReport {
  double median_a = 0.0, median_b = 0.0;
  int rank_a = 1, rank_b = 2;  // 1 = higher median
  WilcoxonResult test;
  std::string text;  // printable report
};
CompareReport compare(const std::vector<double>& a, const std::vector<double>& b,
                      const std::string& name_a = "a", const std::string& name_b = "b");

/// Reads the best_fitness column of a <name>_results.csv file.
std::vector<double> load_results_column(const std::string& path);

}  // namespace smbne
