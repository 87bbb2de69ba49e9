#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "smbne/cgp.hpp"

namespace smbne {

/// A classification dataset: feature matrix plus dense class labels.
struct Dataset {
  std::string name;
  Eigen::MatrixXd features;  // n x p
  std::vector<int> labels;   // n entries in [0, class_count)
  int class_count = 0;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;  // index -> original label text

  int rows() const { return static_cast<int>(features.rows()); }
  int cols() const { return static_cast<int>(features.cols()); }
  void validate() const;
};

/// Loads a CSV dataset. `label_column` selects the class column by header name
/// (or 0-based index when numeric / headerless); empty means the last column.
/// Labels are re-indexed densely in first-appearance order.
Dataset load_dataset(const std::string& path, const std::string& label_column = "",
                     bool header = true);

/// Min-max scales every feature column to [0,1]; constant columns map to 0.
Dataset normalize(const Dataset& d);

/// Class-stratified row subsampling without replacement; keeps at least one
/// row per class and preserves row order.
Dataset stratified_subsample(const Dataset& d, double fraction, Rng& rng);

/// Numerically stabilized softmax.
Eigen::VectorXd softmax(const Eigen::VectorXd& v);

/// Classification fitness in [0,1]: a correct prediction scores 1, a wrong one
/// scores the softmax probability of the true class; the sum is divided by the
/// number of samples. Argmax ties resolve to the lowest class index.
double adjusted_accuracy(const Genotype& g, const Dataset& d);

/// Reusable adjusted-accuracy objective; keeps one network evaluator per
/// instance, so give each thread its own copy.
class FitnessEvaluator {
 public:
  explicit FitnessEvaluator(Dataset dataset);
  double operator()(const Genotype& g);
  long long eval_count() const { return count_; }
  const Dataset& dataset() const { return data_; }

 private:
  Dataset data_;
  Evaluator eval_;
  long long count_ = 0;
};

enum class Provenance : std::uint8_t { FullDataset, Factorial, Lhs, Custom };
const char* provenance_name(Provenance p);

/// Reference inputs on which phenotype behavior is compared.
struct PhenotypeInputSet {
  Eigen::MatrixXd rows;  // |set| x num_inputs, all values finite
  Provenance provenance = Provenance::Custom;
  int size() const { return static_cast<int>(rows.rows()); }
  void validate(int num_inputs) const;
};

/// Deterministic design over the {0, 0.5, 1}^p grid: center point, then the 2p
/// axial points, then two-level fractions of growing order, truncated to
/// `target_size`. Rejects sizes below 2p+1 or above 3^p.
PhenotypeInputSet gen_factorial(int p, int target_size);

/// Latin hypercube sample in the unit cube: per column a random permutation of
/// the `size` strata with uniform jitter inside each cell.
PhenotypeInputSet gen_lhs(int p, int size, Rng& rng);

/// Wraps a dataset's (normalized) feature rows as a phenotype input set.
PhenotypeInputSet input_set_from_dataset(const Dataset& d);

/// Headerless comma-separated input-set files.
PhenotypeInputSet load_input_set(const std::string& path);
void save_input_set(const PhenotypeInputSet& set, const std::string& path);

/// Shortest round-trip decimal formatting used by every CSV writer.
std::string format_double(double v);

}  // namespace smbne
