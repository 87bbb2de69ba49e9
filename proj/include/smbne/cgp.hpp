#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace smbne {

using Rng = std::mt19937_64;

/// Node transfer functions. The set used by a run is an ordered subset in CgpConfig.
enum class Transfer : std::uint8_t { Tanh, Softsign, Step, Sigmoid, Gauss };

const char* transfer_name(Transfer f);
std::optional<Transfer> transfer_from_name(std::string_view name);

/// Scalar transfer evaluation. step(x) = 1 for x > 0, else 0.
double transfer(Transfer f, double x);

struct CgpConfig {
  int num_inputs = 1;
  int num_nodes = 1;
  int num_outputs = 1;
  int arity = 1;
  double weight_min = -1.0;
  double weight_max = 1.0;
  std::vector<Transfer> functions{Transfer::Tanh, Transfer::Softsign, Transfer::Step,
                                  Transfer::Sigmoid, Transfer::Gauss};

  void validate() const;  // throws std::invalid_argument
  // Genes per genotype: per node `arity` connections + `arity` weights + 1 function,
  // plus one output gene per output.
  long long gene_count() const {
    return static_cast<long long>(num_nodes) * (2LL * arity + 1) + num_outputs;
  }
  // Source indices: values [0, num_inputs) are inputs, [num_inputs, num_inputs+num_nodes)
  // are node results. Node j may connect to any source < num_inputs + j (feed-forward).
  int num_sources() const { return num_inputs + num_nodes; }
  double weight_span() const { return weight_max - weight_min; }

  bool operator==(const CgpConfig&) const = default;
};

using CgpConfigPtr = std::shared_ptr<const CgpConfig>;

struct NodeGene {
  std::vector<int> conn;       // size arity
  std::vector<double> weight;  // size arity, one per connection
  int func = 0;                // index into config functions
  bool active = false;         // derived: reachable backward from an output gene

  bool operator==(const NodeGene&) const = default;
};

struct Genotype {
  CgpConfigPtr config;
  std::vector<NodeGene> nodes;
  std::vector<int> outputs;  // output genes; any source in [0, num_sources)

  const CgpConfig& cfg() const { return *config; }
  bool same_genes(const Genotype& other) const;  // gene-level equality, activity included
};

/// Network response on a reference input set: one row of outputs per input row.
struct Phenotype {
  Eigen::MatrixXd outputs;  // |input set| x num_outputs
  bool softmaxed = false;
};

enum class Post : std::uint8_t { None, Softmax };

Genotype random_genotype(CgpConfigPtr config, Rng& rng);

/// Marks exactly the nodes on some backward path from an output gene as active.
void recompute_activity(Genotype& g);

/// Throws std::invalid_argument if the genotype violates the connectivity or shape
/// invariants. Used by deserialization and tests.
void check_genotype(const Genotype& g);

/// Evaluates the active network on each input row. Duplicate connections to the same
/// source are merged by adding their weights. Rejects non-finite inputs.
Phenotype evaluate_ann(const Genotype& g, const Eigen::MatrixXd& inputs, Post post = Post::None);

/// Reusable evaluation context: validates the input set once and keeps scratch
/// buffers so many genotypes can be evaluated on the same inputs cheaply.
class Evaluator {
 public:
  explicit Evaluator(Eigen::MatrixXd inputs, Post post = Post::None);

  Phenotype operator()(const Genotype& g);
  const Eigen::MatrixXd& inputs() const { return inputs_; }
  int rows() const { return static_cast<int>(inputs_.rows()); }
  long long eval_count() const { return count_; }

 private:
  Eigen::MatrixXd inputs_;
  Post post_;
  std::vector<double> values_;  // [source][row] blocks
  std::vector<int> merged_src_;
  std::vector<double> merged_w_;
  long long count_ = 0;
};

struct MutationSpec {
  enum Kind : std::uint8_t { Probabilistic, SingleActive };
  Kind kind = Probabilistic;
  double rate = 0.05;  // Probabilistic only
};

/// Each gene is independently resampled over its legal domain with probability `rate`.
Genotype mutate_probabilistic(const Genotype& parent, double rate, Rng& rng);

/// Goldman-style single mutation: uniformly chosen genes are mutated (to a different
/// value) until one lands on an active node's gene or an output gene; mutations on
/// inactive genes along the way are kept.
Genotype mutate_single_active(const Genotype& parent, Rng& rng);

Genotype apply_mutation(const Genotype& parent, const MutationSpec& spec, Rng& rng);

// Line-oriented text form: one node per line `func conn:weight ...`, final line the
// output genes. Weights use shortest round-trip decimals, so parsing is lossless.
std::string genotype_to_text(const Genotype& g);
Genotype genotype_from_text(const std::string& text, CgpConfigPtr config);

}  // namespace smbne
