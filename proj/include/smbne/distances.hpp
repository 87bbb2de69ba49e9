#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "smbne/cgp.hpp"
#include "smbne/data.hpp"

namespace smbne {

enum class DistanceKind : std::uint8_t { Gd, Gidd, Phd, Md };
const char* distance_name(DistanceKind k);
std::optional<DistanceKind> distance_from_name(std::string_view name);

/// Non-negative mixture weights for the mixed distance; not all zero.
struct MixtureWeights {
  double gd = 1.0;
  double gidd = 1.0;
  double phd = 1.0;
  void validate() const;
};

/// Genotypic distance: row-wise squared weight differences plus Hamming terms
/// on connection, activity, and function genes (connections canonically sorted
/// per node), plus one Hamming term per output gene; scaled by the analytic
/// maximum so the result lies in [0,1].
double gd(const Genotype& a, const Genotype& b);

/// Genotypic distance with structural node IDs: active nodes are matched by
/// recursively equal IDs, matched pairs contribute weight/function terms,
/// unmatched nodes contribute `unmatched_penalty`; scaled to [0,1].
double gidd(const Genotype& a, const Genotype& b, double unmatched_penalty = 2.0);

/// Phenotypic distance: mean absolute difference of the two networks' outputs
/// over the input set, i.e. L1 / (|set| * num_outputs).
double phd(const Genotype& a, const Genotype& b, const PhenotypeInputSet& inputs,
           Post post = Post::None);

/// Mixed distance beta_gd*gd + beta_gidd*gidd + beta_phd*phd.
double md(const Genotype& a, const Genotype& b, const MixtureWeights& beta,
          const PhenotypeInputSet& inputs, Post post = Post::None,
          double unmatched_penalty = 2.0);

/// exp(-theta * d).
double exp_kernel(double d, double theta);

struct DistanceParams {
  DistanceKind kind = DistanceKind::Phd;
  double unmatched_penalty = 2.0;
  MixtureWeights beta{};   // Md only
  Post post = Post::None;  // Phd/Md only
};

/// Pairwise distances between all samples; symmetric with zero diagonal. For
/// Phd/Md each genotype's phenotype is computed once, not once per pair.
Eigen::MatrixXd distance_matrix(const std::vector<Genotype>& samples, const DistanceParams& params,
                                const PhenotypeInputSet* inputs = nullptr);

/// Incremental distance cache for an archive of genotypes: add() extends the
/// stored pairwise matrices of every component the configured kind needs, and
/// candidate distances against archive subsets reuse the cached profiles.
class DistanceOracle {
 public:
  DistanceOracle(const DistanceParams& params, CgpConfigPtr config,
                 PhenotypeInputSet inputs = {});
  ~DistanceOracle();
  DistanceOracle(DistanceOracle&&) noexcept;
  DistanceOracle& operator=(DistanceOracle&&) noexcept;

  int add(const Genotype& g);  // returns the entry's index
  int size() const;
  const DistanceParams& params() const { return params_; }

  bool has_gd() const;
  bool has_gidd() const;
  bool has_phd() const;

  /// Pairwise component distances between archived entries.
  double gd_at(int i, int j) const;
  double gidd_at(int i, int j) const;
  double phd_at(int i, int j) const;
  /// Distance for the configured kind (Md combines with params().beta).
  double at(int i, int j) const;

  /// Square component submatrix over the given archive indices.
  Eigen::MatrixXd submatrix_gd(const std::vector<int>& idx) const;
  Eigen::MatrixXd submatrix_gidd(const std::vector<int>& idx) const;
  Eigen::MatrixXd submatrix_phd(const std::vector<int>& idx) const;

  /// Network evaluations spent filling the phenotype cache (Phd/Md only).
  long long phenotype_evals() const;

  /// Profile of a candidate genotype that is not in the archive.
  struct Candidate;
  struct CandidateDeleter {
    void operator()(Candidate* c) const;
  };
  using CandidatePtr = std::unique_ptr<Candidate, CandidateDeleter>;
  CandidatePtr make_candidate(const Genotype& g) const;
  /// Component distance vectors candidate -> archive subset. Null out-pointers
  /// skip that component; requesting an unavailable component throws.
  void candidate_distances(const Candidate& c, const std::vector<int>& idx, Eigen::VectorXd* d_gd,
                           Eigen::VectorXd* d_gidd, Eigen::VectorXd* d_phd) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  DistanceParams params_;
};

}  // namespace smbne
