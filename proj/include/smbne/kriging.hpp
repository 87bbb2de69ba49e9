#pragma once

#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "smbne/distances.hpp"

namespace smbne {

/// Ordinary-Kriging model over a distance matrix with the exponential kernel
/// k = exp(-theta*d). Internally y is a minimized quantity (callers feed
/// negated fitness). For the mixed distance the model keeps the three
/// component matrices so likelihood evaluations reweight without recomputing
/// any network distances.
struct KrigingModel {
  bool md_mode = false;
  Eigen::MatrixXd dist;                        // single-kind training distances
  Eigen::MatrixXd dist_gd, dist_gidd, dist_phd;  // md_mode training distances
  Eigen::VectorXd y;

  double theta = 1.0;
  MixtureWeights beta{};  // md_mode only
  double nugget = 1e-8;
  double mu = 0.0;
  double sigma2 = 0.0;
  double log_likelihood = 0.0;
  bool constant_y = false;

  // Cached factorization state for predictions.
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd rinv_resid;  // R^-1 (y - mu*1)
  Eigen::VectorXd rinv_one;    // R^-1 1
  double one_rinv_one = 0.0;

  int n() const { return static_cast<int>(y.size()); }
  double y_best() const;  // smallest training value
};

/// Fits theta (and, in MD mode, the mixture weights) by maximizing the
/// concentrated log-likelihood; mu and sigma2 take their closed forms. The
/// nugget escalates by decades from 1e-8 until the correlation matrix
/// factorizes, capped at 1e-2; total failure throws "degenerate correlation".
KrigingModel kriging_fit(const Eigen::MatrixXd& dist, const Eigen::VectorXd& y);
KrigingModel kriging_fit_md(const Eigen::MatrixXd& d_gd, const Eigen::MatrixXd& d_gidd,
                            const Eigen::MatrixXd& d_phd, const Eigen::VectorXd& y);

struct Prediction {
  double mean = 0.0;
  double sd = 0.0;
};

/// Ordinary-Kriging predictor and root-mean-squared-error at a point given its
/// distances to the training samples.
Prediction kriging_predict(const KrigingModel& m, const Eigen::VectorXd& d_new);
Prediction kriging_predict_md(const KrigingModel& m, const Eigen::VectorXd& d_gd,
                              const Eigen::VectorXd& d_gidd, const Eigen::VectorXd& d_phd);

/// Expected improvement under minimization: (y_best-mean)*Phi(u) + sd*phi(u)
/// with u = (y_best-mean)/sd; collapses to max(y_best-mean, 0) at sd = 0.
double expected_improvement(double mean, double sd, double y_best);

/// Text key-value diagnostics dump.
std::string model_dump(const KrigingModel& m);

}  // namespace smbne
