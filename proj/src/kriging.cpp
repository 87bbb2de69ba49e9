#include "smbne/kriging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace smbne {

namespace {

constexpr double kLogThetaMin = -6.907755278982137;  // ln 1e-3
constexpr double kLogThetaMax = 6.907755278982137;   // ln 1e3
constexpr double kNuggetMin = 1e-8;
constexpr double kNuggetMax = 1e-2;
constexpr double kBetaMax = 10.0;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct LikelihoodEval {
  bool ok = false;
  double log_likelihood = kNegInf;
  double mu = 0.0;
  double sigma2 = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd rinv_resid;
  Eigen::VectorXd rinv_one;
  double one_rinv_one = 0.0;
};

// Concentrated log-likelihood of ordinary Kriging: mu and sigma2 at their
// closed-form optima for the given correlation matrix.
LikelihoodEval eval_likelihood(const Eigen::MatrixXd& dist, const Eigen::VectorXd& y, double theta,
                               double nugget) {
  const int n = static_cast<int>(y.size());
  Eigen::MatrixXd r = (-theta * dist.array()).exp();
  r.diagonal().array() += nugget;

  LikelihoodEval ev;
  ev.llt.compute(r);
  if (ev.llt.info() != Eigen::Success) return ev;

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  ev.rinv_one = ev.llt.solve(ones);
  ev.one_rinv_one = ones.dot(ev.rinv_one);
  if (!(ev.one_rinv_one > 0.0) || !std::isfinite(ev.one_rinv_one)) return ev;

  ev.mu = ev.rinv_one.dot(y) / ev.one_rinv_one;
  const Eigen::VectorXd resid = y - ev.mu * ones;
  ev.rinv_resid = ev.llt.solve(resid);
  double sigma2 = resid.dot(ev.rinv_resid) / n;
  // Guard against a numerically vanishing variance winning the search.
  const double spread = (y.array() - y.mean()).abs().maxCoeff();
  const double floor = 1e-12 * spread * spread + 1e-300;
  ev.sigma2 = std::max(sigma2, floor);

  double logdet = 0.0;
  const auto& l = ev.llt.matrixLLT();
  for (int i = 0; i < n; ++i) logdet += std::log(l(i, i));
  logdet *= 2.0;

  ev.log_likelihood = -0.5 * n * std::log(ev.sigma2) - 0.5 * logdet;
  ev.ok = std::isfinite(ev.log_likelihood);
  return ev;
}

void check_distance_matrix(const Eigen::MatrixXd& dist, int n) {
  if (dist.rows() != n || dist.cols() != n)
    throw std::invalid_argument("kriging: distance matrix does not match y");
  if (!dist.allFinite()) throw std::invalid_argument("kriging: non-finite distance");
  if (dist.minCoeff() < 0.0) throw std::invalid_argument("kriging: negative distance");
  for (int i = 0; i < n; ++i)
    if (std::abs(dist(i, i)) > 1e-12)
      throw std::invalid_argument("kriging: distance diagonal must be zero");
  if ((dist - dist.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument("kriging: distance matrix must be symmetric");
}

void store_eval(KrigingModel& m, LikelihoodEval&& ev, double nugget) {
  m.nugget = nugget;
  m.mu = ev.mu;
  m.sigma2 = ev.sigma2;
  m.log_likelihood = ev.log_likelihood;
  m.llt = std::move(ev.llt);
  m.rinv_resid = std::move(ev.rinv_resid);
  m.rinv_one = std::move(ev.rinv_one);
  m.one_rinv_one = ev.one_rinv_one;
}

// Golden-section maximization of f over [lo, hi].
template <typename F>
std::pair<double, double> golden_max(const F& f, double lo, double hi, double tol) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 >= f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

// Multi-start theta MLE at a fixed nugget. Returns (log theta, lnL).
template <typename F>
std::pair<double, double> fit_theta(const F& lnl_of_log_theta) {
  constexpr int kStarts = 5;
  double best_t = 0.0, best_v = kNegInf;
  for (int s = 0; s < kStarts; ++s) {
    const double lo = kLogThetaMin + (kLogThetaMax - kLogThetaMin) * s / kStarts;
    const double hi = kLogThetaMin + (kLogThetaMax - kLogThetaMin) * (s + 1) / kStarts;
    auto [t, v] = golden_max(lnl_of_log_theta, lo, hi, 1e-3);
    if (v > best_v) {
      best_v = v;
      best_t = t;
    }
  }
  return {best_t, best_v};
}

// Nelder-Mead maximization with projection onto box bounds.
template <typename F>
std::pair<Eigen::VectorXd, double> nelder_mead_max(const F& f, const Eigen::VectorXd& x0,
                                                   const Eigen::VectorXd& steps, int max_evals) {
  const int d = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> xs(d + 1, x0);
  std::vector<double> fs(d + 1);
  int evals = 0;
  for (int i = 1; i <= d; ++i) xs[i](i - 1) += steps(i - 1);
  for (int i = 0; i <= d; ++i) {
    fs[i] = f(xs[i]);
    ++evals;
  }
  auto order = [&] {
    std::vector<int> idx(d + 1);
    for (int i = 0; i <= d; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] > fs[b]; });
    std::vector<Eigen::VectorXd> nxs(d + 1);
    std::vector<double> nfs(d + 1);
    for (int i = 0; i <= d; ++i) {
      nxs[i] = xs[idx[i]];
      nfs[i] = fs[idx[i]];
    }
    xs = std::move(nxs);
    fs = std::move(nfs);
  };
  order();
  while (evals < max_evals) {
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < d; ++i) centroid += xs[i];
    centroid /= d;
    const Eigen::VectorXd refl = centroid + (centroid - xs[d]);
    const double f_refl = f(refl);
    ++evals;
    if (f_refl > fs[0]) {
      const Eigen::VectorXd expa = centroid + 2.0 * (centroid - xs[d]);
      const double f_expa = f(expa);
      ++evals;
      if (f_expa > f_refl) {
        xs[d] = expa;
        fs[d] = f_expa;
      } else {
        xs[d] = refl;
        fs[d] = f_refl;
      }
    } else if (f_refl > fs[d - 1]) {
      xs[d] = refl;
      fs[d] = f_refl;
    } else {
      const Eigen::VectorXd contr = centroid + 0.5 * (xs[d] - centroid);
      const double f_contr = f(contr);
      ++evals;
      if (f_contr > fs[d]) {
        xs[d] = contr;
        fs[d] = f_contr;
      } else {
        for (int i = 1; i <= d; ++i) {
          xs[i] = xs[0] + 0.5 * (xs[i] - xs[0]);
          fs[i] = f(xs[i]);
          ++evals;
        }
      }
    }
    order();
  }
  return {xs[0], fs[0]};
}

bool y_is_constant(const Eigen::VectorXd& y) { return y.maxCoeff() == y.minCoeff(); }

// Factorizes the correlation matrix for a constant-response model so the
// prediction cache is usable; sigma2 stays effectively zero.
void fit_constant(KrigingModel& m, const Eigen::MatrixXd& dist, const Eigen::VectorXd& y) {
  m.constant_y = true;
  m.theta = 1.0;
  for (double nugget = kNuggetMin; nugget <= kNuggetMax * 1.0000001; nugget *= 10.0) {
    LikelihoodEval ev = eval_likelihood(dist, y, m.theta, nugget);
    if (!ev.ok) continue;
    m.mu = y(0);
    m.sigma2 = 1e-300;
    m.log_likelihood = ev.log_likelihood;
    m.nugget = nugget;
    m.llt = std::move(ev.llt);
    m.rinv_one = std::move(ev.rinv_one);
    m.one_rinv_one = ev.one_rinv_one;
    m.rinv_resid = Eigen::VectorXd::Zero(y.size());
    return;
  }
  throw std::runtime_error("kriging: degenerate correlation");
}

}  // namespace

double KrigingModel::y_best() const { return y.minCoeff(); }

KrigingModel kriging_fit(const Eigen::MatrixXd& dist, const Eigen::VectorXd& y) {
  const int n = static_cast<int>(y.size());
  if (n < 1) throw std::invalid_argument("kriging: empty training set");
  if (!y.allFinite()) throw std::invalid_argument("kriging: non-finite response");
  check_distance_matrix(dist, n);

  KrigingModel m;
  m.dist = dist;
  m.y = y;
  if (y_is_constant(y)) {
    fit_constant(m, dist, y);
    return m;
  }

  for (double nugget = kNuggetMin; nugget <= kNuggetMax * 1.0000001; nugget *= 10.0) {
    auto lnl = [&](double t) {
      return eval_likelihood(dist, y, std::exp(t), nugget).log_likelihood;
    };
    auto [t, v] = fit_theta(lnl);
    if (!std::isfinite(v)) continue;
    m.theta = std::exp(t);
    LikelihoodEval ev = eval_likelihood(dist, y, m.theta, nugget);
    if (!ev.ok) continue;
    store_eval(m, std::move(ev), nugget);
    return m;
  }
  throw std::runtime_error("kriging: degenerate correlation");
}

KrigingModel kriging_fit_md(const Eigen::MatrixXd& d_gd, const Eigen::MatrixXd& d_gidd,
                            const Eigen::MatrixXd& d_phd, const Eigen::VectorXd& y) {
  const int n = static_cast<int>(y.size());
  if (n < 1) throw std::invalid_argument("kriging: empty training set");
  if (!y.allFinite()) throw std::invalid_argument("kriging: non-finite response");
  check_distance_matrix(d_gd, n);
  check_distance_matrix(d_gidd, n);
  check_distance_matrix(d_phd, n);

  KrigingModel m;
  m.md_mode = true;
  m.dist_gd = d_gd;
  m.dist_gidd = d_gidd;
  m.dist_phd = d_phd;
  m.y = y;
  if (y_is_constant(y)) {
    m.beta = {1.0, 1.0, 1.0};
    fit_constant(m, d_gd + d_gidd + d_phd, y);
    return m;
  }

  auto project = [](Eigen::VectorXd x) {
    x(0) = std::clamp(x(0), kLogThetaMin, kLogThetaMax);
    for (int i = 1; i < 4; ++i) x(i) = std::clamp(x(i), 0.0, kBetaMax);
    return x;
  };

  Eigen::MatrixXd combined(n, n);
  for (double nugget = kNuggetMin; nugget <= kNuggetMax * 1.0000001; nugget *= 10.0) {
    auto objective = [&](const Eigen::VectorXd& raw) {
      const Eigen::VectorXd x = project(raw);
      if (x(1) == 0.0 && x(2) == 0.0 && x(3) == 0.0) return kNegInf;
      combined = x(1) * d_gd + x(2) * d_gidd + x(3) * d_phd;
      return eval_likelihood(combined, y, std::exp(x(0)), nugget).log_likelihood;
    };

    const double starts[5][4] = {{0.0, 1.0, 1.0, 1.0},
                                 {0.0, 1.0, 0.0, 0.0},
                                 {0.0, 0.0, 1.0, 0.0},
                                 {0.0, 0.0, 0.0, 1.0},
                                 {2.0, 0.5, 0.5, 0.5}};
    Eigen::VectorXd best_x;
    double best_v = kNegInf;
    for (const auto& s : starts) {
      Eigen::VectorXd x0(4);
      x0 << s[0], s[1], s[2], s[3];
      Eigen::VectorXd steps(4);
      steps << 1.0, 0.5, 0.5, 0.5;
      auto [x, v] = nelder_mead_max(objective, x0, steps, 150);
      if (v > best_v) {
        best_v = v;
        best_x = project(x);
      }
    }
    if (!std::isfinite(best_v)) continue;

    m.theta = std::exp(best_x(0));
    m.beta = {best_x(1), best_x(2), best_x(3)};
    combined = m.beta.gd * d_gd + m.beta.gidd * d_gidd + m.beta.phd * d_phd;
    LikelihoodEval ev = eval_likelihood(combined, y, m.theta, nugget);
    if (!ev.ok) continue;
    store_eval(m, std::move(ev), nugget);
    return m;
  }
  throw std::runtime_error("kriging: degenerate correlation");
}

namespace {

Prediction predict_from_kernel(const KrigingModel& m, const Eigen::VectorXd& r) {
  Prediction p;
  p.mean = m.mu + r.dot(m.rinv_resid);
  const Eigen::VectorXd rinv_r = m.llt.solve(r);
  const double one_r = m.rinv_one.dot(r);
  double var = m.sigma2 *
               (1.0 - r.dot(rinv_r) + (1.0 - one_r) * (1.0 - one_r) / m.one_rinv_one);
  p.sd = var > 0.0 ? std::sqrt(var) : 0.0;
  return p;
}

void check_distance_vector(const KrigingModel& m, const Eigen::VectorXd& d) {
  if (d.size() != m.n()) throw std::invalid_argument("kriging: distance vector size mismatch");
  if (!d.allFinite() || d.minCoeff() < 0.0)
    throw std::invalid_argument("kriging: invalid distance vector");
}

}  // namespace

Prediction kriging_predict(const KrigingModel& m, const Eigen::VectorXd& d_new) {
  if (m.md_mode) throw std::logic_error("kriging: model was fitted in md mode");
  check_distance_vector(m, d_new);
  return predict_from_kernel(m, (-m.theta * d_new.array()).exp());
}

Prediction kriging_predict_md(const KrigingModel& m, const Eigen::VectorXd& d_gd,
                              const Eigen::VectorXd& d_gidd, const Eigen::VectorXd& d_phd) {
  if (!m.md_mode) throw std::logic_error("kriging: model was fitted in single-distance mode");
  check_distance_vector(m, d_gd);
  check_distance_vector(m, d_gidd);
  check_distance_vector(m, d_phd);
  const Eigen::VectorXd combined =
      m.beta.gd * d_gd + m.beta.gidd * d_gidd + m.beta.phd * d_phd;
  return predict_from_kernel(m, (-m.theta * combined.array()).exp());
}

double expected_improvement(double mean, double sd, double y_best) {
  if (!(sd >= 0.0)) throw std::invalid_argument("expected_improvement: sd must be >= 0");
  const double gap = y_best - mean;
  if (sd == 0.0) return gap > 0.0 ? gap : 0.0;
  const double u = gap / sd;
  const double cdf = 0.5 * std::erfc(-u * 0.7071067811865476);
  const double pdf = 0.3989422804014327 * std::exp(-0.5 * u * u);
  const double ei = gap * cdf + sd * pdf;
  return ei > 0.0 ? ei : 0.0;
}

std::string model_dump(const KrigingModel& m) {
  std::ostringstream out;
  out.precision(17);
  out << "kind = " << (m.md_mode ? "md" : "single") << '\n';
  out << "n = " << m.n() << '\n';
  out << "theta = " << m.theta << '\n';
  if (m.md_mode) {
    out << "beta_gd = " << m.beta.gd << '\n';
    out << "beta_gidd = " << m.beta.gidd << '\n';
    out << "beta_phd = " << m.beta.phd << '\n';
  }
  out << "mu = " << m.mu << '\n';
  out << "sigma2 = " << m.sigma2 << '\n';
  out << "nugget = " << m.nugget << '\n';
  out << "log_likelihood = " << m.log_likelihood << '\n';
  out << "constant_y = " << (m.constant_y ? "true" : "false") << '\n';
  return out.str();
}

}  // namespace smbne
