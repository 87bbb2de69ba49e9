#include "smbne/loop.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "smbne/data.hpp"

namespace smbne {

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Init: return "init";
    case Phase::Local: return "local";
    case Phase::Global: return "global";
    case Phase::Fallback: return "fallback";
  }
  return "?";
}

namespace {

constexpr int kEsLambda = 4;

void append_csv_double(std::string& out, double v) {
  if (!std::isnan(v)) out += format_double(v);
}

}  // namespace

std::string trace_to_csv(const std::vector<TraceRow>& trace) {
  std::string out =
      "iteration,true_evals,proposal_phase,fitness,best_fitness,theta,beta1,beta2,beta3,nugget\n";
  for (const TraceRow& r : trace) {
    out += std::to_string(r.iteration);
    out += ',';
    out += std::to_string(r.true_evals);
    out += ',';
    out += phase_name(r.phase);
    out += ',';
    out += format_double(r.fitness);
    out += ',';
    out += format_double(r.best_fitness);
    out += ',';
    append_csv_double(out, r.theta);
    out += ',';
    append_csv_double(out, r.beta1);
    out += ',';
    append_csv_double(out, r.beta2);
    out += ',';
    append_csv_double(out, r.beta3);
    out += ',';
    append_csv_double(out, r.nugget);
    out += '\n';
  }
  return out;
}

void SmbneConfig::validate() const {
  if (!config) throw std::invalid_argument("smbne: null cgp config");
  config->validate();
  if (k < 1) throw std::invalid_argument("smbne: k must be >= 1");
  if (budget < k) throw std::invalid_argument("smbne: budget must be >= k");
  if (m < 5) throw std::invalid_argument("smbne: model size must be >= 5");
  for (const PhaseSpec* ps : {&local, &global}) {
    if (ps->screen < 1) throw std::invalid_argument("smbne: screen size must be >= 1");
    if (ps->es_budget < kEsLambda)
      throw std::invalid_argument("smbne: surrogate es budget must cover one generation");
  }
  if (distance.kind == DistanceKind::Md) distance.beta.validate();
  if (distance.kind == DistanceKind::Phd || distance.kind == DistanceKind::Md)
    inputs.validate(config->num_inputs);
}

std::vector<int> select_modeling_indices(const std::vector<double>& fitness, int m, Rng& rng) {
  const int n = static_cast<int>(fitness.size());
  std::vector<int> idx;
  if (n <= m) {
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return fitness[a] != fitness[b] ? fitness[a] > fitness[b] : a < b;
  });
  const int nbest = m / 5;
  idx.assign(order.begin(), order.begin() + nbest);
  // Uniform draw without replacement from the remainder via partial
  // Fisher-Yates on the non-elite tail.
  std::vector<int> rest(order.begin() + nbest, order.end());
  const int want = m - nbest;
  for (int i = 0; i < want; ++i) {
    const int j = std::uniform_int_distribution<int>(i, static_cast<int>(rest.size()) - 1)(rng);
    std::swap(rest[i], rest[j]);
    idx.push_back(rest[i]);
  }
  return idx;
}

SmbneResult smbne_run(const Objective& objective, const SmbneConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const bool md = config.distance.kind == DistanceKind::Md;
  DistanceOracle oracle(config.distance, config.config, config.inputs);

  std::vector<Genotype> archive;
  std::vector<double> fitness;
  int best_index = -1;
  SmbneResult res;

  auto true_eval = [&](Genotype g, long long iteration, Phase phase, const KrigingModel* model) {
    const double f = objective(g);
    if (!std::isfinite(f))
      throw std::runtime_error("smbne_run: objective returned a non-finite value");
    ++res.true_evals;
    oracle.add(g);
    archive.push_back(std::move(g));
    fitness.push_back(f);
    if (best_index < 0 || f > res.best_fitness) {
      best_index = static_cast<int>(archive.size()) - 1;
      res.best = archive.back();
      res.best_fitness = f;
    }
    TraceRow row;
    row.iteration = iteration;
    row.true_evals = res.true_evals;
    row.phase = phase;
    row.fitness = f;
    row.best_fitness = res.best_fitness;
    if (model) {
      row.theta = model->theta;
      row.nugget = model->nugget;
      if (model->md_mode) {
        row.beta1 = model->beta.gd;
        row.beta2 = model->beta.gidd;
        row.beta3 = model->beta.phd;
      }
    }
    res.trace.push_back(row);
  };

  for (int i = 0; i < config.k; ++i)
    true_eval(random_genotype(config.config, rng), 0, Phase::Init, nullptr);

  long long iteration = 0;
  while (res.true_evals < config.budget) {
    ++iteration;
    const Phase phase = iteration % 2 == 1 ? Phase::Local : Phase::Global;
    std::vector<int> idx = select_modeling_indices(fitness, config.m, rng);
    Eigen::VectorXd y(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) y(static_cast<int>(i)) = -fitness[idx[i]];

    std::optional<KrigingModel> model;
    try {
      if (md) {
        model = kriging_fit_md(oracle.submatrix_gd(idx), oracle.submatrix_gidd(idx),
                               oracle.submatrix_phd(idx), y);
      } else {
        switch (config.distance.kind) {
          case DistanceKind::Gd: model = kriging_fit(oracle.submatrix_gd(idx), y); break;
          case DistanceKind::Gidd: model = kriging_fit(oracle.submatrix_gidd(idx), y); break;
          default: model = kriging_fit(oracle.submatrix_phd(idx), y); break;
        }
      }
    } catch (const std::exception&) {
      model.reset();
    }
    if (!model) {
      ++res.fallbacks;
      true_eval(random_genotype(config.config, rng), iteration, Phase::Fallback, nullptr);
      continue;
    }

    const double y_best = model->y_best();
    auto surrogate = [&](const Genotype& g) {
      const DistanceOracle::CandidatePtr cand = oracle.make_candidate(g);
      Eigen::VectorXd d_gd, d_gidd, d_phd;
      Prediction pred;
      if (md) {
        oracle.candidate_distances(*cand, idx, &d_gd, &d_gidd, &d_phd);
        pred = kriging_predict_md(*model, d_gd, d_gidd, d_phd);
      } else {
        Eigen::VectorXd* slot = config.distance.kind == DistanceKind::Gd    ? &d_gd
                                : config.distance.kind == DistanceKind::Gidd ? &d_gidd
                                                                             : &d_phd;
        oracle.candidate_distances(*cand, idx, slot == &d_gd ? slot : nullptr,
                                   slot == &d_gidd ? slot : nullptr,
                                   slot == &d_phd ? slot : nullptr);
        pred = kriging_predict(*model, *slot);
      }
      ++res.surrogate_evals;
      return expected_improvement(pred.mean, pred.sd, y_best);
    };

    const PhaseSpec& ps = phase == Phase::Local ? config.local : config.global;
    std::vector<Genotype> screened;
    screened.reserve(ps.screen);
    if (phase == Phase::Local) {
      const Genotype& parent = archive[best_index];
      screened.push_back(parent);
      for (int i = 1; i < ps.screen; ++i)
        screened.push_back(apply_mutation(parent, ps.mutation, rng));
    } else {
      for (int i = 0; i < ps.screen; ++i) screened.push_back(random_genotype(config.config, rng));
    }
    int seed_idx = 0;
    double seed_ei = surrogate(screened[0]);
    for (int i = 1; i < ps.screen; ++i) {
      const double ei = surrogate(screened[i]);
      if (ei > seed_ei) {
        seed_ei = ei;
        seed_idx = i;
      }
    }

    EsConfig ec;
    ec.lambda = kEsLambda;
    ec.mutation = ps.mutation;
    ec.budget = ps.es_budget;
    ec.initial = std::move(screened[seed_idx]);
    ec.initial_fitness = seed_ei;
    ec.config = config.config;
    EsResult er = es_run(surrogate, ec, rng);

    true_eval(std::move(er.best), iteration, phase, &*model);
  }
  return res;
}

}  // namespace smbne
