#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "smbne/distances.hpp"
#include "smbne/evolution.hpp"

using namespace smbne;

namespace {

CgpConfigPtr test_config() {
  CgpConfig c;
  c.num_inputs = 2;
  c.num_nodes = 8;
  c.num_outputs = 2;
  c.arity = 3;
  return std::make_shared<const CgpConfig>(c);
}

}  // namespace

TEST_CASE("evaluation budgets are exact, including partial final generations") {
  auto cfg = test_config();
  for (long long budget : {5LL, 7LL, 9LL, 253LL}) {
    long long calls = 0;
    EsConfig ec;
    ec.budget = budget;
    ec.config = cfg;
    Rng rng(1);
    EsResult r = es_run([&](const Genotype&) { ++calls; return 0.5; }, ec, rng);
    CHECK(calls == budget);
    CHECK(r.evals == budget);
    CHECK(r.eval_trace.size() == static_cast<std::size_t>(budget));
    CHECK(r.best_trace.size() == static_cast<std::size_t>(budget));
  }
}

TEST_CASE("a pre-scored initial parent is not re-evaluated") {
  auto cfg = test_config();
  Rng seed_rng(2);
  Genotype parent = random_genotype(cfg, seed_rng);
  long long calls = 0;
  EsConfig ec;
  ec.budget = 8;  // two full generations of offspring only
  ec.initial = parent;
  ec.initial_fitness = 0.4;
  Rng rng(3);
  EsResult r = es_run([&](const Genotype&) { ++calls; return 0.1; }, ec, rng);
  CHECK(calls == 8);
  CHECK(r.evals == 8);
  // Nothing beat the given parent score, so it must survive as the result.
  CHECK(r.best_fitness == 0.4);
  CHECK(r.best.same_genes(parent));
}

TEST_CASE("offspring replace the parent on equal fitness") {
  auto cfg = test_config();
  Rng seed_rng(5);
  Genotype parent = random_genotype(cfg, seed_rng);
  EsConfig ec;
  ec.budget = 41;  // ten generations
  ec.initial = parent;
  ec.initial_fitness.reset();
  ec.mutation = {MutationSpec::SingleActive, 0.0};
  Rng rng(7);
  // Constant objective: every offspring ties the parent, so the lineage must
  // drift away from the initial genotype.
  EsResult r = es_run([](const Genotype&) { return 0.5; }, ec, rng);
  CHECK_FALSE(r.best.same_genes(parent));
}

TEST_CASE("tied offspring resolve to the lowest index") {
  auto cfg = test_config();
  std::vector<Genotype> seen;
  // Call sequence: parent 0.5; generation 1 offspring 0.9, 0.9, 0.3, 0.1;
  // generation 2 offspring all worse. The first 0.9 offspring must win.
  const std::vector<double> script{0.5, 0.9, 0.9, 0.3, 0.1, -1.0, -1.0, -1.0, -1.0};
  EsConfig ec;
  ec.budget = 9;
  ec.config = cfg;
  ec.mutation = {MutationSpec::SingleActive, 0.0};
  Rng rng(11);
  EsResult r = es_run(
      [&](const Genotype& g) {
        seen.push_back(g);
        return script.at(seen.size() - 1);
      },
      ec, rng);
  CHECK(r.best_fitness == 0.9);
  CHECK(r.best.same_genes(seen[1]));  // evaluation #2 = first offspring of gen 1
}

TEST_CASE("the best-so-far trace is the running maximum of the raw trace") {
  auto cfg = test_config();
  EsConfig ec;
  ec.budget = 100;
  ec.config = cfg;
  Rng rng(13);
  // Noisy objective driven by genotype content hash-ish value.
  EsResult r = es_run(
      [](const Genotype& g) {
        double acc = 0.0;
        for (const NodeGene& n : g.nodes)
          for (double w : n.weight) acc += std::sin(w * 5.0);
        return acc;
      },
      ec, rng);
  double running = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < r.eval_trace.size(); ++i) {
    running = std::max(running, r.eval_trace[i]);
    CHECK(r.best_trace[i] == running);
  }
  CHECK(r.best_fitness == running);
}

TEST_CASE("the search actually improves a distance-to-target objective") {
  auto cfg = test_config();
  Rng target_rng(17);
  Genotype target = random_genotype(cfg, target_rng);
  const Objective obj = [&](const Genotype& g) { return 1.0 - gd(g, target); };
  double total_gain = 0.0;
  int es_wins = 0;
  for (int seed = 0; seed < 30; ++seed) {
    EsConfig ec;
    ec.budget = 253;
    ec.config = cfg;
    ec.mutation = {MutationSpec::Probabilistic, 0.05};
    Rng r1(100 + seed);
    EsResult es = es_run(obj, ec, r1);
    total_gain += es.best_trace.back() - es.eval_trace.front();
    Rng r2(100 + seed);
    EsResult rnd = random_search(obj, 253, cfg, r2);
    es_wins += es.best_fitness > rnd.best_fitness;
    CHECK(es.best_fitness >= es.eval_trace.front());  // elitist by construction
  }
  CHECK(total_gain / 30.0 > 0.05);
  CHECK(es_wins >= 20);  // hill-climbing beats blind sampling on a smooth objective
}

TEST_CASE("random search keeps the earliest best on ties and spends its budget") {
  auto cfg = test_config();
  std::vector<Genotype> seen;
  Rng rng(19);
  EsResult r = random_search(
      [&](const Genotype& g) {
        seen.push_back(g);
        return 1.0;
      },
      25, cfg, rng);
  CHECK(r.evals == 25);
  CHECK(seen.size() == 25);
  CHECK(r.best.same_genes(seen.front()));
  CHECK(r.best_trace.front() == 1.0);
}

TEST_CASE("non-finite objective values abort the run") {
  auto cfg = test_config();
  EsConfig ec;
  ec.budget = 9;
  ec.config = cfg;
  Rng rng(23);
  long long calls = 0;
  CHECK_THROWS_AS(
      es_run([&](const Genotype&) { return ++calls == 3 ? std::nan("") : 0.5; }, ec, rng),
      std::runtime_error);
  Rng rng2(23);
  CHECK_THROWS_AS(random_search([](const Genotype&) {
                    return std::numeric_limits<double>::infinity();
                  }, 5, cfg, rng2),
                  std::runtime_error);
}

TEST_CASE("configuration validation") {
  auto cfg = test_config();
  EsConfig ec;
  ec.config = cfg;
  ec.budget = 4;  // needs 5 when the parent evaluation is part of the budget
  CHECK_THROWS_AS(ec.validate(), std::invalid_argument);
  ec.budget = 5;
  CHECK_NOTHROW(ec.validate());
  // With a pre-scored parent, one generation fits in a budget of lambda.
  Rng rng(29);
  ec.initial = random_genotype(cfg, rng);
  ec.initial_fitness = 0.5;
  ec.budget = 4;
  CHECK_NOTHROW(ec.validate());
  ec.budget = 0;
  CHECK_THROWS_AS(ec.validate(), std::invalid_argument);
  EsConfig no_source;
  no_source.budget = 10;  // neither an initial genotype nor a config to draw from
  CHECK_THROWS_AS(no_source.validate(), std::invalid_argument);
}

TEST_CASE("identical seeds give identical runs") {
  auto cfg = test_config();
  const Objective obj = [](const Genotype& g) {
    double acc = 0.0;
    for (const NodeGene& n : g.nodes) acc += n.active ? n.weight[0] : 0.0;
    return acc;
  };
  EsConfig ec;
  ec.budget = 60;
  ec.config = cfg;
  Rng r1(31), r2(31);
  EsResult a = es_run(obj, ec, r1);
  EsResult b = es_run(obj, ec, r2);
  CHECK(a.best_fitness == b.best_fitness);
  CHECK(a.eval_trace == b.eval_trace);
  CHECK(a.best.same_genes(b.best));
}
