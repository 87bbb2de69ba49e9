#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "smbne/cgp.hpp"

using namespace smbne;

namespace {

CgpConfigPtr small_config() {
  CgpConfig c;
  c.num_inputs = 2;
  c.num_nodes = 8;
  c.num_outputs = 1;
  c.arity = 3;
  return std::make_shared<const CgpConfig>(c);
}

// Flattened gene-level view used to count differences between genotypes.
struct GeneView {
  std::vector<int> ints;
  std::vector<double> reals;
};

GeneView genes_of(const Genotype& g) {
  GeneView v;
  for (const NodeGene& n : g.nodes) {
    v.ints.insert(v.ints.end(), n.conn.begin(), n.conn.end());
    v.ints.push_back(n.func);
    v.reals.insert(v.reals.end(), n.weight.begin(), n.weight.end());
  }
  v.ints.insert(v.ints.end(), g.outputs.begin(), g.outputs.end());
  return v;
}

int diff_count(const Genotype& a, const Genotype& b) {
  const GeneView va = genes_of(a), vb = genes_of(b);
  REQUIRE(va.ints.size() == vb.ints.size());
  REQUIRE(va.reals.size() == vb.reals.size());
  int d = 0;
  for (std::size_t i = 0; i < va.ints.size(); ++i) d += va.ints[i] != vb.ints[i];
  for (std::size_t i = 0; i < va.reals.size(); ++i) d += va.reals[i] != vb.reals[i];
  return d;
}

}  // namespace

TEST_CASE("transfer functions match closed forms") {
  // Constants frozen from an independent high-precision evaluation.
  CHECK(transfer(Transfer::Tanh, 0.5) == doctest::Approx(0.46211715726000974).epsilon(1e-15));
  CHECK(transfer(Transfer::Softsign, 0.5) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(transfer(Transfer::Sigmoid, 0.5) == doctest::Approx(0.6224593312018546).epsilon(1e-15));
  CHECK(transfer(Transfer::Gauss, 0.5) == doctest::Approx(0.7788007830714049).epsilon(1e-15));
  CHECK(transfer(Transfer::Gauss, 1.0) == doctest::Approx(0.36787944117144233).epsilon(1e-15));
  CHECK(transfer(Transfer::Step, 1e-12) == 1.0);
  CHECK(transfer(Transfer::Step, 0.0) == 0.0);
  CHECK(transfer(Transfer::Step, -3.0) == 0.0);
  // Odd symmetry / range checks over a sweep.
  for (double x = -5.0; x <= 5.0; x += 0.37) {
    CHECK(transfer(Transfer::Tanh, x) == doctest::Approx(-transfer(Transfer::Tanh, -x)));
    CHECK(transfer(Transfer::Softsign, x) == doctest::Approx(x / (1.0 + std::abs(x))));
    CHECK(transfer(Transfer::Sigmoid, x) ==
          doctest::Approx(1.0 - transfer(Transfer::Sigmoid, -x)).epsilon(1e-12));
    CHECK(transfer(Transfer::Gauss, x) <= 1.0);
    CHECK(transfer(Transfer::Gauss, x) > 0.0);
  }
}

TEST_CASE("transfer names round-trip") {
  for (Transfer f : {Transfer::Tanh, Transfer::Softsign, Transfer::Step, Transfer::Sigmoid,
                     Transfer::Gauss}) {
    auto back = transfer_from_name(transfer_name(f));
    REQUIRE(back.has_value());
    CHECK(*back == f);
  }
  CHECK_FALSE(transfer_from_name("relu").has_value());
  CHECK_FALSE(transfer_from_name("").has_value());
}

TEST_CASE("config validation and gene count") {
  CgpConfig c;
  c.num_inputs = 4;
  c.num_nodes = 40;
  c.num_outputs = 3;
  c.arity = 5;
  CHECK_NOTHROW(c.validate());
  CHECK(c.gene_count() == 40 * 11 + 3);
  CHECK(c.num_sources() == 44);

  CgpConfig bad = c;
  bad.num_nodes = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.weight_min = 1.0;
  bad.weight_max = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.functions.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.arity = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("random genotypes satisfy the structural invariants") {
  auto cfg = small_config();
  Rng rng(42);
  for (int t = 0; t < 200; ++t) {
    Genotype g = random_genotype(cfg, rng);
    CHECK_NOTHROW(check_genotype(g));
    REQUIRE(static_cast<int>(g.nodes.size()) == cfg->num_nodes);
    for (int j = 0; j < cfg->num_nodes; ++j) {
      const NodeGene& n = g.nodes[j];
      REQUIRE(static_cast<int>(n.conn.size()) == cfg->arity);
      for (int c : n.conn) {
        CHECK(c >= 0);
        CHECK(c < cfg->num_inputs + j);  // feed-forward
      }
      for (double w : n.weight) {
        CHECK(w >= cfg->weight_min);
        CHECK(w <= cfg->weight_max);
      }
      CHECK(n.func >= 0);
      CHECK(n.func < static_cast<int>(cfg->functions.size()));
    }
    for (int o : g.outputs) {
      CHECK(o >= 0);
      CHECK(o < cfg->num_sources());
    }
  }
  // Determinism: same seed, same genotype.
  Rng r1(7), r2(7);
  CHECK(random_genotype(cfg, r1).same_genes(random_genotype(cfg, r2)));
}

TEST_CASE("activity marks exactly the backward-reachable nodes") {
  auto cfg = small_config();  // 2 inputs, 8 nodes, arity 3
  Rng rng(1);
  Genotype g = random_genotype(cfg, rng);
  // Wire a known chain: n0 <- inputs, n3 <- n0, n7 <- n3, output = n7.
  for (NodeGene& n : g.nodes) n.conn.assign(3, 0);
  g.nodes[3].conn = {2, 0, 0};  // source 2 == node 0
  g.nodes[7].conn = {5, 5, 5};  // source 5 == node 3
  g.outputs = {9};              // source 9 == node 7
  recompute_activity(g);
  for (int j = 0; j < 8; ++j) {
    const bool expect = j == 0 || j == 3 || j == 7;
    CHECK(g.nodes[j].active == expect);
  }

  // Output wired straight to an input: no node is active.
  g.outputs = {1};
  recompute_activity(g);
  for (const NodeGene& n : g.nodes) CHECK_FALSE(n.active);
}

TEST_CASE("evaluation matches a hand-computed straight line program") {
  CgpConfig c;
  c.num_inputs = 1;
  c.num_nodes = 2;
  c.num_outputs = 1;
  c.arity = 2;
  auto cfg = std::make_shared<const CgpConfig>(c);
  Genotype g;
  g.config = cfg;
  g.nodes.resize(2);
  // n0 (source 1): both connections to the input, weights 0.5 and 0.25 -> tanh(0.75 x).
  g.nodes[0].conn = {0, 0};
  g.nodes[0].weight = {0.5, 0.25};
  g.nodes[0].func = 0;  // tanh
  // n1 (source 2): input and n0, weights 1 and -1 -> sigmoid(x - tanh(0.75 x)).
  g.nodes[1].conn = {0, 1};
  g.nodes[1].weight = {1.0, -1.0};
  g.nodes[1].func = 3;  // sigmoid
  g.outputs = {2};
  recompute_activity(g);
  REQUIRE(g.nodes[0].active);
  REQUIRE(g.nodes[1].active);

  Eigen::MatrixXd in(4, 1);
  in << -2.0, -0.3, 0.0, 1.7;
  Phenotype p = evaluate_ann(g, in);
  REQUIRE(p.outputs.rows() == 4);
  REQUIRE(p.outputs.cols() == 1);
  for (int r = 0; r < 4; ++r) {
    const double x = in(r, 0);
    const double expect = 1.0 / (1.0 + std::exp(-(x - std::tanh(0.75 * x))));
    CHECK(p.outputs(r, 0) == doctest::Approx(expect).epsilon(1e-14));
  }

  // Duplicate-connection merge: the two parallel links into n0 behave as one
  // link with the summed weight.
  Genotype merged = g;
  merged.nodes[0].conn = {0, 0};
  merged.nodes[0].weight = {0.75, 0.0};
  Phenotype q = evaluate_ann(merged, in);
  CHECK((p.outputs - q.outputs).cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  CHECK_THROWS_AS(evaluate_ann(g, Eigen::MatrixXd::Constant(2, 1, std::nan(""))),
                  std::invalid_argument);
}

TEST_CASE("softmax post-processing normalizes each row") {
  auto cfg = small_config();
  CgpConfig c3 = *cfg;
  c3.num_outputs = 3;
  auto cfg3 = std::make_shared<const CgpConfig>(c3);
  Rng rng(5);
  Eigen::MatrixXd in = Eigen::MatrixXd::Random(10, 2);
  Genotype g = random_genotype(cfg3, rng);
  Phenotype raw = evaluate_ann(g, in, Post::None);
  Phenotype sm = evaluate_ann(g, in, Post::Softmax);
  CHECK_FALSE(raw.softmaxed);
  CHECK(sm.softmaxed);
  for (int r = 0; r < 10; ++r) {
    CHECK(sm.outputs.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sm.outputs.row(r).minCoeff() > 0.0);
    // Softmax of the row computed directly.
    Eigen::Vector3d e = (raw.outputs.row(r).array() - raw.outputs.row(r).maxCoeff()).exp();
    Eigen::Vector3d expect = e / e.sum();
    for (int k = 0; k < 3; ++k)
      CHECK(sm.outputs(r, k) == doctest::Approx(expect(k)).epsilon(1e-12));
  }
}

TEST_CASE("evaluator agrees with evaluate_ann and counts calls") {
  auto cfg = small_config();
  Rng rng(11);
  Eigen::MatrixXd in = Eigen::MatrixXd::Random(20, 2);
  Evaluator ev(in, Post::None);
  for (int t = 0; t < 25; ++t) {
    Genotype g = random_genotype(cfg, rng);
    Phenotype a = ev(g);
    Phenotype b = evaluate_ann(g, in, Post::None);
    CHECK((a.outputs - b.outputs).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }
  CHECK(ev.eval_count() == 25);
}

TEST_CASE("inactive genes do not change behavior") {
  auto cfg = small_config();
  Rng rng(17);
  Eigen::MatrixXd in = Eigen::MatrixXd::Random(12, 2);
  int perturbed = 0;
  for (int t = 0; t < 100; ++t) {
    Genotype g = random_genotype(cfg, rng);
    Genotype h = g;
    for (NodeGene& n : h.nodes) {
      if (n.active) continue;
      ++perturbed;
      n.func = (n.func + 1) % static_cast<int>(cfg->functions.size());
      for (double& w : n.weight) w = -w;
      std::reverse(n.conn.begin(), n.conn.end());
    }
    recompute_activity(h);
    Phenotype a = evaluate_ann(g, in);
    Phenotype b = evaluate_ann(h, in);
    CHECK((a.outputs - b.outputs).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }
  CHECK(perturbed > 50);  // the property must actually have been exercised
}

TEST_CASE("probabilistic mutation: rate 0 copies, rate 1 resamples weights") {
  auto cfg = small_config();
  Rng rng(23);
  Genotype g = random_genotype(cfg, rng);
  Genotype same = mutate_probabilistic(g, 0.0, rng);
  CHECK(same.same_genes(g));
  Genotype all = mutate_probabilistic(g, 1.0, rng);
  // Continuous weight genes are almost surely all different after a full resample.
  int weight_diffs = 0;
  for (int j = 0; j < cfg->num_nodes; ++j)
    for (int a = 0; a < cfg->arity; ++a)
      weight_diffs += all.nodes[j].weight[a] != g.nodes[j].weight[a];
  CHECK(weight_diffs == cfg->num_nodes * cfg->arity);
}

TEST_CASE("probabilistic mutation changes genes at the analytic rate") {
  // A resampled discrete gene may redraw its old value, so the expected number of
  // *observable* changes is rate * sum over genes of (1 - 1/domain), with domain = 1
  // for continuous weights (they essentially always change).
  auto cfg = small_config();
  const double rate = 0.1;
  double expected = 0.0;
  for (int j = 0; j < cfg->num_nodes; ++j) {
    const double conn_domain = cfg->num_inputs + j;
    expected += cfg->arity * (1.0 - 1.0 / conn_domain);  // connection genes
    expected += cfg->arity;                              // weight genes
    expected += 1.0 - 1.0 / static_cast<double>(cfg->functions.size());
  }
  expected += cfg->num_outputs * (1.0 - 1.0 / cfg->num_sources());
  expected *= rate;

  Rng rng(31);
  Genotype g = random_genotype(cfg, rng);
  const int trials = 20000;
  long long changed = 0;
  for (int t = 0; t < trials; ++t) changed += diff_count(g, mutate_probabilistic(g, rate, rng));
  const double mean = static_cast<double>(changed) / trials;
  // Binomial-ish spread: sd of the mean is well under 0.05 at 20k trials.
  CHECK(mean == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("single mutation: exactly one active gene changes, inactive drift allowed") {
  auto cfg = small_config();
  Rng rng(37);
  for (int t = 0; t < 300; ++t) {
    Genotype g = random_genotype(cfg, rng);
    Genotype h = mutate_single_active(g, rng);
    CHECK_NOTHROW(check_genotype(h));
    CHECK(diff_count(g, h) >= 1);  // forced-different: at least the final hit

    // Count differences on active-node genes and output genes of the parent.
    int active_diffs = 0;
    for (int j = 0; j < cfg->num_nodes; ++j) {
      if (!g.nodes[j].active) continue;
      for (int a = 0; a < cfg->arity; ++a) {
        active_diffs += g.nodes[j].conn[a] != h.nodes[j].conn[a];
        active_diffs += g.nodes[j].weight[a] != h.nodes[j].weight[a];
      }
      active_diffs += g.nodes[j].func != h.nodes[j].func;
    }
    for (int o = 0; o < cfg->num_outputs; ++o) active_diffs += g.outputs[o] != h.outputs[o];
    CHECK(active_diffs == 1);
  }
}

TEST_CASE("single mutation with no active nodes rewires an output") {
  CgpConfig c;
  c.num_inputs = 3;
  c.num_nodes = 4;
  c.num_outputs = 1;
  c.arity = 2;
  auto cfg = std::make_shared<const CgpConfig>(c);
  Rng rng(41);
  Genotype g = random_genotype(cfg, rng);
  g.outputs = {1};  // straight to an input; nothing is active
  recompute_activity(g);
  for (const NodeGene& n : g.nodes) REQUIRE_FALSE(n.active);
  for (int t = 0; t < 50; ++t) {
    Genotype h = mutate_single_active(g, rng);
    CHECK(h.outputs[0] != 1);  // the only active gene is the output gene
  }
}

TEST_CASE("text form round-trips exactly") {
  auto cfg = small_config();
  Rng rng(43);
  for (int t = 0; t < 50; ++t) {
    Genotype g = random_genotype(cfg, rng);
    const std::string text = genotype_to_text(g);
    Genotype back = genotype_from_text(text, cfg);
    CHECK(back.same_genes(g));
  }
  CHECK_THROWS_AS(genotype_from_text("not a genotype", cfg), std::invalid_argument);
  CHECK_THROWS_AS(genotype_from_text("", cfg), std::invalid_argument);
}

TEST_CASE("apply_mutation dispatches on the mutation kind") {
  auto cfg = small_config();
  Rng r1(47), r2(47);
  Genotype g = random_genotype(cfg, r1);
  random_genotype(cfg, r2);  // keep the streams aligned
  MutationSpec prob{MutationSpec::Probabilistic, 0.2};
  CHECK(apply_mutation(g, prob, r1).same_genes(mutate_probabilistic(g, 0.2, r2)));
  MutationSpec single{MutationSpec::SingleActive, 0.0};
  CHECK(apply_mutation(g, single, r1).same_genes(mutate_single_active(g, r2)));
}
