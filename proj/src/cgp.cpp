#include "smbne/cgp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace smbne {

const char* transfer_name(Transfer f) {
  switch (f) {
    case Transfer::Tanh: return "tanh";
    case Transfer::Softsign: return "softsign";
    case Transfer::Step: return "step";
    case Transfer::Sigmoid: return "sigmoid";
    case Transfer::Gauss: return "gauss";
  }
  return "?";
}

std::optional<Transfer> transfer_from_name(std::string_view name) {
  for (Transfer f : {Transfer::Tanh, Transfer::Softsign, Transfer::Step, Transfer::Sigmoid,
                     Transfer::Gauss}) {
    if (name == transfer_name(f)) return f;
  }
  return std::nullopt;
}

double transfer(Transfer f, double x) {
  switch (f) {
    case Transfer::Tanh: return std::tanh(x);
    case Transfer::Softsign: return x / (1.0 + std::abs(x));
    case Transfer::Step: return x > 0.0 ? 1.0 : 0.0;
    case Transfer::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Transfer::Gauss: return std::exp(-x * x);
  }
  return 0.0;
}

void CgpConfig::validate() const {
  if (num_inputs < 1) throw std::invalid_argument("CgpConfig: num_inputs must be >= 1");
  if (num_nodes < 1) throw std::invalid_argument("CgpConfig: num_nodes must be >= 1");
  if (num_outputs < 1) throw std::invalid_argument("CgpConfig: num_outputs must be >= 1");
  if (arity < 1) throw std::invalid_argument("CgpConfig: arity must be >= 1");
  if (!(weight_min < weight_max))
    throw std::invalid_argument("CgpConfig: weight range must have lower < upper");
  if (functions.empty()) throw std::invalid_argument("CgpConfig: function set is empty");
  for (std::size_t i = 0; i < functions.size(); ++i)
    for (std::size_t j = i + 1; j < functions.size(); ++j)
      if (functions[i] == functions[j])
        throw std::invalid_argument("CgpConfig: duplicate transfer function in set");
}

bool Genotype::same_genes(const Genotype& other) const {
  return nodes == other.nodes && outputs == other.outputs;
}

namespace {

int random_source(int node_index, const CgpConfig& c, Rng& rng) {
  return std::uniform_int_distribution<int>(0, c.num_inputs + node_index - 1)(rng);
}

int random_output_source(const CgpConfig& c, Rng& rng) {
  return std::uniform_int_distribution<int>(0, c.num_sources() - 1)(rng);
}

double random_weight(const CgpConfig& c, Rng& rng) {
  return std::uniform_real_distribution<double>(c.weight_min, c.weight_max)(rng);
}

int random_function(const CgpConfig& c, Rng& rng) {
  return std::uniform_int_distribution<int>(0, static_cast<int>(c.functions.size()) - 1)(rng);
}

}  // namespace

Genotype random_genotype(CgpConfigPtr config, Rng& rng) {
  const CgpConfig& c = *config;
  c.validate();
  Genotype g;
  g.config = std::move(config);
  g.nodes.resize(c.num_nodes);
  for (int j = 0; j < c.num_nodes; ++j) {
    NodeGene& n = g.nodes[j];
    n.conn.resize(c.arity);
    n.weight.resize(c.arity);
    for (int k = 0; k < c.arity; ++k) {
      n.conn[k] = random_source(j, c, rng);
      n.weight[k] = random_weight(c, rng);
    }
    n.func = random_function(c, rng);
  }
  g.outputs.resize(c.num_outputs);
  for (int& o : g.outputs) o = random_output_source(c, rng);
  recompute_activity(g);
  return g;
}

void recompute_activity(Genotype& g) {
  const CgpConfig& c = g.cfg();
  for (NodeGene& n : g.nodes) n.active = false;
  std::vector<int> stack;
  for (int o : g.outputs)
    if (o >= c.num_inputs) stack.push_back(o - c.num_inputs);
  while (!stack.empty()) {
    int j = stack.back();
    stack.pop_back();
    if (g.nodes[j].active) continue;
    g.nodes[j].active = true;
    for (int s : g.nodes[j].conn)
      if (s >= c.num_inputs && !g.nodes[s - c.num_inputs].active)
        stack.push_back(s - c.num_inputs);
  }
}

void check_genotype(const Genotype& g) {
  const CgpConfig& c = g.cfg();
  c.validate();
  if (static_cast<int>(g.nodes.size()) != c.num_nodes)
    throw std::invalid_argument("genotype: node count mismatch");
  if (static_cast<int>(g.outputs.size()) != c.num_outputs)
    throw std::invalid_argument("genotype: output gene count mismatch");
  for (int j = 0; j < c.num_nodes; ++j) {
    const NodeGene& n = g.nodes[j];
    if (static_cast<int>(n.conn.size()) != c.arity ||
        static_cast<int>(n.weight.size()) != c.arity)
      throw std::invalid_argument("genotype: node gene arity mismatch");
    for (int s : n.conn)
      if (s < 0 || s >= c.num_inputs + j)
        throw std::invalid_argument("genotype: connection to non-preceding source");
    for (double w : n.weight)
      if (!(w >= c.weight_min && w <= c.weight_max))
        throw std::invalid_argument("genotype: weight outside weight range");
    if (n.func < 0 || n.func >= static_cast<int>(c.functions.size()))
      throw std::invalid_argument("genotype: function gene out of range");
  }
  for (int o : g.outputs)
    if (o < 0 || o >= c.num_sources())
      throw std::invalid_argument("genotype: output gene out of range");
}

Evaluator::Evaluator(Eigen::MatrixXd inputs, Post post) : inputs_(std::move(inputs)), post_(post) {
  if (inputs_.rows() < 1) throw std::invalid_argument("evaluate: empty input set");
  if (!inputs_.allFinite()) throw std::invalid_argument("evaluate: non-finite input value");
}

Phenotype Evaluator::operator()(const Genotype& g) {
  const CgpConfig& c = g.cfg();
  const int rows = static_cast<int>(inputs_.rows());
  if (inputs_.cols() != c.num_inputs)
    throw std::invalid_argument("evaluate: input column count does not match num_inputs");

  values_.resize(static_cast<std::size_t>(c.num_sources()) * rows);
  double* vals = values_.data();
  for (int i = 0; i < c.num_inputs; ++i) {
    const double* col = inputs_.col(i).data();
    std::copy(col, col + rows, vals + static_cast<std::size_t>(i) * rows);
  }

  for (int j = 0; j < c.num_nodes; ++j) {
    const NodeGene& n = g.nodes[j];
    if (!n.active) continue;
    // Merge duplicate connections: adjacent weights add up to a single connection.
    merged_src_.clear();
    merged_w_.clear();
    for (int k = 0; k < c.arity; ++k) {
      int s = n.conn[k];
      auto it = std::find(merged_src_.begin(), merged_src_.end(), s);
      if (it == merged_src_.end()) {
        merged_src_.push_back(s);
        merged_w_.push_back(n.weight[k]);
      } else {
        merged_w_[static_cast<std::size_t>(it - merged_src_.begin())] += n.weight[k];
      }
    }
    double* out = vals + static_cast<std::size_t>(c.num_inputs + j) * rows;
    std::fill(out, out + rows, 0.0);
    for (std::size_t m = 0; m < merged_src_.size(); ++m) {
      const double w = merged_w_[m];
      const double* src = vals + static_cast<std::size_t>(merged_src_[m]) * rows;
      for (int r = 0; r < rows; ++r) out[r] += w * src[r];
    }
    const Transfer f = c.functions[n.func];
    for (int r = 0; r < rows; ++r) out[r] = transfer(f, out[r]);
  }

  Phenotype ph;
  ph.outputs.resize(rows, c.num_outputs);
  for (int o = 0; o < c.num_outputs; ++o) {
    const double* src = vals + static_cast<std::size_t>(g.outputs[o]) * rows;
    std::copy(src, src + rows, ph.outputs.col(o).data());
  }
  if (post_ == Post::Softmax) {
    for (int r = 0; r < rows; ++r) {
      auto row = ph.outputs.row(r);
      const double mx = row.maxCoeff();
      double sum = 0.0;
      for (int o = 0; o < c.num_outputs; ++o) {
        double e = std::exp(row(o) - mx);
        ph.outputs(r, o) = e;
        sum += e;
      }
      ph.outputs.row(r) /= sum;
    }
    ph.softmaxed = true;
  }
  ++count_;
  return ph;
}

Phenotype evaluate_ann(const Genotype& g, const Eigen::MatrixXd& inputs, Post post) {
  Evaluator ev(inputs, post);
  return ev(g);
}

Genotype mutate_probabilistic(const Genotype& parent, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate <= 1.0))
    throw std::invalid_argument("mutate_probabilistic: rate must be in [0,1]");
  const CgpConfig& c = parent.cfg();
  Genotype child = parent;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int j = 0; j < c.num_nodes; ++j) {
    NodeGene& n = child.nodes[j];
    for (int k = 0; k < c.arity; ++k) {
      if (u01(rng) < rate) n.conn[k] = random_source(j, c, rng);
      if (u01(rng) < rate) n.weight[k] = random_weight(c, rng);
    }
    if (u01(rng) < rate) n.func = random_function(c, rng);
  }
  for (int& o : child.outputs)
    if (u01(rng) < rate) o = random_output_source(c, rng);
  recompute_activity(child);
  return child;
}

namespace {

// Resamples one gene to a different value. Returns false when the gene's legal
// domain has a single value and cannot change.
bool force_mutate_gene(Genotype& g, long long gene, const CgpConfig& c, Rng& rng, bool* hit_active) {
  const long long per_node = 2LL * c.arity + 1;
  if (gene < static_cast<long long>(c.num_nodes) * per_node) {
    const int j = static_cast<int>(gene / per_node);
    const int slot = static_cast<int>(gene % per_node);
    NodeGene& n = g.nodes[j];
    *hit_active = n.active;
    if (slot < c.arity) {
      if (c.num_inputs + j < 2) return false;
      int v;
      do { v = random_source(j, c, rng); } while (v == n.conn[slot]);
      n.conn[slot] = v;
    } else if (slot < 2 * c.arity) {
      const int k = slot - c.arity;
      double v;
      do { v = random_weight(c, rng); } while (v == n.weight[k]);
      n.weight[k] = v;
    } else {
      if (c.functions.size() < 2) return false;
      int v;
      do { v = random_function(c, rng); } while (v == n.func);
      n.func = v;
    }
    return true;
  }
  const int o = static_cast<int>(gene - static_cast<long long>(c.num_nodes) * per_node);
  *hit_active = true;  // output genes always count as part of the active network
  if (c.num_sources() < 2) return false;
  int v;
  do { v = random_output_source(c, rng); } while (v == g.outputs[o]);
  g.outputs[o] = v;
  return true;
}

}  // namespace

Genotype mutate_single_active(const Genotype& parent, Rng& rng) {
  const CgpConfig& c = parent.cfg();
  Genotype child = parent;
  const bool any_active =
      std::any_of(child.nodes.begin(), child.nodes.end(), [](const NodeGene& n) { return n.active; });
  if (!any_active) {
    // Degenerate topology: all outputs wired to inputs. Mutate one output gene.
    const int o = std::uniform_int_distribution<int>(0, c.num_outputs - 1)(rng);
    if (c.num_sources() >= 2) {
      int v;
      do { v = random_output_source(c, rng); } while (v == child.outputs[o]);
      child.outputs[o] = v;
    }
    recompute_activity(child);
    return child;
  }
  // Mutating an inactive node's genes cannot change reachability, so the activity
  // flags stay valid until the loop ends on an active hit.
  std::uniform_int_distribution<long long> pick(0, c.gene_count() - 1);
  for (;;) {
    bool hit_active = false;
    if (!force_mutate_gene(child, pick(rng), c, rng, &hit_active)) continue;
    if (hit_active) break;
  }
  recompute_activity(child);
  return child;
}

Genotype apply_mutation(const Genotype& parent, const MutationSpec& spec, Rng& rng) {
  switch (spec.kind) {
    case MutationSpec::Probabilistic: return mutate_probabilistic(parent, spec.rate, rng);
    case MutationSpec::SingleActive: return mutate_single_active(parent, rng);
  }
  throw std::invalid_argument("apply_mutation: unknown operator");
}

namespace {

void append_double(std::string& out, double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument("genotype text: bad number '" + std::string(s) + "'");
  return v;
}

int parse_int(std::string_view s) {
  int v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument("genotype text: bad integer '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

std::string genotype_to_text(const Genotype& g) {
  const CgpConfig& c = g.cfg();
  std::string out;
  for (const NodeGene& n : g.nodes) {
    out += transfer_name(c.functions[n.func]);
    for (int k = 0; k < c.arity; ++k) {
      out += ' ';
      out += std::to_string(n.conn[k]);
      out += ':';
      append_double(out, n.weight[k]);
    }
    out += '\n';
  }
  for (int i = 0; i < c.num_outputs; ++i) {
    if (i) out += ' ';
    out += std::to_string(g.outputs[i]);
  }
  out += '\n';
  return out;
}

Genotype genotype_from_text(const std::string& text, CgpConfigPtr config) {
  const CgpConfig& c = *config;
  c.validate();
  std::vector<std::string_view> lines;
  {
    std::string_view rest = text;
    while (!rest.empty()) {
      auto nl = rest.find('\n');
      std::string_view line = nl == std::string_view::npos ? rest : rest.substr(0, nl);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!line.empty()) lines.push_back(line);
      if (nl == std::string_view::npos) break;
      rest.remove_prefix(nl + 1);
    }
  }
  if (static_cast<int>(lines.size()) != c.num_nodes + 1)
    throw std::invalid_argument("genotype text: expected " + std::to_string(c.num_nodes + 1) +
                                " lines, got " + std::to_string(lines.size()));
  Genotype g;
  g.config = std::move(config);
  g.nodes.resize(c.num_nodes);
  for (int j = 0; j < c.num_nodes; ++j) {
    auto tokens = split_ws(lines[j]);
    if (static_cast<int>(tokens.size()) != 1 + c.arity)
      throw std::invalid_argument("genotype text: node line " + std::to_string(j + 1) +
                                  " has wrong token count");
    NodeGene& n = g.nodes[j];
    auto f = transfer_from_name(tokens[0]);
    if (!f) throw std::invalid_argument("genotype text: unknown transfer '" + std::string(tokens[0]) + "'");
    auto it = std::find(c.functions.begin(), c.functions.end(), *f);
    if (it == c.functions.end())
      throw std::invalid_argument("genotype text: transfer not in config function set");
    n.func = static_cast<int>(it - c.functions.begin());
    n.conn.resize(c.arity);
    n.weight.resize(c.arity);
    for (int k = 0; k < c.arity; ++k) {
      std::string_view tok = tokens[1 + k];
      auto colon = tok.find(':');
      if (colon == std::string_view::npos)
        throw std::invalid_argument("genotype text: connection token missing ':'");
      n.conn[k] = parse_int(tok.substr(0, colon));
      n.weight[k] = parse_double(tok.substr(colon + 1));
    }
  }
  auto out_tokens = split_ws(lines[c.num_nodes]);
  if (static_cast<int>(out_tokens.size()) != c.num_outputs)
    throw std::invalid_argument("genotype text: output line has wrong token count");
  g.outputs.resize(c.num_outputs);
  for (int i = 0; i < c.num_outputs; ++i) g.outputs[i] = parse_int(out_tokens[i]);
  check_genotype(g);
  recompute_activity(g);
  return g;
}

}  // namespace smbne
