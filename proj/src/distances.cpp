#include "smbne/distances.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <utility>

namespace smbne {

const char* distance_name(DistanceKind k) {
  switch (k) {
    case DistanceKind::Gd: return "gd";
    case DistanceKind::Gidd: return "gidd";
    case DistanceKind::Phd: return "phd";
    case DistanceKind::Md: return "md";
  }
  return "?";
}

std::optional<DistanceKind> distance_from_name(std::string_view name) {
  for (DistanceKind k : {DistanceKind::Gd, DistanceKind::Gidd, DistanceKind::Phd, DistanceKind::Md})
    if (name == distance_name(k)) return k;
  return std::nullopt;
}

void MixtureWeights::validate() const {
  if (!(gd >= 0.0 && gidd >= 0.0 && phd >= 0.0))
    throw std::invalid_argument("mixture weights must be non-negative");
  if (gd == 0.0 && gidd == 0.0 && phd == 0.0)
    throw std::invalid_argument("mixture weights must not all be zero");
}

double exp_kernel(double d, double theta) {
  if (!(d >= 0.0)) throw std::invalid_argument("exp_kernel: distance must be >= 0");
  if (!(theta > 0.0)) throw std::invalid_argument("exp_kernel: theta must be > 0");
  return std::exp(-theta * d);
}

namespace {

void check_same_config(const Genotype& a, const Genotype& b) {
  if (a.config == b.config) return;
  if (!a.config || !b.config || !(*a.config == *b.config))
    throw std::invalid_argument("distance: genotypes use different configurations");
}

// ---- GD ----

struct GdProfile {
  std::vector<int> conn;      // num_nodes*arity, per node sorted by (conn, weight)
  std::vector<double> weight;  // aligned with conn
  std::vector<std::uint8_t> active;
  std::vector<int> func;
  std::vector<int> outputs;
};

GdProfile build_gd_profile(const Genotype& g) {
  const CgpConfig& c = g.cfg();
  GdProfile p;
  p.conn.resize(static_cast<std::size_t>(c.num_nodes) * c.arity);
  p.weight.resize(p.conn.size());
  p.active.resize(c.num_nodes);
  p.func.resize(c.num_nodes);
  p.outputs = g.outputs;
  std::vector<std::pair<int, double>> pairs(c.arity);
  for (int j = 0; j < c.num_nodes; ++j) {
    const NodeGene& n = g.nodes[j];
    for (int k = 0; k < c.arity; ++k) pairs[k] = {n.conn[k], n.weight[k]};
    std::sort(pairs.begin(), pairs.end());
    for (int k = 0; k < c.arity; ++k) {
      p.conn[static_cast<std::size_t>(j) * c.arity + k] = pairs[k].first;
      p.weight[static_cast<std::size_t>(j) * c.arity + k] = pairs[k].second;
    }
    p.active[j] = n.active ? 1 : 0;
    p.func[j] = n.func;
  }
  return p;
}

double gd_from_profiles(const GdProfile& a, const GdProfile& b, const CgpConfig& c) {
  double num = 0.0;
  const std::size_t genes = a.conn.size();
  for (std::size_t i = 0; i < genes; ++i) {
    const double dw = a.weight[i] - b.weight[i];
    num += dw * dw;
    num += a.conn[i] != b.conn[i] ? 1.0 : 0.0;
  }
  for (int j = 0; j < c.num_nodes; ++j) {
    num += a.active[j] != b.active[j] ? 1.0 : 0.0;
    num += a.func[j] != b.func[j] ? 1.0 : 0.0;
  }
  for (int o = 0; o < c.num_outputs; ++o) num += a.outputs[o] != b.outputs[o] ? 1.0 : 0.0;
  const double span = c.weight_span();
  const double d_max =
      c.num_nodes * (c.arity * (span * span + 1.0) + 2.0) + c.num_outputs;
  return num / d_max;
}

// ---- GIDD ----
//
// Every active node gets a structural ID built bottom-up: the de-duplicated
// IDs of its sources plus its count of distinct connections. Equal IDs mean
// the whole prior subgraphs agree, which hash-consing gives in O(1).

struct IdKey {
  int input = -1;             // >= 0: primitive input ID
  std::vector<int> children;  // sorted, de-duplicated child handles
  int distinct = 0;           // distinct connection genes of the node
  bool operator==(const IdKey&) const = default;
};

struct IdKeyHash {
  std::size_t operator()(const IdKey& k) const {
    std::size_t h = static_cast<std::size_t>(k.input) * 0x9E3779B97F4A7C15ull + k.distinct;
    for (int c : k.children) h = (h * 0x100000001B3ull) ^ (static_cast<std::size_t>(c) + 0x9E37u);
    return h;
  }
};

class GiddContext {
 public:
  int intern(IdKey key) {
    auto it = map_.find(key);
    if (it != map_.end()) return it->second;
    const int h = static_cast<int>(map_.size());
    map_.emplace(std::move(key), h);
    return h;
  }
  std::optional<int> lookup(const IdKey& key) const {
    auto it = map_.find(key);
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::unordered_map<IdKey, int, IdKeyHash> map_;
};

struct GiddRecord {
  int id = 0;
  int func = 0;
  std::vector<double> weights;  // sorted ascending
};

struct GiddProfile {
  std::vector<GiddRecord> actives;  // genotype order
};

// When `overlay` is set the shared context stays untouched: IDs it does not
// already know get negative per-profile handles (such IDs cannot match any
// archived node anyway).
GiddProfile build_gidd_profile(const Genotype& g, GiddContext& ctx, bool overlay) {
  const CgpConfig& c = g.cfg();
  std::vector<int> node_id(c.num_nodes, 0);
  std::unordered_map<IdKey, int, IdKeyHash> local;
  int next_temp = -1;
  auto resolve = [&](IdKey key) -> int {
    if (!overlay) return ctx.intern(std::move(key));
    if (auto h = ctx.lookup(key)) return *h;
    auto it = local.find(key);
    if (it != local.end()) return it->second;
    const int h = next_temp--;
    local.emplace(std::move(key), h);
    return h;
  };

  GiddProfile prof;
  std::vector<int> sorted_conn(c.arity);
  for (int j = 0; j < c.num_nodes; ++j) {
    const NodeGene& n = g.nodes[j];
    if (!n.active) continue;
    IdKey key;
    key.children.reserve(c.arity);
    for (int s : n.conn) {
      if (s < c.num_inputs) {
        IdKey in;
        in.input = s;
        key.children.push_back(resolve(std::move(in)));
      } else {
        key.children.push_back(node_id[s - c.num_inputs]);  // sources precede j
      }
    }
    std::sort(key.children.begin(), key.children.end());
    key.children.erase(std::unique(key.children.begin(), key.children.end()),
                       key.children.end());
    std::copy(n.conn.begin(), n.conn.end(), sorted_conn.begin());
    std::sort(sorted_conn.begin(), sorted_conn.end());
    key.distinct = static_cast<int>(
        std::unique(sorted_conn.begin(), sorted_conn.end()) - sorted_conn.begin());

    GiddRecord rec;
    rec.id = node_id[j] = resolve(std::move(key));
    rec.func = n.func;
    rec.weights = n.weight;
    std::sort(rec.weights.begin(), rec.weights.end());
    prof.actives.push_back(std::move(rec));
  }
  return prof;
}

double gidd_from_profiles(const GiddProfile& a, const GiddProfile& b, const CgpConfig& c,
                          double penalty) {
  if (!(penalty > 0.0)) throw std::invalid_argument("gidd: unmatched penalty must be > 0");
  // Bucket b's actives by ID; the k-th ID-equal node of a pairs with the k-th
  // of b, which keeps the matching symmetric.
  std::unordered_map<int, std::vector<int>> slots;
  for (int i = 0; i < static_cast<int>(b.actives.size()); ++i)
    slots[b.actives[i].id].push_back(i);
  std::unordered_map<int, std::size_t> used;

  double matched_sum = 0.0;
  int matched = 0;
  for (const GiddRecord& ra : a.actives) {
    auto it = slots.find(ra.id);
    if (it == slots.end()) continue;
    std::size_t& pos = used[ra.id];
    if (pos >= it->second.size()) continue;
    const GiddRecord& rb = b.actives[it->second[pos++]];
    ++matched;
    for (std::size_t k = 0; k < ra.weights.size(); ++k) {
      const double dw = ra.weights[k] - rb.weights[k];
      matched_sum += dw * dw;
    }
    matched_sum += ra.func != rb.func ? 1.0 : 0.0;
  }
  const int unmatched = static_cast<int>(a.actives.size()) + static_cast<int>(b.actives.size()) -
                        2 * matched;
  const double span = c.weight_span();
  const double num = matched_sum + unmatched * penalty;
  const double den = matched * (c.arity * span * span + 1.0) + unmatched * penalty;
  return den == 0.0 ? 0.0 : num / den;
}

// ---- PhD ----

double phd_from_flat(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double denom) {
  return (a - b).cwiseAbs().sum() / denom;
}

Eigen::VectorXd flatten(const Phenotype& ph) {
  return Eigen::Map<const Eigen::VectorXd>(ph.outputs.data(), ph.outputs.size());
}

}  // namespace

double gd(const Genotype& a, const Genotype& b) {
  check_same_config(a, b);
  return gd_from_profiles(build_gd_profile(a), build_gd_profile(b), a.cfg());
}

double gidd(const Genotype& a, const Genotype& b, double unmatched_penalty) {
  check_same_config(a, b);
  GiddContext ctx;
  const GiddProfile pa = build_gidd_profile(a, ctx, false);
  const GiddProfile pb = build_gidd_profile(b, ctx, false);
  return gidd_from_profiles(pa, pb, a.cfg(), unmatched_penalty);
}

double phd(const Genotype& a, const Genotype& b, const PhenotypeInputSet& inputs, Post post) {
  check_same_config(a, b);
  inputs.validate(a.cfg().num_inputs);
  Evaluator ev(inputs.rows, post);
  const Eigen::VectorXd fa = flatten(ev(a));
  const Eigen::VectorXd fb = flatten(ev(b));
  return phd_from_flat(fa, fb, static_cast<double>(inputs.size()) * a.cfg().num_outputs);
}

double md(const Genotype& a, const Genotype& b, const MixtureWeights& beta,
          const PhenotypeInputSet& inputs, Post post, double unmatched_penalty) {
  beta.validate();
  double total = 0.0;
  if (beta.gd > 0.0) total += beta.gd * gd(a, b);
  if (beta.gidd > 0.0) total += beta.gidd * gidd(a, b, unmatched_penalty);
  if (beta.phd > 0.0) total += beta.phd * phd(a, b, inputs, post);
  return total;
}

// ---- DistanceOracle ----

struct DistanceOracle::Candidate {
  GdProfile gd;
  GiddProfile gidd;
  Eigen::VectorXd pheno;
};

void DistanceOracle::CandidateDeleter::operator()(Candidate* c) const { delete c; }

struct DistanceOracle::Impl {
  CgpConfigPtr config;
  PhenotypeInputSet inputs;
  mutable std::optional<Evaluator> evaluator;
  mutable long long pheno_evals = 0;
  GiddContext ctx;
  bool need_gd = false, need_gidd = false, need_phd = false;
  double phd_denom = 1.0;

  std::vector<GdProfile> gd_profiles;
  std::vector<GiddProfile> gidd_profiles;
  std::vector<Eigen::VectorXd> phenos;
  // Lower triangles: row i holds distances to entries 0..i-1.
  std::vector<std::vector<double>> gd_rows, gidd_rows, phd_rows;
  int count = 0;
};

DistanceOracle::DistanceOracle(const DistanceParams& params, CgpConfigPtr config,
                               PhenotypeInputSet inputs)
    : impl_(new Impl), params_(params) {
  if (!config) throw std::invalid_argument("distance oracle: null config");
  config->validate();
  impl_->config = std::move(config);
  impl_->need_gd = params.kind == DistanceKind::Gd || params.kind == DistanceKind::Md;
  impl_->need_gidd = params.kind == DistanceKind::Gidd || params.kind == DistanceKind::Md;
  impl_->need_phd = params.kind == DistanceKind::Phd || params.kind == DistanceKind::Md;
  if (params.kind == DistanceKind::Md) params.beta.validate();
  if (!(params.unmatched_penalty > 0.0))
    throw std::invalid_argument("distance oracle: unmatched penalty must be > 0");
  if (impl_->need_phd) {
    inputs.validate(impl_->config->num_inputs);
    impl_->inputs = std::move(inputs);
    impl_->evaluator.emplace(impl_->inputs.rows, params.post);
    impl_->phd_denom = static_cast<double>(impl_->inputs.size()) * impl_->config->num_outputs;
  }
  if (impl_->need_gidd) {
    // Input IDs are interned up front so candidate profiling never has to
    // grow the shared context.
    for (int i = 0; i < impl_->config->num_inputs; ++i) {
      IdKey key;
      key.input = i;
      impl_->ctx.intern(std::move(key));
    }
  }
}

DistanceOracle::~DistanceOracle() = default;
DistanceOracle::DistanceOracle(DistanceOracle&&) noexcept = default;
DistanceOracle& DistanceOracle::operator=(DistanceOracle&&) noexcept = default;

int DistanceOracle::size() const { return impl_->count; }
bool DistanceOracle::has_gd() const { return impl_->need_gd; }
bool DistanceOracle::has_gidd() const { return impl_->need_gidd; }
bool DistanceOracle::has_phd() const { return impl_->need_phd; }
long long DistanceOracle::phenotype_evals() const { return impl_->pheno_evals; }

int DistanceOracle::add(const Genotype& g) {
  Impl& im = *impl_;
  if (g.config != im.config && !(g.config && *g.config == *im.config))
    throw std::invalid_argument("distance oracle: genotype uses a different configuration");
  const int idx = im.count;
  if (im.need_gd) {
    im.gd_profiles.push_back(build_gd_profile(g));
    std::vector<double> row(idx);
    for (int j = 0; j < idx; ++j)
      row[j] = gd_from_profiles(im.gd_profiles[idx], im.gd_profiles[j], *im.config);
    im.gd_rows.push_back(std::move(row));
  }
  if (im.need_gidd) {
    im.gidd_profiles.push_back(build_gidd_profile(g, im.ctx, false));
    std::vector<double> row(idx);
    for (int j = 0; j < idx; ++j)
      row[j] = gidd_from_profiles(im.gidd_profiles[idx], im.gidd_profiles[j], *im.config,
                                  params_.unmatched_penalty);
    im.gidd_rows.push_back(std::move(row));
  }
  if (im.need_phd) {
    im.phenos.push_back(flatten((*im.evaluator)(g)));
    ++im.pheno_evals;
    std::vector<double> row(idx);
    for (int j = 0; j < idx; ++j) row[j] = phd_from_flat(im.phenos[idx], im.phenos[j], im.phd_denom);
    im.phd_rows.push_back(std::move(row));
  }
  ++im.count;
  return idx;
}

namespace {

double tri_at(const std::vector<std::vector<double>>& rows, int i, int j) {
  if (i == j) return 0.0;
  return i > j ? rows[i][j] : rows[j][i];
}

Eigen::MatrixXd tri_submatrix(const std::vector<std::vector<double>>& rows,
                              const std::vector<int>& idx) {
  const int n = static_cast<int>(idx.size());
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = 0.0;
    for (int j = 0; j < i; ++j) m(i, j) = m(j, i) = tri_at(rows, idx[i], idx[j]);
  }
  return m;
}

}  // namespace

double DistanceOracle::gd_at(int i, int j) const {
  if (!impl_->need_gd) throw std::logic_error("distance oracle: gd not tracked");
  return tri_at(impl_->gd_rows, i, j);
}

double DistanceOracle::gidd_at(int i, int j) const {
  if (!impl_->need_gidd) throw std::logic_error("distance oracle: gidd not tracked");
  return tri_at(impl_->gidd_rows, i, j);
}

double DistanceOracle::phd_at(int i, int j) const {
  if (!impl_->need_phd) throw std::logic_error("distance oracle: phd not tracked");
  return tri_at(impl_->phd_rows, i, j);
}

double DistanceOracle::at(int i, int j) const {
  switch (params_.kind) {
    case DistanceKind::Gd: return gd_at(i, j);
    case DistanceKind::Gidd: return gidd_at(i, j);
    case DistanceKind::Phd: return phd_at(i, j);
    case DistanceKind::Md:
      return params_.beta.gd * gd_at(i, j) + params_.beta.gidd * gidd_at(i, j) +
             params_.beta.phd * phd_at(i, j);
  }
  throw std::logic_error("distance oracle: unknown kind");
}

Eigen::MatrixXd DistanceOracle::submatrix_gd(const std::vector<int>& idx) const {
  if (!impl_->need_gd) throw std::logic_error("distance oracle: gd not tracked");
  return tri_submatrix(impl_->gd_rows, idx);
}

Eigen::MatrixXd DistanceOracle::submatrix_gidd(const std::vector<int>& idx) const {
  if (!impl_->need_gidd) throw std::logic_error("distance oracle: gidd not tracked");
  return tri_submatrix(impl_->gidd_rows, idx);
}

Eigen::MatrixXd DistanceOracle::submatrix_phd(const std::vector<int>& idx) const {
  if (!impl_->need_phd) throw std::logic_error("distance oracle: phd not tracked");
  return tri_submatrix(impl_->phd_rows, idx);
}

DistanceOracle::CandidatePtr DistanceOracle::make_candidate(const Genotype& g) const {
  const Impl& im = *impl_;
  if (g.config != im.config && !(g.config && *g.config == *im.config))
    throw std::invalid_argument("distance oracle: genotype uses a different configuration");
  CandidatePtr c(new Candidate);
  if (im.need_gd) c->gd = build_gd_profile(g);
  if (im.need_gidd)
    c->gidd = build_gidd_profile(g, const_cast<GiddContext&>(im.ctx), true);  // lookup only
  if (im.need_phd) {
    c->pheno = flatten((*im.evaluator)(g));
    ++im.pheno_evals;
  }
  return c;
}

void DistanceOracle::candidate_distances(const Candidate& c, const std::vector<int>& idx,
                                         Eigen::VectorXd* d_gd, Eigen::VectorXd* d_gidd,
                                         Eigen::VectorXd* d_phd) const {
  const Impl& im = *impl_;
  const int n = static_cast<int>(idx.size());
  if (d_gd) {
    if (!im.need_gd) throw std::logic_error("distance oracle: gd not tracked");
    d_gd->resize(n);
    for (int i = 0; i < n; ++i)
      (*d_gd)(i) = gd_from_profiles(c.gd, im.gd_profiles[idx[i]], *im.config);
  }
  if (d_gidd) {
    if (!im.need_gidd) throw std::logic_error("distance oracle: gidd not tracked");
    d_gidd->resize(n);
    for (int i = 0; i < n; ++i)
      (*d_gidd)(i) = gidd_from_profiles(c.gidd, im.gidd_profiles[idx[i]], *im.config,
                                        params_.unmatched_penalty);
  }
  if (d_phd) {
    if (!im.need_phd) throw std::logic_error("distance oracle: phd not tracked");
    d_phd->resize(n);
    for (int i = 0; i < n; ++i) (*d_phd)(i) = phd_from_flat(c.pheno, im.phenos[idx[i]], im.phd_denom);
  }
}

Eigen::MatrixXd distance_matrix(const std::vector<Genotype>& samples, const DistanceParams& params,
                                const PhenotypeInputSet* inputs) {
  if (samples.empty()) throw std::invalid_argument("distance_matrix: no samples");
  const bool needs_inputs = params.kind == DistanceKind::Phd || params.kind == DistanceKind::Md;
  if (needs_inputs && !inputs)
    throw std::invalid_argument("distance_matrix: phd/md need an input set");
  DistanceOracle oracle(params, samples[0].config, needs_inputs ? *inputs : PhenotypeInputSet{});
  for (const Genotype& g : samples) oracle.add(g);
  const int n = static_cast<int>(samples.size());
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = 0.0;
    for (int j = 0; j < i; ++j) m(i, j) = m(j, i) = oracle.at(i, j);
  }
  return m;
}

}  // namespace smbne
