#include "smbne/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

namespace smbne {

const char* method_name(Method m) {
  switch (m) {
    case Method::Random: return "random";
    case Method::Cgpann: return "cgpann";
    case Method::Smbne: return "smbne";
  }
  return "?";
}

// ---- config parsing ----

namespace {

using Section = std::map<std::string, std::string>;

std::string trim(std::string s) {
  const auto issp = [](char c) { return c == ' ' || c == '\t'; };
  while (!s.empty() && issp(s.front())) s.erase(s.begin());
  while (!s.empty() && issp(s.back())) s.pop_back();
  return s;
}

std::map<std::string, Section> parse_ini(const std::string& text, const std::string& origin) {
  std::map<std::string, Section> sections;
  std::string current;
  int line_no = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": malformed section header");
      current = trim(t.substr(1, t.size() - 2));
      sections[current];
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    if (!sections[current].emplace(key, value).second)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
  }
  return sections;
}

class SectionReader {
 public:
  SectionReader(const Section* s, std::string where, std::string origin)
      : section_(s), where_(std::move(where)), origin_(std::move(origin)) {}

  std::optional<std::string> raw(const std::string& key) {
    if (!section_) return std::nullopt;
    auto it = section_->find(key);
    if (it == section_->end()) return std::nullopt;
    used_.push_back(key);
    return it->second;
  }

  std::string str(const std::string& key, const std::string& def) {
    return raw(key).value_or(def);
  }

  long long integer(const std::string& key, long long def) {
    auto v = raw(key);
    if (!v) return def;
    try {
      std::size_t pos = 0;
      const long long out = std::stoll(*v, &pos);
      if (pos != v->size()) throw std::invalid_argument("");
      return out;
    } catch (...) {
      throw ConfigError(origin_ + ": " + where_ + key + " = '" + *v + "' is not an integer");
    }
  }

  double real(const std::string& key, double def) {
    auto v = raw(key);
    if (!v) return def;
    try {
      std::size_t pos = 0;
      const double out = std::stod(*v, &pos);
      if (pos != v->size() || !std::isfinite(out)) throw std::invalid_argument("");
      return out;
    } catch (...) {
      throw ConfigError(origin_ + ": " + where_ + key + " = '" + *v + "' is not a number");
    }
  }

  bool boolean(const std::string& key, bool def) {
    auto v = raw(key);
    if (!v) return def;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError(origin_ + ": " + where_ + key + " = '" + *v + "' is not a boolean");
  }

  void finish() const {
    if (!section_) return;
    for (const auto& [key, value] : *section_)
      if (std::find(used_.begin(), used_.end(), key) == used_.end())
        throw ConfigError(origin_ + ": unknown key '" + where_ + key + "'");
  }

 private:
  const Section* section_;
  std::string where_;
  std::string origin_;
  std::vector<std::string> used_;
};

MutationSpec parse_mutation(const std::string& text, const std::string& origin,
                            const std::string& key) {
  MutationSpec spec;
  if (text == "single") {
    spec.kind = MutationSpec::SingleActive;
    return spec;
  }
  const auto colon = text.find(':');
  const std::string head = colon == std::string::npos ? text : text.substr(0, colon);
  if (head == "prob" || head == "probabilistic") {
    if (colon == std::string::npos)
      throw ConfigError(origin + ": " + key + ": probabilistic mutation needs a rate, e.g. prob:0.05");
    try {
      std::size_t pos = 0;
      spec.rate = std::stod(text.substr(colon + 1), &pos);
      if (pos != text.size() - colon - 1) throw std::invalid_argument("");
    } catch (...) {
      throw ConfigError(origin + ": " + key + ": bad mutation rate in '" + text + "'");
    }
    if (!(spec.rate >= 0.0 && spec.rate <= 1.0))
      throw ConfigError(origin + ": " + key + ": mutation rate must be in [0,1]");
    spec.kind = MutationSpec::Probabilistic;
    return spec;
  }
  throw ConfigError(origin + ": " + key + ": unknown mutation '" + text +
                    "' (use single or prob:<rate>)");
}

}  // namespace

void ExperimentSpec::validate() const {
  if (dataset_path.empty()) throw ConfigError(name + ": dataset path is required");
  if (replications < 1) throw ConfigError(name + ": replications must be >= 1");
  if (budget < 1) throw ConfigError(name + ": budget must be >= 1");
  if (method == Method::Smbne) {
    if (k < 1 || k > budget) throw ConfigError(name + ": need 1 <= k <= budget");
    if (m < 5) throw ConfigError(name + ": model size must be >= 5");
    if (input_set == InputSetKind::Csv && input_csv.empty())
      throw ConfigError(name + ": input_set = csv needs a file path");
    if ((input_set == InputSetKind::Factorial || input_set == InputSetKind::Lhs) && input_size < 1)
      throw ConfigError(name + ": input_set size must be >= 1");
  }
}

ExperimentSpec parse_config_text(const std::string& text, const std::string& origin) {
  const auto sections = parse_ini(text, origin);
  for (const auto& [name, _] : sections)
    if (name != "" && name != "cgp" && name != "cgpann" && name != "smbne")
      throw ConfigError(origin + ": unknown section [" + name + "]");
  auto section = [&](const char* n) -> const Section* {
    auto it = sections.find(n);
    return it == sections.end() ? nullptr : &it->second;
  };

  ExperimentSpec spec;
  SectionReader top(section(""), "", origin);
  {
    std::filesystem::path p(origin);
    spec.name = top.str("name", p.stem().string());
  }
  spec.dataset_path = top.str("dataset", "");
  spec.label_column = top.str("label_column", "");
  spec.header = top.boolean("header", true);
  spec.subsample_fraction = top.real("subsample_fraction", 0.0);
  const std::string method = top.str("method", "");
  if (method == "random") {
    spec.method = Method::Random;
  } else if (method == "cgpann") {
    spec.method = Method::Cgpann;
  } else if (method == "smbne") {
    spec.method = Method::Smbne;
  } else {
    throw ConfigError(origin + ": method must be random, cgpann, or smbne (got '" + method + "')");
  }
  spec.budget = top.integer("budget", 250);
  spec.replications = static_cast<int>(top.integer("replications", 30));
  spec.base_seed = static_cast<std::uint64_t>(top.integer("seed", 1));
  top.finish();

  SectionReader cgp(section("cgp"), "cgp.", origin);
  spec.cgp.num_nodes = static_cast<int>(cgp.integer("nodes", 40));
  spec.cgp.arity = static_cast<int>(cgp.integer("arity", 5));
  spec.cgp.weight_min = cgp.real("weight_min", -1.0);
  spec.cgp.weight_max = cgp.real("weight_max", 1.0);
  if (auto funcs = cgp.raw("functions")) {
    spec.cgp.functions.clear();
    std::istringstream fs(*funcs);
    std::string tok;
    while (std::getline(fs, tok, ',')) {
      tok = trim(tok);
      auto f = transfer_from_name(tok);
      if (!f) throw ConfigError(origin + ": cgp.functions: unknown transfer '" + tok + "'");
      spec.cgp.functions.push_back(*f);
    }
    if (spec.cgp.functions.empty())
      throw ConfigError(origin + ": cgp.functions: empty function list");
  }
  cgp.finish();

  SectionReader es(section("cgpann"), "cgpann.", origin);
  if (auto mut = es.raw("mutation")) spec.mutation = parse_mutation(*mut, origin, "cgpann.mutation");
  es.finish();
  if (spec.method == Method::Cgpann && !section("cgpann"))
    throw ConfigError(origin + ": method cgpann needs a [cgpann] section with a mutation key");

  SectionReader sm(section("smbne"), "smbne.", origin);
  spec.k = static_cast<int>(sm.integer("k", 50));
  spec.m = static_cast<int>(sm.integer("m", 100));
  const std::string dist = sm.str("distance", "phd");
  if (auto d = distance_from_name(dist)) {
    spec.distance.kind = *d;
  } else {
    throw ConfigError(origin + ": smbne.distance must be gd, gidd, phd, or md (got '" + dist +
                      "')");
  }
  const std::string post = sm.str("post", "softmax");
  if (post == "softmax") {
    spec.distance.post = Post::Softmax;
  } else if (post == "none") {
    spec.distance.post = Post::None;
  } else {
    throw ConfigError(origin + ": smbne.post must be softmax or none (got '" + post + "')");
  }
  spec.distance.unmatched_penalty = sm.real("unmatched_penalty", 2.0);
  const std::string input = sm.str("input_set", "full");
  if (input == "full") {
    spec.input_set = InputSetKind::Full;
  } else if (input.rfind("factorial:", 0) == 0) {
    spec.input_set = InputSetKind::Factorial;
    try {
      spec.input_size = std::stoi(input.substr(10));
    } catch (...) {
      throw ConfigError(origin + ": smbne.input_set: bad factorial size in '" + input + "'");
    }
  } else if (input.rfind("lhs:", 0) == 0) {
    spec.input_set = InputSetKind::Lhs;
    try {
      spec.input_size = std::stoi(input.substr(4));
    } catch (...) {
      throw ConfigError(origin + ": smbne.input_set: bad lhs size in '" + input + "'");
    }
  } else if (input.rfind("csv:", 0) == 0) {
    spec.input_set = InputSetKind::Csv;
    spec.input_csv = input.substr(4);
  } else {
    throw ConfigError(origin + ": smbne.input_set must be full, factorial:N, lhs:N, or csv:PATH");
  }
  if (auto mut = sm.raw("local_mutation"))
    spec.local.mutation = parse_mutation(*mut, origin, "smbne.local_mutation");
  spec.local.screen = static_cast<int>(sm.integer("local_screen", 10));
  spec.local.es_budget = sm.integer("local_es_budget", 400);
  if (auto mut = sm.raw("global_mutation"))
    spec.global.mutation = parse_mutation(*mut, origin, "smbne.global_mutation");
  spec.global.screen = static_cast<int>(sm.integer("global_screen", 1000));
  spec.global.es_budget = sm.integer("global_es_budget", 400);
  sm.finish();

  spec.validate();
  return spec;
}

ExperimentSpec parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

// ---- running ----

namespace {

std::string baseline_trace_csv(const EsResult& er, const char* phase, int lambda) {
  std::string out =
      "iteration,true_evals,proposal_phase,fitness,best_fitness,theta,beta1,beta2,beta3,nugget\n";
  for (std::size_t i = 0; i < er.eval_trace.size(); ++i) {
    // Generation 0 is the initial parent; offspring arrive in batches of lambda.
    const long long iteration = lambda > 0 ? (static_cast<long long>(i) + lambda - 1) / lambda : 0;
    out += std::to_string(iteration);
    out += ',';
    out += std::to_string(i + 1);
    out += ',';
    out += phase;
    out += ',';
    out += format_double(er.eval_trace[i]);
    out += ',';
    out += format_double(er.best_trace[i]);
    out += ",,,,,\n";
  }
  return out;
}

struct PreparedExperiment {
  Dataset dataset;            // normalized (and optionally subsampled)
  CgpConfigPtr cgp;
  PhenotypeInputSet inputs;   // smbne phd/md only
};

PreparedExperiment prepare(const ExperimentSpec& spec) {
  PreparedExperiment prep;
  try {
    Dataset raw = load_dataset(spec.dataset_path, spec.label_column, spec.header);
    if (spec.subsample_fraction > 0.0) {
      Rng sub_rng(spec.base_seed ^ 0x5DEECE66Dull);
      raw = stratified_subsample(raw, spec.subsample_fraction, sub_rng);
    }
    prep.dataset = normalize(raw);

    CgpConfig cfg = spec.cgp;
    cfg.num_inputs = prep.dataset.cols();
    cfg.num_outputs = prep.dataset.class_count;
    cfg.validate();
    prep.cgp = std::make_shared<const CgpConfig>(cfg);

    if (spec.method == Method::Smbne &&
        (spec.distance.kind == DistanceKind::Phd || spec.distance.kind == DistanceKind::Md)) {
      switch (spec.input_set) {
        case InputSetKind::Full: prep.inputs = input_set_from_dataset(prep.dataset); break;
        case InputSetKind::Factorial:
          prep.inputs = gen_factorial(prep.dataset.cols(), spec.input_size);
          break;
        case InputSetKind::Lhs: {
          // One design per experiment, shared by all replications.
          Rng lhs_rng(spec.base_seed ^ 0x9E3779B97F4A7C15ull);
          prep.inputs = gen_lhs(prep.dataset.cols(), spec.input_size, lhs_rng);
          break;
        }
        case InputSetKind::Csv:
          prep.inputs = load_input_set(spec.input_csv);
          prep.inputs.validate(prep.dataset.cols());
          break;
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(spec.name + ": setup failed: " + e.what());
  }
  return prep;
}

RepResult run_one(const ExperimentSpec& spec, const PreparedExperiment& prep, int rep) {
  RepResult out;
  out.rep = rep;
  out.seed = spec.base_seed + static_cast<std::uint64_t>(rep);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    FitnessEvaluator fe(prep.dataset);
    const Objective objective = [&fe](const Genotype& g) { return fe(g); };
    if (spec.method == Method::Random) {
      Rng rng(out.seed);
      EsResult er = random_search(objective, spec.budget, prep.cgp, rng);
      out.best_fitness = er.best_fitness;
      out.true_evals = er.evals;
      out.trace_csv = baseline_trace_csv(er, "random", 0);
    } else if (spec.method == Method::Cgpann) {
      Rng rng(out.seed);
      EsConfig ec;
      ec.lambda = 4;
      ec.mutation = spec.mutation;
      ec.budget = spec.budget;
      ec.config = prep.cgp;
      EsResult er = es_run(objective, ec, rng);
      out.best_fitness = er.best_fitness;
      out.true_evals = er.evals;
      out.trace_csv = baseline_trace_csv(er, "es", ec.lambda);
    } else {
      SmbneConfig sc;
      sc.k = spec.k;
      sc.budget = spec.budget;
      sc.m = spec.m;
      sc.distance = spec.distance;
      sc.inputs = prep.inputs;
      sc.local = spec.local;
      sc.global = spec.global;
      sc.config = prep.cgp;
      sc.seed = out.seed;
      SmbneResult sr = smbne_run(objective, sc);
      out.best_fitness = sr.best_fitness;
      out.true_evals = sr.true_evals;
      out.surrogate_evals = sr.surrogate_evals;
      out.trace_csv = trace_to_csv(sr.trace);
    }
  } catch (const std::exception& e) {
    out.failed = true;
    out.error = e.what();
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string sanitize_error(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

}  // namespace

Summary summarize(const std::vector<RepResult>& reps) {
  Summary s;
  s.reps = static_cast<int>(reps.size());
  std::vector<double> vals;
  for (const RepResult& r : reps) {
    if (r.failed) {
      ++s.failed;
    } else {
      vals.push_back(r.best_fitness);
    }
  }
  if (vals.empty()) return s;
  s.median = median_of(vals);
  s.mean = std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
  double ss = 0.0;
  for (double v : vals) ss += (v - s.mean) * (v - s.mean);
  s.sd = vals.size() > 1 ? std::sqrt(ss / (vals.size() - 1)) : 0.0;
  s.min = *std::min_element(vals.begin(), vals.end());
  s.max = *std::max_element(vals.begin(), vals.end());
  return s;
}

double median_of(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string results_to_csv(const std::vector<RepResult>& reps) {
  std::string out = "rep,seed,status,best_fitness,true_evals,surrogate_evals,error\n";
  for (const RepResult& r : reps) {
    out += std::to_string(r.rep);
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += r.failed ? "failed" : "ok";
    out += ',';
    if (!r.failed) out += format_double(r.best_fitness);
    out += ',';
    out += std::to_string(r.true_evals);
    out += ',';
    out += std::to_string(r.surrogate_evals);
    out += ',';
    out += sanitize_error(r.error);
    out += '\n';
  }
  return out;
}

std::string summary_to_csv(const ExperimentSpec& spec, const Summary& s) {
  std::string out = "name,method,replications,failed,median,mean,sd,min,max\n";
  out += spec.name;
  out += ',';
  out += method_name(spec.method);
  out += ',';
  out += std::to_string(s.reps);
  out += ',';
  out += std::to_string(s.failed);
  for (double v : {s.median, s.mean, s.sd, s.min, s.max}) {
    out += ',';
    out += format_double(v);
  }
  out += '\n';
  return out;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, int threads,
                                const std::string& out_dir) {
  spec.validate();
  const PreparedExperiment prep = prepare(spec);

  ExperimentResult result;
  result.spec = spec;
  result.reps.resize(spec.replications);

  const int workers = std::max(1, std::min(threads, spec.replications));
  std::atomic<int> next{0};
  auto work = [&] {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= spec.replications) return;
      result.reps[r] = run_one(spec, prep, r);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }

  result.summary = summarize(result.reps);

  if (!out_dir.empty()) {
    namespace fs = std::filesystem;
    const fs::path dir(out_dir);
    const fs::path traces = dir / (spec.name + "_traces");
    fs::create_directories(traces);
    write_atomic(dir / (spec.name + "_results.csv"), results_to_csv(result.reps));
    write_atomic(dir / (spec.name + "_summary.csv"), summary_to_csv(spec, result.summary));
    for (const RepResult& r : result.reps)
      if (!r.failed)
        write_atomic(traces / ("rep" + std::to_string(r.rep) + ".csv"), r.trace_csv);
  }
  return result;
}

// ---- statistics ----

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865476); }

}  // namespace

WilcoxonResult wilcoxon_rank_sum(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t na = a.size(), nb = b.size();
  if (na < 1 || nb < 1) throw std::invalid_argument("wilcoxon: empty sample");
  struct Entry {
    double v;
    int sample;
  };
  std::vector<Entry> all;
  all.reserve(na + nb);
  for (double v : a) all.push_back({v, 0});
  for (double v : b) all.push_back({v, 1});
  std::sort(all.begin(), all.end(), [](const Entry& x, const Entry& y) { return x.v < y.v; });

  const double n = static_cast<double>(na + nb);
  double rank_sum_a = 0.0;
  double tie_term = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].v == all[i].v) ++j;
    const double t = static_cast<double>(j - i);
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k)
      if (all[k].sample == 0) rank_sum_a += avg_rank;
    tie_term += t * t * t - t;
    i = j;
  }

  WilcoxonResult res;
  res.u_a = rank_sum_a - 0.5 * na * (na + 1);
  const double mu = 0.5 * na * nb;
  const double var = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (var <= 0.0) {
    res.p_two_sided = res.p_a_greater = res.p_b_greater = 1.0;
    return res;
  }
  const double sd = std::sqrt(var);
  const double diff = res.u_a - mu;
  const double z_two = (std::abs(diff) - 0.5) / sd;
  res.p_two_sided = std::min(1.0, 2.0 * (1.0 - normal_cdf(std::max(z_two, 0.0))));
  res.p_a_greater = 1.0 - normal_cdf((diff - 0.5) / sd);
  res.p_b_greater = normal_cdf((diff + 0.5) / sd);
  return res;
}

CompareReport compare(const std::vector<double>& a, const std::vector<double>& b,
                      const std::string& name_a, const std::string& name_b) {
  if (a.size() < 5 || b.size() < 5)
    throw std::invalid_argument("compare: need at least 5 replications per sample");
  CompareReport rep;
  rep.median_a = median_of(a);
  rep.median_b = median_of(b);
  if (rep.median_a >= rep.median_b) {
    rep.rank_a = 1;
    rep.rank_b = rep.median_a == rep.median_b ? 1 : 2;
  } else {
    rep.rank_a = 2;
    rep.rank_b = 1;
  }
  rep.test = wilcoxon_rank_sum(a, b);
  std::string& t = rep.text;
  t += name_a + ": n = " + std::to_string(a.size()) + ", median = " + format_double(rep.median_a) +
       "\n";
  t += name_b + ": n = " + std::to_string(b.size()) + ", median = " + format_double(rep.median_b) +
       "\n";
  t += "rank by median: " + (rep.rank_a == 1 && rep.rank_b == 1
                                 ? "tied"
                                 : (rep.rank_a == 1 ? name_a + " > " + name_b
                                                    : name_b + " > " + name_a)) +
       "\n";
  t += "rank-sum U_a = " + format_double(rep.test.u_a) + "\n";
  t += "two-sided p = " + format_double(rep.test.p_two_sided) + "\n";
  t += "one-sided p (" + name_a + " > " + name_b + ") = " + format_double(rep.test.p_a_greater) +
       "\n";
  t += "one-sided p (" + name_b + " > " + name_a + ") = " + format_double(rep.test.p_b_greater) +
       "\n";
  return rep;
}

std::vector<double> load_results_column(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open results file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty results file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string tok;
    while (std::getline(hs, tok, ',')) header.push_back(tok);
  }
  const auto fit_it = std::find(header.begin(), header.end(), "best_fitness");
  const auto status_it = std::find(header.begin(), header.end(), "status");
  if (fit_it == header.end())
    throw std::runtime_error(path + ": no best_fitness column");
  const std::size_t fit_col = static_cast<std::size_t>(fit_it - header.begin());
  const std::size_t status_col =
      status_it == header.end() ? static_cast<std::size_t>(-1)
                                : static_cast<std::size_t>(status_it - header.begin());

  std::vector<double> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) fields.push_back(tok);
    while (fields.size() < header.size()) fields.push_back("");
    if (status_col != static_cast<std::size_t>(-1) && fields[status_col] != "ok") continue;
    try {
      out.push_back(std::stod(fields.at(fit_col)));
    } catch (...) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad best_fitness value");
    }
  }
  if (out.empty()) throw std::runtime_error(path + ": no successful replications");
  return out;
}

}  // namespace smbne
