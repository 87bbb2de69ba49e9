#include "smbne/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace smbne {

namespace {

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t nl = text.find('\n', i);
    std::string line = text.substr(i, nl == std::string::npos ? std::string::npos : nl - i);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    if (nl == std::string::npos) break;
    i = nl + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t i = 0;
  for (;;) {
    std::size_t c = line.find(',', i);
    fields.push_back(line.substr(i, c == std::string::npos ? std::string::npos : c - i));
    if (c == std::string::npos) break;
    i = c + 1;
  }
  for (std::string& f : fields) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.erase(f.begin());
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.pop_back();
  }
  return fields;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool parse_double_field(const std::string& s, double* out) {
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), *out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size() && std::isfinite(*out);
}

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

void Dataset::validate() const {
  const int n = rows();
  if (n < 1) throw std::invalid_argument("dataset: no rows");
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("dataset: label count does not match row count");
  if (class_count < 1) throw std::invalid_argument("dataset: no classes");
  if (n < class_count) throw std::invalid_argument("dataset: fewer rows than classes");
  for (int l : labels)
    if (l < 0 || l >= class_count) throw std::invalid_argument("dataset: label out of range");
  if (!features.allFinite()) throw std::invalid_argument("dataset: non-finite feature value");
}

Dataset load_dataset(const std::string& path, const std::string& label_column, bool header) {
  const std::vector<std::string> lines = split_lines(read_file(path));
  if (lines.empty()) throw std::runtime_error(path + ": empty file");

  std::vector<std::string> names;
  std::size_t first_data = 0;
  std::size_t width = split_csv(lines[0]).size();
  if (header) {
    names = split_csv(lines[0]);
    first_data = 1;
    if (lines.size() < 2) throw std::runtime_error(path + ": no data rows");
  }
  if (width < 2) throw std::runtime_error(path + ": need at least one feature and a label column");

  int label_idx = static_cast<int>(width) - 1;
  if (!label_column.empty()) {
    auto it = std::find(names.begin(), names.end(), label_column);
    if (it != names.end()) {
      label_idx = static_cast<int>(it - names.begin());
    } else if (all_digits(label_column)) {
      label_idx = std::stoi(label_column);
      if (label_idx < 0 || label_idx >= static_cast<int>(width))
        throw std::runtime_error(path + ": label column index out of range");
    } else {
      throw std::runtime_error(path + ": label column '" + label_column + "' not found");
    }
  }

  Dataset d;
  d.name = path;
  const int p = static_cast<int>(width) - 1;
  const int n = static_cast<int>(lines.size() - first_data);
  d.features.resize(n, p);
  d.labels.resize(n);
  if (header) {
    for (int c = 0; c < static_cast<int>(width); ++c)
      if (c != label_idx) d.feature_names.push_back(names[c]);
  }

  for (int r = 0; r < n; ++r) {
    const std::size_t line_no = first_data + r + 1;  // 1-based, header included
    const std::vector<std::string> fields = split_csv(lines[first_data + r]);
    if (fields.size() != width)
      throw std::runtime_error(path + ": row " + std::to_string(line_no) + ": expected " +
                               std::to_string(width) + " fields, got " +
                               std::to_string(fields.size()));
    int fc = 0;
    for (int c = 0; c < static_cast<int>(width); ++c) {
      if (c == label_idx) continue;
      double v = 0.0;
      if (!parse_double_field(fields[c], &v))
        throw std::runtime_error(path + ": row " + std::to_string(line_no) +
                                 ": bad numeric value '" + fields[c] + "'");
      d.features(r, fc++) = v;
    }
    const std::string& lab = fields[label_idx];
    if (lab.empty())
      throw std::runtime_error(path + ": row " + std::to_string(line_no) + ": empty label");
    auto it = std::find(d.class_names.begin(), d.class_names.end(), lab);
    if (it == d.class_names.end()) {
      d.labels[r] = static_cast<int>(d.class_names.size());
      d.class_names.push_back(lab);
    } else {
      d.labels[r] = static_cast<int>(it - d.class_names.begin());
    }
  }
  d.class_count = static_cast<int>(d.class_names.size());
  d.validate();
  return d;
}

Dataset normalize(const Dataset& d) {
  Dataset out = d;
  for (int c = 0; c < d.cols(); ++c) {
    const double lo = d.features.col(c).minCoeff();
    const double hi = d.features.col(c).maxCoeff();
    if (hi > lo) {
      out.features.col(c) = (d.features.col(c).array() - lo) / (hi - lo);
    } else {
      out.features.col(c).setZero();
    }
  }
  return out;
}

Dataset stratified_subsample(const Dataset& d, double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("stratified_subsample: fraction must be in (0,1]");
  d.validate();
  std::vector<std::vector<int>> by_class(d.class_count);
  for (int r = 0; r < d.rows(); ++r) by_class[d.labels[r]].push_back(r);

  std::vector<int> keep;
  for (auto& rows : by_class) {
    const int want = std::max<int>(1, static_cast<int>(std::lround(fraction * rows.size())));
    // Partial Fisher-Yates: the first `want` entries become the sample.
    for (int i = 0; i < want && i < static_cast<int>(rows.size()) - 1; ++i) {
      int j = std::uniform_int_distribution<int>(i, static_cast<int>(rows.size()) - 1)(rng);
      std::swap(rows[i], rows[j]);
    }
    keep.insert(keep.end(), rows.begin(), rows.begin() + std::min<int>(want, rows.size()));
  }
  std::sort(keep.begin(), keep.end());

  Dataset out;
  out.name = d.name;
  out.feature_names = d.feature_names;
  out.class_names = d.class_names;
  out.class_count = d.class_count;
  out.features.resize(static_cast<int>(keep.size()), d.cols());
  out.labels.resize(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.features.row(static_cast<int>(i)) = d.features.row(keep[i]);
    out.labels[i] = d.labels[keep[i]];
  }
  out.validate();
  return out;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& v) {
  if (!v.allFinite()) throw std::invalid_argument("softmax: non-finite input");
  Eigen::VectorXd out = (v.array() - v.maxCoeff()).exp();
  out /= out.sum();
  return out;
}

namespace {

double adjusted_accuracy_impl(const Phenotype& ph, const Dataset& d) {
  double sum = 0.0;
  for (int r = 0; r < d.rows(); ++r) {
    int argmax = 0;
    for (int c = 1; c < d.class_count; ++c)
      if (ph.outputs(r, c) > ph.outputs(r, argmax)) argmax = c;
    sum += argmax == d.labels[r] ? 1.0 : ph.outputs(r, d.labels[r]);
  }
  return sum / d.rows();
}

}  // namespace

double adjusted_accuracy(const Genotype& g, const Dataset& d) {
  d.validate();
  if (g.cfg().num_outputs != d.class_count)
    throw std::invalid_argument("adjusted_accuracy: num_outputs != class_count");
  return adjusted_accuracy_impl(evaluate_ann(g, d.features, Post::Softmax), d);
}

FitnessEvaluator::FitnessEvaluator(Dataset dataset)
    : data_(std::move(dataset)), eval_(data_.features, Post::Softmax) {
  data_.validate();
}

double FitnessEvaluator::operator()(const Genotype& g) {
  if (g.cfg().num_outputs != data_.class_count)
    throw std::invalid_argument("adjusted_accuracy: num_outputs != class_count");
  ++count_;
  return adjusted_accuracy_impl(eval_(g), data_);
}

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::FullDataset: return "full-dataset";
    case Provenance::Factorial: return "factorial";
    case Provenance::Lhs: return "lhs";
    case Provenance::Custom: return "custom";
  }
  return "?";
}

void PhenotypeInputSet::validate(int num_inputs) const {
  if (rows.rows() < 1) throw std::invalid_argument("input set: no rows");
  if (!rows.allFinite()) throw std::invalid_argument("input set: non-finite value");
  if (num_inputs >= 0 && rows.cols() != num_inputs)
    throw std::invalid_argument("input set: column count does not match num_inputs");
}

PhenotypeInputSet gen_factorial(int p, int target_size) {
  if (p < 1) throw std::invalid_argument("gen_factorial: dimension must be >= 1");
  if (target_size < 2 * p + 1)
    throw std::invalid_argument("gen_factorial: size must be at least 2p+1 = " +
                                std::to_string(2 * p + 1));
  long long capacity = 1;
  for (int i = 0; i < p && capacity <= target_size; ++i) capacity *= 3;
  if (target_size > capacity)
    throw std::invalid_argument("gen_factorial: size exceeds the 3^p grid");

  PhenotypeInputSet set;
  set.provenance = Provenance::Factorial;
  set.rows.resize(target_size, p);
  int row = 0;
  // Points ordered by how many coordinates leave the center: the center point,
  // the 2p axial points, then two-level fractions of growing interaction order.
  for (int c = 0; c <= p && row < target_size; ++c) {
    std::vector<int> comb(c);
    std::iota(comb.begin(), comb.end(), 0);
    for (;;) {
      for (unsigned mask = 0; mask < (1u << c) && row < target_size; ++mask) {
        set.rows.row(row).setConstant(0.5);
        for (int b = 0; b < c; ++b) set.rows(row, comb[b]) = (mask >> b) & 1u ? 1.0 : 0.0;
        ++row;
      }
      if (row >= target_size || c == 0) break;
      // Next combination in lexicographic order.
      int i = c - 1;
      while (i >= 0 && comb[i] == p - c + i) --i;
      if (i < 0) break;
      ++comb[i];
      for (int j = i + 1; j < c; ++j) comb[j] = comb[j - 1] + 1;
    }
  }
  return set;
}

PhenotypeInputSet gen_lhs(int p, int size, Rng& rng) {
  if (p < 1) throw std::invalid_argument("gen_lhs: dimension must be >= 1");
  if (size < 1) throw std::invalid_argument("gen_lhs: size must be >= 1");
  PhenotypeInputSet set;
  set.provenance = Provenance::Lhs;
  set.rows.resize(size, p);
  std::vector<int> perm(size);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int c = 0; c < p; ++c) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int r = 0; r < size; ++r) set.rows(r, c) = (perm[r] + u01(rng)) / size;
  }
  return set;
}

PhenotypeInputSet input_set_from_dataset(const Dataset& d) {
  d.validate();
  PhenotypeInputSet set;
  set.rows = d.features;
  set.provenance = Provenance::FullDataset;
  return set;
}

PhenotypeInputSet load_input_set(const std::string& path) {
  const std::vector<std::string> lines = split_lines(read_file(path));
  if (lines.empty()) throw std::runtime_error(path + ": empty input-set file");
  PhenotypeInputSet set;
  set.provenance = Provenance::Custom;
  const std::size_t width = split_csv(lines[0]).size();
  set.rows.resize(static_cast<int>(lines.size()), static_cast<int>(width));
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const std::vector<std::string> fields = split_csv(lines[r]);
    if (fields.size() != width)
      throw std::runtime_error(path + ": row " + std::to_string(r + 1) + ": ragged row");
    for (std::size_t c = 0; c < width; ++c) {
      double v = 0.0;
      if (!parse_double_field(fields[c], &v))
        throw std::runtime_error(path + ": row " + std::to_string(r + 1) +
                                 ": bad numeric value '" + fields[c] + "'");
      set.rows(static_cast<int>(r), static_cast<int>(c)) = v;
    }
  }
  return set;
}

void save_input_set(const PhenotypeInputSet& set, const std::string& path) {
  set.validate(-1);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  for (int r = 0; r < set.rows.rows(); ++r) {
    for (int c = 0; c < set.rows.cols(); ++c) {
      if (c) out << ',';
      out << format_double(set.rows(r, c));
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace smbne
