#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "smbne/experiment.hpp"

namespace {

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<int> reps, const std::string& out_dir, int threads) {
  smbne::ExperimentSpec spec = smbne::parse_config_file(config_path);
  if (seed) spec.base_seed = *seed;
  if (reps) spec.replications = *reps;
  spec.validate();

  std::printf("experiment %s: method=%s budget=%lld replications=%d seed=%llu\n",
              spec.name.c_str(), smbne::method_name(spec.method),
              static_cast<long long>(spec.budget), spec.replications,
              static_cast<unsigned long long>(spec.base_seed));
  std::fflush(stdout);

  const smbne::ExperimentResult res = smbne::run_experiment(spec, threads, out_dir);

  double wall = 0.0;
  for (const smbne::RepResult& r : res.reps) {
    wall += r.wall_seconds;
    if (r.failed)
      std::fprintf(stderr, "rep %d failed: %s\n", r.rep, r.error.c_str());
  }
  const smbne::Summary& s = res.summary;
  std::printf("done in %.1f s (sum over replications)\n", wall);
  std::printf("replications: %d ok, %d failed\n", s.reps - s.failed, s.failed);
  if (s.failed < s.reps) {
    std::printf("best_fitness: median=%s mean=%s sd=%s min=%s max=%s\n",
                smbne::format_double(s.median).c_str(), smbne::format_double(s.mean).c_str(),
                smbne::format_double(s.sd).c_str(), smbne::format_double(s.min).c_str(),
                smbne::format_double(s.max).c_str());
  }
  std::printf("results: %s/%s_results.csv\n", out_dir.c_str(), spec.name.c_str());
  return s.failed == s.reps ? 3 : 0;
}

int cmd_compare(const std::string& csv_a, const std::string& csv_b) {
  const std::vector<double> a = smbne::load_results_column(csv_a);
  const std::vector<double> b = smbne::load_results_column(csv_b);
  const smbne::CompareReport rep = smbne::compare(a, b, csv_a, csv_b);
  std::fputs(rep.text.c_str(), stdout);
  return 0;
}

int cmd_gen_design(const std::string& type, int dims, int size, const std::string& out,
                   std::uint64_t seed) {
  smbne::PhenotypeInputSet set;
  if (type == "factorial") {
    set = smbne::gen_factorial(dims, size);
  } else if (type == "lhs") {
    smbne::Rng rng(seed);
    set = smbne::gen_lhs(dims, size, rng);
  } else {
    throw smbne::ConfigError("gen-design: type must be factorial or lhs (got '" + type + "')");
  }
  smbne::save_input_set(set, out);
  std::printf("wrote %d x %d design (%s) to %s\n", static_cast<int>(set.rows.rows()),
              static_cast<int>(set.rows.cols()), smbne::provenance_name(set.provenance), out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"surrogate model based neuroevolution of CGP networks"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  std::string out_dir = "results";
  int threads = 1;
  CLI::App* run = app.add_subcommand("run", "run an experiment described by a config file");
  run->add_option("config", config_path, "experiment config file (ini)")->required();
  run->add_option("--seed", seed, "override the base seed");
  run->add_option("--reps", reps, "override the replication count");
  run->add_option("--out", out_dir, "output directory (default: results)");
  run->add_option("--threads", threads, "worker threads across replications (default: 1)");

  std::string csv_a, csv_b;
  CLI::App* cmp = app.add_subcommand("compare", "rank two result files by median and test them");
  cmp->add_option("csv_a", csv_a, "first *_results.csv")->required();
  cmp->add_option("csv_b", csv_b, "second *_results.csv")->required();

  std::string design_type, design_out;
  int design_dims = 0, design_size = 0;
  std::uint64_t design_seed = 1;
  CLI::App* gen = app.add_subcommand("gen-design", "write a phenotype input design to a csv file");
  gen->add_option("--type", design_type, "factorial or lhs")->required();
  gen->add_option("--dims", design_dims, "input dimensionality")->required();
  gen->add_option("--size", design_size, "number of design rows")->required();
  gen->add_option("--out", design_out, "output csv path")->required();
  gen->add_option("--seed", design_seed, "rng seed for lhs (default: 1)");

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(config_path, seed, reps, out_dir, threads);
    if (cmp->parsed()) return cmd_compare(csv_a, csv_b);
    return cmd_gen_design(design_type, design_dims, design_size, design_out, design_seed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const smbne::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
