// Command-line front end: enumerate invariant generators, build equivariant
// bases, verify stored artifacts with Monte-Carlo rotation sweeps, and run
// the constitutive-law experiment.
//
// Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
// 3 enumeration overflow, 4 training divergence.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "so3tengen/equilearn.hpp"
#include "so3tengen/equivar.hpp"
#include "so3tengen/errors.hpp"
#include "so3tengen/invgen.hpp"
#include "so3tengen/verify.hpp"

namespace {

using namespace so3tengen;

// Publish via a sibling temp file and rename so readers never see a torn
// write.
void write_file_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw Error("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_enumerate(const std::string& sig_text, int degree, int epsilon,
                  const std::string& out) {
  const inv::Signature sig = inv::Signature::parse(sig_text);
  inv::GeneratorSet set = inv::enumerate_networks(sig, degree, epsilon);
  const int probes =
      std::max<int>(16, 2 * static_cast<int>(set.generators.size()));
  set = inv::dedup_numeric(set, probes, 1e-8);
  std::map<int, int> by_degree;
  for (const auto& g : set.generators) {
    int total = 0;
    for (int c : g.degree) total += c;
    ++by_degree[total];
  }
  for (const auto& [d, n] : by_degree) std::printf("degree %d: %d\n", d, n);
  std::printf("total: %zu\n", set.generators.size());
  write_file_atomic(out, inv::generator_set_to_json(set).dump(2) + "\n");
  return 0;
}

int cmd_basis(const std::string& sig_text, const std::string& out_rep,
              int degree, const std::string& out) {
  const inv::Signature sig = inv::Signature::parse(sig_text);
  const inv::Signature rep = inv::Signature::parse(out_rep);
  if (rep.slots.size() != 1)
    throw Error("--out-rep must name a single representation");
  const eqv::EquivariantBasis basis =
      eqv::equivariant_basis(sig, rep.slots[0], degree);
  std::printf("elements: %zu\n", basis.elements.size());
  write_file_atomic(out, eqv::basis_to_json(basis).dump(2) + "\n");
  return 0;
}

int cmd_verify(const std::string& in, int rotations, double tol,
               std::uint64_t seed) {
  if (rotations <= 0) {
    std::fprintf(stderr, "error: --rotations must be positive\n");
    return 2;
  }
  const Json j = Json::parse(read_file(in));
  vfy::VerificationReport rep;
  if (j.contains("generators")) {
    rep = vfy::check_invariance(inv::generator_set_from_json(j), rotations,
                                tol, seed);
  } else if (j.contains("elements")) {
    rep = vfy::check_equivariance(eqv::basis_from_json(j), rotations, tol,
                                  seed);
  } else {
    throw Error(in + ": expected a generator set or an equivariant basis");
  }
  std::printf("%s\n", vfy::report_to_json(rep).dump(2).c_str());
  return rep.pass ? 0 : 1;
}

int cmd_experiment(const std::string& variant, const std::vector<int>& sizes,
                   std::uint64_t seed, const std::string& out_dir) {
  learn::TrainConfig cfg;
  cfg.seed = seed;
  if (!variant.empty()) cfg.variants = {learn::variant_from_string(variant)};
  if (!sizes.empty()) cfg.train_sizes = sizes;
  const learn::Metrics metrics = learn::run_experiment(cfg);
  std::filesystem::create_directories(out_dir);
  write_file_atomic(out_dir + "/runs.csv", learn::runs_csv(metrics));
  write_file_atomic(out_dir + "/aggregate.csv", learn::aggregate_csv(metrics));
  std::printf("%s", learn::aggregate_csv(metrics).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SO(3) invariant generator and equivariant basis toolkit"};
  app.require_subcommand(1);

  std::string sig_text, out_rep, out_path, in_path, variant, out_dir;
  int degree = 3, epsilon = 1, rotations = 200;
  double tol = 1e-8;
  std::uint64_t seed = 1;
  std::uint64_t exp_seed = 0;
  std::vector<int> sizes;

  CLI::App* enumerate =
      app.add_subcommand("enumerate", "enumerate invariant generators");
  enumerate->add_option("signature", sig_text, "input signature")->required();
  enumerate->add_option("--degree", degree, "max total input copies")
      ->required();
  enumerate->add_option("--epsilon", epsilon, "antisymmetric node budget")
      ->check(CLI::Range(0, 1));
  enumerate->add_option("--out", out_path, "output JSON path")->required();

  CLI::App* basis =
      app.add_subcommand("basis", "build an equivariant basis");
  basis->add_option("signature", sig_text, "input signature")->required();
  basis->add_option("--out-rep", out_rep, "output representation")
      ->required();
  basis->add_option("--degree", degree, "max total input copies")->required();
  basis->add_option("--out", out_path, "output JSON path")->required();

  CLI::App* verify = app.add_subcommand(
      "verify", "Monte-Carlo check of a stored generator set or basis");
  verify->add_option("--in", in_path, "artifact JSON path")->required();
  verify->add_option("--rotations", rotations, "rotation sample count");
  verify->add_option("--tol", tol, "violation tolerance");
  verify->add_option("--seed", seed, "probe seed");

  CLI::App* experiment = app.add_subcommand(
      "experiment", "train the constitutive-law models and write metrics");
  experiment->add_option("--variant", variant,
                         "one of mlp, equi3, equi7 (default: all)");
  experiment->add_option("--train-sizes", sizes, "training set sizes")
      ->delimiter(',');
  experiment->add_option("--seed", exp_seed, "experiment seed");
  experiment->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (enumerate->parsed())
      return cmd_enumerate(sig_text, degree, epsilon, out_path);
    if (basis->parsed()) return cmd_basis(sig_text, out_rep, degree, out_path);
    if (verify->parsed()) return cmd_verify(in_path, rotations, tol, seed);
    if (experiment->parsed())
      return cmd_experiment(variant, sizes, exp_seed, out_dir);
  } catch (const EnumerationTooLarge& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const TrainingDiverged& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
