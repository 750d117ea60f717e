#include "kyfan/commands.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>

namespace {

using kyfan::cli::CommandResult;
namespace io = kyfan::io;

struct CommonArgs {
  std::string problem_file;
  std::string out_file;
  std::map<std::string, double> tolerances;
  std::optional<std::uint64_t> seed;
  std::optional<int> rotation_samples;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("problem", args.problem_file, "problem file (JSON)")->required();
  sub->add_option("--out", args.out_file, "write the JSON result here instead of stdout");
  sub->add_option("--seed", args.seed, "seed for every randomised step");
  sub->add_option("--rotation-samples", args.rotation_samples, "random simultaneous-pair rotations to test");
  for (const auto& f : io::tolerance_fields()) {
    const std::string name = f.name;
    sub->add_option_function<double>(
        "--tol." + name, [&args, name](const double& v) { args.tolerances[name] = v; }, f.meaning);
  }
}

kyfan::cli::AnalyzeFlags flags_from(const CommonArgs& args) {
  kyfan::cli::AnalyzeFlags flags;
  flags.tolerances = args.tolerances;
  flags.seed = args.seed;
  flags.rotation_samples = args.rotation_samples;
  return flags;
}

kyfan::MatrixXd load_matrix(const std::string& path, const char* key) {
  const auto j = io::read_json_file(path);
  if (j.is_object() && j.contains(key)) return io::parse_matrix(j.at(key), std::string("/") + key);
  return io::parse_matrix(j, "");
}

int emit(const CommandResult& r, const std::string& out_file) {
  const std::string text = r.output.dump(2) + "\n";
  if (out_file.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_file, std::ios::binary);
    if (!out) {
      std::cerr << "cannot write " << out_file << "\n";
      return kyfan::cli::kInputError;
    }
    out << text;
  }
  return r.exit_code;
}

template <typename Body>
int guarded(const std::string& out_file, Body&& body) {
  try {
    return emit(body(), out_file);
  } catch (const io::SchemaError& e) {
    return emit(kyfan::cli::error_result("SchemaError", e.what(), e.pointer), out_file);
  } catch (const kyfan::Error& e) {
    return emit(kyfan::cli::error_result("InputError", e.what()), out_file);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Second-order analysis of Ky-Fan norm regularised problems"};
  app.require_subcommand(1);

  CommonArgs analyze_args;
  bool probe = false, timings = false;
  int d2_samples = 0;
  std::string probe_csv;
  auto* analyze = app.add_subcommand("analyze", "stationarity, certificate, Upsilon and tilt-stability verdict");
  add_common(analyze, analyze_args);
  analyze->add_flag("--probe", probe, "also run the empirical tilt probe");
  analyze->add_option("--probe-csv", probe_csv, "write probe rows as CSV");
  analyze->add_option("--d2-samples", d2_samples, "evaluate the second subderivative on k critical directions");
  analyze->add_flag("--timings", timings, "include wall-clock timings (makes reports non-reproducible)");

  CommonArgs tilt_args;
  auto* tilt = app.add_subcommand("tilt", "tilt-stability verdict only");
  add_common(tilt, tilt_args);

  CommonArgs sub_args;
  std::string sub_gamma;
  auto* subgrad = app.add_subcommand("subgrad-check", "subgradient membership with certificate");
  add_common(subgrad, sub_args);
  subgrad->add_option("--gamma", sub_gamma, "matrix file for Gamma (default -nu grad theta(X))");

  CommonArgs d2_args;
  std::string g_file, d2_gamma;
  bool cross_check = false;
  auto* d2 = app.add_subcommand("d2", "second subderivative of the Ky-Fan norm in direction G");
  add_common(d2, d2_args);
  d2->add_option("direction", g_file, "matrix file for G")->required();
  d2->add_option("--gamma", d2_gamma, "matrix file for Gamma (default -nu grad theta(X))");
  d2->add_flag("--cross-check", cross_check, "compare with the eigenvalue route and the quotient oracle");

  kyfan::cli::ValidateOptions vopt;
  std::string v_out;
  auto* validate = app.add_subcommand("oracle-validate", "seeded cross-validation suites");
  validate->add_option("--suite", vopt.suite, "formula, prox, quotient or all")
      ->check(CLI::IsMember({"formula", "prox", "quotient", "all"}));
  validate->add_option("--seed", vopt.seed, "suite seed");
  validate->add_option("--count", vopt.count, "instances per suite")->check(CLI::PositiveNumber);
  validate->add_option("--out", v_out, "write the JSON summary here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kyfan::cli::kInputError;
  }

  if (*analyze) {
    auto flags = flags_from(analyze_args);
    flags.probe = probe || !probe_csv.empty();
    flags.d2_samples = d2_samples;
    flags.timings = timings;
    return guarded(analyze_args.out_file, [&] {
      auto r = kyfan::cli::run_analyze(io::load_problem(analyze_args.problem_file), flags);
      if (!probe_csv.empty() && !r.csv.empty()) std::ofstream(probe_csv, std::ios::binary) << r.csv;
      return r;
    });
  }
  if (*tilt) {
    return guarded(tilt_args.out_file, [&] {
      return kyfan::cli::run_tilt(io::load_problem(tilt_args.problem_file), flags_from(tilt_args));
    });
  }
  if (*subgrad) {
    return guarded(sub_args.out_file, [&] {
      std::optional<kyfan::MatrixXd> gamma;
      if (!sub_gamma.empty()) gamma = load_matrix(sub_gamma, "Gamma");
      return kyfan::cli::run_subgrad_check(io::load_problem(sub_args.problem_file), gamma, flags_from(sub_args));
    });
  }
  if (*d2) {
    return guarded(d2_args.out_file, [&] {
      std::optional<kyfan::MatrixXd> gamma;
      if (!d2_gamma.empty()) gamma = load_matrix(d2_gamma, "Gamma");
      return kyfan::cli::run_d2(io::load_problem(d2_args.problem_file), load_matrix(g_file, "G"), gamma, cross_check,
                                flags_from(d2_args));
    });
  }
  const auto r = kyfan::cli::run_oracle_validate(vopt);
  std::cout << r.table;
  if (!v_out.empty()) std::ofstream(v_out, std::ios::binary) << r.output.dump(2) << "\n";
  return r.exit_code;
}
