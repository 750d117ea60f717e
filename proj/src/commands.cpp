#include "kyfan/commands.hpp"

#include "kyfan/instances.hpp"

#include <chrono>
#include <iomanip>
#include <sstream>

namespace kyfan::cli {

using io::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

double millis_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

CommandResult failed(CommandResult partial, const std::string& kind, const std::string& message) {
  partial.exit_code = kInputError;
  partial.output["error"] = {{"kind", kind}, {"message", message}};
  return partial;
}

std::string kind_of(const Error& e) {
  if (dynamic_cast<const DimensionError*>(&e)) return "DimensionError";
  if (dynamic_cast<const NotASubgradientError*>(&e)) return "NotASubgradient";
  if (dynamic_cast<const PreconditionError*>(&e)) return "PreconditionError";
  if (dynamic_cast<const NumericError*>(&e)) return "NumericError";
  return "Error";
}

int exit_for(TiltStatus s) {
  switch (s) {
    case TiltStatus::Stable: return kStable;
    case TiltStatus::Unstable: return kUnstable;
    case TiltStatus::Inconclusive: return kInconclusive;
  }
  return kInconclusive;
}

TiltOptions tilt_options(const io::Problem& p) {
  TiltOptions opt;
  opt.seed = p.seed;
  opt.rotation_samples = p.rotation_samples;
  opt.tols = p.tols;
  return opt;
}

ordered_json stationarity_json(const io::Problem& p, const MatrixXd& gamma, const SubgradResult<double>& res) {
  ordered_json out;
  out["holds"] = res.member;
  out["failure"] = res.failure;
  out["distance"] = io::number(subdiff_distance<double>(p.spec.xbar, gamma, p.spec.kappa));
  out["tolerance"] = p.tols.membership;
  return out;
}

std::mt19937_64 instance_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

io::Problem with_flags(io::Problem p, const AnalyzeFlags& flags) {
  for (const auto& [name, value] : flags.tolerances) io::set_tolerance(p.tols, name, value);
  if (flags.rotation_samples) p.rotation_samples = *flags.rotation_samples;
  if (flags.seed) p.seed = *flags.seed;
  return p;
}

CommandResult error_result(const std::string& kind, const std::string& message, const std::string& pointer) {
  CommandResult r;
  r.exit_code = kInputError;
  r.output["error"] = {{"kind", kind}, {"message", message}};
  if (!pointer.empty()) r.output["error"]["pointer"] = pointer;
  return r;
}

CommandResult run_analyze(const io::Problem& problem, const AnalyzeFlags& flags) {
  CommandResult r;
  const io::Problem p = with_flags(problem, flags);
  const auto& spec = p.spec;
  ordered_json timings;
  auto t0 = Clock::now();
  r.output["problem"] = io::problem_echo(p);
  r.output["tolerances"] = io::tolerances_to_json(p.tols);
  try {
    spec.validate();
    const MatrixXd gamma = spec.gamma_bar();
    const auto res = subdiff_membership(spec.xbar, gamma, spec.kappa, p.tols);
    r.output["stationarity"] = stationarity_json(p, gamma, res);
    timings["stationarity_ms"] = millis_since(t0);
    if (!res.member) return failed(std::move(r), "NotASubgradient", "-nu grad theta(X) is not a subgradient at X: " + res.failure);

    const auto& cert = *res.certificate;
    r.output["certificate"] = io::certificate_summary(cert);
    r.output["index_sets"] = io::index_sets(cert);
    t0 = Clock::now();
    const auto ups = build_upsilon_from_cert(cert);
    r.output["upsilon"] = io::upsilon_summary(ups);

    if (flags.d2_samples > 0) {
      std::mt19937_64 rng(p.seed);
      ordered_json samples = ordered_json::array();
      for (int k = 0; k < flags.d2_samples; ++k) {
        const auto kind = k % 2 == 0 ? DirectionKind::Generic : DirectionKind::Boundary;
        const MatrixXd g = random_cone_direction(cert, rng, kind);
        ordered_json s;
        s["G"] = io::matrix_to_json(g);
        s["d2"] = io::second_subderiv_json(d2_psi_explicit(cert, g, p.tols));
        samples.push_back(std::move(s));
      }
      r.output["d2_samples"] = {{"tolerance_cone", p.tols.cone}, {"samples", std::move(samples)}};
    }

    const auto verdict = tilt_check(spec, tilt_options(p));
    timings["tilt_ms"] = millis_since(t0);
    r.output["verdict"] = io::verdict_json(verdict, spec.n(), spec.m(), p.tols);
    r.exit_code = exit_for(verdict.status);

    if (flags.probe) {
      t0 = Clock::now();
      ProbeConfig cfg;
      cfg.seed = p.seed;
      const auto probe = tilt_probe(spec, cfg);
      r.output["oracle"] = {{"probe", io::probe_json(probe, cfg)}};
      std::ostringstream csv;
      csv << std::setprecision(17);
      probe.write_csv(csv);
      r.csv = csv.str();
      timings["probe_ms"] = millis_since(t0);
    }
  } catch (const Error& e) {
    return failed(std::move(r), kind_of(e), e.what());
  }
  if (flags.timings) r.output["timings"] = std::move(timings);
  return r;
}

CommandResult run_tilt(const io::Problem& problem, const AnalyzeFlags& flags) {
  CommandResult r;
  const io::Problem p = with_flags(problem, flags);
  try {
    const auto ups = build_upsilon(p.spec, p.tols);
    r.output["upsilon"] = io::upsilon_summary(ups);
    const auto verdict = tilt_check(p.spec, tilt_options(p));
    r.output["verdict"] = io::verdict_json(verdict, p.spec.n(), p.spec.m(), p.tols);
    r.exit_code = exit_for(verdict.status);
  } catch (const Error& e) {
    return failed(std::move(r), kind_of(e), e.what());
  }
  return r;
}

CommandResult run_subgrad_check(const io::Problem& problem, const std::optional<MatrixXd>& gamma_in,
                                const AnalyzeFlags& flags) {
  CommandResult r;
  const io::Problem p = with_flags(problem, flags);
  try {
    p.spec.validate();
    const MatrixXd gamma = gamma_in ? *gamma_in : p.spec.gamma_bar();
    const auto res = subdiff_membership(p.spec.xbar, gamma, p.spec.kappa, p.tols);
    r.output["member"] = res.member;
    r.output["stationarity"] = stationarity_json(p, gamma, res);
    if (res.member) {
      const auto& cert = *res.certificate;
      r.output["certificate"] = io::certificate_summary(cert);
      r.output["index_sets"] = io::index_sets(cert);
      const auto mult = multiplier_from_xi(cert, canonical_xi(cert), p.tols);
      r.output["multiplier"] = {
          {"xi", io::matrix_to_json(mult.xi.transpose())},
          {"verified", multiplier_membership<double>(p.spec.xbar, gamma, mult.M, p.spec.kappa, p.tols.membership, p.tols)}};
    }
    r.exit_code = res.member ? 0 : 1;
  } catch (const Error& e) {
    return failed(std::move(r), kind_of(e), e.what());
  }
  return r;
}

CommandResult run_d2(const io::Problem& problem, const MatrixXd& g, const std::optional<MatrixXd>& gamma_in,
                     bool cross_check, const AnalyzeFlags& flags) {
  CommandResult r;
  const io::Problem p = with_flags(problem, flags);
  try {
    p.spec.validate();
    if (g.rows() != p.spec.n() || g.cols() != p.spec.m()) throw DimensionError("G must have the shape of X");
    const MatrixXd gamma = gamma_in ? *gamma_in : p.spec.gamma_bar();
    const auto cert = require_subgradient(p.spec.xbar, gamma, p.spec.kappa, p.tols);
    const auto value = d2_psi_explicit(cert, g, p.tols);
    r.output = io::second_subderiv_json(value);
    if (cross_check) {
      ordered_json cc;
      const auto general = d2_psi_general(p.spec.xbar, gamma, g, p.spec.kappa, p.tols);
      cc["general"] = io::extended(general.value);
      const bool agree = general.finite() == value.finite() &&
                         (!value.finite() || std::abs(general.get() - value.get()) <= 1e-9 * std::max(1.0, std::abs(value.get())));
      cc["general_agrees"] = agree;
      const Index kappa = p.spec.kappa;
      const std::function<double(const MatrixXd&)> f = [kappa](const MatrixXd& y) { return psi_value(y, kappa); };
      const std::function<MatrixXd(const MatrixXd&)> sg = [kappa](const MatrixXd& y) {
        return psi_subgradient<double>(y, kappa);
      };
      QuotientConfig qc;
      qc.seed = p.seed;
      const auto oracle = d2_quotient_oracle<double>(f, p.spec.xbar, gamma, g, qc, sg);
      cc["oracle"] = {{"estimate", io::extended(oracle.estimate)}, {"diverging", oracle.diverging}};
      if (value.finite() && oracle.estimate.finite)
        cc["oracle_relative_error"] = std::abs(oracle.estimate.value - value.get()) / (1.0 + std::abs(value.get()));
      cc["tolerances"] = {{"general_rel", 1e-9}, {"oracle_rel", 1e-2}};
      r.output["cross_check"] = std::move(cc);
    }
  } catch (const Error& e) {
    return failed(std::move(r), kind_of(e), e.what());
  }
  return r;
}

namespace {

struct SuiteTally {
  std::string name;
  int checks = 0, failures = 0;
  double worst = 0, tolerance = 0;

  void record(double err) {
    ++checks;
    worst = std::max(worst, err);
    if (!(err <= tolerance)) ++failures;
  }
  void record_bool(bool ok) {
    ++checks;
    if (!ok) ++failures;
  }
};

double rel_error(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

SuiteTally formula_suite(const ValidateOptions& opt) {
  SuiteTally t{"formula"};
  t.tolerance = 1e-9;
  for (int k = 0; k < opt.count; ++k) {
    auto rng = instance_rng(opt.seed, k);
    const auto shape = random_shape(rng);
    const auto inst = random_instance<double>(rng, shape);
    const auto cert = *subdiff_membership(inst.x, inst.gamma, inst.kappa).certificate;
    const auto kind = k % 3 == 0 ? DirectionKind::Boundary : DirectionKind::Generic;
    const MatrixXd g = random_cone_direction(cert, rng, kind);
    const auto e = d2_psi_explicit(cert, g);
    const auto gen = d2_psi_general(inst.x, inst.gamma, g, inst.kappa);
    if (!e.finite() || !gen.finite()) {
      t.record(std::numeric_limits<double>::infinity());
      continue;
    }
    t.record(rel_error(gen.get(), e.get()));
    t.record(rel_error(d2_psi_explicit(cert, MatrixXd(2.0 * g)).get(), 4.0 * e.get()));
    if (inst.kappa == shape.n) t.record(rel_error(d2_nuclear(inst.x, inst.gamma, g).get(), e.get()));
    if (inst.kappa == 1) t.record(rel_error(d2_spectral(inst.x, inst.gamma, g).get(), e.get()));
  }
  return t;
}

SuiteTally prox_suite(const ValidateOptions& opt) {
  SuiteTally t{"prox"};
  t.tolerance = 1e-10;
  for (int k = 0; k < opt.count; ++k) {
    auto rng = instance_rng(opt.seed, k);
    const auto shape = random_shape(rng);
    const double step = detail::uniform(rng, 0.1, 2.0);
    const MatrixXd x = 2.0 * random_gaussian<double>(shape.n, shape.m, rng);
    const MatrixXd prox = kyfan_matrix_prox<double>(x, shape.kappa, step);
    const auto res = subdiff_membership<double>(prox, (x - prox) / step, shape.kappa);
    t.record_bool(res.member);

    const VectorXd a = random_gaussian<double>(shape.n, 1, rng), b = random_gaussian<double>(shape.n, 1, rng);
    const VectorXd pa = kyfan_vector_prox<double>(a, shape.kappa, step);
    const VectorXd pb = kyfan_vector_prox<double>(b, shape.kappa, step);
    t.record(std::max(0.0, (pa - pb).norm() - (a - b).norm()));
    const VectorXd proj = project_kyfan_dual_ball<double>(a, shape.kappa, step);
    t.record((pa + proj - a).norm());
  }
  return t;
}

SuiteTally quotient_suite(const ValidateOptions& opt) {
  SuiteTally t{"quotient"};
  t.tolerance = 1e-2;
  for (int k = 0; k < opt.count; ++k) {
    auto rng = instance_rng(opt.seed, k);
    auto shape = random_shape(rng);
    shape.separated = true;
    const auto inst = random_instance<double>(rng, shape);
    const auto cert = *subdiff_membership(inst.x, inst.gamma, inst.kappa).certificate;
    MatrixXd g = random_cone_direction(cert, rng, DirectionKind::Generic);
    if (g.norm() < 1e-12) continue;
    g /= g.norm();
    const double closed = d2_psi_explicit(cert, g).get();
    const Index kappa = inst.kappa;
    const std::function<double(const MatrixXd&)> f = [kappa](const MatrixXd& y) { return psi_value(y, kappa); };
    const std::function<MatrixXd(const MatrixXd&)> sg = [kappa](const MatrixXd& y) {
      return psi_subgradient<double>(y, kappa);
    };
    QuotientConfig qc;
    qc.seed = opt.seed + static_cast<std::uint64_t>(k);
    const auto o = d2_quotient_oracle<double>(f, inst.x, inst.gamma, g, qc, sg);
    t.record(o.estimate.finite ? std::abs(o.estimate.value - closed) / (1.0 + closed)
                               : std::numeric_limits<double>::infinity());
  }
  return t;
}

}  // namespace

CommandResult run_oracle_validate(const ValidateOptions& opt) {
  CommandResult r;
  std::vector<SuiteTally> tallies;
  const bool all = opt.suite == "all";
  if (!all && opt.suite != "formula" && opt.suite != "prox" && opt.suite != "quotient")
    return error_result("UsageError", "unknown suite '" + opt.suite + "'");
  if (all || opt.suite == "formula") tallies.push_back(formula_suite(opt));
  if (all || opt.suite == "prox") tallies.push_back(prox_suite(opt));
  if (all || opt.suite == "quotient") tallies.push_back(quotient_suite(opt));

  std::ostringstream table;
  table << std::left << std::setw(10) << "suite" << std::right << std::setw(8) << "checks" << std::setw(10) << "failures"
        << std::setw(14) << "worst" << std::setw(12) << "tolerance" << "\n";
  ordered_json suites = ordered_json::array();
  int failures = 0;
  for (const auto& s : tallies) {
    failures += s.failures;
    table << std::left << std::setw(10) << s.name << std::right << std::setw(8) << s.checks << std::setw(10)
          << s.failures << std::setw(14) << std::setprecision(3) << std::scientific << s.worst << std::setw(12)
          << s.tolerance << std::defaultfloat << "\n";
    suites.push_back({{"suite", s.name},
                      {"checks", s.checks},
                      {"failures", s.failures},
                      {"worst", io::number(s.worst)},
                      {"tolerance", s.tolerance}});
  }
  r.output = {{"seed", opt.seed}, {"count", opt.count}, {"suites", std::move(suites)}};
  r.table = table.str();
  r.exit_code = failures == 0 ? 0 : 1;
  return r;
}

}  // namespace kyfan::cli
