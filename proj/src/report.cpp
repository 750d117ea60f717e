#include "kyfan/report.hpp"

#include <cmath>

namespace kyfan::io {

ordered_json number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  return v;
}

ordered_json extended(const ExtendedReal<double>& v) { return v.finite ? number(v.value) : ordered_json("+inf"); }

ordered_json index_list(Range r) {
  ordered_json out = ordered_json::array();
  for (Index i = r.begin; i < r.end(); ++i) out.push_back(i);
  return out;
}

namespace {

ordered_json vector_json(const VectorXd& v) {
  ordered_json out = ordered_json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

}  // namespace

ordered_json problem_echo(const Problem& p) {
  const auto& s = p.spec;
  ordered_json out;
  out["n"] = s.n();
  out["m"] = s.m();
  out["kappa"] = s.kappa;
  out["nu"] = s.nu;
  out["X"] = matrix_to_json(s.xbar);
  ordered_json th;
  if (auto q = std::get_if<QuadraticTheta<double>>(&s.theta)) {
    th["type"] = "quadratic";
    th["Q"] = matrix_to_json(q->Q);
    th["L"] = matrix_to_json(q->L);
  } else {
    const auto& ls = std::get<LeastSquaresTheta<double>>(s.theta);
    th["type"] = "least_squares";
    th["A"] = matrix_to_json(ls.A);
    th["b"] = vector_json(ls.b);
  }
  out["theta"] = std::move(th);
  out["options"] = {{"rotation_samples", p.rotation_samples}, {"seed", p.seed}};
  return out;
}

ordered_json certificate_summary(const SubgradCertificate<double>& cert) {
  ordered_json out;
  out["membership_case"] = to_string(cert.kase);
  out["cone_case"] = to_string(cone_case(cert));
  out["kappa"] = cert.kappa;
  out["kappa0"] = cert.kappa0();
  out["kappa1"] = cert.kappa1();
  out["sigma_X"] = vector_json(cert.pair.sigma);
  out["sigma_Gamma"] = vector_json(cert.sigma_gamma);
  out["nuclear_norm_Gamma"] = cert.nuclear;
  out["tight"] = cert.tight;
  out["group_count"] = cert.grouping.s();
  out["kappa_group"] = cert.grouping.r;
  ordered_json warnings = ordered_json::array();
  for (const auto& w : cert.warnings) warnings.push_back(w);
  out["warnings"] = std::move(warnings);
  return out;
}

ordered_json index_sets(const SubgradCertificate<double>& cert) {
  ordered_json out;
  out["alpha"] = index_list(cert.alpha);
  out["beta"] = index_list(cert.beta);
  out["gamma"] = index_list(cert.gamma_set);
  out["beta1"] = index_list(cert.beta1);
  out["beta_plus"] = index_list(cert.beta_plus);
  out["beta0"] = index_list(cert.beta0);
  out["c"] = index_list(cert.c());
  return out;
}

ordered_json upsilon_summary(const UpsilonSpec<double>& ups) {
  ordered_json out;
  out["case"] = to_string(ups.kase);
  out["hull_dim"] = ups.hull.cols();
  out["exact"] = ups.exact;
  out["corner"] = index_list(ups.corner);
  out["plus"] = index_list(ups.plus);
  out["free_rows"] = index_list(ups.free_rows);
  out["free_cols"] = index_list(ups.free_cols);
  std::string constraint = "none";
  if (!ups.exact) {
    constraint = ups.kase == ConeCase::ZeroGroupTight ? "sigma_max([D E]) <= varpi <= lambda_min(C)"
                                                      : "lambda_max(S(D)) <= varpi <= lambda_min(C)";
  }
  out["cone_constraint"] = constraint;
  return out;
}

ordered_json verdict_json(const TiltVerdict<double>& v, Index n, Index m, const Tolerances& tols) {
  ordered_json out;
  out["status"] = to_string(v.status);
  out["kernel_dim"] = v.kernel_dim;
  out["hull_dim"] = v.hull_dim;
  out["intersection_dim"] = v.intersection_dim;
  out["exact"] = v.exact;
  out["separation"] = number(v.separation);
  out["best_margin"] = number(v.best_margin);
  if (v.witness) {
    ordered_json w;
    w["W"] = matrix_to_json(unvec(*v.witness, n, m));
    w["kernel_residual"] = number(v.kernel_residual);
    w["hull_residual"] = number(v.hull_residual);
    w["constraint_violation"] = number(v.constraint_violation);
    out["witness"] = std::move(w);
  } else {
    out["witness"] = nullptr;
  }
  out["note"] = v.note;
  out["tolerances"] = {{"kernel_rel", tols.kernel_rel},
                       {"kernel_floor", tols.kernel_floor},
                       {"intersect", tols.intersect},
                       {"margin", tols.margin}};
  return out;
}

ordered_json second_subderiv_json(const SecondSubderivValue<double>& v) {
  ordered_json out;
  out["value"] = extended(v.value);
  if (!v.finite()) out["reason"] = to_string(v.reason);
  ordered_json terms = ordered_json::object();
  for (const auto& [name, value] : v.terms) terms[name] = number(value);
  out["terms"] = std::move(terms);
  return out;
}

ordered_json probe_json(const ProbeReport& r, const ProbeConfig& cfg) {
  ordered_json out;
  out["consistent_with"] = to_string(r.consistent_with);
  out["modulus"] = number(r.modulus);
  out["threshold"] = cfg.threshold;
  out["delta"] = cfg.delta;
  ordered_json rows = ordered_json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"tilt_id", row.tilt_id},
                    {"V_norm", number(row.v_norm)},
                    {"solution_displacement", number(row.displacement)},
                    {"residual", number(row.residual)}});
  out["rows"] = std::move(rows);
  return out;
}

}  // namespace kyfan::io
