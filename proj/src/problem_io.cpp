#include "kyfan/problem_io.hpp"

#include <cmath>
#include <fstream>

namespace kyfan::io {

const std::vector<ToleranceField>& tolerance_fields() {
  static const std::vector<ToleranceField> fields{
      {"group_rel", &Tolerances::group_rel, "singular/eigen grouping, times max(1, largest magnitude)"},
      {"recon", &Tolerances::recon, "SVD reconstruction and orthogonality"},
      {"sigma_class", &Tolerances::sigma_class, "classifying sigma(Gamma) as 0, 1 or interior"},
      {"sum_rel", &Tolerances::sum_rel, "trace and nuclear-norm identities, times kappa"},
      {"membership", &Tolerances::membership, "subgradient membership residuals"},
      {"cone", &Tolerances::cone, "critical cone and zero set, times max(1, ||G||)"},
      {"pinv_rel", &Tolerances::pinv_rel, "pseudo-inverse cutoff"},
      {"cond_rel", &Tolerances::cond_rel, "critical condition for Phi, times (1 + ||H||)"},
      {"kernel_rel", &Tolerances::kernel_rel, "Hessian kernel, times largest eigenvalue"},
      {"kernel_floor", &Tolerances::kernel_floor, "absolute floor for the kernel cutoff"},
      {"intersect", &Tolerances::intersect, "null singular values of [K, -L]"},
      {"margin", &Tolerances::margin, "Upsilon constraint margin"},
      {"psd", &Tolerances::psd, "Hessian PSD check, times max(1, largest eigenvalue)"},
      {"zero_value", &Tolerances::zero_value, "second-subderivative value counted as zero"},
  };
  return fields;
}

void set_tolerance(Tolerances& tols, const std::string& name, double value) {
  for (const auto& f : tolerance_fields()) {
    if (name != f.name) continue;
    if (!(value > 0.0) || !std::isfinite(value))
      throw SchemaError("/tolerances/" + name, "tolerance must be a positive finite number");
    tols.*f.member = value;
    return;
  }
  throw SchemaError("/tolerances/" + name, "unknown tolerance");
}

ordered_json tolerances_to_json(const Tolerances& tols) {
  ordered_json out = ordered_json::object();
  for (const auto& f : tolerance_fields()) out[f.name] = tols.*f.member;
  return out;
}

namespace {

double number_at(const json& j, const std::string& pointer) {
  if (!j.is_number()) throw SchemaError(pointer, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(pointer, "expected a finite number");
  return v;
}

long long integer_at(const json& j, const std::string& pointer) {
  if (!j.is_number_integer()) throw SchemaError(pointer, "expected an integer");
  return j.get<long long>();
}

const json& field(const json& j, const char* key, const std::string& pointer) {
  if (!j.contains(key)) throw SchemaError(pointer + "/" + key, "missing field");
  return j.at(key);
}

void expect_shape(const MatrixXd& a, Index rows, Index cols, const std::string& pointer) {
  if (a.rows() != rows || a.cols() != cols)
    throw SchemaError(pointer, "expected a " + std::to_string(rows) + " x " + std::to_string(cols) + " matrix, got " +
                                   std::to_string(a.rows()) + " x " + std::to_string(a.cols()));
}

}  // namespace

MatrixXd parse_matrix(const json& j, const std::string& pointer) {
  if (j.is_object()) {
    const long long rows = integer_at(field(j, "rows", pointer), pointer + "/rows");
    const long long cols = integer_at(field(j, "cols", pointer), pointer + "/cols");
    if (rows < 0 || cols < 0) throw SchemaError(pointer, "negative dimension");
    const json& data = field(j, "data", pointer);
    if (!data.is_array()) throw SchemaError(pointer + "/data", "expected an array");
    if (static_cast<long long>(data.size()) != rows * cols)
      throw SchemaError(pointer + "/data", "expected " + std::to_string(rows * cols) + " entries");
    MatrixXd a(rows, cols);
    for (long long k = 0; k < rows * cols; ++k)
      a(k / cols, k % cols) = number_at(data[k], pointer + "/data/" + std::to_string(k));
    return a;
  }
  if (!j.is_array()) throw SchemaError(pointer, "expected a matrix object or an array of rows");
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows ? static_cast<Index>(j[0].is_array() ? j[0].size() : 0) : 0;
  MatrixXd a(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const std::string row_ptr = pointer + "/" + std::to_string(i);
    if (!j[i].is_array() || static_cast<Index>(j[i].size()) != cols) throw SchemaError(row_ptr, "ragged or non-array row");
    for (Index k = 0; k < cols; ++k) a(i, k) = number_at(j[i][k], row_ptr + "/" + std::to_string(k));
  }
  return a;
}

ordered_json matrix_to_json(const MatrixXd& a) {
  ordered_json out;
  out["rows"] = a.rows();
  out["cols"] = a.cols();
  ordered_json data = ordered_json::array();
  for (Index i = 0; i < a.rows(); ++i)
    for (Index k = 0; k < a.cols(); ++k) data.push_back(a(i, k));
  out["data"] = std::move(data);
  return out;
}

Problem parse_problem(const json& j) {
  if (!j.is_object()) throw SchemaError("", "expected a JSON object");
  Problem p;
  const long long n = integer_at(field(j, "n", ""), "/n");
  const long long m = integer_at(field(j, "m", ""), "/m");
  if (n < 1 || n > m) throw SchemaError("/n", "expected 1 <= n <= m");
  const long long kappa = integer_at(field(j, "kappa", ""), "/kappa");
  if (kappa < 1 || kappa > n) throw SchemaError("/kappa", "expected 1 <= kappa <= n");
  const double nu = number_at(field(j, "nu", ""), "/nu");
  if (!(nu > 0.0)) throw SchemaError("/nu", "expected a positive number");

  auto& s = p.spec;
  s.kappa = kappa;
  s.nu = nu;
  s.xbar = parse_matrix(field(j, "X", ""), "/X");
  expect_shape(s.xbar, n, m, "/X");

  const json& th = field(j, "theta", "");
  if (!th.is_object()) throw SchemaError("/theta", "expected an object");
  const json& type = field(th, "type", "/theta");
  if (!type.is_string()) throw SchemaError("/theta/type", "expected a string");
  const Index nm = n * m;
  if (type == "quadratic") {
    QuadraticTheta<double> q;
    q.Q = parse_matrix(field(th, "Q", "/theta"), "/theta/Q");
    expect_shape(q.Q, nm, nm, "/theta/Q");
    if ((q.Q - q.Q.transpose()).norm() > 1e-12 * std::max(1.0, q.Q.norm())) throw SchemaError("/theta/Q", "not symmetric");
    q.L = th.contains("L") ? parse_matrix(th.at("L"), "/theta/L") : MatrixXd::Zero(n, m);
    expect_shape(q.L, n, m, "/theta/L");
    s.theta = std::move(q);
  } else if (type == "least_squares") {
    LeastSquaresTheta<double> ls;
    ls.A = parse_matrix(field(th, "A", "/theta"), "/theta/A");
    if (ls.A.cols() != nm) throw SchemaError("/theta/A", "expected nm = " + std::to_string(nm) + " columns");
    const json& b = field(th, "b", "/theta");
    if (!b.is_array() || static_cast<Index>(b.size()) != ls.A.rows())
      throw SchemaError("/theta/b", "expected an array with one entry per row of A");
    ls.b.resize(ls.A.rows());
    for (Index i = 0; i < ls.b.size(); ++i) ls.b(i) = number_at(b[i], "/theta/b/" + std::to_string(i));
    s.theta = std::move(ls);
  } else {
    throw SchemaError("/theta/type", "expected \"quadratic\" or \"least_squares\"");
  }

  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    if (!t.is_object()) throw SchemaError("/tolerances", "expected an object");
    for (auto it = t.begin(); it != t.end(); ++it)
      set_tolerance(p.tols, it.key(), number_at(it.value(), "/tolerances/" + it.key()));
  }
  if (j.contains("options")) {
    const json& o = j.at("options");
    if (!o.is_object()) throw SchemaError("/options", "expected an object");
    if (o.contains("rotation_samples")) {
      const long long r = integer_at(o.at("rotation_samples"), "/options/rotation_samples");
      if (r < 0) throw SchemaError("/options/rotation_samples", "expected a nonnegative integer");
      p.rotation_samples = static_cast<int>(r);
    }
    if (o.contains("seed")) {
      const long long sd = integer_at(o.at("seed"), "/options/seed");
      if (sd < 0) throw SchemaError("/options/seed", "expected a nonnegative integer");
      p.seed = static_cast<std::uint64_t>(sd);
    }
  }
  return p;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("", "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("invalid JSON: ") + e.what());
  }
}

Problem load_problem(const std::string& path) { return parse_problem(read_json_file(path)); }

}  // namespace kyfan::io
