#pragma once

#include "kyfan/secder.hpp"

#include <functional>
#include <variant>

namespace kyfan {

// theta(X) = 1/2 vec(X)^T Q vec(X) + <L, X>
template <typename Scalar>
struct QuadraticTheta {
  Matrix<Scalar> Q;
  Matrix<Scalar> L;
};

// theta(X) = 1/2 ||A vec(X) - b||^2
template <typename Scalar>
struct LeastSquaresTheta {
  Matrix<Scalar> A;
  Vector<Scalar> b;
};

// min nu * theta(X) + Psi_kappa(X) around a candidate minimiser xbar.
template <typename Scalar>
struct ProblemSpec {
  Index kappa = 1;
  Scalar nu = Scalar(1);
  Matrix<Scalar> xbar;
  std::variant<QuadraticTheta<Scalar>, LeastSquaresTheta<Scalar>> theta;

  Index n() const { return xbar.rows(); }
  Index m() const { return xbar.cols(); }

  void validate() const {
    const Index nm = n() * m();
    if (n() < 1 || n() > m()) throw DimensionError("problem: expected 1 <= n <= m");
    if (kappa < 1 || kappa > n()) throw DimensionError("problem: kappa out of range");
    if (!(nu > Scalar(0))) throw PreconditionError("problem: nu must be positive");
    if (auto q = std::get_if<QuadraticTheta<Scalar>>(&theta)) {
      if (q->Q.rows() != nm || q->Q.cols() != nm) throw DimensionError("problem: Q must be nm x nm");
      if (q->L.rows() != n() || q->L.cols() != m()) throw DimensionError("problem: L must be n x m");
      if ((q->Q - q->Q.transpose()).norm() > Scalar(1e-12) * std::max<Scalar>(Scalar(1), q->Q.norm()))
        throw PreconditionError("problem: Q must be symmetric");
    } else {
      const auto& ls = std::get<LeastSquaresTheta<Scalar>>(theta);
      if (ls.A.cols() != nm || ls.b.size() != ls.A.rows()) throw DimensionError("problem: A must be p x nm with b of length p");
    }
  }

  Scalar theta_value(const Matrix<Scalar>& x) const {
    const Vector<Scalar> v = vec(x);
    if (auto q = std::get_if<QuadraticTheta<Scalar>>(&theta))
      return Scalar(0.5) * v.dot(q->Q * v) + q->L.cwiseProduct(x).sum();
    const auto& ls = std::get<LeastSquaresTheta<Scalar>>(theta);
    return Scalar(0.5) * (ls.A * v - ls.b).squaredNorm();
  }

  Matrix<Scalar> theta_gradient(const Matrix<Scalar>& x) const {
    const Vector<Scalar> v = vec(x);
    if (auto q = std::get_if<QuadraticTheta<Scalar>>(&theta)) return unvec(q->Q * v, n(), m()) + q->L;
    const auto& ls = std::get<LeastSquaresTheta<Scalar>>(theta);
    return unvec(ls.A.transpose() * (ls.A * v - ls.b), n(), m());
  }

  Matrix<Scalar> theta_hessian() const {
    if (auto q = std::get_if<QuadraticTheta<Scalar>>(&theta)) return sym_part(q->Q);
    const auto& ls = std::get<LeastSquaresTheta<Scalar>>(theta);
    return ls.A.transpose() * ls.A;
  }

  Matrix<Scalar> gamma_bar() const { return -nu * theta_gradient(xbar); }
};

// Quadratic theta with Hessian `hess` for which -nu grad theta(xbar) = gamma.
template <typename Scalar>
ProblemSpec<Scalar> stationary_quadratic(const Matrix<Scalar>& xbar, const Matrix<Scalar>& gamma,
                                         const Matrix<Scalar>& hess, Index kappa, Scalar nu = Scalar(1)) {
  const Index n = xbar.rows(), m = xbar.cols();
  if (gamma.rows() != n || gamma.cols() != m || hess.rows() != n * m || hess.cols() != n * m)
    throw DimensionError("stationary_quadratic: shape mismatch");
  QuadraticTheta<Scalar> q{sym_part(hess), Matrix<Scalar>(-gamma / nu - unvec(sym_part(hess) * vec(xbar), n, m))};
  return ProblemSpec<Scalar>{kappa, nu, xbar, std::move(q)};
}

// The set Upsilon: a linear hull (orthonormal columns, row-major vec of n x m
// matrices) together with a scalar constraint margin, nonnegative on members.
template <typename Scalar>
struct UpsilonSpec {
  ConeCase kase = ConeCase::InteriorGroup;
  SubgradCertificate<Scalar> cert;
  Matrix<Scalar> hull;
  bool exact = true;
  Range corner, plus, free_rows, free_cols;

  Scalar margin(const Matrix<Scalar>& g) const {
    constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
    const Matrix<Scalar> gh = cert.pair.coords(g);
    const Range b1 = cert.beta1, bp = cert.beta_plus, b0 = cert.beta0;
    if (kase == ConeCase::ZeroGroupStrict) return inf;
    Scalar lo = -inf, hi = inf;
    if (!b1.empty()) hi = detail::lambda_min<Scalar>(detail::blk(gh, b1, b1));
    if (kase == ConeCase::InteriorGroup) {
      if (!b0.empty()) lo = detail::lambda_max<Scalar>(detail::blk(gh, b0, b0));
    } else {
      lo = detail::sigma_max<Scalar>(Matrix<Scalar>(gh.block(b0.begin, b0.begin, b0.size, cert.m() - b0.begin)));
    }
    if (!bp.empty()) {
      const Scalar varpi = detail::blk(gh, bp, bp).trace() / Scalar(bp.size);
      return std::min(hi - varpi, varpi - lo);
    }
    if (lo == -inf || hi == inf) return inf;
    return hi - lo;
  }

  Scalar margin_vec(const Vector<Scalar>& v) const { return margin(unvec(v, cert.n(), cert.m())); }
};

template <typename Scalar>
UpsilonSpec<Scalar> build_upsilon_from_cert(const SubgradCertificate<Scalar>& cert) {
  UpsilonSpec<Scalar> ups;
  ups.cert = cert;
  ups.kase = cone_case(cert);
  const Index n = cert.n(), m = cert.m();
  const Range b1 = cert.beta1, bp = cert.beta_plus, b0 = cert.beta0;
  ups.corner = span(0, b1.end());
  std::vector<Matrix<Scalar>> basis;
  auto add = [&](const Matrix<Scalar>& e) { basis.push_back(e); };
  const Scalar h = Scalar(1) / std::sqrt(Scalar(2));
  for (Index i = 0; i < ups.corner.size; ++i)
    for (Index j = i; j < ups.corner.size; ++j) {
      Matrix<Scalar> e = Matrix<Scalar>::Zero(n, m);
      if (i == j) e(i, i) = 1;
      else e(i, j) = e(j, i) = h;
      add(e);
    }
  if (ups.kase != ConeCase::ZeroGroupStrict) {
    ups.plus = bp;
    if (!bp.empty()) {
      Matrix<Scalar> e = Matrix<Scalar>::Zero(n, m);
      e.block(bp.begin, bp.begin, bp.size, bp.size).setIdentity();
      add(e / std::sqrt(Scalar(bp.size)));
    }
    ups.free_rows = span(b0.begin, ups.kase == ConeCase::InteriorGroup ? n : b0.end());
    ups.free_cols = span(b0.begin, m);
    for (Index i = ups.free_rows.begin; i < ups.free_rows.end(); ++i)
      for (Index j = ups.free_cols.begin; j < ups.free_cols.end(); ++j) {
        Matrix<Scalar> e = Matrix<Scalar>::Zero(n, m);
        e(i, j) = 1;
        add(e);
      }
  }
  ups.hull.resize(n * m, static_cast<Index>(basis.size()));
  for (size_t k = 0; k < basis.size(); ++k) ups.hull.col(k) = vec(cert.pair.from_coords(basis[k]));

  const bool e1 = b1.empty(), ep = bp.empty(), e0 = b0.empty();
  switch (ups.kase) {
    case ConeCase::InteriorGroup: ups.exact = ep ? (e0 || e1) : (e0 && e1); break;
    case ConeCase::ZeroGroupStrict: ups.exact = true; break;
    case ConeCase::ZeroGroupTight: ups.exact = ep && e1; break;
  }
  return ups;
}

template <typename Scalar>
UpsilonSpec<Scalar> build_upsilon(const ProblemSpec<Scalar>& spec, const Tolerances& tols = {}) {
  spec.validate();
  return build_upsilon_from_cert(require_subgradient(spec.xbar, spec.gamma_bar(), spec.kappa, tols));
}

enum class TiltStatus { Stable, Unstable, Inconclusive };

inline const char* to_string(TiltStatus s) {
  switch (s) {
    case TiltStatus::Stable: return "Stable";
    case TiltStatus::Unstable: return "Unstable";
    case TiltStatus::Inconclusive: return "Inconclusive";
  }
  return "";
}

template <typename Scalar>
struct TiltVerdict {
  TiltStatus status = TiltStatus::Inconclusive;
  Index kernel_dim = 0, hull_dim = 0, intersection_dim = 0;
  bool exact = true;
  Scalar separation = Scalar(0);  // smallest singular value of [K, -L]
  Scalar best_margin = -std::numeric_limits<Scalar>::infinity();
  std::optional<Vector<Scalar>> witness;
  Scalar kernel_residual = Scalar(0), hull_residual = Scalar(0), constraint_violation = Scalar(0);
  std::string note;
};

struct TiltOptions {
  std::uint64_t seed = 0;
  int multistarts = 64;
  int ascent_steps = 500;
  int rotation_samples = 0;
  Tolerances tols;
};

template <typename Scalar>
Matrix<Scalar> hessian_kernel(const Matrix<Scalar>& hess, const Tolerances& tols) {
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(sym_part(hess));
  if (es.info() != Eigen::Success) throw NumericError("hessian_kernel: eigensolver failed");
  const Vector<Scalar>& ev = es.eigenvalues();
  const Scalar top = ev.size() ? ev.cwiseAbs().maxCoeff() : Scalar(0);
  if (ev.size() && ev(0) < -Scalar(tols.psd) * std::max<Scalar>(Scalar(1), top))
    throw PreconditionError("Hessian is not positive semidefinite");
  const Scalar cut = std::max<Scalar>(Scalar(tols.kernel_rel) * top, Scalar(tols.kernel_floor));
  Index k = 0;
  while (k < ev.size() && ev(k) <= cut) ++k;
  return es.eigenvectors().leftCols(k);
}

// Decides whether the kernel of a PSD Hessian meets a set given by a linear
// hull and a concave, positively homogeneous margin.
template <typename Scalar>
TiltVerdict<Scalar> generic_kernel_test(const Matrix<Scalar>& hess, const Matrix<Scalar>& hull,
                                        const std::function<Scalar(const Vector<Scalar>&)>& margin, bool exact,
                                        const TiltOptions& opt = {}) {
  const auto& tols = opt.tols;
  if (hess.rows() != hess.cols() || hull.rows() != hess.rows()) throw DimensionError("generic_kernel_test: shape mismatch");
  TiltVerdict<Scalar> out;
  out.exact = exact;
  const Matrix<Scalar> K = hessian_kernel(hess, tols);
  const Index dim = hess.rows(), k = K.cols(), h = hull.cols();
  out.kernel_dim = k;
  out.hull_dim = h;
  if (k == 0 || h == 0) {
    out.status = TiltStatus::Stable;
    out.separation = Scalar(1);
    out.note = k == 0 ? "Hessian is nonsingular" : "Upsilon is {0}";
    return out;
  }

  Matrix<Scalar> stacked(dim, k + h);
  stacked << K, -hull;
  Eigen::JacobiSVD<Matrix<Scalar>> svd(stacked, Eigen::ComputeFullV);
  const Vector<Scalar> sv = svd.singularValues();
  const Index full = sv.size();
  Index rank = 0;
  while (rank < full && sv(rank) > Scalar(tols.intersect)) ++rank;
  out.separation = (k + h > full) ? Scalar(0) : sv(full - 1);
  const Index nulls = k + h - rank;
  if (nulls == 0) {
    out.status = TiltStatus::Stable;
    out.note = "kernel meets the hull of Upsilon only at zero";
    return out;
  }
  const Matrix<Scalar> raw = K * svd.matrixV().block(0, rank, k, nulls);
  Eigen::JacobiSVD<Matrix<Scalar>> nsvd(raw, Eigen::ComputeThinU);
  Index d = 0;
  while (d < nsvd.singularValues().size() && nsvd.singularValues()(d) > Scalar(tols.intersect)) ++d;
  const Matrix<Scalar> N = nsvd.matrixU().leftCols(d);
  out.intersection_dim = d;
  if (d == 0) {
    out.status = TiltStatus::Stable;
    out.note = "kernel meets the hull of Upsilon only at zero";
    return out;
  }

  auto finish = [&](const Vector<Scalar>& w) {
    const Vector<Scalar> u = w / w.norm();
    out.status = TiltStatus::Unstable;
    out.witness = u;
    out.kernel_residual = (hess * u).norm();
    out.hull_residual = (u - hull * (hull.transpose() * u)).norm();
    out.constraint_violation = exact ? Scalar(0) : std::max<Scalar>(Scalar(0), -margin(u));
    return out;
  };
  if (exact) {
    out.note = "Upsilon is a subspace";
    return finish(N.col(0));
  }

  const Scalar mtol = Scalar(tols.margin);
  auto f = [&](const Vector<Scalar>& c) { return margin(N * c / c.norm()); };
  Vector<Scalar> best;
  auto consider = [&](const Vector<Scalar>& c, Scalar val) {
    if (val > out.best_margin) out.best_margin = val, best = c;
  };
  for (Index i = 0; i < d; ++i)
    for (Scalar sign : {Scalar(1), Scalar(-1)}) {
      const Vector<Scalar> c = sign * Vector<Scalar>::Unit(d, i);
      consider(c, f(c));
    }
  if (d == 1) {
    if (out.best_margin >= -mtol) {
      out.note = "one-dimensional intersection, feasible ray";
      return finish(N * best);
    }
    out.status = TiltStatus::Stable;
    out.note = "one-dimensional intersection, both rays violate the constraint";
    return out;
  }
  for (int s = 0; s < opt.multistarts && out.best_margin < -mtol; ++s) {
    std::mt19937_64 rng(opt.seed * 1000003ULL + static_cast<std::uint64_t>(s));
    Vector<Scalar> c = random_gaussian<Scalar>(d, 1, rng);
    c.normalize();
    Scalar val = f(c), step = Scalar(0.5);
    for (int it = 0; it < opt.ascent_steps && val < -mtol && step > Scalar(1e-12); ++it) {
      Vector<Scalar> trial = c + step * Vector<Scalar>(random_gaussian<Scalar>(d, 1, rng));
      trial.normalize();
      const Scalar tv = f(trial);
      if (tv > val) {
        c = trial, val = tv;
        step = std::min<Scalar>(Scalar(1), step * Scalar(1.5));
      } else {
        step *= Scalar(0.8);
      }
    }
    consider(c, val);
  }
  if (out.best_margin >= -mtol) {
    out.note = "feasible direction found by search";
    return finish(N * best);
  }
  out.status = TiltStatus::Inconclusive;
  out.note = "no feasible direction found in the kernel intersection";
  return out;
}

template <typename Scalar>
TiltVerdict<Scalar> tilt_check_upsilon(const Matrix<Scalar>& hess, const UpsilonSpec<Scalar>& ups,
                                       const TiltOptions& opt) {
  const std::function<Scalar(const Vector<Scalar>&)> margin = [&ups](const Vector<Scalar>& v) {
    return ups.margin_vec(v);
  };
  return generic_kernel_test<Scalar>(hess, ups.hull, margin, ups.exact, opt);
}

template <typename Scalar>
TiltVerdict<Scalar> tilt_check(const ProblemSpec<Scalar>& spec, const TiltOptions& opt = {}) {
  const auto ups = build_upsilon(spec, opt.tols);
  const Matrix<Scalar> hess = spec.theta_hessian();
  auto verdict = tilt_check_upsilon(hess, ups, opt);
  if (opt.rotation_samples <= 0) return verdict;
  std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
  for (int k = 0; k < opt.rotation_samples; ++k) {
    const auto rotated = build_upsilon_from_cert(random_pair_rotation(ups.cert, rng, opt.tols));
    const auto other = tilt_check_upsilon(hess, rotated, opt);
    if (other.status != verdict.status) {
      verdict.status = TiltStatus::Inconclusive;
      verdict.note = "verdict changed under rotation sample " + std::to_string(k);
      verdict.witness.reset();
      return verdict;
    }
  }
  return verdict;
}

}  // namespace kyfan
