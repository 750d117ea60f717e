#pragma once

#include "kyfan/tilt.hpp"

#include <ostream>

namespace kyfan {

struct QuotientConfig {
  std::vector<double> taus;  // decreasing; empty selects 1e-1 .. 1e-5 in nine log steps
  int samples = 128;
  double ball_factor = 2.0;  // search radius around w, in units of tau
  int descent_iters = 800;   // gradient-sampling iterations at each tau
  std::uint64_t seed = 0;

  std::vector<double> grid() const {
    if (!taus.empty()) return taus;
    std::vector<double> g;
    for (int k = 0; k < 9; ++k) g.push_back(std::pow(10.0, -1.0 - 0.5 * k));
    return g;
  }
};

template <typename Scalar>
struct QuotientResult {
  ExtendedReal<Scalar> estimate;
  std::vector<std::pair<Scalar, Scalar>> per_tau;  // (tau, minimised quotient)
  bool diverging = false;
};

namespace detail {

// Minimum-norm point of the convex hull of the columns of g.
template <typename Scalar>
Vector<Scalar> min_norm_hull(const Matrix<Scalar>& g) {
  const Index k = g.cols();
  const Matrix<Scalar> gram = g.transpose() * g;
  const Scalar lip = std::max<Scalar>(gram.diagonal().sum(), Scalar(1e-300));
  Vector<Scalar> lam = Vector<Scalar>::Constant(k, Scalar(1) / Scalar(k)), y = lam;
  Scalar t = 1;
  for (int it = 0; it < 400; ++it) {
    Vector<Scalar> z = y - (gram * y) / lip;
    // projection onto the simplex
    Vector<Scalar> srt = z;
    std::sort(srt.data(), srt.data() + k, std::greater<>());
    Scalar acc = 0, theta = 0;
    for (Index i = 0; i < k; ++i) {
      acc += srt(i);
      const Scalar th = (acc - Scalar(1)) / Scalar(i + 1);
      if (srt(i) - th > Scalar(0)) theta = th;
    }
    const Vector<Scalar> next = (z.array() - theta).max(Scalar(0)).matrix();
    const Scalar tn = (Scalar(1) + std::sqrt(Scalar(1) + Scalar(4) * t * t)) / Scalar(2);
    y = next + ((t - Scalar(1)) / tn) * (next - lam);
    lam = next;
    t = tn;
  }
  return g * lam;
}

}  // namespace detail

// Brute-force second subderivative: minimise the second-order difference
// quotient over a ball of radius ball_factor * tau around w, then
// extrapolate the two smallest tau to zero.  The inner minimisation is a
// gradient-sampling descent; `subgrad` returns any subgradient of f, and
// central differences are used when it is empty.
template <typename Scalar>
QuotientResult<Scalar> d2_quotient_oracle(const std::function<Scalar(const Matrix<Scalar>&)>& f,
                                          const Matrix<Scalar>& x, const Matrix<Scalar>& v,
                                          const Matrix<Scalar>& w, const QuotientConfig& cfg = {},
                                          std::function<Matrix<Scalar>(const Matrix<Scalar>&)> subgrad = {}) {
  if (v.rows() != x.rows() || v.cols() != x.cols() || w.rows() != x.rows() || w.cols() != x.cols())
    throw DimensionError("d2_quotient_oracle: shape mismatch");
  const auto taus = cfg.grid();
  if (taus.size() < 2) throw PreconditionError("d2_quotient_oracle: need at least two step sizes");
  const Index n = x.rows(), m = x.cols(), dim = n * m;
  const Scalar fx = f(x);
  if (!subgrad) {
    subgrad = [&f](const Matrix<Scalar>& y) {
      Matrix<Scalar> g(y.rows(), y.cols());
      const Scalar h = Scalar(1e-7) * std::max<Scalar>(Scalar(1), y.norm());
      for (Index i = 0; i < y.size(); ++i) {
        Matrix<Scalar> a = y, b = y;
        a.data()[i] += h;
        b.data()[i] -= h;
        g.data()[i] = (f(a) - f(b)) / (Scalar(2) * h);
      }
      return g;
    };
  }

  QuotientResult<Scalar> out;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif;
  auto in_ball = [&](Scalar radius) {
    Matrix<Scalar> u = random_gaussian<Scalar>(n, m, rng);
    return Matrix<Scalar>(u * (radius * Scalar(std::pow(unif(rng), 1.0 / double(dim))) / u.norm()));
  };
  for (double tau_d : taus) {
    const Scalar tau = Scalar(tau_d);
    const Scalar rho = Scalar(cfg.ball_factor) * tau;
    auto q = [&](const Matrix<Scalar>& wp) {
      return (f(x + tau * wp) - fx - tau * v.cwiseProduct(wp).sum()) / (tau * tau / Scalar(2));
    };
    auto grad = [&](const Matrix<Scalar>& wp) {
      return Matrix<Scalar>((subgrad(x + tau * wp) - v) * (Scalar(2) / tau));
    };
    auto clamp = [&](const Matrix<Scalar>& wp) {
      const Scalar d = (wp - w).norm();
      return d > rho ? Matrix<Scalar>(w + (rho / d) * (wp - w)) : wp;
    };

    Matrix<Scalar> cur = w;
    Scalar best = q(w);
    for (int s = 0; s < cfg.samples; ++s) {
      const Matrix<Scalar> cand = w + in_ball(rho);
      const Scalar val = q(cand);
      if (val < best) best = val, cur = cand;
    }

    Scalar eps = rho / Scalar(4);
    const Index bundle = std::min<Index>(dim + 1, 64);
    for (int it = 0; it < cfg.descent_iters && eps > rho * Scalar(1e-9); ++it) {
      Matrix<Scalar> g(dim, bundle + 1);
      g.col(0) = vec(grad(cur));
      for (Index k = 1; k <= bundle; ++k) g.col(k) = vec(grad(clamp(cur + in_ball(eps))));
      const Vector<Scalar> dir = detail::min_norm_hull(g);
      const Scalar gn = dir.norm();
      if (gn <= Scalar(1e-10)) {
        eps /= Scalar(10);
        continue;
      }
      const Matrix<Scalar> step_dir = -unvec(dir, n, m) / gn;
      Scalar t = rho;
      bool moved = false;
      for (int ls = 0; ls < 50 && t > eps * Scalar(1e-3); ++ls, t /= Scalar(2)) {
        const Matrix<Scalar> cand = clamp(cur + t * step_dir);
        const Scalar val = q(cand);
        if (val < best - Scalar(1e-6) * t * gn) {
          best = val, cur = cand, moved = true;
          break;
        }
      }
      if (!moved) eps /= Scalar(2);
    }
    out.per_tau.emplace_back(tau, best);
  }

  const auto& [t1, v1] = out.per_tau[out.per_tau.size() - 2];
  const auto& [t2, v2] = out.per_tau.back();
  const bool growing = v2 > v1;
  out.diverging = growing && t2 * v2 / Scalar(2) > Scalar(1e-4) * (Scalar(1) + w.norm());
  if (out.diverging) {
    out.estimate = ExtendedReal<Scalar>::infinity();
    return out;
  }
  out.estimate = ExtendedReal<Scalar>::of((t1 * v2 - t2 * v1) / (t1 - t2));
  return out;
}

// A subgradient of Psi_kappa: U_kappa V_kappa^T from any SVD.
template <typename Scalar>
Matrix<Scalar> psi_subgradient(const Matrix<Scalar>& y, Index kappa) {
  Eigen::JacobiSVD<Matrix<Scalar>> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU().leftCols(kappa) * svd.matrixV().leftCols(kappa).transpose();
}

// prox of t * Psi_kappa: shrink the singular values.
template <typename Scalar>
Matrix<Scalar> kyfan_matrix_prox(const Matrix<Scalar>& y, Index kappa, Scalar t) {
  if (!(t > Scalar(0))) throw PreconditionError("kyfan_matrix_prox: step must be positive");
  if (kappa < 1 || kappa > std::min(y.rows(), y.cols())) throw DimensionError("kyfan_matrix_prox: kappa out of range");
  Eigen::JacobiSVD<Matrix<Scalar>> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector<Scalar> s = kyfan_vector_prox<Scalar>(svd.singularValues(), kappa, t);
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

struct SolveConfig {
  int max_iters = 20000;
  double stop_tol = 1e-10;
};

template <typename Scalar>
struct TiltedSolution {
  Matrix<Scalar> x;
  int iterations = 0;
  Scalar residual = Scalar(0);
  bool converged = false;
};

// Proximal gradient on nu*theta(X) - <V, X> + Psi(X), kept inside the ball
// ||X - xbar|| <= delta.
template <typename Scalar>
TiltedSolution<Scalar> solve_tilted(const ProblemSpec<Scalar>& spec, const Matrix<Scalar>& tilt, Scalar delta,
                                    const SolveConfig& cfg = {}) {
  if (tilt.rows() != spec.n() || tilt.cols() != spec.m()) throw DimensionError("solve_tilted: tilt shape mismatch");
  if (!(delta > Scalar(0))) throw PreconditionError("solve_tilted: delta must be positive");
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(spec.theta_hessian(), Eigen::EigenvaluesOnly);
  const Scalar lip = spec.nu * (es.eigenvalues().size() ? es.eigenvalues().maxCoeff() : Scalar(0));
  const Scalar step = lip > Scalar(1e-12) ? Scalar(1) / lip : Scalar(1);
  TiltedSolution<Scalar> out;
  out.x = spec.xbar;
  for (int it = 0; it < cfg.max_iters; ++it) {
    const Matrix<Scalar> grad = spec.nu * spec.theta_gradient(out.x) - tilt;
    Matrix<Scalar> next = kyfan_matrix_prox<Scalar>(out.x - step * grad, spec.kappa, step);
    const Scalar dist = (next - spec.xbar).norm();
    if (dist > delta) next = spec.xbar + (delta / dist) * (next - spec.xbar);
    out.residual = (next - out.x).norm() / step;
    out.x = next;
    out.iterations = it + 1;
    if (out.residual <= Scalar(cfg.stop_tol)) {
      out.converged = true;
      break;
    }
  }
  return out;
}

struct ProbeConfig {
  double delta = 0.2;
  std::vector<double> magnitudes{1e-3, 3e-3};
  int random_directions = 8;
  int kernel_directions = 4;
  double threshold = 20.0;
  std::uint64_t seed = 0;
  SolveConfig solve;
};

struct ProbeRow {
  int tilt_id = 0;
  double v_norm = 0, displacement = 0, residual = 0;
};

struct ProbeReport {
  TiltStatus consistent_with = TiltStatus::Stable;
  double modulus = 0;
  std::vector<ProbeRow> rows;

  void write_csv(std::ostream& os) const {
    os << "tilt_id,V_norm,solution_displacement,residual\n";
    for (const auto& r : rows) os << r.tilt_id << ',' << r.v_norm << ',' << r.displacement << ',' << r.residual << '\n';
  }
};

// Empirical Lipschitz modulus of the localised tilted argmin map.
template <typename Scalar>
ProbeReport tilt_probe(const ProblemSpec<Scalar>& spec, const ProbeConfig& cfg = {}) {
  spec.validate();
  const Index n = spec.n(), m = spec.m();
  std::vector<Matrix<Scalar>> dirs;
  std::mt19937_64 rng(cfg.seed);
  for (int k = 0; k < cfg.random_directions; ++k) {
    Matrix<Scalar> d = random_gaussian<Scalar>(n, m, rng);
    dirs.push_back(d / d.norm());
  }
  const Matrix<Scalar> kernel = hessian_kernel<Scalar>(spec.theta_hessian(), Tolerances{});
  for (Index k = 0; k < std::min<Index>(kernel.cols(), cfg.kernel_directions); ++k) {
    const Matrix<Scalar> d = unvec(kernel.col(k), n, m);
    dirs.push_back(d);
    dirs.push_back(-d);
  }
  const Scalar delta = Scalar(cfg.delta);
  const auto base = solve_tilted<Scalar>(spec, Matrix<Scalar>::Zero(n, m), delta, cfg.solve);
  ProbeReport out;
  int id = 0;
  for (const auto& d : dirs)
    for (double mag : cfg.magnitudes) {
      const auto sol = solve_tilted<Scalar>(spec, Scalar(mag) * d, delta, cfg.solve);
      ProbeRow row{id++, mag, double((sol.x - base.x).norm()), double(sol.residual)};
      out.modulus = std::max(out.modulus, row.displacement / mag);
      out.rows.push_back(row);
    }
  out.consistent_with = out.modulus > cfg.threshold ? TiltStatus::Unstable : TiltStatus::Stable;
  return out;
}

}  // namespace kyfan
