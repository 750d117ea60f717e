#pragma once

#include "kyfan/prox.hpp"
#include "kyfan/spectral.hpp"

#include <optional>

namespace kyfan {

template <typename Derived>
typename Derived::Scalar psi_value(const Eigen::MatrixBase<Derived>& x, Index kappa) {
  using Scalar = typename Derived::Scalar;
  const Index k = std::min(x.rows(), x.cols());
  if (kappa < 1 || kappa > k) throw DimensionError("psi_value: kappa out of range");
  if (!x.allFinite()) throw NumericError("psi_value: non-finite input");
  Eigen::JacobiSVD<Matrix<Scalar>> svd(x);
  return svd.singularValues().head(kappa).sum();
}

// One (U, V) that diagonalises X and Gamma with both spectra nonincreasing.
template <typename Scalar>
struct JointSvd {
  SvdPair<Scalar> pair;  // pair.sigma holds sigma(X)
  Vector<Scalar> sigma_gamma;
};

template <typename Scalar>
std::optional<JointSvd<Scalar>> simultaneous_svd(const Matrix<Scalar>& x, const Matrix<Scalar>& gamma,
                                                 Scalar tol, const Tolerances& tols = {}) {
  if (x.rows() != gamma.rows() || x.cols() != gamma.cols())
    throw DimensionError("simultaneous_svd: shape mismatch");
  auto pair = svd_ordered(x, tols.recon);
  const Index n = pair.n(), m = pair.m();
  if (n == 0) return JointSvd<Scalar>{pair, Vector<Scalar>(0)};
  const auto g = group_singular(pair, 1, tols);
  const Scalar scaled = tol * std::max<Scalar>(Scalar(1), gamma.norm());

  Matrix<Scalar> c = pair.coords(gamma);
  for (Index l = 0; l < g.s(); ++l) {
    const Range a = g.groups[l];
    const Matrix<Scalar> blk = c.block(a.begin, a.begin, a.size, a.size);
    if ((blk - blk.transpose()).norm() > scaled) return std::nullopt;
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(sym_part(blk));
    const Matrix<Scalar> q = es.eigenvectors().rowwise().reverse();
    pair.U.middleCols(a.begin, a.size) = (pair.U.middleCols(a.begin, a.size) * q).eval();
    pair.V.middleCols(a.begin, a.size) = (pair.V.middleCols(a.begin, a.size) * q).eval();
  }
  if (!g.b.empty()) {
    const Range b = g.b;
    const Matrix<Scalar> blk = c.block(b.begin, b.begin, b.size, m - b.begin);
    Eigen::JacobiSVD<Matrix<Scalar>> svd(blk, Eigen::ComputeFullU | Eigen::ComputeFullV);
    pair.U.middleCols(b.begin, b.size) = (pair.U.middleCols(b.begin, b.size) * svd.matrixU()).eval();
    pair.V.rightCols(m - b.begin) = (pair.V.rightCols(m - b.begin) * svd.matrixV()).eval();
  }

  c = pair.coords(gamma);
  Vector<Scalar> d = c.diagonal();
  Matrix<Scalar> off = c;
  off.diagonal().setZero();
  if (off.norm() > scaled) return std::nullopt;
  for (Index i = 0; i < n; ++i) {
    if (d(i) < -scaled) return std::nullopt;
    if (i > 0 && d(i) > d(i - 1) + scaled) return std::nullopt;
  }
  d = d.cwiseMax(Scalar(0));
  return JointSvd<Scalar>{pair, d};
}

enum class MembershipCase { InteriorGroup, ZeroGroup };

inline const char* to_string(MembershipCase c) {
  return c == MembershipCase::InteriorGroup ? "InteriorGroup" : "ZeroGroup";
}

// Everything later stages need about a pair (X, Gamma) with Gamma in the
// subdifferential.  Ranges index the rows of the simultaneous pair.
template <typename Scalar>
struct SubgradCertificate {
  MembershipCase kase = MembershipCase::InteriorGroup;
  Index kappa = 0;
  Matrix<Scalar> x, gamma;
  SvdPair<Scalar> pair;
  Vector<Scalar> sigma_gamma;
  SingularGrouping<Scalar> grouping;

  Range alpha, beta, gamma_set;
  Range beta1, beta_plus, beta0;
  std::vector<Range> beta_j;  // distinct nonzero values of sigma(Gamma) on beta
  std::vector<Scalar> zeta;

  Scalar nuclear = Scalar(0);
  bool tight = false;  // zero-group case with ||Gamma||_* = kappa
  std::vector<std::string> warnings;

  Index kappa0() const { return alpha.size; }
  Index kappa1() const { return beta.end(); }
  Index n() const { return pair.n(); }
  Index m() const { return pair.m(); }
  Range c() const { return Range{n(), m() - n()}; }
};

template <typename Scalar>
struct SubgradResult {
  bool member = false;
  std::string failure;
  std::optional<SubgradCertificate<Scalar>> certificate;
};

namespace detail {

template <typename Scalar>
void classify_beta(SubgradCertificate<Scalar>& cert, Scalar class_tol) {
  const Range beta = cert.beta;
  const auto& sg = cert.sigma_gamma;
  Index i = beta.begin;
  while (i < beta.end() && sg(i) >= Scalar(1) - class_tol) ++i;
  cert.beta1 = span(beta.begin, i);
  const Index plus_begin = i;
  while (i < beta.end() && sg(i) > class_tol) ++i;
  cert.beta_plus = span(plus_begin, i);
  cert.beta0 = span(i, beta.end());

  Index start = beta.begin;
  const Index nonzero_end = cert.beta0.begin;
  for (Index k = beta.begin + 1; k <= nonzero_end; ++k) {
    if (k == nonzero_end || sg(k - 1) - sg(k) > class_tol) {
      if (k > start) {
        cert.beta_j.push_back(span(start, k));
        cert.zeta.push_back(std::min<Scalar>(Scalar(1), sg.segment(start, k - start).mean()));
      }
      start = k;
    }
  }
  for (Index k = beta.begin; k < beta.end(); ++k) {
    const Scalar v = sg(k);
    const bool near0 = v > class_tol && v < Scalar(10) * class_tol;
    const bool near1 = v < Scalar(1) - class_tol && v > Scalar(1) - Scalar(10) * class_tol;
    if (near0 || near1)
      cert.warnings.push_back("sigma(Gamma) at index " + std::to_string(k) +
                              " is within ten classification tolerances of a boundary");
  }
}

}  // namespace detail

template <typename Scalar>
SubgradResult<Scalar> subdiff_membership(const Matrix<Scalar>& x, const Matrix<Scalar>& gamma,
                                         Index kappa, const Tolerances& tols = {}) {
  if (x.rows() != gamma.rows() || x.cols() != gamma.cols())
    throw DimensionError("subdiff_membership: shape mismatch");
  if (x.rows() > x.cols()) throw DimensionError("subdiff_membership: expected rows <= cols");
  if (kappa < 1 || kappa > x.rows()) throw DimensionError("subdiff_membership: kappa out of range");
  SubgradResult<Scalar> out;
  const Scalar tol = Scalar(tols.membership);
  auto joint = simultaneous_svd(x, gamma, tol, tols);
  if (!joint) {
    out.failure = "no simultaneous ordered SVD";
    return out;
  }

  SubgradCertificate<Scalar> cert;
  cert.kappa = kappa;
  cert.x = x;
  cert.gamma = gamma;
  cert.pair = joint->pair;
  cert.sigma_gamma = joint->sigma_gamma;
  cert.grouping = group_singular(cert.pair, kappa, tols);
  const auto& g = cert.grouping;
  const Index n = x.rows();
  cert.kase = g.zero_group_case() ? MembershipCase::ZeroGroup : MembershipCase::InteriorGroup;
  cert.alpha = Range{0, g.kappa0()};
  cert.beta = g.group(g.r);
  cert.gamma_set = span(g.kappa1(), n);
  cert.nuclear = cert.sigma_gamma.sum();

  const auto& sg = cert.sigma_gamma;
  const Scalar sum_tol = Scalar(tols.sum_rel) * Scalar(kappa);
  const Scalar budget = Scalar(kappa - cert.alpha.size);
  for (Index i = 0; i < cert.alpha.size; ++i)
    if (std::abs(sg(i) - Scalar(1)) > tol) out.failure = "sigma(Gamma) differs from 1 on alpha";
  for (Index i = cert.beta.begin; i < cert.beta.end() && out.failure.empty(); ++i)
    if (sg(i) > Scalar(1) + tol) out.failure = "sigma(Gamma) exceeds 1 on beta";
  for (Index i = cert.gamma_set.begin; i < cert.gamma_set.end(); ++i)
    if (sg(i) > tol) out.failure = "sigma(Gamma) is nonzero on gamma";
  const Scalar beta_sum = sg.segment(cert.beta.begin, cert.beta.size).sum();
  if (out.failure.empty()) {
    if (cert.kase == MembershipCase::InteriorGroup && std::abs(beta_sum - budget) > sum_tol)
      out.failure = "sum of sigma(Gamma) over beta differs from kappa - kappa0";
    if (cert.kase == MembershipCase::ZeroGroup && beta_sum > budget + sum_tol)
      out.failure = "sum of sigma(Gamma) over beta exceeds kappa - kappa0";
  }
  if (!out.failure.empty()) return out;

  cert.tight = cert.kase == MembershipCase::ZeroGroup && std::abs(beta_sum - budget) <= sum_tol;
  detail::classify_beta(cert, Scalar(tols.sigma_class));
  out.member = true;
  out.certificate = std::move(cert);
  return out;
}

// Rotates the pair inside every block where both spectra are constant, so the
// result is again a simultaneous ordered SVD of (X, Gamma).
template <typename Scalar, typename Rng>
SubgradCertificate<Scalar> random_pair_rotation(const SubgradCertificate<Scalar>& cert, Rng& rng,
                                                const Tolerances& tols = {}) {
  SubgradCertificate<Scalar> out = cert;
  const auto& g = cert.grouping;
  const auto& sg = cert.sigma_gamma;
  const Scalar ctol = Scalar(tols.sigma_class);
  const Index n = cert.n(), m = cert.m();
  auto owner = [&](Index i) {
    for (Index l = 0; l < g.s(); ++l)
      if (g.groups[l].contains(i)) return l;
    return g.s();
  };
  auto& U = out.pair.U;
  auto& V = out.pair.V;
  Index start = 0;
  for (Index i = 1; i <= n; ++i) {
    const bool split = i == n || owner(i) != owner(start) || std::abs(sg(i) - sg(i - 1)) > ctol;
    if (!split) continue;
    const Range blk = span(start, i);
    start = i;
    if (owner(blk.begin) == g.s() && sg(blk.begin) <= ctol) continue;
    const Matrix<Scalar> q = random_orthogonal<Scalar>(blk.size, rng);
    U.middleCols(blk.begin, blk.size) = (U.middleCols(blk.begin, blk.size) * q).eval();
    V.middleCols(blk.begin, blk.size) = (V.middleCols(blk.begin, blk.size) * q).eval();
  }
  Index z = n;
  while (z > g.b.begin && sg(z - 1) <= ctol) --z;
  if (z < n) {
    const Matrix<Scalar> q1 = random_orthogonal<Scalar>(n - z, rng);
    U.middleCols(z, n - z) = (U.middleCols(z, n - z) * q1).eval();
  }
  if (m - z > 0) {
    const Matrix<Scalar> q2 = random_orthogonal<Scalar>(m - z, rng);
    V.rightCols(m - z) = (V.rightCols(m - z) * q2).eval();
  }
  return out;
}

template <typename Scalar>
struct MultiplierElement {
  Matrix<Scalar> M;
  Vector<Scalar> xi;
};

// The vector xi describing the multiplier built from the pair itself.
template <typename Scalar>
Vector<Scalar> canonical_xi(const SubgradCertificate<Scalar>& cert) {
  const Range beta = cert.beta;
  const Vector<Scalar> sb = cert.sigma_gamma.segment(beta.begin, beta.size);
  if (cert.kase == MembershipCase::InteriorGroup) return sb;
  const Index nb = beta.size, nc = cert.c().size;
  const Scalar slack = std::max<Scalar>(Scalar(0), Scalar(cert.kappa - cert.kappa0()) - sb.sum());
  const Scalar room = Scalar(nc) + Scalar(2) * (Vector<Scalar>::Ones(nb) - sb).sum();
  const Scalar theta = room > Scalar(0) ? std::min<Scalar>(Scalar(1), slack / room) : Scalar(0);
  Vector<Scalar> xi(2 * nb + nc);
  const Vector<Scalar> xi3 = theta * (Vector<Scalar>::Ones(nb) - sb);
  xi << sb + xi3, Vector<Scalar>::Constant(nc, theta), xi3;
  return xi;
}

template <typename Scalar>
MultiplierElement<Scalar> multiplier_from_xi(const SubgradCertificate<Scalar>& cert,
                                             const Vector<Scalar>& xi, const Tolerances& tols = {}) {
  const auto& g = cert.grouping;
  const auto frame = build_frame(cert.pair, g);
  const bool zero = cert.kase == MembershipCase::ZeroGroup;
  const Range blk = zero ? frame.p0() : g.group(g.r);
  if (xi.size() != blk.size) throw DimensionError("multiplier_from_xi: xi has the wrong length");
  const Scalar tol = Scalar(tols.membership);
  if (xi.size() && (xi.minCoeff() < -tol || xi.maxCoeff() > Scalar(1) + tol))
    throw PreconditionError("multiplier_from_xi: xi outside [0, 1]");
  if (std::abs(xi.sum() - Scalar(cert.kappa - cert.kappa0())) > Scalar(tols.sum_rel) * Scalar(cert.kappa))
    throw PreconditionError("multiplier_from_xi: xi does not sum to kappa - kappa0");

  const Index total = frame.P.rows();
  Matrix<Scalar> M = Matrix<Scalar>::Zero(total, total);
  const auto lead = frame.P.leftCols(cert.kappa0());
  M += lead * lead.transpose();
  const auto pb = frame.block(blk);
  M += pb * xi.asDiagonal() * pb.transpose();

  const Scalar scale = std::max<Scalar>(Scalar(1), cert.gamma.norm());
  if ((bmap_adjoint(M, cert.n()) - cert.gamma).norm() > tol * scale)
    throw PreconditionError("multiplier_from_xi: adjoint image differs from Gamma");
  return {M, xi};
}

template <typename Scalar>
bool multiplier_membership(const Matrix<Scalar>& x, const Matrix<Scalar>& gamma, const Matrix<Scalar>& M,
                           Index kappa, Scalar tol, const Tolerances& tols = {}) {
  const Index n = x.rows(), m = x.cols();
  if (M.rows() != n + m || M.cols() != n + m || gamma.rows() != n || gamma.cols() != m)
    throw DimensionError("multiplier_membership: shape mismatch");
  if ((M - M.transpose()).norm() > tol) return false;
  if ((bmap_adjoint(M, n) - gamma).norm() > tol * std::max<Scalar>(Scalar(1), gamma.norm())) return false;

  const auto pair = svd_ordered(x, tols.recon);
  const auto g = group_singular(pair, kappa, tols);
  const auto frame = build_frame(pair, g);
  const Range blk = g.zero_group_case() ? frame.p0() : g.group(g.r);
  const auto lead = frame.P.leftCols(g.kappa0());
  const Matrix<Scalar> rest = sym_part(M) - lead * lead.transpose();
  const auto pb = frame.block(blk);
  const Matrix<Scalar> y = sym_part(Matrix<Scalar>(pb.transpose() * rest * pb));
  if ((rest - pb * y * pb.transpose()).norm() > tol) return false;
  if (y.size() == 0) return kappa == g.kappa0();
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(y, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol || es.eigenvalues().maxCoeff() > Scalar(1) + tol) return false;
  return std::abs(y.trace() - Scalar(kappa - g.kappa0())) <= Scalar(tols.sum_rel) * Scalar(kappa);
}

// Distance from Gamma to the subdifferential of the Ky-Fan norm at X, by
// Dykstra's alternating projections between the dual-norm ball and the
// hyperplane <., X> = Psi(X).
template <typename Scalar>
Scalar subdiff_distance(const Matrix<Scalar>& x, const Matrix<Scalar>& gamma, Index kappa,
                        int iterations = 2000) {
  const Scalar psi = psi_value(x, kappa);
  const Scalar xx = x.squaredNorm();
  auto to_plane = [&](const Matrix<Scalar>& y) -> Matrix<Scalar> {
    if (xx == Scalar(0)) return y;
    return y - ((y.cwiseProduct(x).sum() - psi) / xx) * x;
  };
  auto to_ball = [&](const Matrix<Scalar>& y) -> Matrix<Scalar> {
    Eigen::JacobiSVD<Matrix<Scalar>> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector<Scalar> s = project_kyfan_dual_ball<Scalar>(svd.singularValues(), kappa, Scalar(1));
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  };
  Matrix<Scalar> y = gamma;
  Matrix<Scalar> p = Matrix<Scalar>::Zero(y.rows(), y.cols()), q = p;
  for (int it = 0; it < iterations; ++it) {
    const Matrix<Scalar> a = to_ball(y + p);
    p = y + p - a;
    const Matrix<Scalar> b = to_plane(a + q);
    q = a + q - b;
    y = b;
  }
  return (gamma - to_ball(y)).norm();
}

}  // namespace kyfan
