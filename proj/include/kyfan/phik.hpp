#pragma once

#include "kyfan/spectral.hpp"

#include <optional>

namespace kyfan {

// Sum of the kappa largest eigenvalues of a symmetric matrix.
template <typename Derived>
typename Derived::Scalar phi_value(const Eigen::MatrixBase<Derived>& z, Index kappa) {
  using Scalar = typename Derived::Scalar;
  if (z.rows() != z.cols()) throw DimensionError("phi_value: matrix is not square");
  if (kappa < 1 || kappa > z.rows()) throw DimensionError("phi_value: kappa out of range");
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(sym_part(z), Eigen::EigenvaluesOnly);
  return es.eigenvalues().tail(kappa).sum();
}

template <typename Scalar>
struct PhiSubgradCertificate {
  EigenGrouping<Scalar> eig;
  Index r = 0;            // group containing kappa
  Index l_kappa = 0;      // position of kappa inside group r
  Vector<Scalar> xi;      // eigenvalues of the compressed block, in [0, 1]
  Matrix<Scalar> block;   // Q_r^T (S - sum_{l<r} Q_l Q_l^T) Q_r
};

template <typename Scalar>
struct PhiSubgradResult {
  bool member = false;
  Scalar residual = Scalar(0);
  std::string failure;
  std::optional<PhiSubgradCertificate<Scalar>> certificate;
};

namespace detail {

template <typename Scalar>
Index kappa_group(const EigenGrouping<Scalar>& eig, Index kappa) {
  if (kappa < 1 || kappa > eig.lambda.size()) throw DimensionError("kappa out of range");
  return eig.group_of(kappa - 1);
}

template <typename Scalar>
Matrix<Scalar> leading_projector(const EigenGrouping<Scalar>& eig, Index r) {
  const Index k = eig.groups[r].begin;
  return eig.Q.leftCols(k) * eig.Q.leftCols(k).transpose();
}

// (mu I - Z)^+ with the eigenvalues of group l annihilated exactly.
template <typename Scalar>
Matrix<Scalar> shifted_pinv(const EigenGrouping<Scalar>& eig, Index l, Scalar pinv_tol) {
  const Scalar mu = eig.mu[l];
  Vector<Scalar> w(eig.lambda.size());
  for (Index i = 0; i < w.size(); ++i) {
    const Scalar d = mu - eig.lambda(i);
    w(i) = (eig.groups[l].contains(i) || std::abs(d) <= pinv_tol) ? Scalar(0) : Scalar(1) / d;
  }
  return eig.Q * w.asDiagonal() * eig.Q.transpose();
}

}  // namespace detail

template <typename Scalar>
PhiSubgradResult<Scalar> phi_subdiff_membership(const Matrix<Scalar>& z, const Matrix<Scalar>& s,
                                                Index kappa, Scalar tol,
                                                const Tolerances& tols = {}) {
  if (z.rows() != z.cols() || s.rows() != z.rows() || s.cols() != z.cols())
    throw DimensionError("phi_subdiff_membership: shape mismatch");
  PhiSubgradResult<Scalar> out;
  const auto eig = eigen_grouped(z, tols);
  const Index r = detail::kappa_group(eig, kappa);
  const Index lk = eig.l_of(kappa - 1);

  const Scalar asym = (s - s.transpose()).norm();
  const Matrix<Scalar> rest = sym_part(s) - detail::leading_projector(eig, r);
  const auto qr = eig.basis(r);
  const Matrix<Scalar> y = sym_part(Matrix<Scalar>(qr.transpose() * rest * qr));
  const Scalar off = (rest - qr * y * qr.transpose()).norm();
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(y, Eigen::EigenvaluesOnly);
  const Vector<Scalar> xi = es.eigenvalues().reverse();
  const Scalar below = std::max<Scalar>(Scalar(0), -xi.minCoeff());
  const Scalar above = std::max<Scalar>(Scalar(0), xi.maxCoeff() - Scalar(1));
  const Scalar trace_gap = std::abs(y.trace() - Scalar(lk));

  out.residual = std::max({asym, off, below, above, trace_gap});
  if (asym > tol) out.failure = "not symmetric";
  else if (off > tol) out.failure = "not supported on the leading eigenspaces";
  else if (below > tol || above > tol) out.failure = "block eigenvalues outside [0, 1]";
  else if (trace_gap > tol) out.failure = "block trace differs from l_kappa";
  out.member = out.failure.empty();
  if (out.member) out.certificate = PhiSubgradCertificate<Scalar>{eig, r, lk, xi, y};
  return out;
}

template <typename Scalar>
Scalar phi_dir_deriv(const Matrix<Scalar>& z, const Matrix<Scalar>& h, Index kappa,
                     const Tolerances& tols = {}) {
  if (z.rows() != z.cols() || h.rows() != z.rows() || h.cols() != z.cols())
    throw DimensionError("phi_dir_deriv: shape mismatch");
  const auto eig = eigen_grouped(z, tols);
  const Index r = detail::kappa_group(eig, kappa);
  const Matrix<Scalar> hs = sym_part(h);
  Scalar total = Scalar(0);
  for (Index l = 0; l < r; ++l) total += (eig.basis(l).transpose() * hs * eig.basis(l)).trace();
  const Matrix<Scalar> block = eig.basis(r).transpose() * hs * eig.basis(r);
  return total + phi_value(block, eig.l_of(kappa - 1));
}

template <typename Scalar>
SecondSubderivValue<Scalar> phi_second_subderiv(const Matrix<Scalar>& z, const Matrix<Scalar>& s,
                                                const Matrix<Scalar>& h, Index kappa,
                                                const Tolerances& tols = {}) {
  const auto mem = phi_subdiff_membership(z, s, kappa, Scalar(tols.membership), tols);
  if (!mem.member) throw NotASubgradientError("phi_second_subderiv: " + mem.failure);
  const auto& cert = *mem.certificate;
  const auto& eig = cert.eig;
  const Index r = cert.r;
  const Matrix<Scalar> hs = sym_part(h);
  const Matrix<Scalar> rest = sym_part(s) - detail::leading_projector(eig, r);

  SecondSubderivValue<Scalar> out;
  const Matrix<Scalar> hr = eig.basis(r).transpose() * hs * eig.basis(r);
  const Scalar lhs = phi_value(hr, cert.l_kappa);
  const Scalar rhs = (rest.cwiseProduct(hs)).sum();
  if (std::abs(lhs - rhs) > Scalar(tols.cond_rel) * (Scalar(1) + hs.norm())) {
    out.value = ExtendedReal<Scalar>::infinity();
    out.reason = InfReason::OutsideCriticalCone;
    return out;
  }

  const Scalar znorm = z.norm();
  Scalar total = Scalar(0);
  for (Index l = 0; l <= r; ++l) {
    const Scalar cut = Scalar(tols.pinv_rel) * std::max<Scalar>(Scalar(1), std::abs(eig.mu[l]) + znorm);
    const Matrix<Scalar> w = hs * detail::shifted_pinv(eig, l, cut) * hs;
    const Scalar t = l < r ? Scalar(2) * (eig.basis(l).transpose() * w * eig.basis(l)).trace()
                           : Scalar(2) * rest.cwiseProduct(w).sum();
    out.terms.emplace_back("group " + std::to_string(l), t);
    total += t;
  }
  out.value = ExtendedReal<Scalar>::of(total);
  return out;
}

}  // namespace kyfan
