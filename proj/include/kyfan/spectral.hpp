#pragma once

#include "kyfan/common.hpp"

#include <algorithm>

namespace kyfan {

// X = U [Diag(sigma) 0] V^T with U n x n, V m x m orthogonal, n <= m.
template <typename Scalar>
struct SvdPair {
  Matrix<Scalar> U;
  Matrix<Scalar> V;
  Vector<Scalar> sigma;

  Index n() const { return U.rows(); }
  Index m() const { return V.rows(); }
  auto V1() const { return V.leftCols(n()); }
  auto Vc() const { return V.rightCols(m() - n()); }

  Matrix<Scalar> compose(const Vector<Scalar>& s) const {
    return U * s.asDiagonal() * V1().transpose();
  }
  Matrix<Scalar> reconstruct() const { return compose(sigma); }
  // U^T A V, the coordinates of A in this pair.
  Matrix<Scalar> coords(const Matrix<Scalar>& a) const { return U.transpose() * a * V; }
  Matrix<Scalar> from_coords(const Matrix<Scalar>& c) const { return U * c * V.transpose(); }
};

template <typename Derived>
SvdPair<typename Derived::Scalar> svd_ordered(const Eigen::MatrixBase<Derived>& x_in,
                                              double recon_tol = 1e-10) {
  using Scalar = typename Derived::Scalar;
  const Matrix<Scalar> x = x_in;
  const Index n = x.rows(), m = x.cols();
  if (n > m) throw DimensionError("svd_ordered: expected rows <= cols");
  if (!x.allFinite()) throw NumericError("svd_ordered: non-finite input");

  SvdPair<Scalar> out;
  if (n == 0) {
    out.U.resize(0, 0);
    out.V = Matrix<Scalar>::Identity(m, m);
    out.sigma.resize(0);
    return out;
  }
  Eigen::JacobiSVD<Matrix<Scalar>> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.U = svd.matrixU();
  out.V = svd.matrixV();
  out.sigma = svd.singularValues();

  // The largest-magnitude entry of each left singular vector is made positive.
  for (Index i = 0; i < n; ++i) {
    Index k;
    out.U.col(i).cwiseAbs().maxCoeff(&k);
    if (out.U(k, i) < Scalar(0)) {
      out.U.col(i) = -out.U.col(i);
      out.V.col(i) = -out.V.col(i);
    }
  }

  const Scalar scale = std::max<Scalar>(Scalar(1), x.norm());
  const Scalar tol = Scalar(recon_tol) * scale;
  if (!out.U.allFinite() || !out.V.allFinite() || (out.reconstruct() - x).norm() > tol ||
      (out.U.transpose() * out.U - Matrix<Scalar>::Identity(n, n)).norm() > Scalar(recon_tol) ||
      (out.V.transpose() * out.V - Matrix<Scalar>::Identity(m, m)).norm() > Scalar(recon_tol))
    throw NumericError("svd_ordered: decomposition failed reconstruction checks");
  return out;
}

// Groups of equal positive singular values a_1..a_s, the zero block b and
// the trailing columns c = {n..m-1}.  Group index s stands for b.
template <typename Scalar>
struct SingularGrouping {
  std::vector<Range> groups;
  std::vector<Scalar> nu;
  Range b;
  Index n = 0, m = 0;
  Index kappa = 0;
  Index r = 0;

  Index s() const { return static_cast<Index>(groups.size()); }
  bool zero_group_case() const { return r == s(); }
  Range a() const { return Range{0, b.begin}; }
  Range c() const { return Range{n, m - n}; }
  Range group(Index l) const { return l < s() ? groups[l] : b; }
  Scalar value(Index l) const { return l < s() ? nu[l] : Scalar(0); }
  Index kappa0() const { return group(r).begin; }
  Index kappa1() const { return group(r).end(); }
};

template <typename Scalar>
SingularGrouping<Scalar> group_singular(const Vector<Scalar>& sigma, Index m, Index kappa,
                                        Scalar group_tol) {
  const Index n = sigma.size();
  if (kappa < 1 || kappa > n) throw DimensionError("group_singular: kappa out of range");
  SingularGrouping<Scalar> g;
  g.n = n;
  g.m = m;
  g.kappa = kappa;
  Index rank = 0;
  while (rank < n && sigma(rank) > group_tol) ++rank;
  g.b = Range{rank, n - rank};
  Index start = 0;
  for (Index i = 1; i <= rank; ++i) {
    if (i == rank || sigma(i - 1) - sigma(i) > group_tol) {
      g.groups.push_back(span(start, i));
      g.nu.push_back(sigma.segment(start, i - start).mean());
      start = i;
    }
  }
  g.r = g.s();
  for (Index l = 0; l < g.s(); ++l)
    if (g.groups[l].contains(kappa - 1)) g.r = l;
  return g;
}

template <typename Scalar>
SingularGrouping<Scalar> group_singular(const SvdPair<Scalar>& svd, Index kappa, Scalar group_tol) {
  return group_singular<Scalar>(svd.sigma, svd.m(), kappa, group_tol);
}

template <typename Scalar>
SingularGrouping<Scalar> group_singular(const SvdPair<Scalar>& svd, Index kappa,
                                        const Tolerances& tol = {}) {
  const double top = svd.sigma.size() ? double(svd.sigma(0)) : 0.0;
  return group_singular<Scalar>(svd.sigma, svd.m(), kappa, Scalar(tol.group_tol(top)));
}

// B(X) = [[0, X], [X^T, 0]].
template <typename Derived>
Matrix<typename Derived::Scalar> bmap(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Index n = x.rows(), m = x.cols();
  Matrix<Scalar> b = Matrix<Scalar>::Zero(n + m, n + m);
  b.topRightCorner(n, m) = x;
  b.bottomLeftCorner(m, n) = x.transpose();
  return b;
}

// Adjoint of B with respect to the trace inner products: 2 * M_12.
template <typename Derived>
Matrix<typename Derived::Scalar> bmap_adjoint(const Eigen::MatrixBase<Derived>& mat, Index n) {
  const Index total = mat.rows();
  if (mat.cols() != total || n < 0 || n > total) throw DimensionError("bmap_adjoint: bad shape");
  return typename Derived::Scalar(2) * mat.topRightCorner(n, total - n);
}

// Orthogonal frame P with P^T B(X) P = Diag(sigma, 0_c, -reverse(sigma)).
// Column layout: [a | b | c | b' | reversed a].
template <typename Scalar>
struct EmbeddingFrame {
  Matrix<Scalar> P;
  Vector<Scalar> eigenvalues;
  Range a, b, c, b2, a_rev;

  Range p0() const { return Range{b.begin, b.size + c.size + b2.size}; }
  auto block(Range r) const { return P.middleCols(r.begin, r.size); }
  auto P0() const { return block(p0()); }
};

template <typename Scalar>
EmbeddingFrame<Scalar> build_frame(const SvdPair<Scalar>& svd, const SingularGrouping<Scalar>& g) {
  const Index n = svd.n(), m = svd.m();
  const Index na = g.b.begin, nb = g.b.size, nc = m - n;
  const Scalar h = Scalar(1) / std::sqrt(Scalar(2));
  EmbeddingFrame<Scalar> f;
  f.a = Range{0, na};
  f.b = Range{na, nb};
  f.c = Range{n, nc};
  f.b2 = Range{n + nc, nb};
  f.a_rev = Range{n + nc + nb, na};
  f.P = Matrix<Scalar>::Zero(n + m, n + m);

  f.P.block(0, 0, n, na) = h * svd.U.leftCols(na);
  f.P.block(n, 0, m, na) = h * svd.V.leftCols(na);
  f.P.block(0, na, n, nb) = h * svd.U.middleCols(na, nb);
  f.P.block(n, na, m, nb) = h * svd.V.middleCols(na, nb);
  f.P.block(n, n, m, nc) = svd.Vc();
  f.P.block(0, f.b2.begin, n, nb) = h * svd.U.middleCols(na, nb);
  f.P.block(n, f.b2.begin, m, nb) = -h * svd.V.middleCols(na, nb);
  for (Index k = 0; k < na; ++k) {
    const Index src = na - 1 - k;
    f.P.block(0, f.a_rev.begin + k, n, 1) = h * svd.U.col(src);
    f.P.block(n, f.a_rev.begin + k, m, 1) = -h * svd.V.col(src);
  }

  f.eigenvalues = Vector<Scalar>::Zero(n + m);
  f.eigenvalues.head(n) = svd.sigma;
  f.eigenvalues.tail(n) = -svd.sigma.reverse();
  return f;
}

// Eigendecomposition Z = Q Diag(lambda) Q^T, lambda nonincreasing, with
// groups of equal eigenvalues.
template <typename Scalar>
struct EigenGrouping {
  Vector<Scalar> lambda;
  Matrix<Scalar> Q;
  std::vector<Range> groups;
  std::vector<Scalar> mu;

  Index group_of(Index i) const {
    for (Index l = 0; l < static_cast<Index>(groups.size()); ++l)
      if (groups[l].contains(i)) return l;
    throw DimensionError("EigenGrouping: index out of range");
  }
  // Position of i inside its group, counted from one.
  Index l_of(Index i) const { return i - groups[group_of(i)].begin + 1; }
  auto basis(Index l) const { return Q.middleCols(groups[l].begin, groups[l].size); }
};

template <typename Derived>
EigenGrouping<typename Derived::Scalar> eigen_grouped(const Eigen::MatrixBase<Derived>& z_in,
                                                      typename Derived::Scalar group_tol,
                                                      typename Derived::Scalar sym_tol = -1) {
  using Scalar = typename Derived::Scalar;
  const Matrix<Scalar> z = z_in;
  if (z.rows() != z.cols()) throw DimensionError("eigen_grouped: matrix is not square");
  if (!z.allFinite()) throw NumericError("eigen_grouped: non-finite input");
  if (sym_tol < 0) sym_tol = Scalar(1e-12) * std::max<Scalar>(Scalar(1), z.norm());
  if ((z - z.transpose()).norm() > sym_tol) throw DimensionError("eigen_grouped: matrix is not symmetric");

  const Index k = z.rows();
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(sym_part(z));
  if (es.info() != Eigen::Success) throw NumericError("eigen_grouped: eigensolver failed");
  EigenGrouping<Scalar> out;
  out.lambda = es.eigenvalues().reverse();
  out.Q = es.eigenvectors().rowwise().reverse();
  Index start = 0;
  for (Index i = 1; i <= k; ++i) {
    if (i == k || out.lambda(i - 1) - out.lambda(i) > group_tol) {
      out.groups.push_back(span(start, i));
      out.mu.push_back(out.lambda.segment(start, i - start).mean());
      start = i;
    }
  }
  return out;
}

template <typename Derived>
EigenGrouping<typename Derived::Scalar> eigen_grouped(const Eigen::MatrixBase<Derived>& z,
                                                      const Tolerances& tol = {}) {
  using Scalar = typename Derived::Scalar;
  const Scalar top = z.norm();
  return eigen_grouped(z, Scalar(tol.group_tol(double(top))));
}

}  // namespace kyfan
