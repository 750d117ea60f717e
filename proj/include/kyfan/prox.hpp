#pragma once

#include "kyfan/common.hpp"

#include <algorithm>

namespace kyfan {

// Euclidean projection onto {y : |y_i| <= cap, sum |y_i| <= kappa * cap}.
template <typename Scalar>
Vector<Scalar> project_kyfan_dual_ball(const Vector<Scalar>& x, Index kappa, Scalar cap) {
  if (kappa < 1) throw DimensionError("project_kyfan_dual_ball: kappa must be positive");
  if (!(cap >= Scalar(0))) throw PreconditionError("project_kyfan_dual_ball: negative radius");
  const Vector<Scalar> ax = x.cwiseAbs();
  auto clipped = [&](Scalar lam) {
    return ((ax.array() - lam).max(Scalar(0)).min(cap)).matrix().eval();
  };
  Vector<Scalar> y = clipped(Scalar(0));
  const Scalar budget = Scalar(kappa) * cap;
  if (y.sum() > budget) {
    Scalar lo = 0, hi = ax.size() ? ax.maxCoeff() : Scalar(0);
    for (int it = 0; it < 200; ++it) {
      const Scalar mid = (lo + hi) / 2;
      (clipped(mid).sum() > budget ? lo : hi) = mid;
    }
    y = clipped(hi);
  }
  for (Index i = 0; i < y.size(); ++i)
    if (x(i) < Scalar(0)) y(i) = -y(i);
  return y;
}

// prox of t * (sum of the kappa largest |x_i|) via the Moreau decomposition.
template <typename Scalar>
Vector<Scalar> kyfan_vector_prox(const Vector<Scalar>& x, Index kappa, Scalar t) {
  if (!(t > Scalar(0))) throw PreconditionError("kyfan_vector_prox: step must be positive");
  if (kappa > x.size()) throw DimensionError("kyfan_vector_prox: kappa exceeds dimension");
  return x - project_kyfan_dual_ball(x, kappa, t);
}

}  // namespace kyfan
