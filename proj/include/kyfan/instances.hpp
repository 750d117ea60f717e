#pragma once

#include "kyfan/secder.hpp"

#include <algorithm>
#include <numeric>

namespace kyfan {

// Seeded generators of structured test problems: pairs (X, Gamma) with Gamma
// a subgradient of a prescribed case, and directions in the critical cone.

template <typename Scalar>
struct Instance {
  Matrix<Scalar> x, gamma;
  Index kappa = 1;
};

struct InstanceShape {
  Index n = 4, m = 6, kappa = 2;
  ConeCase kase = ConeCase::InteriorGroup;
  bool separated = false;  // group gaps and off-group singular values at least 0.5
  bool allow_ties = true;  // repeated interior values of sigma(Gamma)
};

namespace detail {

template <typename Rng>
Index uniform_index(Rng& rng, Index lo, Index hi) {
  return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

template <typename Rng>
double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// `count` values in (0, 1), nonincreasing, summing to `total`.
template <typename Scalar, typename Rng>
std::vector<Scalar> interior_values(Rng& rng, Index count, Scalar total, bool ties) {
  std::vector<Scalar> v(count, count ? total / Scalar(count) : Scalar(0));
  if (count < 2 || (ties && uniform(rng, 0, 1) < 0.5)) return v;
  const Scalar c = v[0];
  const Scalar room = Scalar(0.8) * std::min(c, Scalar(1) - c);
  std::vector<Scalar> d(count);
  for (auto& x : d) x = Scalar(uniform(rng, -1, 1));
  const Scalar mean = std::accumulate(d.begin(), d.end(), Scalar(0)) / Scalar(count);
  Scalar amp = 0;
  for (auto& x : d) amp = std::max(amp, std::abs(x -= mean));
  for (Index i = 0; i < count; ++i) v[i] = c + (amp > 0 ? room * d[i] / amp : Scalar(0));
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

// sigma(Gamma) on a block of size k: n1 ones, interior values, zeros, with
// the sum equal to `target` (exact) or strictly below it.
template <typename Scalar, typename Rng>
std::vector<Scalar> beta_values(Rng& rng, Index k, Index target, bool exact, bool ties) {
  std::vector<Scalar> out;
  if (exact) {
    const bool with_plus = k > target && uniform(rng, 0, 1) < 0.6;
    if (!with_plus) {
      out.assign(target, Scalar(1));
      out.resize(k, Scalar(0));
      return out;
    }
    const Index n1 = uniform_index(rng, 0, target - 1);
    const Index np = uniform_index(rng, target - n1 + 1, k - n1);
    out.assign(n1, Scalar(1));
    for (auto v : interior_values<Scalar>(rng, np, Scalar(target - n1), ties)) out.push_back(v);
    out.resize(k, Scalar(0));
    return out;
  }
  const Index n1 = target > 0 ? uniform_index(rng, 0, target - 1) : 0;
  const Index np = uniform_index(rng, 0, k - n1);
  const Scalar room = Scalar(target - n1) - Scalar(0.1);
  out.assign(n1, Scalar(1));
  if (np > 0 && room > Scalar(0)) {
    const Scalar total = std::min(Scalar(np) * Scalar(0.9), room) * Scalar(uniform(rng, 0.2, 1.0));
    for (auto v : interior_values<Scalar>(rng, np, total, ties)) out.push_back(v);
  }
  out.resize(k, Scalar(0));
  return out;
}

// Random composition of `total` into parts of size 1..3.
template <typename Rng>
std::vector<Index> group_sizes(Rng& rng, Index total) {
  std::vector<Index> sizes;
  while (total > 0) {
    const Index k = std::min<Index>(total, uniform_index(rng, 1, 3));
    sizes.push_back(k);
    total -= k;
  }
  return sizes;
}

}  // namespace detail

template <typename Scalar, typename Rng>
Instance<Scalar> random_instance(Rng& rng, const InstanceShape& shape) {
  const Index n = shape.n, m = shape.m, kappa = shape.kappa;
  if (n < 1 || n > m || kappa < 1 || kappa > n) throw DimensionError("random_instance: bad shape");
  const bool interior = shape.kase == ConeCase::InteriorGroup;
  if (!interior && shape.kase == ConeCase::ZeroGroupStrict && kappa < 1) throw DimensionError("random_instance");

  const Index rank = interior ? detail::uniform_index(rng, kappa, n) : detail::uniform_index(rng, 0, kappa - 1);
  const auto sizes = detail::group_sizes(rng, rank);
  Vector<Scalar> sx = Vector<Scalar>::Zero(n);
  {
    Scalar v = shape.separated ? Scalar(detail::uniform(rng, 0.5, 1.5)) : Scalar(detail::uniform(rng, 0.2, 1.0));
    std::vector<Scalar> vals(sizes.size());
    for (Index l = Index(sizes.size()) - 1; l >= 0; --l) {
      vals[l] = v;
      v += shape.separated ? Scalar(detail::uniform(rng, 0.5, 1.5)) : Scalar(detail::uniform(rng, 0.1, 1.0));
    }
    Index at = 0;
    for (size_t l = 0; l < sizes.size(); ++l)
      for (Index k = 0; k < sizes[l]; ++k) sx(at++) = vals[l];
  }

  // Locate the group holding kappa.
  Index k0 = rank, k1 = n;
  if (interior) {
    Index at = 0;
    for (Index sz : sizes) {
      if (kappa - 1 < at + sz) {
        k0 = at;
        k1 = at + sz;
        break;
      }
      at += sz;
    }
  }
  Vector<Scalar> sg = Vector<Scalar>::Zero(n);
  sg.head(k0).setOnes();
  const bool exact = shape.kase != ConeCase::ZeroGroupStrict;
  const auto beta = detail::beta_values<Scalar>(rng, k1 - k0, kappa - k0, exact, shape.allow_ties);
  for (Index i = 0; i < k1 - k0; ++i) sg(k0 + i) = beta[i];

  const Matrix<Scalar> u = random_orthogonal<Scalar>(n, rng);
  const Matrix<Scalar> v = random_orthogonal<Scalar>(m, rng);
  Instance<Scalar> out;
  out.kappa = kappa;
  out.x = u * sx.asDiagonal() * v.leftCols(n).transpose();
  out.gamma = u * sg.asDiagonal() * v.leftCols(n).transpose();
  return out;
}

// Choose a case compatible with (n, kappa): the zero-group cases need
// kappa <= n with a rank below kappa, which is always possible.
template <typename Rng>
InstanceShape random_shape(Rng& rng, Index max_n = 6, Index max_m = 8) {
  InstanceShape s;
  s.n = detail::uniform_index(rng, 1, max_n);
  s.m = detail::uniform_index(rng, s.n, std::max(s.n, max_m));
  s.kappa = detail::uniform_index(rng, 1, s.n);
  s.kase = static_cast<ConeCase>(detail::uniform_index(rng, 0, 2));
  return s;
}

enum class DirectionKind { Generic, Boundary, ZeroSet };

namespace detail {

template <typename Scalar, typename Rng>
Matrix<Scalar> sym_with_min(Rng& rng, Index k, Scalar target_min) {
  Matrix<Scalar> a = sym_part(random_gaussian<Scalar>(k, k, rng));
  if (k == 0) return a;
  return a + (target_min - lambda_min<Scalar>(a)) * Matrix<Scalar>::Identity(k, k);
}

template <typename Scalar, typename Rng>
Matrix<Scalar> sym_with_max(Rng& rng, Index k, Scalar target_max) {
  Matrix<Scalar> a = sym_part(random_gaussian<Scalar>(k, k, rng));
  if (k == 0) return a;
  return a + (target_max - lambda_max<Scalar>(a)) * Matrix<Scalar>::Identity(k, k);
}

}  // namespace detail

// A direction G in the critical cone.  Boundary puts varpi on an endpoint of
// its interval; ZeroSet additionally clears every block the second
// subderivative penalises.
template <typename Scalar, typename Rng>
Matrix<Scalar> random_cone_direction(const SubgradCertificate<Scalar>& cert, Rng& rng, DirectionKind kind) {
  using detail::blk;
  const Index n = cert.n(), m = cert.m();
  const bool boundary = kind == DirectionKind::Boundary;
  auto slack = [&]() { return boundary ? Scalar(0) : Scalar(detail::uniform(rng, 0.05, 1.0)); };
  Matrix<Scalar> gh = random_gaussian<Scalar>(n, m, rng);
  const Range beta = cert.beta, b1 = cert.beta1, bp = cert.beta_plus, b0 = cert.beta0;
  const ConeCase kase = cone_case(cert);

  if (kase == ConeCase::InteriorGroup) {
    const Scalar varpi = Scalar(detail::uniform(rng, -1, 1));
    Matrix<Scalar> s = Matrix<Scalar>::Zero(beta.size, beta.size);
    const Index o = beta.begin;
    blk(s, detail::shift(b1, o), detail::shift(b1, o)) = detail::sym_with_min<Scalar>(rng, b1.size, varpi + slack());
    blk(s, detail::shift(bp, o), detail::shift(bp, o)) = varpi * Matrix<Scalar>::Identity(bp.size, bp.size);
    blk(s, detail::shift(b0, o), detail::shift(b0, o)) = detail::sym_with_max<Scalar>(rng, b0.size, varpi - slack());
    blk(gh, beta, beta) = s + skew_part(Matrix<Scalar>(blk(gh, beta, beta)));
  } else {
    const Index o = beta.begin;
    Matrix<Scalar> z = Matrix<Scalar>::Zero(beta.size, m - o);
    const Range r1 = detail::shift(b1, o), rp = detail::shift(bp, o), r0 = detail::shift(b0, o);
    if (kase == ConeCase::ZeroGroupStrict) {
      Matrix<Scalar> f = random_gaussian<Scalar>(b1.size, b1.size, rng);
      if (boundary && b1.size > 0) f.col(0).setZero();
      blk(z, r1, r1) = f * f.transpose();
    } else {
      const Scalar varpi = Scalar(detail::uniform(rng, 0.1, 1.5));
      blk(z, r1, r1) = detail::sym_with_min<Scalar>(rng, b1.size, varpi + slack());
      blk(z, rp, rp) = varpi * Matrix<Scalar>::Identity(bp.size, bp.size);
      const Range tail = span(r0.begin, m - o);
      Matrix<Scalar> de = random_gaussian<Scalar>(b0.size, tail.size, rng);
      if (de.size() > 0) {
        const Scalar top = bp.empty() && b1.empty() ? Scalar(detail::uniform(rng, 0.1, 2.0)) : varpi - slack();
        de *= std::max<Scalar>(Scalar(0), top) / detail::sigma_max<Scalar>(de);
      }
      blk(z, r0, tail) = de;
    }
    gh.block(o, o, beta.size, m - o) = z;
  }

  if (kind == DirectionKind::ZeroSet) {
    const Range al = cert.alpha, gm = cert.gamma_set, cc{n, m - n};
    auto clear = [&](Range r, Range c) {
      blk(gh, r, c).setZero();
      if (c.end() <= n) blk(gh, c, r).setZero();
    };
    auto symmetrize = [&](Range r, Range c) {
      const Matrix<Scalar> s = (blk(gh, r, c) + blk(gh, c, r).transpose()) / Scalar(2);
      blk(gh, r, c) = s;
      blk(gh, c, r) = s.transpose();
    };
    if (kase == ConeCase::InteriorGroup) {
      const Range corner = span(0, bp.end());
      symmetrize(corner, corner);
      clear(b1, b0);
      clear(bp, b0);
      clear(al, bp);
      clear(al, b0);
      clear(al, gm);
      clear(b1, gm);
      clear(bp, gm);
      for (Range r : {al, b1, bp}) blk(gh, r, cc).setZero();
    } else {
      symmetrize(al, al);
      symmetrize(al, b1);
      blk(gh, al, cc).setZero();
      clear(al, bp);
      clear(al, b0);
    }
  }
  return cert.pair.from_coords(gh);
}

}  // namespace kyfan
