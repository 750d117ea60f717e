#pragma once

#include "kyfan/phik.hpp"
#include "kyfan/subgrad.hpp"

namespace kyfan {

enum class ConeCase { InteriorGroup, ZeroGroupStrict, ZeroGroupTight };

inline const char* to_string(ConeCase c) {
  switch (c) {
    case ConeCase::InteriorGroup: return "InteriorGroup";
    case ConeCase::ZeroGroupStrict: return "ZeroGroupStrict";
    case ConeCase::ZeroGroupTight: return "ZeroGroupTight";
  }
  return "";
}

template <typename Scalar>
ConeCase cone_case(const SubgradCertificate<Scalar>& cert) {
  if (cert.kase == MembershipCase::InteriorGroup) return ConeCase::InteriorGroup;
  return cert.tight ? ConeCase::ZeroGroupTight : ConeCase::ZeroGroupStrict;
}

template <typename Scalar>
struct CriticalConeCert {
  bool member = false;
  ConeCase kase = ConeCase::InteriorGroup;
  std::optional<Scalar> varpi;
  Scalar lo = -std::numeric_limits<Scalar>::infinity();
  Scalar hi = std::numeric_limits<Scalar>::infinity();
  Scalar residual = Scalar(0);
  std::string failure;
};

namespace detail {

template <typename Derived>
auto blk(const Eigen::MatrixBase<Derived>& a, Range r, Range c) {
  return a.derived().block(r.begin, c.begin, r.size, c.size);
}

template <typename Derived>
auto blk(Eigen::MatrixBase<Derived>& a, Range r, Range c) {
  return a.derived().block(r.begin, c.begin, r.size, c.size);
}

template <typename Derived>
typename Derived::Scalar sq(const Eigen::MatrixBase<Derived>& a, Range r, Range c) {
  return blk(a, r, c).squaredNorm();
}

inline Range shift(Range r, Index by) { return Range{r.begin - by, r.size}; }

template <typename Scalar>
Scalar lambda_max(const Matrix<Scalar>& a) {
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(sym_part(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

template <typename Scalar>
Scalar lambda_min(const Matrix<Scalar>& a) {
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(sym_part(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

template <typename Scalar>
Scalar sigma_max(const Matrix<Scalar>& a) {
  if (a.size() == 0) return Scalar(0);
  Eigen::JacobiSVD<Matrix<Scalar>> svd(a);
  return svd.singularValues()(0);
}

// Common tail of cases (i) and (iii): a value varpi with lo <= varpi <= hi,
// forced to the beta+ mean when beta+ is nonempty.
template <typename Scalar>
void settle_varpi(CriticalConeCert<Scalar>& out, std::optional<Scalar> forced, Scalar tol) {
  constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
  if (forced) {
    out.varpi = forced;
    if (*forced < out.lo - tol || *forced > out.hi + tol) out.failure = "varpi outside its interval";
    return;
  }
  if (out.lo > out.hi + tol) {
    out.failure = "empty interval for varpi";
    return;
  }
  if (out.lo > -inf && out.hi < inf) out.varpi = (out.lo + out.hi) / 2;
  else if (out.lo > -inf) out.varpi = out.lo;
  else if (out.hi < inf) out.varpi = out.hi;
  else out.varpi = Scalar(0);
}

}  // namespace detail

template <typename Scalar>
CriticalConeCert<Scalar> critical_cone_membership(const SubgradCertificate<Scalar>& cert,
                                                  const Matrix<Scalar>& g, const Tolerances& tols = {}) {
  using detail::blk;
  if (g.rows() != cert.n() || g.cols() != cert.m()) throw DimensionError("critical_cone_membership: shape mismatch");
  CriticalConeCert<Scalar> out;
  out.kase = cone_case(cert);
  const Scalar tol = Scalar(tols.cone) * std::max<Scalar>(Scalar(1), g.norm());
  const Matrix<Scalar> gh = cert.pair.coords(g);
  const Range beta = cert.beta;
  const Index off = beta.begin;
  const Range b1 = detail::shift(cert.beta1, off), bp = detail::shift(cert.beta_plus, off),
              b0 = detail::shift(cert.beta0, off);
  std::optional<Scalar> forced;
  Scalar res2 = Scalar(0);

  if (out.kase == ConeCase::InteriorGroup) {
    const Matrix<Scalar> s = sym_part(Matrix<Scalar>(blk(gh, beta, beta)));
    res2 += detail::sq(s, b1, bp) + detail::sq(s, b1, b0) + detail::sq(s, bp, b0);
    if (!bp.empty()) {
      const Matrix<Scalar> p = blk(s, bp, bp);
      forced = p.trace() / Scalar(bp.size);
      res2 += (p - *forced * Matrix<Scalar>::Identity(bp.size, bp.size)).squaredNorm();
    }
    if (!b0.empty()) out.lo = detail::lambda_max<Scalar>(blk(s, b0, b0));
    if (!b1.empty()) out.hi = detail::lambda_min<Scalar>(blk(s, b1, b1));
  } else {
    const Matrix<Scalar> z = gh.block(off, off, beta.size, cert.m() - off);
    const Matrix<Scalar> c = blk(z, b1, b1);
    res2 += (c - c.transpose()).squaredNorm();
    if (out.kase == ConeCase::ZeroGroupStrict) {
      Matrix<Scalar> w = z;
      blk(w, b1, b1).setZero();
      res2 += w.squaredNorm();
      if (!b1.empty()) out.lo = Scalar(0), out.hi = detail::lambda_min<Scalar>(c);
      if (!b1.empty() && out.hi < -tol) out.failure = "beta1 block is not positive semidefinite";
    } else {
      const Range tail0 = span(b0.begin, z.cols());
      res2 += detail::sq(z, b1, bp) + detail::sq(z, b1, tail0);
      res2 += detail::sq(z, bp, b1) + detail::sq(z, bp, tail0);
      res2 += detail::sq(z, b0, b1) + detail::sq(z, b0, bp);
      if (!bp.empty()) {
        const Matrix<Scalar> p = blk(z, bp, bp);
        forced = p.trace() / Scalar(bp.size);
        res2 += (p - *forced * Matrix<Scalar>::Identity(bp.size, bp.size)).squaredNorm();
      }
      out.lo = detail::sigma_max<Scalar>(blk(z, b0, tail0));
      if (!b1.empty()) out.hi = detail::lambda_min<Scalar>(c);
    }
  }
  out.residual = std::sqrt(res2);
  if (out.failure.empty() && out.residual > tol) out.failure = "structural blocks are not as required";
  if (out.failure.empty() && out.kase != ConeCase::ZeroGroupStrict) detail::settle_varpi(out, forced, tol);
  out.member = out.failure.empty();
  return out;
}

// Closed-form second subderivative from the simultaneous pair.
template <typename Scalar>
SecondSubderivValue<Scalar> d2_psi_explicit(const SubgradCertificate<Scalar>& cert, const Matrix<Scalar>& g,
                                            const Tolerances& tols = {}) {
  using detail::sq;
  SecondSubderivValue<Scalar> out;
  if (!critical_cone_membership(cert, g, tols).member) {
    out.value = ExtendedReal<Scalar>::infinity();
    out.reason = InfReason::OutsideCriticalCone;
    return out;
  }
  const Index n = cert.n(), m = cert.m();
  const auto& gr = cert.grouping;
  const Index s = gr.s(), r = gr.r;
  const Matrix<Scalar> gh = cert.pair.coords(g);
  const Matrix<Scalar> a = gh.leftCols(n);
  const Matrix<Scalar> S = sym_part(a), T = skew_part(a);
  const Matrix<Scalar> gc = gh.rightCols(m - n);
  const Range all_c{0, m - n};
  const auto& bj = cert.beta_j;
  const auto& zeta = cert.zeta;
  const Range b0 = cert.beta0;
  auto grp = [&](Index l) { return gr.group(l); };
  auto nu = [&](Index l) { return gr.value(l); };
  const Index q = static_cast<Index>(bj.size());
  std::vector<Scalar> t(8, Scalar(0));

  if (cert.kase == MembershipCase::InteriorGroup) {
    for (Index l = 0; l < r; ++l) {
      for (Index lp = r + 1; lp <= s; ++lp)
        t[0] += Scalar(2) * sq(S, grp(l), grp(lp)) / (nu(l) - nu(lp));
      for (Index j = 0; j < q; ++j)
        t[1] += Scalar(2) * (Scalar(1) - zeta[j]) * sq(S, grp(l), bj[j]) / (nu(l) - nu(r));
      for (Index lp = 0; lp <= s; ++lp)
        t[3] += Scalar(2) * sq(T, grp(l), grp(lp)) / (nu(l) + nu(lp));
      t[6] += sq(gc, grp(l), all_c) / nu(l);
      t[7] += Scalar(2) * sq(S, grp(l), b0) / (nu(l) - nu(r));
    }
    for (Index j = 0; j < q; ++j) {
      for (Index lp = r + 1; lp <= s; ++lp)
        t[2] += Scalar(2) * zeta[j] * sq(S, bj[j], grp(lp)) / (nu(r) - nu(lp));
      for (Index lp = 0; lp <= s; ++lp)
        t[4] += Scalar(2) * zeta[j] * sq(T, bj[j], grp(lp)) / (nu(r) + nu(lp));
      t[5] += zeta[j] / nu(r) * sq(gc, bj[j], all_c);
    }
    const char* names[] = {"S alpha-gamma", "S alpha-beta (1-zeta)", "S beta-gamma zeta", "T alpha",
                           "T beta zeta", "c beta", "c alpha", "S alpha-beta0"};
    for (int k = 0; k < 8; ++k) out.terms.emplace_back(names[k], t[k]);
  } else {
    for (Index l = 0; l < r; ++l) {
      for (Index j = 0; j < q; ++j) {
        t[0] += Scalar(2) * (Scalar(1) - zeta[j]) * sq(S, grp(l), bj[j]) / nu(l);
        t[4] += Scalar(2) * (Scalar(1) + zeta[j]) * sq(T, grp(l), bj[j]) / nu(l);
      }
      for (Index lp = 0; lp < r; ++lp) t[1] += Scalar(2) * sq(T, grp(l), grp(lp)) / (nu(l) + nu(lp));
      t[2] += Scalar(2) * sq(S, grp(l), b0) / nu(l);
      t[3] += sq(gc, grp(l), all_c) / nu(l);
      t[4] += Scalar(2) * sq(T, grp(l), b0) / nu(l);
    }
    const char* names[] = {"S alpha-beta (1-zeta)", "T alpha", "S alpha-beta0", "c alpha", "T alpha-beta (1+zeta)"};
    for (int k = 0; k < 5; ++k) out.terms.emplace_back(names[k], t[k]);
  }
  Scalar total = Scalar(0);
  for (const auto& [name, v] : out.terms) total += v;
  out.value = ExtendedReal<Scalar>::of(total);
  return out;
}

template <typename Scalar>
SubgradCertificate<Scalar> require_subgradient(const Matrix<Scalar>& x, const Matrix<Scalar>& gamma, Index kappa,
                                               const Tolerances& tols) {
  auto res = subdiff_membership(x, gamma, kappa, tols);
  if (!res.member) throw NotASubgradientError("Gamma is not a subgradient: " + res.failure);
  return std::move(*res.certificate);
}

// Second subderivative through the embedding B and the multiplier block.
template <typename Scalar>
SecondSubderivValue<Scalar> d2_psi_general(const Matrix<Scalar>& x, const Matrix<Scalar>& gamma,
                                           const Matrix<Scalar>& g, Index kappa, const Tolerances& tols = {}) {
  const auto cert = require_subgradient(x, gamma, kappa, tols);
  SecondSubderivValue<Scalar> out;
  if (!critical_cone_membership(cert, g, tols).member) {
    out.value = ExtendedReal<Scalar>::infinity();
    out.reason = InfReason::OutsideCriticalCone;
    return out;
  }
  const Index n = x.rows();
  const auto pair = svd_ordered(x, tols.recon);
  const auto gr = group_singular(pair, kappa, tols);
  const auto frame = build_frame(pair, gr);
  const Matrix<Scalar> bg = bmap(g);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(bmap(x));
  const Scalar gtol = Scalar(tols.group_tol(pair.sigma.size() ? double(pair.sigma(0)) : 0.0));

  auto xi_block = [&](Index l) -> Matrix<Scalar> {
    const Scalar v = gr.value(l);
    Vector<Scalar> w(es.eigenvalues().size());
    for (Index i = 0; i < w.size(); ++i) {
      const Scalar d = v - es.eigenvalues()(i);
      w(i) = std::abs(d) <= gtol ? Scalar(0) : Scalar(1) / d;
    }
    const Matrix<Scalar> pinv = es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
    const auto p = frame.block(gr.group(l));
    return Scalar(2) * p.transpose() * bg * pinv * bg * p;
  };

  Scalar lead = Scalar(0);
  Matrix<Scalar> rest = gamma;
  for (Index l = 0; l < gr.r; ++l) {
    lead += xi_block(l).trace();
    const Range a = gr.group(l);
    rest -= pair.U.middleCols(a.begin, a.size) * pair.V.middleCols(a.begin, a.size).transpose();
  }
  out.terms.emplace_back("leading groups", lead);
  Scalar tail;
  if (!gr.zero_group_case()) {
    const Range ar = gr.group(gr.r);
    const Matrix<Scalar> y = pair.U.middleCols(ar.begin, ar.size).transpose() * rest *
                             pair.V.middleCols(ar.begin, ar.size);
    tail = y.cwiseProduct(xi_block(gr.r)).sum();
    out.terms.emplace_back("kappa group", tail);
  } else {
    const Range a = gr.a();
    Vector<Scalar> inv(a.size);
    for (Index l = 0; l < gr.s(); ++l) inv.segment(gr.groups[l].begin, gr.groups[l].size).setConstant(Scalar(1) / gr.nu[l]);
    const Matrix<Scalar> w = g * pair.V.leftCols(a.size) * inv.asDiagonal() * pair.U.leftCols(a.size).transpose() * g;
    tail = -Scalar(2) * rest.cwiseProduct(w).sum();
    out.terms.emplace_back("zero block", tail);
  }
  (void)n;
  out.value = ExtendedReal<Scalar>::of(lead + tail);
  return out;
}

// Nuclear norm (kappa = n).
template <typename Scalar>
SecondSubderivValue<Scalar> d2_nuclear(const Matrix<Scalar>& x, const Matrix<Scalar>& gamma, const Matrix<Scalar>& g,
                                       const Tolerances& tols = {}) {
  using detail::sq;
  const Index n = x.rows(), m = x.cols();
  const auto cert = require_subgradient(x, gamma, n, tols);
  SecondSubderivValue<Scalar> out;
  if (!critical_cone_membership(cert, g, tols).member) {
    out.value = ExtendedReal<Scalar>::infinity();
    out.reason = InfReason::OutsideCriticalCone;
    return out;
  }
  const auto& gr = cert.grouping;
  const Matrix<Scalar> gh = cert.pair.coords(g);
  const Matrix<Scalar> S = sym_part(Matrix<Scalar>(gh.leftCols(n))), T = skew_part(Matrix<Scalar>(gh.leftCols(n)));
  const Matrix<Scalar> gc = gh.rightCols(m - n);
  Scalar skew = 0, side = 0, rank_def = 0;
  for (Index l = 0; l < gr.s(); ++l) {
    const Range al = gr.groups[l];
    for (Index lp = 0; lp < gr.s(); ++lp) skew += Scalar(2) * sq(T, al, gr.groups[lp]) / (gr.nu[l] + gr.nu[lp]);
    side += sq(gc, al, Range{0, m - n}) / gr.nu[l];
    if (gr.b.empty()) continue;
    std::vector<std::pair<Range, Scalar>> parts{{cert.beta0, Scalar(0)}};
    for (size_t j = 0; j < cert.beta_j.size(); ++j) parts.emplace_back(cert.beta_j[j], cert.zeta[j]);
    for (const auto& [bj, z] : parts)
      rank_def += (Scalar(2) * (Scalar(1) - z) * sq(S, al, bj) + Scalar(2) * (Scalar(1) + z) * sq(T, al, bj)) / gr.nu[l];
  }
  out.terms = {{"T groups", skew}, {"c columns", side}, {"zero block", rank_def}};
  out.value = ExtendedReal<Scalar>::of(skew + side + rank_def);
  return out;
}

// Spectral norm (kappa = 1).
template <typename Scalar>
SecondSubderivValue<Scalar> d2_spectral(const Matrix<Scalar>& x, const Matrix<Scalar>& gamma, const Matrix<Scalar>& g,
                                        const Tolerances& tols = {}) {
  using detail::sq;
  const Index n = x.rows(), m = x.cols();
  const auto cert = require_subgradient(x, gamma, Index(1), tols);
  SecondSubderivValue<Scalar> out;
  if (!critical_cone_membership(cert, g, tols).member) {
    out.value = ExtendedReal<Scalar>::infinity();
    out.reason = InfReason::OutsideCriticalCone;
    return out;
  }
  const auto& gr = cert.grouping;
  if (gr.zero_group_case()) {
    out.value = ExtendedReal<Scalar>::of(Scalar(0));
    return out;
  }
  const Matrix<Scalar> gh = cert.pair.coords(g);
  const Matrix<Scalar> S = sym_part(Matrix<Scalar>(gh.leftCols(n))), T = skew_part(Matrix<Scalar>(gh.leftCols(n)));
  const Matrix<Scalar> gc = gh.rightCols(m - n);
  const Scalar top = gr.nu[0];
  Scalar sym = 0, side = 0, skew = 0;
  for (size_t j = 0; j < cert.beta_j.size(); ++j) {
    const Range bj = cert.beta_j[j];
    const Scalar z = cert.zeta[j];
    for (Index lp = 1; lp <= gr.s(); ++lp) sym += Scalar(2) * z * sq(S, bj, gr.group(lp)) / (top - gr.value(lp));
    side += z / top * sq(gc, bj, Range{0, m - n});
    for (Index lp = 0; lp <= gr.s(); ++lp) skew += Scalar(2) * z * sq(T, bj, gr.group(lp)) / (top + gr.value(lp));
  }
  out.terms = {{"S top group", sym}, {"c columns", side}, {"T top group", skew}};
  out.value = ExtendedReal<Scalar>::of(sym + side + skew);
  return out;
}

template <typename Scalar>
struct ZeroSetResult {
  bool member = false;
  Scalar residual = Scalar(0);
};

// Block conditions describing the directions in the critical cone on which
// the second subderivative vanishes.
template <typename Scalar>
ZeroSetResult<Scalar> d2_zero_set_membership(const SubgradCertificate<Scalar>& cert, const Matrix<Scalar>& g,
                                             const Tolerances& tols = {}) {
  using detail::sq;
  if (!critical_cone_membership(cert, g, tols).member)
    throw PreconditionError("d2_zero_set_membership: direction is outside the critical cone");
  const Index n = cert.n(), m = cert.m();
  const Matrix<Scalar> gh = cert.pair.coords(g);
  const Matrix<Scalar> a = gh.leftCols(n);
  const Matrix<Scalar> T = skew_part(a);
  const Range all_c{n, m - n};
  const Range al = cert.alpha, b1 = cert.beta1, bp = cert.beta_plus, b0 = cert.beta0;
  auto antisym = [&](Range r, Range c) { return sq(T, r, c) + sq(T, c, r); };
  auto both = [&](Range r, Range c) { return sq(a, r, c) + sq(a, c, r); };
  Scalar res2 = 0;
  if (cert.kase == MembershipCase::InteriorGroup) {
    const Range corner = span(0, bp.end());
    const Range gm = cert.gamma_set;
    res2 += sq(T, corner, corner);
    res2 += antisym(b1, b0) + antisym(bp, b0);
    res2 += both(al, bp) + both(al, b0) + both(al, gm);
    res2 += both(b1, gm) + both(bp, gm);
    res2 += sq(gh, al, all_c) + sq(gh, b1, all_c) + sq(gh, bp, all_c);
  } else {
    res2 += sq(T, al, al) + antisym(al, b1);
    res2 += sq(gh, al, all_c);
    res2 += both(al, bp) + both(al, b0);
  }
  ZeroSetResult<Scalar> out;
  out.residual = std::sqrt(res2);
  out.member = out.residual <= Scalar(tols.cone) * std::max<Scalar>(Scalar(1), g.norm());
  return out;
}

}  // namespace kyfan
