#include "doctest.h"

#include "kyfan/instances.hpp"
#include "kyfan/phik.hpp"

using namespace kyfan;

namespace {

MatrixXd rect_diag(std::initializer_list<double> d, Index m) {
  MatrixXd x = MatrixXd::Zero(static_cast<Index>(d.size()), m);
  Index i = 0;
  for (double v : d) x(i, i) = v, ++i;
  return x;
}

MatrixXd sym_unit(Index n, Index m, Index i, Index j) {
  MatrixXd e = MatrixXd::Zero(n, m);
  e(i, j) = 1;
  e(j, i) = 1;
  return e;
}

// Second derivative of t -> Psi_kappa(X + tG) at 0 by Richardson-extrapolated
// central differences; valid where Psi is smooth.
double smooth_second_derivative(const MatrixXd& x, const MatrixXd& g, Index kappa) {
  auto d2 = [&](double h) {
    return (psi_value(MatrixXd(x + h * g), kappa) - 2 * psi_value(x, kappa) + psi_value(MatrixXd(x - h * g), kappa)) / (h * h);
  };
  const double h = 1e-3;
  return (4 * d2(h / 2) - d2(h)) / 3;
}

SubgradCertificate<double> cert_of(const MatrixXd& x, const MatrixXd& gamma, Index kappa) {
  return require_subgradient(x, gamma, kappa, Tolerances{});
}

}  // namespace

TEST_CASE("critical_cone_membership basics") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = random_instance<double>(rng, random_shape(rng));
    const auto cert = cert_of(inst.x, inst.gamma, inst.kappa);
    const auto cc = critical_cone_membership(cert, MatrixXd(MatrixXd::Zero(inst.x.rows(), inst.x.cols())));
    CHECK(cc.member);
  }
  // sigma(Gamma) = 1 on the whole of beta: the unique subgradient of a smooth point.
  const MatrixXd x = rect_diag({3, 2, 1}, 4), gamma = rect_diag({1, 0, 0}, 4);
  const auto cert = cert_of(x, gamma, 1);
  for (int trial = 0; trial < 20; ++trial) CHECK(critical_cone_membership(cert, random_gaussian<double>(3, 4, rng)).member);
}

TEST_CASE("critical cone agrees with the directional-derivative identity") {
  std::mt19937_64 rng(2);
  int inside = 0, outside = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto shape = random_shape(rng);
    const auto inst = random_instance<double>(rng, shape);
    const auto cert = cert_of(inst.x, inst.gamma, inst.kappa);
    MatrixXd g = random_cone_direction(cert, rng, trial % 2 ? DirectionKind::Boundary : DirectionKind::Generic);
    if (trial % 3 == 0) g += 1e-3 * random_gaussian<double>(shape.n, shape.m, rng);
    const double gap = phi_dir_deriv<double>(bmap(inst.x), bmap(g), inst.kappa) - inst.gamma.cwiseProduct(g).sum();
    const bool identity = std::abs(gap) <= 1e-13 * (1 + g.norm());
    const bool member = critical_cone_membership(cert, g).member;
    CHECK(member == identity);
    (member ? inside : outside) += 1;
  }
  CHECK(inside > 50);
  CHECK(outside > 20);
}

TEST_CASE("second subderivative at smooth points matches the second derivative") {
  SUBCASE("top singular value, symmetric coupling of the first two axes") {
    const MatrixXd x = rect_diag({3, 2, 1}, 3), gamma = rect_diag({1, 0, 0}, 3), g = sym_unit(3, 3, 0, 1);
    // sigma_1 of [[3, t], [t, 2]] is 2.5 + sqrt(0.25 + t^2): second derivative 2.
    CHECK(d2_psi_general<double>(x, gamma, g, 1).get() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(d2_psi_explicit(cert_of(x, gamma, 1), g).get() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(d2_psi_general<double>(x, gamma, MatrixXd::Zero(3, 3), 1).get() == 0.0);
  }
  SUBCASE("kappa = 2 coupling the first and last axes") {
    const MatrixXd x = rect_diag({3, 2, 1}, 3), gamma = rect_diag({1, 1, 0}, 3), g = sym_unit(3, 3, 0, 2);
    // Psi_2 of [[3, 0, t], [0, 2, 0], [t, 0, 1]] is 4 + sqrt(1 + t^2): second derivative 1.
    const auto cert = cert_of(x, gamma, 2);
    CHECK(cert.alpha == Range{0, 1});
    CHECK(cert.beta == Range{1, 1});
    CHECK(d2_psi_explicit(cert, g).get() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d2_psi_general<double>(x, gamma, g, 2).get() == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("random smooth instances") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const Index n = 3, m = 4, kappa = 1 + trial % 3;
      const MatrixXd u = random_orthogonal<double>(n, rng), v = random_orthogonal<double>(m, rng);
      const VectorXd s = (VectorXd(n) << 3.0, 2.0, 1.0).finished();
      const MatrixXd x = u * s.asDiagonal() * v.leftCols(n).transpose();
      VectorXd sg = VectorXd::Zero(n);
      sg.head(kappa).setOnes();
      const MatrixXd gamma = u * sg.asDiagonal() * v.leftCols(n).transpose();
      const MatrixXd g = random_gaussian<double>(n, m, rng);
      const double fd = smooth_second_derivative(x, g, kappa);
      CHECK(std::abs(d2_psi_explicit(cert_of(x, gamma, kappa), g).get() - fd) <= 1e-6 * (1 + std::abs(fd)));
    }
  }
}

TEST_CASE("d2_psi_explicit vanishes on symmetric directions at full rank with kappa = n") {
  std::mt19937_64 rng(4);
  const MatrixXd u = random_orthogonal<double>(3, rng), v = random_orthogonal<double>(5, rng);
  const VectorXd s = (VectorXd(3) << 2.5, 1.5, 0.5).finished();
  const MatrixXd x = u * s.asDiagonal() * v.leftCols(3).transpose();
  const MatrixXd gamma = u * v.leftCols(3).transpose();
  MatrixXd ghat = MatrixXd::Zero(3, 5);
  ghat.leftCols(3) = sym_part(random_gaussian<double>(3, 3, rng));
  const MatrixXd g = u * ghat * v.transpose();
  const auto value = d2_psi_explicit(cert_of(x, gamma, 3), g);
  CHECK(std::abs(value.get()) < 1e-12);
  CHECK(std::abs(smooth_second_derivative(x, g, 3)) < 1e-6);
}

TEST_CASE("explicit value is nonnegative and degree-2 homogeneous") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = random_instance<double>(rng, random_shape(rng));
    const auto cert = cert_of(inst.x, inst.gamma, inst.kappa);
    const MatrixXd g = random_cone_direction(cert, rng, DirectionKind::Generic);
    const auto v = d2_psi_explicit(cert, g);
    REQUIRE(v.finite());
    CHECK(v.get() >= -1e-9);
    for (double t : {0.5, 2.0, 10.0}) {
      const double vt = d2_psi_explicit(cert, MatrixXd(t * g)).get();
      CHECK(std::abs(vt - t * t * v.get()) <= 1e-9 * std::max(1.0, t * t * std::abs(v.get())));
    }
  }
}

TEST_CASE("d2_nuclear") {
  const MatrixXd x = rect_diag({3, 1}, 3), gamma = rect_diag({1, 1}, 3);
  CHECK(d2_nuclear<double>(x, gamma, MatrixXd::Zero(2, 3)).get() == 0.0);
  MatrixXd g = MatrixXd::Zero(2, 3);
  g(0, 2) = 0.7;
  g(1, 2) = -0.4;
  g(0, 1) = g(1, 0) = 0.3;
  // Only the c-column terms survive: 0.7^2 / 3 + 0.4^2 / 1.
  const double expect = 0.49 / 3 + 0.16;
  CHECK(d2_nuclear<double>(x, gamma, g).get() == doctest::Approx(expect).epsilon(1e-12));
  CHECK(smooth_second_derivative(x, g, 2) == doctest::Approx(expect).epsilon(1e-6));

  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    auto shape = random_shape(rng);
    shape.kappa = shape.n;
    const auto inst = random_instance<double>(rng, shape);
    const auto cert = cert_of(inst.x, inst.gamma, inst.kappa);
    const MatrixXd gg = random_cone_direction(cert, rng, DirectionKind::Generic);
    const double e = d2_psi_explicit(cert, gg).get();
    CHECK(std::abs(d2_nuclear<double>(inst.x, inst.gamma, gg).get() - e) <= 1e-10 * std::max(1.0, std::abs(e)));
  }
}

TEST_CASE("d2_spectral") {
  const MatrixXd x = rect_diag({3, 2}, 2), gamma = rect_diag({1, 0}, 2);
  CHECK(d2_spectral<double>(x, gamma, MatrixXd::Zero(2, 2)).get() == 0.0);
  CHECK(d2_spectral<double>(x, gamma, sym_unit(2, 2, 0, 1)).get() == doctest::Approx(2.0).epsilon(1e-12));

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    auto shape = random_shape(rng);
    shape.kappa = 1;
    const auto inst = random_instance<double>(rng, shape);
    const auto cert = cert_of(inst.x, inst.gamma, 1);
    const MatrixXd gg = random_cone_direction(cert, rng, DirectionKind::Generic);
    const double e = d2_psi_explicit(cert, gg).get();
    CHECK(std::abs(d2_spectral<double>(inst.x, inst.gamma, gg).get() - e) <= 1e-10 * std::max(1.0, std::abs(e)));
  }
}

TEST_CASE("zero set of the second subderivative") {
  const MatrixXd x = rect_diag({3, 2, 1}, 3), gamma = rect_diag({1, 1, 0}, 3);
  const auto cert = cert_of(x, gamma, 2);
  CHECK(d2_zero_set_membership(cert, MatrixXd(MatrixXd::Zero(3, 3))).member);
  MatrixXd g = MatrixXd::Zero(3, 3);
  g(0, 2) = 1;  // an alpha x gamma entry
  CHECK_FALSE(d2_zero_set_membership(cert, g).member);
  CHECK(d2_psi_explicit(cert, g).get() > 0.1);

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = random_instance<double>(rng, random_shape(rng));
    const auto c = cert_of(inst.x, inst.gamma, inst.kappa);
    const MatrixXd z = random_cone_direction(c, rng, DirectionKind::ZeroSet);
    CHECK(d2_zero_set_membership(c, z).member);
    CHECK(std::abs(d2_psi_explicit(c, z).get()) <= 1e-9);
  }
}

TEST_CASE("non-subgradients are rejected") {
  const MatrixXd x = rect_diag({3, 2, 1}, 3);
  CHECK_THROWS_AS(d2_psi_general<double>(x, 0.5 * rect_diag({1, 0, 0}, 3), MatrixXd::Zero(3, 3), 1), NotASubgradientError);
}
