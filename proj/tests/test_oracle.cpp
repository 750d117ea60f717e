#include "doctest.h"

#include "kyfan/instances.hpp"
#include "kyfan/oracle.hpp"
#include "prox_oracle.hpp"

#include <sstream>

using namespace kyfan;
using kyfan::testing::prox_by_enumeration;

namespace {

MatrixXd rect_diag(std::initializer_list<double> d, Index m) {
  MatrixXd x = MatrixXd::Zero(static_cast<Index>(d.size()), m);
  Index i = 0;
  for (double v : d) x(i, i) = v, ++i;
  return x;
}

double nuclear(const MatrixXd& a) { return Eigen::JacobiSVD<MatrixXd>(a).singularValues().sum(); }
double spectral(const MatrixXd& a) { return Eigen::JacobiSVD<MatrixXd>(a).singularValues()(0); }

}  // namespace

TEST_CASE("vector prox against active-set enumeration") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> step(0.05, 3.0);
  for (int trial = 0; trial < 300; ++trial) {
    const Index n = 1 + trial % 7, kappa = 1 + (trial / 7) % n;
    VectorXd x = random_gaussian<double>(n, 1, rng) * 2;
    if (trial % 5 == 0 && n > 1) x(1) = -x(0);  // a tie in |x|
    const double t = step(rng);
    CHECK((kyfan_vector_prox<double>(x, kappa, t) - prox_by_enumeration(x, kappa, t)).norm() <= 1e-6);
  }
}

TEST_CASE("vector prox special regimes") {
  // Inside the dual ball the prox is zero.
  const VectorXd small = (VectorXd(3) << 0.2, -0.1, 0.3).finished();
  CHECK(kyfan_vector_prox<double>(small, 2, 1.0).norm() < 1e-12);
  // kappa = n is the l1 norm: soft thresholding.
  const VectorXd x = (VectorXd(4) << 3.0, -0.5, 1.5, -2.0).finished();
  const VectorXd soft = (VectorXd(4) << 2.0, 0.0, 0.5, -1.0).finished();
  CHECK((kyfan_vector_prox<double>(x, 4, 1.0) - soft).norm() < 1e-12);
  CHECK_THROWS_AS(kyfan_vector_prox<double>(x, 2, 0.0), PreconditionError);
  CHECK_THROWS_AS(kyfan_vector_prox<double>(x, 5, 1.0), DimensionError);
}

TEST_CASE("matrix prox") {
  CHECK((kyfan_matrix_prox<double>(rect_diag({5, 1}, 2), 1, 1.0) - rect_diag({4, 1}, 2)).norm() < 1e-12);

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 60; ++trial) {
    const auto shape = random_shape(rng);
    const MatrixXd y = 2 * random_gaussian<double>(shape.n, shape.m, rng);
    const double t = 0.3 + 0.1 * (trial % 10);
    const MatrixXd p = kyfan_matrix_prox<double>(y, shape.kappa, t);
    // Optimality: (Y - P) / t is a subgradient of Psi at P.
    CHECK(subdiff_membership<double>(p, MatrixXd((y - p) / t), shape.kappa).member);
    // Moreau: Y - P lies in t times the dual ball and attains the Fenchel equality.
    const MatrixXd r = y - p;
    CHECK(spectral(r) <= t * (1 + 1e-9));
    CHECK(nuclear(r) <= shape.kappa * t * (1 + 1e-9));
    CHECK(std::abs(r.cwiseProduct(p).sum() - t * psi_value(p, shape.kappa)) <= 1e-9 * (1 + y.squaredNorm()));
    // Nonexpansive.
    const MatrixXd y2 = y + 0.5 * random_gaussian<double>(shape.n, shape.m, rng);
    CHECK((kyfan_matrix_prox<double>(y2, shape.kappa, t) - p).norm() <= (y2 - y).norm() * (1 + 1e-12));
  }
}

TEST_CASE("psi_subgradient is a subgradient") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto shape = random_shape(rng);
    const MatrixXd y = random_gaussian<double>(shape.n, shape.m, rng);
    const MatrixXd g = psi_subgradient<double>(y, shape.kappa);
    CHECK(std::abs(g.cwiseProduct(y).sum() - psi_value(y, shape.kappa)) < 1e-10);
    CHECK(spectral(g) <= 1 + 1e-12);
  }
}

TEST_CASE("quotient oracle") {
  QuotientConfig cfg;
  cfg.seed = 7;
  SUBCASE("smooth quadratic gives the squared norm") {
    std::mt19937_64 rng(4);
    const MatrixXd x = random_gaussian<double>(2, 3, rng), w = random_gaussian<double>(2, 3, rng);
    const std::function<double(const MatrixXd&)> f = [](const MatrixXd& y) { return 0.5 * y.squaredNorm(); };
    const auto r = d2_quotient_oracle<double>(f, x, x, w, cfg);
    REQUIRE(r.estimate.finite);
    CHECK(std::abs(r.estimate.value - w.squaredNorm()) <= 1e-3 * w.squaredNorm());
  }
  SUBCASE("top singular value with a coupling direction") {
    const MatrixXd x = rect_diag({3, 2}, 2), v = rect_diag({1, 0}, 2);
    MatrixXd w = MatrixXd::Zero(2, 2);
    w(0, 1) = w(1, 0) = 1;
    const std::function<double(const MatrixXd&)> f = [](const MatrixXd& y) { return psi_value(y, 1); };
    const std::function<MatrixXd(const MatrixXd&)> sg = [](const MatrixXd& y) { return psi_subgradient<double>(y, 1); };
    const auto r = d2_quotient_oracle<double>(f, x, v, w, cfg, sg);
    REQUIRE(r.estimate.finite);
    CHECK(std::abs(r.estimate.value - 2.0) <= 1e-3);
  }
  SUBCASE("outside the critical cone the quotient diverges") {
    const MatrixXd x = rect_diag({1, 1}, 2), v = rect_diag({1, 0}, 2), w = rect_diag({0, 1}, 2);
    const std::function<double(const MatrixXd&)> f = [](const MatrixXd& y) { return psi_value(y, 1); };
    const auto r = d2_quotient_oracle<double>(f, x, v, w, cfg);
    CHECK(r.diverging);
    CHECK_FALSE(r.estimate.finite);
  }
}

TEST_CASE("tilted solver and the probe") {
  const MatrixXd x = rect_diag({3, 1}, 3);
  SUBCASE("zero tilt returns the stationary point") {
    const auto spec = stationary_quadratic<double>(x, rect_diag({1, 0}, 3), MatrixXd::Identity(6, 6), 1);
    const auto sol = solve_tilted<double>(spec, MatrixXd::Zero(2, 3), 0.2);
    CHECK(sol.converged);
    CHECK((sol.x - x).norm() < 1e-9);
  }
  SUBCASE("identity Hessian: modulus at most one") {
    const auto spec = stationary_quadratic<double>(x, rect_diag({1, 0}, 3), MatrixXd::Identity(6, 6), 1);
    const auto rep = tilt_probe(spec);
    CHECK(rep.consistent_with == TiltStatus::Stable);
    CHECK(rep.modulus <= 1 + 1e-6);
    std::ostringstream os;
    rep.write_csv(os);
    CHECK(os.str().rfind("tilt_id,V_norm,solution_displacement,residual\n", 0) == 0);
    CHECK(rep.rows.size() == 16);
  }
  SUBCASE("affine theta at zero with an interior subgradient stays put") {
    const auto spec = stationary_quadratic<double>(MatrixXd::Zero(2, 3), rect_diag({0.3, 0.2}, 3), MatrixXd::Zero(6, 6), 1);
    const auto rep = tilt_probe(spec);
    CHECK(rep.consistent_with == TiltStatus::Stable);
    CHECK(rep.modulus < 1e-6);
  }
  SUBCASE("a flat direction in Upsilon moves the solution to the ball edge") {
    MatrixXd h = MatrixXd::Identity(6, 6);
    h(0, 0) = 0;
    const auto spec = stationary_quadratic<double>(x, rect_diag({1, 1}, 3), h, 2);
    const auto rep = tilt_probe(spec);
    CHECK(rep.consistent_with == TiltStatus::Unstable);
    CHECK(rep.modulus > 20);
  }
}
