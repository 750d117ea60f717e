#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kyfan {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Index = Eigen::Index;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

// Contiguous run of indices [begin, begin + size).
struct Range {
  Index begin = 0;
  Index size = 0;

  Index end() const { return begin + size; }
  bool empty() const { return size == 0; }
  bool contains(Index i) const { return i >= begin && i < end(); }
  friend bool operator==(const Range&, const Range&) = default;
};

inline Range span(Index begin, Index end) { return Range{begin, end > begin ? end - begin : 0}; }

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};
struct PreconditionError : Error {
  using Error::Error;
};
struct NotASubgradientError : PreconditionError {
  using PreconditionError::PreconditionError;
};

// Numerical tolerances. Relative entries are scaled by the quantity named
// in the comment; every entry can be overridden from a problem file.
struct Tolerances {
  double group_rel = 1e-8;      // singular/eigen grouping, times max(1, largest magnitude)
  double recon = 1e-10;         // SVD reconstruction and orthogonality, times max(1, ||X||)
  double sigma_class = 1e-7;    // classifying sigma(Gamma) as 0, 1 or interior
  double sum_rel = 1e-7;        // trace and nuclear-norm identities, times kappa
  double membership = 1e-7;     // subgradient membership residuals
  double cone = 1e-8;           // critical cone and zero set, times max(1, ||G||)
  double pinv_rel = 1e-10;      // pseudo-inverse cutoff, times max(1, |mu| + ||Z||)
  double cond_rel = 1e-8;       // critical condition for Phi, times (1 + ||H||)
  double kernel_rel = 1e-9;     // Hessian kernel, times largest eigenvalue
  double kernel_floor = 1e-12;  // absolute floor for the kernel cutoff
  double intersect = 1e-10;     // null singular values of [K, -L]
  double margin = 1e-8;         // Upsilon constraint margin
  double psd = 1e-9;            // Hessian PSD check, times max(1, largest eigenvalue)
  double zero_value = 1e-9;     // second-subderivative value counted as zero

  double group_tol(double scale) const { return group_rel * std::max(1.0, scale); }
};

template <typename Scalar>
struct ExtendedReal {
  bool finite = true;
  Scalar value = Scalar(0);

  static ExtendedReal infinity() { return {false, std::numeric_limits<Scalar>::infinity()}; }
  static ExtendedReal of(Scalar v) { return {true, v}; }
};

enum class InfReason { None, OutsideCriticalCone };

inline const char* to_string(InfReason r) {
  return r == InfReason::OutsideCriticalCone ? "OutsideCriticalCone" : "";
}

template <typename Scalar>
struct SecondSubderivValue {
  ExtendedReal<Scalar> value;
  InfReason reason = InfReason::None;
  std::vector<std::pair<std::string, Scalar>> terms;

  bool finite() const { return value.finite; }
  Scalar get() const { return value.value; }
};

template <typename Derived>
Matrix<typename Derived::Scalar> sym_part(const Eigen::MatrixBase<Derived>& a) {
  return (a + a.transpose()) / typename Derived::Scalar(2);
}

template <typename Derived>
Matrix<typename Derived::Scalar> skew_part(const Eigen::MatrixBase<Derived>& a) {
  return (a - a.transpose()) / typename Derived::Scalar(2);
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& a) {
  return a.allFinite();
}

// Haar-distributed orthogonal matrix.
template <typename Scalar, typename Rng>
Matrix<Scalar> random_orthogonal(Index n, Rng& rng) {
  std::normal_distribution<double> gauss;
  Matrix<Scalar> g(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) g(i, j) = Scalar(gauss(rng));
  Eigen::HouseholderQR<Matrix<Scalar>> qr(g);
  Matrix<Scalar> q = qr.householderQ() * Matrix<Scalar>::Identity(n, n);
  Matrix<Scalar> r = qr.matrixQR();
  for (Index j = 0; j < n; ++j)
    if (r(j, j) < Scalar(0)) q.col(j) = -q.col(j);
  return q;
}

template <typename Scalar, typename Rng>
Matrix<Scalar> random_gaussian(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> gauss;
  Matrix<Scalar> g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) g(i, j) = Scalar(gauss(rng));
  return g;
}

// Row-major vectorisation, index i * cols + j.
template <typename Scalar>
Vector<Scalar> vec(const Matrix<Scalar>& a) {
  Vector<Scalar> v(a.size());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) v(i * a.cols() + j) = a(i, j);
  return v;
}

template <typename Derived>
Matrix<typename Derived::Scalar> unvec(const Eigen::MatrixBase<Derived>& v, Index rows, Index cols) {
  if (v.size() != rows * cols) throw DimensionError("unvec: size mismatch");
  Matrix<typename Derived::Scalar> a(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) a(i, j) = v(i * cols + j);
  return a;
}

}  // namespace kyfan
