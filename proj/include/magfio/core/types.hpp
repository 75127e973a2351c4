#pragma once

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace magfio {

using Real = double;
using Complex = std::complex<double>;

inline constexpr int kMaxDim = 3;
inline constexpr int kMaxPhaseDim = 2 * kMaxDim;
inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kPi = std::numbers::pi;

// Small stack-allocated vectors/matrices; the maximum sizes cover d <= 3.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using CVec = Eigen::Matrix<Complex, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using CMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using PhaseVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxPhaseDim, 1>;
using PhaseMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxPhaseDim, kMaxPhaseDim>;

using DenseMatrix = Eigen::MatrixXcd;
using DenseVector = Eigen::VectorXcd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input, unknown names, dimension mismatch.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Divergence, non-convergence, non-finite values.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class FlowError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Resource limit (dense size, jet order) exceeded.
class CapError : public Error {
 public:
  using Error::Error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

inline Vec make_vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline PhaseVec join(const Vec& x, const Vec& xi) {
  PhaseVec out(x.size() + xi.size());
  out << x, xi;
  return out;
}

inline Vec head(const PhaseVec& X) { return X.head(X.size() / 2); }
inline Vec tail(const PhaseVec& X) { return X.tail(X.size() / 2); }

}  // namespace magfio
