#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace embexp {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

class EwcError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Low-rank update scaling * B * A for an r x d weight matrix.
struct LoraAdapter {
  Matrix B;  // r x k
  Matrix A;  // k x d
  double scaling = 32.0 / 8.0;

  static constexpr int kDefaultRank = 8;
  static constexpr double kDefaultCoefficient = 32.0;

  Eigen::Index rows() const { return B.rows(); }
  Eigen::Index cols() const { return A.cols(); }
  Eigen::Index rank() const { return B.cols(); }

  /// H = scaling * B * A.
  Matrix delta() const { return scaling * (B * A); }

  /// Throws EwcError unless B is r x k, A is k x d and k <= min(r, d).
  void validate() const;

  /// B = 0 and A drawn from N(0, 1/d), so the adapted model starts at W*.
  static LoraAdapter init(Eigen::Index r, Eigen::Index d, Eigen::Index k, double coefficient, std::uint64_t seed);
};

struct FisherDiag {
  Vector values;
  std::size_t n = 0;
};

/// Empirical diagonal Fisher: F_ii = (1/N) sum_j g_j,i^2 over N per-sample
/// gradients. The squares of each coordinate are summed in sorted order, so
/// the result does not depend on sample order. Throws EwcError when N = 0 or
/// gradient sizes differ.
FisherDiag fisher_diag(const std::function<Vector(std::size_t)>& sample_gradient, std::size_t n,
                       unsigned jobs = 1);

/// lambda * sum_i F_ii (theta_i - theta*_i)^2.
double ewc_penalty(const Vector& theta, const Vector& theta_star, const FisherDiag& fisher, double lambda);

/// The same penalty for theta = flatten(W* + scaling*B*A), computed from
/// H = scaling*B*A alone. `fisher` covers the r x d matrix, row-major.
double ewc_lora_penalty(const LoraAdapter& adapter, const FisherDiag& fisher, double lambda);

struct AdapterGrad {
  Matrix dB;
  Matrix dA;
};

/// Gradient of ewc_lora_penalty:
///   dB = 2 lambda s^2 (F o BA) A^T,  dA = 2 lambda s^2 B^T (F o BA).
AdapterGrad ewc_lora_penalty_grad(const LoraAdapter& adapter, const FisherDiag& fisher, double lambda);

/// Row-major flattening of W* + scaling*B*A.
Vector lora_reparam(const Matrix& w_star, const LoraAdapter& adapter);

/// Row-major flattening.
Vector flatten(const Matrix& m);

struct FdProbe {
  std::string coordinate;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct FdReport {
  std::size_t probes = 0;
  double max_rel_error = 0.0;
  /// Worst probe; its coordinate names the parameter.
  FdProbe worst;
  bool passed(double tol) const { return max_rel_error <= tol; }
};

/// |analytic - numeric| / max(|analytic|, |numeric|, floor).
double fd_relative_error(double analytic, double numeric, double floor);

}  // namespace embexp
