#include "embexp/ewc_lora.hpp"

#include <algorithm>
#include <cmath>

#include "embexp/util.hpp"

namespace embexp {
namespace {

void check_fisher_size(const FisherDiag& f, Eigen::Index size, const char* what) {
  if (f.values.size() != size) {
    throw EwcError(std::string(what) + ": Fisher has " + std::to_string(f.values.size()) + " entries, expected " +
                   std::to_string(size));
  }
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0)) throw EwcError("lambda must be non-negative");
}

// F reshaped to r x d without copying.
Eigen::Map<const Matrix> fisher_matrix(const FisherDiag& f, Eigen::Index r, Eigen::Index d) {
  return Eigen::Map<const Matrix>(f.values.data(), r, d);
}

}  // namespace

void LoraAdapter::validate() const {
  if (B.cols() != A.rows()) {
    throw EwcError("adapter rank mismatch: B is " + std::to_string(B.rows()) + "x" + std::to_string(B.cols()) +
                   ", A is " + std::to_string(A.rows()) + "x" + std::to_string(A.cols()));
  }
  if (rank() < 1 || rank() > std::min(rows(), cols())) {
    throw EwcError("adapter rank " + std::to_string(rank()) + " outside [1, min(r, d)]");
  }
  if (!(scaling > 0.0)) throw EwcError("adapter scaling must be positive");
}

LoraAdapter LoraAdapter::init(Eigen::Index r, Eigen::Index d, Eigen::Index k, double coefficient,
                              std::uint64_t seed) {
  LoraAdapter a;
  a.B = Matrix::Zero(r, k);
  a.A = Matrix(k, d);
  a.scaling = coefficient / static_cast<double>(k);
  Rng rng(seed);
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  for (Eigen::Index i = 0; i < a.A.size(); ++i) a.A.data()[i] = sd * rng.normal();
  a.validate();
  return a;
}

FisherDiag fisher_diag(const std::function<Vector(std::size_t)>& sample_gradient, std::size_t n, unsigned jobs) {
  if (n == 0) throw EwcError("fisher_diag needs at least one sample");
  const auto grads = parallel_map(n, jobs, [&](std::size_t j) { return sample_gradient(j); });
  const auto p = grads[0].size();
  for (std::size_t j = 0; j < n; ++j) {
    if (grads[j].size() != p) throw EwcError("sample " + std::to_string(j) + " has a gradient of different size");
  }
  FisherDiag f;
  f.n = n;
  f.values = Vector::Zero(p);
  std::vector<double> sq(n);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < n; ++j) sq[j] = grads[j][i] * grads[j][i];
    std::sort(sq.begin(), sq.end());
    double sum = 0.0;
    for (double v : sq) sum += v;
    f.values[i] = sum / static_cast<double>(n);
  }
  return f;
}

double ewc_penalty(const Vector& theta, const Vector& theta_star, const FisherDiag& fisher, double lambda) {
  if (theta.size() != theta_star.size()) throw EwcError("ewc_penalty: theta and theta* differ in size");
  check_fisher_size(fisher, theta.size(), "ewc_penalty");
  check_lambda(lambda);
  return lambda * (fisher.values.array() * (theta - theta_star).array().square()).sum();
}

double ewc_lora_penalty(const LoraAdapter& adapter, const FisherDiag& fisher, double lambda) {
  adapter.validate();
  check_fisher_size(fisher, adapter.rows() * adapter.cols(), "ewc_lora_penalty");
  check_lambda(lambda);
  const Matrix h = adapter.delta();
  return lambda * (fisher_matrix(fisher, h.rows(), h.cols()).array() * h.array().square()).sum();
}

AdapterGrad ewc_lora_penalty_grad(const LoraAdapter& adapter, const FisherDiag& fisher, double lambda) {
  adapter.validate();
  check_fisher_size(fisher, adapter.rows() * adapter.cols(), "ewc_lora_penalty_grad");
  check_lambda(lambda);
  const double s = adapter.scaling;
  const Matrix fba = (fisher_matrix(fisher, adapter.rows(), adapter.cols()).array() *
                      (adapter.B * adapter.A).array())
                         .matrix();
  const double c = 2.0 * lambda * s * s;
  return {c * fba * adapter.A.transpose(), c * adapter.B.transpose() * fba};
}

Vector flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Vector lora_reparam(const Matrix& w_star, const LoraAdapter& adapter) {
  adapter.validate();
  if (w_star.rows() != adapter.rows() || w_star.cols() != adapter.cols()) {
    throw EwcError("lora_reparam: W* and adapter shapes differ");
  }
  return flatten(w_star + adapter.delta());
}

double fd_relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

}  // namespace embexp
