#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "embexp/ewc_lora.hpp"

namespace embexp {

struct Dataset {
  Matrix X;  // n x input
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
  Dataset sample(std::size_t i) const;
};

/// per_class points around each row of `centers` with isotropic noise sigma;
/// the label of a point is the index of its center.
Dataset gaussian_clusters(const Matrix& centers, double sigma, int per_class, std::uint64_t seed);

struct MlpShape {
  int input = 16;
  int hidden = 16;
  int classes = 4;

  Eigen::Index w1_size() const { return static_cast<Eigen::Index>(hidden) * input; }
  Eigen::Index size() const { return w1_size() + hidden + static_cast<Eigen::Index>(classes) * hidden + classes; }
};

/// logits = W2 tanh(W1 x + b1) + b2 with mean softmax cross-entropy.
/// Parameters are one flat vector: W1 (row-major), b1, W2 (row-major), b2.
/// W1 is the matrix the adapter attaches to.
class ToyModel {
 public:
  explicit ToyModel(MlpShape shape = {});

  const MlpShape& shape() const { return shape_; }
  Eigen::Index n_params() const { return shape_.size(); }

  Vector init(std::uint64_t seed) const;

  /// Mean loss over `data`; fills `grad` when non-null.
  double loss(const Vector& theta, const Dataset& data, Vector* grad = nullptr) const;
  double accuracy(const Vector& theta, const Dataset& data) const;

  Matrix w1(const Vector& theta) const;
  /// theta with W1 replaced by W1 + delta.
  Vector add_to_w1(const Vector& theta, const Matrix& delta) const;
  /// Human-readable name of flat coordinate i, e.g. "W1[3,5]" or "b2[1]".
  std::string coordinate_name(Eigen::Index i) const;

 private:
  MlpShape shape_;
};

/// Per-sample empirical Fisher of `model` at theta_star over the first n samples.
FisherDiag model_fisher(const ToyModel& model, const Vector& theta_star, const Dataset& data, std::size_t n,
                        unsigned jobs = 1);

/// The W1 block of a full-model Fisher.
FisherDiag restrict_to_w1(const ToyModel& model, const FisherDiag& full);

struct RegularizedLoss {
  double loss = 0.0;
  double penalty = 0.0;
  AdapterGrad grad;
};

/// L_V at W1* + s*B*A plus the EWC-LoRA penalty; gradients for B and A only.
RegularizedLoss regularized_loss_and_grad(const ToyModel& model, const Vector& theta_star, const LoraAdapter& adapter,
                                          const FisherDiag& fisher_w1, double lambda, const Dataset& batch);

/// Central differences on random entries of B and A against
/// regularized_loss_and_grad.
FdReport check_regularized_gradients(const ToyModel& model, const Vector& theta_star, const LoraAdapter& adapter,
                                     const FisherDiag& fisher_w1, double lambda, const Dataset& batch,
                                     std::size_t probes, std::uint64_t seed, double eps = 1e-6,
                                     double floor = 1e-4);

/// Central differences on random coordinates of theta against ToyModel::loss.
FdReport check_model_gradients(const ToyModel& model, const Vector& theta, const Dataset& batch, std::size_t probes,
                               std::uint64_t seed, double eps = 1e-6, double floor = 1e-4);

enum class Regime { FullFinetune, Ewc, AdapterOnly, EwcAdapter };
inline constexpr std::array<Regime, 4> kRegimes{Regime::FullFinetune, Regime::Ewc, Regime::AdapterOnly,
                                                Regime::EwcAdapter};
std::string regime_name(Regime r);

struct DemoConfig {
  std::uint64_t seed = 0;
  MlpShape shape{};
  int per_class = 64;
  double center_scale = 2.0;
  /// U centers live in the first half of the input coordinates and V centers
  /// in the second half; noise covers all of them.
  bool split_subspaces = true;
  double sigma = 1.5;
  int pretrain_steps = 400;
  double pretrain_rate = 0.5;
  int finetune_steps = 300;
  double full_rate = 0.3;
  double adapter_rate = 0.004;
  int rank = LoraAdapter::kDefaultRank;
  double coefficient = LoraAdapter::kDefaultCoefficient;
  double lambda = 0.5;
  std::size_t fisher_samples = 256;
  unsigned jobs = 1;

  void validate() const;
};

struct RegimeSummary {
  std::string regime;
  double lambda = 0.0;
  double task_U_loss_before = 0.0;
  double task_U_loss_after = 0.0;
  double task_V_accuracy = 0.0;
  double task_U_accuracy_after = 0.0;
  /// Frobenius norm of the change to W1.
  double w1_displacement = 0.0;
  /// sum_i F_ii (theta_i - theta*_i)^2 with the task-U Fisher.
  double fisher_distance = 0.0;
  /// Final trained parameters, for bit-for-bit comparisons.
  Vector theta;

  double degradation() const { return task_U_loss_after - task_U_loss_before; }
};

struct DemoReport {
  std::vector<RegimeSummary> regimes;
  /// EWC-adapter at each requested lambda, in the given order.
  std::vector<RegimeSummary> lambda_sweep;
};

/// Pretrains on task U, then finetunes on task V under each regime. EWC and
/// EWC-adapter use cfg.lambda; the sweep reruns EWC-adapter per lambda.
DemoReport toy_continual_demo(const DemoConfig& cfg, const std::vector<double>& sweep = {0.0, 0.5, 2.0});

nlohmann::ordered_json to_json(const RegimeSummary& r);
nlohmann::ordered_json to_json(const DemoReport& r);
std::string format_demo(const DemoReport& r);

}  // namespace embexp
