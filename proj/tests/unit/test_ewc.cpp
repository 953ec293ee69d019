#include <gtest/gtest.h>

#include <cmath>

#include "embexp/toy_continual.hpp"
#include "embexp/util.hpp"

namespace embexp {
namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

FisherDiag random_fisher(Eigen::Index n, Rng& rng) {
  FisherDiag f;
  f.n = 1;
  f.values.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) f.values[i] = rng.unit() * 3.0;
  return f;
}

TEST(Fisher, QuadraticOneParameter) {
  // L = (theta - 1)^2 at theta* = 0: gradient -2, F = 4.
  const auto f = fisher_diag([](std::size_t) { return Vector::Constant(1, 2.0 * (0.0 - 1.0)); }, 1);
  EXPECT_EQ(f.values[0], 4.0);
  EXPECT_EQ(f.n, 1u);
}

TEST(Fisher, ZeroGradientsAndHomogeneity) {
  Rng rng(1);
  std::vector<Vector> grads;
  for (int j = 0; j < 7; ++j) grads.push_back(random_matrix(5, 1, rng).col(0));
  const auto zero = fisher_diag([](std::size_t) { return Vector::Zero(5); }, 7);
  EXPECT_TRUE(zero.values.isZero(0.0));
  const auto f = fisher_diag([&](std::size_t j) { return grads[j]; }, 7);
  const auto f2 = fisher_diag([&](std::size_t j) { return Vector(2.0 * grads[j]); }, 7);
  for (Eigen::Index i = 0; i < 5; ++i) {
    EXPECT_GE(f.values[i], 0.0);
    EXPECT_DOUBLE_EQ(f2.values[i], 4.0 * f.values[i]);
    double expect = 0.0;
    for (const auto& g : grads) expect += g[i] * g[i];
    EXPECT_NEAR(f.values[i], expect / 7.0, 1e-15);
  }
}

TEST(Fisher, OrderInvariantBitForBit) {
  Rng rng(2);
  std::vector<Vector> grads;
  for (int j = 0; j < 50; ++j) grads.push_back(random_matrix(9, 1, rng).col(0) * std::pow(10.0, rng.range(-3, 3)));
  const auto a = fisher_diag([&](std::size_t j) { return grads[j]; }, grads.size(), 3);
  auto shuffled = grads;
  rng.shuffle(shuffled);
  const auto b = fisher_diag([&](std::size_t j) { return shuffled[j]; }, shuffled.size(), 1);
  for (Eigen::Index i = 0; i < 9; ++i) EXPECT_EQ(a.values[i], b.values[i]);
}

TEST(Fisher, Errors) {
  EXPECT_THROW(fisher_diag([](std::size_t) { return Vector::Zero(2); }, 0), EwcError);
  EXPECT_THROW(fisher_diag([](std::size_t j) { return Vector::Zero(static_cast<Eigen::Index>(j + 1)); }, 2), EwcError);
}

TEST(EwcPenalty, Examples) {
  const FisherDiag f{Vector::Constant(1, 4.0), 1};
  EXPECT_NEAR(ewc_penalty(Vector::Constant(1, 0.3), Vector::Zero(1), f, 0.5), 0.18, 1e-15);
  EXPECT_EQ(ewc_penalty(Vector::Constant(1, 0.7), Vector::Constant(1, 0.7), f, 0.5), 0.0);
  EXPECT_EQ(ewc_penalty(Vector::Constant(1, 9.0), Vector::Zero(1), f, 0.0), 0.0);
  EXPECT_THROW(ewc_penalty(Vector::Zero(2), Vector::Zero(1), f, 1.0), EwcError);
  EXPECT_THROW(ewc_penalty(Vector::Zero(2), Vector::Zero(2), f, 1.0), EwcError);
  EXPECT_THROW(ewc_penalty(Vector::Zero(1), Vector::Zero(1), f, -1.0), EwcError);
}

TEST(LoraAdapter, InitAndValidation) {
  const auto a = LoraAdapter::init(16, 12, 8, 32.0, 3);
  EXPECT_EQ(a.scaling, 4.0);
  EXPECT_TRUE(a.B.isZero(0.0));
  EXPECT_FALSE(a.A.isZero(0.0));
  EXPECT_TRUE(a.delta().isZero(0.0));
  EXPECT_THROW(LoraAdapter::init(4, 3, 4, 32.0, 0), EwcError);
  LoraAdapter bad = a;
  bad.A = Matrix::Zero(7, 12);
  EXPECT_THROW(bad.validate(), EwcError);
}

TEST(EwcLoraPenalty, ZeroBAndFrobenius) {
  Rng rng(4);
  LoraAdapter a = LoraAdapter::init(4, 6, 2, 32.0, 5);
  const auto f = random_fisher(24, rng);
  EXPECT_EQ(ewc_lora_penalty(a, f, 2.0), 0.0);

  a.B = random_matrix(4, 1, rng);
  a.A = random_matrix(1, 6, rng);
  a.scaling = 32.0;
  const FisherDiag ones{Vector::Ones(24), 1};
  const double fro = (a.scaling * a.B * a.A).squaredNorm();
  EXPECT_NEAR(ewc_lora_penalty(a, ones, 1.0), fro, 1e-12 * fro);
  EXPECT_THROW(ewc_lora_penalty(a, random_fisher(25, rng), 1.0), EwcError);
}

// The adapter penalty equals the plain EWC penalty at theta = W* + sBA.
TEST(EwcLoraPenalty, EqualsReparameterizedEwc) {
  Rng rng(6);
  for (int trial = 0; trial < 1000; ++trial) {
    const int r = rng.range(1, 16), d = rng.range(1, 16);
    const int k = rng.range(1, std::min({4, r, d}));
    const double lambda = std::array{0.0, 0.5, 2.0}[rng.uniform(3)];
    LoraAdapter a;
    a.B = random_matrix(r, k, rng);
    a.A = random_matrix(k, d, rng);
    a.scaling = 32.0 / 8.0;
    const Matrix w_star = random_matrix(r, d, rng);
    const auto f = random_fisher(r * d, rng);
    const double lora = ewc_lora_penalty(a, f, lambda);
    const double full = ewc_penalty(lora_reparam(w_star, a), flatten(w_star), f, lambda);
    ASSERT_LE(std::abs(lora - full) / (1.0 + std::abs(full)), 1e-12) << r << "x" << d << " k=" << k;
  }
}

TEST(EwcLoraPenalty, GradientMatchesFiniteDifferences) {
  Rng rng(7);
  LoraAdapter a;
  a.B = random_matrix(6, 3, rng);
  a.A = random_matrix(3, 5, rng);
  a.scaling = 4.0;
  const auto f = random_fisher(30, rng);
  const auto g = ewc_lora_penalty_grad(a, f, 0.5);
  const double eps = 1e-6;
  for (int p = 0; p < 100; ++p) {
    const bool in_b = rng.bernoulli(0.5);
    LoraAdapter plus = a, minus = a;
    Matrix& mp = in_b ? plus.B : plus.A;
    Matrix& mm = in_b ? minus.B : minus.A;
    const auto i = static_cast<Eigen::Index>(rng.uniform(static_cast<std::size_t>(mp.rows())));
    const auto j = static_cast<Eigen::Index>(rng.uniform(static_cast<std::size_t>(mp.cols())));
    mp(i, j) += eps;
    mm(i, j) -= eps;
    const double numeric = (ewc_lora_penalty(plus, f, 0.5) - ewc_lora_penalty(minus, f, 0.5)) / (2 * eps);
    const double analytic = in_b ? g.dB(i, j) : g.dA(i, j);
    ASSERT_LE(fd_relative_error(analytic, numeric, 1e-4), 1e-5) << (in_b ? "B" : "A") << "[" << i << "," << j << "]";
  }
}

struct Fixture {
  ToyModel model{MlpShape{}};
  Vector theta_star;
  Dataset u, v;
  FisherDiag fisher_w1;
  LoraAdapter adapter;

  Fixture() {
    Rng rng(8);
    const auto& s = model.shape();
    theta_star = model.init(9);
    u = gaussian_clusters(random_matrix(s.classes, s.input, rng), 1.5, 16, 10);
    v = gaussian_clusters(random_matrix(s.classes, s.input, rng), 1.5, 16, 11);
    fisher_w1 = restrict_to_w1(model, model_fisher(model, theta_star, u, u.size()));
    adapter = LoraAdapter::init(s.hidden, s.input, 8, 32.0, 12);
    adapter.B = 0.05 * random_matrix(s.hidden, 8, rng);
  }
};

TEST(ToyModel, GradientMatchesFiniteDifferences) {
  const Fixture fx;
  const auto report = check_model_gradients(fx.model, fx.theta_star, fx.u, 200, 13);
  EXPECT_EQ(report.probes, 200u);
  EXPECT_LE(report.max_rel_error, 1e-6) << report.worst.coordinate;
}

TEST(ToyModel, CoordinateNames) {
  const ToyModel m(MlpShape{3, 2, 2});
  EXPECT_EQ(m.coordinate_name(0), "W1[0,0]");
  EXPECT_EQ(m.coordinate_name(4), "W1[1,1]");
  EXPECT_EQ(m.coordinate_name(6), "b1[0]");
  EXPECT_EQ(m.coordinate_name(9), "W2[0,1]");
  EXPECT_EQ(m.coordinate_name(12), "b2[0]");
}

TEST(RegularizedObjective, GradientMatchesFiniteDifferences) {
  const Fixture fx;
  for (double lambda : {0.0, 0.5, 2.0}) {
    const auto report = check_regularized_gradients(fx.model, fx.theta_star, fx.adapter, fx.fisher_w1, lambda, fx.v,
                                                    120, 14);
    EXPECT_EQ(report.probes, 120u);
    EXPECT_LE(report.max_rel_error, 1e-5) << "lambda " << lambda << " worst " << report.worst.coordinate;
  }
}

TEST(RegularizedObjective, LambdaZeroIsPlainAdapterLoss) {
  const Fixture fx;
  const auto r = regularized_loss_and_grad(fx.model, fx.theta_star, fx.adapter, fx.fisher_w1, 0.0, fx.v);
  EXPECT_EQ(r.penalty, 0.0);
  EXPECT_EQ(r.loss, fx.model.loss(fx.model.add_to_w1(fx.theta_star, fx.adapter.delta()), fx.v));
}

TEST(RegularizedObjective, SmallStepDescends) {
  const Fixture fx;
  const auto r = regularized_loss_and_grad(fx.model, fx.theta_star, fx.adapter, fx.fisher_w1, 2.0, fx.v);
  LoraAdapter next = fx.adapter;
  next.B -= 1e-4 * r.grad.dB;
  next.A -= 1e-4 * r.grad.dA;
  EXPECT_LT(regularized_loss_and_grad(fx.model, fx.theta_star, next, fx.fisher_w1, 2.0, fx.v).loss, r.loss);
}

const DemoReport& demo() {
  static const DemoReport r = toy_continual_demo(DemoConfig{}, {0.0, 0.5, 2.0, 300.0});
  return r;
}

const RegimeSummary& regime(const DemoReport& r, std::string_view name) {
  for (const auto& s : r.regimes) {
    if (s.regime == name) return s;
  }
  throw std::runtime_error("no regime");
}

TEST(ToyDemo, ForgettingOrdering) {
  const auto& r = demo();
  ASSERT_EQ(r.regimes.size(), 4u);
  const auto& full = regime(r, "full_finetune");
  const auto& adapter = regime(r, "adapter_only");
  const auto& ewc_adapter = regime(r, "ewc_adapter");
  EXPECT_LE(ewc_adapter.degradation(), adapter.degradation());
  EXPECT_LE(adapter.degradation(), full.degradation());
  EXPECT_LE(std::abs(ewc_adapter.task_V_accuracy - adapter.task_V_accuracy), 0.05);
  for (const auto& s : r.regimes) EXPECT_LE(s.degradation(), full.degradation()) << s.regime;
}

TEST(ToyDemo, LambdaZeroIsAdapterOnlyBitForBit) {
  const auto& r = demo();
  const auto& adapter = regime(r, "adapter_only");
  ASSERT_EQ(r.lambda_sweep[0].lambda, 0.0);
  EXPECT_TRUE(r.lambda_sweep[0].theta == adapter.theta);
  EXPECT_EQ(r.lambda_sweep[0].task_U_loss_after, adapter.task_U_loss_after);
}

TEST(ToyDemo, RetentionMonotoneInLambda) {
  const auto& sweep = demo().lambda_sweep;
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    EXPECT_LE(sweep[i].degradation(), sweep[i - 1].degradation()) << "lambda " << sweep[i].lambda;
    EXPECT_LT(sweep[i].fisher_distance, sweep[i - 1].fisher_distance) << "lambda " << sweep[i].lambda;
  }
  // A dominating penalty pulls the Fisher-weighted displacement toward zero.
  EXPECT_LT(sweep.back().fisher_distance, 0.5 * sweep.front().fisher_distance);
}

TEST(ToyDemo, DeterministicAndSerializable) {
  const auto again = toy_continual_demo(DemoConfig{}, {0.0, 0.5, 2.0, 300.0});
  EXPECT_EQ(to_json(again).dump(), to_json(demo()).dump());
  const auto j = to_json(demo().regimes[0]);
  for (const char* key : {"regime", "task_U_loss_before", "task_U_loss_after", "task_V_accuracy"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_NE(format_demo(demo()).find("ewc_adapter"), std::string::npos);
}

TEST(ToyDemo, ConfigValidation) {
  DemoConfig cfg;
  cfg.rank = 17;
  EXPECT_THROW(toy_continual_demo(cfg), EwcError);
  cfg = DemoConfig{};
  EXPECT_THROW(toy_continual_demo(cfg, {-1.0}), EwcError);
}

}  // namespace
}  // namespace embexp
