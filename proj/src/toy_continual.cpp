#include "embexp/toy_continual.hpp"

#include <cmath>
#include <cstdio>

#include "embexp/util.hpp"

namespace embexp {

Dataset Dataset::sample(std::size_t i) const {
  Dataset d;
  d.X = X.row(static_cast<Eigen::Index>(i));
  d.y = {y[i]};
  return d;
}

Dataset gaussian_clusters(const Matrix& centers, double sigma, int per_class, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  const auto n = centers.rows() * per_class;
  d.X.resize(n, centers.cols());
  d.y.reserve(static_cast<std::size_t>(n));
  Eigen::Index row = 0;
  // Interleave classes so any prefix is balanced.
  for (int k = 0; k < per_class; ++k) {
    for (Eigen::Index c = 0; c < centers.rows(); ++c, ++row) {
      for (Eigen::Index j = 0; j < centers.cols(); ++j) d.X(row, j) = centers(c, j) + sigma * rng.normal();
      d.y.push_back(static_cast<int>(c));
    }
  }
  return d;
}

namespace {

struct Views {
  Eigen::Map<const Matrix> W1;
  Eigen::Map<const Vector> b1;
  Eigen::Map<const Matrix> W2;
  Eigen::Map<const Vector> b2;
};

Views views(const MlpShape& s, const Vector& theta) {
  const double* p = theta.data();
  const auto h = static_cast<Eigen::Index>(s.hidden);
  const auto in = static_cast<Eigen::Index>(s.input);
  const auto c = static_cast<Eigen::Index>(s.classes);
  return {Eigen::Map<const Matrix>(p, h, in), Eigen::Map<const Vector>(p + h * in, h),
          Eigen::Map<const Matrix>(p + h * in + h, c, h), Eigen::Map<const Vector>(p + h * in + h + c * h, c)};
}

}  // namespace

ToyModel::ToyModel(MlpShape shape) : shape_(shape) {
  if (shape.input < 1 || shape.hidden < 1 || shape.classes < 2) throw EwcError("bad toy model shape");
}

Vector ToyModel::init(std::uint64_t seed) const {
  Rng rng(seed);
  Vector theta = Vector::Zero(n_params());
  const auto w1 = shape_.w1_size();
  const auto w2_start = w1 + shape_.hidden;
  const auto w2_size = static_cast<Eigen::Index>(shape_.classes) * shape_.hidden;
  for (Eigen::Index i = 0; i < w1; ++i) theta[i] = rng.normal() / std::sqrt(static_cast<double>(shape_.input));
  for (Eigen::Index i = 0; i < w2_size; ++i) {
    theta[w2_start + i] = rng.normal() / std::sqrt(static_cast<double>(shape_.hidden));
  }
  return theta;
}

double ToyModel::loss(const Vector& theta, const Dataset& data, Vector* grad) const {
  if (theta.size() != n_params()) throw EwcError("theta has the wrong size");
  if (data.X.cols() != shape_.input) throw EwcError("data has the wrong input width");
  const auto v = views(shape_, theta);
  const auto n = static_cast<double>(data.size());

  const Matrix hidden = ((data.X * v.W1.transpose()).rowwise() + v.b1.transpose()).array().tanh().matrix();
  Matrix logits = (hidden * v.W2.transpose()).rowwise() + v.b2.transpose();
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    total += lse - logits(i, data.y[static_cast<std::size_t>(i)]);
    // Turn the row into softmax probabilities for the backward pass.
    logits.row(i) = (logits.row(i).array() - lse).exp().matrix();
  }
  if (grad == nullptr) return total / n;

  Matrix dz2 = logits;
  for (Eigen::Index i = 0; i < dz2.rows(); ++i) dz2(i, data.y[static_cast<std::size_t>(i)]) -= 1.0;
  dz2 /= n;
  const Matrix dz1 = ((dz2 * v.W2).array() * (1.0 - hidden.array().square())).matrix();

  grad->resize(n_params());
  const auto h = static_cast<Eigen::Index>(shape_.hidden);
  const auto in = static_cast<Eigen::Index>(shape_.input);
  const auto c = static_cast<Eigen::Index>(shape_.classes);
  double* g = grad->data();
  Eigen::Map<Matrix>(g, h, in) = dz1.transpose() * data.X;
  Eigen::Map<Vector>(g + h * in, h) = dz1.colwise().sum().transpose();
  Eigen::Map<Matrix>(g + h * in + h, c, h) = dz2.transpose() * hidden;
  Eigen::Map<Vector>(g + h * in + h + c * h, c) = dz2.colwise().sum().transpose();
  return total / n;
}

double ToyModel::accuracy(const Vector& theta, const Dataset& data) const {
  const auto v = views(shape_, theta);
  const Matrix hidden = ((data.X * v.W1.transpose()).rowwise() + v.b1.transpose()).array().tanh().matrix();
  const Matrix logits = (hidden * v.W2.transpose()).rowwise() + v.b2.transpose();
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    logits.row(i).maxCoeff(&best);
    if (best == data.y[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

Matrix ToyModel::w1(const Vector& theta) const { return views(shape_, theta).W1; }

Vector ToyModel::add_to_w1(const Vector& theta, const Matrix& delta) const {
  if (delta.rows() != shape_.hidden || delta.cols() != shape_.input) throw EwcError("W1 update has the wrong shape");
  Vector out = theta;
  Eigen::Map<Matrix>(out.data(), shape_.hidden, shape_.input) += delta;
  return out;
}

std::string ToyModel::coordinate_name(Eigen::Index i) const {
  const auto h = static_cast<Eigen::Index>(shape_.hidden);
  const auto in = static_cast<Eigen::Index>(shape_.input);
  const auto c = static_cast<Eigen::Index>(shape_.classes);
  auto two = [](const char* name, Eigen::Index k, Eigen::Index cols) {
    return std::string(name) + "[" + std::to_string(k / cols) + "," + std::to_string(k % cols) + "]";
  };
  if (i < h * in) return two("W1", i, in);
  i -= h * in;
  if (i < h) return "b1[" + std::to_string(i) + "]";
  i -= h;
  if (i < c * h) return two("W2", i, h);
  return "b2[" + std::to_string(i - c * h) + "]";
}

FisherDiag model_fisher(const ToyModel& model, const Vector& theta_star, const Dataset& data, std::size_t n,
                        unsigned jobs) {
  if (n > data.size()) throw EwcError("model_fisher: more samples requested than available");
  return fisher_diag(
      [&](std::size_t j) {
        Vector g;
        model.loss(theta_star, data.sample(j), &g);
        return g;
      },
      n, jobs);
}

FisherDiag restrict_to_w1(const ToyModel& model, const FisherDiag& full) {
  if (full.values.size() != model.n_params()) throw EwcError("restrict_to_w1: Fisher has the wrong size");
  return {full.values.head(model.shape().w1_size()), full.n};
}

RegularizedLoss regularized_loss_and_grad(const ToyModel& model, const Vector& theta_star, const LoraAdapter& adapter,
                                          const FisherDiag& fisher_w1, double lambda, const Dataset& batch) {
  adapter.validate();
  Vector g;
  RegularizedLoss out;
  out.loss = model.loss(model.add_to_w1(theta_star, adapter.delta()), batch, &g);
  const auto& s = model.shape();
  const Eigen::Map<const Matrix> gw1(g.data(), s.hidden, s.input);
  out.grad.dB = adapter.scaling * gw1 * adapter.A.transpose();
  out.grad.dA = adapter.scaling * adapter.B.transpose() * gw1;
  out.penalty = ewc_lora_penalty(adapter, fisher_w1, lambda);
  const auto pg = ewc_lora_penalty_grad(adapter, fisher_w1, lambda);
  out.loss += out.penalty;
  out.grad.dB += pg.dB;
  out.grad.dA += pg.dA;
  return out;
}

FdReport check_regularized_gradients(const ToyModel& model, const Vector& theta_star, const LoraAdapter& adapter,
                                     const FisherDiag& fisher_w1, double lambda, const Dataset& batch,
                                     std::size_t probes, std::uint64_t seed, double eps, double floor) {
  const auto base = regularized_loss_and_grad(model, theta_star, adapter, fisher_w1, lambda, batch);
  Rng rng(seed);
  FdReport report;
  for (std::size_t p = 0; p < probes; ++p) {
    const bool in_b = rng.bernoulli(0.5);
    LoraAdapter plus = adapter;
    Matrix& mp = in_b ? plus.B : plus.A;
    const auto i = rng.uniform(static_cast<std::size_t>(mp.rows()));
    const auto j = rng.uniform(static_cast<std::size_t>(mp.cols()));
    const auto r = static_cast<Eigen::Index>(i);
    const auto c = static_cast<Eigen::Index>(j);
    LoraAdapter minus = adapter;
    Matrix& mm = in_b ? minus.B : minus.A;
    mp(r, c) += eps;
    mm(r, c) -= eps;
    const double numeric = (regularized_loss_and_grad(model, theta_star, plus, fisher_w1, lambda, batch).loss -
                            regularized_loss_and_grad(model, theta_star, minus, fisher_w1, lambda, batch).loss) /
                           (2.0 * eps);
    const double analytic = in_b ? base.grad.dB(r, c) : base.grad.dA(r, c);
    const double err = fd_relative_error(analytic, numeric, floor);
    ++report.probes;
    if (report.probes == 1 || err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst = {std::string(in_b ? "B" : "A") + "[" + std::to_string(i) + "," + std::to_string(j) + "]",
                      analytic, numeric, err};
    }
  }
  return report;
}

FdReport check_model_gradients(const ToyModel& model, const Vector& theta, const Dataset& batch, std::size_t probes,
                               std::uint64_t seed, double eps, double floor) {
  Vector g;
  model.loss(theta, batch, &g);
  Rng rng(seed);
  FdReport report;
  for (std::size_t p = 0; p < probes; ++p) {
    const auto i = static_cast<Eigen::Index>(rng.uniform(static_cast<std::size_t>(theta.size())));
    Vector plus = theta, minus = theta;
    plus[i] += eps;
    minus[i] -= eps;
    const double numeric = (model.loss(plus, batch) - model.loss(minus, batch)) / (2.0 * eps);
    const double err = fd_relative_error(g[i], numeric, floor);
    ++report.probes;
    if (report.probes == 1 || err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst = {model.coordinate_name(i), g[i], numeric, err};
    }
  }
  return report;
}

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::FullFinetune: return "full_finetune";
    case Regime::Ewc: return "ewc";
    case Regime::AdapterOnly: return "adapter_only";
    case Regime::EwcAdapter: return "ewc_adapter";
  }
  return "?";
}

void DemoConfig::validate() const {
  if (per_class < 1) throw EwcError("per_class must be positive");
  if (pretrain_steps < 0 || finetune_steps < 0) throw EwcError("step counts must be non-negative");
  if (!(lambda >= 0.0)) throw EwcError("lambda must be non-negative");
  if (rank < 1 || rank > std::min(shape.hidden, shape.input)) throw EwcError("adapter rank outside [1, min(r, d)]");
  if (fisher_samples == 0) throw EwcError("fisher_samples must be positive");
}

namespace {

struct Tasks {
  Dataset u_train, u_test, v_train, v_test;
};

Matrix random_centers(const DemoConfig& cfg, std::uint64_t seed, bool first_half) {
  Rng rng(seed);
  Matrix c(cfg.shape.classes, cfg.shape.input);
  const auto half = c.cols() / 2;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      const bool used = !cfg.split_subspaces || (j < half) == first_half;
      c(i, j) = used ? cfg.center_scale * rng.normal() : 0.0;
    }
  }
  return c;
}

Tasks make_tasks(const DemoConfig& cfg) {
  const Matrix cu = random_centers(cfg, stage_seed(cfg.seed, "centers-U"), true);
  const Matrix cv = random_centers(cfg, stage_seed(cfg.seed, "centers-V"), false);
  return {gaussian_clusters(cu, cfg.sigma, cfg.per_class, stage_seed(cfg.seed, "U-train")),
          gaussian_clusters(cu, cfg.sigma, cfg.per_class, stage_seed(cfg.seed, "U-test")),
          gaussian_clusters(cv, cfg.sigma, cfg.per_class, stage_seed(cfg.seed, "V-train")),
          gaussian_clusters(cv, cfg.sigma, cfg.per_class, stage_seed(cfg.seed, "V-test"))};
}

Vector train_full(const ToyModel& model, Vector theta, const Dataset& data, int steps, double rate,
                  const FisherDiag* fisher, const Vector* anchor, double lambda) {
  Vector g;
  for (int t = 0; t < steps; ++t) {
    model.loss(theta, data, &g);
    if (fisher != nullptr) g.array() += 2.0 * lambda * fisher->values.array() * (theta - *anchor).array();
    theta -= rate * g;
  }
  return theta;
}

// fisher_w1 == nullptr trains the adapter with no penalty term at all.
LoraAdapter train_adapter(const ToyModel& model, const Vector& theta_star, LoraAdapter adapter, const Dataset& data,
                          int steps, double rate, const FisherDiag* fisher_w1, double lambda) {
  const auto& s = model.shape();
  Vector g;
  for (int t = 0; t < steps; ++t) {
    model.loss(model.add_to_w1(theta_star, adapter.delta()), data, &g);
    const Eigen::Map<const Matrix> gw1(g.data(), s.hidden, s.input);
    Matrix dB = adapter.scaling * gw1 * adapter.A.transpose();
    Matrix dA = adapter.scaling * adapter.B.transpose() * gw1;
    if (fisher_w1 != nullptr) {
      const auto pg = ewc_lora_penalty_grad(adapter, *fisher_w1, lambda);
      dB += pg.dB;
      dA += pg.dA;
    }
    adapter.B -= rate * dB;
    adapter.A -= rate * dA;
  }
  return adapter;
}

RegimeSummary summarize(const ToyModel& model, Regime r, double lambda, const Vector& theta_star, Vector theta,
                        const Tasks& tasks, const FisherDiag& fisher) {
  RegimeSummary out;
  out.regime = regime_name(r);
  out.lambda = lambda;
  out.task_U_loss_before = model.loss(theta_star, tasks.u_test);
  out.task_U_loss_after = model.loss(theta, tasks.u_test);
  out.task_V_accuracy = model.accuracy(theta, tasks.v_test);
  out.task_U_accuracy_after = model.accuracy(theta, tasks.u_test);
  out.w1_displacement = (model.w1(theta) - model.w1(theta_star)).norm();
  out.fisher_distance = ewc_penalty(theta, theta_star, fisher, 1.0);
  out.theta = std::move(theta);
  return out;
}

}  // namespace

DemoReport toy_continual_demo(const DemoConfig& cfg, const std::vector<double>& sweep) {
  cfg.validate();
  for (double l : sweep) {
    if (!(l >= 0.0)) throw EwcError("lambda must be non-negative");
  }
  const ToyModel model(cfg.shape);
  const auto tasks = make_tasks(cfg);
  const Vector theta_star = train_full(model, model.init(stage_seed(cfg.seed, "init")), tasks.u_train,
                                       cfg.pretrain_steps, cfg.pretrain_rate, nullptr, nullptr, 0.0);
  const auto fisher = model_fisher(model, theta_star, tasks.u_train,
                                   std::min(cfg.fisher_samples, tasks.u_train.size()), cfg.jobs);
  const auto fisher_w1 = restrict_to_w1(model, fisher);
  const auto adapter0 = LoraAdapter::init(cfg.shape.hidden, cfg.shape.input, cfg.rank, cfg.coefficient,
                                          stage_seed(cfg.seed, "adapter"));

  auto adapter_run = [&](const FisherDiag* f, double lambda) {
    const auto a = train_adapter(model, theta_star, adapter0, tasks.v_train, cfg.finetune_steps, cfg.adapter_rate, f,
                                 lambda);
    return model.add_to_w1(theta_star, a.delta());
  };

  DemoReport report;
  for (Regime r : kRegimes) {
    Vector theta;
    double lambda = 0.0;
    switch (r) {
      case Regime::FullFinetune:
        theta = train_full(model, theta_star, tasks.v_train, cfg.finetune_steps, cfg.full_rate, nullptr, nullptr, 0.0);
        break;
      case Regime::Ewc:
        lambda = cfg.lambda;
        theta = train_full(model, theta_star, tasks.v_train, cfg.finetune_steps, cfg.full_rate, &fisher, &theta_star,
                           lambda);
        break;
      case Regime::AdapterOnly:
        theta = adapter_run(nullptr, 0.0);
        break;
      case Regime::EwcAdapter:
        lambda = cfg.lambda;
        theta = adapter_run(&fisher_w1, lambda);
        break;
    }
    report.regimes.push_back(summarize(model, r, lambda, theta_star, std::move(theta), tasks, fisher));
  }
  for (double l : sweep) {
    report.lambda_sweep.push_back(
        summarize(model, Regime::EwcAdapter, l, theta_star, adapter_run(&fisher_w1, l), tasks, fisher));
  }
  return report;
}

nlohmann::ordered_json to_json(const RegimeSummary& r) {
  nlohmann::ordered_json out;
  out["regime"] = r.regime;
  out["lambda"] = r.lambda;
  out["task_U_loss_before"] = r.task_U_loss_before;
  out["task_U_loss_after"] = r.task_U_loss_after;
  out["task_V_accuracy"] = r.task_V_accuracy;
  out["task_U_accuracy_after"] = r.task_U_accuracy_after;
  out["w1_displacement"] = r.w1_displacement;
  out["fisher_distance"] = r.fisher_distance;
  return out;
}

nlohmann::ordered_json to_json(const DemoReport& r) {
  nlohmann::ordered_json out;
  out["regimes"] = nlohmann::ordered_json::array();
  for (const auto& s : r.regimes) out["regimes"].push_back(to_json(s));
  out["lambda_sweep"] = nlohmann::ordered_json::array();
  for (const auto& s : r.lambda_sweep) out["lambda_sweep"].push_back(to_json(s));
  return out;
}

std::string format_demo(const DemoReport& r) {
  std::string out = "regime          lambda  U loss before  U loss after  degradation  V acc   U acc\n";
  char buf[200];
  auto row = [&](const RegimeSummary& s) {
    std::snprintf(buf, sizeof buf, "%-15s %6.2f  %13.4f  %12.4f  %11.4f  %5.1f  %5.1f\n", s.regime.c_str(), s.lambda,
                  s.task_U_loss_before, s.task_U_loss_after, s.degradation(), 100.0 * s.task_V_accuracy,
                  100.0 * s.task_U_accuracy_after);
    out += buf;
  };
  for (const auto& s : r.regimes) row(s);
  if (!r.lambda_sweep.empty()) {
    out += "lambda sweep (ewc_adapter)\n";
    for (const auto& s : r.lambda_sweep) row(s);
  }
  return out;
}

}  // namespace embexp
