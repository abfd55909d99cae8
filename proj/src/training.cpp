#include "keynet/training.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <string>

#include "keynet/error.hpp"

namespace keynet {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw InvalidArgument("momentum must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) throw InvalidArgument("weight decay must be non-negative");
  if (patience < 1) throw InvalidArgument("patience must be at least 1");
  if (max_epochs < 1) throw InvalidArgument("max_epochs must be at least 1");
}

TrainState TrainState::start(ModelParams initial, const TrainConfig& config) {
  TrainState s;
  s.velocity = initial;
  for (Tensor* t : s.velocity.tensors()) t->fill(0.0f);
  s.best_params = initial;
  s.params = std::move(initial);
  s.current_lr = config.learning_rate;
  return s;
}

double cross_entropy_loss(std::span<const double> probs, KeyLabel target) {
  if (probs.size() != kNumKeyClasses) {
    throw InvalidArgument("cross_entropy_loss: expected 24 probabilities");
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw InvalidArgument("cross_entropy_loss: probabilities must lie in [0, 1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw InvalidArgument("cross_entropy_loss: probabilities do not sum to 1");
  }
  const double p = probs[static_cast<std::size_t>(target.class_index())];
  return -std::log(std::max(p, 1e-12));
}

template <class Real>
GradientResult<Real> compute_gradients(const LogFiltSpec& spec, KeyLabel target,
                                       const BasicModelParams<Real>& params) {
  ForwardTrace<Real> tr = forward_trace(spec, params);
  GradientResult<Real> r;
  r.probs = tr.probs;
  r.loss = cross_entropy_loss(tr.probs, target);

  BasicModelParams<Real>& g = r.grads;
  g = params;
  for (auto* t : g.tensors()) t->fill(Real(0));

  // Softmax followed by cross-entropy: dL/dlogits = p - onehot.
  std::vector<double> dlogits = tr.probs;
  dlogits[static_cast<std::size_t>(target.class_index())] -= 1.0;

  const std::size_t U = tr.pooled.size();
  const std::size_t K = kNumKeyClasses;
  std::vector<double> dpooled(U, 0.0);
  for (std::size_t k = 0; k < K; ++k) g.out_bias[k] = static_cast<Real>(dlogits[k]);
  for (std::size_t u = 0; u < U; ++u) {
    double acc = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      g.out_weight[u * K + k] = static_cast<Real>(static_cast<double>(tr.pooled[u]) * dlogits[k]);
      acc += static_cast<double>(params.out_weight[u * K + k]) * dlogits[k];
    }
    dpooled[u] = acc;
  }

  const std::size_t T = tr.dense_out.dim(0);
  BasicTensor<Real> gdense({T, U});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t u = 0; u < U; ++u) {
      gdense[t * U + u] = static_cast<Real>(dpooled[u] / static_cast<double>(T));
    }
  }
  elu_backward(tr.dense_out, gdense);

  const BasicTensor<Real>& dense_in = tr.conv_out.back();
  const std::size_t D = dense_in.dim(1) * dense_in.dim(2);
  BasicTensor<Real> gx(dense_in.shape());
  std::vector<double> dbias(U, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const Real* x = dense_in.data() + t * D;
    const Real* gt = gdense.data() + t * U;
    Real* dx = gx.data() + t * D;
    for (std::size_t u = 0; u < U; ++u) dbias[u] += gt[u];
    for (std::size_t i = 0; i < D; ++i) {
      const Real xv = x[i];
      Real* __restrict dw = g.dense_weight.data() + i * U;
      const Real* __restrict w = params.dense_weight.data() + i * U;
      for (std::size_t u = 0; u < U; ++u) dw[u] += xv * gt[u];
      // Eight interleaved partial sums let the dot product vectorise.
      Real lanes[8] = {};
      std::size_t u = 0;
      for (; u + 8 <= U; u += 8) {
        for (std::size_t l = 0; l < 8; ++l) lanes[l] += w[u + l] * gt[u + l];
      }
      Real acc = 0;
      for (; u < U; ++u) acc += w[u] * gt[u];
      for (Real v : lanes) acc += v;
      dx[i] = acc;
    }
  }
  for (std::size_t u = 0; u < U; ++u) g.dense_bias[u] = static_cast<Real>(dbias[u]);

  for (std::size_t l = params.conv.size(); l-- > 0;) {
    elu_backward(tr.conv_out[l], gx);
    const BasicTensor<Real>& layer_in = l == 0 ? tr.input : tr.conv_out[l - 1];
    conv2d_backward_params(layer_in, gx, g.conv[l]);
    if (l > 0) gx = conv2d_backward_input(gx, params.conv[l].kernel);
  }
  return r;
}

template GradientResult<float> compute_gradients(const LogFiltSpec&, KeyLabel,
                                                 const BasicModelParams<float>&);
template GradientResult<double> compute_gradients(const LogFiltSpec&, KeyLabel,
                                                  const BasicModelParams<double>&);

void sgd_step(TrainState& state, const ModelParams& grads, const TrainConfig& config) {
  auto params = state.params.tensors();
  auto velocity = state.velocity.tensors();
  auto gradients = grads.tensors();
  const auto decayed = state.params.decayed_tensors();
  if (gradients.size() != params.size()) throw ShapeError("sgd_step: gradient layout mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (gradients[i]->shape() != params[i]->shape() ||
        velocity[i]->shape() != params[i]->shape()) {
      throw ShapeError("sgd_step: shape mismatch in tensor " + std::to_string(i));
    }
    for (float v : gradients[i]->values()) {
      if (!std::isfinite(v)) {
        throw NumericError("sgd_step: non-finite gradient in " +
                           state.params.tensor_names()[i]);
      }
    }
  }
  const double lr = state.current_lr;
  const double mu = config.momentum;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double wd = decayed[i] ? config.weight_decay : 0.0;
    float* p = params[i]->data();
    float* v = velocity[i]->data();
    const float* g = gradients[i]->data();
    for (std::size_t j = 0; j < params[i]->size(); ++j) {
      const double step = static_cast<double>(g[j]) + wd * p[j];
      const double nv = mu * v[j] - lr * step;
      v[j] = static_cast<float>(nv);
      p[j] = static_cast<float>(p[j] + nv);
    }
  }
}

double accuracy(std::span<const LabeledSpec> examples, const ModelParams& params) {
  if (examples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& ex : examples) {
    if (predict_key(ex.spec, params) == ex.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

namespace {

void shuffle_indices(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace

FitResult fit(std::span<const LabeledSpec> train, std::span<const LabeledSpec> val,
              const TrainConfig& config, const FitOptions& options) {
  config.validate();
  if (train.empty()) throw InvalidArgument("fit: empty training set");
  if (val.empty()) throw InvalidArgument("fit: empty validation set");
  const std::size_t bands = train.front().spec.bands;
  for (const auto& ex : train) {
    if (ex.spec.bands != bands) throw ShapeError("fit: training spectrograms differ in band count");
  }
  for (const auto& ex : val) {
    if (ex.spec.bands != bands) throw ShapeError("fit: validation band count differs from training");
  }

  ModelParams initial = options.initial_params
                            ? *options.initial_params
                            : init_params(bands, config.rng_seed, options.architecture);
  if (initial.bands() != bands) throw ShapeError("fit: initial parameters expect other band count");

  TrainState state = TrainState::start(std::move(initial), config);
  std::mt19937_64 rng(config.rng_seed ^ 0x5DEECE66Dull);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  FitResult result;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_indices(order, rng);
    double loss_sum = 0.0;
    for (std::size_t idx : order) {
      const LabeledSpec& ex = train[idx];
      GradientResult<float> g = compute_gradients(ex.spec, ex.label, state.params);
      loss_sum += g.loss;
      sgd_step(state, g.grads, config);
    }

    const double acc = options.validator ? options.validator(state.params, epoch)
                                         : accuracy(val, state.params);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    rec.val_accuracy = acc;
    if (epoch == 1 || acc > state.best_val_acc) {
      rec.improved = true;
      state.best_params = state.params;
      state.best_val_acc = acc;
      state.epochs_since_improvement = 0;
      if (options.checkpoint_path) save_checkpoint(*options.checkpoint_path, state.best_params);
    } else if (++state.epochs_since_improvement >= config.patience) {
      rec.halved = true;
      state.current_lr *= 0.5;
      state.params = state.best_params;
      for (Tensor* t : state.velocity.tensors()) t->fill(0.0f);
      state.epochs_since_improvement = 0;
      ++state.halvings;
    }
    rec.learning_rate = state.current_lr;
    rec.halvings = state.halvings;
    result.history.push_back(rec);

    if (options.log) {
      *options.log << rec.epoch << '\t' << std::setprecision(6) << rec.train_loss << '\t'
                   << rec.val_accuracy << '\t' << rec.learning_rate << '\t' << rec.halvings
                   << '\n';
      options.log->flush();
    }
    if (options.on_epoch) options.on_epoch(rec, state);
  }
  result.params = std::move(state.best_params);
  result.best_val_acc = state.best_val_acc;
  return result;
}

double GradientCheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& g : groups) m = std::max(m, g.max_rel_error);
  return m;
}

GradientCheckReport finite_diff_check(const LogFiltSpec& spec, KeyLabel target,
                                      const BasicModelParams<double>& params,
                                      const BasicModelParams<double>& analytic,
                                      const GradientCheckOptions& options) {
  GradientCheckReport report;
  report.tolerance = options.tolerance;
  BasicModelParams<double> probe = params;
  auto probe_tensors = probe.tensors();
  auto grad_tensors = analytic.tensors();
  const auto names = params.tensor_names();
  if (grad_tensors.size() != probe_tensors.size()) {
    throw ShapeError("finite_diff_check: gradient layout mismatch");
  }
  auto loss_at = [&]() {
    return cross_entropy_loss(forward_trace(spec, probe).probs, target);
  };

  std::mt19937_64 rng(options.seed);
  for (std::size_t ti = 0; ti < probe_tensors.size(); ++ti) {
    BasicTensor<double>& tensor = *probe_tensors[ti];
    if (grad_tensors[ti]->shape() != tensor.shape()) {
      throw ShapeError("finite_diff_check: shape mismatch in " + names[ti]);
    }
    std::vector<std::size_t> coords(tensor.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > options.samples_per_group) {
      shuffle_indices(coords, rng);
      coords.resize(options.samples_per_group);
    }
    GradientCheckGroup group;
    group.name = names[ti];
    group.coordinates = coords.size();
    for (std::size_t c : coords) {
      const double saved = tensor[c];
      tensor[c] = saved + options.step;
      const double up = loss_at();
      tensor[c] = saved - options.step;
      const double down = loss_at();
      tensor[c] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = (*grad_tensors[ti])[c];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.abs_floor});
      group.max_rel_error = std::max(group.max_rel_error, std::abs(a - numeric) / denom);
    }
    report.groups.push_back(group);
  }
  return report;
}

GradientCheckReport finite_diff_check(const LogFiltSpec& spec, KeyLabel target,
                                      const BasicModelParams<double>& params,
                                      const GradientCheckOptions& options) {
  return finite_diff_check(spec, target, params,
                           compute_gradients(spec, target, params).grads, options);
}

}  // namespace keynet
