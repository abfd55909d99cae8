#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "keynet/key_label.hpp"
#include "keynet/model.hpp"
#include "keynet/spectral.hpp"

namespace keynet {

struct TrainConfig {
  double learning_rate = 0.001;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int patience = 10;
  int max_epochs = 100;
  std::uint64_t rng_seed = 0;

  /// Throws InvalidArgument if any field is out of range.
  void validate() const;
};

struct LabeledSpec {
  LogFiltSpec spec;
  KeyLabel label;
  std::string id;
};

/// Optimiser state for SGD with classical momentum plus the learning-rate
/// halving schedule.
struct TrainState {
  ModelParams params;
  ModelParams velocity;
  double current_lr = 0.0;
  ModelParams best_params;
  double best_val_acc = 0.0;
  int epochs_since_improvement = 0;
  int halvings = 0;

  static TrainState start(ModelParams initial, const TrainConfig& config);
};

/// -log(max(probs[target], 1e-12)). Throws InvalidArgument unless `probs`
/// is a 24-entry distribution.
double cross_entropy_loss(std::span<const double> probs, KeyLabel target);

template <class Real>
struct GradientResult {
  BasicModelParams<Real> grads;
  double loss = 0.0;
  std::vector<double> probs;
};

/// Analytic gradient of the cross-entropy loss with respect to every
/// parameter (no weight decay).
template <class Real>
GradientResult<Real> compute_gradients(const LogFiltSpec& spec, KeyLabel target,
                                       const BasicModelParams<Real>& params);

/// velocity <- momentum * velocity - lr * (grads + weight_decay * params),
/// params <- params + velocity. Decay applies to kernels and weight matrices
/// only. Throws NumericError on non-finite gradients.
void sgd_step(TrainState& state, const ModelParams& grads, const TrainConfig& config);

/// Fraction of examples whose predicted key equals the label exactly.
double accuracy(std::span<const LabeledSpec> examples, const ModelParams& params);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double learning_rate = 0.0;  // in effect at the end of the epoch
  int halvings = 0;
  bool improved = false;
  bool halved = false;
};

struct FitOptions {
  Architecture architecture;
  /// Starting point; drawn from init_params(rng_seed) when empty.
  std::optional<ModelParams> initial_params;
  /// Replaces exact-match validation accuracy (used to drive the schedule
  /// in tests).
  std::function<double(const ModelParams&, int epoch)> validator;
  std::function<void(const EpochRecord&, const TrainState&)> on_epoch;
  /// Receives one tab-separated line per epoch: epoch, mean training loss,
  /// validation accuracy, learning rate, halvings so far.
  std::ostream* log = nullptr;
  /// Written whenever validation accuracy improves.
  std::optional<std::filesystem::path> checkpoint_path;
};

struct FitResult {
  ModelParams params;
  double best_val_acc = 0.0;
  std::vector<EpochRecord> history;
};

/// Batch-size-1 SGD over shuffled training examples. After each epoch the
/// validation accuracy is measured; the first epoch and every strict
/// improvement record the best parameters. After `patience` epochs without
/// improvement the learning rate is halved, the best parameters restored,
/// the velocity zeroed and the counter reset. Returns the best parameters
/// after `max_epochs`.
FitResult fit(std::span<const LabeledSpec> train, std::span<const LabeledSpec> val,
              const TrainConfig& config, const FitOptions& options = {});

struct GradientCheckGroup {
  std::string name;
  std::size_t coordinates = 0;
  double max_rel_error = 0.0;
};

struct GradientCheckReport {
  std::vector<GradientCheckGroup> groups;
  double tolerance = 0.0;

  double max_rel_error() const;
  bool passed() const { return max_rel_error() < tolerance; }
};

struct GradientCheckOptions {
  double step = 1e-4;
  double tolerance = 1e-4;
  /// Coordinates per tensor; smaller tensors are checked exhaustively.
  std::size_t samples_per_group = 100;
  std::uint64_t seed = 0;
  /// Denominator floor of |a - n| / max(|a|, |n|, floor).
  double abs_floor = 1e-7;
};

/// Compares `analytic` against central differences of the loss.
GradientCheckReport finite_diff_check(const LogFiltSpec& spec, KeyLabel target,
                                      const BasicModelParams<double>& params,
                                      const BasicModelParams<double>& analytic,
                                      const GradientCheckOptions& options = {});

/// As above with analytic gradients from compute_gradients.
GradientCheckReport finite_diff_check(const LogFiltSpec& spec, KeyLabel target,
                                      const BasicModelParams<double>& params,
                                      const GradientCheckOptions& options = {});

}  // namespace keynet
