#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "keynet/audio_io.hpp"
#include "keynet/augment.hpp"
#include "keynet/dataset.hpp"
#include "keynet/error.hpp"
#include "keynet/eval.hpp"
#include "keynet/model.hpp"
#include "keynet/spectral.hpp"
#include "keynet/synthgen.hpp"
#include "keynet/training.hpp"

namespace fs = std::filesystem;
using namespace keynet;

namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

// Flag problems found after parsing; reported with the usage exit status.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

LogFiltSpec load_features(const fs::path& path, const Filterbank& fb) {
  if (path.extension() == ".lfsp") return read_lfsp(path);
  return compute_logfilt_spec(load_wav(path), fb);
}

void require_files(const std::vector<std::string>& paths) {
  for (const std::string& p : paths) {
    if (!fs::is_regular_file(p)) throw IoError(p + ": no such file");
  }
}

// --- features ---------------------------------------------------------------

struct FeaturesArgs {
  std::vector<std::string> inputs;
  std::string out;
};

int run_features(const FeaturesArgs& a) {
  require_files(a.inputs);
  fs::create_directories(a.out);
  const Filterbank fb = build_log_filterbank();
  for (const std::string& in : a.inputs) {
    const fs::path dest = fs::path(a.out) / fs::path(in).filename().replace_extension(".lfsp");
    write_lfsp(dest, compute_logfilt_spec(load_wav(in), fb));
    std::cout << in << '\t' << dest.string() << '\n';
  }
  return 0;
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  std::string manifest;
  std::string augment = "spec";
  std::string out;
  std::string log;
  TrainConfig config;
};

std::vector<LabeledSpec> to_specs(const std::vector<LabeledPiece>& pieces, const Filterbank& fb) {
  std::vector<LabeledSpec> out;
  out.reserve(pieces.size());
  for (const LabeledPiece& p : pieces) {
    out.push_back({load_features(p.audio_path, fb), p.label, p.piece_id});
  }
  return out;
}

std::vector<LabeledSpec> augmented_training_set(const std::vector<LabeledPiece>& pieces,
                                                const std::string& mode, const Filterbank& fb) {
  if (mode == "none") return to_specs(pieces, fb);
  std::vector<AugmentSource> sources;
  for (const LabeledPiece& p : pieces) {
    AugmentSource s{p.piece_id, p.label, {}, {}};
    if (mode == "audio") {
      if (p.audio_path.extension() == ".lfsp") {
        throw FormatError(p.audio_path.string() + ": audio augmentation needs audio input");
      }
      s.audio = load_wav(p.audio_path);
    } else {
      s.spec = load_features(p.audio_path, fb);
    }
    sources.push_back(std::move(s));
  }
  const AugmentMode m = mode == "audio" ? AugmentMode::kAudio : AugmentMode::kSpectrogram;
  return to_labeled(augment_dataset(sources, m, fb));
}

int run_train(const TrainArgs& a) {
  try {
    a.config.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  std::vector<LabeledPiece> train, val;
  {
    std::vector<LabeledPiece> pieces = read_manifest(a.manifest);
    for (LabeledPiece& p : pieces) {
      if (p.split == Split::kTrain) train.push_back(p);
      if (p.split == Split::kValidation) val.push_back(p);
    }
    // A manifest without a validation part is partitioned here; its test
    // part is left unused.
    if (val.empty()) {
      Partition part = split_dataset(train, SplitFractions{}, a.config.rng_seed);
      train = std::move(part.train);
      val = std::move(part.validation);
      std::cerr << "keynet: no validation pieces in manifest, split " << train.size() << '/'
                << val.size() << " with seed " << a.config.rng_seed << '\n';
    }
  }
  if (train.empty()) throw FormatError(a.manifest + ": no training pieces");

  const Filterbank fb = build_log_filterbank();
  const std::vector<LabeledSpec> train_set = augmented_training_set(train, a.augment, fb);
  const std::vector<LabeledSpec> val_set = to_specs(val, fb);
  std::cerr << "keynet: " << train_set.size() << " training examples, " << val_set.size()
            << " validation pieces\n";

  std::ofstream log_file;
  FitOptions opt;
  opt.checkpoint_path = a.out;
  if (!a.log.empty()) {
    log_file.open(a.log);
    if (!log_file) throw IoError(a.log + ": cannot open for writing");
    opt.log = &log_file;
  } else {
    opt.log = &std::cerr;
  }
  const FitResult res = fit(train_set, val_set, a.config, opt);
  save_checkpoint(a.out, res.params);
  std::cerr << "keynet: best validation accuracy " << res.best_val_acc << ", model " << a.out
            << '\n';
  return 0;
}

// --- predict ----------------------------------------------------------------

struct PredictArgs {
  std::string model;
  std::vector<std::string> inputs;
};

int run_predict(const PredictArgs& a) {
  require_files(a.inputs);
  const ModelParams params = load_checkpoint(a.model);
  const Filterbank fb = build_log_filterbank();
  for (const std::string& in : a.inputs) {
    std::cout << in << '\t' << to_string(predict_key(load_features(in, fb), params)) << '\n';
  }
  return 0;
}

// --- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  std::string pred;
  std::string truth;
  std::string compare;
};

std::vector<KeyPair> align(const std::string& pred_path,
                           const std::map<std::string, KeyLabel>& truth) {
  std::vector<KeyPair> pairs;
  std::map<std::string, KeyLabel> seen;
  for (const auto& [id, key] : read_key_file(pred_path)) {
    if (!seen.emplace(id, key).second) throw FormatError(pred_path + ": duplicate id " + id);
  }
  for (const auto& [id, target] : truth) {
    const auto it = seen.find(id);
    if (it == seen.end()) throw FormatError(pred_path + ": no prediction for " + id);
    pairs.emplace_back(it->second, target);
  }
  return pairs;
}

int run_evaluate(const EvaluateArgs& a) {
  std::map<std::string, KeyLabel> truth;
  for (const auto& [id, key] : read_key_file(a.truth)) {
    if (!truth.emplace(id, key).second) throw FormatError(a.truth + ": duplicate id " + id);
  }
  if (truth.empty()) throw FormatError(a.truth + ": no annotations");
  const std::vector<KeyPair> pairs = align(a.pred, truth);
  std::cout << format_report_table(evaluate(pairs));
  if (a.compare.empty()) return 0;

  const std::vector<KeyPair> other = align(a.compare, truth);
  std::cout << "\nCompared with " << a.compare << '\n' << format_report_table(evaluate(other));
  std::vector<double> sa, sb;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    sa.push_back(category_weight(categorize(pairs[i].first, pairs[i].second)));
    sb.push_back(category_weight(categorize(other[i].first, other[i].second)));
  }
  if (sa.size() < 5) throw FormatError("wilcoxon test needs at least 5 pieces");
  const WilcoxonResult w = wilcoxon_signed_rank(sa, sb);
  std::cout << "\nwilcoxon\tstatistic\t" << w.statistic << "\tp\t" << w.p_value << "\tnonzero\t"
            << w.nonzero << '\t' << (w.exact ? "exact" : "normal") << '\n';
  return 0;
}

// --- synth ------------------------------------------------------------------

struct SynthArgs {
  int per_class = 10;
  std::uint64_t seed = 0;
  std::string out;
  std::string split = "train";
};

int run_synth(const SynthArgs& a) {
  Split split;
  try {
    split = parse_split(a.split);
  } catch (const FormatError& e) {
    throw UsageError(e.what());
  }
  std::vector<SynthPiece> corpus = generate_corpus(a.per_class, a.seed);
  for (SynthPiece& p : corpus) p.piece.split = split;
  write_corpus(a.out, corpus);
  std::cerr << "keynet: wrote " << corpus.size() << " clips to " << a.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Global musical key estimation with a convolutional network"};
  app.require_subcommand(1);
  std::function<int()> action;

  FeaturesArgs fa;
  auto* features = app.add_subcommand("features", "Write log-filtered spectrograms (.lfsp)");
  features->add_option("audio", fa.inputs, "WAV files")->required();
  features->add_option("--out", fa.out, "Output directory")->required();
  features->callback([&] { action = [&] { return run_features(fa); }; });

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a model from a corpus manifest");
  train->add_option("--manifest", ta.manifest, "Corpus manifest")->required();
  train->add_option("--augment", ta.augment, "Pitch-shift augmentation")
      ->check(CLI::IsMember({"spec", "audio", "none"}))
      ->capture_default_str();
  train->add_option("--out", ta.out, "Checkpoint to write")->required();
  train->add_option("--lr", ta.config.learning_rate, "Initial learning rate")->capture_default_str();
  train->add_option("--momentum", ta.config.momentum)->capture_default_str();
  train->add_option("--weight-decay", ta.config.weight_decay)->capture_default_str();
  train->add_option("--patience", ta.config.patience, "Epochs without improvement per halving")
      ->capture_default_str();
  train->add_option("--epochs", ta.config.max_epochs)->capture_default_str();
  train->add_option("--seed", ta.config.rng_seed)->capture_default_str();
  train->add_option("--log", ta.log, "Per-epoch training log (default: stderr)");
  train->callback([&] { action = [&] { return run_train(ta); }; });

  PredictArgs pa;
  auto* predict = app.add_subcommand("predict", "Print the estimated key of each file");
  predict->add_option("--model", pa.model, "Checkpoint")->required();
  predict->add_option("audio", pa.inputs, "WAV or .lfsp files")->required();
  predict->callback([&] { action = [&] { return run_predict(pa); }; });

  EvaluateArgs ea;
  auto* eval = app.add_subcommand("evaluate", "Score predictions against annotations");
  eval->add_option("--pred", ea.pred, "Predicted keys (id TAB key)")->required();
  eval->add_option("--truth", ea.truth, "Annotated keys")->required();
  eval->add_option("--compare", ea.compare, "Second prediction file for a paired test");
  eval->callback([&] { action = [&] { return run_evaluate(ea); }; });

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a labelled synthetic corpus");
  synth->add_option("--per-class", sa.per_class, "Clips per key")->required()->check(CLI::PositiveNumber);
  synth->add_option("--seed", sa.seed)->required();
  synth->add_option("--out", sa.out, "Output directory")->required();
  synth->add_option("--split", sa.split, "Split written into the manifest")->capture_default_str();
  synth->callback([&] { action = [&] { return run_synth(sa); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kUsageError;
  }

  try {
    return action();
  } catch (const UsageError& e) {
    std::cerr << "keynet: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "keynet: " << e.what() << '\n';
    return kDataError;
  }
}
