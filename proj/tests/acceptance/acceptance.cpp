// One line per acceptance criterion; the exit status is nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "keynet/augment.hpp"
#include "keynet/dataset.hpp"
#include "keynet/error.hpp"
#include "keynet/eval.hpp"
#include "keynet/spectral.hpp"
#include "keynet/synthgen.hpp"
#include "keynet/training.hpp"
#include "test_support.hpp"

using namespace keynet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

int failures = 0;

template <class Fn>
void run(int number, const char* title, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    fn(out);
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!out.pass) ++failures;
  std::printf("[%s] %d %s (%.1fs)%s%s\n", out.pass ? "PASS" : "FAIL", number, title, secs,
              out.detail.empty() ? "" : ": ", out.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// ---------------------------------------------------------------------------

void weighted_arithmetic(Outcome& out) {
  struct Row {
    int correct, fifth, relative, parallel;
    double printed;
  };
  const KeyLabel target(0, Mode::kMajor);
  std::string values;
  for (const Row& row : {Row{679, 68, 71, 43, 74.3}, Row{771, 90, 49, 42, 83.9},
                         Row{637, 86, 27, 65, 70.1}}) {
    std::vector<KeyPair> pairs;
    auto add = [&](int n, KeyLabel pred) {
      for (int i = 0; i < n; ++i) pairs.emplace_back(pred, target);
    };
    add(row.correct, target);
    add(row.fifth, KeyLabel(7, Mode::kMajor));
    add(row.relative, KeyLabel(9, Mode::kMinor));
    add(row.parallel, KeyLabel(0, Mode::kMinor));
    add(1000 - row.correct - row.fifth - row.relative - row.parallel, KeyLabel(1, Mode::kMinor));
    const double w = 100.0 * evaluate(pairs).weighted;
    values += fmt("%.2f ", w);
    out.require(std::abs(w - row.printed) <= 0.05, fmt("%.3f vs %.1f", w, row.printed));
  }
  out.detail = out.pass ? "weighted " + values : out.detail;
}

void category_oracle(Outcome& out) {
  std::ifstream in(std::string(KEYNET_FIXTURE_DIR) + "/category_table.tsv");
  out.require(static_cast<bool>(in), "fixture missing");
  std::map<std::pair<int, int>, std::string> table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string pred, target, cat;
    std::getline(row, pred, '\t');
    std::getline(row, target, '\t');
    std::getline(row, cat, '\t');
    table[{parse_key_annotation(pred).class_index(), parse_key_annotation(target).class_index()}] = cat;
  }
  out.require(table.size() == 576, "fixture has " + std::to_string(table.size()) + " pairs");
  int mismatches = 0, variant = 0;
  for (int p = 0; p < 24; ++p) {
    for (int t = 0; t < 24; ++t) {
      const KeyLabel kp = KeyLabel::from_class_index(p), kt = KeyLabel::from_class_index(t);
      std::string name(category_name(categorize(kp, kt)));
      std::transform(name.begin(), name.end(), name.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      const auto it = table.find({p, t});
      if (it == table.end() || it->second != name) ++mismatches;
      for (int k = 0; k < 12; ++k) {
        if (categorize(kp.transposed(k), kt.transposed(k)) != categorize(kp, kt)) ++variant;
      }
    }
  }
  out.require(mismatches == 0, std::to_string(mismatches) + " fixture mismatches");
  out.require(variant == 0, std::to_string(variant) + " rotation mismatches");
}

template <class Real>
void jitter_biases(BasicModelParams<Real>& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (auto& c : p.conv) {
    for (auto& v : c.bias.values()) v = static_cast<Real>(u(rng));
  }
  for (auto& v : p.dense_bias.values()) v = static_cast<Real>(u(rng));
  for (auto& v : p.out_bias.values()) v = static_cast<Real>(u(rng));
}

LogFiltSpec random_spec(std::size_t T, std::size_t F, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 2.0f);
  LogFiltSpec s;
  s.frames = T;
  s.bands = F;
  s.values.resize(T * F);
  for (float& v : s.values) v = u(rng);
  return s;
}

void gradient_check(Outcome& out) {
  double worst = 0.0;
  std::size_t fewest = ~std::size_t{0};
  for (std::size_t layers : {2u, 5u}) {
    Architecture arch;
    arch.conv_layers = layers;
    for (std::uint64_t seed : {1u, 2u}) {
      auto params = init_params(12, 40 + seed, arch).cast<double>();
      jitter_biases(params, seed);
      GradientCheckOptions opt;
      opt.seed = seed;
      const auto report = finite_diff_check(random_spec(6, 12, 10 * seed + layers),
                                            KeyLabel::from_class_index(static_cast<int>(5 * seed)),
                                            params, opt);
      for (const auto& g : report.groups) {
        worst = std::max(worst, g.max_rel_error);
        fewest = std::min(fewest, g.coordinates);
        out.require(g.max_rel_error < 1e-4,
                    std::to_string(layers) + " layers " + g.name + fmt(" %.2e", g.max_rel_error));
      }
    }
  }
  if (out.pass) {
    out.detail = fmt("max relative error %.2e, smallest group %g coordinates", worst,
                     static_cast<double>(fewest));
  }
}

std::vector<AugmentSource> features(const std::vector<SynthPiece>& corpus, const Filterbank& fb) {
  std::vector<AugmentSource> out;
  for (const SynthPiece& p : corpus) {
    out.push_back({p.piece.piece_id, p.piece.label, compute_logfilt_spec(p.audio, fb), {}});
  }
  return out;
}

std::vector<LabeledSpec> unaugmented(const std::vector<AugmentSource>& sources) {
  std::vector<LabeledSpec> out;
  for (const AugmentSource& s : sources) out.push_back({s.spec, s.label, s.id});
  return out;
}

struct SynthData {
  std::vector<LabeledSpec> train, val, test;
};

const SynthData& synth_data() {
  static const SynthData data = [] {
    const Filterbank fb = build_log_filterbank();
    SynthData d;
    d.train = to_labeled(augment_dataset(features(generate_corpus(10, 101), fb),
                                         AugmentMode::kSpectrogram, fb));
    d.val = unaugmented(features(generate_corpus(2, 202), fb));
    d.test = unaugmented(features(generate_corpus(4, 303), fb));
    return d;
  }();
  return data;
}

void end_to_end(Outcome& out) {
  const SynthData& d = synth_data();
  out.require(d.train.size() == 240 * 12, "training set size");
  out.require(d.val.size() == 48, "validation set size");
  TrainConfig cfg;
  cfg.max_epochs = 30;
  cfg.rng_seed = 7;
  const FitResult res = fit(d.train, d.val, cfg);
  std::vector<KeyPair> pairs;
  for (const LabeledSpec& s : d.test) pairs.emplace_back(predict_key(s.spec, res.params), s.label);
  const EvalReport rep = evaluate(pairs);
  const double acc = 100.0 * rep.ratio(Category::kCorrect), w = 100.0 * rep.weighted;
  out.require(acc >= 90.0, fmt("accuracy %.1f < 90", acc));
  out.require(w >= 92.0, fmt("weighted %.1f < 92", w));
  out.require(w >= acc, "weighted below accuracy");
  if (out.pass) {
    out.detail = std::to_string(rep.n) + " held-out clips" +
                 fmt(", accuracy %.1f, weighted %.1f", acc, w);
  }
}

void augmentation_contract(Outcome& out) {
  const Filterbank fb = build_log_filterbank();
  const auto sources = features(generate_corpus(1, 55), fb);
  const auto aug = augment_dataset(sources, AugmentMode::kSpectrogram, fb);
  out.require(aug.size() == 12 * sources.size(), "variant count");
  for (std::size_t i = 0; i < sources.size(); ++i) {
    for (int k = 0; k < 12; ++k) {
      const AugmentedExample& e = aug[12 * i + static_cast<std::size_t>(k)];
      const int shift = kMinShift + k;
      if (e.shift != shift || e.source_id != sources[i].id ||
          e.label != sources[i].label.transposed(shift)) {
        out.require(false, "variant " + std::to_string(k) + " of " + sources[i].id);
        return;
      }
    }
  }
  const AudioBuffer tone = keynet::testing::sine(440.0, 2.0, 0.5);
  double bin = 0.0;
  const double up = keynet::testing::peak_frequency(shift_audio(tone, 12), &bin);
  const double down = keynet::testing::peak_frequency(shift_audio(tone, -4), &bin);
  const double expected_down = 440.0 * std::pow(2.0, -4.0 / 12.0);
  out.require(std::abs(up - 880.0) < bin, fmt("+12 peak %.2f Hz", up));
  out.require(std::abs(down - expected_down) < bin, fmt("-4 peak %.2f Hz", down));
  if (out.pass) out.detail = fmt("peaks %.2f Hz and %.2f Hz, bin %.2f Hz", up, down, bin);
}

void front_end(Outcome& out) {
  const Filterbank fb = build_log_filterbank(44100, 8192, 24, 65, 2100);
  out.require(fb.nominal_freqs.size() == 121,
              "nominal centres " + std::to_string(fb.nominal_freqs.size()));
  const double ratio = std::pow(2.0, 1.0 / 24.0);
  for (std::size_t i = 0; i + 1 < fb.nominal_freqs.size(); ++i) {
    if (std::abs(fb.nominal_freqs[i + 1] / fb.nominal_freqs[i] - ratio) > 1e-6) {
      out.require(false, "centre ratio at " + std::to_string(i));
      break;
    }
  }
  const LogFiltSpec silent =
      compute_logfilt_spec(AudioBuffer(std::vector<float>(2 * 44100, 0.0f), 44100), fb);
  out.require(std::all_of(silent.values.begin(), silent.values.end(),
                          [](float v) { return v == 0.0f; }),
              "silence not zero");
  for (double freq : {98.0, 261.63, 440.0, 1318.5}) {
    const LogFiltSpec s = compute_logfilt_spec(keynet::testing::sine(freq, 1.0), fb);
    const auto row = std::span<const float>(s.values).subspan(2 * s.bands, s.bands);
    const auto band = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    const double r = fb.center_freqs[band] / freq;
    out.require(std::max(r, 1.0 / r) <= ratio * (1 + 1e-9), fmt("tone %.2f Hz", freq));
  }
  if (out.pass) out.detail = std::to_string(fb.num_bands()) + " bands after merging";
}

void schedule_simulation(Outcome& out) {
  Architecture arch;
  arch.conv_layers = 2;
  std::vector<LabeledSpec> train;
  for (int i = 0; i < 4; ++i) {
    train.push_back({random_spec(3, 10, 90 + i), KeyLabel::from_class_index(i), "t"});
  }
  TrainConfig cfg;
  cfg.max_epochs = 30;
  cfg.rng_seed = 3;
  FitOptions opt;
  opt.architecture = arch;
  opt.validator = [](const ModelParams&, int) { return 0.25; };
  ModelParams epoch1;
  opt.on_epoch = [&](const EpochRecord& r, const TrainState& st) {
    if (r.epoch == 1) epoch1 = st.params;
  };
  const FitResult res = fit(train, train, cfg, opt);
  std::vector<int> halved;
  for (const EpochRecord& r : res.history) {
    if (r.halved) halved.push_back(r.epoch);
  }
  out.require(halved == std::vector<int>{11, 21}, "halvings at the wrong epochs");
  out.require(std::abs(res.history.back().learning_rate - 0.00025) < 1e-15,
              fmt("final lr %g", res.history.back().learning_rate));
  out.require(res.params == epoch1, "returned parameters differ from epoch 1");
  if (out.pass) out.detail = "halved at epochs 11 and 21, lr 0.00025";
}

double brute_force_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > 1e-9) d.push_back(a[i] - b[i]);
  }
  const std::size_t n = d.size();
  if (n == 0) return 1.0;
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double below = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double gap = std::abs(d[j]) - std::abs(d[i]);
      if (gap < -1e-9) ++below;
      else if (std::abs(gap) <= 1e-9) ++equal;
    }
    rank[i] = below + (equal + 1) / 2.0;
  }
  double plus = 0, total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total += rank[i];
    if (d[i] > 0) plus += rank[i];
  }
  const double w = std::min(plus, total - plus);
  std::size_t hits = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1) s += rank[i];
    }
    if (s <= w + 1e-9) ++hits;
  }
  return std::min(1.0, 2.0 * static_cast<double>(hits) / static_cast<double>(std::size_t{1} << n));
}

void wilcoxon_oracle(Outcome& out) {
  std::mt19937_64 rng(2024);
  const double levels[] = {1.0, 0.5, 0.3, 0.2, 0.0};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  int cases = 0;
  // Shorter inputs are rejected by precondition; zero differences bring the
  // count of nonzero differences below five.
  for (std::size_t n = 5; n <= 12; ++n) {
    for (int rep = 0; rep < 60; ++rep) {
      std::vector<double> a(n), b(n);
      for (std::size_t i = 0; i < n; ++i) {
        if (rep % 3 == 2) {
          a[i] = u(rng);
          b[i] = u(rng);
        } else {
          a[i] = levels[rng() % 5];
          b[i] = rep % 3 == 1 && i % 2 == 0 ? a[i] : levels[rng() % 5];
        }
      }
      const double p = wilcoxon_signed_rank(a, b).p_value;
      worst = std::max(worst, std::abs(p - brute_force_p(a, b)));
      ++cases;
    }
  }
  out.require(worst < 1e-10, fmt("max deviation %.3e", worst));
  if (out.pass) out.detail = std::to_string(cases) + " cases" + fmt(", max deviation %.1e", worst);
}

void billboard_boundaries(Outcome& out) {
  std::vector<ChordAnnotation> nine_of_ten(9, {0, ChordQuality::kMajorFamily, 1.0});
  nine_of_ten.push_back({0, ChordQuality::kMinorFamily, 1.0});
  out.require(!infer_billboard_mode(0, nine_of_ten).has_value(), "9/10 major not discarded");
  out.require(!infer_billboard_mode(0, nine_of_ten, ChordWeighting::kCount).has_value(),
              "9/10 major not discarded by count");

  std::vector<ChordAnnotation> nineteen(19, {4, ChordQuality::kMinorFamily, 2.0});
  nineteen.push_back({4, ChordQuality::kMajorFamily, 2.0});
  nineteen.push_back({9, ChordQuality::kMajorFamily, 50.0});  // off-tonic chords do not vote
  const auto minor = infer_billboard_mode(4, nineteen);
  out.require(minor.has_value() && *minor == KeyLabel(4, Mode::kMinor), "19/20 minor");

  const std::vector<int> tonics = {0, 7};
  const std::vector<ChordAnnotation> all_major(10, {0, ChordQuality::kMajorFamily, 1.0});
  out.require(!infer_piece_key(tonics, all_major).has_value(), "multi-tonic piece kept");
  const std::vector<int> single = {0, 0};
  const auto kept = infer_piece_key(single, all_major);
  out.require(kept.has_value() && *kept == KeyLabel(0, Mode::kMajor), "repeated tonic dropped");
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

bool same_tree(const fs::path& a, const fs::path& b, std::size_t* files) {
  std::vector<fs::path> names;
  for (const auto& e : fs::directory_iterator(a)) names.push_back(e.path().filename());
  std::size_t other = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(b)) ++other;
  if (names.size() != other) return false;
  for (const fs::path& n : names) {
    if (!fs::exists(b / n) || file_bytes(a / n) != file_bytes(b / n)) return false;
  }
  *files = names.size();
  return true;
}

void determinism(Outcome& out) {
  keynet::testing::TempDir dir("keynet_accept");
  const SynthData& d = synth_data();
  TrainConfig cfg;
  cfg.max_epochs = 5;
  cfg.rng_seed = 7;
  std::vector<double> losses[2];
  for (int run = 0; run < 2; ++run) {
    const std::string tag = std::to_string(run);
    FitOptions opt;
    opt.checkpoint_path = dir / ("best" + tag + ".knet");
    opt.on_epoch = [&](const EpochRecord& r, const TrainState& st) {
      losses[run].push_back(r.train_loss);
      if (r.epoch == cfg.max_epochs) save_checkpoint(dir / ("last" + tag + ".knet"), st.params);
    };
    fit(d.train, d.val, cfg, opt);
  }
  out.require(file_bytes(dir / "best0.knet") == file_bytes(dir / "best1.knet"),
              "best checkpoints differ");
  out.require(file_bytes(dir / "last0.knet") == file_bytes(dir / "last1.knet"),
              "final-epoch parameters differ");
  out.require(losses[0] == losses[1], "epoch losses differ");

  for (int run = 0; run < 2; ++run) {
    write_corpus(dir / ("synth" + std::to_string(run)), generate_corpus(1, 4242));
  }
  std::size_t files = 0;
  out.require(same_tree(dir / "synth0", dir / "synth1", &files), "synthetic corpora differ");
  if (out.pass) {
    out.detail = "checkpoints and " + std::to_string(files) + " corpus files bit-identical";
  }
}

}  // namespace

int main() {
  run(1, "weighted score reproduces the published rows", weighted_arithmetic);
  run(2, "category rule table and transposition invariance", category_oracle);
  run(3, "analytic gradients match central differences", gradient_check);
  run(4, "synthetic corpus end-to-end learning", end_to_end);
  run(5, "augmentation variants and audio pitch shift", augmentation_contract);
  run(6, "filterbank geometry, silence and tone peaks", front_end);
  run(7, "learning-rate schedule with a flat validation curve", schedule_simulation);
  run(8, "Wilcoxon exact p-values against enumeration", wilcoxon_oracle);
  run(9, "Billboard mode-inference boundaries", billboard_boundaries);
  run(10, "training and synthesis are deterministic", determinism);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
