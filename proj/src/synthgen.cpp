#include "keynet/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <cstdio>
#include <string>

#include "keynet/error.hpp"

namespace keynet {

namespace {

constexpr std::array<int, 7> kMajorScale = {0, 2, 4, 5, 7, 9, 11};
constexpr std::array<int, 7> kHarmonicMinorScale = {0, 2, 3, 5, 7, 8, 11};
constexpr int kBassLow = 48;   // C3
constexpr int kVoiceLow = 60;  // C4
constexpr int kVoiceOctaves = 2;
// The bass doubles the chord root and is mixed louder so the root band
// dominates the upper chord tones that share its harmonics.
constexpr double kBassGain = 3.0;
constexpr double kPeak = 0.8;
constexpr double kFadeSeconds = 0.01;

double midi_to_hz(int midi) { return 440.0 * std::pow(2.0, (midi - 69) / 12.0); }

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9E3779B97F4A7C15ull + b + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

void add_note(std::vector<double>& out, std::size_t begin, std::size_t end, double freq,
              double level, int harmonics, double sample_rate, std::mt19937_64& rng) {
  const double nyquist = sample_rate / 2.0;
  const auto fade = static_cast<std::size_t>(kFadeSeconds * sample_rate);
  const std::size_t len = end - begin;
  for (int h = 1; h <= harmonics; ++h) {
    const double fh = freq * h;
    const double phase = 2.0 * std::numbers::pi * uniform01(rng);
    if (fh >= nyquist) continue;
    const double amp = level / h;
    const double w = 2.0 * std::numbers::pi * fh / sample_rate;
    // Phasor recurrence in place of per-sample sin().
    const double cw = std::cos(w), sw = std::sin(w);
    double re = std::cos(phase), im = std::sin(phase);
    for (std::size_t i = 0; i < len; ++i) {
      double env = 1.0;
      if (i < fade) env = static_cast<double>(i) / fade;
      if (len - i <= fade) env = std::min(env, static_cast<double>(len - i) / fade);
      out[begin + i] += env * amp * im;
      const double nre = re * cw - im * sw;
      im = re * sw + im * cw;
      re = nre;
    }
  }
}

}  // namespace

std::vector<int> scale_pitch_classes(KeyLabel key) {
  const auto& steps = key.is_minor() ? kHarmonicMinorScale : kMajorScale;
  std::vector<int> pcs;
  for (int s : steps) pcs.push_back((key.tonic() + s) % 12);
  return pcs;
}

AudioBuffer generate_clip(const SynthConfig& config) {
  if (!(config.duration > 0.0)) throw InvalidArgument("synth: duration must be positive");
  if (config.harmonics < 1) throw InvalidArgument("synth: need at least one harmonic");
  if (!(config.tempo > 0.0)) throw InvalidArgument("synth: tempo must be positive");
  if (config.sample_rate <= 0) throw InvalidArgument("synth: sample rate must be positive");
  if (config.noise_level < 0.0) throw InvalidArgument("synth: noise level must be >= 0");
  if (config.progression.empty()) throw InvalidArgument("synth: empty progression");
  for (int d : config.progression) {
    if (d < 0 || d > 6) throw InvalidArgument("synth: scale degree out of range");
  }

  const auto& steps = config.key.is_minor() ? kHarmonicMinorScale : kMajorScale;
  const double sr = config.sample_rate;
  const auto total = static_cast<std::size_t>(std::llround(config.duration * sr));
  const auto slots = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(config.duration * config.tempo)));

  std::mt19937_64 rng(mix_seed(config.rng_seed, 0x5157));
  std::vector<double> mix(total, 0.0);
  for (std::size_t k = 0; k < slots; ++k) {
    const int degree = k + 1 == slots ? 0 : config.progression[k % config.progression.size()];
    std::array<int, 3> tones{};
    for (int v = 0; v < 3; ++v) {
      int step = degree + 2 * v;
      tones[static_cast<std::size_t>(v)] =
          (config.key.tonic() + steps[static_cast<std::size_t>(step % 7)]) % 12;
    }
    const std::size_t begin = total * k / slots;
    const std::size_t end = total * (k + 1) / slots;
    if (end <= begin) continue;
    add_note(mix, begin, end, midi_to_hz(kBassLow + tones[0]), kBassGain, config.harmonics, sr,
             rng);
    for (int pc : tones) {
      const int octave = static_cast<int>(rng() % kVoiceOctaves);
      add_note(mix, begin, end, midi_to_hz(kVoiceLow + 12 * octave + pc), 1.0,
               config.harmonics, sr, rng);
    }
  }

  double peak = 0.0;
  for (double v : mix) peak = std::max(peak, std::abs(v));
  const double gain = peak > 0.0 ? kPeak / peak : 0.0;
  std::vector<float> samples(total);
  for (std::size_t i = 0; i < total; ++i) {
    double v = mix[i] * gain;
    if (config.noise_level > 0.0) v += config.noise_level * (2.0 * uniform01(rng) - 1.0);
    samples[i] = static_cast<float>(v);
  }
  return AudioBuffer(std::move(samples), config.sample_rate);
}

std::vector<SynthPiece> generate_corpus(int per_class, std::uint64_t base_seed,
                                        const SynthConfig& base) {
  if (per_class < 1) throw InvalidArgument("generate_corpus: per_class must be >= 1");
  std::vector<SynthPiece> corpus;
  corpus.reserve(static_cast<std::size_t>(per_class) * kNumKeyClasses);
  for (int cls = 0; cls < kNumKeyClasses; ++cls) {
    for (int i = 0; i < per_class; ++i) {
      SynthConfig cfg = base;
      cfg.key = KeyLabel::from_class_index(cls);
      cfg.rng_seed = mix_seed(base_seed, static_cast<std::uint64_t>(cls * per_class + i));
      char id[32];
      std::snprintf(id, sizeof id, "key%02d_%03d", cls, i);
      SynthPiece p;
      p.piece.piece_id = id;
      p.piece.audio_path = std::string(id) + ".wav";
      p.piece.label = cfg.key;
      p.piece.split = Split::kTrain;
      p.audio = generate_clip(cfg);
      corpus.push_back(std::move(p));
    }
  }
  return corpus;
}

void write_corpus(const std::filesystem::path& dir, std::span<const SynthPiece> corpus) {
  std::filesystem::create_directories(dir);
  std::vector<LabeledPiece> pieces;
  for (const auto& p : corpus) {
    write_wav(dir / p.piece.audio_path, p.audio);
    pieces.push_back(p.piece);
  }
  write_manifest(dir / "manifest.tsv", pieces);
}

}  // namespace keynet
