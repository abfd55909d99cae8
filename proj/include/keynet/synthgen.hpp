#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "keynet/audio_io.hpp"
#include "keynet/dataset.hpp"
#include "keynet/key_label.hpp"

namespace keynet {

/// Scale degrees (0-based) of I-IV-V-I; rendered over the major scale or the
/// harmonic minor scale (which makes the fifth-degree triad major).
inline const std::vector<int> kDefaultProgression = {0, 3, 4, 0};

struct SynthConfig {
  KeyLabel key;
  double duration = 6.0;      // seconds
  int harmonics = 6;          // partial h has amplitude 1/h
  std::vector<int> progression = kDefaultProgression;
  double tempo = 4.0 / 6.0;   // chords per second
  std::uint64_t rng_seed = 0;
  double noise_level = 0.0;   // peak amplitude of uniform white noise
  int sample_rate = kCanonicalSampleRate;
};

/// Pitch classes of the key's scale (major, or harmonic minor), tonic first.
std::vector<int> scale_pitch_classes(KeyLabel key);

/// Additive rendering of the progression: each chord slot holds the root in
/// the bass octave (MIDI 48-59) at three times the voice level, and the
/// three triad tones at seeded random octaves in MIDI 60-83. The last slot
/// is always the tonic triad. Peak is normalised to 0.8 before noise is
/// added. Throws InvalidArgument on an invalid config.
AudioBuffer generate_clip(const SynthConfig& config);

struct SynthPiece {
  LabeledPiece piece;
  AudioBuffer audio;
};

/// 24 * per_class clips, per_class for every key class, each with its own
/// seed derived from base_seed. Pieces are named "key<class>_<n>", with the
/// class zero-padded to two digits and n to three, and labelled as the train
/// split; audio_path is "<id>.wav".
std::vector<SynthPiece> generate_corpus(int per_class, std::uint64_t base_seed,
                                        const SynthConfig& base = {});

/// Writes every clip as a 16-bit WAV under `dir` plus `dir/manifest.tsv`.
void write_corpus(const std::filesystem::path& dir, std::span<const SynthPiece> corpus);

}  // namespace keynet
