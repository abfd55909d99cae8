#pragma once

#include <span>
#include <string>
#include <vector>

#include "keynet/audio_io.hpp"
#include "keynet/key_label.hpp"
#include "keynet/spectral.hpp"
#include "keynet/training.hpp"

namespace keynet {

inline constexpr int kMinShift = -4;
inline constexpr int kMaxShift = 7;
/// 24 bands per octave put consecutive semitones two bands apart.
inline constexpr int kBandsPerSemitone = 2;

struct AugmentedExample {
  LogFiltSpec spec;
  KeyLabel label;
  int shift = 0;
  std::string source_id;
};

/// Translates the band axis by 2 * semitones; vacated bands are zero (the
/// log of silence). Throws InvalidArgument if |semitones| > 12 or the
/// translation is not smaller than the band count.
LogFiltSpec shift_spectrogram(const LogFiltSpec& spec, int semitones);

/// Resampling pitch shift: the buffer is reinterpreted at
/// sample_rate * 2^(s/12) and resampled back to its own rate, which scales
/// pitch by 2^(s/12) and duration by 2^(-s/12). Throws InvalidArgument if
/// |semitones| > 12.
AudioBuffer shift_audio(const AudioBuffer& buf, int semitones);

/// Seed example for augment_dataset. `audio` is only read in audio mode;
/// `spec` only in spectrogram mode.
struct AugmentSource {
  std::string id;
  KeyLabel label;
  LogFiltSpec spec;
  AudioBuffer audio;
};

enum class AugmentMode { kSpectrogram, kAudio };

/// Every seed shifted by each of -4..+7 semitones (0 included), ordered by
/// source id then shift. Audio mode recomputes features with `fb`.
std::vector<AugmentedExample> augment_dataset(std::span<const AugmentSource> sources,
                                              AugmentMode mode, const Filterbank& fb,
                                              const FrontEndConfig& config = {});

std::vector<LabeledSpec> to_labeled(std::vector<AugmentedExample> examples);

}  // namespace keynet
