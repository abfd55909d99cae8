#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "keynet/audio_io.hpp"

namespace keynet {

/// Front-end constants: 8192-sample frames at 5 frames per second on
/// 44.1 kHz audio, 24 triangular bands per octave between 65 Hz and 2100 Hz.
struct FrontEndConfig {
  int sample_rate = kCanonicalSampleRate;
  int frame_size = 8192;
  int frame_rate = 5;
  int bands_per_octave = 24;
  double fmin = 65.0;
  double fmax = 2100.0;

  int hop_size() const { return sample_rate / frame_rate; }
};

/// Row-major (frames x bins) matrix of one-sided DFT magnitudes.
struct MagnitudeSpectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<float> values;
  int frame_size = 0;
  int hop_size = 0;
  int sample_rate = 0;

  float at(std::size_t t, std::size_t k) const { return values[t * bins + k]; }
  std::span<const float> frame(std::size_t t) const {
    return std::span<const float>(values).subspan(t * bins, bins);
  }
};

/// Triangular filter over a contiguous run of FFT bins.
struct TriangularFilter {
  std::size_t first_bin = 0;
  std::vector<float> weights;  // weights[i] applies to bin first_bin + i
  std::size_t center_bin = 0;
};

/// Log-spaced triangular filterbank. `nominal_freqs` holds the unsnapped
/// centres fmin * 2^(i / bands_per_octave); `center_freqs` holds one snapped
/// bin frequency per retained filter.
struct Filterbank {
  std::vector<TriangularFilter> filters;
  std::vector<double> center_freqs;
  std::vector<double> nominal_freqs;
  std::size_t num_bins = 0;

  std::size_t num_bands() const { return filters.size(); }
  /// Dense gain for (band, bin); zero outside the filter's support.
  float weight(std::size_t band, std::size_t bin) const;
};

/// Row-major (frames x bands) log-compressed filtered spectrogram; network
/// input.
struct LogFiltSpec {
  std::size_t frames = 0;
  std::size_t bands = 0;
  std::vector<float> values;
  float frame_rate = 5.0f;
  std::vector<double> band_centers;

  float at(std::size_t t, std::size_t f) const { return values[t * bands + f]; }
  float& at(std::size_t t, std::size_t f) { return values[t * bands + f]; }

  friend bool operator==(const LogFiltSpec& a, const LogFiltSpec& b) {
    return a.frames == b.frames && a.bands == b.bands && a.values == b.values;
  }
};

/// Hann-windowed magnitude STFT. Frame t is centred on sample t * hop, with
/// zero padding beyond the signal; T = ceil(len / hop). Throws
/// InvalidArgument for a sample rate other than config.sample_rate or for
/// empty audio.
MagnitudeSpectrogram stft_magnitude(const AudioBuffer& audio,
                                    const FrontEndConfig& config = {});

/// Throws InvalidArgument unless 0 < fmin < fmax < sample_rate / 2 and at
/// least two distinct snapped centres exist.
Filterbank build_log_filterbank(int sample_rate, int frame_size,
                                int bands_per_octave, double fmin,
                                double fmax);

Filterbank build_log_filterbank(const FrontEndConfig& config = {});

/// values = log(1 + fb * |S|) per frame (natural log).
LogFiltSpec apply_filterbank(const MagnitudeSpectrogram& magnitudes,
                             const Filterbank& fb, float frame_rate);

LogFiltSpec compute_logfilt_spec(const AudioBuffer& audio,
                                 const Filterbank& fb,
                                 const FrontEndConfig& config = {});

/// Linear filterbank energies fb * |S| without log compression.
std::vector<float> filtered_magnitudes(const MagnitudeSpectrogram& magnitudes,
                                       const Filterbank& fb);

// Feature dump: "LFSP", version, T, F (u32) and frame rate (f32), then the
// row-major float payload. Little-endian throughout.
void write_lfsp(const std::filesystem::path& path, const LogFiltSpec& spec);
LogFiltSpec read_lfsp(const std::filesystem::path& path);

}  // namespace keynet
