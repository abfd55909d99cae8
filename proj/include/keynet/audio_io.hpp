#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace keynet {

inline constexpr int kCanonicalSampleRate = 44100;

/// Mono sample sequence with its sampling rate. Samples are finite and
/// nominally in [-1, 1].
class AudioBuffer {
 public:
  AudioBuffer() = default;
  /// Throws InvalidArgument if sample_rate <= 0 or any sample is non-finite.
  AudioBuffer(std::vector<float> samples, int sample_rate);

  int sample_rate() const { return sample_rate_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  std::span<const float> samples() const { return samples_; }
  double duration() const {
    return static_cast<double>(samples_.size()) / sample_rate_;
  }

  friend bool operator==(const AudioBuffer&, const AudioBuffer&) = default;

 private:
  std::vector<float> samples_;
  int sample_rate_ = kCanonicalSampleRate;
};

enum class WavEncoding { kPcm16, kFloat32 };

/// Decodes a RIFF/WAVE file (PCM 8/16/24/32-bit or IEEE float32, one or two
/// channels), mixes to mono by channel mean and resamples to 44.1 kHz.
/// Throws IoError, FormatError or UnsupportedFormat.
AudioBuffer load_wav(const std::filesystem::path& path);

/// Like load_wav, but keeps the file's native sample rate.
AudioBuffer load_wav_native_rate(const std::filesystem::path& path);

/// Decodes WAV bytes already held in memory, native rate, mono mixdown.
AudioBuffer decode_wav(std::span<const std::uint8_t> bytes);

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio,
               WavEncoding encoding = WavEncoding::kPcm16);

std::vector<std::uint8_t> encode_wav(const AudioBuffer& audio,
                                     WavEncoding encoding);

/// Hann-windowed sinc interpolator; taps per side at the output rate.
inline constexpr int kResampleTapsPerSide = 16;

/// Band-limited resampling. Output length is
/// round(len * target_rate / sample_rate). Same-rate input is returned
/// unchanged. Throws InvalidArgument if target_rate <= 0.
AudioBuffer resample(const AudioBuffer& buf, int target_rate);

/// Resamples samples taken at `source_rate` (which need not be an integer)
/// to `target_rate`. Backs both `resample` and time-domain pitch shifting.
std::vector<float> resample_samples(std::span<const float> samples,
                                    double source_rate, double target_rate);

}  // namespace keynet
