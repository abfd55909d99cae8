#include "keynet/audio_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <optional>
#include <string>

#include "keynet/error.hpp"

namespace keynet {

AudioBuffer::AudioBuffer(std::vector<float> samples, int sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
  if (sample_rate_ <= 0) {
    throw InvalidArgument("AudioBuffer: sample rate must be positive, got " +
                          std::to_string(sample_rate_));
  }
  for (float s : samples_) {
    if (!std::isfinite(s)) {
      throw InvalidArgument("AudioBuffer: non-finite sample");
    }
  }
}

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
  }
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

// Decodes one sample starting at p. Integer PCM is scaled by the type's
// maximum magnitude so that the most negative code maps to -1.
double decode_sample(const std::uint8_t* p, const FmtChunk& fmt) {
  if (fmt.format == kFormatFloat) {
    float v;
    std::uint32_t bits = read_u32(p);
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  switch (fmt.bits) {
    case 8:
      return (static_cast<int>(p[0]) - 128) / 128.0;
    case 16:
      return static_cast<std::int16_t>(read_u16(p)) / 32768.0;
    case 24: {
      std::int32_t v = static_cast<std::int32_t>(
          (static_cast<std::uint32_t>(p[0]) << 8) |
          (static_cast<std::uint32_t>(p[1]) << 16) |
          (static_cast<std::uint32_t>(p[2]) << 24));
      return (v >> 8) / 8388608.0;
    }
    case 32:
      return static_cast<std::int32_t>(read_u32(p)) / 2147483648.0;
    default:
      return 0.0;
  }
}

}  // namespace

AudioBuffer decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("not a RIFF/WAVE file");
  }
  std::optional<FmtChunk> fmt;
  std::span<const std::uint8_t> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* header = bytes.data() + pos;
    std::uint32_t chunk_size = read_u32(header + 4);
    std::size_t body = pos + 8;
    if (chunk_size > bytes.size() - body) {
      // Tolerate a truncated data chunk, as many writers get the size wrong
      // when streaming; anything else is malformed.
      if (std::memcmp(header, "data", 4) != 0) {
        throw FormatError("chunk extends past end of file");
      }
      chunk_size = static_cast<std::uint32_t>(bytes.size() - body);
    }
    if (std::memcmp(header, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw FormatError("fmt chunk too short");
      const std::uint8_t* f = bytes.data() + body;
      FmtChunk c;
      c.format = read_u16(f);
      c.channels = read_u16(f + 2);
      c.sample_rate = read_u32(f + 4);
      c.block_align = read_u16(f + 12);
      c.bits = read_u16(f + 14);
      if (c.format == kFormatExtensible) {
        if (chunk_size < 40) throw FormatError("extensible fmt chunk too short");
        c.format = read_u16(f + 24);
      }
      fmt = c;
    } else if (std::memcmp(header, "data", 4) == 0) {
      data = bytes.subspan(body, chunk_size);
      have_data = true;
    }
    pos = body + chunk_size + (chunk_size & 1u);
  }
  if (!fmt) throw FormatError("missing fmt chunk");
  if (!have_data) throw FormatError("missing data chunk");

  const FmtChunk& f = *fmt;
  if (f.format != kFormatPcm && f.format != kFormatFloat) {
    throw UnsupportedFormat("unsupported WAV format code " +
                            std::to_string(f.format));
  }
  if (f.format == kFormatPcm && f.bits != 8 && f.bits != 16 && f.bits != 24 &&
      f.bits != 32) {
    throw UnsupportedFormat("unsupported PCM bit depth " +
                            std::to_string(f.bits));
  }
  if (f.format == kFormatFloat && f.bits != 32) {
    throw UnsupportedFormat("unsupported float bit depth " +
                            std::to_string(f.bits));
  }
  if (f.channels < 1 || f.channels > 2) {
    throw UnsupportedFormat("unsupported channel count " +
                            std::to_string(f.channels));
  }
  if (f.sample_rate == 0) throw FormatError("sample rate is zero");
  const std::size_t bytes_per_sample = f.bits / 8;
  if (f.block_align != bytes_per_sample * f.channels) {
    throw FormatError("block alignment does not match channels and bit depth");
  }

  const std::size_t frames = data.size() / f.block_align;
  std::vector<float> mono(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const std::uint8_t* frame = data.data() + i * f.block_align;
    double sum = 0.0;
    for (std::size_t ch = 0; ch < f.channels; ++ch) {
      sum += decode_sample(frame + ch * bytes_per_sample, f);
    }
    double v = sum / f.channels;
    if (!std::isfinite(v)) throw FormatError("non-finite sample in data chunk");
    mono[i] = static_cast<float>(v);
  }
  return AudioBuffer(std::move(mono), static_cast<int>(f.sample_rate));
}

AudioBuffer load_wav_native_rate(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  try {
    return decode_wav(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const UnsupportedFormat& e) {
    throw UnsupportedFormat(path.string() + ": " + e.what());
  }
}

AudioBuffer load_wav(const std::filesystem::path& path) {
  AudioBuffer native = load_wav_native_rate(path);
  return resample(native, kCanonicalSampleRate);
}

std::vector<std::uint8_t> encode_wav(const AudioBuffer& audio,
                                     WavEncoding encoding) {
  const bool is_float = encoding == WavEncoding::kFloat32;
  const std::uint16_t bits = is_float ? 32 : 16;
  const std::uint16_t block = bits / 8;
  const auto data_size = static_cast<std::uint32_t>(audio.size() * block);

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_size);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, is_float ? kFormatFloat : kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate()));
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate()) * block);
  put_u16(out, block);
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_size);
  for (float s : audio.samples()) {
    if (is_float) {
      std::uint32_t raw;
      std::memcpy(&raw, &s, sizeof raw);
      put_u32(out, raw);
    } else {
      double scaled = std::round(static_cast<double>(s) * 32768.0);
      scaled = std::clamp(scaled, -32768.0, 32767.0);
      put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio,
               WavEncoding encoding) {
  std::vector<std::uint8_t> bytes = encode_wav(audio, encoding);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

namespace {

// Hann-windowed sinc sampled on [0, taps] at kTableResolution points per unit
// of the normalized argument; linear interpolation in between.
class SincTable {
 public:
  static constexpr int kTableResolution = 512;

  SincTable() : values_(kResampleTapsPerSide * kTableResolution + 2) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      double v = static_cast<double>(i) / kTableResolution;
      values_[i] = kernel(v);
    }
  }

  double operator()(double v) const {
    v = std::abs(v);
    if (v >= kResampleTapsPerSide) return 0.0;
    double x = v * kTableResolution;
    auto i = static_cast<std::size_t>(x);
    double frac = x - static_cast<double>(i);
    return values_[i] + frac * (values_[i + 1] - values_[i]);
  }

 private:
  static double kernel(double v) {
    if (v >= kResampleTapsPerSide) return 0.0;
    double sinc = v == 0.0 ? 1.0
                           : std::sin(std::numbers::pi * v) /
                                 (std::numbers::pi * v);
    double window =
        0.5 * (1.0 + std::cos(std::numbers::pi * v / kResampleTapsPerSide));
    return sinc * window;
  }

  std::vector<double> values_;
};

const SincTable& sinc_table() {
  static const SincTable table;
  return table;
}

}  // namespace

std::vector<float> resample_samples(std::span<const float> samples,
                                    double source_rate, double target_rate) {
  if (!(target_rate > 0.0) || !(source_rate > 0.0)) {
    throw InvalidArgument("resample: rates must be positive");
  }
  const auto out_len = static_cast<std::size_t>(std::llround(
      static_cast<double>(samples.size()) * target_rate / source_rate));
  std::vector<float> out(out_len);
  if (samples.empty()) return out;

  const SincTable& table = sinc_table();
  const double step = source_rate / target_rate;
  // Low-pass at the lower of the two Nyquist frequencies.
  const double cutoff = std::min(1.0, target_rate / source_rate);
  const double half_width = kResampleTapsPerSide / cutoff;
  const auto n_in = static_cast<std::ptrdiff_t>(samples.size());

  for (std::size_t n = 0; n < out_len; ++n) {
    const double x = static_cast<double>(n) * step;
    auto lo = static_cast<std::ptrdiff_t>(std::ceil(x - half_width));
    auto hi = static_cast<std::ptrdiff_t>(std::floor(x + half_width));
    double acc = 0.0;
    double norm = 0.0;
    for (std::ptrdiff_t k = lo; k <= hi; ++k) {
      double w = table(cutoff * (x - static_cast<double>(k)));
      norm += w;
      if (k >= 0 && k < n_in) acc += w * samples[static_cast<std::size_t>(k)];
    }
    out[n] = static_cast<float>(norm != 0.0 ? acc / norm : 0.0);
  }
  return out;
}

AudioBuffer resample(const AudioBuffer& buf, int target_rate) {
  if (target_rate <= 0) {
    throw InvalidArgument("resample: target rate must be positive, got " +
                          std::to_string(target_rate));
  }
  if (target_rate == buf.sample_rate()) return buf;
  return AudioBuffer(
      resample_samples(buf.samples(), buf.sample_rate(), target_rate),
      target_rate);
}

}  // namespace keynet
