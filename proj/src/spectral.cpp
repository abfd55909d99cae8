#include "keynet/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "binary_io.hpp"
#include "keynet/error.hpp"

namespace keynet {

namespace {

constexpr std::uint32_t kLfspVersion = 1;

// FFTW plan creation is not thread-safe; execution with the new-array
// interface is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(int n)
      : n_(n),
        in_(fftw_alloc_real(static_cast<std::size_t>(n))),
        out_(fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1))) {
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }

  void magnitudes(float* dst) {
    fftw_execute(plan_);
    for (int k = 0; k <= n_ / 2; ++k) {
      dst[k] = static_cast<float>(std::hypot(out_[k][0], out_[k][1]));
    }
  }

 private:
  int n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] =
        0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / (n - 1)));
  }
  return w;
}

}  // namespace

float Filterbank::weight(std::size_t band, std::size_t bin) const {
  const TriangularFilter& f = filters.at(band);
  if (bin < f.first_bin || bin >= f.first_bin + f.weights.size()) return 0.0f;
  return f.weights[bin - f.first_bin];
}

MagnitudeSpectrogram stft_magnitude(const AudioBuffer& audio,
                                    const FrontEndConfig& config) {
  if (audio.sample_rate() != config.sample_rate) {
    throw InvalidArgument("stft_magnitude: expected sample rate " +
                          std::to_string(config.sample_rate) + ", got " +
                          std::to_string(audio.sample_rate()));
  }
  if (audio.empty()) throw InvalidArgument("stft_magnitude: empty audio");

  const int n = config.frame_size;
  const int hop = config.hop_size();
  const std::size_t len = audio.size();
  const std::size_t frames = (len + static_cast<std::size_t>(hop) - 1) /
                             static_cast<std::size_t>(hop);

  MagnitudeSpectrogram spec;
  spec.frames = frames;
  spec.bins = static_cast<std::size_t>(n / 2 + 1);
  spec.values.assign(spec.frames * spec.bins, 0.0f);
  spec.frame_size = n;
  spec.hop_size = hop;
  spec.sample_rate = config.sample_rate;

  const std::vector<double> window = hann_window(n);
  RealFft fft(n);
  auto samples = audio.samples();
  for (std::size_t t = 0; t < frames; ++t) {
    const auto start = static_cast<std::ptrdiff_t>(t) * hop - n / 2;
    double* in = fft.input();
    for (int i = 0; i < n; ++i) {
      std::ptrdiff_t idx = start + i;
      double s = (idx >= 0 && idx < static_cast<std::ptrdiff_t>(len))
                     ? samples[static_cast<std::size_t>(idx)]
                     : 0.0;
      in[i] = s * window[static_cast<std::size_t>(i)];
    }
    fft.magnitudes(spec.values.data() + t * spec.bins);
  }
  return spec;
}

Filterbank build_log_filterbank(int sample_rate, int frame_size,
                                int bands_per_octave, double fmin,
                                double fmax) {
  const double nyquist = sample_rate / 2.0;
  if (!(fmin > 0.0) || !(fmax > fmin)) {
    throw InvalidArgument("build_log_filterbank: need 0 < fmin < fmax");
  }
  if (fmax >= nyquist) {
    throw InvalidArgument("build_log_filterbank: fmax must be below Nyquist");
  }
  if (bands_per_octave <= 0 || frame_size <= 0) {
    throw InvalidArgument(
        "build_log_filterbank: bands per octave and frame size must be "
        "positive");
  }

  const double bin_hz = static_cast<double>(sample_rate) / frame_size;
  const auto num_bins = static_cast<std::size_t>(frame_size / 2 + 1);
  auto snap = [&](double f) {
    auto b = static_cast<std::ptrdiff_t>(std::llround(f / bin_hz));
    return std::clamp<std::ptrdiff_t>(b, 0,
                                      static_cast<std::ptrdiff_t>(num_bins) - 1);
  };

  Filterbank fb;
  fb.num_bins = num_bins;
  for (int i = 0;; ++i) {
    double f = fmin * std::pow(2.0, static_cast<double>(i) / bands_per_octave);
    // Relative slack keeps an fmax that lies exactly on the grid.
    if (f > fmax * (1.0 + 1e-12)) break;
    fb.nominal_freqs.push_back(f);
  }

  std::vector<std::ptrdiff_t> centers;
  for (double f : fb.nominal_freqs) {
    std::ptrdiff_t b = snap(f);
    if (centers.empty() || centers.back() != b) centers.push_back(b);
  }
  if (centers.size() < 2) {
    throw InvalidArgument(
        "build_log_filterbank: fewer than 2 distinct snapped centres");
  }

  // Outer feet come from the nominal neighbours just outside [fmin, fmax],
  // pushed at least one bin away so the boundary triangles are not
  // degenerate.
  const double ratio = std::pow(2.0, 1.0 / bands_per_octave);
  std::ptrdiff_t left_foot =
      std::min(snap(fb.nominal_freqs.front() / ratio), centers.front() - 1);
  std::ptrdiff_t right_foot =
      std::max(snap(fb.nominal_freqs.back() * ratio), centers.back() + 1);
  left_foot = std::max<std::ptrdiff_t>(left_foot, 0);
  right_foot =
      std::min<std::ptrdiff_t>(right_foot, static_cast<std::ptrdiff_t>(num_bins) - 1);

  for (std::size_t i = 0; i < centers.size(); ++i) {
    const std::ptrdiff_t lo = i == 0 ? left_foot : centers[i - 1];
    const std::ptrdiff_t mid = centers[i];
    const std::ptrdiff_t hi = i + 1 == centers.size() ? right_foot : centers[i + 1];
    TriangularFilter filt;
    filt.center_bin = static_cast<std::size_t>(mid);
    // Feet carry zero gain, so the support is (lo, hi).
    const std::ptrdiff_t first = std::min(lo + 1, mid);
    const std::ptrdiff_t last = std::max(hi - 1, mid);
    filt.first_bin = static_cast<std::size_t>(first);
    for (std::ptrdiff_t b = first; b <= last; ++b) {
      double w;
      if (b < mid) {
        w = static_cast<double>(b - lo) / static_cast<double>(mid - lo);
      } else if (b > mid) {
        w = static_cast<double>(hi - b) / static_cast<double>(hi - mid);
      } else {
        w = 1.0;
      }
      filt.weights.push_back(static_cast<float>(w));
    }
    fb.filters.push_back(std::move(filt));
    fb.center_freqs.push_back(static_cast<double>(mid) * bin_hz);
  }
  return fb;
}

Filterbank build_log_filterbank(const FrontEndConfig& config) {
  return build_log_filterbank(config.sample_rate, config.frame_size,
                              config.bands_per_octave, config.fmin,
                              config.fmax);
}

std::vector<float> filtered_magnitudes(const MagnitudeSpectrogram& magnitudes,
                                       const Filterbank& fb) {
  if (magnitudes.bins != fb.num_bins) {
    throw ShapeError("filterbank bin count does not match spectrogram");
  }
  const std::size_t bands = fb.num_bands();
  std::vector<float> out(magnitudes.frames * bands);
  for (std::size_t t = 0; t < magnitudes.frames; ++t) {
    const float* row = magnitudes.values.data() + t * magnitudes.bins;
    for (std::size_t f = 0; f < bands; ++f) {
      const TriangularFilter& filt = fb.filters[f];
      double acc = 0.0;
      for (std::size_t i = 0; i < filt.weights.size(); ++i) {
        acc += static_cast<double>(filt.weights[i]) * row[filt.first_bin + i];
      }
      out[t * bands + f] = static_cast<float>(acc);
    }
  }
  return out;
}

LogFiltSpec apply_filterbank(const MagnitudeSpectrogram& magnitudes,
                             const Filterbank& fb, float frame_rate) {
  LogFiltSpec spec;
  spec.frames = magnitudes.frames;
  spec.bands = fb.num_bands();
  spec.frame_rate = frame_rate;
  spec.band_centers = fb.center_freqs;
  spec.values = filtered_magnitudes(magnitudes, fb);
  for (float& v : spec.values) v = std::log1p(v);
  return spec;
}

LogFiltSpec compute_logfilt_spec(const AudioBuffer& audio,
                                 const Filterbank& fb,
                                 const FrontEndConfig& config) {
  return apply_filterbank(stft_magnitude(audio, config), fb,
                          static_cast<float>(config.frame_rate));
}

void write_lfsp(const std::filesystem::path& path, const LogFiltSpec& spec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  out.write("LFSP", 4);
  detail::write_u32(out, kLfspVersion);
  detail::write_u32(out, static_cast<std::uint32_t>(spec.frames));
  detail::write_u32(out, static_cast<std::uint32_t>(spec.bands));
  detail::write_f32(out, spec.frame_rate);
  for (float v : spec.values) detail::write_f32(out, v);
  if (!out) throw IoError("write failed: " + path.string());
}

LogFiltSpec read_lfsp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string what = "feature file " + path.string();
  detail::expect_magic(in, "LFSP", what);
  std::uint32_t version = detail::read_u32(in, what);
  if (version != kLfspVersion) {
    throw UnsupportedFormat(what + ": unsupported version " +
                            std::to_string(version));
  }
  LogFiltSpec spec;
  spec.frames = detail::read_u32(in, what);
  spec.bands = detail::read_u32(in, what);
  spec.frame_rate = detail::read_f32(in, what);
  spec.values.resize(spec.frames * spec.bands);
  for (float& v : spec.values) {
    v = detail::read_f32(in, what);
    if (!std::isfinite(v)) throw FormatError(what + ": non-finite value");
  }
  return spec;
}

}  // namespace keynet
