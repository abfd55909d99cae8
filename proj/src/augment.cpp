#include "keynet/augment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "keynet/error.hpp"

namespace keynet {

namespace {

void check_semitones(int semitones) {
  if (std::abs(semitones) > 12) {
    throw InvalidArgument("pitch shift limited to +-12 semitones, got " +
                          std::to_string(semitones));
  }
}

}  // namespace

LogFiltSpec shift_spectrogram(const LogFiltSpec& spec, int semitones) {
  check_semitones(semitones);
  const std::ptrdiff_t offset = static_cast<std::ptrdiff_t>(semitones) * kBandsPerSemitone;
  const auto F = static_cast<std::ptrdiff_t>(spec.bands);
  if (std::abs(offset) >= F && semitones != 0) {
    throw InvalidArgument("shift of " + std::to_string(semitones) +
                          " semitones exceeds the band count");
  }
  LogFiltSpec out = spec;
  std::fill(out.values.begin(), out.values.end(), 0.0f);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    for (std::ptrdiff_t f = 0; f < F; ++f) {
      const std::ptrdiff_t src = f - offset;
      if (src >= 0 && src < F) {
        out.at(t, static_cast<std::size_t>(f)) = spec.at(t, static_cast<std::size_t>(src));
      }
    }
  }
  return out;
}

AudioBuffer shift_audio(const AudioBuffer& buf, int semitones) {
  check_semitones(semitones);
  if (semitones == 0) return buf;
  const double rate = buf.sample_rate();
  const double reinterpreted = rate * std::pow(2.0, semitones / 12.0);
  return AudioBuffer(resample_samples(buf.samples(), reinterpreted, rate), buf.sample_rate());
}

std::vector<AugmentedExample> augment_dataset(std::span<const AugmentSource> sources,
                                              AugmentMode mode, const Filterbank& fb,
                                              const FrontEndConfig& config) {
  if (sources.empty()) throw InvalidArgument("augment_dataset: no examples");
  std::vector<const AugmentSource*> sorted;
  for (const auto& s : sources) sorted.push_back(&s);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const AugmentSource* a, const AugmentSource* b) { return a->id < b->id; });

  std::vector<AugmentedExample> out;
  out.reserve(sources.size() * (kMaxShift - kMinShift + 1));
  for (const AugmentSource* src : sorted) {
    for (int s = kMinShift; s <= kMaxShift; ++s) {
      AugmentedExample ex;
      ex.label = src->label.transposed(s);
      ex.shift = s;
      ex.source_id = src->id;
      if (mode == AugmentMode::kSpectrogram) {
        ex.spec = shift_spectrogram(src->spec, s);
      } else {
        ex.spec = compute_logfilt_spec(shift_audio(src->audio, s), fb, config);
      }
      out.push_back(std::move(ex));
    }
  }
  return out;
}

std::vector<LabeledSpec> to_labeled(std::vector<AugmentedExample> examples) {
  std::vector<LabeledSpec> out;
  out.reserve(examples.size());
  for (auto& ex : examples) {
    out.push_back({std::move(ex.spec), ex.label,
                   ex.source_id + "@" + std::to_string(ex.shift)});
  }
  return out;
}

}  // namespace keynet
