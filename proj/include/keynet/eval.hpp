#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "keynet/key_label.hpp"

namespace keynet {

/// Error categories of a key prediction, checked in this order.
enum class Category { kCorrect = 0, kFifth, kRelative, kParallel, kOther };

inline constexpr std::size_t kNumCategories = 5;

/// Correct: same tonic and mode. Fifth: same mode, tonics a fifth apart in
/// either direction. Relative: modes differ and the minor key's tonic lies
/// three semitones below the major key's. Parallel: modes differ, same tonic.
Category categorize(KeyLabel pred, KeyLabel target);

/// 1, 0.5, 0.3, 0.2 and 0 for Correct, Fifth, Relative, Parallel and Other.
double category_weight(Category c);

std::string_view category_name(Category c);

struct EvalReport {
  std::size_t n = 0;
  std::array<std::size_t, kNumCategories> counts{};
  std::array<double, kNumCategories> ratios{};
  double weighted = 0.0;

  double ratio(Category c) const { return ratios[static_cast<std::size_t>(c)]; }
  std::size_t count(Category c) const { return counts[static_cast<std::size_t>(c)]; }
};

using KeyPair = std::pair<KeyLabel, KeyLabel>;  // (prediction, target)

/// Category ratios over all pairs and weighted = r_c + 0.5 r_f + 0.3 r_r +
/// 0.2 r_p. Throws InvalidArgument for an empty list.
EvalReport evaluate(std::span<const KeyPair> pairs);

/// Aligned text table, values as percentages with one decimal.
std::string format_report_table(const EvalReport& report);

/// "n,r_c,r_f,r_r,r_p,r_o,w" with ratios as fractions.
std::string format_report_summary(const EvalReport& report);

struct WilcoxonResult {
  double statistic = 0.0;  // min(W+, W-)
  double p_value = 1.0;    // two-sided
  std::size_t nonzero = 0;
  bool exact = true;
};

/// Paired signed-rank test. Zero differences are dropped, tied absolute
/// differences get average ranks. Exact null distribution (conditional on
/// the tie pattern) for up to 20 non-zero differences; otherwise a normal
/// approximation with tie-corrected variance. Throws InvalidArgument if the
/// lengths differ or are below 5.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> scores_a,
                                    std::span<const double> scores_b);

inline constexpr std::size_t kWilcoxonExactLimit = 20;

/// Reads `piece_id TAB key` lines; blank lines and lines starting with '#'
/// are skipped. Throws IoError or FormatError (with the line number).
std::vector<std::pair<std::string, KeyLabel>> read_key_file(const std::filesystem::path& path);

void write_key_file(const std::filesystem::path& path,
                    std::span<const std::pair<std::string, KeyLabel>> entries);

}  // namespace keynet
