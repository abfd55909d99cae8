#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "keynet/key_label.hpp"

namespace keynet {

/// Chords with a major third and no minor third are major-family, the
/// reverse minor-family; power and suspended chords are neither.
enum class ChordQuality { kMajorFamily, kMinorFamily, kOther };

struct ChordAnnotation {
  int root = 0;  // pitch class
  ChordQuality quality = ChordQuality::kOther;
  double duration = 1.0;
};

enum class ChordWeighting { kDuration, kCount };

/// Mode from the chords rooted on the tonic: major if more than 90% of their
/// weight is major-family, minor if more than 90% is minor-family, none
/// otherwise (including when no chord sits on the tonic).
std::optional<KeyLabel> infer_billboard_mode(int tonic, std::span<const ChordAnnotation> chords,
                                             ChordWeighting weighting = ChordWeighting::kDuration);

/// Pieces annotated with more than one distinct tonic are discarded before
/// mode inference.
std::optional<KeyLabel> infer_piece_key(std::span<const int> tonics,
                                        std::span<const ChordAnnotation> chords,
                                        ChordWeighting weighting = ChordWeighting::kDuration);

struct ChordSymbol {
  int root = 0;
  ChordQuality quality = ChordQuality::kOther;
};

/// `<root>[:]<shorthand>[(intervals)][/bass]`, e.g. "A:min7", "E:7(#9)" or
/// "C:(1,3,5)". Family follows the third: a major third without a minor
/// third is major-family, the reverse minor-family, anything else (sus,
/// power chords, both thirds) other. Interval items 3, b3, *3 and *b3 add or
/// remove thirds. An empty shorthand means maj. "N" and "X" (no chord) give
/// nullopt; unknown shorthands throw FormatError.
std::optional<ChordSymbol> parse_chord_symbol(std::string_view symbol);

/// `start TAB end TAB chord_symbol` lines; no-chord segments are skipped.
std::vector<ChordAnnotation> read_chord_file(const std::filesystem::path& path);

enum class Split { kTrain, kValidation, kTest };

std::string_view split_name(Split s);
/// Accepts train, validation (or val) and test. Throws FormatError.
Split parse_split(std::string_view text);

struct LabeledPiece {
  std::string piece_id;
  std::filesystem::path audio_path;  // audio or precomputed feature file
  KeyLabel label;
  Split split = Split::kTrain;
};

struct SplitFractions {
  double train = 0.625;
  double validation = 0.125;
  double test = 0.25;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};

/// Validation and test sizes are floor(n * fraction); train takes the rest.
SplitSizes split_sizes(std::size_t n, const SplitFractions& fractions);

struct Partition {
  std::vector<LabeledPiece> train;
  std::vector<LabeledPiece> validation;
  std::vector<LabeledPiece> test;
};

/// Seeded shuffle followed by contiguous slicing into train, validation and
/// test. When `assignment` is given, it places every piece instead (pieces
/// missing from it raise FormatError). Throws InvalidArgument for fewer than
/// 3 pieces or fractions that are not positive or do not sum to 1.
Partition split_dataset(std::vector<LabeledPiece> pieces, const SplitFractions& fractions,
                        std::uint64_t seed,
                        const std::map<std::string, Split>* assignment = nullptr);

/// `piece_id TAB split` lines.
std::map<std::string, Split> read_split_file(const std::filesystem::path& path);

/// Corpus manifest: `piece_id TAB path TAB key TAB split` per line. Relative
/// paths are resolved against the manifest's directory on read.
std::vector<LabeledPiece> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, std::span<const LabeledPiece> pieces);

/// Sidecar `<piece_id>.key` holding one key annotation.
KeyLabel read_key_sidecar(const std::filesystem::path& path);

}  // namespace keynet
