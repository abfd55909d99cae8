#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace keynet {

enum class Mode : std::uint8_t { kMajor = 0, kMinor = 1 };

inline constexpr int kNumKeyClasses = 24;

/// Global key: tonic pitch class (C = 0 ... B = 11) and mode. The class
/// index tonic + 12 * (mode == minor) enumerates all 24 keys.
class KeyLabel {
 public:
  constexpr KeyLabel() = default;
  /// Throws InvalidArgument unless 0 <= tonic <= 11.
  KeyLabel(int tonic, Mode mode);

  static KeyLabel from_class_index(int index);

  constexpr int tonic() const { return tonic_; }
  constexpr Mode mode() const { return mode_; }
  constexpr bool is_minor() const { return mode_ == Mode::kMinor; }
  constexpr int class_index() const { return tonic_ + (is_minor() ? 12 : 0); }

  /// Same mode, tonic moved by `semitones` around the pitch-class circle.
  KeyLabel transposed(int semitones) const;

  friend constexpr bool operator==(KeyLabel, KeyLabel) = default;

 private:
  int tonic_ = 0;
  Mode mode_ = Mode::kMajor;
};

/// Canonical sharp spelling, e.g. "F# minor".
std::string to_string(KeyLabel key);

/// Pitch-class name with sharps ("C", "C#", ... "B").
std::string_view pitch_class_name(int pitch_class);

/// Parses `<A-G><optional # or b> <major|minor>` case-insensitively;
/// enharmonic spellings collapse. Throws FormatError quoting the input.
KeyLabel parse_key_annotation(std::string_view text);

/// Parses a note name (`<A-G><optional # or b>`) into a pitch class. Returns
/// the number of characters consumed, or 0 if the text does not start with a
/// note name.
std::size_t parse_pitch_class(std::string_view text, int& pitch_class);

}  // namespace keynet
