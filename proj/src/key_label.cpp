#include "keynet/key_label.hpp"

#include <array>
#include <cctype>

#include "keynet/error.hpp"

namespace keynet {

namespace {

constexpr std::array<std::string_view, 12> kNames = {
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"};

int modulo12(int v) { return ((v % 12) + 12) % 12; }

std::string lower(std::string_view s) {
  std::string r(s);
  for (char& c : r) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return r;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

KeyLabel::KeyLabel(int tonic, Mode mode) : tonic_(tonic), mode_(mode) {
  if (tonic < 0 || tonic > 11) {
    throw InvalidArgument("tonic out of range: " + std::to_string(tonic));
  }
}

KeyLabel KeyLabel::from_class_index(int index) {
  if (index < 0 || index >= kNumKeyClasses) {
    throw InvalidArgument("class index out of range: " + std::to_string(index));
  }
  return KeyLabel(index % 12, index >= 12 ? Mode::kMinor : Mode::kMajor);
}

KeyLabel KeyLabel::transposed(int semitones) const {
  return KeyLabel(modulo12(tonic_ + semitones), mode_);
}

std::string_view pitch_class_name(int pitch_class) {
  return kNames.at(static_cast<std::size_t>(modulo12(pitch_class)));
}

std::string to_string(KeyLabel key) {
  std::string s(pitch_class_name(key.tonic()));
  s += key.is_minor() ? " minor" : " major";
  return s;
}

std::size_t parse_pitch_class(std::string_view text, int& pitch_class) {
  if (text.empty()) return 0;
  static constexpr std::array<int, 7> kLetter = {9, 11, 0, 2, 4, 5, 7};  // A..G
  char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
  if (letter < 'A' || letter > 'G') return 0;
  int pc = kLetter[static_cast<std::size_t>(letter - 'A')];
  std::size_t used = 1;
  if (text.size() > 1) {
    if (text[1] == '#') {
      ++pc;
      ++used;
    } else if (text[1] == 'b') {
      --pc;
      ++used;
    }
  }
  pitch_class = modulo12(pc);
  return used;
}

KeyLabel parse_key_annotation(std::string_view text) {
  std::string_view s = trim(text);
  auto fail = [&]() -> KeyLabel {
    throw FormatError("unparseable key annotation: '" + std::string(text) + "'");
  };
  int pc = 0;
  std::size_t used = parse_pitch_class(s, pc);
  if (used == 0) return fail();
  std::string_view rest = s.substr(used);
  if (rest.empty() || !std::isspace(static_cast<unsigned char>(rest.front()))) {
    return fail();
  }
  std::string mode = lower(trim(rest));
  if (mode == "major") return KeyLabel(pc, Mode::kMajor);
  if (mode == "minor") return KeyLabel(pc, Mode::kMinor);
  return fail();
}

}  // namespace keynet
