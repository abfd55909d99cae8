#include "keynet/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "keynet/error.hpp"

namespace keynet {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::string lower(std::string_view s) {
  std::string r(s);
  for (char& c : r) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return r;
}

// Calls fn(fields, line_number) for each non-empty, non-comment line.
template <class Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    try {
      fn(split_tabs(line));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace

std::optional<KeyLabel> infer_billboard_mode(int tonic, std::span<const ChordAnnotation> chords,
                                             ChordWeighting weighting) {
  double major = 0.0, minor = 0.0, total = 0.0;
  for (const auto& c : chords) {
    if (c.root != tonic) continue;
    const double w = weighting == ChordWeighting::kDuration ? c.duration : 1.0;
    total += w;
    if (c.quality == ChordQuality::kMajorFamily) major += w;
    if (c.quality == ChordQuality::kMinorFamily) minor += w;
  }
  if (!(total > 0.0)) return std::nullopt;
  if (major / total > 0.9) return KeyLabel(tonic, Mode::kMajor);
  if (minor / total > 0.9) return KeyLabel(tonic, Mode::kMinor);
  return std::nullopt;
}

std::optional<KeyLabel> infer_piece_key(std::span<const int> tonics,
                                        std::span<const ChordAnnotation> chords,
                                        ChordWeighting weighting) {
  std::set<int> distinct(tonics.begin(), tonics.end());
  if (distinct.size() != 1) return std::nullopt;
  return infer_billboard_mode(*distinct.begin(), chords, weighting);
}

namespace {

struct Thirds {
  bool major = false;
  bool minor = false;
};

// Third content of the shorthand qualities in common chord-annotation use.
std::optional<Thirds> shorthand_thirds(const std::string& q) {
  static const std::set<std::string> kMajor = {"",     "maj",  "aug",   "maj7", "7",    "maj6",
                                               "6",    "9",    "maj9",  "11",   "13",   "maj11",
                                               "maj13", "aug7", "7sus"};
  static const std::set<std::string> kMinor = {"min",   "dim",   "min7",  "dim7",   "hdim7",
                                               "minmaj7", "min6", "min9", "min11", "min13",
                                               "hdim", "m",     "m7"};
  static const std::set<std::string> kNeither = {"sus2", "sus4", "sus", "5", "1", "other"};
  if (kMajor.count(q)) return Thirds{true, false};
  if (kMinor.count(q)) return Thirds{false, true};
  if (kNeither.count(q)) return Thirds{};
  return std::nullopt;
}

}  // namespace

std::optional<ChordSymbol> parse_chord_symbol(std::string_view symbol) {
  if (symbol == "N" || symbol == "X") return std::nullopt;
  const auto bad = [&] {
    return FormatError("bad chord symbol '" + std::string(symbol) + "'");
  };
  ChordSymbol c;
  const std::size_t used = parse_pitch_class(symbol, c.root);
  if (used == 0) throw bad();
  std::string_view rest = symbol.substr(used);
  if (!rest.empty() && rest.front() == ':') rest.remove_prefix(1);
  if (const auto slash = rest.find('/'); slash != std::string_view::npos) {
    rest = rest.substr(0, slash);  // the bass note does not change the family
  }
  std::string_view shorthand = rest, intervals;
  if (const auto open = rest.find('('); open != std::string_view::npos) {
    if (rest.back() != ')') throw bad();
    shorthand = rest.substr(0, open);
    intervals = rest.substr(open + 1, rest.size() - open - 2);
  }
  // A bare interval list such as "C:(1,b3,5)" starts from an empty chord.
  std::optional<Thirds> thirds =
      shorthand.empty() && !intervals.empty() ? Thirds{} : shorthand_thirds(lower(shorthand));
  if (!thirds) throw bad();
  while (!intervals.empty()) {
    const auto comma = intervals.find(',');
    const std::string_view item = intervals.substr(0, comma);
    if (item == "3") thirds->major = true;
    if (item == "b3") thirds->minor = true;
    if (item == "*3") thirds->major = false;
    if (item == "*b3") thirds->minor = false;
    intervals = comma == std::string_view::npos ? std::string_view{} : intervals.substr(comma + 1);
  }
  if (thirds->major && !thirds->minor) {
    c.quality = ChordQuality::kMajorFamily;
  } else if (thirds->minor && !thirds->major) {
    c.quality = ChordQuality::kMinorFamily;
  } else {
    c.quality = ChordQuality::kOther;
  }
  return c;
}

std::vector<ChordAnnotation> read_chord_file(const std::filesystem::path& path) {
  std::vector<ChordAnnotation> chords;
  for_each_record(path, [&](const std::vector<std::string>& f) {
    if (f.size() != 3) throw FormatError("expected 'start<TAB>end<TAB>chord'");
    double start = 0.0, end = 0.0;
    try {
      start = std::stod(f[0]);
      end = std::stod(f[1]);
    } catch (const std::exception&) {
      throw FormatError("bad chord segment times");
    }
    if (!(end > start)) throw FormatError("chord segment has non-positive duration");
    if (auto sym = parse_chord_symbol(f[2])) {
      chords.push_back({sym->root, sym->quality, end - start});
    }
  });
  return chords;
}

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(std::string_view text) {
  const std::string t = lower(text);
  if (t == "train") return Split::kTrain;
  if (t == "validation" || t == "val") return Split::kValidation;
  if (t == "test") return Split::kTest;
  throw FormatError("unknown split '" + std::string(text) + "'");
}

SplitSizes split_sizes(std::size_t n, const SplitFractions& fractions) {
  if (n < 3) throw InvalidArgument("split: need at least 3 pieces");
  if (!(fractions.train > 0 && fractions.validation > 0 && fractions.test > 0) ||
      std::abs(fractions.train + fractions.validation + fractions.test - 1.0) > 1e-9) {
    throw InvalidArgument("split: fractions must be positive and sum to 1");
  }
  SplitSizes s;
  // Guard against 0.125 * 8 evaluating to 0.99999...
  auto part = [n](double f) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * f + 1e-9));
  };
  s.validation = part(fractions.validation);
  s.test = part(fractions.test);
  s.train = n - s.validation - s.test;
  return s;
}

Partition split_dataset(std::vector<LabeledPiece> pieces, const SplitFractions& fractions,
                        std::uint64_t seed, const std::map<std::string, Split>* assignment) {
  const SplitSizes sizes = split_sizes(pieces.size(), fractions);
  Partition out;
  auto place = [&](LabeledPiece p, Split s) {
    p.split = s;
    switch (s) {
      case Split::kTrain: out.train.push_back(std::move(p)); break;
      case Split::kValidation: out.validation.push_back(std::move(p)); break;
      case Split::kTest: out.test.push_back(std::move(p)); break;
    }
  };
  if (assignment) {
    for (auto& p : pieces) {
      auto it = assignment->find(p.piece_id);
      if (it == assignment->end()) {
        throw FormatError("split file has no entry for piece '" + p.piece_id + "'");
      }
      place(std::move(p), it->second);
    }
    return out;
  }

  std::mt19937_64 rng(seed);
  for (std::size_t i = pieces.size(); i > 1; --i) {
    std::swap(pieces[i - 1], pieces[static_cast<std::size_t>(rng() % i)]);
  }
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    Split s = i < sizes.train                      ? Split::kTrain
              : i < sizes.train + sizes.validation ? Split::kValidation
                                                   : Split::kTest;
    place(std::move(pieces[i]), s);
  }
  return out;
}

std::map<std::string, Split> read_split_file(const std::filesystem::path& path) {
  std::map<std::string, Split> m;
  for_each_record(path, [&](const std::vector<std::string>& f) {
    if (f.size() != 2) throw FormatError("expected 'piece_id<TAB>split'");
    m[f[0]] = parse_split(f[1]);
  });
  return m;
}

std::vector<LabeledPiece> read_manifest(const std::filesystem::path& path) {
  std::vector<LabeledPiece> pieces;
  std::set<std::string> seen;
  const auto base = path.parent_path();
  for_each_record(path, [&](const std::vector<std::string>& f) {
    if (f.size() != 4) throw FormatError("expected 'piece_id<TAB>path<TAB>key<TAB>split'");
    if (!seen.insert(f[0]).second) throw FormatError("duplicate piece id '" + f[0] + "'");
    LabeledPiece p;
    p.piece_id = f[0];
    p.audio_path = f[1];
    if (p.audio_path.is_relative()) p.audio_path = base / p.audio_path;
    p.label = parse_key_annotation(f[2]);
    p.split = parse_split(f[3]);
    pieces.push_back(std::move(p));
  });
  return pieces;
}

void write_manifest(const std::filesystem::path& path, std::span<const LabeledPiece> pieces) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create " + path.string());
  for (const auto& p : pieces) {
    out << p.piece_id << '\t' << p.audio_path.generic_string() << '\t' << to_string(p.label)
        << '\t' << split_name(p.split) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

KeyLabel read_key_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  return parse_key_annotation(line);
}

}  // namespace keynet
