#include <algorithm>
#include <fstream>
#include <set>

#include "doctest.h"
#include "keynet/dataset.hpp"
#include "keynet/error.hpp"
#include "test_support.hpp"

using namespace keynet;
using keynet::testing::TempDir;

namespace {

std::vector<ChordAnnotation> chords(int root, int major, int minor, int other = 0,
                                    double duration = 1.0) {
  std::vector<ChordAnnotation> out;
  for (int i = 0; i < major; ++i) out.push_back({root, ChordQuality::kMajorFamily, duration});
  for (int i = 0; i < minor; ++i) out.push_back({root, ChordQuality::kMinorFamily, duration});
  for (int i = 0; i < other; ++i) out.push_back({root, ChordQuality::kOther, duration});
  return out;
}

std::vector<LabeledPiece> pieces(std::size_t n) {
  std::vector<LabeledPiece> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"p" + std::to_string(i), "p" + std::to_string(i) + ".wav",
                   KeyLabel::from_class_index(static_cast<int>(i % 24)), Split::kTrain});
  }
  return out;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("key annotation examples") {
  CHECK(parse_key_annotation("C major") == KeyLabel(0, Mode::kMajor));
  CHECK(parse_key_annotation("f# minor") == KeyLabel(6, Mode::kMinor));
  CHECK(parse_key_annotation("Bb major") == KeyLabel(10, Mode::kMajor));
  CHECK(parse_key_annotation("Db major") == parse_key_annotation("C# major"));
}

TEST_CASE("mode inference thresholds") {
  CHECK(infer_billboard_mode(0, chords(0, 10, 0)) == KeyLabel(0, Mode::kMajor));
  CHECK(infer_billboard_mode(0, chords(0, 9, 1)) == std::nullopt);
  CHECK(infer_billboard_mode(9, chords(9, 1, 19)) == KeyLabel(9, Mode::kMinor));
  CHECK(infer_billboard_mode(9, chords(9, 0, 10, 1)) == KeyLabel(9, Mode::kMinor));  // 10/11
  CHECK(infer_billboard_mode(9, chords(9, 0, 10, 2)) == std::nullopt);  // 10/12
  CHECK(infer_billboard_mode(4, chords(2, 10, 0)) == std::nullopt);  // no tonic-root chords

  SUBCASE("other-quality chords only enter the denominator") {
    CHECK(infer_billboard_mode(9, chords(9, 0, 19, 1)) == KeyLabel(9, Mode::kMinor));
    CHECK(infer_billboard_mode(9, chords(9, 0, 9, 1)) == std::nullopt);
  }
  SUBCASE("chords on other roots are ignored") {
    auto mix = chords(0, 10, 0);
    const auto extra = chords(7, 0, 30);
    mix.insert(mix.end(), extra.begin(), extra.end());
    CHECK(infer_billboard_mode(0, mix) == KeyLabel(0, Mode::kMajor));
  }
  SUBCASE("duration weighting against count weighting") {
    auto mix = chords(2, 3, 0, 0, 10.0);
    const auto m = chords(2, 0, 1, 0, 1.0);
    mix.insert(mix.end(), m.begin(), m.end());
    CHECK(infer_billboard_mode(2, mix) == KeyLabel(2, Mode::kMajor));  // 30/31
    CHECK(infer_billboard_mode(2, mix, ChordWeighting::kCount) == std::nullopt);  // 3/4
  }
  SUBCASE("returned tonic is always the input tonic") {
    for (int t = 0; t < 12; ++t) {
      const auto k = infer_billboard_mode(t, chords(t, 20, 1));
      REQUIRE(k.has_value());
      CHECK(k->tonic() == t);
    }
  }
}

TEST_CASE("pieces with several tonics are discarded") {
  const auto c = chords(0, 10, 0);
  const int one[] = {0};
  const int two[] = {0, 7};
  CHECK(infer_piece_key(one, c) == KeyLabel(0, Mode::kMajor));
  CHECK(infer_piece_key(two, c) == std::nullopt);
  CHECK(infer_piece_key(std::span<const int>{}, c) == std::nullopt);
}

TEST_CASE("chord symbols map to quality families") {
  auto q = [](std::string_view s) { return parse_chord_symbol(s)->quality; };
  CHECK(q("C:maj") == ChordQuality::kMajorFamily);
  CHECK(q("C") == ChordQuality::kMajorFamily);
  CHECK(q("G:7") == ChordQuality::kMajorFamily);
  CHECK(q("E:maj7/3") == ChordQuality::kMajorFamily);
  CHECK(q("F#:aug") == ChordQuality::kMajorFamily);
  CHECK(q("A:min") == ChordQuality::kMinorFamily);
  CHECK(q("Bb:min7") == ChordQuality::kMinorFamily);
  CHECK(q("B:hdim7") == ChordQuality::kMinorFamily);
  CHECK(q("D:dim") == ChordQuality::kMinorFamily);
  CHECK(q("D:sus4") == ChordQuality::kOther);
  CHECK(q("D:5") == ChordQuality::kOther);
  CHECK(q("C:(1,3,5)") == ChordQuality::kMajorFamily);
  CHECK(q("C:(1,b3,5)") == ChordQuality::kMinorFamily);
  CHECK(q("C:maj(b3)") == ChordQuality::kOther);
  CHECK(q("C:min(*b3)") == ChordQuality::kOther);
  CHECK(parse_chord_symbol("Eb:min")->root == 3);
  CHECK(parse_chord_symbol("N") == std::nullopt);
  CHECK(parse_chord_symbol("X") == std::nullopt);
  CHECK_THROWS_AS(parse_chord_symbol("H:maj"), FormatError);
  CHECK_THROWS_AS(parse_chord_symbol("C:weird"), FormatError);
  CHECK_THROWS_AS(parse_chord_symbol("C:maj(3"), FormatError);
}

TEST_CASE("chord files") {
  TempDir dir("keynet_chords");
  write_text(dir / "c.tsv", "0.0\t2.0\tC:maj\n2.0\t2.5\tN\n2.5\t4.0\tA:min\n");
  const auto c = read_chord_file(dir / "c.tsv");
  REQUIRE(c.size() == 2);
  CHECK(c[0].duration == doctest::Approx(2.0));
  CHECK(c[1].root == 9);
  CHECK(c[1].quality == ChordQuality::kMinorFamily);
  write_text(dir / "bad.tsv", "0.0\t1.0\n");
  CHECK_THROWS_AS(read_chord_file(dir / "bad.tsv"), FormatError);
  write_text(dir / "neg.tsv", "2.0\t1.0\tC\n");
  CHECK_THROWS_AS(read_chord_file(dir / "neg.tsv"), FormatError);
}

TEST_CASE("split sizes") {
  const SplitSizes a = split_sizes(625, {});
  CHECK(a.train == 391);
  CHECK(a.validation == 78);
  CHECK(a.test == 156);
  const SplitSizes b = split_sizes(8, {0.5, 0.25, 0.25});
  CHECK(b.train == 4);
  CHECK(b.validation == 2);
  CHECK(b.test == 2);
  CHECK_THROWS_AS(split_sizes(2, {}), InvalidArgument);
  CHECK_THROWS_AS(split_sizes(10, {0.5, 0.3, 0.3}), InvalidArgument);
  CHECK_THROWS_AS(split_sizes(10, {0.8, 0.2, 0.0}), InvalidArgument);
}

TEST_CASE("split_dataset partitions deterministically") {
  const auto all = pieces(40);
  const Partition a = split_dataset(all, {}, 5);
  const Partition b = split_dataset(all, {}, 5);
  CHECK(a.train.size() == 25);
  CHECK(a.validation.size() == 5);
  CHECK(a.test.size() == 10);
  auto ids = [](const std::vector<LabeledPiece>& v) {
    std::vector<std::string> r;
    for (const auto& p : v) r.push_back(p.piece_id);
    return r;
  };
  CHECK(ids(a.train) == ids(b.train));
  CHECK(ids(a.test) == ids(b.test));
  CHECK(ids(split_dataset(all, {}, 6).train) != ids(a.train));

  std::set<std::string> seen;
  for (const auto* part : {&a.train, &a.validation, &a.test}) {
    for (const auto& p : *part) CHECK(seen.insert(p.piece_id).second);
  }
  CHECK(seen.size() == 40);
  for (const auto& p : a.validation) CHECK(p.split == Split::kValidation);

  SUBCASE("an assignment map overrides the shuffle") {
    std::map<std::string, Split> fixed;
    for (std::size_t i = 0; i < 40; ++i) {
      fixed["p" + std::to_string(i)] = i < 3 ? Split::kTest : Split::kTrain;
    }
    const Partition c = split_dataset(all, {}, 5, &fixed);
    CHECK(ids(c.test) == std::vector<std::string>{"p0", "p1", "p2"});
    CHECK(c.validation.empty());
    CHECK(c.train.size() == 37);
  }
  CHECK_THROWS_AS(split_dataset(pieces(2), {}, 1), InvalidArgument);
}

TEST_CASE("split names") {
  for (Split s : {Split::kTrain, Split::kValidation, Split::kTest}) {
    CHECK(parse_split(split_name(s)) == s);
  }
  CHECK(parse_split("val") == Split::kValidation);
  CHECK_THROWS_AS(parse_split("dev"), FormatError);
}

TEST_CASE("manifests and sidecars") {
  TempDir dir("keynet_manifest");
  std::vector<LabeledPiece> ps = pieces(3);
  ps[1].split = Split::kValidation;
  ps[2].split = Split::kTest;
  write_manifest(dir / "m.tsv", ps);
  const auto back = read_manifest(dir / "m.tsv");
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].piece_id == ps[i].piece_id);
    CHECK(back[i].label == ps[i].label);
    CHECK(back[i].split == ps[i].split);
    CHECK(back[i].audio_path == dir.path() / ps[i].audio_path);
  }

  write_text(dir / "dup.tsv", "a\tx.wav\tC major\ttrain\na\ty.wav\tD major\ttest\n");
  CHECK_THROWS_AS(read_manifest(dir / "dup.tsv"), FormatError);
  write_text(dir / "short.tsv", "a\tx.wav\tC major\n");
  CHECK_THROWS_AS(read_manifest(dir / "short.tsv"), FormatError);
  write_text(dir / "abs.tsv", "# comment\n\nz\t/data/z.wav\tE minor\ttest\n");
  const auto abs = read_manifest(dir / "abs.tsv");
  REQUIRE(abs.size() == 1);
  CHECK(abs[0].audio_path == std::filesystem::path("/data/z.wav"));

  write_text(dir / "song.key", "G# minor\n");
  CHECK(read_key_sidecar(dir / "song.key") == KeyLabel(8, Mode::kMinor));
  CHECK_THROWS_AS(read_key_sidecar(dir / "missing.key"), IoError);

  write_text(dir / "splits.tsv", "a\ttrain\nb\ttest\n");
  const auto sp = read_split_file(dir / "splits.tsv");
  CHECK(sp.at("b") == Split::kTest);
}
