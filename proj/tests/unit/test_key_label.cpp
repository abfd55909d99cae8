#include <set>

#include "doctest.h"
#include "keynet/error.hpp"
#include "keynet/key_label.hpp"

using namespace keynet;

TEST_CASE("class index is a bijection onto 0..23") {
  std::set<int> seen;
  for (int tonic = 0; tonic < 12; ++tonic) {
    for (Mode m : {Mode::kMajor, Mode::kMinor}) {
      const KeyLabel k(tonic, m);
      seen.insert(k.class_index());
      CHECK(KeyLabel::from_class_index(k.class_index()) == k);
    }
  }
  CHECK(seen.size() == 24);
  CHECK(*seen.begin() == 0);
  CHECK(*seen.rbegin() == 23);
  CHECK(KeyLabel::from_class_index(21) == KeyLabel(9, Mode::kMinor));
}

TEST_CASE("invalid tonics and indices throw") {
  CHECK_THROWS_AS(KeyLabel(12, Mode::kMajor), InvalidArgument);
  CHECK_THROWS_AS(KeyLabel(-1, Mode::kMinor), InvalidArgument);
  CHECK_THROWS_AS(KeyLabel::from_class_index(24), InvalidArgument);
  CHECK_THROWS_AS(KeyLabel::from_class_index(-1), InvalidArgument);
}

TEST_CASE("transposition wraps around the pitch-class circle") {
  const KeyLabel a(9, Mode::kMinor);
  CHECK(a.transposed(3) == KeyLabel(0, Mode::kMinor));
  CHECK(a.transposed(-10) == KeyLabel(11, Mode::kMinor));
  CHECK(a.transposed(24) == a);
}

TEST_CASE("key names and parsing") {
  CHECK(to_string(KeyLabel(6, Mode::kMinor)) == "F# minor");
  CHECK(to_string(KeyLabel(0, Mode::kMajor)) == "C major");
  CHECK(pitch_class_name(10) == "A#");

  CHECK(parse_key_annotation("A minor") == KeyLabel(9, Mode::kMinor));
  CHECK(parse_key_annotation("  bb MAJOR ") == KeyLabel(10, Mode::kMajor));
  CHECK(parse_key_annotation("Gb major") == parse_key_annotation("F# major"));
  CHECK(parse_key_annotation("Cb minor") == KeyLabel(11, Mode::kMinor));
  CHECK(parse_key_annotation("E#\tmajor") == KeyLabel(5, Mode::kMajor));
  for (int i = 0; i < 24; ++i) {
    const KeyLabel k = KeyLabel::from_class_index(i);
    CHECK(parse_key_annotation(to_string(k)) == k);
  }

  CHECK_THROWS_AS(parse_key_annotation("H major"), FormatError);
  CHECK_THROWS_AS(parse_key_annotation("C dorian"), FormatError);
  CHECK_THROWS_AS(parse_key_annotation(""), FormatError);
  CHECK_THROWS_AS(parse_key_annotation("C major extra"), FormatError);
  try {
    parse_key_annotation("X minor");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("X minor") != std::string::npos);
  }

  int pc = -1;
  CHECK(parse_pitch_class("Eb:min", pc) == 2);
  CHECK(pc == 3);
  CHECK(parse_pitch_class("N", pc) == 0);
}
