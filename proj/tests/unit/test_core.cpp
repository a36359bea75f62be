#include <doctest.h>

#include <random>

#include "finece/core.hpp"

using namespace finece;

TEST_CASE("match_answer worked examples") {
  CHECK(match_answer("The answer is 42.", "42", MatcherKind::NumericFinalAnswer));
  CHECK(match_answer("Paris", "paris ", MatcherKind::ExactNormalized));
  CHECK_FALSE(match_answer("The answer is 41", "42", MatcherKind::NumericFinalAnswer));
}

TEST_CASE("numeric matcher compares the last literal exactly") {
  CHECK(match_answer("from 3 apples we get 1,200.50", "1200.5", MatcherKind::NumericFinalAnswer));
  CHECK(match_answer("x = 7.000", "7", MatcherKind::NumericFinalAnswer));
  CHECK_FALSE(match_answer("42 then 43", "42", MatcherKind::NumericFinalAnswer));
  CHECK_FALSE(match_answer("0.30000000000000004", "0.3", MatcherKind::NumericFinalAnswer));
  CHECK_FALSE(match_answer("no digits here", "42", MatcherKind::NumericFinalAnswer));
  CHECK(match_answer("-0", "0", MatcherKind::NumericFinalAnswer));
  CHECK_THROWS_AS(match_answer("42", "forty-two", MatcherKind::NumericFinalAnswer), ConfigError);
  CHECK_THROWS_AS(match_answer("42", "  ", MatcherKind::ExactNormalized), ConfigError);
  CHECK_FALSE(match_answer("   ", "42", MatcherKind::NumericFinalAnswer));
}

TEST_CASE("numeric_literals canonicalises") {
  auto lits = numeric_literals("we had 1,200.50 then -3 and 0.250, then 007");
  REQUIRE(lits.size() == 4);
  CHECK(lits[0] == "1200.5");
  CHECK(lits[1] == "-3");
  CHECK(lits[2] == "0.25");
  CHECK(lits[3] == "7");
}

TEST_CASE("exact matcher is symmetric and reflexive") {
  std::mt19937 rng(3);
  const std::string alphabet = "abAB ,.!x\t";
  for (int t = 0; t < 500; ++t) {
    std::string a, b;
    for (int i = 0; i < 6; ++i) a += alphabet[rng() % alphabet.size()];
    for (int i = 0; i < 6; ++i) b += alphabet[rng() % alphabet.size()];
    if (trim(a).empty() || trim(b).empty()) continue;
    CHECK(match_answer(a, a, MatcherKind::ExactNormalized));
    CHECK(match_answer(a, b, MatcherKind::ExactNormalized) ==
          match_answer(b, a, MatcherKind::ExactNormalized));
  }
}

TEST_CASE("extract_final_answer takes the text after the last marker") {
  CHECK(extract_final_answer("Some work.\n\nThe answer is 42.") == "42");
  CHECK(extract_final_answer("the answer is 1. No wait, the Answer is: Paris!") == "Paris");
  CHECK(extract_final_answer("  just text ") == "just text");
}

TEST_CASE("whitespace_tokenize is lossless and keeps leading whitespace") {
  auto toks = whitespace_tokenize("The answer\n\nis  42.");
  REQUIRE(toks.size() == 4);
  CHECK(toks[0] == "The");
  CHECK(toks[1] == " answer");
  CHECK(toks[2] == "\n\nis");
  CHECK(toks[3] == "  42.");
  std::string joined;
  for (const auto& t : toks) joined += t;
  CHECK(joined == "The answer\n\nis  42.");
  CHECK(whitespace_tokenize("").empty());
}

TEST_CASE("join_continuation inserts one space only at a bare seam") {
  CHECK(join_continuation("", "abc") == "abc");
  CHECK(join_continuation("One.", "Two.") == "One. Two.");
  CHECK(join_continuation("One.", " Two.") == "One. Two.");
  CHECK(join_continuation("One.\n\n", "Two.") == "One.\n\nTwo.");
}

TEST_CASE("sequence state kind agrees with prefix") {
  CHECK_NOTHROW(SequenceState::question("q").validate());
  CHECK_NOTHROW(SequenceState::partial("q", "Step one.", 1).validate());
  SequenceState bad = SequenceState::question("q");
  bad.prefix_text = "text";
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  SequenceState bad2 = SequenceState::partial("q", "x", 1);
  bad2.prefix_text.clear();
  CHECK_THROWS_AS(bad2.validate(), ArgumentError);
}

TEST_CASE("confidence record is an exact ratio") {
  auto rec = ConfidenceRecord::from_counts(SequenceState::question("q"), 7, 10);
  CHECK(rec.raw_conf == 0.7);
  CHECK_THROWS_AS(ConfidenceRecord::from_counts(SequenceState::question("q"), 1, 0), ArgumentError);
  CHECK_THROWS_AS(ConfidenceRecord::from_counts(SequenceState::question("q"), 11, 10),
                  ArgumentError);
  rec.adjusted_conf = 1.5;
  CHECK_THROWS_AS(rec.validate(), ArgumentError);
}

TEST_CASE("completion validation") {
  Completion c;
  c.text = "a b";
  c.tokens = {"a", " b"};
  c.token_logprobs = std::vector<double>{-0.1, 0.0};
  CHECK_NOTHROW(c.validate());
  c.token_logprobs = std::vector<double>{-0.1};
  CHECK_THROWS(c.validate());
  c.token_logprobs = std::vector<double>{-0.1, 0.2};
  CHECK_THROWS(c.validate());
}

TEST_CASE("question validation") {
  CHECK_THROWS_AS((Question{"q", "", "1", MatcherKind::ExactNormalized}.validate()), ConfigError);
  CHECK_THROWS_AS((Question{"q", "x", "one", MatcherKind::NumericFinalAnswer}.validate()),
                  ConfigError);
  CHECK_NOTHROW((Question{"q", "x", "one", MatcherKind::ExactNormalized}.validate()));
}
