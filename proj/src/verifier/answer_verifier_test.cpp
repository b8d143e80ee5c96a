#include <doctest.h>

#include "autorubric/verifier/answer_verifier.hpp"

using namespace autorubric;
using namespace autorubric::verifier;

TEST_CASE("multiple-choice extraction") {
  CHECK(extract_final_answer("We compare lengths, therefore the answer is B.", AnswerKind::kMultipleChoice) == "B");
  CHECK(extract_final_answer("Option (A) fails, (C) holds. Final answer: (C)", AnswerKind::kMultipleChoice) == "C");
  CHECK(extract_final_answer("A fails. B fails. So D.", AnswerKind::kMultipleChoice) == "D");
  CHECK_FALSE(extract_final_answer("I am unsure.", AnswerKind::kMultipleChoice).has_value());
  CHECK(extract_final_answer("The answer is \\boxed{B} since (C) is longer", AnswerKind::kMultipleChoice) == "B");
}

TEST_CASE("last marker wins") {
  CHECK(extract_final_answer("Final answer: (A)\nWait, recheck. Final answer: (D)", AnswerKind::kMultipleChoice) == "D");
  CHECK(extract_final_answer("Final answer: 3\nActually final answer: 5", AnswerKind::kFreeForm) == "5");
}

TEST_CASE("free-form extraction") {
  CHECK(extract_final_answer("so x = 12. Final answer: 12", AnswerKind::kFreeForm) == "12");
  CHECK(extract_final_answer("Thus \\boxed{3.5} cm", AnswerKind::kFreeForm) == "3.5");
  CHECK_FALSE(extract_final_answer("no marker at all 12", AnswerKind::kFreeForm).has_value());
}

TEST_CASE("verify examples") {
  CHECK(verify("B", "B", AnswerKind::kMultipleChoice) == 1.0);
  CHECK(verify("(b)", "B", AnswerKind::kMultipleChoice) == 1.0);
  CHECK(verify("C", "B", AnswerKind::kMultipleChoice) == 0.0);
  CHECK(verify(std::nullopt, "B", AnswerKind::kMultipleChoice) == 0.0);
  CHECK(verify("12.0000001", "12", AnswerKind::kFreeForm) == 1.0);
  CHECK(verify("12.1", "12", AnswerKind::kFreeForm) == 0.0);
  CHECK(verify("$1,200", "1200", AnswerKind::kFreeForm) == 1.0);
  CHECK(verify("5 cm", "5", AnswerKind::kFreeForm) == 1.0);
  CHECK(verify("  Right   Triangle. ", "right triangle", AnswerKind::kFreeForm) == 1.0);
}

TEST_CASE("case sensitivity is configurable") {
  VerifierConfig cfg;
  cfg.case_sensitive = true;
  CHECK(verify("Paris", "paris", AnswerKind::kFreeForm, cfg) == 0.0);
  CHECK(verify("Paris", "paris", AnswerKind::kFreeForm) == 1.0);
}

TEST_CASE("verify is reflexive and binary") {
  for (const std::string a : {"12", "3.25", "x+1", "right triangle", "$5", "1,000", "-0.5"}) {
    CHECK(verify(a, a, AnswerKind::kFreeForm) == 1.0);
  }
  for (char c = 'A'; c <= 'Z'; ++c) CHECK(verify(std::string(1, c), std::string(1, c), AnswerKind::kMultipleChoice) == 1.0);
  for (const std::string a : {"1", "2", "foo", ""}) {
    const double v = verify(a, "1", AnswerKind::kFreeForm);
    CHECK((v == 0.0 || v == 1.0));
  }
}

TEST_CASE("config validation and round trip") {
  VerifierConfig bad;
  bad.numeric_tolerance = 0;
  CHECK_THROWS_AS(validate(bad), InvariantViolation);
  bad = {};
  bad.choice_pattern = "(";
  CHECK_THROWS(validate(bad));
  VerifierConfig cfg;
  cfg.numeric_tolerance = 1e-3;
  const auto back = verifier_config_from_json(to_json(cfg));
  CHECK(back.numeric_tolerance == cfg.numeric_tolerance);
  CHECK(back.choice_pattern == cfg.choice_pattern);
}

TEST_CASE("parse_number") {
  CHECK(parse_number("1,234.5") == 1234.5);
  CHECK(parse_number("-3") == -3.0);
  CHECK_FALSE(parse_number("12abc").has_value());
  CHECK_FALSE(parse_number("inf").has_value());
}
