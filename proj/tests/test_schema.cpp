#include <doctest.h>

#include <nlohmann/json.hpp>

#include "prism/schema.hpp"

using namespace prism;
using nlohmann::json;

TEST_CASE("builtin schema has 8 basic and 4 advanced dimensions in canonical order") {
  const Schema& s = builtin_schema();
  REQUIRE(s.dimensions.size() == 12);

  const std::vector<std::string> expected_names = {
      "Pronunciation Accuracy", "Audio Clarity",       "Intonation",
      "Pauses",                 "Speech Rate",         "Speaker Consistency",
      "Style Consistency",      "Emotion Consistency", "Stress",
      "Lengthening",            "Paralinguistics",     "Emotion Expression"};
  int basic = 0, advanced = 0;
  for (size_t i = 0; i < s.dimensions.size(); ++i) {
    const Dimension& d = s.dimensions[i];
    CHECK(d.id == static_cast<int>(i) + 1);
    CHECK(d.name == expected_names[i]);
    if (d.layer == Layer::Basic) ++basic;
    if (d.layer == Layer::Advanced) ++advanced;
  }
  CHECK(basic == 8);
  CHECK(advanced == 4);
}

TEST_CASE("scales follow the layer") {
  const Schema& s = builtin_schema();
  CHECK(s.scale(dim::kStress) == ScoreScale{0, 2, ScaleSemantics::Bonus});
  CHECK(s.scale(dim::kPauses) == ScoreScale{1, 5, ScaleSemantics::Quality});
  for (const auto& d : s.dimensions) {
    const ScoreScale& scale = s.scale(d.id);
    if (d.layer == Layer::Basic) {
      CHECK(scale.min == 1);
      CHECK(scale.max == 5);
    } else {
      CHECK(scale.min == 0);
      CHECK(scale.max == 2);
    }
  }
}

TEST_CASE("anchor rubric text is present and flagged non-authored") {
  const Schema& s = builtin_schema();
  const Rubric& clarity = s.rubric(dim::kAudioClarity);
  CHECK(clarity.level_criteria.at(4).criterion.find("stationary noise floor") != std::string::npos);
  CHECK(clarity.level_criteria.at(2).criterion.find("destructive signal distortion") !=
        std::string::npos);
  CHECK_FALSE(clarity.level_criteria.at(4).authored);
  CHECK_FALSE(clarity.level_criteria.at(2).authored);
  CHECK(clarity.level_criteria.at(5).authored);

  const Rubric& stress = s.rubric(dim::kStress);
  CHECK_FALSE(stress.level_criteria.at(2).authored);
  CHECK_FALSE(stress.level_criteria.at(1).authored);
  CHECK(stress.level_criteria.at(0).authored);
}

TEST_CASE("every scale level has a nonempty criterion") {
  const Schema& s = builtin_schema();
  for (const auto& d : s.dimensions) {
    const ScoreScale& scale = s.scale(d.id);
    for (int level = scale.min; level <= scale.max; ++level) {
      CHECK_FALSE(s.rubric(d.id).level_criteria.at(level).criterion.empty());
    }
  }
}

TEST_CASE("builtin schema is deterministic") {
  CHECK(builtin_schema() == builtin_schema());
}

TEST_CASE("validate_score honors scale bounds") {
  const Schema& s = builtin_schema();
  CHECK(validate_score(s, dim::kPauses, 5));
  CHECK_FALSE(validate_score(s, dim::kLengthening, 3));
  CHECK_FALSE(validate_score(s, dim::kPronunciationAccuracy, 0));
  CHECK_THROWS_AS(validate_score(s, 99, 1), SchemaError);
}

TEST_CASE("exactly range-many scores validate per dimension") {
  const Schema& s = builtin_schema();
  for (const auto& d : s.dimensions) {
    const ScoreScale& scale = s.scale(d.id);
    int valid = 0;
    for (int score = -3; score <= 8; ++score) {
      if (validate_score(s, d.id, score)) ++valid;
    }
    CHECK(valid == scale.max - scale.min + 1);
  }
}

TEST_CASE("serialize/load round-trip equals builtin") {
  const Schema& s = builtin_schema();
  const Schema loaded = load_schema(serialize_schema(s));
  CHECK(loaded == s);
}

TEST_CASE("load_schema rejects a document missing dimension 7") {
  json doc = json::parse(serialize_schema(builtin_schema()));
  json dims = json::array();
  for (const auto& d : doc["dimensions"]) {
    if (d["id"].get<int>() != 7) dims.push_back(d);
  }
  doc["dimensions"] = dims;
  try {
    load_schema(doc.dump());
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.kind == SchemaError::Kind::MissingDimension);
    CHECK(e.dimension_id == 7);
  }
}

TEST_CASE("load_schema rejects a rubric level outside the scale") {
  json doc = json::parse(serialize_schema(builtin_schema()));
  for (auto& d : doc["dimensions"]) {
    if (d["name"] == "Stress") d["rubric"]["3"] = "impossible level";
  }
  try {
    load_schema(doc.dump());
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.kind == SchemaError::Kind::LevelOutOfRange);
    CHECK(e.dimension_id == dim::kStress);
    CHECK(e.level == 3);
  }
}

TEST_CASE("load_schema rejects duplicate dimension ids") {
  json doc = json::parse(serialize_schema(builtin_schema()));
  json copy = doc["dimensions"][0];
  doc["dimensions"].push_back(copy);
  try {
    load_schema(doc.dump());
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.kind == SchemaError::Kind::DuplicateDimension);
  }
}

TEST_CASE("load_schema rejects a level without criterion text") {
  json doc = json::parse(serialize_schema(builtin_schema()));
  for (auto& d : doc["dimensions"]) {
    if (d["name"] == "Pauses") d["rubric"].erase("3");
  }
  try {
    load_schema(doc.dump());
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.kind == SchemaError::Kind::MissingCriterion);
    CHECK(e.dimension_id == dim::kPauses);
  }
}

TEST_CASE("load_schema rejects junk") {
  CHECK_THROWS_AS(load_schema("not json at all {"), SchemaError);
  CHECK_THROWS_AS(load_schema("[1,2,3]"), SchemaError);
  CHECK_THROWS_AS(load_schema("{\"version\":\"1.0\"}"), SchemaError);
}
