#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prism/errors.hpp"

namespace prism {

// Canonical dimension ids (report order).
namespace dim {
inline constexpr int kPronunciationAccuracy = 1;
inline constexpr int kAudioClarity = 2;
inline constexpr int kIntonation = 3;
inline constexpr int kPauses = 4;
inline constexpr int kSpeechRate = 5;
inline constexpr int kSpeakerConsistency = 6;
inline constexpr int kStyleConsistency = 7;
inline constexpr int kEmotionConsistency = 8;
inline constexpr int kStress = 9;
inline constexpr int kLengthening = 10;
inline constexpr int kParalinguistics = 11;
inline constexpr int kEmotionExpression = 12;
inline constexpr int kCount = 12;
}  // namespace dim

enum class DomainGroup { AudioClarity, Pronunciation, Prosody, Consistency, AdvancedExpressiveness };
enum class Layer { Basic, Advanced };
enum class ScaleSemantics { Quality, Bonus };

std::string to_string(DomainGroup g);
std::string to_string(Layer l);
std::string to_string(ScaleSemantics s);

struct ScoreScale {
  int min = 1;
  int max = 5;
  ScaleSemantics semantics = ScaleSemantics::Quality;

  bool contains(int score) const { return score >= min && score <= max; }
  int range() const { return max - min; }
  bool operator==(const ScoreScale&) const = default;
};

// One score level's anchor text. `authored` marks criteria written for
// this harness rather than carried over from the published exemplars;
// fixture tests must not assert on authored prose.
struct RubricLevel {
  std::string criterion;
  bool authored = true;
  bool operator==(const RubricLevel&) const = default;
};

struct Rubric {
  int dimension_id = 0;
  std::map<int, RubricLevel> level_criteria;
  bool operator==(const Rubric&) const = default;
};

struct Dimension {
  int id = 0;  // 1..12, canonical report order
  std::string name;
  DomainGroup domain_group = DomainGroup::AudioClarity;
  Layer layer = Layer::Basic;
  bool operator==(const Dimension&) const = default;
};

struct SchemaError : ValidationError {
  enum class Kind {
    Malformed,
    MissingDimension,
    DuplicateDimension,
    MissingCriterion,
    LevelOutOfRange,
    UnknownDimension,
  };
  Kind kind;
  int dimension_id = 0;
  int level = 0;

  SchemaError(Kind k, const std::string& what, int dim = 0, int lvl = 0)
      : ValidationError(what), kind(k), dimension_id(dim), level(lvl) {}
};

// The 12-dimension evaluation taxonomy: dimensions in canonical order,
// one scale and one rubric per dimension. Immutable after construction;
// safe to share across threads.
struct Schema {
  std::string version;
  std::vector<Dimension> dimensions;  // canonical order, ids ascending 1..12
  std::map<int, ScoreScale> scales;
  std::map<int, Rubric> rubrics;

  const Dimension& dimension(int id) const;            // throws SchemaError(UnknownDimension)
  const Dimension* find_dimension(int id) const;       // nullptr when absent
  const Dimension* find_dimension_by_name(const std::string& name) const;
  const ScoreScale& scale(int id) const;
  const Rubric& rubric(int id) const;

  bool operator==(const Schema&) const = default;
};

// Canonical builtin schema: 8 Basic dimensions scored 1-5 and 4 Advanced
// bonus dimensions scored 0-2 (0 is neutral, not a penalty).
const Schema& builtin_schema();

// Parse/serialize the schema file format (UTF-8 JSON, see README).
Schema load_schema(const std::string& document);
std::string serialize_schema(const Schema& schema);

// Throws SchemaError if any type invariant is violated.
void check_schema(const Schema& schema);

// True iff score is within the dimension's scale. Unknown ids throw.
bool validate_score(const Schema& schema, int dimension_id, int score);

}  // namespace prism
