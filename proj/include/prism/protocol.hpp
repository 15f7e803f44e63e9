#pragma once

#include <optional>
#include <string>
#include <vector>

#include "prism/dataset.hpp"
#include "prism/schema.hpp"

namespace prism {

enum class PromptModeKind { SinglePassWithRationale, SinglePassScoresOnly, DimensionWise };

// DimensionWise bundles carry the dimension the request covers; the
// single-pass kinds ignore dimension_id.
struct PromptMode {
  PromptModeKind kind = PromptModeKind::SinglePassWithRationale;
  int dimension_id = 0;

  std::string cache_tag() const;
  bool operator==(const PromptMode&) const = default;
};

// Template text with {{rubric}}, {{source_text}}, {{output_grammar}}
// (and, for dimension-wise, {{dimension_id}}/{{dimension_name}})
// placeholders. The hash feeds cache keys so edits invalidate caches.
struct PromptTemplate {
  std::string system_text;
  std::string user_template;
  std::string hash;

  static PromptTemplate from_text(std::string system_text, std::string user_template);
};

const PromptTemplate& builtin_template(PromptModeKind kind);
PromptTemplate load_template(const std::filesystem::path& path);

struct PromptBundle {
  std::string system_text;
  std::string user_text;
  std::string audio_ref;  // content digest of the audio payload
  PromptMode mode;
  std::string schema_version;
  std::string template_hash;

  bool operator==(const PromptBundle&) const = default;
};

// Deterministic rendering; single-pass bundles embed every dimension's
// rubric, dimension-wise bundles only the covered one. The sample's
// source text is always included so judges can check text-speech
// correspondence.
PromptBundle build_prompt(const SampleRecord& sample, PromptMode mode, const Schema& schema,
                          const PromptTemplate& tmpl, const std::string& audio_digest);

// Rubric text for the listed dimensions, as embedded in prompts.
std::string render_rubric(const Schema& schema, const std::vector<int>& dimension_ids);

struct ReportEntry {
  int dimension_id = 0;
  std::string rationale;
  int score = 0;
  bool operator==(const ReportEntry&) const = default;
};

// 12 (rationale, score) pairs from one judge pass. Equality compares
// entries only: mode and raw_text are provenance.
struct DiagnosisReport {
  std::vector<ReportEntry> entries;  // canonical dimension order
  PromptMode mode;
  std::string raw_text;

  bool operator==(const DiagnosisReport& other) const { return entries == other.entries; }
};

enum class ParseErrorKind {
  NoBlocksFound,
  MissingDimension,
  DuplicateDimension,
  ScoreOutOfRange,
  UnparsableScore,
};

std::string to_string(ParseErrorKind kind);

struct ParseError {
  ParseErrorKind kind = ParseErrorKind::NoBlocksFound;
  int dimension_id = 0;
  long long score_value = 0;  // meaningful for ScoreOutOfRange
  size_t line = 0;            // 1-based location of the first offense
  std::string message;
};

struct ParseResult {
  std::optional<DiagnosisReport> report;
  std::optional<ParseError> error;
  bool ok() const { return report.has_value(); }
};

struct SingleDimResult {
  std::optional<ReportEntry> entry;
  std::optional<ParseError> error;
  bool ok() const { return entry.has_value(); }
};

// Total parser over the block grammar: never throws on arbitrary input,
// tolerates chatter around the blocks, re-sorts shuffled blocks, and
// rejects duplicates.
ParseResult parse_interleaved(const std::string& text, const Schema& schema);

// One rationale/score pair, same tolerance restricted to one block.
SingleDimResult parse_single_dimension(const std::string& text, int dimension_id,
                                       const Schema& schema);

// Canonical, bit-exact block grammar. parse(serialize(r)) == r for any
// report passing validate_report.
std::string serialize_report(const DiagnosisReport& report, const Schema& schema);

// Enforces the DiagnosisReport invariants: 12 unique entries in
// canonical order, scores in range, scores-only implies empty
// rationales, rationales serializable (no block-header lines).
void validate_report(const DiagnosisReport& report, const Schema& schema);

}  // namespace prism
