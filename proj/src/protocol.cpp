#include "prism/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "prism/util.hpp"

namespace prism {

std::string PromptMode::cache_tag() const {
  switch (kind) {
    case PromptModeKind::SinglePassWithRationale: return "single_pass_rationale";
    case PromptModeKind::SinglePassScoresOnly: return "single_pass_scores_only";
    case PromptModeKind::DimensionWise: return "dimension_wise_" + std::to_string(dimension_id);
  }
  return "?";
}

std::string to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::NoBlocksFound: return "NoBlocksFound";
    case ParseErrorKind::MissingDimension: return "MissingDimension";
    case ParseErrorKind::DuplicateDimension: return "DuplicateDimension";
    case ParseErrorKind::ScoreOutOfRange: return "ScoreOutOfRange";
    case ParseErrorKind::UnparsableScore: return "UnparsableScore";
  }
  return "?";
}

PromptTemplate PromptTemplate::from_text(std::string system_text, std::string user_template) {
  PromptTemplate t;
  t.hash = sha256_hex(system_text + "\x1e" + user_template);
  t.system_text = std::move(system_text);
  t.user_template = std::move(user_template);
  return t;
}

namespace {

constexpr const char* kSystemText =
    "You are a meticulous speech quality rater. Judge only the attached audio against the "
    "provided scoring criteria, and ground every judgment in concrete acoustic evidence.";

constexpr const char* kUserSinglePass =
    "Listen to the attached speech audio and evaluate it on every dimension listed below.\n"
    "\n"
    "Text the speaker was asked to read:\n"
    "{{source_text}}\n"
    "\n"
    "Scoring criteria:\n"
    "{{rubric}}\n"
    "\n"
    "{{output_grammar}}\n";

constexpr const char* kUserDimensionWise =
    "Listen to the attached speech audio. Evaluate dimension {{dimension_id}} "
    "({{dimension_name}}) only.\n"
    "\n"
    "Text the speaker was asked to read:\n"
    "{{source_text}}\n"
    "\n"
    "Scoring criteria:\n"
    "{{rubric}}\n"
    "\n"
    "{{output_grammar}}\n";

constexpr const char* kGrammarWithRationale =
    "Respond with exactly one block per dimension, in the order listed, each formatted as:\n"
    "\n"
    "[DIM <id>: <name>]\n"
    "Rationale: <concrete acoustic evidence for the score>\n"
    "Score: <integer>\n"
    "\n"
    "Write the rationale before the score in every block, separate blocks with one blank "
    "line, and add no other commentary.";

constexpr const char* kGrammarScoresOnly =
    "Respond with exactly one block per dimension, in the order listed, each formatted as:\n"
    "\n"
    "[DIM <id>: <name>]\n"
    "Score: <integer>\n"
    "\n"
    "Do not write rationales or any other commentary; separate blocks with one blank line.";

constexpr const char* kGrammarSingleDimension =
    "Respond with exactly one block, formatted as:\n"
    "\n"
    "[DIM <id>: <name>]\n"
    "Rationale: <concrete acoustic evidence for the score>\n"
    "Score: <integer>\n"
    "\n"
    "Write the rationale before the score and add no other commentary.";

void replace_all(std::string& text, std::string_view needle, std::string_view value) {
  size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
}

// "[DIM <id>: <name>]", surrounding whitespace tolerated.
std::optional<int> match_header(std::string_view line) {
  size_t i = 0, n = line.size();
  while (i < n && (line[i] == ' ' || line[i] == '\t')) ++i;
  if (i >= n || line[i] != '[') return std::nullopt;
  ++i;
  if (line.compare(i, 3, "DIM") != 0) return std::nullopt;
  i += 3;
  if (i >= n || (line[i] != ' ' && line[i] != '\t')) return std::nullopt;
  while (i < n && (line[i] == ' ' || line[i] == '\t')) ++i;
  size_t digits = i;
  long long id = 0;
  while (i < n && std::isdigit(static_cast<unsigned char>(line[i]))) {
    id = id * 10 + (line[i] - '0');
    if (id > 1000000) return std::nullopt;
    ++i;
  }
  if (i == digits) return std::nullopt;
  while (i < n && (line[i] == ' ' || line[i] == '\t')) ++i;
  if (i >= n || line[i] != ':') return std::nullopt;
  const size_t close = line.find(']', i);
  if (close == std::string_view::npos) return std::nullopt;
  for (size_t j = close + 1; j < n; ++j) {
    if (line[j] != ' ' && line[j] != '\t' && line[j] != '\r') return std::nullopt;
  }
  return static_cast<int>(id);
}

// "Score: <payload>" -> payload; nullopt if the line is not a score line.
std::optional<std::string> match_score_line(std::string_view line) {
  size_t i = 0, n = line.size();
  while (i < n && (line[i] == ' ' || line[i] == '\t')) ++i;
  if (line.compare(i, 5, "Score") != 0) return std::nullopt;
  i += 5;
  while (i < n && (line[i] == ' ' || line[i] == '\t')) ++i;
  if (i >= n || line[i] != ':') return std::nullopt;
  ++i;
  return trim(line.substr(i));
}

std::optional<long long> parse_integer(const std::string& payload) {
  if (payload.empty()) return std::nullopt;
  size_t i = payload[0] == '+' || payload[0] == '-' ? 1 : 0;
  if (i == payload.size() || payload.size() > 12) return std::nullopt;
  for (size_t j = i; j < payload.size(); ++j) {
    if (!std::isdigit(static_cast<unsigned char>(payload[j]))) return std::nullopt;
  }
  return std::stoll(payload);
}

std::vector<std::string> parse_lines(const std::string& text) {
  std::vector<std::string> lines = split_lines(text);
  for (auto& line : lines) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
  }
  return lines;
}

std::string join_lines(const std::vector<std::string>& lines, size_t begin, size_t end) {
  std::string out;
  for (size_t i = begin; i < end; ++i) {
    if (i > begin) out += "\n";
    out += lines[i];
  }
  return out;
}

// Strip the "Rationale:" marker plus one following space; returns
// whether the marker was present.
bool strip_rationale_marker(std::string& body) {
  constexpr std::string_view marker = "Rationale:";
  if (body.compare(0, marker.size(), marker) != 0) return false;
  body.erase(0, marker.size());
  if (!body.empty() && body.front() == ' ') body.erase(0, 1);
  return true;
}

struct Block {
  int dimension_id = 0;
  size_t header_line = 0;  // 0-based
  size_t begin = 0;        // first body line
  size_t end = 0;          // one past last body line
};

std::vector<Block> find_blocks(const std::vector<std::string>& lines, const Schema& schema) {
  std::vector<Block> blocks;
  for (size_t i = 0; i < lines.size(); ++i) {
    const auto id = match_header(lines[i]);
    if (!id || !schema.find_dimension(*id)) continue;  // unknown ids are chatter
    if (!blocks.empty()) blocks.back().end = i;
    blocks.push_back({*id, i, i + 1, lines.size()});
  }
  return blocks;
}

struct BlockParse {
  ReportEntry entry;
  bool has_marker = false;
  size_t score_line = 0;
  std::optional<ParseError> error;
};

BlockParse parse_block(const std::vector<std::string>& lines, const Block& block,
                       const Schema& schema) {
  BlockParse out;
  out.entry.dimension_id = block.dimension_id;

  std::optional<size_t> score_idx;
  std::optional<std::string> payload;
  for (size_t i = block.begin; i < block.end; ++i) {
    if (auto p = match_score_line(lines[i])) {
      score_idx = i;  // last score-grammar line wins
      payload = p;
    }
  }
  if (!score_idx) {
    out.error = ParseError{ParseErrorKind::UnparsableScore, block.dimension_id, 0,
                           block.header_line + 1,
                           "no score line in block for dimension " +
                               std::to_string(block.dimension_id)};
    return out;
  }
  const auto value = parse_integer(*payload);
  if (!value) {
    out.error = ParseError{ParseErrorKind::UnparsableScore, block.dimension_id, 0, *score_idx + 1,
                           "score '" + *payload + "' is not an integer (dimension " +
                               std::to_string(block.dimension_id) + ")"};
    return out;
  }
  if (!schema.scale(block.dimension_id).contains(static_cast<int>(*value))) {
    out.error = ParseError{ParseErrorKind::ScoreOutOfRange, block.dimension_id, *value,
                           *score_idx + 1,
                           "score " + std::to_string(*value) + " out of range for dimension " +
                               std::to_string(block.dimension_id)};
    return out;
  }
  out.entry.score = static_cast<int>(*value);
  out.score_line = *score_idx;

  std::string body = join_lines(lines, block.begin, *score_idx);
  out.has_marker = strip_rationale_marker(body);
  out.entry.rationale = out.has_marker ? body : trim(body);
  return out;
}

}  // namespace

const PromptTemplate& builtin_template(PromptModeKind kind) {
  static const PromptTemplate single_pass =
      PromptTemplate::from_text(kSystemText, kUserSinglePass);
  static const PromptTemplate dimension_wise =
      PromptTemplate::from_text(kSystemText, kUserDimensionWise);
  switch (kind) {
    case PromptModeKind::DimensionWise: return dimension_wise;
    default: return single_pass;
  }
}

PromptTemplate load_template(const std::filesystem::path& path) {
  const std::string content = read_text_file(path);
  const size_t sep = content.find("\n---\n");
  if (sep == std::string::npos) {
    throw ValidationError("template file needs a '---' line between system and user text: " +
                          path.string());
  }
  return PromptTemplate::from_text(content.substr(0, sep), content.substr(sep + 5));
}

std::string render_rubric(const Schema& schema, const std::vector<int>& dimension_ids) {
  std::ostringstream out;
  bool first = true;
  for (int id : dimension_ids) {
    const Dimension& d = schema.dimension(id);
    const ScoreScale& scale = schema.scale(id);
    const Rubric& rubric = schema.rubric(id);
    if (!first) out << "\n";
    first = false;
    out << "[DIM " << d.id << ": " << d.name << "] (" << to_string(d.layer)
        << " layer, integer score " << scale.min << "-" << scale.max;
    if (scale.semantics == ScaleSemantics::Bonus) out << ", 0 means neutral";
    out << ")\n";
    for (int level = scale.max; level >= scale.min; --level) {
      out << "  " << level << ": " << rubric.level_criteria.at(level).criterion << "\n";
    }
  }
  return out.str();
}

PromptBundle build_prompt(const SampleRecord& sample, PromptMode mode, const Schema& schema,
                          const PromptTemplate& tmpl, const std::string& audio_digest) {
  if (sample.source_text.empty()) {
    throw ValidationError("sample '" + sample.id + "' has no source text");
  }
  if (sample.audio_path.empty()) {
    throw ValidationError("sample '" + sample.id + "' has no audio");
  }

  std::vector<int> covered;
  if (mode.kind == PromptModeKind::DimensionWise) {
    schema.dimension(mode.dimension_id);  // throws on bad id
    covered.push_back(mode.dimension_id);
  } else {
    for (const auto& d : schema.dimensions) covered.push_back(d.id);
  }

  const char* grammar = mode.kind == PromptModeKind::SinglePassWithRationale ? kGrammarWithRationale
                        : mode.kind == PromptModeKind::SinglePassScoresOnly  ? kGrammarScoresOnly
                                                                             : kGrammarSingleDimension;

  std::string user = tmpl.user_template;
  replace_all(user, "{{rubric}}", render_rubric(schema, covered));
  replace_all(user, "{{source_text}}", sample.source_text);
  replace_all(user, "{{output_grammar}}", grammar);
  if (mode.kind == PromptModeKind::DimensionWise) {
    replace_all(user, "{{dimension_id}}", std::to_string(mode.dimension_id));
    replace_all(user, "{{dimension_name}}", schema.dimension(mode.dimension_id).name);
  }

  PromptBundle bundle;
  bundle.system_text = tmpl.system_text;
  bundle.user_text = std::move(user);
  bundle.audio_ref = audio_digest;
  bundle.mode = mode;
  bundle.schema_version = schema.version;
  bundle.template_hash = tmpl.hash;
  return bundle;
}

ParseResult parse_interleaved(const std::string& text, const Schema& schema) {
  ParseResult result;
  const std::vector<std::string> lines = parse_lines(text);
  const std::vector<Block> blocks = find_blocks(lines, schema);
  if (blocks.empty()) {
    result.error = ParseError{ParseErrorKind::NoBlocksFound, 0, 0, 1,
                              "no [DIM <id>: <name>] blocks found"};
    return result;
  }

  std::map<int, size_t> seen;  // dimension -> header line
  std::vector<ReportEntry> entries;
  bool any_marker = false;
  for (const Block& block : blocks) {
    auto [it, inserted] = seen.emplace(block.dimension_id, block.header_line + 1);
    if (!inserted) {
      result.error = ParseError{ParseErrorKind::DuplicateDimension, block.dimension_id, 0,
                                block.header_line + 1,
                                "dimension " + std::to_string(block.dimension_id) +
                                    " appears twice (lines " + std::to_string(it->second) +
                                    " and " + std::to_string(block.header_line + 1) + ")"};
      return result;
    }
    BlockParse parsed = parse_block(lines, block, schema);
    if (parsed.error) {
      result.error = parsed.error;
      return result;
    }
    any_marker = any_marker || parsed.has_marker || !parsed.entry.rationale.empty();
    entries.push_back(std::move(parsed.entry));
  }

  for (const auto& d : schema.dimensions) {
    if (!seen.count(d.id)) {
      result.error = ParseError{ParseErrorKind::MissingDimension, d.id, 0, lines.size(),
                                "dimension " + std::to_string(d.id) + " (" + d.name +
                                    ") missing from output"};
      return result;
    }
  }

  std::sort(entries.begin(), entries.end(),
            [](const ReportEntry& a, const ReportEntry& b) { return a.dimension_id < b.dimension_id; });

  DiagnosisReport report;
  report.entries = std::move(entries);
  report.mode.kind = any_marker ? PromptModeKind::SinglePassWithRationale
                                : PromptModeKind::SinglePassScoresOnly;
  report.raw_text = text;
  result.report = std::move(report);
  return result;
}

SingleDimResult parse_single_dimension(const std::string& text, int dimension_id,
                                       const Schema& schema) {
  SingleDimResult result;
  schema.dimension(dimension_id);  // throws on bad id; arbitrary text never throws

  const std::vector<std::string> lines = parse_lines(text);
  size_t begin = 0, end = lines.size();
  for (size_t i = 0; i < lines.size(); ++i) {
    const auto id = match_header(lines[i]);
    if (id && *id == dimension_id) {
      begin = i + 1;
      for (size_t j = begin; j < lines.size(); ++j) {
        if (match_header(lines[j])) {
          end = j;
          break;
        }
      }
      break;
    }
  }

  std::optional<size_t> score_idx;
  std::optional<std::string> payload;
  for (size_t i = begin; i < end; ++i) {
    if (auto p = match_score_line(lines[i])) {
      score_idx = i;
      payload = p;
    }
  }
  if (!score_idx) {
    result.error = ParseError{ParseErrorKind::UnparsableScore, dimension_id, 0, 1,
                              "no score line for dimension " + std::to_string(dimension_id)};
    return result;
  }
  const auto value = parse_integer(*payload);
  if (!value) {
    result.error = ParseError{ParseErrorKind::UnparsableScore, dimension_id, 0, *score_idx + 1,
                              "score '" + *payload + "' is not an integer"};
    return result;
  }
  if (!schema.scale(dimension_id).contains(static_cast<int>(*value))) {
    result.error = ParseError{ParseErrorKind::ScoreOutOfRange, dimension_id, *value,
                              *score_idx + 1,
                              "score " + std::to_string(*value) + " out of range for dimension " +
                                  std::to_string(dimension_id)};
    return result;
  }

  // Rationale: prefer the marker line; otherwise everything before the score.
  size_t rationale_begin = begin;
  bool marker_found = false;
  for (size_t i = begin; i < *score_idx; ++i) {
    std::string probe = lines[i];
    if (strip_rationale_marker(probe)) {
      rationale_begin = i;
      marker_found = true;
      break;
    }
  }
  std::string body = join_lines(lines, rationale_begin, *score_idx);
  if (marker_found) {
    strip_rationale_marker(body);
  } else {
    body = trim(body);
  }

  ReportEntry entry;
  entry.dimension_id = dimension_id;
  entry.rationale = std::move(body);
  entry.score = static_cast<int>(*value);
  result.entry = std::move(entry);
  return result;
}

void validate_report(const DiagnosisReport& report, const Schema& schema) {
  if (report.entries.size() != schema.dimensions.size()) {
    throw ValidationError("report must cover all " + std::to_string(schema.dimensions.size()) +
                          " dimensions, has " + std::to_string(report.entries.size()));
  }
  for (size_t i = 0; i < report.entries.size(); ++i) {
    const ReportEntry& e = report.entries[i];
    if (e.dimension_id != schema.dimensions[i].id) {
      throw ValidationError("report entries not in canonical dimension order");
    }
    if (!schema.scale(e.dimension_id).contains(e.score)) {
      throw ValidationError("score " + std::to_string(e.score) + " out of range for dimension " +
                            std::to_string(e.dimension_id));
    }
    if (report.mode.kind == PromptModeKind::SinglePassScoresOnly && !e.rationale.empty()) {
      throw ValidationError("scores-only report has a rationale for dimension " +
                            std::to_string(e.dimension_id));
    }
    if (e.rationale.find('\r') != std::string::npos) {
      throw ValidationError("rationale contains a carriage return");
    }
    for (const std::string& line : split_lines(e.rationale)) {
      if (match_header(line)) {
        throw ValidationError("rationale contains a block-header line; not serializable");
      }
    }
  }
}

std::string serialize_report(const DiagnosisReport& report, const Schema& schema) {
  DiagnosisReport canonical;
  canonical.mode = report.mode;
  canonical.entries = report.entries;
  std::sort(canonical.entries.begin(), canonical.entries.end(),
            [](const ReportEntry& a, const ReportEntry& b) { return a.dimension_id < b.dimension_id; });
  validate_report(canonical, schema);
  const std::vector<ReportEntry>& sorted = canonical.entries;
  const bool with_rationale = report.mode.kind != PromptModeKind::SinglePassScoresOnly;
  std::string out;
  bool first = true;
  for (const ReportEntry& e : sorted) {
    if (!first) out += "\n";
    first = false;
    out += "[DIM " + std::to_string(e.dimension_id) + ": " + schema.dimension(e.dimension_id).name +
           "]\n";
    if (with_rationale) out += "Rationale: " + e.rationale + "\n";
    out += "Score: " + std::to_string(e.score) + "\n";
  }
  return out;
}

}  // namespace prism
