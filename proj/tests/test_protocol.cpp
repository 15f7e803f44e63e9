#include <doctest.h>

#include <algorithm>

#include "prism/protocol.hpp"
#include "prism/util.hpp"

using namespace prism;

namespace {

SampleRecord make_sample() {
  SampleRecord s;
  s.id = "utt-1";
  s.audio_path = "audio/utt-1.wav";
  s.source_text = "今天的天气真好，我们去公园散步吧。";
  s.source_system = "testsys";
  return s;
}

// Random rationale text: words, punctuation, newlines, CJK, score-like
// decoys. Header-like lines are filtered out (they are not serializable).
std::string random_rationale(Rng& rng) {
  static const std::vector<std::string> pieces = {
      "clean signal", "slight hiss", "抑扬顿挫", "the Score here is fine", "flat melody",
      "Score: 9 would be absurd", "pauses feel natural", "robotic cadence", "breathy onset",
      "energy dips mid-utterance", "音色稳定", "!?", "(inaudible)", "очень хорошо"};
  std::string out;
  const size_t n = rng.next_below(5);
  for (size_t i = 0; i < n; ++i) {
    if (i > 0) out += rng.next_below(4) == 0 ? "\n" : " ";
    out += pieces[rng.next_below(pieces.size())];
  }
  return out;
}

DiagnosisReport random_report(Rng& rng, const Schema& schema) {
  DiagnosisReport report;
  report.mode.kind = rng.next_bool() ? PromptModeKind::SinglePassWithRationale
                                     : PromptModeKind::SinglePassScoresOnly;
  const bool scores_only = report.mode.kind == PromptModeKind::SinglePassScoresOnly;
  for (const auto& d : schema.dimensions) {
    const ScoreScale& scale = schema.scale(d.id);
    ReportEntry e;
    e.dimension_id = d.id;
    e.score = scale.min + static_cast<int>(rng.next_below(scale.range() + 1));
    if (!scores_only) e.rationale = random_rationale(rng);
    report.entries.push_back(std::move(e));
  }
  return report;
}

// Shuffle whole blocks of a serialized report (blocks separated by the
// header grammar).
std::string shuffle_blocks(const std::string& serialized, Rng& rng) {
  std::vector<std::string> blocks;
  std::string current;
  for (const std::string& line : split_lines(serialized)) {
    if (line.rfind("[DIM ", 0) == 0 && !current.empty()) {
      blocks.push_back(current);
      current.clear();
    }
    current += line + "\n";
  }
  if (!current.empty()) blocks.push_back(current);
  deterministic_shuffle(blocks, rng);
  std::string out;
  for (const auto& b : blocks) out += b + "\n";
  return out;
}

}  // namespace

TEST_CASE("build_prompt is deterministic and mode-scoped") {
  const Schema& schema = builtin_schema();
  const SampleRecord sample = make_sample();
  const std::string digest(64, 'a');

  const PromptMode single{PromptModeKind::SinglePassWithRationale, 0};
  const PromptBundle a = build_prompt(sample, single, schema, builtin_template(single.kind), digest);
  const PromptBundle b = build_prompt(sample, single, schema, builtin_template(single.kind), digest);
  CHECK(a == b);
  CHECK(a.audio_ref == digest);
  CHECK(a.schema_version == schema.version);
  CHECK_FALSE(a.template_hash.empty());
  for (const auto& d : schema.dimensions) {
    CHECK(a.user_text.find(d.name) != std::string::npos);
  }
  CHECK(a.user_text.find(sample.source_text) != std::string::npos);
  CHECK(a.user_text.find("Rationale:") != std::string::npos);

  const PromptMode stress{PromptModeKind::DimensionWise, dim::kStress};
  const PromptBundle s = build_prompt(sample, stress, schema, builtin_template(stress.kind), digest);
  CHECK(s.user_text.find("Stress") != std::string::npos);
  CHECK(s.user_text.find("[DIM 9: Stress]") != std::string::npos);
  for (const auto& d : schema.dimensions) {
    if (d.id == dim::kStress) continue;
    CHECK(s.user_text.find("[DIM " + std::to_string(d.id) + ":") == std::string::npos);
  }

  const PromptMode scores_only{PromptModeKind::SinglePassScoresOnly, 0};
  const PromptBundle so =
      build_prompt(sample, scores_only, schema, builtin_template(scores_only.kind), digest);
  CHECK(so.user_text.find("Do not write rationales") != std::string::npos);

  SampleRecord no_text = sample;
  no_text.source_text.clear();
  CHECK_THROWS_AS(build_prompt(no_text, single, schema, builtin_template(single.kind), digest),
                  ValidationError);
  SampleRecord no_audio = sample;
  no_audio.audio_path.clear();
  CHECK_THROWS_AS(build_prompt(no_audio, single, schema, builtin_template(single.kind), digest),
                  ValidationError);
}

TEST_CASE("template hash changes with template text") {
  const PromptTemplate a = PromptTemplate::from_text("sys", "user {{rubric}}");
  const PromptTemplate b = PromptTemplate::from_text("sys", "user {{rubric}} v2");
  CHECK(a.hash != b.hash);
}

TEST_CASE("well-formed 12-block text parses into 12 entries") {
  const Schema& schema = builtin_schema();
  Rng rng(1);
  const DiagnosisReport report = random_report(rng, schema);
  const std::string text = serialize_report(report, schema);
  const ParseResult result = parse_interleaved(text, schema);
  REQUIRE(result.ok());
  CHECK(result.report->entries.size() == 12);
  CHECK(*result.report == report);
}

TEST_CASE("chatter before and after the blocks is tolerated") {
  const Schema& schema = builtin_schema();
  Rng rng(2);
  const DiagnosisReport report = random_report(rng, schema);
  const std::string text = "Sure! Here is my evaluation.\n\n" + serialize_report(report, schema) +
                           "\nHope this helps; ping me for details.";
  const ParseResult result = parse_interleaved(text, schema);
  REQUIRE(result.ok());
  CHECK(*result.report == report);
}

TEST_CASE("out-of-range scores are rejected with the offending dimension") {
  const Schema& schema = builtin_schema();
  DiagnosisReport report;
  report.mode.kind = PromptModeKind::SinglePassWithRationale;
  for (const auto& d : schema.dimensions) {
    report.entries.push_back({d.id, "ok", schema.scale(d.id).min});
  }
  std::string text = serialize_report(report, schema);
  // Pauses is dimension 4 on a 1-5 scale; forge a 6.
  const std::string needle = "[DIM 4: Pauses]\nRationale: ok\nScore: 1";
  const size_t pos = text.find(needle);
  REQUIRE(pos != std::string::npos);
  text.replace(pos, needle.size(), "[DIM 4: Pauses]\nRationale: ok\nScore: 6");

  const ParseResult result = parse_interleaved(text, schema);
  REQUIRE_FALSE(result.ok());
  CHECK(result.error->kind == ParseErrorKind::ScoreOutOfRange);
  CHECK(result.error->dimension_id == dim::kPauses);
  CHECK(result.error->score_value == 6);
}

TEST_CASE("shuffled blocks re-sort to canonical order") {
  const Schema& schema = builtin_schema();
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const DiagnosisReport report = random_report(rng, schema);
    const std::string shuffled = shuffle_blocks(serialize_report(report, schema), rng);
    const ParseResult result = parse_interleaved(shuffled, schema);
    REQUIRE(result.ok());
    REQUIRE(*result.report == report);
    for (size_t i = 0; i < result.report->entries.size(); ++i) {
      REQUIRE(result.report->entries[i].dimension_id == static_cast<int>(i) + 1);
    }
  }
}

TEST_CASE("duplicate blocks are rejected, missing dimensions named") {
  const Schema& schema = builtin_schema();
  Rng rng(4);
  const DiagnosisReport report = random_report(rng, schema);
  std::string text = serialize_report(report, schema);

  const ParseResult dup = parse_interleaved(text + "\n[DIM 3: Intonation]\nScore: 4\n", schema);
  REQUIRE_FALSE(dup.ok());
  CHECK(dup.error->kind == ParseErrorKind::DuplicateDimension);
  CHECK(dup.error->dimension_id == dim::kIntonation);

  // Drop the Lengthening block.
  const size_t start = text.find("[DIM 10:");
  const size_t end = text.find("[DIM 11:");
  REQUIRE(start != std::string::npos);
  std::string missing_text = text.substr(0, start) + text.substr(end);
  const ParseResult missing = parse_interleaved(missing_text, schema);
  REQUIRE_FALSE(missing.ok());
  CHECK(missing.error->kind == ParseErrorKind::MissingDimension);
  CHECK(missing.error->dimension_id == dim::kLengthening);

  const ParseResult none = parse_interleaved("no blocks here at all", schema);
  REQUIRE_FALSE(none.ok());
  CHECK(none.error->kind == ParseErrorKind::NoBlocksFound);
}

TEST_CASE("fractional scores are rejected, not rounded") {
  const Schema& schema = builtin_schema();
  const SingleDimResult r =
      parse_single_dimension("Rationale: meh.\nScore: 1.5", dim::kAudioClarity, schema);
  REQUIRE_FALSE(r.ok());
  CHECK(r.error->kind == ParseErrorKind::UnparsableScore);
}

TEST_CASE("parse_single_dimension extracts one pair") {
  const Schema& schema = builtin_schema();
  const SingleDimResult r =
      parse_single_dimension("Rationale: clean signal.\nScore: 5", dim::kAudioClarity, schema);
  REQUIRE(r.ok());
  CHECK(r.entry->rationale == "clean signal.");
  CHECK(r.entry->score == 5);

  const SingleDimResult with_header = parse_single_dimension(
      "[DIM 2: Audio Clarity]\nRationale: hissy.\nScore: 3\n", dim::kAudioClarity, schema);
  REQUIRE(with_header.ok());
  CHECK(with_header.entry->rationale == "hissy.");
  CHECK(with_header.entry->score == 3);

  const SingleDimResult out_of_range =
      parse_single_dimension("Score: 7", dim::kAudioClarity, schema);
  REQUIRE_FALSE(out_of_range.ok());
  CHECK(out_of_range.error->kind == ParseErrorKind::ScoreOutOfRange);
}

TEST_CASE("score decoys inside rationales do not fool the parser") {
  const Schema& schema = builtin_schema();
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int true_score = 1 + static_cast<int>(rng.next_below(5));
    std::string rationale = "the word Score appears mid-sentence";
    if (rng.next_bool()) rationale += "\nScore: 99 (a decoy line)";
    if (rng.next_bool()) rationale += "\nmore prose after the decoy";
    const std::string text = "Rationale: " + rationale + "\nScore: " + std::to_string(true_score);
    const SingleDimResult r = parse_single_dimension(text, dim::kPauses, schema);
    REQUIRE(r.ok());
    REQUIRE(r.entry->score == true_score);
  }
}

TEST_CASE("round-trip: parse(serialize(r)) == r over randomized reports") {
  const Schema& schema = builtin_schema();
  Rng rng(6);
  for (int trial = 0; trial < 1000; ++trial) {
    const DiagnosisReport report = random_report(rng, schema);
    const std::string text = serialize_report(report, schema);
    const ParseResult result = parse_interleaved(text, schema);
    REQUIRE(result.ok());
    REQUIRE(*result.report == report);
    REQUIRE(result.report->mode.kind == report.mode.kind);
  }
}

TEST_CASE("serializer emits canonical order regardless of entry order") {
  const Schema& schema = builtin_schema();
  Rng rng(7);
  DiagnosisReport report = random_report(rng, schema);
  DiagnosisReport reversed = report;
  std::reverse(reversed.entries.begin(), reversed.entries.end());
  CHECK(serialize_report(reversed, schema) == serialize_report(report, schema));
}

TEST_CASE("scores-only serialization omits rationale lines") {
  const Schema& schema = builtin_schema();
  DiagnosisReport report;
  report.mode.kind = PromptModeKind::SinglePassScoresOnly;
  for (const auto& d : schema.dimensions) {
    report.entries.push_back({d.id, "", schema.scale(d.id).max});
  }
  const std::string text = serialize_report(report, schema);
  CHECK(text.find("Rationale") == std::string::npos);
  const ParseResult result = parse_interleaved(text, schema);
  REQUIRE(result.ok());
  CHECK(result.report->mode.kind == PromptModeKind::SinglePassScoresOnly);
  for (const auto& e : result.report->entries) CHECK(e.rationale.empty());
}

TEST_CASE("validate_report rejects scores-only reports with rationales") {
  const Schema& schema = builtin_schema();
  DiagnosisReport report;
  report.mode.kind = PromptModeKind::SinglePassScoresOnly;
  for (const auto& d : schema.dimensions) {
    report.entries.push_back({d.id, "sneaky rationale", schema.scale(d.id).max});
  }
  CHECK_THROWS_AS(validate_report(report, schema), ValidationError);
}

TEST_CASE("parser is total on mutated and random inputs") {
  const Schema& schema = builtin_schema();
  Rng rng(8);

  SUBCASE("mutated serializations") {
    for (int trial = 0; trial < 1000; ++trial) {
      std::string text = serialize_report(random_report(rng, schema), schema);
      const int mutations = 1 + static_cast<int>(rng.next_below(4));
      for (int m = 0; m < mutations && !text.empty(); ++m) {
        switch (rng.next_below(4)) {
          case 0: {  // delete a slice
            const size_t at = rng.next_below(text.size());
            text.erase(at, rng.next_below(20) + 1);
            break;
          }
          case 1: {  // duplicate a slice
            const size_t at = rng.next_below(text.size());
            const size_t len = std::min<size_t>(rng.next_below(30) + 1, text.size() - at);
            text.insert(at, text.substr(at, len));
            break;
          }
          case 2: {  // flip a byte
            text[rng.next_below(text.size())] = static_cast<char>(rng.next_below(256));
            break;
          }
          default: {  // insert noise
            const char junk[] = {'[', ']', ':', '\n', 'S', '0', char(0xE4), char(0x80)};
            text.insert(rng.next_below(text.size()), 1, junk[rng.next_below(sizeof(junk))]);
            break;
          }
        }
      }
      const ParseResult result = parse_interleaved(text, schema);  // must not throw
      REQUIRE((result.ok() || result.error.has_value()));
    }
  }

  SUBCASE("random byte soup") {
    for (int trial = 0; trial < 1000; ++trial) {
      std::string text;
      const size_t len = rng.next_below(300);
      for (size_t i = 0; i < len; ++i) text.push_back(static_cast<char>(rng.next_below(256)));
      const ParseResult result = parse_interleaved(text, schema);
      REQUIRE((result.ok() || result.error.has_value()));
      const SingleDimResult single = parse_single_dimension(text, dim::kStress, schema);
      REQUIRE((single.ok() || single.error.has_value()));
    }
  }
}

TEST_CASE("template files load with a --- separator and hash their content") {
  const auto dir = std::filesystem::temp_directory_path() / "prism_tmpl";
  std::filesystem::create_directories(dir);
  atomic_write_file(dir / "custom.tmpl",
                    "You rate speech.\n---\nText: {{source_text}}\n{{rubric}}\n{{output_grammar}}\n");
  const PromptTemplate tmpl = load_template(dir / "custom.tmpl");
  CHECK(tmpl.system_text == "You rate speech.");
  CHECK_FALSE(tmpl.hash.empty());
  CHECK(tmpl.hash != builtin_template(PromptModeKind::SinglePassWithRationale).hash);

  const PromptBundle bundle = build_prompt(make_sample(),
                                           {PromptModeKind::SinglePassWithRationale, 0},
                                           builtin_schema(), tmpl, std::string(64, 'b'));
  CHECK(bundle.user_text.find("{{") == std::string::npos);  // all placeholders filled
  CHECK(bundle.user_text.find("Text: 今天的天气真好") != std::string::npos);
  CHECK(bundle.template_hash == tmpl.hash);

  atomic_write_file(dir / "broken.tmpl", "no separator here");
  CHECK_THROWS_AS(load_template(dir / "broken.tmpl"), ValidationError);
}

TEST_CASE("rubric rendering includes every level with bonus note") {
  const Schema& schema = builtin_schema();
  const std::string rubric = render_rubric(schema, {dim::kStress});
  CHECK(rubric.find("0 means neutral") != std::string::npos);
  CHECK(rubric.find("2:") != std::string::npos);
  CHECK(rubric.find("0:") != std::string::npos);
}
