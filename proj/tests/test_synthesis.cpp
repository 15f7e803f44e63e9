#include <doctest.h>

#include <set>

#include "prism/synthesis.hpp"
#include "test_helpers.hpp"

using namespace prism;
using namespace prism::testing;

namespace {

struct SynthFixture {
  std::filesystem::path dir;
  Manifest manifest;
  Schema schema = builtin_schema();

  explicit SynthFixture(size_t rows) : dir(temp_dir("synth")) {
    std::filesystem::create_directories(dir / "audio");
    manifest.base_dir = dir;
    for (size_t i = 0; i < rows; ++i) {
      SampleRecord r;
      r.id = "src" + std::to_string(i);
      r.audio_path = "audio/" + r.id + ".wav";
      r.source_text = "source text " + std::to_string(i);
      r.source_system = i % 2 ? "sysA" : "sysB";
      r.labels[dim::kPauses] = {4, "", LabelSource::Expert};
      write_wav(make_speechlike(1000 + i, 1.0, 16000, 0.4), dir / r.audio_path);
      manifest.records.push_back(r);
    }
  }
};

}  // namespace

TEST_CASE("zero quotas return the input manifest unchanged") {
  SynthFixture fx(3);
  SynthesisConfig config;
  const SynthesisResult result =
      synthesize_negatives(fx.manifest, config, 1, fx.dir / "out", fx.schema);
  CHECK(result.new_record_count == 0);
  REQUIRE(result.manifest.records.size() == 3);
  for (size_t i = 0; i < 3; ++i) CHECK(result.manifest.records[i] == fx.manifest.records[i]);
}

TEST_CASE("clarity quota emits one targeted record per new row") {
  SynthFixture fx(12);
  SynthesisConfig config;
  config.quotas[dim::kAudioClarity] = 10;

  const SynthesisResult result =
      synthesize_negatives(fx.manifest, config, 7, fx.dir / "out", fx.schema);
  CHECK(result.new_record_count == 10);
  REQUIRE(result.manifest.records.size() == 22);

  const std::set<PerturbKind> clarity_kinds = {PerturbKind::AddWhiteNoise, PerturbKind::HardClip,
                                               PerturbKind::InjectPops, PerturbKind::AddHum};
  std::set<std::string> ids;
  for (size_t i = 12; i < result.manifest.records.size(); ++i) {
    const SampleRecord& r = result.manifest.records[i];
    REQUIRE(ids.insert(r.id).second);
    REQUIRE(r.perturbations.size() == 1);
    const PerturbationRecord& record = r.perturbations[0];
    CHECK(clarity_kinds.count(record.kind) == 1);
    CHECK(record.target_dimension == dim::kAudioClarity);

    const DimensionLabel& weak = r.labels.at(dim::kAudioClarity);
    CHECK(weak.label_source == LabelSource::Synthetic);
    CHECK(weak.score >= record.target_score_band.lo);
    CHECK(weak.score <= record.target_score_band.hi);
    // untouched dimensions inherit the source labels
    CHECK(r.labels.at(dim::kPauses).score == 4);
    CHECK(r.labels.at(dim::kPauses).label_source == LabelSource::Expert);

    CHECK(std::filesystem::exists(result.manifest.resolve_audio(r)));
  }
}

TEST_CASE("synthesis is deterministic and replayable") {
  SynthFixture fx(6);
  SynthesisConfig config;
  config.quotas[dim::kAudioClarity] = 3;
  config.quotas[dim::kSpeakerConsistency] = 2;
  config.quotas[dim::kIntonation] = 1;

  const SynthesisResult a = synthesize_negatives(fx.manifest, config, 11, fx.dir / "o1", fx.schema);
  const SynthesisResult b = synthesize_negatives(fx.manifest, config, 11, fx.dir / "o2", fx.schema);
  REQUIRE(a.new_record_count == b.new_record_count);
  for (size_t i = fx.manifest.records.size(); i < a.manifest.records.size(); ++i) {
    CHECK(a.manifest.records[i].id == b.manifest.records[i].id);
    CHECK(a.manifest.records[i].perturbations == b.manifest.records[i].perturbations);
  }

  // Replaying each record's (kind, params, seed) on its source
  // reproduces the emitted audio bit-exactly.
  for (size_t i = fx.manifest.records.size(); i < a.manifest.records.size(); ++i) {
    const SampleRecord& out = a.manifest.records[i];
    const std::string src_id = out.id.substr(0, out.id.find("__"));
    const SampleRecord* src = nullptr;
    for (const auto& r : fx.manifest.records) {
      if (r.id == src_id) src = &r;
    }
    REQUIRE(src != nullptr);
    const AudioBuffer source = read_wav(fx.manifest.resolve_audio(*src));
    const PerturbationRecord& record = out.perturbations[0];
    const auto replayed =
        apply_step(source, record.kind, record.params, record.seed, fx.manifest.base_dir);
    const AudioBuffer emitted = read_wav(a.manifest.resolve_audio(out));
    REQUIRE(emitted.samples.size() == replayed.first.samples.size());
    // Both went through one PCM16 quantization; compare post-quantization.
    const AudioBuffer requantized = parse_wav(encode_wav(replayed.first));
    REQUIRE(emitted.samples == requantized.samples);
  }
}

TEST_CASE("quota beyond the source pool without reuse is rejected") {
  SynthFixture fx(2);
  SynthesisConfig config;
  config.quotas[dim::kPauses] = 5;
  config.reuse_sources = false;
  CHECK_THROWS_AS(synthesize_negatives(fx.manifest, config, 1, fx.dir / "out", fx.schema),
                  ValidationError);

  config.reuse_sources = true;
  const SynthesisResult result =
      synthesize_negatives(fx.manifest, config, 1, fx.dir / "out", fx.schema);
  CHECK(result.new_record_count == 5);
}

TEST_CASE("advanced-layer quotas have no DSP attack and are rejected") {
  SynthFixture fx(2);
  SynthesisConfig config;
  config.quotas[dim::kParalinguistics] = 1;
  CHECK_THROWS_AS(synthesize_negatives(fx.manifest, config, 1, fx.dir / "out", fx.schema),
                  ValidationError);
  CHECK(kinds_for_dimension(dim::kStress).empty());
  CHECK_FALSE(kinds_for_dimension(dim::kEmotionConsistency).empty());
}

TEST_CASE("config parsing accepts names or ids and rejects junk") {
  const Schema& schema = builtin_schema();
  const auto doc = nlohmann::json::parse(
      R"({"quotas": {"Audio Clarity": 4, "5": 2}, "reuse_sources": true, "seed": 9,
          "params": {"add_white_noise": {"snr_db": [12, 18]}}})");
  const SynthesisConfig config = SynthesisConfig::from_json(doc, schema);
  CHECK(config.quotas.at(dim::kAudioClarity) == 4);
  CHECK(config.quotas.at(dim::kSpeechRate) == 2);
  CHECK(config.reuse_sources);
  CHECK(config.seed == 9);

  CHECK_THROWS_AS(
      SynthesisConfig::from_json(nlohmann::json::parse(R"({"quotas": {"Sparkle": 1}})"), schema),
      ValidationError);
  CHECK_THROWS_AS(
      SynthesisConfig::from_json(nlohmann::json::parse(R"({"quotas": {"99": 1}})"), schema),
      SchemaError);
}

TEST_CASE("configured parameter ranges are honored") {
  SynthFixture fx(4);
  SynthesisConfig config;
  config.quotas[dim::kAudioClarity] = 4;
  config.params = nlohmann::json::parse(R"({"add_white_noise": {"snr_db": [25, 26]}})");

  const SynthesisResult result =
      synthesize_negatives(fx.manifest, config, 3, fx.dir / "out", fx.schema);
  for (size_t i = fx.manifest.records.size(); i < result.manifest.records.size(); ++i) {
    const PerturbationRecord& record = result.manifest.records[i].perturbations[0];
    if (record.kind != PerturbKind::AddWhiteNoise) continue;
    const double snr = record.params.at("snr_db").get<double>();
    CHECK(snr >= 25.0);
    CHECK(snr <= 26.0);
    CHECK(record.target_score_band == ScoreBand{4, 4});
  }
}

TEST_CASE("splice steps replay through apply_plan with a base directory") {
  SynthFixture fx(4);
  SynthesisConfig config;
  config.quotas[dim::kSpeakerConsistency] = 2;

  const SynthesisResult result =
      synthesize_negatives(fx.manifest, config, 5, fx.dir / "out", fx.schema);
  for (size_t i = fx.manifest.records.size(); i < result.manifest.records.size(); ++i) {
    const SampleRecord& out = result.manifest.records[i];
    const PerturbationRecord& record = out.perturbations[0];
    REQUIRE(record.kind == PerturbKind::SpliceForeign);
    REQUIRE(record.params.contains("foreign_path"));

    const std::string src_id = out.id.substr(0, out.id.find("__"));
    for (const auto& r : fx.manifest.records) {
      if (r.id != src_id) continue;
      const AudioBuffer source = read_wav(fx.manifest.resolve_audio(r));
      PerturbationPlan plan = {{record.kind, record.params, record.seed}};
      const auto [replayed, records] = apply_plan(source, plan, fx.manifest.base_dir);
      const AudioBuffer emitted = read_wav(result.manifest.resolve_audio(out));
      const AudioBuffer requantized = parse_wav(encode_wav(replayed));
      REQUIRE(emitted.samples == requantized.samples);
    }
  }
}
