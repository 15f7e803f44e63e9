#include <doctest.h>

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "prism/dataset.hpp"
#include "prism/schema.hpp"
#include "prism/util.hpp"
#include "test_helpers.hpp"

using namespace prism;
using namespace prism::testing;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args, bool merge_stderr = true) {
  const std::string cmd =
      std::string(PRISM_CLI_PATH) + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult result;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) result.output.append(buf, n);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string golden_path(const std::string& name) {
  return std::string(PRISM_GOLDEN_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("--help output matches the golden files for every command") {
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"--help", "help_root.txt"},
      {"schema export --help", "help_schema_export.txt"},
      {"synthesize --help", "help_synthesize.txt"},
      {"evaluate --help", "help_evaluate.txt"},
      {"metrics --help", "help_metrics.txt"},
      {"profile --help", "help_profile.txt"},
      {"gold-set build --help", "help_gold_set_build.txt"},
      {"manifest check --help", "help_manifest_check.txt"},
  };
  for (const auto& [args, golden] : commands) {
    CAPTURE(args);
    const CliResult result = run_cli(args, /*merge_stderr=*/false);
    REQUIRE(result.exit_code == 0);
    CHECK(result.output == read_text_file(golden_path(golden)));
  }
}

TEST_CASE("schema export round-trips and refuses accidental overwrite") {
  const auto dir = temp_dir("cli_schema");
  const std::string out = (dir / "schema.json").string();

  const CliResult first = run_cli("schema export --out " + out);
  REQUIRE(first.exit_code == 0);
  const std::string bytes1 = read_text_file(out);
  CHECK(load_schema(bytes1) == builtin_schema());

  const CliResult refused = run_cli("schema export --out " + out);
  CHECK(refused.exit_code == 1);

  const CliResult forced = run_cli("schema export --force --out " + out);
  REQUIRE(forced.exit_code == 0);
  CHECK(read_text_file(out) == bytes1);  // byte-identical export
}

TEST_CASE("synthesize with zero quotas writes an empty delta and exits 0") {
  const auto dir = temp_dir("cli_synth");
  std::filesystem::create_directories(dir / "audio");

  Manifest manifest;
  manifest.base_dir = dir;
  SampleRecord r;
  r.id = "s0";
  r.audio_path = "audio/s0.wav";
  r.source_text = "hello";
  r.source_system = "sys";
  write_wav(make_tone(220.0, 0.3, 16000, 0.4), dir / r.audio_path);
  manifest.records.push_back(r);
  write_manifest(manifest, dir / "manifest.jsonl");

  atomic_write_file(dir / "config.json", "{\"quotas\": {}, \"seed\": 1}\n");

  const CliResult result = run_cli("synthesize --manifest " + (dir / "manifest.jsonl").string() +
                                   " --config " + (dir / "config.json").string() + " --out " +
                                   (dir / "out").string());
  REQUIRE(result.exit_code == 0);
  CHECK(read_text_file(dir / "out" / "delta.jsonl").empty());
}

TEST_CASE("synthesize reports missing audio as a row-level failure") {
  const auto dir = temp_dir("cli_synth_missing");
  Manifest manifest;
  manifest.base_dir = dir;
  SampleRecord r;
  r.id = "ghost";
  r.audio_path = "audio/nothere.wav";
  r.source_text = "hello";
  r.source_system = "sys";
  manifest.records.push_back(r);
  write_manifest(manifest, dir / "manifest.jsonl");
  atomic_write_file(dir / "config.json", "{\"quotas\": {\"Audio Clarity\": 1}}\n");

  const CliResult result = run_cli("synthesize --manifest " + (dir / "manifest.jsonl").string() +
                                   " --config " + (dir / "config.json").string() + " --out " +
                                   (dir / "out").string());
  CHECK(result.exit_code == 1);
  CHECK(result.output.find("ghost") != std::string::npos);
}

TEST_CASE("synthesize is deterministic under a fixed seed") {
  const auto dir = temp_dir("cli_synth_seed");
  std::filesystem::create_directories(dir / "audio");
  Manifest manifest;
  manifest.base_dir = dir;
  for (int i = 0; i < 3; ++i) {
    SampleRecord r;
    r.id = "s" + std::to_string(i);
    r.audio_path = "audio/" + r.id + ".wav";
    r.source_text = "text " + std::to_string(i);
    r.source_system = "sys";
    write_wav(make_speechlike(100 + i, 0.5, 16000), dir / r.audio_path);
    manifest.records.push_back(r);
  }
  write_manifest(manifest, dir / "manifest.jsonl");
  atomic_write_file(dir / "config.json", "{\"quotas\": {\"Audio Clarity\": 2, \"Pauses\": 1}}\n");

  const std::string base_args = "synthesize --manifest " + (dir / "manifest.jsonl").string() +
                                " --config " + (dir / "config.json").string() + " --seed 99 --out ";
  REQUIRE(run_cli(base_args + (dir / "out1").string()).exit_code == 0);
  REQUIRE(run_cli(base_args + (dir / "out2").string()).exit_code == 0);
  CHECK(read_text_file(dir / "out1" / "delta.jsonl") ==
        read_text_file(dir / "out2" / "delta.jsonl"));

  const Manifest delta = load_manifest(dir / "out1" / "delta.jsonl", builtin_schema());
  REQUIRE(delta.records.size() == 3);
  for (const auto& record : delta.records) {
    REQUIRE(record.perturbations.size() == 1);
    const auto& label = record.labels.at(record.perturbations[0].target_dimension);
    CHECK(label.label_source == LabelSource::Synthetic);
    CHECK(label.score == record.perturbations[0].target_score_band.midpoint_floor());
    CHECK(std::filesystem::exists(delta.resolve_audio(record)));
  }
}

TEST_CASE("gold-set build via CLI tags OOD systems and hits exact counts") {
  const auto dir = temp_dir("cli_gold");
  Manifest manifest;
  manifest.base_dir = dir;
  int counter = 0;
  auto add = [&](const std::string& system, TextDomain domain, int count) {
    for (int i = 0; i < count; ++i) {
      SampleRecord r;
      r.id = "g" + std::to_string(counter++);
      r.audio_path = "audio/none.wav";
      r.source_text = "t";
      r.source_system = system;
      r.text_domain = domain;
      manifest.records.push_back(r);
    }
  };
  add("alpha", TextDomain::Literary, 200);
  add("alpha", TextDomain::Web, 150);
  add("beta", TextDomain::Conversational, 250);
  add("fresh", TextDomain::Web, 120);
  write_manifest(manifest, dir / "manifest.jsonl");

  const CliResult result = run_cli(
      "gold-set build --manifest " + (dir / "manifest.jsonl").string() +
      " --n 400 --ood-fraction 0.25 --seed 5 --ood-systems fresh --out " +
      (dir / "gold.jsonl").string());
  REQUIRE(result.exit_code == 0);

  const Manifest gold = load_manifest(dir / "gold.jsonl", builtin_schema());
  CHECK(gold.records.size() == 400);
  size_t ood = 0;
  for (const auto& r : gold.records) ood += r.distribution == Distribution::OOD ? 1 : 0;
  CHECK(ood == 100);
}

TEST_CASE("manifest check validates and reports disjointness") {
  const auto dir = temp_dir("cli_check");
  std::filesystem::create_directories(dir / "audio");
  const AudioBuffer tone = make_tone(330.0, 0.2, 16000, 0.5);
  write_wav(tone, dir / "audio" / "a.wav");
  write_wav(tone, dir / "audio" / "b.wav");  // identical bytes, new name

  Manifest train;
  train.base_dir = dir;
  SampleRecord r1;
  r1.id = "train-1";
  r1.audio_path = "audio/a.wav";
  r1.source_text = "t";
  r1.source_system = "s";
  train.records.push_back(r1);
  write_manifest(train, dir / "train.jsonl");

  Manifest test;
  test.base_dir = dir;
  SampleRecord r2 = r1;
  r2.id = "test-1";
  r2.audio_path = "audio/b.wav";
  test.records.push_back(r2);
  write_manifest(test, dir / "test.jsonl");

  const CliResult ok = run_cli("manifest check --manifest " + (dir / "train.jsonl").string());
  CHECK(ok.exit_code == 0);

  const CliResult dup = run_cli("manifest check --manifest " + (dir / "train.jsonl").string() +
                                " --against " + (dir / "test.jsonl").string());
  CHECK(dup.exit_code == 0);
  CHECK(dup.output.find("duplicate audio") != std::string::npos);
  CHECK(dup.output.find("train-1") != std::string::npos);
  CHECK(dup.output.find("test-1") != std::string::npos);

  // Corrupt manifest: duplicate id -> validation exit code 1.
  std::ofstream bad(dir / "bad.jsonl");
  bad << serialize_record(r1) << "\n" << serialize_record(r1) << "\n";
  bad.close();
  const CliResult invalid = run_cli("manifest check --manifest " + (dir / "bad.jsonl").string());
  CHECK(invalid.exit_code == 1);
}

TEST_CASE("profile CLI honors a flags-override file") {
  const auto dir = temp_dir("cli_profile_override");
  // Three complete reports for one system.
  std::ostringstream rows;
  for (int rep = 0; rep < 3; ++rep) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& d : builtin_schema().dimensions) {
      entries.push_back({{"dimension_id", d.id},
                         {"rationale", "r"},
                         {"score", builtin_schema().scale(d.id).max}});
    }
    rows << nlohmann::json{{"sample_id", "s" + std::to_string(rep)},
                           {"mode", "single-pass"},
                           {"entries", entries}}
                .dump()
         << "\n";
  }
  atomic_write_file(dir / "reports.jsonl", rows.str());
  atomic_write_file(dir / "overrides.json", "{\"solo\": \"Hand Checked\"}\n");

  const CliResult result = run_cli("profile --reports solo=" + (dir / "reports.jsonl").string() +
                                   " --flags-override " + (dir / "overrides.json").string() +
                                   " --out " + (dir / "out").string());
  REQUIRE(result.exit_code == 0);
  const std::string md = read_text_file(dir / "out" / "profiles.md");
  CHECK(md.find("Hand Checked (override)") != std::string::npos);
  const std::string json_doc = read_text_file(dir / "out" / "profiles.json");
  CHECK(json_doc.find("\"manual_override\": \"Hand Checked\"") != std::string::npos);
}

TEST_CASE("unknown mode is rejected by flag validation") {
  const CliResult result = run_cli(
      "evaluate --manifest x.jsonl --endpoints e.json --mode sideways --out o --cache c");
  CHECK(result.exit_code != 0);
}
