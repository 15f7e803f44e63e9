#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "prism/perturb.hpp"
#include "prism/schema.hpp"

namespace prism {

enum class Split { Train, Test };
enum class Distribution { ID, OOD };
enum class TextDomain { Literary, Conversational, Web };
enum class LabelSource { Expert, Synthetic, Judge };

std::string to_string(Split s);
std::string to_string(Distribution d);
std::string to_string(TextDomain t);
std::string to_string(LabelSource l);

struct DimensionLabel {
  int score = 0;
  std::string rationale;
  LabelSource label_source = LabelSource::Expert;
  bool operator==(const DimensionLabel&) const = default;
};

struct SampleRecord {
  std::string id;
  std::string audio_path;  // relative to the manifest's directory
  std::string source_text;
  std::string source_system;  // TTS name or "human"
  std::map<int, DimensionLabel> labels;
  Split split = Split::Train;
  Distribution distribution = Distribution::ID;
  std::vector<PerturbationRecord> perturbations;
  TextDomain text_domain = TextDomain::Conversational;

  bool operator==(const SampleRecord&) const = default;
};

struct Manifest {
  std::vector<SampleRecord> records;
  std::string schema_version = "1.0";
  std::filesystem::path base_dir;  // directory audio paths resolve against

  std::filesystem::path resolve_audio(const SampleRecord& record) const {
    return base_dir / record.audio_path;
  }
};

struct ManifestError : ValidationError {
  explicit ManifestError(const std::string& what) : ValidationError(what) {}
};

// JSONL, one record per line; validation errors cite line numbers.
Manifest load_manifest(const std::filesystem::path& path, const Schema& schema);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

std::string serialize_record(const SampleRecord& record);
SampleRecord parse_record(const std::string& line, const Schema& schema);

// Stratified gold-set selection: exactly n records, round(ood_fraction*n)
// of them OOD, allocated proportionally across strata with
// largest-remainder rounding. Deterministic under seed, and stratum
// counts do not depend on the seed.
struct GoldSetConfig {
  size_t n = 0;
  double ood_fraction = 0.0;
  std::vector<std::string> strata_keys = {"source_system", "text_domain"};
  uint64_t seed = 0;
};

Manifest build_gold_set(const Manifest& manifest, const GoldSetConfig& config);

// Exact largest-remainder quotas for a pool; exposed so tests can verify
// the selection against an independent recomputation.
std::map<std::string, size_t> largest_remainder_quotas(
    const std::map<std::string, size_t>& stratum_sizes, size_t total);

std::string stratum_key(const SampleRecord& record, const std::vector<std::string>& keys);

struct DisjointnessReport {
  std::vector<std::string> shared_ids;
  // (train id, test id) pairs whose audio bytes hash identically.
  std::vector<std::pair<std::string, std::string>> duplicate_audio;

  bool clean() const { return shared_ids.empty() && duplicate_audio.empty(); }
};

// Flags id overlaps and byte-identical audio under different ids.
DisjointnessReport split_disjointness_check(const Manifest& train, const Manifest& test);

// Tag distribution by source_system membership: systems in ood_systems
// become OOD, everything else ID.
void tag_distribution(Manifest& manifest, const std::set<std::string>& ood_systems);

}  // namespace prism
