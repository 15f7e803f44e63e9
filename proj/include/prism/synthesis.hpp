#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prism/dataset.hpp"
#include "prism/perturb.hpp"
#include "prism/schema.hpp"

namespace prism {

// Per-dimension quotas plus per-kind parameter ranges driving targeted
// negative synthesis. Quotas key on dimension id; loaders also accept
// dimension names.
struct SynthesisConfig {
  std::map<int, size_t> quotas;
  nlohmann::json params = nlohmann::json::object();  // per-kind overrides, e.g. {"add_white_noise":{"snr_db":[10,30]}}
  bool reuse_sources = false;
  uint64_t seed = 0;

  static SynthesisConfig from_json(const nlohmann::json& doc, const Schema& schema);
};

struct SynthesisResult {
  Manifest manifest;          // input records followed by the synthesized rows
  size_t new_record_count = 0;
};

// Applies one dimension-targeted degradation per new row, writes the
// perturbed audio under out_dir/audio/, and attaches weak labels: the
// targeted dimension gets the band midpoint (rounded down,
// label_source=synthetic); untouched dimensions inherit source labels.
// Deterministic under (manifest, config, seed).
SynthesisResult synthesize_negatives(const Manifest& manifest, const SynthesisConfig& config,
                                     uint64_t seed, const std::filesystem::path& out_dir,
                                     const Schema& schema);

// Kinds available for attacking a dimension; empty for dimensions the
// catalog cannot target (the advanced layer needs re-synthesis, not DSP).
std::vector<PerturbKind> kinds_for_dimension(int dimension_id);

}  // namespace prism
