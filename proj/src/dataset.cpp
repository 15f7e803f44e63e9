#include "prism/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <sstream>

#include "prism/util.hpp"

namespace prism {

using nlohmann::json;

std::string to_string(Split s) { return s == Split::Train ? "train" : "test"; }
std::string to_string(Distribution d) { return d == Distribution::ID ? "ID" : "OOD"; }

std::string to_string(TextDomain t) {
  switch (t) {
    case TextDomain::Literary: return "literary";
    case TextDomain::Conversational: return "conversational";
    case TextDomain::Web: return "web";
  }
  return "?";
}

std::string to_string(LabelSource l) {
  switch (l) {
    case LabelSource::Expert: return "expert";
    case LabelSource::Synthetic: return "synthetic";
    case LabelSource::Judge: return "judge";
  }
  return "?";
}

namespace {

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  throw ManifestError("unknown split: " + s);
}

Distribution distribution_from_string(const std::string& s) {
  if (s == "ID") return Distribution::ID;
  if (s == "OOD") return Distribution::OOD;
  throw ManifestError("unknown distribution: " + s);
}

TextDomain text_domain_from_string(const std::string& s) {
  if (s == "literary") return TextDomain::Literary;
  if (s == "conversational") return TextDomain::Conversational;
  if (s == "web") return TextDomain::Web;
  throw ManifestError("unknown text_domain: " + s);
}

LabelSource label_source_from_string(const std::string& s) {
  if (s == "expert") return LabelSource::Expert;
  if (s == "synthetic") return LabelSource::Synthetic;
  if (s == "judge") return LabelSource::Judge;
  throw ManifestError("unknown label_source: " + s);
}

}  // namespace

std::string serialize_record(const SampleRecord& record) {
  json j;
  j["id"] = record.id;
  j["audio_path"] = record.audio_path;
  j["source_text"] = record.source_text;
  j["source_system"] = record.source_system;
  json labels = json::object();
  for (const auto& [dim_id, label] : record.labels) {
    labels[std::to_string(dim_id)] = {{"score", label.score},
                                      {"rationale", label.rationale},
                                      {"label_source", to_string(label.label_source)}};
  }
  j["labels"] = labels;
  j["split"] = to_string(record.split);
  j["distribution"] = to_string(record.distribution);
  json perts = json::array();
  for (const auto& p : record.perturbations) perts.push_back(p.to_json());
  j["perturbations"] = perts;
  j["text_domain"] = to_string(record.text_domain);
  return j.dump();
}

SampleRecord parse_record(const std::string& line, const Schema& schema) {
  json j = json::parse(line);
  SampleRecord r;
  r.id = j.at("id").get<std::string>();
  r.audio_path = j.at("audio_path").get<std::string>();
  r.source_text = j.at("source_text").get<std::string>();
  r.source_system = j.at("source_system").get<std::string>();
  if (j.contains("labels")) {
    for (const auto& [key, value] : j["labels"].items()) {
      int dim_id = 0;
      try {
        dim_id = std::stoi(key);
      } catch (...) {
        throw ManifestError("label key is not a dimension id: " + key);
      }
      if (!schema.find_dimension(dim_id)) {
        throw ManifestError("unknown dimension in labels: " + key);
      }
      DimensionLabel label;
      label.score = value.at("score").get<int>();
      if (value.contains("rationale")) label.rationale = value["rationale"].get<std::string>();
      if (value.contains("label_source")) {
        label.label_source = label_source_from_string(value["label_source"].get<std::string>());
      }
      if (!validate_score(schema, dim_id, label.score)) {
        throw ManifestError("score " + std::to_string(label.score) +
                            " out of range for dimension " + key);
      }
      r.labels[dim_id] = std::move(label);
    }
  }
  if (j.contains("split")) r.split = split_from_string(j["split"].get<std::string>());
  if (j.contains("distribution")) {
    r.distribution = distribution_from_string(j["distribution"].get<std::string>());
  }
  if (j.contains("perturbations")) {
    for (const auto& p : j["perturbations"]) {
      r.perturbations.push_back(PerturbationRecord::from_json(p));
    }
  }
  if (j.contains("text_domain")) {
    r.text_domain = text_domain_from_string(j["text_domain"].get<std::string>());
  }
  return r;
}

Manifest load_manifest(const std::filesystem::path& path, const Schema& schema) {
  const std::string content = read_text_file(path);
  Manifest manifest;
  manifest.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  std::map<std::string, size_t> seen;  // id -> first line number
  const std::vector<std::string> lines = split_lines(content);
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::string line = trim(lines[i]);
    if (line.empty()) continue;
    SampleRecord record;
    try {
      record = parse_record(line, schema);
    } catch (const json::exception& e) {
      throw ManifestError("line " + std::to_string(i + 1) + ": invalid record: " + e.what());
    } catch (const ValidationError& e) {
      throw ManifestError("line " + std::to_string(i + 1) + ": " + e.what());
    }
    auto [it, inserted] = seen.emplace(record.id, i + 1);
    if (!inserted) {
      throw ManifestError("duplicate id '" + record.id + "' on lines " +
                          std::to_string(it->second) + " and " + std::to_string(i + 1));
    }
    manifest.records.push_back(std::move(record));
  }
  return manifest;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ostringstream out;
  for (const auto& record : manifest.records) out << serialize_record(record) << "\n";
  atomic_write_file(path, out.str());
}

std::string stratum_key(const SampleRecord& record, const std::vector<std::string>& keys) {
  std::string out;
  for (const auto& key : keys) {
    if (!out.empty()) out += "\x1f";
    if (key == "source_system") {
      out += record.source_system;
    } else if (key == "text_domain") {
      out += to_string(record.text_domain);
    } else if (key == "split") {
      out += to_string(record.split);
    } else if (key == "distribution") {
      out += to_string(record.distribution);
    } else {
      throw ManifestError("unknown stratum key: " + key);
    }
  }
  return out;
}

std::map<std::string, size_t> largest_remainder_quotas(
    const std::map<std::string, size_t>& stratum_sizes, size_t total) {
  size_t pool = 0;
  for (const auto& [_, size] : stratum_sizes) pool += size;
  if (pool < total) {
    throw ManifestError("not enough records: need " + std::to_string(total) + ", have " +
                        std::to_string(pool));
  }
  std::map<std::string, size_t> quotas;
  if (total == 0 || stratum_sizes.empty()) {
    for (const auto& [key, _] : stratum_sizes) quotas[key] = 0;
    return quotas;
  }

  struct Entry {
    std::string key;
    size_t floor_quota;
    double remainder;
  };
  std::vector<Entry> entries;
  size_t assigned = 0;
  for (const auto& [key, size] : stratum_sizes) {
    const double exact =
        static_cast<double>(total) * static_cast<double>(size) / static_cast<double>(pool);
    const size_t fl = static_cast<size_t>(exact);
    entries.push_back({key, fl, exact - static_cast<double>(fl)});
    assigned += fl;
  }
  // Ties broken by key so allocation is seed-independent.
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.remainder != b.remainder) return a.remainder > b.remainder;
    return a.key < b.key;
  });
  size_t leftover = total - assigned;
  for (auto& e : entries) {
    quotas[e.key] = e.floor_quota;
    if (leftover > 0) {
      quotas[e.key] += 1;
      --leftover;
    }
  }
  return quotas;
}

Manifest build_gold_set(const Manifest& manifest, const GoldSetConfig& config) {
  const size_t n_ood = static_cast<size_t>(std::llround(config.ood_fraction * config.n));
  if (n_ood > config.n) throw ManifestError("ood_fraction out of range");
  const size_t n_id = config.n - n_ood;

  Manifest out;
  out.schema_version = manifest.schema_version;
  out.base_dir = manifest.base_dir;

  for (Distribution pool_kind : {Distribution::ID, Distribution::OOD}) {
    const size_t want = pool_kind == Distribution::ID ? n_id : n_ood;
    if (want == 0) continue;

    std::map<std::string, std::vector<size_t>> strata;  // key -> record indices
    for (size_t i = 0; i < manifest.records.size(); ++i) {
      const auto& r = manifest.records[i];
      if (r.distribution != pool_kind) continue;
      strata[stratum_key(r, config.strata_keys)].push_back(i);
    }
    std::map<std::string, size_t> sizes;
    for (const auto& [key, members] : strata) sizes[key] = members.size();

    std::map<std::string, size_t> quotas;
    try {
      quotas = largest_remainder_quotas(sizes, want);
    } catch (const ManifestError& e) {
      throw ManifestError(std::string(e.what()) + " in " + to_string(pool_kind) + " pool");
    }

    for (auto& [key, members] : strata) {
      const size_t quota = quotas[key];
      if (quota > members.size()) {
        throw ManifestError("stratum '" + key + "' deficit: need " + std::to_string(quota) +
                            ", have " + std::to_string(members.size()));
      }
      Rng rng(Rng::derive_seed(config.seed, fnv1a64(key + "/" + to_string(pool_kind))));
      std::vector<size_t> shuffled = members;
      deterministic_shuffle(shuffled, rng);
      shuffled.resize(quota);
      std::sort(shuffled.begin(), shuffled.end());  // keep manifest order in the output
      for (size_t idx : shuffled) {
        SampleRecord record = manifest.records[idx];
        record.split = Split::Test;
        out.records.push_back(std::move(record));
      }
    }
  }

  std::sort(out.records.begin(), out.records.end(),
            [](const SampleRecord& a, const SampleRecord& b) { return a.id < b.id; });
  return out;
}

DisjointnessReport split_disjointness_check(const Manifest& train, const Manifest& test) {
  DisjointnessReport report;
  std::set<std::string> train_ids;
  for (const auto& r : train.records) train_ids.insert(r.id);
  for (const auto& r : test.records) {
    if (train_ids.count(r.id)) report.shared_ids.push_back(r.id);
  }

  std::map<std::string, std::vector<std::string>> train_digests;
  for (const auto& r : train.records) {
    const auto path = train.resolve_audio(r);
    if (!std::filesystem::exists(path)) continue;
    train_digests[sha256_hex_file(path)].push_back(r.id);
  }
  for (const auto& r : test.records) {
    const auto path = test.resolve_audio(r);
    if (!std::filesystem::exists(path)) continue;
    auto it = train_digests.find(sha256_hex_file(path));
    if (it == train_digests.end()) continue;
    for (const auto& train_id : it->second) {
      if (train_id != r.id) report.duplicate_audio.emplace_back(train_id, r.id);
    }
  }
  return report;
}

void tag_distribution(Manifest& manifest, const std::set<std::string>& ood_systems) {
  for (auto& r : manifest.records) {
    r.distribution = ood_systems.count(r.source_system) ? Distribution::OOD : Distribution::ID;
  }
}

}  // namespace prism
