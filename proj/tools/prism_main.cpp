#include <CLI11.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "prism/audio.hpp"
#include "prism/dataset.hpp"
#include "prism/judge_client.hpp"
#include "prism/metrics.hpp"
#include "prism/profile.hpp"
#include "prism/protocol.hpp"
#include "prism/schema.hpp"
#include "prism/synthesis.hpp"
#include "prism/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace prism;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitTransport = 2;
constexpr int kExitParse = 3;

int run_guarded(const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (const JudgeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.category) {
      case JudgeError::Category::Transport: return kExitTransport;
      case JudgeError::Category::Parse: return kExitParse;
      case JudgeError::Category::Config: return kExitValidation;
    }
    return kExitValidation;
  } catch (const TransportError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTransport;
  } catch (const ParseFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

Schema schema_from_option(const std::string& schema_path) {
  if (schema_path.empty()) return builtin_schema();
  return load_schema(read_text_file(schema_path));
}

JudgeEndpoint load_endpoint(const std::string& config_path, const std::string& name) {
  const json doc = json::parse(read_text_file(config_path));
  if (!doc.contains("endpoints") || !doc["endpoints"].is_array() || doc["endpoints"].empty()) {
    throw ValidationError("endpoint config needs a non-empty 'endpoints' array");
  }
  for (const auto& e : doc["endpoints"]) {
    JudgeEndpoint endpoint;
    endpoint.name = e.at("name").get<std::string>();
    if (!name.empty() && endpoint.name != name) continue;
    endpoint.base_url = e.at("base_url").get<std::string>();
    endpoint.model_name = e.at("model").get<std::string>();
    if (e.contains("api_key_env")) endpoint.api_key_env = e["api_key_env"].get<std::string>();
    if (e.contains("max_concurrency")) endpoint.max_concurrency = e["max_concurrency"].get<int>();
    if (e.contains("timeout_s")) endpoint.timeout_s = e["timeout_s"].get<double>();
    if (e.contains("temperature")) endpoint.temperature = e["temperature"].get<double>();
    if (e.contains("retry")) {
      const auto& r = e["retry"];
      if (r.contains("max_attempts")) endpoint.retry.max_attempts = r["max_attempts"].get<int>();
      if (r.contains("initial_delay_ms")) {
        endpoint.retry.initial_delay_ms = r["initial_delay_ms"].get<int>();
      }
    }
    return endpoint;
  }
  throw ValidationError("endpoint '" + name + "' not found in " + config_path);
}

PromptMode mode_from_string(const std::string& mode) {
  if (mode == "single-pass") return {PromptModeKind::SinglePassWithRationale, 0};
  if (mode == "scores-only") return {PromptModeKind::SinglePassScoresOnly, 0};
  if (mode == "dimension-wise") return {PromptModeKind::DimensionWise, 0};
  throw ValidationError("unknown mode: " + mode);
}

std::string mode_to_string(const PromptMode& mode) {
  switch (mode.kind) {
    case PromptModeKind::SinglePassWithRationale: return "single-pass";
    case PromptModeKind::SinglePassScoresOnly: return "scores-only";
    case PromptModeKind::DimensionWise: return "dimension-wise";
  }
  return "?";
}

// ---- schema export ---------------------------------------------------------

void cmd_schema_export(const std::string& out_path, bool force) {
  if (fs::exists(out_path) && !force) {
    throw ValidationError("refusing to overwrite " + out_path + " (use --force)");
  }
  atomic_write_file(out_path, serialize_schema(builtin_schema()));
  std::cerr << "wrote schema to " << out_path << "\n";
}

// ---- synthesize ------------------------------------------------------------

void cmd_synthesize(const std::string& manifest_path, const std::string& config_path,
                    uint64_t seed, bool seed_set, const std::string& out_dir,
                    const std::string& schema_path) {
  const Schema schema = schema_from_option(schema_path);
  const Manifest manifest = load_manifest(manifest_path, schema);
  SynthesisConfig config =
      SynthesisConfig::from_json(json::parse(read_text_file(config_path)), schema);
  if (seed_set) config.seed = seed;

  const SynthesisResult result = synthesize_negatives(manifest, config, config.seed, out_dir, schema);

  // Delta rows only, audio paths rebased to the delta's own directory.
  Manifest delta;
  delta.schema_version = manifest.schema_version;
  delta.base_dir = out_dir;
  const fs::path out_abs = fs::absolute(out_dir).lexically_normal();
  const fs::path in_abs =
      fs::absolute(manifest.base_dir.empty() ? "." : manifest.base_dir).lexically_normal();
  for (size_t i = manifest.records.size(); i < result.manifest.records.size(); ++i) {
    SampleRecord record = result.manifest.records[i];
    const fs::path rebased =
        (in_abs / record.audio_path).lexically_normal().lexically_relative(out_abs);
    if (!rebased.empty()) record.audio_path = rebased.string();
    delta.records.push_back(std::move(record));
  }
  fs::create_directories(out_dir);
  write_manifest(delta, fs::path(out_dir) / "delta.jsonl");
  std::cerr << "synthesized " << result.new_record_count << " negative samples into " << out_dir
            << "\n";
}

// ---- evaluate ----------------------------------------------------------------

void cmd_evaluate(const std::string& manifest_path, const std::string& endpoints_path,
                  const std::string& endpoint_name, const std::string& mode_name,
                  const std::string& out_dir, const std::string& cache_dir,
                  const std::string& schema_path) {
  const Schema schema = schema_from_option(schema_path);
  const Manifest manifest = load_manifest(manifest_path, schema);
  const PromptMode mode = mode_from_string(mode_name);
  JudgeClient client(load_endpoint(endpoints_path, endpoint_name), cache_dir);

  const std::vector<RowResult> rows = client.run_batch(manifest, mode, schema);

  std::ostringstream out;
  std::string first_error_kind;
  for (const auto& row : rows) {
    json j;
    j["sample_id"] = row.sample_id;
    if (row.report) {
      j["mode"] = mode_to_string(row.report->mode);
      json entries = json::array();
      for (const auto& e : row.report->entries) {
        entries.push_back({{"dimension_id", e.dimension_id},
                           {"rationale", e.rationale},
                           {"score", e.score}});
      }
      j["entries"] = entries;
      j["serialized"] = serialize_report(*row.report, schema);
      j["raw_text"] = row.report->raw_text;
    } else {
      j["error"] = row.error;
      j["error_kind"] = row.error_kind;
      if (first_error_kind.empty()) first_error_kind = row.error_kind;
    }
    out << j.dump() << "\n";
  }
  fs::create_directories(out_dir);
  atomic_write_file(fs::path(out_dir) / "reports.jsonl", out.str());

  const ClientStats stats = client.stats();
  std::cerr << rows.size() << " samples, " << stats.network_requests << " upstream requests, "
            << stats.cache_hits << " cache hits\n";
  if (!first_error_kind.empty()) {
    if (first_error_kind == "transport") {
      throw TransportError("some rows failed with transport errors; see reports.jsonl");
    }
    if (first_error_kind == "parse") {
      throw ParseFailure("some rows failed with parse errors; see reports.jsonl");
    }
    throw ValidationError("some rows failed validation; see reports.jsonl");
  }
}

// ---- metrics -----------------------------------------------------------------

struct LoadedReports {
  std::map<std::string, std::map<int, int>> scores;
  std::map<std::string, std::map<int, std::string>> rationales;
};

LoadedReports load_reports_jsonl(const std::string& path) {
  LoadedReports out;
  for (const std::string& line : split_lines(read_text_file(path))) {
    if (trim(line).empty()) continue;
    const json j = json::parse(line);
    if (!j.contains("entries")) continue;  // failed row
    const std::string id = j.at("sample_id").get<std::string>();
    for (const auto& e : j["entries"]) {
      const int dim_id = e.at("dimension_id").get<int>();
      out.scores[id][dim_id] = e.at("score").get<int>();
      out.rationales[id][dim_id] = e.value("rationale", "");
    }
  }
  return out;
}

std::string cell_or(const std::optional<double>& v, int digits) {
  return v ? format_fixed(*v, digits) : "--";
}

std::string alignment_text(const std::vector<AlignmentRow>& rows, const Schema& schema,
                           bool have_averages, const LayerAverages& averages, bool with_rsc) {
  std::ostringstream out;
  out << std::left << std::setw(24) << "Dimension" << std::right << std::setw(8) << "LCC"
      << std::setw(8) << "SRCC" << std::setw(10) << "MSE_norm" << std::setw(8) << "n";
  if (with_rsc) out << std::setw(8) << "RSC";
  out << "\n";
  for (const auto& row : rows) {
    out << std::left << std::setw(24) << schema.dimension(row.dimension_id).name << std::right
        << std::setw(8) << cell_or(row.lcc, 3) << std::setw(8) << cell_or(row.srcc, 3)
        << std::setw(10) << cell_or(row.mse_norm, 3) << std::setw(8) << row.n;
    if (with_rsc) out << std::setw(8) << cell_or(row.rsc, 2);
    out << "\n";
  }
  if (have_averages) {
    auto line = [&](const char* name, const LayerAverages::Triple& t) {
      out << std::left << std::setw(24) << name << std::right << std::setw(8)
          << format_fixed(t.lcc, 3) << std::setw(8) << format_fixed(t.srcc, 3) << std::setw(10)
          << format_fixed(t.mse_norm, 3) << "\n";
    };
    line("Basic mean", averages.basic);
    line("Advanced mean", averages.advanced);
    line("Overall mean", averages.overall);
  }
  return out.str();
}

std::string alignment_csv(const std::vector<AlignmentRow>& rows, const Schema& schema,
                          bool with_rsc) {
  std::ostringstream out;
  out << "dimension_id,dimension,lcc,srcc,mse_norm,n";
  if (with_rsc) out << ",rsc";
  out << "\n";
  for (const auto& row : rows) {
    out << row.dimension_id << "," << schema.dimension(row.dimension_id).name << ","
        << cell_or(row.lcc, 6) << "," << cell_or(row.srcc, 6) << "," << cell_or(row.mse_norm, 6)
        << "," << row.n;
    if (with_rsc) out << "," << cell_or(row.rsc, 6);
    out << "\n";
  }
  return out.str();
}

void cmd_metrics(const std::string& reports_path, const std::string& manifest_path,
                 const std::string& out_dir, const std::string& schema_path, bool rsc,
                 const std::string& endpoints_path, const std::string& endpoint_name,
                 const std::string& cache_dir) {
  const Schema schema = schema_from_option(schema_path);
  const Manifest manifest = load_manifest(manifest_path, schema);
  const LoadedReports reports = load_reports_jsonl(reports_path);

  std::map<std::string, std::map<int, int>> gts;
  for (const auto& record : manifest.records) {
    for (const auto& [dim_id, label] : record.labels) gts[record.id][dim_id] = label.score;
  }

  std::vector<AlignmentRow> rows = alignment_table(reports.scores, gts, schema);

  if (rsc) {
    if (endpoints_path.empty()) {
      throw ValidationError("--rsc needs --endpoints (verifier endpoint config)");
    }
    JudgeClient verifier(load_endpoint(endpoints_path, endpoint_name), cache_dir);
    for (auto& row : rows) {
      std::vector<bool> supports;
      for (const auto& [sample_id, dims] : reports.rationales) {
        auto rit = dims.find(row.dimension_id);
        if (rit == dims.end() || rit->second.empty()) continue;
        auto git = gts.find(sample_id);
        if (git == gts.end()) continue;
        auto sit = git->second.find(row.dimension_id);
        if (sit == git->second.end()) continue;
        const RSCVerdict verdict =
            verifier.rsc_verify(sample_id, row.dimension_id, rit->second, sit->second, schema);
        supports.push_back(verdict.verdict == RscJudgement::Supports);
      }
      if (!supports.empty()) row.rsc = rsc_aggregate(supports);
    }
  }

  bool have_averages = true;
  LayerAverages averages;
  try {
    averages = layer_averages(rows, schema);
  } catch (const ValidationError& e) {
    have_averages = false;
    std::cerr << "warning: " << e.what() << "; layer averages omitted\n";
  }

  json doc;
  doc["rows"] = json::array();
  for (const auto& row : rows) {
    json r;
    r["dimension_id"] = row.dimension_id;
    r["dimension"] = schema.dimension(row.dimension_id).name;
    r["lcc"] = row.lcc ? json(*row.lcc) : json(nullptr);
    r["srcc"] = row.srcc ? json(*row.srcc) : json(nullptr);
    r["mse_norm"] = row.mse_norm ? json(*row.mse_norm) : json(nullptr);
    r["n"] = row.n;
    if (row.rsc) r["rsc"] = *row.rsc;
    doc["rows"].push_back(r);
  }
  if (have_averages) {
    auto triple = [](const LayerAverages::Triple& t) {
      return json{{"lcc", t.lcc}, {"srcc", t.srcc}, {"mse_norm", t.mse_norm}};
    };
    doc["layer_averages"] = {{"basic", triple(averages.basic)},
                             {"advanced", triple(averages.advanced)},
                             {"overall", triple(averages.overall)}};
  } else {
    doc["layer_averages"] = nullptr;
  }

  fs::create_directories(out_dir);
  atomic_write_file(fs::path(out_dir) / "alignment.json", doc.dump(2) + "\n");
  atomic_write_file(fs::path(out_dir) / "alignment.txt",
                    alignment_text(rows, schema, have_averages, averages, rsc));
  atomic_write_file(fs::path(out_dir) / "alignment.csv", alignment_csv(rows, schema, rsc));
  std::cerr << "wrote alignment table to " << out_dir << "\n";
}

// ---- profile -----------------------------------------------------------------

std::vector<ScoredReport> load_scored_reports(const std::string& path) {
  std::vector<ScoredReport> out;
  for (const std::string& line : split_lines(read_text_file(path))) {
    if (trim(line).empty()) continue;
    const json j = json::parse(line);
    if (!j.contains("entries")) continue;  // failed rows carry no report
    ScoredReport r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.report.mode = mode_from_string(j.value("mode", "single-pass"));
    for (const auto& e : j["entries"]) {
      ReportEntry entry;
      entry.dimension_id = e.at("dimension_id").get<int>();
      entry.rationale = e.value("rationale", "");
      entry.score = e.at("score").get<int>();
      r.report.entries.push_back(std::move(entry));
    }
    out.push_back(std::move(r));
  }
  return out;
}

void cmd_profile(const std::vector<std::string>& report_specs, const std::string& out_dir,
                 const std::string& flags_override_path, const std::string& schema_path) {
  const Schema schema = schema_from_option(schema_path);

  std::vector<SystemProfile> profiles;
  for (const std::string& spec : report_specs) {
    const size_t eq = spec.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("--reports expects NAME=PATH, got: " + spec);
    }
    const std::string name = spec.substr(0, eq);
    const std::string path = spec.substr(eq + 1);
    const std::vector<ScoredReport> reports = load_scored_reports(path);
    profiles.push_back(system_profile(name, reports, schema));
  }

  const std::vector<FlagRule> rules = default_flag_rules();
  for (auto& p : profiles) p.flag.suggested = suggest_flag(p, profiles, rules);

  if (!flags_override_path.empty()) {
    const json overrides = json::parse(read_text_file(flags_override_path));
    for (auto& p : profiles) {
      if (overrides.contains(p.system_name)) {
        p.flag.manual_override = overrides[p.system_name].get<std::string>();
      }
    }
  }

  fs::create_directories(out_dir);
  atomic_write_file(fs::path(out_dir) / "profiles.md",
                    render_report(profiles, ReportFormat::Markdown, schema));
  atomic_write_file(fs::path(out_dir) / "profiles.json",
                    render_report(profiles, ReportFormat::Json, schema));
  atomic_write_file(fs::path(out_dir) / "profiles.csv",
                    render_report(profiles, ReportFormat::Csv, schema));
  std::cerr << "wrote profiles for " << profiles.size() << " systems to " << out_dir << "\n";
}

// ---- gold-set build -----------------------------------------------------------

void cmd_gold_set_build(const std::string& manifest_path, size_t n, double ood_fraction,
                        uint64_t seed, const std::string& out_path,
                        const std::vector<std::string>& ood_systems,
                        const std::vector<std::string>& strata, const std::string& schema_path) {
  const Schema schema = schema_from_option(schema_path);
  Manifest manifest = load_manifest(manifest_path, schema);
  if (!ood_systems.empty()) {
    tag_distribution(manifest, std::set<std::string>(ood_systems.begin(), ood_systems.end()));
  }
  GoldSetConfig config;
  config.n = n;
  config.ood_fraction = ood_fraction;
  config.seed = seed;
  if (!strata.empty()) config.strata_keys = strata;

  const Manifest gold = build_gold_set(manifest, config);
  write_manifest(gold, out_path);

  size_t ood = 0;
  for (const auto& r : gold.records) ood += r.distribution == Distribution::OOD ? 1 : 0;
  std::cerr << "selected " << gold.records.size() << " records (" << ood << " OOD) into "
            << out_path << "\n";
}

// ---- manifest check -------------------------------------------------------------

void cmd_manifest_check(const std::string& manifest_path, const std::string& against_path,
                        const std::string& schema_path) {
  const Schema schema = schema_from_option(schema_path);
  const Manifest manifest = load_manifest(manifest_path, schema);
  std::cerr << manifest_path << ": " << manifest.records.size() << " records, ids unique, labels valid\n";

  size_t missing_audio = 0;
  for (const auto& r : manifest.records) {
    if (!fs::exists(manifest.resolve_audio(r))) {
      std::cerr << "row '" << r.id << "' audio missing: " << r.audio_path << "\n";
      ++missing_audio;
    }
  }

  if (!against_path.empty()) {
    const Manifest other = load_manifest(against_path, schema);
    const DisjointnessReport report = split_disjointness_check(manifest, other);
    if (report.clean()) {
      std::cout << "disjoint: no shared ids, no duplicate audio\n";
    }
    for (const auto& id : report.shared_ids) std::cout << "shared id: " << id << "\n";
    for (const auto& [a, b] : report.duplicate_audio) {
      std::cout << "duplicate audio: '" << a << "' and '" << b << "'\n";
    }
  }

  if (missing_audio > 0) {
    throw ValidationError(std::to_string(missing_audio) + " rows reference missing audio");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diagnostic evaluation harness for generative speech systems"};
  app.name("prism");
  app.require_subcommand(1);

  int exit_code = kExitOk;

  // schema export
  auto* schema_cmd = app.add_subcommand("schema", "Schema taxonomy operations");
  schema_cmd->require_subcommand(1);
  auto* schema_export = schema_cmd->add_subcommand("export", "Write the builtin schema file");
  auto export_out = std::make_shared<std::string>();
  auto export_force = std::make_shared<bool>(false);
  schema_export->add_option("--out", *export_out, "Destination schema file")->required();
  schema_export->add_flag("--force", *export_force, "Overwrite an existing file");
  schema_export->callback([=, &exit_code] {
    exit_code = run_guarded([&] { cmd_schema_export(*export_out, *export_force); });
  });

  // synthesize
  auto* synth = app.add_subcommand("synthesize", "Generate targeted negative samples");
  auto synth_manifest = std::make_shared<std::string>();
  auto synth_config = std::make_shared<std::string>();
  auto synth_out = std::make_shared<std::string>();
  auto synth_schema = std::make_shared<std::string>();
  auto synth_seed = std::make_shared<uint64_t>(0);
  synth->add_option("--manifest", *synth_manifest, "Source manifest (JSONL)")->required();
  synth->add_option("--config", *synth_config, "Synthesis config (JSON: quotas, params, seed)")
      ->required();
  synth->add_option("--out", *synth_out, "Output directory for audio and delta.jsonl")->required();
  synth->add_option("--schema", *synth_schema, "Schema file (default: builtin)");
  auto* seed_opt = synth->add_option("--seed", *synth_seed, "Override the config seed");
  synth->callback([=, &exit_code, &app] {
    (void)app;
    exit_code = run_guarded([&] {
      cmd_synthesize(*synth_manifest, *synth_config, *synth_seed, seed_opt->count() > 0,
                     *synth_out, *synth_schema);
    });
  });

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Score manifest samples with a judge endpoint");
  auto eval_manifest = std::make_shared<std::string>();
  auto eval_endpoints = std::make_shared<std::string>();
  auto eval_endpoint = std::make_shared<std::string>();
  auto eval_mode = std::make_shared<std::string>("single-pass");
  auto eval_out = std::make_shared<std::string>();
  auto eval_cache = std::make_shared<std::string>();
  auto eval_schema = std::make_shared<std::string>();
  eval->add_option("--manifest", *eval_manifest, "Manifest to evaluate (JSONL)")->required();
  eval->add_option("--endpoints", *eval_endpoints, "Endpoint config file (JSON)")->required();
  eval->add_option("--endpoint", *eval_endpoint, "Endpoint name (default: first in config)");
  eval->add_option("--mode", *eval_mode, "Inference mode")
      ->check(CLI::IsMember({"single-pass", "scores-only", "dimension-wise"}));
  eval->add_option("--out", *eval_out, "Output directory for reports.jsonl")->required();
  eval->add_option("--cache", *eval_cache, "Response cache directory")->required();
  eval->add_option("--schema", *eval_schema, "Schema file (default: builtin)");
  eval->callback([=, &exit_code] {
    exit_code = run_guarded([&] {
      cmd_evaluate(*eval_manifest, *eval_endpoints, *eval_endpoint, *eval_mode, *eval_out,
                   *eval_cache, *eval_schema);
    });
  });

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Compute alignment metrics against ground truth");
  auto met_reports = std::make_shared<std::string>();
  auto met_manifest = std::make_shared<std::string>();
  auto met_out = std::make_shared<std::string>();
  auto met_schema = std::make_shared<std::string>();
  auto met_rsc = std::make_shared<bool>(false);
  auto met_endpoints = std::make_shared<std::string>();
  auto met_endpoint = std::make_shared<std::string>();
  auto met_cache = std::make_shared<std::string>("cache");
  metrics->add_option("--reports", *met_reports, "reports.jsonl from evaluate")->required();
  metrics->add_option("--manifest", *met_manifest, "Manifest with ground-truth labels")->required();
  metrics->add_option("--out", *met_out, "Output directory for alignment.{json,txt,csv}")
      ->required();
  metrics->add_option("--schema", *met_schema, "Schema file (default: builtin)");
  metrics->add_flag("--rsc", *met_rsc, "Verify rationales against ground truth (needs --endpoints)");
  metrics->add_option("--endpoints", *met_endpoints, "Verifier endpoint config file (JSON)");
  metrics->add_option("--endpoint", *met_endpoint, "Verifier endpoint name");
  metrics->add_option("--cache", *met_cache, "Verifier response cache directory");
  metrics->callback([=, &exit_code] {
    exit_code = run_guarded([&] {
      cmd_metrics(*met_reports, *met_manifest, *met_out, *met_schema, *met_rsc, *met_endpoints,
                  *met_endpoint, *met_cache);
    });
  });

  // profile
  auto* profile = app.add_subcommand("profile", "Build per-system capability profiles");
  auto prof_reports = std::make_shared<std::vector<std::string>>();
  auto prof_out = std::make_shared<std::string>();
  auto prof_overrides = std::make_shared<std::string>();
  auto prof_schema = std::make_shared<std::string>();
  profile->add_option("--reports", *prof_reports, "NAME=reports.jsonl (repeatable)")
      ->required()
      ->take_all();
  profile->add_option("--out", *prof_out, "Output directory for profiles.{md,json,csv}")
      ->required();
  profile->add_option("--flags-override", *prof_overrides,
                      "JSON file mapping system name to a manual flag");
  profile->add_option("--schema", *prof_schema, "Schema file (default: builtin)");
  profile->callback([=, &exit_code] {
    exit_code = run_guarded(
        [&] { cmd_profile(*prof_reports, *prof_out, *prof_overrides, *prof_schema); });
  });

  // gold-set build
  auto* gold = app.add_subcommand("gold-set", "Gold test set operations");
  gold->require_subcommand(1);
  auto* gold_build = gold->add_subcommand("build", "Stratified gold-set selection");
  auto gold_manifest = std::make_shared<std::string>();
  auto gold_n = std::make_shared<size_t>(1600);
  auto gold_ood = std::make_shared<double>(0.2);
  auto gold_seed = std::make_shared<uint64_t>(0);
  auto gold_out = std::make_shared<std::string>();
  auto gold_ood_systems = std::make_shared<std::vector<std::string>>();
  auto gold_strata = std::make_shared<std::vector<std::string>>();
  auto gold_schema = std::make_shared<std::string>();
  gold_build->add_option("--manifest", *gold_manifest, "Candidate manifest (JSONL)")->required();
  gold_build->add_option("--n", *gold_n, "Number of records to select");
  gold_build->add_option("--ood-fraction", *gold_ood, "Fraction tagged OOD")
      ->check(CLI::Range(0.0, 1.0));
  gold_build->add_option("--seed", *gold_seed, "Selection seed");
  gold_build->add_option("--out", *gold_out, "Output manifest path")->required();
  gold_build->add_option("--ood-systems", *gold_ood_systems,
                         "source_system names treated as OOD (repeatable)");
  gold_build->add_option("--strata", *gold_strata,
                         "Stratum keys (default: source_system text_domain)");
  gold_build->add_option("--schema", *gold_schema, "Schema file (default: builtin)");
  gold_build->callback([=, &exit_code] {
    exit_code = run_guarded([&] {
      cmd_gold_set_build(*gold_manifest, *gold_n, *gold_ood, *gold_seed, *gold_out,
                         *gold_ood_systems, *gold_strata, *gold_schema);
    });
  });

  // manifest check
  auto* manifest_cmd = app.add_subcommand("manifest", "Manifest maintenance");
  manifest_cmd->require_subcommand(1);
  auto* manifest_check = manifest_cmd->add_subcommand("check", "Validate a manifest");
  auto check_manifest = std::make_shared<std::string>();
  auto check_against = std::make_shared<std::string>();
  auto check_schema = std::make_shared<std::string>();
  manifest_check->add_option("--manifest", *check_manifest, "Manifest to validate (JSONL)")
      ->required();
  manifest_check->add_option("--against", *check_against,
                             "Second manifest for a disjointness check");
  manifest_check->add_option("--schema", *check_schema, "Schema file (default: builtin)");
  manifest_check->callback([=, &exit_code] {
    exit_code = run_guarded(
        [&] { cmd_manifest_check(*check_manifest, *check_against, *check_schema); });
  });

  CLI11_PARSE(app, argc, argv);
  return exit_code;
}
