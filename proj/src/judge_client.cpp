#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "prism/judge_client.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <thread>

#include "prism/audio.hpp"
#include "prism/util.hpp"

namespace prism {

using nlohmann::json;

namespace {

// scheme://authority[/prefix] -> (origin, prefix)
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
  const size_t scheme = base_url.find("://");
  if (scheme == std::string::npos) {
    throw JudgeError(JudgeError::Category::Config, "base_url needs a scheme: " + base_url);
  }
  const size_t slash = base_url.find('/', scheme + 3);
  if (slash == std::string::npos) return {base_url, ""};
  std::string prefix = base_url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {base_url.substr(0, slash), prefix};
}

std::string resolve_api_key(const JudgeEndpoint& endpoint) {
  std::string env = endpoint.api_key_env;
  if (env.empty()) {
    std::string upper = endpoint.name;
    for (char& c : upper) {
      if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
      if (c == '-') c = '_';
    }
    env = "PRISM_API_KEY_" + upper;
  }
  const char* value = std::getenv(env.c_str());
  return value ? value : "";
}

}  // namespace

std::string ResponseCache::key_for(const std::string& model_name, const PromptBundle& bundle) {
  const char sep = '\x1e';
  std::string material = model_name;
  material += sep;
  material += bundle.template_hash;
  material += sep;
  material += bundle.system_text;
  material += sep;
  material += bundle.user_text;
  material += sep;
  material += bundle.audio_ref;
  material += sep;
  material += bundle.mode.cache_tag();
  return sha256_hex(material);
}

std::filesystem::path ResponseCache::path_for(const std::string& key) const {
  return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  const auto path = path_for(key);
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    const json doc = json::parse(read_text_file(path));
    return doc.at("reply").get<std::string>();
  } catch (const std::exception&) {
    return std::nullopt;  // unreadable entries are treated as misses
  }
}

void ResponseCache::put(const std::string& key, const std::string& reply) {
  const json doc = {{"key", key}, {"reply", reply}};
  std::lock_guard<std::mutex> lock(write_mutex_);
  atomic_write_file(path_for(key), doc.dump());
}

JudgeClient::JudgeClient(JudgeEndpoint endpoint, std::filesystem::path cache_dir)
    : endpoint_(std::move(endpoint)), cache_(std::move(cache_dir)), api_key_(resolve_api_key(endpoint_)) {
  if (endpoint_.max_concurrency < 1) {
    throw JudgeError(JudgeError::Category::Config, "max_concurrency must be >= 1");
  }
  if (!(endpoint_.timeout_s > 0)) {
    throw JudgeError(JudgeError::Category::Config, "timeout_s must be positive");
  }
}

std::string JudgeClient::chat_completion(const PromptBundle& bundle, const std::string& audio_b64) {
  const auto [origin, prefix] = split_base_url(endpoint_.base_url);

  const json payload = {
      {"model", endpoint_.model_name},
      {"temperature", endpoint_.temperature},
      {"messages",
       json::array(
           {json{{"role", "system"}, {"content", bundle.system_text}},
            json{{"role", "user"},
                 {"content", json::array({json{{"type", "text"}, {"text", bundle.user_text}},
                                          json{{"type", "input_audio"},
                                               {"data", audio_b64},
                                               {"format", "wav"}}})}}})}};
  const std::string body = payload.dump();

  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  std::string last_error;
  int delay_ms = endpoint_.retry.initial_delay_ms;
  for (int attempt = 1; attempt <= endpoint_.retry.max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      delay_ms *= 2;
    }

    httplib::Client client(origin);
    client.set_connection_timeout(std::chrono::milliseconds(
        static_cast<long long>(endpoint_.timeout_s * 1000)));
    client.set_read_timeout(std::chrono::milliseconds(
        static_cast<long long>(endpoint_.timeout_s * 1000)));

    network_requests_.fetch_add(1);
    auto res = client.Post(prefix + "/chat/completions", headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;  // retryable
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      const std::string retry_after = res->get_header_value("Retry-After");
      if (!retry_after.empty()) {
        try {
          delay_ms = std::max(delay_ms, std::stoi(retry_after) * 1000);
        } catch (...) {
        }
      }
      continue;
    }
    if (res->status >= 400) {  // other 4xx: caller error, do not retry
      throw JudgeError(JudgeError::Category::Transport,
                       "HTTP " + std::to_string(res->status) + " from " + endpoint_.base_url,
                       res->body);
    }
    try {
      const json doc = json::parse(res->body);
      return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception& e) {
      throw JudgeError(JudgeError::Category::Parse,
                       std::string("malformed completion response: ") + e.what(), res->body);
    }
  }
  throw JudgeError(JudgeError::Category::Transport,
                   "request failed after " + std::to_string(endpoint_.retry.max_attempts) +
                       " attempts: " + last_error);
}

std::string JudgeClient::cached_completion(const PromptBundle& bundle,
                                           const std::filesystem::path& audio_path) {
  const std::string key = ResponseCache::key_for(endpoint_.model_name, bundle);
  if (auto cached = cache_.get(key)) {
    cache_hits_.fetch_add(1);
    return *cached;
  }
  const std::string wav = read_text_file(audio_path);
  const std::string b64 = base64_encode(
      std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(wav.data()), wav.size()));
  const std::string reply = chat_completion(bundle, b64);
  cache_.put(key, reply);
  return reply;
}

DiagnosisReport JudgeClient::score_sample(const SampleRecord& sample,
                                          const std::filesystem::path& base_dir, PromptMode mode,
                                          const Schema& schema) {
  const std::filesystem::path audio_path = base_dir / sample.audio_path;
  if (!std::filesystem::exists(audio_path)) {
    throw JudgeError(JudgeError::Category::Config,
                     "sample '" + sample.id + "': audio not found: " + audio_path.string());
  }
  const std::string audio_digest = sha256_hex_file(audio_path);

  if (mode.kind != PromptModeKind::DimensionWise) {
    const PromptBundle bundle =
        build_prompt(sample, mode, schema, builtin_template(mode.kind), audio_digest);
    const std::string reply = cached_completion(bundle, audio_path);
    ParseResult parsed = parse_interleaved(reply, schema);
    if (!parsed.ok()) {
      throw JudgeError(JudgeError::Category::Parse,
                       "sample '" + sample.id + "': " + to_string(parsed.error->kind) + ": " +
                           parsed.error->message,
                       reply);
    }
    DiagnosisReport report = std::move(*parsed.report);
    report.mode = mode;
    return report;
  }

  // Dimension-wise: one request per dimension, assembled in canonical order.
  DiagnosisReport report;
  report.mode = PromptMode{PromptModeKind::DimensionWise, 0};
  for (const auto& d : schema.dimensions) {
    const PromptMode dim_mode{PromptModeKind::DimensionWise, d.id};
    const PromptBundle bundle = build_prompt(sample, dim_mode, schema,
                                             builtin_template(dim_mode.kind), audio_digest);
    const std::string reply = cached_completion(bundle, audio_path);
    SingleDimResult parsed = parse_single_dimension(reply, d.id, schema);
    if (!parsed.ok()) {
      throw JudgeError(JudgeError::Category::Parse,
                       "sample '" + sample.id + "' dimension " + std::to_string(d.id) + ": " +
                           to_string(parsed.error->kind) + ": " + parsed.error->message,
                       reply);
    }
    report.entries.push_back(std::move(*parsed.entry));
    report.raw_text += reply;
    report.raw_text += "\n";
  }
  return report;
}

RSCVerdict JudgeClient::rsc_verify(const std::string& sample_id, int dimension_id,
                                   const std::string& rationale, int gt_score,
                                   const Schema& schema) {
  if (rationale.empty()) {
    throw ValidationError("rsc_verify: rationale is empty for sample '" + sample_id + "'");
  }
  if (!validate_score(schema, dimension_id, gt_score)) {
    throw ValidationError("rsc_verify: ground-truth score " + std::to_string(gt_score) +
                          " invalid for dimension " + std::to_string(dimension_id));
  }

  PromptBundle bundle;
  bundle.system_text =
      "You verify whether a rater's written rationale logically supports a given score under "
      "the provided criteria. Reply with exactly one word: SUPPORTS or CONTRADICTS.";
  bundle.user_text = "Scoring criteria:\n" + render_rubric(schema, {dimension_id}) +
                     "\nGround-truth score: " + std::to_string(gt_score) +
                     "\n\nRationale under review:\n" + rationale +
                     "\n\nDoes the rationale logically support the ground-truth score? Answer "
                     "SUPPORTS or CONTRADICTS.";
  bundle.audio_ref = sha256_hex(rationale);
  bundle.mode = PromptMode{PromptModeKind::DimensionWise, dimension_id};
  bundle.schema_version = schema.version;
  bundle.template_hash = sha256_hex(std::string("rsc-verifier-v1"));

  const std::string key = ResponseCache::key_for(endpoint_.model_name, bundle);
  std::string reply;
  if (auto cached = cache_.get(key)) {
    cache_hits_.fetch_add(1);
    reply = *cached;
  } else {
    reply = chat_completion(bundle, "");
    cache_.put(key, reply);
  }

  const size_t supports = reply.rfind("SUPPORTS");
  const size_t contradicts = reply.rfind("CONTRADICTS");
  RSCVerdict verdict;
  verdict.sample_id = sample_id;
  verdict.dimension_id = dimension_id;
  verdict.raw_text = reply;
  if (supports == std::string::npos && contradicts == std::string::npos) {
    throw JudgeError(JudgeError::Category::Parse,
                     "UnparsableVerdict: no SUPPORTS/CONTRADICTS keyword in verifier reply",
                     reply);
  }
  // Last keyword wins; note "CONTRADICTS" contains no "SUPPORTS" substring.
  if (contradicts != std::string::npos &&
      (supports == std::string::npos || contradicts > supports)) {
    verdict.verdict = RscJudgement::Contradicts;
  } else {
    verdict.verdict = RscJudgement::Supports;
  }
  return verdict;
}

std::vector<RowResult> JudgeClient::run_batch(const Manifest& manifest, PromptMode mode,
                                              const Schema& schema) {
  std::vector<RowResult> results(manifest.records.size());
  std::atomic<size_t> next{0};

  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= manifest.records.size()) return;
      const SampleRecord& record = manifest.records[i];
      RowResult& row = results[i];
      row.sample_id = record.id;
      try {
        row.report = score_sample(record, manifest.base_dir, mode, schema);
      } catch (const JudgeError& e) {
        row.error = e.what();
        row.error_kind = e.category == JudgeError::Category::Transport ? "transport"
                         : e.category == JudgeError::Category::Parse   ? "parse"
                                                                       : "config";
      } catch (const std::exception& e) {
        row.error = e.what();
        row.error_kind = "config";
      }
    }
  };

  const size_t n_workers =
      std::min<size_t>(static_cast<size_t>(endpoint_.max_concurrency), manifest.records.size());
  std::vector<std::thread> threads;
  threads.reserve(n_workers);
  for (size_t w = 0; w < n_workers; ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  return results;
}

}  // namespace prism
