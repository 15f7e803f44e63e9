#pragma once

#include <atomic>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "prism/dataset.hpp"
#include "prism/protocol.hpp"
#include "prism/schema.hpp"

namespace prism {

struct RetryPolicy {
  int max_attempts = 3;
  int initial_delay_ms = 1000;  // doubles per attempt
};

struct JudgeEndpoint {
  std::string name = "judge";
  std::string base_url;    // e.g. http://127.0.0.1:8080 or https://host/v1
  std::string model_name;
  std::string api_key_env;  // env var holding the bearer token; empty -> PRISM_API_KEY_<NAME>
  int max_concurrency = 4;
  double timeout_s = 60.0;
  double temperature = 0.0;
  RetryPolicy retry;
};

struct JudgeError : std::runtime_error {
  enum class Category { Transport, Parse, Config };
  Category category;
  std::string raw_text;  // reply body for post-mortem, when available

  JudgeError(Category c, const std::string& what, std::string raw = {})
      : std::runtime_error(what), category(c), raw_text(std::move(raw)) {}
};

enum class RscJudgement { Supports, Contradicts };

struct RSCVerdict {
  std::string sample_id;
  int dimension_id = 0;
  RscJudgement verdict = RscJudgement::Supports;
  std::string raw_text;
};

// Content-addressed response cache: one file per key under
// <dir>/<first 2 hex>/<key>.json. No TTL; reruns must be reproducible,
// so staleness is a feature. Concurrent reads, serialized writes.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const std::string& reply);

  static std::string key_for(const std::string& model_name, const PromptBundle& bundle);

 private:
  std::filesystem::path path_for(const std::string& key) const;
  std::filesystem::path dir_;
  std::mutex write_mutex_;
};

struct RowResult {
  std::string sample_id;
  std::optional<DiagnosisReport> report;
  std::string error;      // empty on success
  std::string error_kind;  // "transport" | "parse" | "config"
};

struct ClientStats {
  size_t network_requests = 0;
  size_t cache_hits = 0;
};

class JudgeClient {
 public:
  JudgeClient(JudgeEndpoint endpoint, std::filesystem::path cache_dir);

  // Single-pass modes issue one request; DimensionWise issues one
  // request per dimension and assembles the 12 replies into one report.
  // The cache is consulted before any network call.
  DiagnosisReport score_sample(const SampleRecord& sample, const std::filesystem::path& base_dir,
                               PromptMode mode, const Schema& schema);

  // Asks the verifier whether the rationale logically supports the
  // ground-truth score; SUPPORTS/CONTRADICTS keyword, last one wins.
  RSCVerdict rsc_verify(const std::string& sample_id, int dimension_id,
                        const std::string& rationale, int gt_score, const Schema& schema);

  // Bounded worker pool over manifest rows; result order matches
  // manifest order, per-row failures recorded without aborting.
  std::vector<RowResult> run_batch(const Manifest& manifest, PromptMode mode, const Schema& schema);

  ClientStats stats() const {
    return {network_requests_.load(), cache_hits_.load()};
  }

  const JudgeEndpoint& endpoint() const { return endpoint_; }

 private:
  std::string chat_completion(const PromptBundle& bundle, const std::string& audio_b64);
  std::string cached_completion(const PromptBundle& bundle,
                                const std::filesystem::path& audio_path);

  JudgeEndpoint endpoint_;
  ResponseCache cache_;
  std::string api_key_;
  std::atomic<size_t> network_requests_{0};
  std::atomic<size_t> cache_hits_{0};
};

}  // namespace prism
