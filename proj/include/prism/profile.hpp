#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prism/protocol.hpp"
#include "prism/schema.hpp"

namespace prism {

struct FlagDecision {
  std::string suggested;
  std::optional<std::string> manual_override;
  bool operator==(const FlagDecision&) const = default;
};

// 12-dimension capability profile of one system.
struct SystemProfile {
  std::string system_name;
  std::string schema_version;
  std::map<int, double> means;  // dimension id -> mean score
  std::map<int, size_t> n;      // dimension id -> report count
  FlagDecision flag;
};

struct ScoredReport {
  std::string sample_id;
  DiagnosisReport report;
};

// Unweighted per-dimension means. Rejects incomplete reports, listing
// the offending sample ids.
SystemProfile system_profile(const std::string& system_name,
                             const std::vector<ScoredReport>& reports, const Schema& schema);

// Deterministic predicate over a profile and its cohort; lowest
// priority value wins, and the catch-all always matches.
struct FlagRule {
  std::string name;
  int priority = 0;
  std::function<bool(const SystemProfile&, const std::vector<SystemProfile>&)> predicate;
};

// Transparent defaults that make the manual flag assignment
// reproducible: Paralinguistic-Enhanced, Prosody-Limited, Highly
// Expressive, Pronunciation-Accurate, Stable but Flat, Balanced.
std::vector<FlagRule> default_flag_rules();

std::string suggest_flag(const SystemProfile& profile, const std::vector<SystemProfile>& cohort,
                         const std::vector<FlagRule>& rules);

enum class ReportFormat { Markdown, Json, Csv };

// Dimensions as rows, systems as columns; markdown marks the best value
// bold and the second-best underlined per dimension; manual overrides
// display over suggested flags.
std::string render_report(const std::vector<SystemProfile>& profiles, ReportFormat format,
                          const Schema& schema);

// Inverse of the json render; numeric fields round-trip exactly.
std::vector<SystemProfile> parse_profiles_json(const std::string& document);

}  // namespace prism
