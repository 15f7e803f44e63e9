#include "prism/profile.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "prism/util.hpp"

namespace prism {

using nlohmann::json;

SystemProfile system_profile(const std::string& system_name,
                             const std::vector<ScoredReport>& reports, const Schema& schema) {
  if (reports.empty()) throw ValidationError("system_profile: no reports for " + system_name);

  std::string incomplete;
  for (const auto& r : reports) {
    bool ok = r.report.entries.size() == schema.dimensions.size();
    if (ok) {
      for (size_t i = 0; i < r.report.entries.size(); ++i) {
        ok = ok && r.report.entries[i].dimension_id == schema.dimensions[i].id;
      }
    }
    if (!ok) {
      if (!incomplete.empty()) incomplete += ", ";
      incomplete += r.sample_id;
    }
  }
  if (!incomplete.empty()) {
    throw ValidationError("system_profile: incomplete reports for samples [" + incomplete + "]");
  }

  SystemProfile profile;
  profile.system_name = system_name;
  profile.schema_version = schema.version;
  for (const auto& d : schema.dimensions) {
    profile.means[d.id] = 0.0;
    profile.n[d.id] = reports.size();
  }
  for (const auto& r : reports) {
    for (const auto& e : r.report.entries) profile.means[e.dimension_id] += e.score;
  }
  for (auto& [_, mean] : profile.means) mean /= static_cast<double>(reports.size());
  return profile;
}

namespace {

double cohort_max(const std::vector<SystemProfile>& cohort, int dim) {
  double best = -1e300;
  for (const auto& p : cohort) best = std::max(best, p.means.at(dim));
  return best;
}

// Highest mean among the *other* systems.
double runner_up(const SystemProfile& self, const std::vector<SystemProfile>& cohort, int dim) {
  double best = 0.0;
  for (const auto& p : cohort) {
    if (p.system_name == self.system_name) continue;
    best = std::max(best, p.means.at(dim));
  }
  return best;
}

// Second-highest distinct value in the cohort (the "underline" rank).
double second_distinct(const std::vector<SystemProfile>& cohort, int dim) {
  std::set<double, std::greater<double>> values;
  for (const auto& p : cohort) values.insert(p.means.at(dim));
  if (values.size() < 2) return *values.begin();
  return *std::next(values.begin());
}

bool is_max(const SystemProfile& p, const std::vector<SystemProfile>& cohort, int dim) {
  return p.means.at(dim) >= cohort_max(cohort, dim);
}

}  // namespace

std::vector<FlagRule> default_flag_rules() {
  std::vector<FlagRule> rules;

  rules.push_back({"Paralinguistic-Enhanced", 1,
                   [](const SystemProfile& p, const std::vector<SystemProfile>& cohort) {
                     if (cohort.size() < 2) return false;
                     const double mine = p.means.at(dim::kParalinguistics);
                     return is_max(p, cohort, dim::kParalinguistics) &&
                            mine >= 2.0 * runner_up(p, cohort, dim::kParalinguistics);
                   }});

  rules.push_back({"Prosody-Limited", 2,
                   [](const SystemProfile& p, const std::vector<SystemProfile>&) {
                     return p.means.at(dim::kStress) < 0.1 ||
                            p.means.at(dim::kLengthening) < 0.1;
                   }});

  rules.push_back({"Highly Expressive", 3,
                   [](const SystemProfile& p, const std::vector<SystemProfile>& cohort) {
                     if (cohort.size() < 2) return false;
                     return is_max(p, cohort, dim::kEmotionExpression) &&
                            is_max(p, cohort, dim::kLengthening);
                   }});

  rules.push_back({"Pronunciation-Accurate", 4,
                   [](const SystemProfile& p, const std::vector<SystemProfile>& cohort) {
                     if (cohort.size() < 2) return false;
                     if (!is_max(p, cohort, dim::kPronunciationAccuracy)) return false;
                     for (int d : {dim::kStress, dim::kLengthening, dim::kParalinguistics,
                                   dim::kEmotionExpression}) {
                       if (is_max(p, cohort, d)) return false;
                     }
                     return true;
                   }});

  rules.push_back({"Stable but Flat", 5,
                   [](const SystemProfile& p, const std::vector<SystemProfile>& cohort) {
                     if (cohort.size() < 2) return false;
                     for (int d : {dim::kSpeakerConsistency, dim::kStyleConsistency,
                                   dim::kEmotionConsistency}) {
                       if (p.means.at(d) < second_distinct(cohort, d)) return false;
                     }
                     return p.means.at(dim::kParalinguistics) < 0.15;
                   }});

  rules.push_back({"Balanced", 1000,
                   [](const SystemProfile&, const std::vector<SystemProfile>&) { return true; }});
  return rules;
}

std::string suggest_flag(const SystemProfile& profile, const std::vector<SystemProfile>& cohort,
                         const std::vector<FlagRule>& rules) {
  std::vector<const FlagRule*> ordered;
  ordered.reserve(rules.size());
  for (const auto& r : rules) ordered.push_back(&r);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const FlagRule* a, const FlagRule* b) { return a->priority < b->priority; });
  for (const FlagRule* rule : ordered) {
    if (rule->predicate(profile, cohort)) return rule->name;
  }
  throw ValidationError("no flag rule matched; rule set lacks a catch-all");
}

namespace {

std::string flag_cell(const SystemProfile& p) {
  if (p.flag.manual_override) return *p.flag.manual_override + " (override)";
  return p.flag.suggested + " (suggested)";
}

std::string markdown_report(const std::vector<SystemProfile>& profiles, const Schema& schema) {
  std::ostringstream out;
  out << "| Dimension |";
  for (const auto& p : profiles) out << " " << p.system_name << " |";
  out << "\n|---|";
  for (size_t i = 0; i < profiles.size(); ++i) out << "---|";
  out << "\n";
  for (const auto& d : schema.dimensions) {
    out << "| " << d.name << " |";
    const double best = cohort_max(profiles, d.id);
    const double second = profiles.size() > 1 ? second_distinct(profiles, d.id) : best;
    for (const auto& p : profiles) {
      const double v = p.means.at(d.id);
      const std::string text = format_fixed(v, 3);
      if (v == best) {
        out << " **" << text << "** |";
      } else if (profiles.size() > 1 && v == second) {
        out << " <u>" << text << "</u> |";
      } else {
        out << " " << text << " |";
      }
    }
    out << "\n";
  }
  out << "| Diagnostic Flag |";
  for (const auto& p : profiles) out << " " << flag_cell(p) << " |";
  out << "\n";
  return out.str();
}

std::string csv_report(const std::vector<SystemProfile>& profiles, const Schema& schema) {
  std::ostringstream out;
  out << "dimension";
  for (const auto& p : profiles) out << "," << p.system_name;
  out << "\n";
  for (const auto& d : schema.dimensions) {
    out << d.name;
    for (const auto& p : profiles) out << "," << format_fixed(p.means.at(d.id), 3);
    out << "\n";
  }
  out << "diagnostic_flag";
  for (const auto& p : profiles) out << "," << flag_cell(p);
  out << "\n";
  return out.str();
}

std::string json_report(const std::vector<SystemProfile>& profiles, const Schema& schema) {
  json doc;
  doc["schema_version"] = schema.version;
  doc["systems"] = json::array();
  for (const auto& p : profiles) {
    json sys;
    sys["name"] = p.system_name;
    json means = json::object(), counts = json::object();
    for (const auto& [id, mean] : p.means) means[std::to_string(id)] = mean;
    for (const auto& [id, count] : p.n) counts[std::to_string(id)] = count;
    sys["means"] = means;
    sys["n"] = counts;
    sys["flag"] = {{"suggested", p.flag.suggested},
                   {"manual_override",
                    p.flag.manual_override ? json(*p.flag.manual_override) : json(nullptr)}};
    doc["systems"].push_back(sys);
  }
  return doc.dump(2) + "\n";
}

}  // namespace

std::string render_report(const std::vector<SystemProfile>& profiles, ReportFormat format,
                          const Schema& schema) {
  if (profiles.empty()) throw ValidationError("render_report: no profiles");
  for (const auto& p : profiles) {
    if (p.schema_version != profiles.front().schema_version) {
      throw ValidationError("render_report: mixed schema versions (" + p.schema_version +
                            " vs " + profiles.front().schema_version + ")");
    }
  }
  switch (format) {
    case ReportFormat::Markdown: return markdown_report(profiles, schema);
    case ReportFormat::Csv: return csv_report(profiles, schema);
    case ReportFormat::Json: return json_report(profiles, schema);
  }
  throw ValidationError("render_report: unknown format");
}

std::vector<SystemProfile> parse_profiles_json(const std::string& document) {
  const json doc = json::parse(document);
  std::vector<SystemProfile> profiles;
  const std::string version = doc.at("schema_version").get<std::string>();
  for (const auto& sys : doc.at("systems")) {
    SystemProfile p;
    p.system_name = sys.at("name").get<std::string>();
    p.schema_version = version;
    for (const auto& [key, value] : sys.at("means").items()) {
      p.means[std::stoi(key)] = value.get<double>();
    }
    for (const auto& [key, value] : sys.at("n").items()) {
      p.n[std::stoi(key)] = value.get<size_t>();
    }
    p.flag.suggested = sys.at("flag").at("suggested").get<std::string>();
    if (!sys.at("flag").at("manual_override").is_null()) {
      p.flag.manual_override = sys.at("flag").at("manual_override").get<std::string>();
    }
    profiles.push_back(std::move(p));
  }
  return profiles;
}

}  // namespace prism
