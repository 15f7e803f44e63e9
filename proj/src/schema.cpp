#include "prism/schema.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>

namespace prism {

using nlohmann::json;

std::string to_string(DomainGroup g) {
  switch (g) {
    case DomainGroup::AudioClarity: return "AudioClarity";
    case DomainGroup::Pronunciation: return "Pronunciation";
    case DomainGroup::Prosody: return "Prosody";
    case DomainGroup::Consistency: return "Consistency";
    case DomainGroup::AdvancedExpressiveness: return "AdvancedExpressiveness";
  }
  return "?";
}

std::string to_string(Layer l) { return l == Layer::Basic ? "Basic" : "Advanced"; }

std::string to_string(ScaleSemantics s) { return s == ScaleSemantics::Quality ? "Quality" : "Bonus"; }

namespace {

DomainGroup domain_group_from_string(const std::string& s) {
  if (s == "AudioClarity") return DomainGroup::AudioClarity;
  if (s == "Pronunciation") return DomainGroup::Pronunciation;
  if (s == "Prosody") return DomainGroup::Prosody;
  if (s == "Consistency") return DomainGroup::Consistency;
  if (s == "AdvancedExpressiveness") return DomainGroup::AdvancedExpressiveness;
  throw SchemaError(SchemaError::Kind::Malformed, "unknown domain_group: " + s);
}

Layer layer_from_string(const std::string& s) {
  if (s == "Basic") return Layer::Basic;
  if (s == "Advanced") return Layer::Advanced;
  throw SchemaError(SchemaError::Kind::Malformed, "unknown layer: " + s);
}

ScaleSemantics semantics_from_string(const std::string& s) {
  if (s == "Quality") return ScaleSemantics::Quality;
  if (s == "Bonus") return ScaleSemantics::Bonus;
  throw SchemaError(SchemaError::Kind::Malformed, "unknown scale semantics: " + s);
}

struct LevelText {
  int level;
  const char* text;
  bool authored;  // false = anchor text carried from the published criteria
};

struct BuiltinDim {
  int id;
  const char* name;
  DomainGroup group;
  std::vector<LevelText> levels;
};

std::vector<BuiltinDim> builtin_dims() {
  return {
      {1,
       "Pronunciation Accuracy",
       DomainGroup::Pronunciation,
       {{5, "Every syllable fully articulated with correct tones; no nasal/lateral confusion, "
            "tone sandhi errors, or polyphone mistakes.", true},
        {4, "Articulation essentially correct; at most one subtle sub-phoneme flaw (weak "
            "articulation or slightly off tone) that does not impede understanding.", true},
        {3, "Occasional noticeable mispronunciations such as an n/l swap or a wrong polyphone "
            "reading; meaning still recoverable from context.", true},
        {2, "Repeated pronunciation errors, incomplete articulation, or tone sandhi failures "
            "that force the listener to re-interpret words.", true},
        {1, "Pervasive mispronunciation; large portions of the utterance are unintelligible.", true}}},
      {2,
       "Audio Clarity",
       DomainGroup::AudioClarity,
       {{5, "Clean studio-grade signal; no audible noise, distortion, or non-target vocal "
            "residue.", true},
        {4, "A stationary noise floor with uniform distribution and constant energy (e.g., "
            "slight Gaussian white noise or electrical hum); speech fully intelligible.", false},
        {3, "Intermittent or non-stationary noise, mild clipping, or occasional clicks that "
            "are clearly audible but leave the speech intact.", true},
        {2, "Severe destructive signal distortion, including frequent popping and metallic "
            "artifacts, that directly hinders intelligibility.", false},
        {1, "Signal dominated by noise or distortion; speech content largely masked.", true}}},
      {3,
       "Intonation",
       DomainGroup::Prosody,
       {{5, "Pitch contours track syntactic structure and sentence type throughout; questions, "
            "statements, and emphasis all carry a natural melodic shape.", true},
        {4, "Intonation generally natural with isolated flat or slightly exaggerated contours.", true},
        {3, "Noticeably flat or mechanical melody in places, or pitch movement that mismatches "
            "the sentence structure.", true},
        {2, "Frequent unnatural pitch excursions or monotone delivery conflicting with the "
            "text's syntax.", true},
        {1, "Intonation erratic or inverted; melodic cues actively mislead the listener.", true}}},
      {4,
       "Pauses",
       DomainGroup::Prosody,
       {{5, "Pauses fall at semantic boundaries with natural lengths; breathing points feel "
            "human.", true},
        {4, "Pause placement correct overall; at most one slightly early, late, or overlong "
            "break.", true},
        {3, "Several pauses at odd positions or with unnatural lengths, mildly disturbing the "
            "semantic flow.", true},
        {2, "Pauses routinely break semantic units, or long silences interrupt the utterance.", true},
        {1, "Pausing is chaotic; segmentation destroys the sentence structure.", true}}},
      {5,
       "Speech Rate",
       DomainGroup::Prosody,
       {{5, "Tempo natural and fluent throughout, with rhythm adapted to the content.", true},
        {4, "Overall tempo slightly fast or slow but steady and comfortable to follow.", true},
        {3, "Clearly rushed or dragging passages, or mild unmotivated tempo changes.", true},
        {2, "Abrupt rate discontinuities or sustained extreme tempo that strain comprehension.", true},
        {1, "Rate so unstable or extreme that the utterance is hard to follow.", true}}},
      {6,
       "Speaker Consistency",
       DomainGroup::Consistency,
       {{5, "One stable voice identity across the whole utterance.", true},
        {4, "Timbre essentially stable; one brief moment where the voice quality drifts.", true},
        {3, "Audible drift in voice identity (age, gender coloring, or timbre) within the "
            "utterance.", true},
        {2, "The voice changes character mid-utterance, as if a second speaker briefly takes "
            "over.", true},
        {1, "Multiple distinct voices alternate; no stable identity.", true}}},
      {7,
       "Style Consistency",
       DomainGroup::Consistency,
       {{5, "Speaking style (register, energy, delivery) uniform from start to end.", true},
        {4, "Minor style fluctuation, such as a short change in projection or formality.", true},
        {3, "A clear style shift (e.g., narration to announcement, or a loudness step) within "
            "the utterance.", true},
        {2, "Repeated or strong style breaks that make the delivery feel stitched together.", true},
        {1, "Style incoherent throughout; delivery lurches between modes.", true}}},
      {8,
       "Emotion Consistency",
       DomainGroup::Consistency,
       {{5, "Emotional category stays coherent across the utterance.", true},
        {4, "Emotion stable with one brief, mild wobble in affect.", true},
        {3, "A momentary switch to a conflicting emotional color before recovering.", true},
        {2, "Emotion flips between categories without textual motivation.", true},
        {1, "Affect chaotic; emotional signals contradict each other continuously.", true}}},
      {9,
       "Stress",
       DomainGroup::AdvancedExpressiveness,
       {{2, "Keyword emphasis realized with significant energy concentration or pitch "
            "excursion.", false},
        {1, "Perceptible but weak emphasis, lacking sufficient acoustic prominence.", false},
        {0, "No discernible keyword emphasis; delivery is even (neutral, not a defect).", true}}},
      {10,
       "Lengthening",
       DomainGroup::AdvancedExpressiveness,
       {{2, "Natural syllabic lengthening at phrase boundaries or emphatic points that "
            "audibly smooths the rhythm.", true},
        {1, "Occasional or tentative lengthening; present but not clearly rhythm-shaping.", true},
        {0, "No syllabic lengthening beyond baseline durations (neutral).", true}}},
      {11,
       "Paralinguistics",
       DomainGroup::AdvancedExpressiveness,
       {{2, "Clear, contextually appropriate non-verbal cues (laughter, sighs, breaths, "
            "coughs) rendered convincingly.", true},
        {1, "Subtle or partial non-verbal cues; recognizable but weakly realized.", true},
        {0, "No non-verbal vocal cues present (neutral).", true}}},
      {12,
       "Emotion Expression",
       DomainGroup::AdvancedExpressiveness,
       {{2, "The sentiment inherent in the text is actualized with full, convincing "
            "intensity.", true},
        {1, "Emotion present but undersized relative to the text's sentiment.", true},
        {0, "Neutral rendering; the text's sentiment is not audibly expressed.", true}}},
  };
}

Schema make_builtin() {
  Schema s;
  s.version = "1.0";
  for (const auto& d : builtin_dims()) {
    const bool basic = d.id <= 8;
    Dimension dim{d.id, d.name, d.group, basic ? Layer::Basic : Layer::Advanced};
    s.dimensions.push_back(dim);
    s.scales[d.id] = basic ? ScoreScale{1, 5, ScaleSemantics::Quality}
                           : ScoreScale{0, 2, ScaleSemantics::Bonus};
    Rubric r;
    r.dimension_id = d.id;
    for (const auto& lvl : d.levels) r.level_criteria[lvl.level] = {lvl.text, lvl.authored};
    s.rubrics[d.id] = std::move(r);
  }
  check_schema(s);
  return s;
}

}  // namespace

const Schema& builtin_schema() {
  static const Schema schema = make_builtin();
  return schema;
}

const Dimension* Schema::find_dimension(int id) const {
  for (const auto& d : dimensions) {
    if (d.id == id) return &d;
  }
  return nullptr;
}

const Dimension* Schema::find_dimension_by_name(const std::string& name) const {
  for (const auto& d : dimensions) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

const Dimension& Schema::dimension(int id) const {
  if (const Dimension* d = find_dimension(id)) return *d;
  throw SchemaError(SchemaError::Kind::UnknownDimension,
                    "unknown dimension id " + std::to_string(id), id);
}

const ScoreScale& Schema::scale(int id) const {
  auto it = scales.find(id);
  if (it == scales.end()) {
    throw SchemaError(SchemaError::Kind::UnknownDimension,
                      "no scale for dimension " + std::to_string(id), id);
  }
  return it->second;
}

const Rubric& Schema::rubric(int id) const {
  auto it = rubrics.find(id);
  if (it == rubrics.end()) {
    throw SchemaError(SchemaError::Kind::UnknownDimension,
                      "no rubric for dimension " + std::to_string(id), id);
  }
  return it->second;
}

void check_schema(const Schema& schema) {
  std::set<int> ids;
  std::set<std::string> names;
  for (const auto& d : schema.dimensions) {
    if (!ids.insert(d.id).second) {
      throw SchemaError(SchemaError::Kind::DuplicateDimension,
                        "duplicate dimension id " + std::to_string(d.id), d.id);
    }
    if (!names.insert(d.name).second) {
      throw SchemaError(SchemaError::Kind::Malformed, "duplicate dimension name " + d.name, d.id);
    }
  }
  for (int id = 1; id <= 12; ++id) {
    if (!ids.count(id)) {
      throw SchemaError(SchemaError::Kind::MissingDimension,
                        "missing dimension " + std::to_string(id), id);
    }
  }
  if (schema.dimensions.size() != 12) {
    throw SchemaError(SchemaError::Kind::Malformed,
                      "schema must define exactly 12 dimensions, got " +
                          std::to_string(schema.dimensions.size()));
  }
  for (const auto& d : schema.dimensions) {
    const Layer expected = d.id <= 8 ? Layer::Basic : Layer::Advanced;
    if (d.layer != expected) {
      throw SchemaError(SchemaError::Kind::Malformed,
                        "dimension " + std::to_string(d.id) + " has wrong layer", d.id);
    }
    auto sit = schema.scales.find(d.id);
    if (sit == schema.scales.end()) {
      throw SchemaError(SchemaError::Kind::Malformed,
                        "dimension " + std::to_string(d.id) + " has no scale", d.id);
    }
    const ScoreScale& sc = sit->second;
    const ScoreScale want = d.layer == Layer::Basic ? ScoreScale{1, 5, ScaleSemantics::Quality}
                                                    : ScoreScale{0, 2, ScaleSemantics::Bonus};
    if (!(sc == want)) {
      throw SchemaError(SchemaError::Kind::Malformed,
                        "dimension " + std::to_string(d.id) + " scale does not match its layer",
                        d.id);
    }
    auto rit = schema.rubrics.find(d.id);
    if (rit == schema.rubrics.end()) {
      throw SchemaError(SchemaError::Kind::Malformed,
                        "dimension " + std::to_string(d.id) + " has no rubric", d.id);
    }
    const Rubric& rb = rit->second;
    for (const auto& [level, crit] : rb.level_criteria) {
      if (!sc.contains(level)) {
        throw SchemaError(SchemaError::Kind::LevelOutOfRange,
                          "dimension " + std::to_string(d.id) + " rubric level " +
                              std::to_string(level) + " outside scale",
                          d.id, level);
      }
    }
    for (int level = sc.min; level <= sc.max; ++level) {
      auto lit = rb.level_criteria.find(level);
      if (lit == rb.level_criteria.end() || lit->second.criterion.empty()) {
        throw SchemaError(SchemaError::Kind::MissingCriterion,
                          "dimension " + std::to_string(d.id) + " level " +
                              std::to_string(level) + " has no criterion",
                          d.id, level);
      }
    }
  }
}

bool validate_score(const Schema& schema, int dimension_id, int score) {
  return schema.scale(dimension_id).contains(score);
}

std::string serialize_schema(const Schema& schema) {
  json doc;
  doc["version"] = schema.version;
  doc["dimensions"] = json::array();
  for (const auto& d : schema.dimensions) {
    const ScoreScale& sc = schema.scale(d.id);
    const Rubric& rb = schema.rubric(d.id);
    json jd;
    jd["id"] = d.id;
    jd["name"] = d.name;
    jd["domain_group"] = to_string(d.domain_group);
    jd["layer"] = to_string(d.layer);
    jd["scale"] = {{"min", sc.min}, {"max", sc.max}, {"semantics", to_string(sc.semantics)}};
    json rubric = json::object();
    json authored = json::array();
    for (const auto& [level, crit] : rb.level_criteria) {
      rubric[std::to_string(level)] = crit.criterion;
      if (crit.authored) authored.push_back(level);
    }
    jd["rubric"] = rubric;
    if (!authored.empty()) jd["authored_levels"] = authored;
    doc["dimensions"].push_back(jd);
  }
  return doc.dump(2) + "\n";
}

Schema load_schema(const std::string& document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::exception& e) {
    throw SchemaError(SchemaError::Kind::Malformed, std::string("schema is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("version") || !doc.contains("dimensions") ||
      !doc["dimensions"].is_array()) {
    throw SchemaError(SchemaError::Kind::Malformed, "schema must be {version, dimensions:[...]}");
  }
  Schema s;
  s.version = doc["version"].get<std::string>();
  for (const auto& jd : doc["dimensions"]) {
    try {
      Dimension d;
      d.id = jd.at("id").get<int>();
      d.name = jd.at("name").get<std::string>();
      d.domain_group = domain_group_from_string(jd.at("domain_group").get<std::string>());
      d.layer = layer_from_string(jd.at("layer").get<std::string>());
      if (s.scales.count(d.id)) {
        throw SchemaError(SchemaError::Kind::DuplicateDimension,
                          "duplicate dimension id " + std::to_string(d.id), d.id);
      }
      const auto& jscale = jd.at("scale");
      ScoreScale sc{jscale.at("min").get<int>(), jscale.at("max").get<int>(),
                    semantics_from_string(jscale.at("semantics").get<std::string>())};
      Rubric rb;
      rb.dimension_id = d.id;
      std::set<int> authored_levels;
      if (jd.contains("authored_levels")) {
        for (const auto& l : jd["authored_levels"]) authored_levels.insert(l.get<int>());
      }
      for (const auto& [key, value] : jd.at("rubric").items()) {
        int level = 0;
        try {
          level = std::stoi(key);
        } catch (...) {
          throw SchemaError(SchemaError::Kind::Malformed,
                            "rubric level key is not an integer: " + key, d.id);
        }
        rb.level_criteria[level] = {value.get<std::string>(),
                                    authored_levels.count(level) > 0};
      }
      s.dimensions.push_back(d);
      s.scales[d.id] = sc;
      s.rubrics[d.id] = std::move(rb);
    } catch (const SchemaError&) {
      throw;
    } catch (const json::exception& e) {
      throw SchemaError(SchemaError::Kind::Malformed, std::string("bad dimension entry: ") + e.what());
    }
  }
  std::sort(s.dimensions.begin(), s.dimensions.end(),
            [](const Dimension& a, const Dimension& b) { return a.id < b.id; });
  check_schema(s);
  return s;
}

}  // namespace prism
