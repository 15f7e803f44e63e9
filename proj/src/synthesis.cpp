#include "prism/synthesis.hpp"

#include <algorithm>
#include <cmath>

#include "prism/audio.hpp"
#include "prism/util.hpp"

namespace prism {

using nlohmann::json;

std::vector<PerturbKind> kinds_for_dimension(int dimension_id) {
  switch (dimension_id) {
    case dim::kPronunciationAccuracy:
      return {PerturbKind::RemoveSegment};
    case dim::kAudioClarity:
      return {PerturbKind::AddWhiteNoise, PerturbKind::HardClip, PerturbKind::InjectPops,
              PerturbKind::AddHum};
    case dim::kIntonation:
      return {PerturbKind::PitchShift};
    case dim::kPauses:
      return {PerturbKind::InsertSilence};
    case dim::kSpeechRate:
      return {PerturbKind::TimeStretch, PerturbKind::PiecewiseRateWarp};
    case dim::kSpeakerConsistency:
      return {PerturbKind::SpliceForeign};
    case dim::kStyleConsistency:
      return {PerturbKind::GainStep};
    case dim::kEmotionConsistency:
      return {PerturbKind::SpliceForeign};
    default:
      return {};  // advanced-layer traits need re-synthesis, not DSP
  }
}

SynthesisConfig SynthesisConfig::from_json(const json& doc, const Schema& schema) {
  SynthesisConfig config;
  if (doc.contains("quotas")) {
    for (const auto& [key, value] : doc["quotas"].items()) {
      int dim_id = 0;
      if (const Dimension* d = schema.find_dimension_by_name(key)) {
        dim_id = d->id;
      } else {
        try {
          dim_id = std::stoi(key);
        } catch (...) {
          throw ValidationError("quota key is neither a dimension name nor id: " + key);
        }
        schema.dimension(dim_id);  // throws on unknown id
      }
      config.quotas[dim_id] = value.get<size_t>();
    }
  }
  if (doc.contains("params")) config.params = doc["params"];
  if (doc.contains("reuse_sources")) config.reuse_sources = doc["reuse_sources"].get<bool>();
  if (doc.contains("seed")) config.seed = doc["seed"].get<uint64_t>();
  return config;
}

namespace {

std::string dim_slug(const Schema& schema, int dim_id) {
  std::string slug = to_lower(schema.dimension(dim_id).name);
  for (char& c : slug) {
    if (c == ' ') c = '_';
  }
  return slug;
}

double draw_range(const json& params, const std::string& kind, const std::string& name,
                  double lo_default, double hi_default, Rng& rng) {
  double lo = lo_default, hi = hi_default;
  if (params.contains(kind) && params[kind].contains(name)) {
    const auto& r = params[kind][name];
    lo = r.at(0).get<double>();
    hi = r.at(1).get<double>();
  }
  return rng.uniform(lo, hi);
}

PerturbResult synthesize_one(const AudioBuffer& src, PerturbKind kind, const json& params,
                             uint64_t task_seed, Rng& rng, const Manifest& manifest,
                             size_t self_index, const std::vector<size_t>& pool) {
  const std::string ks = to_string(kind);
  const double dur = src.duration_s();
  switch (kind) {
    case PerturbKind::AddWhiteNoise:
      return add_white_noise(src, draw_range(params, ks, "snr_db", 5.0, 30.0, rng), task_seed);
    case PerturbKind::AddHum: {
      const double freq = rng.next_bool() ? 50.0 : 60.0;
      return add_hum(src, freq, draw_range(params, ks, "level_dbfs", -45.0, -25.0, rng));
    }
    case PerturbKind::HardClip:
      return hard_clip(src, draw_range(params, ks, "threshold_frac", 0.3, 0.8, rng));
    case PerturbKind::InjectPops:
      return inject_pops(src, draw_range(params, ks, "rate_per_s", 0.5, 4.0, rng),
                         draw_range(params, ks, "amplitude", 0.5, 0.9, rng), task_seed);
    case PerturbKind::TimeStretch: {
      const double factor = rng.next_bool() ? draw_range(params, ks, "factor_slow", 1.12, 1.3, rng)
                                            : draw_range(params, ks, "factor_fast", 0.78, 0.9, rng);
      return time_stretch(src, factor);
    }
    case PerturbKind::PiecewiseRateWarp: {
      const double boundary = rng.uniform(0.3, 0.7) * dur;
      const double delta = draw_range(params, ks, "factor_jump", 0.3, 0.6, rng);
      std::vector<double> factors = rng.next_bool() ? std::vector<double>{1.0, 1.0 + delta}
                                                    : std::vector<double>{1.0 + delta, 1.0};
      return piecewise_rate_warp(src, {boundary}, factors);
    }
    case PerturbKind::PitchShift: {
      double st = draw_range(params, ks, "semitones_abs", 1.0, 4.0, rng);
      if (rng.next_bool()) st = -st;
      return pitch_shift(src, st);
    }
    case PerturbKind::InsertSilence:
      return insert_silence(src, rng.uniform(0.1, 0.9) * dur,
                            draw_range(params, ks, "dur_s", 0.2, 0.8, rng));
    case PerturbKind::RemoveSegment: {
      const double cut = std::min(draw_range(params, ks, "dur_s", 0.05, 0.3, rng), dur * 0.5);
      const double at = rng.uniform(0.1, 0.9) * (dur - cut);
      return remove_segment(src, at, cut);
    }
    case PerturbKind::SpliceForeign: {
      // Prefer a donor from a different system so the breach is real.
      std::vector<size_t> donors;
      for (size_t idx : pool) {
        if (idx != self_index &&
            manifest.records[idx].source_system != manifest.records[self_index].source_system) {
          donors.push_back(idx);
        }
      }
      if (donors.empty()) {
        for (size_t idx : pool) {
          if (idx != self_index) donors.push_back(idx);
        }
      }
      if (donors.empty()) throw PerturbError("splice_foreign: no donor rows available");
      const size_t donor = donors[rng.next_below(donors.size())];
      const auto& donor_record = manifest.records[donor];
      AudioBuffer foreign = read_wav(manifest.resolve_audio(donor_record));
      if (foreign.sample_rate != src.sample_rate) {
        foreign = resample(foreign, src.sample_rate);
      }
      const double at = rng.uniform(0.3, 0.7) * dur;
      auto [out, record] = splice_foreign(src, foreign, at);
      record.params["foreign_path"] = donor_record.audio_path;
      record.params["foreign_id"] = donor_record.id;
      return {std::move(out), std::move(record)};
    }
    case PerturbKind::GainStep: {
      // Level drops only; boosts could clip hot sources.
      const double delta = draw_range(params, ks, "delta_db", -9.0, -3.0, rng);
      return gain_step(src, rng.uniform(0.2, 0.8) * dur, delta);
    }
  }
  throw PerturbError("synthesize_one: unhandled kind");
}

}  // namespace

SynthesisResult synthesize_negatives(const Manifest& manifest, const SynthesisConfig& config,
                                     uint64_t seed, const std::filesystem::path& out_dir,
                                     const Schema& schema) {
  SynthesisResult result;
  result.manifest = manifest;

  size_t total_quota = 0;
  for (const auto& [_, count] : config.quotas) total_quota += count;
  if (total_quota == 0) return result;

  namespace fs = std::filesystem;
  const fs::path audio_dir = out_dir / "audio";
  fs::create_directories(audio_dir);

  std::vector<size_t> pool(manifest.records.size());
  for (size_t i = 0; i < pool.size(); ++i) pool[i] = i;

  for (const auto& [dim_id, quota] : config.quotas) {
    if (quota == 0) continue;
    const std::vector<PerturbKind> kinds = kinds_for_dimension(dim_id);
    if (kinds.empty()) {
      throw ValidationError("no perturbation kinds can target dimension " +
                            schema.dimension(dim_id).name);
    }
    if (!config.reuse_sources && quota > pool.size()) {
      throw ValidationError("quota " + std::to_string(quota) + " for dimension " +
                            schema.dimension(dim_id).name + " exceeds " +
                            std::to_string(pool.size()) + " source rows and reuse is disabled");
    }

    // Stable per-dimension source order, independent of other dimensions.
    std::vector<size_t> order = pool;
    Rng select_rng(Rng::derive_seed(seed, fnv1a64("select/" + std::to_string(dim_id))));
    deterministic_shuffle(order, select_rng);

    const std::string slug = dim_slug(schema, dim_id);
    for (size_t k = 0; k < quota; ++k) {
      const size_t src_index = order[k % order.size()];
      const SampleRecord& src_record = manifest.records[src_index];
      const uint64_t task_seed =
          Rng::derive_seed(seed, fnv1a64(slug + "/" + std::to_string(k) + "/" + src_record.id));
      Rng rng(task_seed);

      AudioBuffer src;
      try {
        src = read_wav(manifest.resolve_audio(src_record));
      } catch (const std::exception& e) {
        throw ManifestError("row '" + src_record.id + "': unreadable audio: " + e.what());
      }

      const PerturbKind kind = kinds[rng.next_below(kinds.size())];
      auto [audio, record] = synthesize_one(src, kind, config.params, task_seed, rng, manifest,
                                            src_index, pool);
      record.target_dimension = dim_id;  // synthesis provenance wins over the op default
      if (!schema.scale(dim_id).contains(record.target_score_band.lo) ||
          !schema.scale(dim_id).contains(record.target_score_band.hi)) {
        // Retargeting across layers would leave the band outside the scale.
        record.target_score_band = {schema.scale(dim_id).min + 1, schema.scale(dim_id).min + 1};
      }

      SampleRecord out = src_record;
      out.id = src_record.id + "__" + slug + "_" + std::to_string(k);
      out.labels.erase(dim_id);
      DimensionLabel weak;
      weak.score = record.target_score_band.midpoint_floor();
      weak.label_source = LabelSource::Synthetic;
      out.labels[dim_id] = weak;
      out.perturbations.push_back(record);

      const fs::path wav_path = audio_dir / (out.id + ".wav");
      write_wav(audio, wav_path);
      const fs::path base =
          fs::absolute(manifest.base_dir.empty() ? "." : manifest.base_dir).lexically_normal();
      const fs::path rel = fs::absolute(wav_path).lexically_normal().lexically_relative(base);
      out.audio_path = rel.empty() ? fs::absolute(wav_path).string() : rel.string();

      result.manifest.records.push_back(std::move(out));
      ++result.new_record_count;
    }
  }
  return result;
}

}  // namespace prism
