#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "prism/audio.hpp"
#include "prism/schema.hpp"

namespace prism {

enum class PerturbKind {
  AddWhiteNoise,
  AddHum,
  HardClip,
  InjectPops,
  TimeStretch,
  PiecewiseRateWarp,
  PitchShift,
  InsertSilence,
  RemoveSegment,
  SpliceForeign,
  GainStep,
};

std::string to_string(PerturbKind kind);
PerturbKind perturb_kind_from_string(const std::string& s);

// Inclusive score band a perturbation aims for on its target dimension.
struct ScoreBand {
  int lo = 0;
  int hi = 0;
  int midpoint_floor() const { return (lo + hi) / 2; }
  bool operator==(const ScoreBand&) const = default;
};

// Provenance of one applied degradation. (kind, params, seed) fully
// determine the transformation, so outputs are replayable bit-exactly.
struct PerturbationRecord {
  PerturbKind kind = PerturbKind::AddWhiteNoise;
  nlohmann::json params = nlohmann::json::object();
  int target_dimension = 0;
  ScoreBand target_score_band;
  uint64_t seed = 0;

  nlohmann::json to_json() const;
  static PerturbationRecord from_json(const nlohmann::json& j);
  bool operator==(const PerturbationRecord&) const = default;
};

struct PlanStep {
  PerturbKind kind = PerturbKind::AddWhiteNoise;
  nlohmann::json params = nlohmann::json::object();
  uint64_t seed = 0;
};

// Steps applied left-to-right; the empty plan is the identity.
using PerturbationPlan = std::vector<PlanStep>;

struct PerturbError : ValidationError {
  explicit PerturbError(const std::string& what) : ValidationError(what) {}
};

struct PlanStepError : ValidationError {
  size_t step_index;
  PlanStepError(size_t index, const std::string& what)
      : ValidationError("plan step " + std::to_string(index) + ": " + what), step_index(index) {}
};

using PerturbResult = std::pair<AudioBuffer, PerturbationRecord>;

// -- degradation catalog ----------------------------------------------------
// Every op returns the perturbed buffer plus a record annotated with the
// dimension it attacks and the score band it targets.

// Gaussian noise scaled for an exact target SNR; snr_db = +inf is identity.
PerturbResult add_white_noise(const AudioBuffer& buf, double snr_db, uint64_t seed);

// Sinusoid at freq_hz with RMS level level_dbfs; kSilentDb level is identity.
PerturbResult add_hum(const AudioBuffer& buf, double freq_hz, double level_dbfs);

// Clamp to +/-(threshold_frac * peak).
PerturbResult hard_clip(const AudioBuffer& buf, double threshold_frac);

// Poisson-placed single-sample impulses of +/-amplitude.
PerturbResult inject_pops(const AudioBuffer& buf, double rate_per_s, double amplitude,
                          uint64_t seed);

// Uniform resampling warp; factor > 1 slows (pitch co-varies by design).
PerturbResult time_stretch(const AudioBuffer& buf, double factor);

// Per-segment time stretch with concatenation; len(factors) = len(boundaries)+1.
PerturbResult piecewise_rate_warp(const AudioBuffer& buf, const std::vector<double>& boundaries_s,
                                  const std::vector<double>& factors);

// Resample then restore duration via WSOLA overlap-add.
PerturbResult pitch_shift(const AudioBuffer& buf, double semitones);

PerturbResult insert_silence(const AudioBuffer& buf, double at_s, double dur_s);

// Excise [at_s, at_s+dur_s] with a 5 ms crossfade at the joint.
PerturbResult remove_segment(const AudioBuffer& buf, double at_s, double dur_s);

// buf_a[0..at_s] ++ buf_b with a 5 ms crossfade.
PerturbResult splice_foreign(const AudioBuffer& buf_a, const AudioBuffer& buf_b, double at_s);

// Scale samples after at_s by 10^(delta_db/20); rejects if that clips.
PerturbResult gain_step(const AudioBuffer& buf, double at_s, double delta_db);

// Replay a recorded step: dispatch on kind with params/seed. SpliceForeign
// steps reference their foreign audio by a "foreign_path" param.
PerturbResult apply_step(const AudioBuffer& buf, PerturbKind kind, const nlohmann::json& params,
                         uint64_t seed, const std::filesystem::path& base_dir = {});

// Steps in order; the first failing step aborts with PlanStepError.
std::pair<AudioBuffer, std::vector<PerturbationRecord>> apply_plan(
    const AudioBuffer& buf, const PerturbationPlan& plan,
    const std::filesystem::path& base_dir = {});

}  // namespace prism
