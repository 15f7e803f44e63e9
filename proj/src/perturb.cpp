#include "prism/perturb.hpp"

#include <algorithm>
#include <cmath>

#include "prism/util.hpp"

namespace prism {

using nlohmann::json;

std::string to_string(PerturbKind kind) {
  switch (kind) {
    case PerturbKind::AddWhiteNoise: return "add_white_noise";
    case PerturbKind::AddHum: return "add_hum";
    case PerturbKind::HardClip: return "hard_clip";
    case PerturbKind::InjectPops: return "inject_pops";
    case PerturbKind::TimeStretch: return "time_stretch";
    case PerturbKind::PiecewiseRateWarp: return "piecewise_rate_warp";
    case PerturbKind::PitchShift: return "pitch_shift";
    case PerturbKind::InsertSilence: return "insert_silence";
    case PerturbKind::RemoveSegment: return "remove_segment";
    case PerturbKind::SpliceForeign: return "splice_foreign";
    case PerturbKind::GainStep: return "gain_step";
  }
  return "?";
}

PerturbKind perturb_kind_from_string(const std::string& s) {
  static const std::vector<PerturbKind> kinds = {
      PerturbKind::AddWhiteNoise,     PerturbKind::AddHum,      PerturbKind::HardClip,
      PerturbKind::InjectPops,        PerturbKind::TimeStretch, PerturbKind::PiecewiseRateWarp,
      PerturbKind::PitchShift,        PerturbKind::InsertSilence, PerturbKind::RemoveSegment,
      PerturbKind::SpliceForeign,     PerturbKind::GainStep};
  for (PerturbKind k : kinds) {
    if (to_string(k) == s) return k;
  }
  throw PerturbError("unknown perturbation kind: " + s);
}

json PerturbationRecord::to_json() const {
  return json{{"kind", to_string(kind)},
              {"params", params},
              {"target_dimension", target_dimension},
              {"target_score_band", {target_score_band.lo, target_score_band.hi}},
              {"seed", seed}};
}

PerturbationRecord PerturbationRecord::from_json(const json& j) {
  PerturbationRecord r;
  r.kind = perturb_kind_from_string(j.at("kind").get<std::string>());
  r.params = j.at("params");
  r.target_dimension = j.at("target_dimension").get<int>();
  const auto& band = j.at("target_score_band");
  r.target_score_band = {band.at(0).get<int>(), band.at(1).get<int>()};
  r.seed = j.at("seed").get<uint64_t>();
  return r;
}

namespace {

constexpr double kCrossfadeS = 0.005;

// Keeps samples inside [-1, 1]: identity below the knee, smooth
// compression above it.
float soft_limit(double x) {
  const double knee = 0.95;
  const double a = std::fabs(x);
  if (a <= knee) return static_cast<float>(x);
  const double y = knee + (1.0 - knee) * std::tanh((a - knee) / (1.0 - knee));
  return static_cast<float>(x < 0 ? -y : y);
}

size_t sample_index(const AudioBuffer& buf, double at_s) {
  return static_cast<size_t>(std::llround(at_s * buf.sample_rate));
}

// Length-targeted linear interpolation warp; out_len == len is identity.
std::vector<float> linear_warp(const std::vector<float>& in, size_t out_len) {
  std::vector<float> out(out_len);
  if (in.empty() || out_len == 0) return out;
  const double step = static_cast<double>(in.size()) / static_cast<double>(out_len);
  for (size_t i = 0; i < out_len; ++i) {
    const double pos = i * step;
    size_t i0 = static_cast<size_t>(pos);
    if (i0 >= in.size() - 1) i0 = in.size() - 1;
    const size_t i1 = std::min(i0 + 1, in.size() - 1);
    const double frac = pos - static_cast<double>(i0);
    out[i] = static_cast<float>((1.0 - frac) * in[i0] + frac * in[i1]);
  }
  return out;
}

// WSOLA: overlap-add time scaling with a correlation search so frame
// joins stay phase-aligned. Exact reconstruction when out_len == len.
std::vector<float> wsola_stretch(const std::vector<float>& in, size_t out_len) {
  const size_t n = in.size();
  if (n == 0 || out_len == 0) return std::vector<float>(out_len, 0.0f);

  size_t frame = std::min<size_t>(1024, n);
  if (frame % 2) --frame;
  if (frame < 64) return linear_warp(in, out_len);  // too short for OLA
  const size_t hop = frame / 2;
  const long long search = static_cast<long long>(frame / 4);
  const double stretch = static_cast<double>(out_len) / static_cast<double>(n);

  std::vector<double> window(frame);
  const double pi = 3.14159265358979323846;
  for (size_t i = 0; i < frame; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(i) / frame);
  }

  std::vector<double> acc(out_len + frame, 0.0);
  std::vector<double> wsum(out_len + frame, 0.0);
  const long long max_full = static_cast<long long>(n) - static_cast<long long>(hop);

  auto segment_corr = [&](long long a, long long b, size_t len) {
    double dot = 0.0;
    for (size_t i = 0; i < len; ++i) dot += static_cast<double>(in[a + i]) * in[b + i];
    return dot;
  };

  long long prev_sel = 0;
  for (size_t k = 0;; ++k) {
    const size_t out_pos = k * hop;
    if (out_pos >= out_len) break;
    long long nominal = std::llround(static_cast<double>(out_pos) / stretch);
    nominal = std::clamp<long long>(nominal, 0, static_cast<long long>(n) - 1);

    // Search only where a full overlap window exists; tail frames stay
    // at the nominal position and zero-pad past the end.
    long long sel = nominal;
    if (k > 0) {
      const long long natural = prev_sel + static_cast<long long>(hop);
      if (natural >= 0 && natural + static_cast<long long>(hop) <= static_cast<long long>(n) &&
          nominal <= max_full) {
        double best = -1e300;
        const long long lo = std::clamp<long long>(nominal - search, 0, max_full);
        const long long hi = std::clamp<long long>(nominal + search, 0, max_full);
        for (long long cand = lo; cand <= hi; ++cand) {
          const double c = segment_corr(cand, natural, hop);
          if (c > best) {
            best = c;
            sel = cand;
          }
        }
      }
    }

    for (size_t i = 0; i < frame && out_pos + i < acc.size(); ++i) {
      if (sel + static_cast<long long>(i) >= static_cast<long long>(n)) break;
      acc[out_pos + i] += window[i] * in[sel + i];
      wsum[out_pos + i] += window[i];
    }
    prev_sel = sel;
  }

  std::vector<float> out(out_len);
  for (size_t i = 0; i < out_len; ++i) {
    out[i] = wsum[i] > 1e-9 ? static_cast<float>(acc[i] / wsum[i]) : 0.0f;
  }
  return out;
}

// Length-preserving joint smoothing: the last `fade` head samples ramp
// out and the first `fade` tail samples ramp in, so |out| = |head|+|tail|.
std::vector<float> crossfade_join(const std::vector<float>& head, const std::vector<float>& tail,
                                  size_t fade) {
  fade = std::min({fade, head.size(), tail.size()});
  std::vector<float> out;
  out.reserve(head.size() + tail.size());
  out.insert(out.end(), head.begin(), head.end());
  out.insert(out.end(), tail.begin(), tail.end());
  for (size_t i = 0; i < fade; ++i) {
    const double w = static_cast<double>(i + 1) / static_cast<double>(fade + 1);
    out[head.size() - fade + i] = static_cast<float>(out[head.size() - fade + i] * (1.0 - w));
    out[head.size() + i] = static_cast<float>(out[head.size() + i] * w);
  }
  return out;
}

bool is_silent(const AudioBuffer& buf) {
  for (float s : buf.samples) {
    if (s != 0.0f) return false;
  }
  return true;
}

PerturbationRecord make_record(PerturbKind kind, json params, int dimension, ScoreBand band,
                               uint64_t seed = 0) {
  PerturbationRecord r;
  r.kind = kind;
  r.params = std::move(params);
  r.target_dimension = dimension;
  r.target_score_band = band;
  r.seed = seed;
  return r;
}

}  // namespace

PerturbResult add_white_noise(const AudioBuffer& buf, double snr_db, uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0) {
    return {buf, make_record(PerturbKind::AddWhiteNoise, {{"snr_db", nullptr}},
                             dim::kAudioClarity, {5, 5}, seed)};
  }
  if (!std::isfinite(snr_db)) throw PerturbError("add_white_noise: snr_db must be finite");
  if (buf.empty() || is_silent(buf)) {
    throw PerturbError("add_white_noise: SNR undefined on silent input");
  }

  Rng rng(seed);
  std::vector<double> noise(buf.samples.size());
  double sum_sig = 0.0, sum_noise = 0.0;
  for (size_t i = 0; i < noise.size(); ++i) {
    noise[i] = rng.gaussian();
    sum_sig += static_cast<double>(buf.samples[i]) * buf.samples[i];
    sum_noise += noise[i] * noise[i];
  }
  const double scale = std::sqrt(sum_sig / sum_noise) * std::pow(10.0, -snr_db / 20.0);

  AudioBuffer out = buf;
  for (size_t i = 0; i < out.samples.size(); ++i) {
    out.samples[i] = soft_limit(static_cast<double>(buf.samples[i]) + scale * noise[i]);
  }

  const ScoreBand band = snr_db >= 20.0 ? ScoreBand{4, 4}
                         : snr_db >= 10.0 ? ScoreBand{3, 3}
                                          : ScoreBand{2, 2};
  return {std::move(out),
          make_record(PerturbKind::AddWhiteNoise, {{"snr_db", snr_db}}, dim::kAudioClarity, band,
                      seed)};
}

PerturbResult add_hum(const AudioBuffer& buf, double freq_hz, double level_dbfs) {
  if (level_dbfs == kSilentDb) {
    return {buf, make_record(PerturbKind::AddHum, {{"freq_hz", freq_hz}, {"level_dbfs", nullptr}},
                             dim::kAudioClarity, {5, 5})};
  }
  if (!(freq_hz > 0.0) || freq_hz >= buf.sample_rate / 2.0) {
    throw PerturbError("add_hum: frequency must lie in (0, Nyquist)");
  }
  const double amplitude = std::sqrt(2.0) * std::pow(10.0, level_dbfs / 20.0);
  const double pi = 3.14159265358979323846;
  AudioBuffer out = buf;
  for (size_t i = 0; i < out.samples.size(); ++i) {
    const double hum = amplitude * std::sin(2.0 * pi * freq_hz * i / buf.sample_rate);
    out.samples[i] = soft_limit(static_cast<double>(buf.samples[i]) + hum);
  }
  const ScoreBand band = level_dbfs <= -30.0 ? ScoreBand{4, 4} : ScoreBand{3, 3};
  return {std::move(out),
          make_record(PerturbKind::AddHum, {{"freq_hz", freq_hz}, {"level_dbfs", level_dbfs}},
                      dim::kAudioClarity, band)};
}

PerturbResult hard_clip(const AudioBuffer& buf, double threshold_frac) {
  if (!(threshold_frac > 0.0 && threshold_frac <= 1.0)) {
    throw PerturbError("hard_clip: threshold_frac must be in (0, 1]");
  }
  float peak = 0.0f;
  for (float s : buf.samples) peak = std::max(peak, std::fabs(s));
  const float limit = static_cast<float>(threshold_frac * peak);
  AudioBuffer out = buf;
  for (float& s : out.samples) s = std::clamp(s, -limit, limit);
  const ScoreBand band = threshold_frac <= 0.5   ? ScoreBand{2, 2}
                         : threshold_frac <= 0.8 ? ScoreBand{3, 3}
                                                 : ScoreBand{4, 4};
  return {std::move(out),
          make_record(PerturbKind::HardClip, {{"threshold_frac", threshold_frac}},
                      dim::kAudioClarity, band)};
}

PerturbResult inject_pops(const AudioBuffer& buf, double rate_per_s, double amplitude,
                          uint64_t seed) {
  if (rate_per_s < 0.0) throw PerturbError("inject_pops: rate must be >= 0");
  if (!(amplitude > 0.0 && amplitude <= 1.0)) {
    throw PerturbError("inject_pops: amplitude must be in (0, 1]");
  }
  AudioBuffer out = buf;
  Rng rng(seed);
  if (rate_per_s > 0.0 && !buf.empty()) {
    const double lambda = rate_per_s * buf.duration_s();
    // Knuth's product method; fine for the lambdas synthesis uses.
    const double threshold = std::exp(-lambda);
    size_t count = 0;
    double p = 1.0;
    for (;;) {
      p *= rng.next_double();
      if (p <= threshold) break;
      ++count;
    }
    for (size_t i = 0; i < count; ++i) {
      const size_t pos = static_cast<size_t>(rng.next_below(out.samples.size()));
      out.samples[pos] = static_cast<float>(rng.next_bool() ? amplitude : -amplitude);
    }
  }
  const ScoreBand band = rate_per_s == 0.0 ? ScoreBand{5, 5}
                         : rate_per_s >= 2.0 ? ScoreBand{2, 2}
                                             : ScoreBand{3, 3};
  return {std::move(out),
          make_record(PerturbKind::InjectPops,
                      {{"rate_per_s", rate_per_s}, {"amplitude", amplitude}}, dim::kAudioClarity,
                      band, seed)};
}

PerturbResult time_stretch(const AudioBuffer& buf, double factor) {
  if (!(factor >= 0.25 && factor <= 4.0)) {
    throw PerturbError("time_stretch: factor must be in [0.25, 4]");
  }
  AudioBuffer out;
  out.sample_rate = buf.sample_rate;
  const size_t out_len =
      static_cast<size_t>(std::llround(static_cast<double>(buf.samples.size()) * factor));
  out.samples = linear_warp(buf.samples, out_len);
  ScoreBand band{5, 5};
  if (factor != 1.0) {
    const bool mild = (factor >= 0.8 && factor <= 0.9) || (factor >= 1.1 && factor <= 1.25);
    const bool negligible = factor > 0.9 && factor < 1.1;
    band = negligible ? ScoreBand{4, 4} : mild ? ScoreBand{3, 3} : ScoreBand{2, 2};
  }
  return {std::move(out),
          make_record(PerturbKind::TimeStretch, {{"factor", factor}}, dim::kSpeechRate, band)};
}

PerturbResult piecewise_rate_warp(const AudioBuffer& buf, const std::vector<double>& boundaries_s,
                                  const std::vector<double>& factors) {
  if (factors.size() != boundaries_s.size() + 1) {
    throw PerturbError("piecewise_rate_warp: need len(factors) == len(boundaries)+1");
  }
  const double dur = buf.duration_s();
  double prev = 0.0;
  for (double b : boundaries_s) {
    if (!(b > prev && b < dur)) {
      throw PerturbError("piecewise_rate_warp: boundaries must be strictly increasing in (0, duration)");
    }
    prev = b;
  }
  for (double f : factors) {
    if (!(f >= 0.25 && f <= 4.0)) {
      throw PerturbError("piecewise_rate_warp: factors must be in [0.25, 4]");
    }
  }

  AudioBuffer out;
  out.sample_rate = buf.sample_rate;
  size_t begin = 0;
  for (size_t seg = 0; seg <= boundaries_s.size(); ++seg) {
    const size_t end =
        seg < boundaries_s.size() ? std::min(sample_index(buf, boundaries_s[seg]), buf.samples.size())
                                  : buf.samples.size();
    const std::vector<float> segment(buf.samples.begin() + static_cast<long>(begin),
                                     buf.samples.begin() + static_cast<long>(end));
    const size_t seg_out =
        static_cast<size_t>(std::llround(static_cast<double>(segment.size()) * factors[seg]));
    const std::vector<float> warped = linear_warp(segment, seg_out);
    out.samples.insert(out.samples.end(), warped.begin(), warped.end());
    begin = end;
  }

  double max_jump = 0.0;
  for (size_t i = 1; i < factors.size(); ++i) {
    max_jump = std::max(max_jump, std::fabs(factors[i] - factors[i - 1]));
  }
  bool identity = true;
  for (double f : factors) identity = identity && f == 1.0;
  const ScoreBand band = identity ? ScoreBand{5, 5}
                         : max_jump >= 0.3 ? ScoreBand{2, 3}
                                           : ScoreBand{3, 4};
  return {std::move(out),
          make_record(PerturbKind::PiecewiseRateWarp,
                      {{"boundaries_s", boundaries_s}, {"factors", factors}}, dim::kSpeechRate,
                      band)};
}

PerturbResult pitch_shift(const AudioBuffer& buf, double semitones) {
  if (std::fabs(semitones) > 12.0) {
    throw PerturbError("pitch_shift: semitones must be in [-12, 12]");
  }
  const double ratio = std::pow(2.0, semitones / 12.0);
  const size_t n = buf.samples.size();
  AudioBuffer out;
  out.sample_rate = buf.sample_rate;
  if (n > 0) {
    // Warp to len/ratio (shifts pitch by ratio), then restore duration.
    const size_t mid_len =
        std::max<size_t>(1, static_cast<size_t>(std::llround(static_cast<double>(n) / ratio)));
    const std::vector<float> mid = linear_warp(buf.samples, mid_len);
    out.samples = wsola_stretch(mid, n);
  }
  const double mag = std::fabs(semitones);
  const ScoreBand band = mag == 0.0 ? ScoreBand{5, 5}
                         : mag <= 2.0 ? ScoreBand{3, 3}
                                      : ScoreBand{2, 2};
  return {std::move(out),
          make_record(PerturbKind::PitchShift, {{"semitones", semitones}}, dim::kIntonation, band)};
}

PerturbResult insert_silence(const AudioBuffer& buf, double at_s, double dur_s) {
  if (at_s < 0.0 || at_s > buf.duration_s()) {
    throw PerturbError("insert_silence: at_s outside buffer");
  }
  if (dur_s < 0.0) throw PerturbError("insert_silence: duration must be >= 0");
  const size_t at = std::min(sample_index(buf, at_s), buf.samples.size());
  const size_t pad = static_cast<size_t>(std::llround(dur_s * buf.sample_rate));
  AudioBuffer out;
  out.sample_rate = buf.sample_rate;
  out.samples.reserve(buf.samples.size() + pad);
  out.samples.insert(out.samples.end(), buf.samples.begin(), buf.samples.begin() + static_cast<long>(at));
  out.samples.insert(out.samples.end(), pad, 0.0f);
  out.samples.insert(out.samples.end(), buf.samples.begin() + static_cast<long>(at), buf.samples.end());
  const ScoreBand band = dur_s == 0.0 ? ScoreBand{5, 5}
                         : dur_s <= 0.5 ? ScoreBand{3, 3}
                                        : ScoreBand{2, 2};
  return {std::move(out),
          make_record(PerturbKind::InsertSilence, {{"at_s", at_s}, {"dur_s", dur_s}}, dim::kPauses,
                      band)};
}

PerturbResult remove_segment(const AudioBuffer& buf, double at_s, double dur_s) {
  if (dur_s < 0.0 || at_s < 0.0 || at_s + dur_s > buf.duration_s()) {
    throw PerturbError("remove_segment: span outside buffer");
  }
  const size_t at = std::min(sample_index(buf, at_s), buf.samples.size());
  const size_t cut = std::min(sample_index(buf, at_s + dur_s), buf.samples.size());
  AudioBuffer out;
  out.sample_rate = buf.sample_rate;
  if (cut == at) {
    out.samples = buf.samples;
  } else {
    const std::vector<float> head(buf.samples.begin(), buf.samples.begin() + static_cast<long>(at));
    const std::vector<float> tail(buf.samples.begin() + static_cast<long>(cut), buf.samples.end());
    const size_t fade = static_cast<size_t>(std::llround(kCrossfadeS * buf.sample_rate));
    out.samples = crossfade_join(head, tail, fade);
  }
  const ScoreBand band = dur_s == 0.0 ? ScoreBand{5, 5}
                         : dur_s < 0.15 ? ScoreBand{3, 3}
                                        : ScoreBand{2, 2};
  return {std::move(out),
          make_record(PerturbKind::RemoveSegment, {{"at_s", at_s}, {"dur_s", dur_s}},
                      dim::kPronunciationAccuracy, band)};
}

PerturbResult splice_foreign(const AudioBuffer& buf_a, const AudioBuffer& buf_b, double at_s) {
  if (buf_a.sample_rate != buf_b.sample_rate) {
    throw PerturbError("splice_foreign: sample rate mismatch");
  }
  if (at_s < 0.0 || at_s > buf_a.duration_s()) {
    throw PerturbError("splice_foreign: at_s outside first buffer");
  }
  const size_t at = std::min(sample_index(buf_a, at_s), buf_a.samples.size());
  const std::vector<float> head(buf_a.samples.begin(), buf_a.samples.begin() + static_cast<long>(at));
  AudioBuffer out;
  out.sample_rate = buf_a.sample_rate;
  if (buf_b.empty()) {
    out.samples = head;
  } else {
    const size_t fade = static_cast<size_t>(std::llround(kCrossfadeS * buf_a.sample_rate));
    out.samples = crossfade_join(head, buf_b.samples, fade);
  }
  return {std::move(out),
          make_record(PerturbKind::SpliceForeign, {{"at_s", at_s}}, dim::kSpeakerConsistency,
                      {2, 3})};
}

PerturbResult gain_step(const AudioBuffer& buf, double at_s, double delta_db) {
  if (at_s < 0.0 || at_s > buf.duration_s()) {
    throw PerturbError("gain_step: at_s outside buffer");
  }
  const double gain = std::pow(10.0, delta_db / 20.0);
  const size_t at = std::min(sample_index(buf, at_s), buf.samples.size());
  for (size_t i = at; i < buf.samples.size(); ++i) {
    if (std::fabs(static_cast<double>(buf.samples[i]) * gain) > 1.0) {
      throw PerturbError("gain_step: gain would clip at sample " + std::to_string(i));
    }
  }
  AudioBuffer out = buf;
  for (size_t i = at; i < out.samples.size(); ++i) {
    out.samples[i] = static_cast<float>(out.samples[i] * gain);
  }
  const double mag = std::fabs(delta_db);
  const ScoreBand band = mag == 0.0 ? ScoreBand{5, 5}
                         : mag <= 6.0 ? ScoreBand{3, 3}
                                      : ScoreBand{2, 2};
  return {std::move(out),
          make_record(PerturbKind::GainStep, {{"at_s", at_s}, {"delta_db", delta_db}},
                      dim::kStyleConsistency, band)};
}

PerturbResult apply_step(const AudioBuffer& buf, PerturbKind kind, const json& params,
                         uint64_t seed, const std::filesystem::path& base_dir) {
  auto number_or = [&](const char* key, double fallback) {
    if (!params.contains(key) || params[key].is_null()) return fallback;
    return params[key].get<double>();
  };
  switch (kind) {
    case PerturbKind::AddWhiteNoise:
      return add_white_noise(buf, number_or("snr_db", kInfiniteSnrDb), seed);
    case PerturbKind::AddHum:
      return add_hum(buf, params.at("freq_hz").get<double>(), number_or("level_dbfs", kSilentDb));
    case PerturbKind::HardClip:
      return hard_clip(buf, params.at("threshold_frac").get<double>());
    case PerturbKind::InjectPops:
      return inject_pops(buf, params.at("rate_per_s").get<double>(),
                         params.at("amplitude").get<double>(), seed);
    case PerturbKind::TimeStretch:
      return time_stretch(buf, params.at("factor").get<double>());
    case PerturbKind::PiecewiseRateWarp:
      return piecewise_rate_warp(buf, params.at("boundaries_s").get<std::vector<double>>(),
                                 params.at("factors").get<std::vector<double>>());
    case PerturbKind::PitchShift:
      return pitch_shift(buf, params.at("semitones").get<double>());
    case PerturbKind::InsertSilence:
      return insert_silence(buf, params.at("at_s").get<double>(), params.at("dur_s").get<double>());
    case PerturbKind::RemoveSegment:
      return remove_segment(buf, params.at("at_s").get<double>(), params.at("dur_s").get<double>());
    case PerturbKind::SpliceForeign: {
      const std::filesystem::path foreign =
          base_dir / params.at("foreign_path").get<std::string>();
      AudioBuffer other = read_wav(foreign);
      auto [out, record] = splice_foreign(buf, other, params.at("at_s").get<double>());
      record.params = params;  // keep the foreign reference for replay
      return {std::move(out), std::move(record)};
    }
    case PerturbKind::GainStep:
      return gain_step(buf, params.at("at_s").get<double>(), params.at("delta_db").get<double>());
  }
  throw PerturbError("apply_step: unhandled kind");
}

std::pair<AudioBuffer, std::vector<PerturbationRecord>> apply_plan(
    const AudioBuffer& buf, const PerturbationPlan& plan, const std::filesystem::path& base_dir) {
  AudioBuffer current = buf;
  std::vector<PerturbationRecord> records;
  records.reserve(plan.size());
  for (size_t i = 0; i < plan.size(); ++i) {
    try {
      auto [next, record] = apply_step(current, plan[i].kind, plan[i].params, plan[i].seed, base_dir);
      current = std::move(next);
      records.push_back(std::move(record));
    } catch (const PlanStepError&) {
      throw;
    } catch (const std::exception& e) {
      throw PlanStepError(i, e.what());
    }
  }
  return {std::move(current), std::move(records)};
}

}  // namespace prism
