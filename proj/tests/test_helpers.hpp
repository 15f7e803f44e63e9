#pragma once

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "prism/audio.hpp"
#include "prism/util.hpp"

namespace prism::testing {

inline AudioBuffer make_tone(double freq_hz, double dur_s, int rate, double amplitude) {
  AudioBuffer buf;
  buf.sample_rate = rate;
  const size_t n = static_cast<size_t>(std::llround(dur_s * rate));
  buf.samples.resize(n);
  const double two_pi = 6.283185307179586476925286766559;
  for (size_t i = 0; i < n; ++i) {
    buf.samples[i] = static_cast<float>(amplitude * std::sin(two_pi * freq_hz * i / rate));
  }
  return buf;
}

inline AudioBuffer make_silence(double dur_s, int rate) {
  AudioBuffer buf;
  buf.sample_rate = rate;
  buf.samples.assign(static_cast<size_t>(std::llround(dur_s * rate)), 0.0f);
  return buf;
}

// AR(1)-smoothed noise: broadband but low-pass tilted, a usable stand-in
// for speech energy distribution in SNR tests.
inline AudioBuffer make_speechlike(uint64_t seed, double dur_s, int rate, double peak = 0.5) {
  AudioBuffer buf;
  buf.sample_rate = rate;
  const size_t n = static_cast<size_t>(std::llround(dur_s * rate));
  buf.samples.resize(n);
  Rng rng(seed);
  double state = 0.0, max_abs = 1e-9;
  std::vector<double> raw(n);
  for (size_t i = 0; i < n; ++i) {
    state = 0.97 * state + rng.gaussian();
    raw[i] = state;
    max_abs = std::max(max_abs, std::fabs(state));
  }
  for (size_t i = 0; i < n; ++i) buf.samples[i] = static_cast<float>(raw[i] / max_abs * peak);
  return buf;
}

// Goertzel scan over [f_lo, f_hi] at step_hz; independent oracle for
// "where did the spectral peak land".
inline double dominant_frequency(const AudioBuffer& buf, double f_lo, double f_hi,
                                 double step_hz = 1.0) {
  const double two_pi = 6.283185307179586476925286766559;
  double best_f = f_lo, best_power = -1.0;
  for (double f = f_lo; f <= f_hi; f += step_hz) {
    const double w = two_pi * f / buf.sample_rate;
    const double coeff = 2.0 * std::cos(w);
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (float x : buf.samples) {
      s0 = x + coeff * s1 - s2;
      s2 = s1;
      s1 = s0;
    }
    const double power = s1 * s1 + s2 * s2 - coeff * s1 * s2;
    if (power > best_power) {
      best_power = power;
      best_f = f;
    }
  }
  return best_f;
}

inline double correlation(const std::vector<float>& a, const std::vector<float>& b) {
  const size_t n = std::min(a.size(), b.size());
  double dot = 0.0, aa = 0.0, bb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    aa += static_cast<double>(a[i]) * a[i];
    bb += static_cast<double>(b[i]) * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return dot / std::sqrt(aa * bb);
}

// Unique scratch directory per test run.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("prism_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter.fetch_add(1)));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace prism::testing
