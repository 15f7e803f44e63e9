#pragma once

#include <filesystem>
#include <limits>
#include <vector>

#include "prism/errors.hpp"

namespace prism {

// Mono PCM substrate for the perturbation pipeline. Samples live in
// [-1, 1]; quantization happens only at the file boundary.
struct AudioBuffer {
  std::vector<float> samples;
  int sample_rate = 16000;

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
  bool empty() const { return samples.empty(); }
  bool operator==(const AudioBuffer&) const = default;
};

struct AudioError : ValidationError {
  explicit AudioError(const std::string& what) : ValidationError(what) {}
};

// dB sentinels: silence measures -inf, identical signals have +inf SNR.
inline constexpr double kSilentDb = -std::numeric_limits<double>::infinity();
inline constexpr double kInfiniteSnrDb = std::numeric_limits<double>::infinity();

// RIFF/WAVE reader. Accepts PCM16 and float32, 1-2 channels; stereo is
// downmixed to mono by channel averaging. 16-bit samples scale by 1/32768.
AudioBuffer read_wav(const std::filesystem::path& path);
AudioBuffer parse_wav(const std::vector<uint8_t>& bytes);

// PCM16 mono writer. Rejects samples outside [-1, 1] rather than clipping.
// Round-trip error is bounded by one quantization step (2^-15).
void write_wav(const AudioBuffer& buffer, const std::filesystem::path& path);
std::vector<uint8_t> encode_wav(const AudioBuffer& buffer);

// 20*log10(rms), kSilentDb for all-zero input. Empty buffers throw.
double rms_db(const AudioBuffer& buffer);

// 10*log10(sum(clean^2) / sum((noisy-clean)^2)). Requires equal length
// and rate and a non-silent clean signal; identical signals return
// kInfiniteSnrDb.
double measure_snr(const AudioBuffer& clean, const AudioBuffer& noisy);

// Linear-interpolation resampler; output length = round(len*new/old),
// duration preserved within one sample period.
AudioBuffer resample(const AudioBuffer& buffer, int new_rate);

}  // namespace prism
