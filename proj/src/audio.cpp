#include "prism/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "prism/util.hpp"

namespace prism {

namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

uint32_t read_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
  out.push_back((v >> 16) & 0xff);
  out.push_back((v >> 24) & 0xff);
}

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
}

}  // namespace

AudioBuffer parse_wav(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw AudioError("not a RIFF/WAVE file");
  }

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  const uint8_t* data = nullptr;
  uint32_t data_size = 0;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* tag = reinterpret_cast<const char*>(bytes.data() + pos);
    const uint32_t size = read_u32(bytes.data() + pos + 4);
    pos += 8;
    if (pos + size > bytes.size()) throw AudioError("truncated chunk in WAV file");
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (size < 16) throw AudioError("truncated fmt chunk");
      format = read_u16(bytes.data() + pos);
      channels = read_u16(bytes.data() + pos + 2);
      rate = read_u32(bytes.data() + pos + 4);
      bits = read_u16(bytes.data() + pos + 14);
      if (format == kFormatExtensible && size >= 40) {
        // Sub-format GUID starts with the basic format tag.
        format = read_u16(bytes.data() + pos + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data = bytes.data() + pos;
      data_size = size;
    }
    pos += size + (size & 1);  // chunks are word-aligned
  }

  if (!have_fmt) throw AudioError("missing fmt chunk");
  if (data == nullptr) throw AudioError("missing data chunk");
  if (data_size == 0) throw AudioError("zero-length audio payload");
  if (channels < 1 || channels > 2) {
    throw AudioError("unsupported channel count: " + std::to_string(channels));
  }
  if (rate == 0) throw AudioError("invalid sample rate 0");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32) {
    throw AudioError("unsupported codec: format=" + std::to_string(format) +
                     " bits=" + std::to_string(bits));
  }

  const size_t bytes_per_sample = bits / 8;
  const size_t frame_size = bytes_per_sample * channels;
  const size_t frames = data_size / frame_size;
  if (frames == 0) throw AudioError("zero-length audio payload");

  AudioBuffer buf;
  buf.sample_rate = static_cast<int>(rate);
  buf.samples.resize(frames);
  for (size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (uint16_t c = 0; c < channels; ++c) {
      const uint8_t* p = data + i * frame_size + c * bytes_per_sample;
      if (pcm16) {
        int16_t v;
        std::memcpy(&v, p, 2);
        acc += static_cast<double>(v) / 32768.0;
      } else {
        float v;
        std::memcpy(&v, p, 4);
        acc += std::clamp(v, -1.0f, 1.0f);
      }
    }
    buf.samples[i] = static_cast<float>(acc / channels);
  }
  return buf;
}

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AudioError("cannot open audio file: " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (bytes.size() < 44) throw AudioError("truncated WAV header: " + path.string());
  return parse_wav(bytes);
}

std::vector<uint8_t> encode_wav(const AudioBuffer& buffer) {
  for (float s : buffer.samples) {
    if (!(s >= -1.0f && s <= 1.0f)) {
      throw AudioError("SampleOutOfRange: sample " + std::to_string(s) +
                       " outside [-1, 1]; refusing to clip");
    }
  }
  const uint32_t n = static_cast<uint32_t>(buffer.samples.size());
  const uint32_t data_size = n * 2;

  std::vector<uint8_t> out;
  out.reserve(44 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<uint32_t>(buffer.sample_rate));
  put_u32(out, static_cast<uint32_t>(buffer.sample_rate) * 2);  // byte rate
  put_u16(out, 2);                                              // block align
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_size);
  for (float s : buffer.samples) {
    // Scale by 2^15 and clamp the single overflow case x = +1.0.
    long v = std::lround(static_cast<double>(s) * 32768.0);
    if (v > 32767) v = 32767;
    if (v < -32768) v = -32768;
    put_u16(out, static_cast<uint16_t>(static_cast<int16_t>(v)));
  }
  return out;
}

void write_wav(const AudioBuffer& buffer, const std::filesystem::path& path) {
  if (buffer.sample_rate <= 0) throw AudioError("invalid sample rate");
  const std::vector<uint8_t> bytes = encode_wav(buffer);
  atomic_write_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

double rms_db(const AudioBuffer& buffer) {
  if (buffer.empty()) throw AudioError("rms_db on empty buffer");
  double acc = 0.0;
  for (float s : buffer.samples) acc += static_cast<double>(s) * s;
  if (acc == 0.0) return kSilentDb;
  return 10.0 * std::log10(acc / static_cast<double>(buffer.samples.size()));
}

double measure_snr(const AudioBuffer& clean, const AudioBuffer& noisy) {
  if (clean.samples.size() != noisy.samples.size() || clean.sample_rate != noisy.sample_rate) {
    throw AudioError("measure_snr: length or rate mismatch");
  }
  if (clean.empty()) throw AudioError("measure_snr on empty buffers");
  double sig = 0.0, noise = 0.0;
  for (size_t i = 0; i < clean.samples.size(); ++i) {
    const double c = clean.samples[i];
    const double d = static_cast<double>(noisy.samples[i]) - c;
    sig += c * c;
    noise += d * d;
  }
  if (sig == 0.0) throw AudioError("measure_snr: clean signal is silent");
  if (noise == 0.0) return kInfiniteSnrDb;
  return 10.0 * std::log10(sig / noise);
}

AudioBuffer resample(const AudioBuffer& buffer, int new_rate) {
  if (new_rate <= 0) throw AudioError("resample: target rate must be positive");
  if (new_rate == buffer.sample_rate || buffer.empty()) {
    AudioBuffer out = buffer;
    out.sample_rate = new_rate;
    return out;
  }
  const size_t old_len = buffer.samples.size();
  const size_t new_len = static_cast<size_t>(
      std::llround(static_cast<double>(old_len) * new_rate / buffer.sample_rate));
  AudioBuffer out;
  out.sample_rate = new_rate;
  out.samples.resize(new_len);
  const double step = static_cast<double>(buffer.sample_rate) / new_rate;
  for (size_t i = 0; i < new_len; ++i) {
    const double pos = i * step;
    const size_t i0 = std::min(static_cast<size_t>(pos), old_len - 1);
    const size_t i1 = std::min(i0 + 1, old_len - 1);
    const double frac = pos - static_cast<double>(i0);
    out.samples[i] = static_cast<float>((1.0 - frac) * buffer.samples[i0] +
                                        frac * buffer.samples[i1]);
  }
  return out;
}

}  // namespace prism
