#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace prism {

// Deterministic random source used everywhere randomness is needed.
// splitmix64 core with hand-rolled distributions, so streams are
// bit-stable across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64();

  // Uniform in [0, bound) without modulo bias.
  uint64_t next_below(uint64_t bound);

  // Uniform in [0, 1).
  double next_double();

  // Uniform in [lo, hi).
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller.
  double gaussian();

  bool next_bool() { return (next_u64() >> 63) != 0; }

  // Derive an independent stream for a subtask; stable under the
  // parent seed regardless of draw order elsewhere.
  static uint64_t derive_seed(uint64_t seed, uint64_t stream);

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// In-place Fisher-Yates driven by Rng (std::shuffle is not
// reproducible across standard libraries).
template <typename T>
void deterministic_shuffle(std::vector<T>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.next_below(i));
    std::swap(v[i - 1], v[j]);
  }
}

// FNV-1a; used where a seed must be derived from a string key.
uint64_t fnv1a64(std::string_view data);

std::string sha256_hex(std::string_view data);
std::string sha256_hex_file(const std::filesystem::path& path);

std::string base64_encode(std::span<const uint8_t> data);

std::string read_text_file(const std::filesystem::path& path);

// Write-temp-then-rename so readers never observe partial files.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split_lines(std::string_view text);

// Fixed-point formatting, always with `digits` decimals ("4.860").
std::string format_fixed(double value, int digits);

}  // namespace prism
