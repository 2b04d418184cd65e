#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spicecheck {

// Single error type for all operation failures. `code` is a stable
// machine-readable id (e.g. "ragged-row", "node-not-found") so callers and
// tests can branch without string-matching messages.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

// Deterministic RNG with explicit int/real derivations. std::mt19937_64 output
// is portable but the standard distributions are not, so both are hand-rolled.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed ^ 0x6a09e667f3bcc908ULL)) {}

  std::uint64_t next() {
    state_ = splitmix64(state_ + 0x9e3779b97f4a7c15ULL);
    return state_;
  }

  // Uniform in [0, n). Modulo bias is irrelevant for the small ranges used here.
  std::uint64_t next_below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

  double next_real() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[next_below(i)]);
    }
  }

 private:
  std::uint64_t state_;
};

// Counter-based unit gaussian: independent of evaluation order, so parallel
// generation stays deterministic.
double hashed_gaussian(std::uint64_t key);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
std::vector<std::string> split_ws(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool is_number(std::string_view s);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace detail
}  // namespace spicecheck
