#pragma once

#include <cstdint>
#include <cmath>
#include <string_view>
#include <vector>

namespace apu {

/// Counter-based pseudo-random generator built on the splitmix64 finalizer.
/// Every draw is a pure function of (key, counter), so streams can be forked
/// into independent substreams keyed by trial index or by a purpose tag
/// without sharing state.  All sampling in the library flows through this
/// class to keep runs bit-reproducible for a fixed seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ kSalt)) {}

  /// Independent substream for a numeric index (e.g. trial number).
  Rng fork(std::uint64_t n) const {
    Rng r(*this);
    r.key_ = mix(key_ ^ mix(n + kSalt));
    r.counter_ = 0;
    r.have_spare_ = false;
    return r;
  }

  /// Independent substream for a named purpose (e.g. "shuffle", "init").
  Rng fork(std::string_view purpose) const { return fork(fnv1a(purpose)); }

  std::uint64_t next_u64() { return mix(key_ + kGolden * ++counter_); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1]; safe as a log() argument.
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, bound) via rejection; bound must be > 0.
  std::uint64_t uniform_int(std::uint64_t bound) {
    const std::uint64_t limit = bound * ((~std::uint64_t{0}) / bound);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % bound;
  }

  /// Standard normal deviate (Box-Muller, cached spare).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * kPi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kSalt = 0xA0761D6478BD642FULL;
  static constexpr double kPi = 3.14159265358979323846;

  static std::uint64_t mix(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001B3ULL;
    }
    return h;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace apu
