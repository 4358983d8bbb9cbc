// SPDX-License-Identifier: Apache-2.0
#ifndef TAILTAG_COMMON_HPP_
#define TAILTAG_COMMON_HPP_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tailtag {

using LabelId = std::int32_t;

/// Invalid or inconsistent configuration. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (exit code 3).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values during training or evaluation (exit code 4).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// FNV-1a, 64 bit. Used for vocabulary hashes and report fingerprints.
class Fnv1a {
 public:
  void update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001b3ULL;
    }
  }
  // Separator so that ("ab","c") and ("a","bc") hash differently.
  void update_field(std::string_view bytes) {
    update(bytes);
    update(std::string_view("\x1f", 1));
  }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string to_hex(std::uint64_t value);

// The standard distributions are implementation-defined, so sampling goes
// through these helpers to keep seeded runs identical across toolchains.
using Rng = std::mt19937_64;

/// Uniform integer in [0, n). n must be > 0.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

/// Uniform real in [0, 1) with 53 bits of resolution.
double uniform_unit(Rng& rng);

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

/// Fixed-point rendering with the given number of decimals ("%.*f").
std::string format_fixed(double value, int decimals);

}  // namespace tailtag

#endif  // TAILTAG_COMMON_HPP_
