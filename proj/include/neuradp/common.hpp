#pragma once

/// \file
/// Shared vocabulary: identifiers, error types, hashing and seed derivation.

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace neuradp {

/// Compact location index into a RoadNetwork (0..num_locations-1).
using Location = std::int32_t;
using RequestId = std::int64_t;
using VehicleId = std::int32_t;

/// Seconds of simulated wall time.
using Seconds = double;

inline constexpr Location kNoLocation = -1;

/// A caller broke a documented precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The simulation reached a state that correct feasibility checks make impossible.
class IntegrityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Numerical failure inside the value network (NaN/Inf).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration or input file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 64-bit FNV-1a accumulator, used for state fingerprints in determinism checks.
class Hasher {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  template <typename T>
  void add(const T& value) {
    static_assert(std::is_trivially_copyable_v<T>);
    bytes(&value, sizeof(T));
  }
  template <typename T>
  void add_range(std::span<const T> values) {
    add(values.size());
    for (const auto& v : values) add(v);
  }
  [[nodiscard]] std::uint64_t digest() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

/// Derives an independent child seed from a root seed and a path of labels/indices.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view label,
                                 std::uint64_t index = 0) {
  Hasher h;
  h.add(root);
  h.bytes(label.data(), label.size());
  h.add(index);
  // splitmix64 finaliser
  std::uint64_t z = h.digest() + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

}  // namespace neuradp
