#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace kgalign {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Eigen::Index;

enum class Side { Source = 0, Target = 1 };

inline const char* side_name(Side s) { return s == Side::Source ? "source" : "target"; }

/// Error categories map one-to-one onto the CLI exit codes:
/// UsageError -> 1, DataError -> 2, NumericError -> 3.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Stable FNV-1a based seed derivation, so every stage/round draws from its
/// own stream no matter what ran before it.
inline std::uint64_t derive_seed(std::uint64_t master, const std::string& tag, std::uint64_t salt = 0) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  mix(master);
  for (unsigned char c : tag) {
    h ^= c;
    h *= 1099511628211ull;
  }
  mix(salt);
  return h;
}

}  // namespace kgalign
