#pragma once

#include "kgalign/common.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace kgalign {

/// Exponent list for concatenated power-mean pooling. +/-infinity select max
/// and min; the default [1, min, max] matches the usual pooling trio.
struct PowerSpec {
  std::vector<double> powers;

  static constexpr double kMin = -std::numeric_limits<double>::infinity();
  static constexpr double kMax = std::numeric_limits<double>::infinity();

  static PowerSpec standard() { return {{1.0, kMin, kMax}}; }

  int count() const { return static_cast<int>(powers.size()); }

  /// "1,min,max" <-> [1, -inf, +inf]; also accepts "-inf"/"inf" and decimals.
  static PowerSpec parse(const std::string& text);
  std::string to_string() const;

  friend bool operator==(const PowerSpec&, const PowerSpec&) = default;
};

namespace detail {

template <typename Derived>
double power_mean_scalar(const Eigen::MatrixBase<Derived>& x, double p) {
  const Eigen::Index l = x.size();
  if (l == 0) throw NumericError("power_mean: empty input");
  if (p == PowerSpec::kMax) return x.maxCoeff();
  if (p == PowerSpec::kMin) return x.minCoeff();
  if (p == 0.0) throw NumericError("power_mean: p = 0 is not defined");
  const double rp = std::round(p);
  const bool integral = rp == p && std::abs(p) < 1e15;
  if (!integral) {
    for (Eigen::Index i = 0; i < l; ++i) {
      if (x[i] < 0.0)
        throw NumericError("power_mean: negative component " + std::to_string(x[i]) +
                           " with non-integer power " + std::to_string(p));
    }
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < l; ++i) acc += std::pow(x[i], p);
  const double m = acc / static_cast<double>(l);
  if (integral && static_cast<long long>(rp) % 2 != 0 && m < 0.0)
    return -std::pow(-m, 1.0 / p);  // signed root keeps odd powers total
  return std::pow(m, 1.0 / p);
}

}  // namespace detail

/// Coordinate-wise power mean of a set of vectors (rows of xs):
/// ((sum_i xs(i,j)^p) / l)^(1/p) per column j. p = +/-inf give max/min.
template <typename Derived>
Vector power_mean(const Eigen::MatrixBase<Derived>& xs, double p) {
  if (xs.rows() == 0) throw NumericError("power_mean: empty input");
  Vector out(xs.cols());
  for (Eigen::Index j = 0; j < xs.cols(); ++j)
    out[j] = detail::power_mean_scalar(xs.col(j), p);
  return out;
}

/// Concatenation of power means for each exponent in spec, in order.
template <typename Derived>
Vector power_mean_concat(const Eigen::MatrixBase<Derived>& xs, const PowerSpec& spec) {
  const Eigen::Index d = xs.cols();
  Vector out(d * spec.count());
  for (int k = 0; k < spec.count(); ++k)
    out.segment(k * d, d) = power_mean(xs, spec.powers[k]);
  return out;
}

}  // namespace kgalign
