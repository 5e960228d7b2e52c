#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "e2rank/error.hpp"

namespace e2rank {

// Dense, finite, non-empty vector of doubles.
class Vector {
 public:
  Vector() = default;

  explicit Vector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw InvalidArgument("Vector: dimension must be positive");
    for (double v : values_) {
      if (!std::isfinite(v)) throw InvalidArgument("Vector: non-finite component");
    }
  }

  Vector(std::initializer_list<double> values) : Vector(std::vector<double>(values)) {}

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  operator std::span<const double>() const noexcept { return values_; }  // NOLINT

  bool operator==(const Vector&) const = default;

 private:
  std::vector<double> values_;
};

inline void require_same_dim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double checked_norm(std::span<const double> a) {
  const double n = norm(a);
  if (!(n > 0.0)) throw ZeroNormError("cosine of a zero-norm vector");
  return n;
}

// a / |a|. cosine(a, b) == dot(unit(a), unit(b)) bit-for-bit.
inline std::vector<double> unit(std::span<const double> a) {
  const double n = checked_norm(a);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] / n;
  return out;
}

// Each side is normalized before the products are formed, so the result is
// exactly symmetric in its arguments.
inline double cosine(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a, b);
  const double na = checked_norm(a);
  const double nb = checked_norm(b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] / na) * (b[i] / nb);
  return sum;
}

// d cos(a, b) / d a, written into grad (accumulated with weight).
inline void accumulate_cosine_grad(std::span<const double> a, std::span<const double> b,
                                   double weight, std::span<double> grad) {
  const double na = checked_norm(a);
  const double nb = checked_norm(b);
  const double s = cosine(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    grad[i] += weight * (b[i] / nb - s * a[i] / na) / na;
  }
}

}  // namespace e2rank
