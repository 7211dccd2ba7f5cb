#pragma once

#include "drdcbf/types.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace drdcbf {

/// Axis-aligned sampling box.
struct Box {
  Vec lower;
  Vec upper;

  int dim() const { return static_cast<int>(lower.size()); }
  /// Maps a point of the unit cube into the box.
  Vec map(const Vec& unit) const {
    return lower + (upper - lower).cwiseProduct(unit);
  }
};

/// Radical inverse of `index` in base `base`.
inline double radical_inverse(std::uint64_t index, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base);
  double f = inv;
  double out = 0.0;
  while (index > 0) {
    out += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return out;
}

/// Halton point `index` (1-based recommended) in [0,1)^dim.
inline Vec halton_point(std::uint64_t index, int dim) {
  static constexpr std::uint64_t kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                              31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
  if (dim > static_cast<int>(std::size(kPrimes))) {
    throw std::invalid_argument("halton_point: dimension too large");
  }
  Vec p(dim);
  for (int d = 0; d < dim; ++d) p[d] = radical_inverse(index, kPrimes[d]);
  return p;
}

/// N Halton points mapped into `box`, skipping the origin of the sequence.
inline std::vector<Vec> halton_samples(const Box& box, int n) {
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out.push_back(box.map(halton_point(static_cast<std::uint64_t>(i) + 1, box.dim())));
  }
  return out;
}

/// N seeded uniform points in `box`.
inline std::vector<Vec> uniform_samples(const Box& box, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Vec u(box.dim());
    for (int d = 0; d < box.dim(); ++d) u[d] = unit(rng);
    out.push_back(box.map(u));
  }
  return out;
}

}  // namespace drdcbf
