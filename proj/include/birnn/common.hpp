// SPDX-License-Identifier: Apache-2.0
/**
 * @file   common.hpp
 * @brief  Shared numeric aliases and seeded random streams.
 */
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace birnn {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One bit per element, values 0 or 1.
using Bits = std::vector<std::uint8_t>;

using Rng = std::mt19937_64;

/**
 * @brief Independent generator for a (seed, stream...) tuple.
 *
 * Every Monte-Carlo unit (frame, tap, SNR point) derives its own stream
 * from the run seed, so results never depend on scheduling order.
 */
inline Rng make_stream(std::initializer_list<std::uint64_t> key) {
  // splitmix64 finalizer folded over the key words
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t k : key)
    h = mix(h ^ mix(k));
  return Rng(h);
}

/// Circular complex Gaussian with E|z|^2 = variance.
inline Complex complex_gaussian(Rng &rng, double variance) {
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

} // namespace birnn
