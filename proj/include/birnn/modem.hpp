// SPDX-License-Identifier: Apache-2.0
/**
 * @file   modem.hpp
 * @brief  Gray-mapped QPSK/16QAM, pilot sequences and OFDM frame assembly.
 *
 * Constellation labels are read MSB first. For QPSK the first bit selects
 * the sign of the in-phase axis and the second the quadrature axis
 * (0 -> +, 1 -> -). For 16QAM each pair of bits selects one axis level
 * with the 802.11 Gray table 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
 * (first pair in-phase, second pair quadrature), scaled by 1/sqrt(10).
 */
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <birnn/common.hpp>

namespace birnn {

enum class Modulation { QPSK, QAM16 };

std::string to_string(Modulation m);
Modulation parse_modulation(std::string_view name);

class ModulationScheme {
public:
  static const ModulationScheme &get(Modulation m);

  Modulation kind() const { return kind_; }
  int bits_per_symbol() const { return bits_per_symbol_; }
  /// Point for label value `label` (0 .. 2^bits - 1), unit average power.
  const std::vector<Complex> &constellation() const { return points_; }

private:
  ModulationScheme(Modulation kind, int bits, std::vector<Complex> points)
    : kind_(kind), bits_per_symbol_(bits), points_(std::move(points)) {}

  Modulation kind_;
  int bits_per_symbol_;
  std::vector<Complex> points_;
};

CVector map_bits(std::span<const std::uint8_t> bits,
                 const ModulationScheme &scheme);

/// Hard nearest-point decision. Ties resolve to the lowest label.
Bits demap_symbols(std::span<const Complex> received,
                   const ModulationScheme &scheme);
Bits demap_symbols(const CVector &received, const ModulationScheme &scheme);

/// Deterministic unit-modulus BPSK pilot values.
CVector make_pilot_sequence(int k_on, std::uint64_t seed);

/// Pilot symbol positions: 0, then round(q (I-1)/(P-1)) for q = 1..P-1.
std::vector<int> pilot_positions(int frame_length, int pilot_count);

inline constexpr std::uint64_t kDefaultPilotSeed = 0x5eed'b1a5ULL;

struct PilotConfig {
  int k_on = 0;
  int frame_length = 0;
  std::vector<int> pilot_indices;
  CVector pilot_values;

  static PilotConfig make(int k_on, int frame_length, int pilot_count,
                          std::uint64_t pilot_seed = kDefaultPilotSeed);

  int pilot_count() const { return static_cast<int>(pilot_indices.size()); }
  int data_count() const { return frame_length - pilot_count(); }
  bool is_pilot(int symbol) const;
  /// Symbol indices carrying data, ascending.
  std::vector<int> data_indices() const;
  /// Throws std::invalid_argument if any invariant is broken.
  void validate() const;
};

enum class SymbolRole : std::uint8_t { Pilot, Data };

struct Frame {
  CMatrix symbols; ///< K_on x I
  std::vector<SymbolRole> roles;
  Bits payload_bits;
};

std::size_t payload_length(const PilotConfig &cfg,
                           const ModulationScheme &scheme);

/// Data columns are filled column-major (subcarrier fastest).
Frame build_frame(std::span<const std::uint8_t> payload_bits,
                  const PilotConfig &cfg, const ModulationScheme &scheme);

/// Data-symbol entries of a K_on x I grid in the same column-major order.
CVector extract_data(const CMatrix &grid, const PilotConfig &cfg);

Bits random_bits(std::size_t count, Rng &rng);

} // namespace birnn
