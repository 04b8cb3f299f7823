// SPDX-License-Identifier: Apache-2.0
/**
 * @file   modem.cpp
 * @brief  Bit/symbol mapping and frame assembly.
 */
#include <birnn/modem.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace birnn {

namespace {

// Gray level for a two-bit axis label (b_hi b_lo).
double qam16_level(unsigned pair) {
  switch (pair) {
  case 0b00: return -3.0;
  case 0b01: return -1.0;
  case 0b11: return 1.0;
  default: return 3.0; // 0b10
  }
}

std::vector<Complex> qpsk_points() {
  const double a = 1.0 / std::sqrt(2.0);
  std::vector<Complex> pts(4);
  for (unsigned label = 0; label < 4; ++label) {
    const double re = (label & 0b10) ? -a : a;
    const double im = (label & 0b01) ? -a : a;
    pts[label] = {re, im};
  }
  return pts;
}

std::vector<Complex> qam16_points() {
  const double scale = 1.0 / std::sqrt(10.0);
  std::vector<Complex> pts(16);
  for (unsigned label = 0; label < 16; ++label)
    pts[label] = {scale * qam16_level(label >> 2), scale * qam16_level(label & 0b11)};
  return pts;
}

} // namespace

std::string to_string(Modulation m) {
  return m == Modulation::QPSK ? "qpsk" : "16qam";
}

Modulation parse_modulation(std::string_view name) {
  if (name == "qpsk" || name == "QPSK")
    return Modulation::QPSK;
  if (name == "16qam" || name == "16QAM" || name == "qam16" || name == "QAM16")
    return Modulation::QAM16;
  throw std::invalid_argument("unknown modulation: " + std::string(name));
}

const ModulationScheme &ModulationScheme::get(Modulation m) {
  static const ModulationScheme qpsk(Modulation::QPSK, 2, qpsk_points());
  static const ModulationScheme qam16(Modulation::QAM16, 4, qam16_points());
  return m == Modulation::QPSK ? qpsk : qam16;
}

CVector map_bits(std::span<const std::uint8_t> bits,
                 const ModulationScheme &scheme) {
  const auto bps = static_cast<std::size_t>(scheme.bits_per_symbol());
  if (bits.size() % bps != 0)
    throw std::invalid_argument("map_bits: bit count " + std::to_string(bits.size()) +
                                " not a multiple of " + std::to_string(bps));
  const auto &pts = scheme.constellation();
  CVector out(static_cast<Eigen::Index>(bits.size() / bps));
  for (Eigen::Index s = 0; s < out.size(); ++s) {
    unsigned label = 0;
    for (std::size_t b = 0; b < bps; ++b)
      label = (label << 1) | (bits[static_cast<std::size_t>(s) * bps + b] & 1u);
    out[s] = pts[label];
  }
  return out;
}

Bits demap_symbols(std::span<const Complex> received,
                   const ModulationScheme &scheme) {
  const auto bps = static_cast<std::size_t>(scheme.bits_per_symbol());
  const auto &pts = scheme.constellation();
  Bits out(received.size() * bps);
  for (std::size_t s = 0; s < received.size(); ++s) {
    unsigned best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (unsigned label = 0; label < pts.size(); ++label) {
      const double d = std::norm(received[s] - pts[label]);
      if (d < best_d) {
        best_d = d;
        best = label;
      }
    }
    for (std::size_t b = 0; b < bps; ++b)
      out[s * bps + b] = static_cast<std::uint8_t>((best >> (bps - 1 - b)) & 1u);
  }
  return out;
}

Bits demap_symbols(const CVector &received, const ModulationScheme &scheme) {
  return demap_symbols(std::span<const Complex>(received.data(), static_cast<std::size_t>(received.size())),
                       scheme);
}

CVector make_pilot_sequence(int k_on, std::uint64_t seed) {
  if (k_on <= 0)
    throw std::invalid_argument("make_pilot_sequence: K_on must be positive");
  Rng rng(seed);
  CVector p(k_on);
  for (int k = 0; k < k_on; ++k)
    p[k] = (rng() & 1u) ? Complex(-1.0, 0.0) : Complex(1.0, 0.0);
  return p;
}

std::vector<int> pilot_positions(int frame_length, int pilot_count) {
  if (frame_length < 1 || pilot_count < 1 || pilot_count > frame_length)
    throw std::invalid_argument("pilot_positions: need 1 <= P <= I");
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(pilot_count));
  if (pilot_count == 1) {
    idx.push_back(0);
    return idx;
  }
  for (int q = 0; q < pilot_count; ++q) {
    const double pos = static_cast<double>(q) * (frame_length - 1) / (pilot_count - 1);
    idx.push_back(static_cast<int>(std::lround(pos)));
  }
  return idx;
}

PilotConfig PilotConfig::make(int k_on, int frame_length, int pilot_count,
                              std::uint64_t pilot_seed) {
  PilotConfig cfg;
  cfg.k_on = k_on;
  cfg.frame_length = frame_length;
  cfg.pilot_indices = pilot_positions(frame_length, pilot_count);
  cfg.pilot_values = make_pilot_sequence(k_on, pilot_seed);
  cfg.validate();
  return cfg;
}

bool PilotConfig::is_pilot(int symbol) const {
  return std::binary_search(pilot_indices.begin(), pilot_indices.end(), symbol);
}

std::vector<int> PilotConfig::data_indices() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(data_count()));
  for (int i = 0; i < frame_length; ++i)
    if (!is_pilot(i))
      out.push_back(i);
  return out;
}

void PilotConfig::validate() const {
  if (k_on <= 0 || frame_length <= 0)
    throw std::invalid_argument("PilotConfig: K_on and I must be positive");
  if (pilot_indices.empty() || pilot_indices.front() != 0)
    throw std::invalid_argument("PilotConfig: symbol 0 must be a pilot");
  for (std::size_t q = 1; q < pilot_indices.size(); ++q)
    if (pilot_indices[q] <= pilot_indices[q - 1])
      throw std::invalid_argument("PilotConfig: pilot indices must be strictly increasing");
  if (pilot_indices.back() >= frame_length)
    throw std::invalid_argument("PilotConfig: pilot index out of range");
  if (pilot_values.size() != k_on)
    throw std::invalid_argument("PilotConfig: pilot vector length must equal K_on");
  for (Eigen::Index k = 0; k < pilot_values.size(); ++k)
    if (std::abs(pilot_values[k]) == 0.0)
      throw std::invalid_argument("PilotConfig: zero pilot value");
}

std::size_t payload_length(const PilotConfig &cfg, const ModulationScheme &scheme) {
  return static_cast<std::size_t>(cfg.data_count()) * static_cast<std::size_t>(cfg.k_on) *
         static_cast<std::size_t>(scheme.bits_per_symbol());
}

Frame build_frame(std::span<const std::uint8_t> payload_bits, const PilotConfig &cfg,
                  const ModulationScheme &scheme) {
  const std::size_t expected = payload_length(cfg, scheme);
  if (payload_bits.size() != expected)
    throw std::invalid_argument("build_frame: payload has " + std::to_string(payload_bits.size()) +
                                " bits, frame carries " + std::to_string(expected));
  Frame f;
  f.symbols.resize(cfg.k_on, cfg.frame_length);
  f.roles.assign(static_cast<std::size_t>(cfg.frame_length), SymbolRole::Data);
  f.payload_bits.assign(payload_bits.begin(), payload_bits.end());

  const CVector mapped = map_bits(payload_bits, scheme);
  Eigen::Index next = 0;
  for (int i = 0; i < cfg.frame_length; ++i) {
    if (cfg.is_pilot(i)) {
      f.symbols.col(i) = cfg.pilot_values;
      f.roles[static_cast<std::size_t>(i)] = SymbolRole::Pilot;
    } else {
      f.symbols.col(i) = mapped.segment(next, cfg.k_on);
      next += cfg.k_on;
    }
  }
  return f;
}

CVector extract_data(const CMatrix &grid, const PilotConfig &cfg) {
  if (grid.rows() != cfg.k_on || grid.cols() != cfg.frame_length)
    throw std::invalid_argument("extract_data: grid shape does not match the pilot config");
  CVector out(static_cast<Eigen::Index>(cfg.data_count()) * cfg.k_on);
  Eigen::Index next = 0;
  for (int i : cfg.data_indices()) {
    out.segment(next, cfg.k_on) = grid.col(i);
    next += cfg.k_on;
  }
  return out;
}

Bits random_bits(std::size_t count, Rng &rng) {
  Bits out(count);
  std::size_t i = 0;
  while (i < count) {
    std::uint64_t word = rng();
    for (int b = 0; b < 64 && i < count; ++b, ++i) {
      out[i] = static_cast<std::uint8_t>(word & 1u);
      word >>= 1;
    }
  }
  return out;
}

} // namespace birnn
