// SPDX-License-Identifier: Apache-2.0
/**
 * @file   channel.hpp
 * @brief  Doubly-selective Rayleigh channel synthesis and the AWGN link.
 *
 * Each tap is a sum-of-sinusoids Jakes process. The channel is held
 * constant over one OFDM symbol; the frequency response of symbol i is
 * the partial DFT of the tap vector at i over the active bins.
 */
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <birnn/common.hpp>
#include <birnn/modem.hpp>

namespace birnn {

struct Tap {
  int delay_samples = 0;
  double power = 0.0; ///< linear
};

struct ChannelProfile {
  std::vector<Tap> taps;
  double doppler_hz = 0.0;
  double symbol_duration_s = 8e-6;
  int fft_size = 64;
  std::vector<int> active_bins; ///< FFT bin of each active subcarrier

  int k_on() const { return static_cast<int>(active_bins.size()); }
  /// Channel length: max delay + 1.
  int length() const;
  double normalized_doppler() const { return doppler_hz * symbol_duration_s; }
  void validate() const;

  /// 802.11p numerology: 64-point FFT, 8 us symbols, 52 active bins.
  static ChannelProfile vehicular_default(double doppler_hz);
  static ChannelProfile single_tap(double doppler_hz, int k_on = 52, int fft_size = 64);
  /// Exponentially decaying PDP over delays 0..L-1, decay in dB per sample.
  static ChannelProfile exponential(int length, double decay_db_per_sample, double doppler_hz);

  static ChannelProfile from_json(std::string_view text);
  static ChannelProfile load(const std::filesystem::path &path);
  std::string to_json() const;
};

/// Symmetric active set around DC (DC excluded): -K/2..-1, 1..K/2 as FFT bins.
std::vector<int> centered_active_bins(int fft_size, int k_on);

/// Rows of the FFT matrix at `bins`, first `length` columns:
/// F[k,l] = exp(-j 2 pi bins[k] l / fft_size).
CMatrix partial_dft(const std::vector<int> &bins, int fft_size, int length);

/// One tap's fading process; evaluable at any symbol index.
class FadingProcess {
public:
  /// `sinusoids` >= 32. The arrival-angle grid is offset by a random
  /// fraction in [1/8, 3/8] of its spacing, which keeps mirrored angles off
  /// the grid so no two sinusoids share a Doppler frequency.
  FadingProcess(double power, double normalized_doppler, int sinusoids, Rng &rng);

  Complex at(double symbol_index) const;

private:
  double amplitude_;
  std::vector<double> omega_; ///< radians per symbol
  std::vector<double> phase_;
};

struct ChannelRealization {
  CMatrix H;      ///< K_on x I frequency response
  CMatrix taps_t; ///< L x I tap gains
};

inline constexpr int kMinSinusoids = 32;

/// Multi-tap process for a profile; tap l uses 32 + l sinusoids.
class ChannelProcess {
public:
  ChannelProcess(const ChannelProfile &profile, Rng &rng);
  /// L x 1 tap gains at symbol i (taps sharing a delay are summed).
  CVector taps_at(double symbol_index) const;
  int length() const { return length_; }

private:
  int length_;
  std::vector<int> delays_;
  std::vector<FadingProcess> taps_;
};

ChannelRealization generate_channel(const ChannelProfile &profile, int frame_length, Rng &rng);

struct NoiseSpec {
  double snr_db = 0.0;
  double sigma2 = 1.0;
  static NoiseSpec from_snr_db(double snr_db);
};

/// Y = H o X + V, V ~ CN(0, sigma2) i.i.d.
CMatrix apply_channel(const CMatrix &symbols, const ChannelRealization &realization,
                      const NoiseSpec &noise, Rng &rng);

enum class Mobility { Low, High, VeryHigh };

struct ScenarioParams {
  Mobility mobility;
  double speed_kmph;
  double doppler_hz;
  int pilot_count;
};

ScenarioParams scenario(Mobility m);
Mobility parse_mobility(std::string_view name);
std::string to_string(Mobility m);

} // namespace birnn
