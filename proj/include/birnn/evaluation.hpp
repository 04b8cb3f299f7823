// SPDX-License-Identifier: Apache-2.0
/**
 * @file   evaluation.hpp
 * @brief  Monte-Carlo BER/NMSE sweeps over SNR for the studied estimators.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <birnn/channel.hpp>
#include <birnn/link.hpp>
#include <birnn/modem.hpp>
#include <birnn/rnn.hpp>

namespace birnn {

enum class EstimatorKind { Perfect, SLS_interp, ALS_WI, Bi_SRNN, Bi_LSTM, Bi_GRU };

std::string to_string(EstimatorKind kind);
EstimatorKind parse_estimator(std::string_view name);
bool needs_model(EstimatorKind kind);

struct EstimatorChoice {
  EstimatorKind kind = EstimatorKind::Perfect;
  std::shared_ptr<const RnnModel> model;

  static EstimatorChoice classical(EstimatorKind kind);
  static EstimatorChoice network(EstimatorKind kind, std::shared_ptr<const RnnModel> model);
  std::string name() const { return to_string(kind); }
  /// Throws if a model-backed choice has no model, or the model does not fit.
  void validate(int k_on, int frame_length) const;
};

/**
 * @brief One-tap zero-forcing on the data symbols, then hard demapping.
 *
 * Entries with |h| < 1e-12 are erasures and decide all-zero bits.
 * Bits come out in the payload order of build_frame.
 */
Bits equalize_and_demap(const CMatrix &received, const CMatrix &h_hat, const PilotConfig &cfg,
                        const ModulationScheme &scheme);

/// Channel estimate for one received frame.
CMatrix run_estimator(const EstimatorChoice &est, const LinkSetup &link, const CMatrix &received,
                      double noise_var, const CMatrix &true_channel);

struct SweepConfig {
  std::string scenario_name = "very_high";
  ChannelProfile profile = ChannelProfile::vehicular_default(1000.0);
  int pilot_count = 3;
  int frame_length = 100;
  Modulation modulation = Modulation::QPSK;
  std::vector<double> snr_db;
  int frames = 2000;
  std::uint64_t seed = 7;
  int basis_length = 0;
  int workers = 1;
  bool keep_frame_stats = false;

  /// Doppler and pilot count from the mobility scenario.
  static SweepConfig for_scenario(Mobility m, Modulation mod, const ChannelProfile &base);
};

struct FrameStat {
  std::uint32_t errors = 0;
  double nmse = 0.0;
};

struct BerPoint {
  double snr_db = 0.0;
  std::uint64_t frames = 0;
  std::uint64_t bits = 0;
  std::uint64_t errors = 0;
  double ber = 0.0;
  double nmse = 0.0; ///< mean of per-frame NMSE
  std::vector<FrameStat> per_frame; ///< filled when keep_frame_stats
};

struct BerReport {
  std::string estimator;
  std::string scenario;
  std::string scheme;
  std::vector<BerPoint> points;
};

/**
 * @brief Frames are keyed by (seed, frame index): every SNR point and every
 *        estimator sees the same channels and payloads, noise differs per SNR.
 */
BerReport ber_sweep(const EstimatorChoice &est, const SweepConfig &cfg);

/// Gray QPSK over Rayleigh with mean SNR per bit `snr_per_bit` (linear).
double rayleigh_qpsk_reference(double snr_per_bit);

/// Header estimator,scenario,scheme,snr_db,frames,bits,errors,ber,nmse.
void write_ber_csv(const std::vector<BerReport> &reports, const std::filesystem::path &path);
std::string ber_csv(const std::vector<BerReport> &reports);
/// Python/matplotlib script plotting BER vs SNR from the CSV.
void write_plot_script(const std::filesystem::path &csv, const std::filesystem::path &script);

/// Parses "a:step:b" or a comma list into SNR values.
std::vector<double> parse_snr_list(std::string_view text);

} // namespace birnn
