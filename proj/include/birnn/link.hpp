// SPDX-License-Identifier: Apache-2.0
/**
 * @file   link.hpp
 * @brief  One simulated frame through the transmit/channel chain.
 */
#pragma once

#include <birnn/channel.hpp>
#include <birnn/estimators.hpp>
#include <birnn/modem.hpp>

namespace birnn {

struct LinkSetup {
  ChannelProfile profile;
  PilotConfig pilots;
  Modulation modulation = Modulation::QPSK;
  DftBasis basis;

  /// `basis_length` <= 0 selects the profile's true channel length.
  static LinkSetup make(const ChannelProfile &profile, int frame_length, int pilot_count,
                        Modulation modulation, int basis_length = 0);

  const ModulationScheme &scheme() const { return ModulationScheme::get(modulation); }
};

struct FrameTrial {
  Frame frame;
  ChannelRealization channel;
  NoiseSpec noise;
  CMatrix received;
};

/// Channel and payload come from `frame_rng`, noise from `noise_rng`, so one
/// frame can be replayed at several SNRs over the same channel.
FrameTrial simulate_frame(const LinkSetup &link, double snr_db, Rng &frame_rng, Rng &noise_rng);

} // namespace birnn
