// SPDX-License-Identifier: Apache-2.0
#include <birnn/link.hpp>

#include <stdexcept>

namespace birnn {

LinkSetup LinkSetup::make(const ChannelProfile &profile, int frame_length, int pilot_count,
                          Modulation modulation, int basis_length) {
  profile.validate();
  const int l = basis_length > 0 ? basis_length : profile.length();
  return LinkSetup{profile, PilotConfig::make(profile.k_on(), frame_length, pilot_count),
                   modulation, DftBasis(profile.active_bins, profile.fft_size, l)};
}

FrameTrial simulate_frame(const LinkSetup &link, double snr_db, Rng &frame_rng, Rng &noise_rng) {
  FrameTrial t;
  const ModulationScheme &scheme = link.scheme();
  const Bits payload = random_bits(payload_length(link.pilots, scheme), frame_rng);
  t.frame = build_frame(payload, link.pilots, scheme);
  t.channel = generate_channel(link.profile, link.pilots.frame_length, frame_rng);
  t.noise = NoiseSpec::from_snr_db(snr_db);
  t.received = apply_channel(t.frame.symbols, t.channel, t.noise, noise_rng);
  return t;
}

} // namespace birnn
