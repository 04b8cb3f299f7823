// SPDX-License-Identifier: Apache-2.0
/**
 * @file   channel.cpp
 * @brief  Jakes sum-of-sinusoids channel and AWGN.
 */
#include <birnn/channel.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace birnn {

int ChannelProfile::length() const {
  int max_delay = 0;
  for (const Tap &t : taps)
    max_delay = std::max(max_delay, t.delay_samples);
  return max_delay + 1;
}

void ChannelProfile::validate() const {
  if (taps.empty())
    throw std::invalid_argument("ChannelProfile: no taps");
  double total = 0.0;
  for (const Tap &t : taps) {
    if (t.delay_samples < 0)
      throw std::invalid_argument("ChannelProfile: negative tap delay");
    if (!(t.power >= 0.0))
      throw std::invalid_argument("ChannelProfile: negative tap power");
    total += t.power;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("ChannelProfile: tap powers sum to " + std::to_string(total) +
                                ", expected 1");
  if (active_bins.empty())
    throw std::invalid_argument("ChannelProfile: no active subcarriers");
  if (length() > k_on())
    throw std::invalid_argument("ChannelProfile: channel length " + std::to_string(length()) +
                                " exceeds K_on " + std::to_string(k_on()));
  if (fft_size <= 0 || symbol_duration_s <= 0.0 || doppler_hz < 0.0)
    throw std::invalid_argument("ChannelProfile: invalid numerology");
  for (int b : active_bins)
    if (b < 0 || b >= fft_size)
      throw std::invalid_argument("ChannelProfile: active bin outside the FFT");
}

std::vector<int> centered_active_bins(int fft_size, int k_on) {
  if (k_on <= 0 || k_on >= fft_size)
    throw std::invalid_argument("centered_active_bins: need 0 < K_on < K_fft");
  std::vector<int> bins;
  bins.reserve(static_cast<std::size_t>(k_on));
  const int neg = k_on / 2;
  const int pos = k_on - neg;
  for (int k = -neg; k <= -1; ++k)
    bins.push_back(k + fft_size);
  for (int k = 1; k <= pos; ++k)
    bins.push_back(k);
  return bins;
}

CMatrix partial_dft(const std::vector<int> &bins, int fft_size, int length) {
  CMatrix F(static_cast<Eigen::Index>(bins.size()), length);
  for (std::size_t k = 0; k < bins.size(); ++k)
    for (int l = 0; l < length; ++l) {
      // Reduce the phase index exactly before converting to radians.
      const long long m = (static_cast<long long>(bins[k]) * l) % fft_size;
      const double arg = -2.0 * std::numbers::pi * static_cast<double>(m) / fft_size;
      F(static_cast<Eigen::Index>(k), l) = std::polar(1.0, arg);
    }
  return F;
}

ChannelProfile ChannelProfile::exponential(int length, double decay_db_per_sample,
                                           double doppler_hz) {
  ChannelProfile p;
  p.doppler_hz = doppler_hz;
  double total = 0.0;
  for (int l = 0; l < length; ++l) {
    const double pw = std::pow(10.0, -decay_db_per_sample * l / 10.0);
    p.taps.push_back({l, pw});
    total += pw;
  }
  for (Tap &t : p.taps)
    t.power /= total;
  p.active_bins = centered_active_bins(p.fft_size, 52);
  return p;
}

ChannelProfile ChannelProfile::vehicular_default(double doppler_hz) {
  // Stand-in PDP: 12 taps, 1 dB/sample decay.
  return exponential(12, 1.0, doppler_hz);
}

ChannelProfile ChannelProfile::single_tap(double doppler_hz, int k_on, int fft_size) {
  ChannelProfile p;
  p.taps = {{0, 1.0}};
  p.doppler_hz = doppler_hz;
  p.fft_size = fft_size;
  p.active_bins = centered_active_bins(fft_size, k_on);
  return p;
}

ChannelProfile ChannelProfile::from_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  ChannelProfile p;
  p.doppler_hz = j.value("doppler_hz", 0.0);
  p.symbol_duration_s = j.value("symbol_duration_s", 8e-6);
  p.fft_size = j.value("fft_size", 64);
  if (j.contains("active_bins"))
    p.active_bins = j.at("active_bins").get<std::vector<int>>();
  else
    p.active_bins = centered_active_bins(p.fft_size, j.value("k_on", 52));

  const bool normalize = j.value("normalize", false);
  for (const auto &t : j.at("taps")) {
    Tap tap;
    tap.delay_samples = t.at("delay").get<int>();
    if (t.contains("power_db"))
      tap.power = db_to_linear(t.at("power_db").get<double>());
    else
      tap.power = t.at("power").get<double>();
    p.taps.push_back(tap);
  }
  if (normalize) {
    double total = 0.0;
    for (const Tap &t : p.taps)
      total += t.power;
    for (Tap &t : p.taps)
      t.power /= total;
  }
  p.validate();
  return p;
}

ChannelProfile ChannelProfile::load(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open channel profile " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string ChannelProfile::to_json() const {
  nlohmann::json j;
  j["doppler_hz"] = doppler_hz;
  j["symbol_duration_s"] = symbol_duration_s;
  j["fft_size"] = fft_size;
  j["active_bins"] = active_bins;
  auto arr = nlohmann::json::array();
  for (const Tap &t : taps)
    arr.push_back({{"delay", t.delay_samples}, {"power", t.power}});
  j["taps"] = arr;
  return j.dump(2);
}

FadingProcess::FadingProcess(double power, double normalized_doppler, int sinusoids, Rng &rng)
  : amplitude_(std::sqrt(power / sinusoids)) {
  if (sinusoids < kMinSinusoids)
    throw std::invalid_argument("FadingProcess: at least 32 sinusoids required");
  std::uniform_real_distribution<double> offset(0.125, 0.375);
  std::uniform_real_distribution<double> uphase(0.0, 2.0 * std::numbers::pi);
  const double theta = offset(rng);
  omega_.resize(static_cast<std::size_t>(sinusoids));
  phase_.resize(static_cast<std::size_t>(sinusoids));
  for (int n = 0; n < sinusoids; ++n) {
    const double alpha = 2.0 * std::numbers::pi * (n + theta) / sinusoids;
    omega_[static_cast<std::size_t>(n)] = 2.0 * std::numbers::pi * normalized_doppler * std::cos(alpha);
    phase_[static_cast<std::size_t>(n)] = uphase(rng);
  }
}

Complex FadingProcess::at(double symbol_index) const {
  double re = 0.0, im = 0.0;
  for (std::size_t n = 0; n < omega_.size(); ++n) {
    const double a = omega_[n] * symbol_index + phase_[n];
    re += std::cos(a);
    im += std::sin(a);
  }
  return {amplitude_ * re, amplitude_ * im};
}

ChannelProcess::ChannelProcess(const ChannelProfile &profile, Rng &rng)
  : length_(profile.length()) {
  const double fdt = profile.normalized_doppler();
  taps_.reserve(profile.taps.size());
  for (std::size_t l = 0; l < profile.taps.size(); ++l) {
    delays_.push_back(profile.taps[l].delay_samples);
    taps_.emplace_back(profile.taps[l].power, fdt, kMinSinusoids + static_cast<int>(l), rng);
  }
}

CVector ChannelProcess::taps_at(double symbol_index) const {
  CVector g = CVector::Zero(length_);
  for (std::size_t l = 0; l < taps_.size(); ++l)
    g[delays_[l]] += taps_[l].at(symbol_index);
  return g;
}

ChannelRealization generate_channel(const ChannelProfile &profile, int frame_length, Rng &rng) {
  if (frame_length < 1)
    throw std::invalid_argument("generate_channel: frame length must be >= 1");
  profile.validate();
  const ChannelProcess process(profile, rng);
  const CMatrix F = partial_dft(profile.active_bins, profile.fft_size, process.length());

  ChannelRealization r;
  r.taps_t.resize(process.length(), frame_length);
  for (int i = 0; i < frame_length; ++i)
    r.taps_t.col(i) = process.taps_at(static_cast<double>(i));
  r.H = F * r.taps_t;
  return r;
}

NoiseSpec NoiseSpec::from_snr_db(double snr_db) {
  return {snr_db, std::pow(10.0, -snr_db / 10.0)};
}

CMatrix apply_channel(const CMatrix &symbols, const ChannelRealization &realization,
                      const NoiseSpec &noise, Rng &rng) {
  if (symbols.rows() != realization.H.rows() || symbols.cols() != realization.H.cols())
    throw std::invalid_argument("apply_channel: frame and channel shapes differ");
  CMatrix y = realization.H.cwiseProduct(symbols);
  if (noise.sigma2 > 0.0) {
    std::normal_distribution<double> n(0.0, std::sqrt(noise.sigma2 / 2.0));
    for (Eigen::Index i = 0; i < y.cols(); ++i)
      for (Eigen::Index k = 0; k < y.rows(); ++k) {
        const double re = n(rng);
        const double im = n(rng);
        y(k, i) += Complex(re, im);
      }
  }
  return y;
}

ScenarioParams scenario(Mobility m) {
  switch (m) {
  case Mobility::Low: return {m, 45.0, 250.0, 1};
  case Mobility::High: return {m, 100.0, 500.0, 2};
  case Mobility::VeryHigh: return {m, 200.0, 1000.0, 3};
  }
  throw std::invalid_argument("scenario: invalid mobility");
}

Mobility parse_mobility(std::string_view name) {
  if (name == "low")
    return Mobility::Low;
  if (name == "high")
    return Mobility::High;
  if (name == "very_high" || name == "very-high" || name == "veryhigh")
    return Mobility::VeryHigh;
  throw std::invalid_argument("unknown scenario: " + std::string(name));
}

std::string to_string(Mobility m) {
  switch (m) {
  case Mobility::Low: return "low";
  case Mobility::High: return "high";
  case Mobility::VeryHigh: return "very_high";
  }
  return "?";
}

} // namespace birnn
