// SPDX-License-Identifier: Apache-2.0
/**
 * @file   test_channel.cpp
 * @brief  Fading statistics, frequency response and the AWGN link.
 */
#include <doctest.h>

#include <cmath>
#include <numbers>

#include <birnn/channel.hpp>

using namespace birnn;

namespace {

/// Power series of the zeroth-order Bessel function.
double j0_series(double x) {
  double term = 1.0, sum = 1.0;
  for (int m = 1; m < 60; ++m) {
    term *= -(x * x / 4.0) / (static_cast<double>(m) * m);
    sum += term;
  }
  return sum;
}

/// Naive DFT response of tap vector g at the given bins.
CVector naive_response(const CVector &g, const std::vector<int> &bins, int nfft) {
  CVector h = CVector::Zero(static_cast<Eigen::Index>(bins.size()));
  for (std::size_t k = 0; k < bins.size(); ++k)
    for (Eigen::Index l = 0; l < g.size(); ++l) {
      const double ph = -2.0 * std::numbers::pi * bins[k] * static_cast<double>(l) / nfft;
      h[static_cast<Eigen::Index>(k)] += g[l] * Complex(std::cos(ph), std::sin(ph));
    }
  return h;
}

} // namespace

TEST_CASE("J0 oracle sanity") {
  CHECK(j0_series(0.0) == 1.0);
  CHECK(j0_series(2.404825557695773) == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
}

TEST_CASE("scenario table") {
  const ScenarioParams lo = scenario(Mobility::Low), hi = scenario(Mobility::High),
                       vh = scenario(Mobility::VeryHigh);
  CHECK(lo.speed_kmph == 45.0);
  CHECK(lo.doppler_hz == 250.0);
  CHECK(lo.pilot_count == 1);
  CHECK(hi.speed_kmph == 100.0);
  CHECK(hi.doppler_hz == 500.0);
  CHECK(hi.pilot_count == 2);
  CHECK(vh.speed_kmph == 200.0);
  CHECK(vh.doppler_hz == 1000.0);
  CHECK(vh.pilot_count == 3);
  CHECK(parse_mobility("very_high") == Mobility::VeryHigh);
  CHECK_THROWS_AS(parse_mobility("warp"), std::invalid_argument);
}

TEST_CASE("profile validation and JSON") {
  const ChannelProfile d = ChannelProfile::vehicular_default(1000.0);
  CHECK(d.k_on() == 52);
  CHECK(d.length() == 12);
  CHECK(d.normalized_doppler() == doctest::Approx(0.008));
  double total = 0.0;
  for (const Tap &t : d.taps)
    total += t.power;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  const ChannelProfile p = ChannelProfile::from_json(
    R"({"doppler_hz": 500, "k_on": 52, "normalize": true,
        "taps": [{"delay": 0, "power_db": 0}, {"delay": 3, "power_db": -3}]})");
  CHECK(p.length() == 4);
  CHECK(p.taps[0].power + p.taps[1].power == doctest::Approx(1.0));
  CHECK(p.taps[1].power / p.taps[0].power == doctest::Approx(std::pow(10.0, -0.3)));
  const ChannelProfile back = ChannelProfile::from_json(p.to_json());
  CHECK(back.active_bins == p.active_bins);
  CHECK(back.taps.size() == 2);

  CHECK_THROWS(ChannelProfile::from_json(R"({"taps": [{"delay": 0, "power": 0.5}]})"));
  CHECK_THROWS(ChannelProfile::from_json(
    R"({"k_on": 4, "taps": [{"delay": 0, "power": 0.5}, {"delay": 9, "power": 0.5}]})"));
}

TEST_CASE("frequency response is the DFT of the taps") {
  const ChannelProfile p = ChannelProfile::vehicular_default(1000.0);
  Rng rng = make_stream({21});
  const ChannelRealization r = generate_channel(p, 10, rng);
  CHECK(r.H.rows() == 52);
  CHECK(r.taps_t.rows() == 12);
  for (Eigen::Index i = 0; i < 10; ++i)
    CHECK((r.H.col(i) - naive_response(r.taps_t.col(i), p.active_bins, 64)).norm() < 1e-9);
}

TEST_CASE("zero Doppler freezes the channel; one tap is flat") {
  Rng rng = make_stream({22});
  const ChannelRealization r = generate_channel(ChannelProfile::vehicular_default(0.0), 20, rng);
  for (Eigen::Index i = 1; i < 20; ++i)
    CHECK((r.H.col(i) - r.H.col(0)).norm() == 0.0);

  const ChannelRealization f = generate_channel(ChannelProfile::single_tap(1000.0), 20, rng);
  for (Eigen::Index i = 0; i < 20; ++i)
    CHECK((f.H.col(i).array() - f.H(0, i)).abs().maxCoeff() < 1e-12);
}

TEST_CASE("deterministic replay") {
  const ChannelProfile p = ChannelProfile::vehicular_default(500.0);
  Rng a = make_stream({5, 6}), b = make_stream({5, 6});
  CHECK(generate_channel(p, 30, a).H == generate_channel(p, 30, b).H);
}

TEST_CASE("tap autocorrelation follows J0 over 1e5 symbols") {
  const ChannelProfile p = ChannelProfile::vehicular_default(1000.0);
  const double fdt = p.normalized_doppler();
  const int n = 100000;
  const int max_lag = static_cast<int>(0.5 / fdt);
  Rng rng = make_stream({23});
  const ChannelProcess proc(p, rng);
  CMatrix g(p.length(), n);
  for (int i = 0; i < n; ++i)
    g.col(i) = proc.taps_at(i);

  double worst = 0.0;
  for (Eigen::Index l = 0; l < g.rows(); ++l) {
    const auto x = g.row(l);
    const double r0 = x.squaredNorm() / n;
    for (int d = 1; d <= max_lag; ++d) {
      Complex acc = 0.0;
      for (int i = 0; i + d < n; ++i)
        acc += x[i + d] * std::conj(x[i]);
      const Complex r = acc / static_cast<double>(n - d) / r0;
      worst = std::max(worst, std::abs(r - j0_series(2.0 * std::numbers::pi * fdt * d)));
    }
  }
  INFO("max |R(d) - J0| = " << worst);
  CHECK(worst < 0.05);

  // Different taps are uncorrelated (RMS over pairs).
  double sum = 0.0;
  int pairs = 0;
  for (Eigen::Index a = 0; a < g.rows(); ++a)
    for (Eigen::Index b = a + 1; b < g.rows(); ++b) {
      const Complex c = g.row(a).dot(g.row(b)) / (g.row(a).norm() * g.row(b).norm());
      sum += std::norm(c);
      ++pairs;
    }
  const double rms = std::sqrt(sum / pairs);
  INFO("RMS cross-correlation " << rms);
  CHECK(rms < 0.05);
}

TEST_CASE("average channel power is one") {
  const ChannelProfile p = ChannelProfile::vehicular_default(1000.0);
  double acc = 0.0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    Rng rng = make_stream({24, static_cast<std::uint64_t>(t)});
    acc += generate_channel(p, 1, rng).H.squaredNorm() / p.k_on();
  }
  CHECK(acc / trials == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("apply_channel") {
  Rng rng = make_stream({25});
  CMatrix x(4, 3);
  for (Eigen::Index j = 0; j < x.size(); ++j)
    x.data()[j] = complex_gaussian(rng, 1.0);
  ChannelRealization ones{CMatrix::Ones(4, 3), CMatrix::Ones(1, 3)};
  CHECK(apply_channel(x, ones, NoiseSpec::from_snr_db(std::numeric_limits<double>::infinity()), rng) == x);

  ChannelRealization r = generate_channel(ChannelProfile::single_tap(100.0, 4), 3, rng);
  const CMatrix y = apply_channel(x, r, NoiseSpec{0.0, 0.0}, rng);
  CHECK((y.cwiseQuotient(x) - r.H).norm() < 1e-12);

  ChannelRealization wrong{CMatrix::Ones(4, 2), CMatrix::Ones(1, 2)};
  CHECK_THROWS_AS(apply_channel(x, wrong, NoiseSpec{}, rng), std::invalid_argument);

  CHECK(NoiseSpec::from_snr_db(20.0).sigma2 == doctest::Approx(0.01));

  const int n = 1000;
  CMatrix big = CMatrix::Ones(1000, n);
  ChannelRealization unit{CMatrix::Ones(1000, n), CMatrix::Ones(1, n)};
  const NoiseSpec ns = NoiseSpec::from_snr_db(7.0);
  const CMatrix yy = apply_channel(big, unit, ns, rng);
  const double var = (yy - big).squaredNorm() / static_cast<double>(yy.size());
  CHECK(var == doctest::Approx(ns.sigma2).epsilon(0.01));
}
