// SPDX-License-Identifier: Apache-2.0
/**
 * @file   test_estimators.cpp
 * @brief  LS/ALS pilot estimation, input assembly and WI weights.
 */
#include <doctest.h>

#include <cmath>
#include <numbers>

#include <birnn/channel.hpp>
#include <birnn/estimators.hpp>

using namespace birnn;

namespace {

CVector random_cvector(Eigen::Index n, double var, Rng &rng) {
  CVector v(n);
  for (Eigen::Index k = 0; k < n; ++k)
    v[k] = complex_gaussian(rng, var);
  return v;
}

DftBasis default_basis(int l = 12) {
  return DftBasis(centered_active_bins(64, 52), 64, l);
}

} // namespace

TEST_CASE("DFT basis pseudo-inverse and projector") {
  const DftBasis b = default_basis();
  CHECK(b.k_on() == 52);
  CHECK(b.length() == 12);
  CHECK((b.f_pinv() * b.f_on() - CMatrix::Identity(12, 12)).norm() < 1e-9);
  const CMatrix proj = b.f_on() * b.f_pinv();
  CHECK((proj * proj - proj).norm() < 1e-9);
  CHECK((proj.adjoint() - proj).norm() < 1e-9);
}

TEST_CASE("LS at pilots") {
  const CVector p = make_pilot_sequence(52, kDefaultPilotSeed);
  CHECK((ls_pilot(p, p) - CVector::Ones(52)).norm() == 0.0);
  Rng rng = make_stream({31});
  const CVector h = random_cvector(52, 1.0, rng);
  CHECK((ls_pilot(h.cwiseProduct(p), p) - h).norm() < 1e-14);

  const double sigma2 = 0.3;
  double err = 0.0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    const CVector v = random_cvector(52, sigma2, rng);
    err += (ls_pilot(h.cwiseProduct(p) + v, p) - h).squaredNorm() / 52.0;
  }
  CHECK(err / trials == doctest::Approx(sigma2).epsilon(0.03));
}

TEST_CASE("ALS projection") {
  const DftBasis b = default_basis();
  Rng rng = make_stream({32});
  const CVector in_space = b.f_on() * random_cvector(12, 1.0 / 12, rng);
  CHECK((als_pilot(in_space, b) - in_space).norm() < 1e-9);

  const CVector x = random_cvector(52, 1.0, rng);
  const CVector once = als_pilot(x, b);
  CHECK((als_pilot(once, b) - once).norm() < 1e-9);

  // White noise keeps L/K_on of its energy.
  double in_e = 0.0, out_e = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const CVector v = random_cvector(52, 1.0, rng);
    in_e += v.squaredNorm();
    out_e += als_pilot(v, b).squaredNorm();
  }
  CHECK(out_e / in_e == doctest::Approx(12.0 / 52.0).epsilon(0.05));

  // Contraction on in-subspace channels.
  for (int t = 0; t < 200; ++t) {
    const CVector h = b.f_on() * random_cvector(12, 1.0 / 12, rng);
    const CVector v = random_cvector(52, 0.5, rng);
    CHECK((als_pilot(h + v, b) - h).norm() <= v.norm() + 1e-12);
  }
}

TEST_CASE("ALS/SLS NMSE ratio approaches L/K_on") {
  const ChannelProfile prof = ChannelProfile::vehicular_default(0.0);
  const DftBasis b = default_basis(prof.length());
  const CVector p = make_pilot_sequence(52, kDefaultPilotSeed);
  Rng rng = make_stream({33});
  double sls = 0.0, als = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const CVector h = generate_channel(prof, 1, rng).H.col(0);
    const CVector y = h.cwiseProduct(p) + random_cvector(52, 0.1, rng);
    const CVector ls = ls_pilot(y, p);
    sls += (ls - h).squaredNorm() / h.squaredNorm();
    als += (als_pilot(ls, b) - h).squaredNorm() / h.squaredNorm();
  }
  CHECK(als / sls == doctest::Approx(12.0 / 52.0).epsilon(0.10));
}

TEST_CASE("network input assembly") {
  const PilotConfig cfg = PilotConfig::make(6, 10, 3);
  Rng rng = make_stream({34});
  PilotEstimates est;
  est.h_hat.resize(6, 3);
  for (Eigen::Index j = 0; j < est.h_hat.size(); ++j)
    est.h_hat.data()[j] = complex_gaussian(rng, 1.0);
  const EstimatorInput in = assemble_input(est, cfg);
  CHECK(in.h_in.rows() == 12);
  CHECK(in.h_in.cols() == 10);
  int nonzero = 0;
  for (Eigen::Index i = 0; i < 10; ++i) {
    const bool pilot = cfg.is_pilot(static_cast<int>(i));
    CHECK(in.pilot_mask[static_cast<std::size_t>(i)] == pilot);
    if (!pilot)
      CHECK(in.h_in.col(i).isZero(0.0));
    nonzero += !in.h_in.col(i).isZero(0.0);
  }
  CHECK(nonzero == 3);
  const CMatrix back = unstack_real(in.h_in);
  for (int q = 0; q < 3; ++q) {
    CHECK(back.col(cfg.pilot_indices[static_cast<std::size_t>(q)]) == est.h_hat.col(q));
    CHECK(in.h_in.col(cfg.pilot_indices[static_cast<std::size_t>(q)]).head(6) ==
          est.h_hat.col(q).real());
  }

  PilotEstimates real_est;
  real_est.h_hat = est.h_hat.real().cast<Complex>();
  const EstimatorInput r = assemble_input(real_est, cfg);
  CHECK(r.h_in.bottomRows(6).isZero(0.0));

  const PilotConfig full = PilotConfig::make(6, 3, 3);
  PilotEstimates three;
  three.h_hat = CMatrix::Ones(6, 3);
  const EstimatorInput f = assemble_input(three, full);
  for (Eigen::Index i = 0; i < 3; ++i)
    CHECK_FALSE(f.h_in.col(i).isZero(0.0));

  PilotEstimates two;
  two.h_hat = CMatrix::Ones(6, 2);
  CHECK_THROWS_AS(assemble_input(two, cfg), std::invalid_argument);

  CMatrix any(3, 4);
  for (Eigen::Index j = 0; j < any.size(); ++j)
    any.data()[j] = complex_gaussian(rng, 1.0);
  CHECK(unstack_real(stack_real(any)) == any);
}

TEST_CASE("WI weights") {
  // Static channel, no noise: weights sum to one.
  const Vector c0 = wi_weights({0, 10}, 4, 0.0, 0.0);
  CHECK(c0.sum() == doctest::Approx(1.0));
  // Symbol on a pilot, no noise: that pilot is selected.
  const Vector c1 = wi_weights({0, 10}, 0, 0.008, 0.0);
  CHECK(c1[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(c1[1]) < 1e-9);

  // Brute-force minimisation of the interpolation MSE over a weight grid.
  auto rho = [](double d) { return std::cyl_bessel_j(0.0, 2.0 * std::numbers::pi * 0.02 * d); };
  const double s2 = 0.05;
  const int p0 = 0, p1 = 20, d = 7;
  auto mse = [&](double a, double b) {
    return 1.0 - 2.0 * (a * rho(d - p0) + b * rho(p1 - d)) + a * a * (1.0 + s2) +
           b * b * (1.0 + s2) + 2.0 * a * b * rho(p1 - p0);
  };
  double best = 1e9, ba = 0.0, bb = 0.0;
  for (int i = 0; i <= 3000; ++i)
    for (int j = 0; j <= 3000; ++j) {
      const double a = -0.5 + i * 5e-4, b = -0.5 + j * 5e-4;
      const double m = mse(a, b);
      if (m < best) {
        best = m;
        ba = a;
        bb = b;
      }
    }
  const Vector c = wi_weights({p0, p1}, d, 0.02, s2);
  CHECK(std::abs(c[0] - ba) < 1e-3);
  CHECK(std::abs(c[1] - bb) < 1e-3);
}

TEST_CASE("WI frame estimate") {
  const PilotConfig cfg = PilotConfig::make(4, 9, 2);
  PilotEstimates est;
  est.h_hat = CMatrix::Constant(4, 2, Complex(0.3, -0.7));
  const CMatrix h = wi_estimate(est, cfg, 0.0, 0.0);
  CHECK((h.array() - Complex(0.3, -0.7)).abs().maxCoeff() < 1e-12);

  PilotEstimates bad;
  bad.h_hat = CMatrix::Ones(4, 1);
  CHECK_THROWS_AS(wi_estimate(bad, cfg, 0.0, 0.0), std::invalid_argument);

  // P = 1 extrapolates from the only pilot.
  const PilotConfig one = PilotConfig::make(4, 5, 1);
  PilotEstimates single;
  single.h_hat = CMatrix::Ones(4, 1);
  const CMatrix e = wi_estimate(single, one, 0.001, 0.01);
  CHECK(e.col(0) == single.h_hat.col(0));
  CHECK(e(0, 4).real() < 1.0);
  CHECK(e(0, 4).real() > 0.9);
}

TEST_CASE("linear interpolation and NMSE") {
  const PilotConfig cfg = PilotConfig::make(1, 5, 2);
  PilotEstimates est;
  est.h_hat.resize(1, 2);
  est.h_hat << Complex(0.0, 0.0), Complex(4.0, 0.0);
  const CMatrix h = linear_interpolate(est, cfg);
  for (int i = 0; i < 5; ++i)
    CHECK(h(0, i).real() == doctest::Approx(static_cast<double>(i)));

  CMatrix ref = CMatrix::Ones(2, 2);
  CHECK(nmse(ref, ref) == 0.0);
  CHECK(nmse(CMatrix::Zero(2, 2), ref) == 1.0);
  CHECK_THROWS_AS(nmse(CMatrix::Zero(2, 2), CMatrix::Zero(2, 2)), std::invalid_argument);
}
