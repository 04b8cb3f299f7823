// SPDX-License-Identifier: Apache-2.0
/**
 * @file   estimators.cpp
 * @brief  Classical channel estimators.
 */
#include <birnn/estimators.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <birnn/channel.hpp>

namespace birnn {

DftBasis::DftBasis(const std::vector<int> &active_bins, int fft_size, int length) {
  if (length < 1 || length > static_cast<int>(active_bins.size()))
    throw std::invalid_argument("DftBasis: need 1 <= L <= K_on");
  f_on_ = partial_dft(active_bins, fft_size, length);
  const CMatrix gram = f_on_.adjoint() * f_on_;
  f_pinv_ = gram.ldlt().solve(f_on_.adjoint());
}

CVector ls_pilot(const CVector &y_pilot, const CVector &pilot_values) {
  if (y_pilot.size() != pilot_values.size())
    throw std::invalid_argument("ls_pilot: length mismatch");
  return y_pilot.cwiseQuotient(pilot_values);
}

CVector als_pilot(const CVector &h_ls, const DftBasis &basis) {
  if (h_ls.size() != basis.k_on())
    throw std::invalid_argument("als_pilot: estimate length differs from K_on");
  const CVector taps = basis.f_pinv() * h_ls;
  return basis.f_on() * taps;
}

PilotEstimates estimate_pilots(const CMatrix &received, const PilotConfig &cfg,
                               PilotMethod method, const DftBasis *basis) {
  if (received.rows() != cfg.k_on || received.cols() != cfg.frame_length)
    throw std::invalid_argument("estimate_pilots: received grid shape mismatch");
  if (method == PilotMethod::ALS && basis == nullptr)
    throw std::invalid_argument("estimate_pilots: ALS needs a DFT basis");
  PilotEstimates est;
  est.method = method;
  est.h_hat.resize(cfg.k_on, cfg.pilot_count());
  for (int q = 0; q < cfg.pilot_count(); ++q) {
    const CVector h_ls = ls_pilot(received.col(cfg.pilot_indices[static_cast<std::size_t>(q)]),
                                  cfg.pilot_values);
    est.h_hat.col(q) = method == PilotMethod::ALS ? als_pilot(h_ls, *basis) : h_ls;
  }
  return est;
}

Matrix stack_real(const CMatrix &h) {
  Matrix out(2 * h.rows(), h.cols());
  out.topRows(h.rows()) = h.real();
  out.bottomRows(h.rows()) = h.imag();
  return out;
}

CMatrix unstack_real(const Matrix &h) {
  if (h.rows() % 2 != 0)
    throw std::invalid_argument("unstack_real: row count must be even");
  const Eigen::Index k = h.rows() / 2;
  CMatrix out(k, h.cols());
  out.real() = h.topRows(k);
  out.imag() = h.bottomRows(k);
  return out;
}

EstimatorInput assemble_input(const PilotEstimates &estimates, const PilotConfig &cfg) {
  if (estimates.pilot_count() != cfg.pilot_count())
    throw std::invalid_argument("assemble_input: estimate count differs from P");
  if (estimates.h_hat.rows() != cfg.k_on)
    throw std::invalid_argument("assemble_input: estimate length differs from K_on");
  CMatrix grid = CMatrix::Zero(cfg.k_on, cfg.frame_length);
  EstimatorInput in;
  in.pilot_mask.assign(static_cast<std::size_t>(cfg.frame_length), false);
  for (int q = 0; q < cfg.pilot_count(); ++q) {
    const int i = cfg.pilot_indices[static_cast<std::size_t>(q)];
    if (i < 0 || i >= cfg.frame_length)
      throw std::invalid_argument("assemble_input: pilot index out of range");
    grid.col(i) = estimates.h_hat.col(q);
    in.pilot_mask[static_cast<std::size_t>(i)] = true;
  }
  in.h_in = stack_real(grid);
  return in;
}

Vector wi_weights(const std::vector<int> &pilots, int symbol, double normalized_doppler,
                  double noise_var) {
  const auto n = static_cast<Eigen::Index>(pilots.size());
  if (n < 1)
    throw std::invalid_argument("wi_weights: no bounding pilots");
  auto corr = [&](int delta) {
    return std::cyl_bessel_j(0.0, 2.0 * std::numbers::pi * normalized_doppler * std::abs(delta));
  };
  Matrix r_pp(n, n);
  Vector r_pd(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b)
      r_pp(a, b) = corr(pilots[static_cast<std::size_t>(a)] - pilots[static_cast<std::size_t>(b)]);
    r_pp(a, a) += noise_var;
    r_pd[a] = corr(pilots[static_cast<std::size_t>(a)] - symbol);
  }
  // Two coincident-in-correlation pilots (fdT = 0, no noise) make R_pp
  // singular; the minimum-norm solution splits the weight evenly.
  return r_pp.completeOrthogonalDecomposition().solve(r_pd);
}

CMatrix wi_estimate(const PilotEstimates &estimates, const PilotConfig &cfg,
                    double normalized_doppler, double noise_var) {
  if (cfg.pilot_count() < 1 || estimates.pilot_count() != cfg.pilot_count())
    throw std::invalid_argument("wi_estimate: need one estimate per pilot symbol (P >= 1)");
  CMatrix out(cfg.k_on, cfg.frame_length);
  const auto &idx = cfg.pilot_indices;
  for (int q = 0; q < cfg.pilot_count(); ++q)
    out.col(idx[static_cast<std::size_t>(q)]) = estimates.h_hat.col(q);

  for (int i : cfg.data_indices()) {
    // Last pilot strictly before i; pilot 0 always exists.
    const auto after = std::upper_bound(idx.begin(), idx.end(), i);
    const int lo = static_cast<int>(after - idx.begin()) - 1;
    std::vector<int> pilots{idx[static_cast<std::size_t>(lo)]};
    std::vector<int> cols{lo};
    if (after != idx.end()) {
      pilots.push_back(*after);
      cols.push_back(lo + 1);
    }
    const Vector c = wi_weights(pilots, i, normalized_doppler, noise_var);
    out.col(i).setZero();
    for (std::size_t a = 0; a < cols.size(); ++a)
      out.col(i) += c[static_cast<Eigen::Index>(a)] * estimates.h_hat.col(cols[a]);
  }
  return out;
}

CMatrix linear_interpolate(const PilotEstimates &estimates, const PilotConfig &cfg) {
  if (estimates.pilot_count() != cfg.pilot_count())
    throw std::invalid_argument("linear_interpolate: estimate count differs from P");
  CMatrix out(cfg.k_on, cfg.frame_length);
  const auto &idx = cfg.pilot_indices;
  for (int i = 0; i < cfg.frame_length; ++i) {
    const auto after = std::upper_bound(idx.begin(), idx.end(), i);
    const int lo = static_cast<int>(after - idx.begin()) - 1;
    if (after == idx.end() || idx[static_cast<std::size_t>(lo)] == i) {
      out.col(i) = estimates.h_hat.col(lo);
      continue;
    }
    const double a = static_cast<double>(i - idx[static_cast<std::size_t>(lo)]) /
                     static_cast<double>(*after - idx[static_cast<std::size_t>(lo)]);
    out.col(i) = (1.0 - a) * estimates.h_hat.col(lo) + a * estimates.h_hat.col(lo + 1);
  }
  return out;
}

double nmse(const CMatrix &estimate, const CMatrix &reference) {
  if (estimate.rows() != reference.rows() || estimate.cols() != reference.cols())
    throw std::invalid_argument("nmse: shape mismatch");
  const double den = reference.squaredNorm();
  if (den == 0.0)
    throw std::invalid_argument("nmse: reference has zero energy");
  return (estimate - reference).squaredNorm() / den;
}

} // namespace birnn
