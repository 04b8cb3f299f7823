// SPDX-License-Identifier: Apache-2.0
/**
 * @file   estimators.hpp
 * @brief  Pilot-symbol LS/ALS estimation, network input assembly and the
 *         classical interpolation baselines (WI, linear).
 */
#pragma once

#include <vector>

#include <birnn/common.hpp>
#include <birnn/modem.hpp>

namespace birnn {

/// Partial DFT over the active bins and its least-squares pseudo-inverse.
class DftBasis {
public:
  DftBasis(const std::vector<int> &active_bins, int fft_size, int length);

  const CMatrix &f_on() const { return f_on_; }     ///< K_on x L
  const CMatrix &f_pinv() const { return f_pinv_; } ///< L x K_on
  int k_on() const { return static_cast<int>(f_on_.rows()); }
  int length() const { return static_cast<int>(f_on_.cols()); }

private:
  CMatrix f_on_;
  CMatrix f_pinv_;
};

enum class PilotMethod { SLS, ALS };

struct PilotEstimates {
  CMatrix h_hat; ///< K_on x P, one column per pilot symbol
  PilotMethod method = PilotMethod::ALS;
  int pilot_count() const { return static_cast<int>(h_hat.cols()); }
};

/// h[k] = y[k] / p[k].
CVector ls_pilot(const CVector &y_pilot, const CVector &pilot_values);

/// Projection of an LS estimate onto the L-tap delay subspace.
CVector als_pilot(const CVector &h_ls, const DftBasis &basis);

/// LS (and optionally ALS) at every pilot symbol of a received grid.
PilotEstimates estimate_pilots(const CMatrix &received, const PilotConfig &cfg,
                               PilotMethod method, const DftBasis *basis = nullptr);

struct EstimatorInput {
  Matrix h_in;                 ///< 2K_on x I
  std::vector<bool> pilot_mask; ///< per symbol
};

/// Rows 0..K-1 real part, rows K..2K-1 imaginary part.
Matrix stack_real(const CMatrix &h);
CMatrix unstack_real(const Matrix &h);

/// Zero insertion at data symbols, then real stacking.
EstimatorInput assemble_input(const PilotEstimates &estimates, const PilotConfig &cfg);

/**
 * @brief Wiener interpolation weights for one symbol.
 *
 * `pilots` are the bounding pilot symbol indices (one or two of them).
 * Solves (R_pp + noise_var I) c = r_pd with R(d) = J0(2 pi fdT d).
 */
Vector wi_weights(const std::vector<int> &pilots, int symbol, double normalized_doppler,
                  double noise_var);

/**
 * @brief Weighted-interpolation estimate for the whole frame.
 *
 * Pilot symbols keep their own estimate. Each data symbol combines the
 * nearest pilot before and after it; past the last pilot only the
 * preceding one is used.
 */
CMatrix wi_estimate(const PilotEstimates &estimates, const PilotConfig &cfg,
                    double normalized_doppler, double noise_var);

/// Linear time interpolation between pilots, held constant after the last one.
CMatrix linear_interpolate(const PilotEstimates &estimates, const PilotConfig &cfg);

/// Per-element ||est - ref||^2 / ||ref||^2.
double nmse(const CMatrix &estimate, const CMatrix &reference);

} // namespace birnn
