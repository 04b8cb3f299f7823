// SPDX-License-Identifier: Apache-2.0
/**
 * @file   rnn_detail.hpp
 * @brief  Internal step kernels shared by the forward and backward passes.
 */
#pragma once

#include <vector>

#include <birnn/rnn.hpp>

namespace birnn::detail {

struct StepResult {
  Matrix gates;
  Matrix h;
  Matrix c;
  Matrix s;
};

void activate(Activation a, Eigen::Ref<Matrix> m);
/// Derivative of `a` expressed through its output y = a(x).
Matrix activation_grad(Activation a, const Eigen::Ref<const Matrix> &y);
void sigmoid(Eigen::Ref<Matrix> m);

/// `x_pre` is Wx x for the batch, or null for an all-zero input step.
StepResult step_forward(CellKind kind, const CellWeights &w, Activation act, const Matrix *x_pre,
                        const Eigen::Ref<const Matrix> &h_prev,
                        const Eigen::Ref<const Matrix> &c_prev);

void scan_direction(const RnnModel &model, const CellWeights &w, const SequenceBatch &in,
                    const std::vector<bool> &zero_step, bool reverse, DirectionCache &cache);

} // namespace birnn::detail
