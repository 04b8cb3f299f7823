// SPDX-License-Identifier: Apache-2.0
/**
 * @file   rnn.hpp
 * @brief  Bidirectional SRNN / LSTM / GRU with a time-distributed affine
 *         output layer.
 *
 * Gate rows are stacked in one kernel per direction:
 *   GRU  : [update z; reset r; candidate c]
 *   LSTM : [input i; forget f; output o; candidate g]
 *   SRNN : [state]
 * GRU:  h' = (1 - z) o h + z o act(Wx_c x + Wh_c (r o h) + b_c)
 * LSTM: c' = f o c + i o act(.), h' = o o act(c')
 * SRNN: h' = act(Wx x + Wh h + b)
 * The output at step t is W_out [h_fwd(t); h_bwd(t)] + b_out, optionally
 * passed through a ReLU.
 *
 * Batches are laid out as one matrix of shape features x (steps * batch);
 * step t occupies columns [t * batch, (t + 1) * batch).
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <birnn/common.hpp>
#include <birnn/estimators.hpp>

namespace birnn {

enum class CellKind : std::uint32_t { SRNN = 0, LSTM = 1, GRU = 2 };
enum class Activation : std::uint32_t { Identity = 0, Tanh = 1, Relu = 2 };

int gate_count(CellKind kind);
std::string to_string(CellKind kind);
CellKind parse_cell_kind(std::string_view name);
std::string to_string(Activation a);
Activation parse_activation(std::string_view name);

struct ModelShape {
  CellKind kind = CellKind::GRU;
  int hidden = 32;           ///< Q
  int input_size = 104;      ///< K_in = 2 K_on
  int k_on = 52;
  int frame_length = 100;    ///< I the model was trained for
  Activation candidate = Activation::Relu;
  Activation output = Activation::Identity;

  int output_size() const { return 2 * k_on; }
  bool operator==(const ModelShape &) const = default;
};

struct CellWeights {
  Matrix wx; ///< G*Q x K_in
  Matrix wh; ///< G*Q x Q
  Vector b;  ///< G*Q
};

struct TensorView {
  std::string name;
  std::span<double> data;
};

struct ConstTensorView {
  std::string name;
  std::span<const double> data;
};

/// Every trainable tensor. Also used as the gradient container.
struct BiRnnWeights {
  CellWeights fwd;
  CellWeights bwd;
  Matrix w_out; ///< 2K_on x 2Q
  Vector b_out; ///< 2K_on

  static BiRnnWeights zeros(const ModelShape &shape);

  /// Serialization order: fwd.wx, fwd.wh, fwd.b, bwd.wx, bwd.wh, bwd.b,
  /// w_out, b_out; each tensor column-major.
  std::vector<TensorView> tensors();
  std::vector<ConstTensorView> tensors() const;
  std::size_t parameter_count() const;
  bool all_finite() const;
};

struct RnnModel {
  ModelShape shape;
  BiRnnWeights weights;
  /// Bumped on every in-place weight update; activation caches record it.
  std::uint64_t revision = 0;

  static RnnModel zeros(const ModelShape &shape);
  /// Glorot-uniform kernels, zero biases (LSTM forget bias 1).
  static RnnModel glorot(const ModelShape &shape, std::uint64_t seed);

  void validate() const;
  void save(const std::filesystem::path &path) const;
  static RnnModel load(const std::filesystem::path &path);
  /// Structured-text description written next to the weight file.
  std::string metadata_json() const;
};

struct CellState {
  Vector h;
  Vector c; ///< LSTM only; empty otherwise
};

/// One recurrent step for a single sample.
CellState cell_step(CellKind kind, const CellWeights &w, Activation act,
                    const Vector &x, const CellState &state);

struct SequenceBatch {
  int steps = 0;
  int batch = 0;
  Matrix x; ///< features x (steps * batch)

  auto step(int t) const { return x.middleCols(static_cast<Eigen::Index>(t) * batch, batch); }
  auto step(int t) { return x.middleCols(static_cast<Eigen::Index>(t) * batch, batch); }
};

/// Packs per-sample feature x steps matrices (all of equal shape).
SequenceBatch pack_batch(std::span<const Matrix *const> samples);
SequenceBatch pack_batch(const Matrix &sample);
/// Sample b of a packed features x (steps * batch) matrix.
Matrix unpack_sample(const Matrix &packed, int steps, int batch, int b);

struct DirectionCache {
  Matrix h;     ///< Q x (steps * batch), state after each step
  Matrix gates; ///< G*Q x (steps * batch), post-nonlinearity
  Matrix c;     ///< LSTM cell state after each step
  Matrix s;     ///< LSTM act(c)
};

/// Forward-pass record retained for backpropagation.
struct SequenceActivations {
  const RnnModel *model = nullptr;
  std::uint64_t revision = 0;
  SequenceBatch input;
  std::vector<bool> zero_step; ///< input step is all zeros
  DirectionCache fwd;
  DirectionCache bwd;
  Matrix output; ///< 2K_on x (steps * batch)
};

SequenceActivations birnn_forward_batch(const RnnModel &model, SequenceBatch input);

/// Single frame: 2K_on x I in, 2K_on x I out.
Matrix birnn_forward(const RnnModel &model, const Matrix &h_in);

/// Network output converted back to a complex K_on x I channel estimate.
CMatrix estimate_channel(const RnnModel &model, const EstimatorInput &input);

} // namespace birnn
