// SPDX-License-Identifier: Apache-2.0
/**
 * @file   training.hpp
 * @brief  Dataset generation, backpropagation through time, ADAM and the
 *         minibatch training loop.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <birnn/channel.hpp>
#include <birnn/modem.hpp>
#include <birnn/rnn.hpp>

namespace birnn {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainingConfig {
  int epochs = 500;
  int batch_size = 128;
  int train_samples = 16000;
  int test_samples = 2000;
  double train_snr_db = 40.0;
  AdamHyper adam;
  std::uint64_t seed = 1;
  double clip_norm = 0.0; ///< global gradient-norm clip; 0 disables
};

// ---------------------------------------------------------------------------
// Dataset

struct DatasetMeta {
  int k_on = 0;
  int frame_length = 0;
  std::vector<int> pilot_indices;
  Mobility scenario = Mobility::VeryHigh;
  Modulation modulation = Modulation::QPSK;
  double doppler_hz = 0.0;
  double symbol_duration_s = 0.0;
  double snr_db = 0.0;
  int channel_length = 0;
  int basis_length = 0;
  std::uint64_t seed = 0;

  bool operator==(const DatasetMeta &) const = default;
};

/**
 * @brief Network inputs and real-stacked true channels.
 *
 * Inputs are kept as their pilot columns only (2K_on x P); every data
 * column of a network input is zero by construction.
 */
struct Dataset {
  DatasetMeta meta;
  std::vector<Matrix> pilot_inputs; ///< 2K_on x P
  std::vector<Matrix> targets;      ///< 2K_on x I

  std::size_t size() const { return targets.size(); }
  /// Zero-inserted 2K_on x I network input for sample n.
  Matrix input(std::size_t n) const;

  /// Container layout (little endian):
  ///   "BRDS" u32 version u64 count u32 k_on u32 I u32 P u32[P] pilot indices
  ///   u32 scenario u32 modulation f64 doppler f64 T_sym f64 snr
  ///   u32 channel_length u32 basis_length u64 seed
  ///   then per sample: f64[2K_on*P] input pilot columns, f64[2K_on*I] target
  ///   (column-major).
  void save(const std::filesystem::path &path) const;
  static Dataset load(const std::filesystem::path &path);
  std::string metadata_json() const;
};

struct DatasetSpec {
  Mobility scenario = Mobility::VeryHigh;
  int frames = 16000;
  double snr_db = 40.0;
  Modulation modulation = Modulation::QPSK;
  std::uint64_t seed = 1;
  int frame_length = 100;
  /// Doppler is taken from the scenario; taps/numerology from here.
  ChannelProfile profile = ChannelProfile::vehicular_default(0.0);
  int basis_length = 0; ///< <= 0: true channel length
  int workers = 1;
};

Dataset generate_dataset(const DatasetSpec &spec);

// ---------------------------------------------------------------------------
// Loss, gradients, optimizer

/// Mean of squared differences over all entries.
double mse_loss(const Matrix &pred, const Matrix &target);

using Gradients = BiRnnWeights;

/**
 * @brief Reverse-mode gradients through the projection and both scans.
 *
 * `output_grad` is dLoss/dOutput, same layout as `act.output`.
 * Throws if `act` was not produced by `model` at its current revision.
 */
Gradients backward(const RnnModel &model, const SequenceActivations &act,
                   const Matrix &output_grad);

struct AdamState {
  std::vector<Vector> m;
  std::vector<Vector> v;
  std::uint64_t t = 0;

  static AdamState zeros(const BiRnnWeights &like);
};

/// One bias-corrected ADAM update. Throws std::domain_error on a
/// non-finite gradient, naming the tensor and element.
void adam_step(BiRnnWeights &weights, const Gradients &grads, AdamState &state,
               const AdamHyper &hyper);
/// Same, bumping the model revision.
void adam_step(RnnModel &model, const Gradients &grads, AdamState &state, const AdamHyper &hyper);

// ---------------------------------------------------------------------------
// Training loop

struct EpochRecord {
  int epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
};

struct TrainResult {
  RnnModel model; ///< lowest-validation-MSE weights
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

class TrainingDiverged : public std::runtime_error {
public:
  TrainingDiverged(const std::string &what, std::vector<EpochRecord> history)
    : std::runtime_error(what), history_(std::move(history)) {}
  const std::vector<EpochRecord> &history() const { return history_; }

private:
  std::vector<EpochRecord> history_;
};

using EpochCallback = std::function<void(const EpochRecord &)>;

/// Mean MSE of the model over a dataset.
double evaluate_mse(const RnnModel &model, const Dataset &data, int batch_size = 128);

/// Minibatch ADAM. Without a validation set, selection uses the training MSE.
TrainResult train(RnnModel init, const Dataset &train_set, const Dataset *val_set,
                  const TrainingConfig &cfg, const EpochCallback &on_epoch = {});

/// CSV with header "epoch,train_mse,val_mse".
void write_history_csv(const std::vector<EpochRecord> &history, const std::filesystem::path &path);

// ---------------------------------------------------------------------------
// Gradient check

struct GradCheckDims {
  int input_size = 6;
  int hidden = 4;
  int steps = 5;
  int batch = 2;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  std::size_t parameters = 0;
};

inline constexpr double kGradCheckStep = 1e-6;

/**
 * @brief Central differences against backward() on a random model.
 *
 * The loss difference is formed as mean((y+ - y-) o (y+ + y- - 2t)), which
 * equals L(w+h) - L(w-h) without subtracting two rounded loss values.
 * Error per weight: |a - n| / max(|a|, |n|, 1e-12).
 */
GradCheckReport grad_check(CellKind kind, const GradCheckDims &dims, std::uint64_t seed,
                           Activation candidate = Activation::Relu,
                           Activation output = Activation::Identity);

} // namespace birnn
