// SPDX-License-Identifier: Apache-2.0
/**
 * @file   training.cpp
 * @brief  BPTT for the bidirectional cells, ADAM, dataset I/O and the
 *         training loop.
 */
#include <birnn/training.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include <birnn/binary_io.hpp>
#include <birnn/estimators.hpp>
#include <birnn/link.hpp>
#include <birnn/parallel.hpp>
#include <birnn/rnn_detail.hpp>

namespace birnn {

// ---------------------------------------------------------------------------
// Dataset

Matrix Dataset::input(std::size_t n) const {
  Matrix x = Matrix::Zero(2 * meta.k_on, meta.frame_length);
  for (std::size_t q = 0; q < meta.pilot_indices.size(); ++q)
    x.col(meta.pilot_indices[q]) = pilot_inputs[n].col(static_cast<Eigen::Index>(q));
  return x;
}

namespace {
constexpr char kDatasetMagic[5] = "BRDS";
constexpr std::uint32_t kDatasetVersion = 1;
} // namespace

void Dataset::save(const std::filesystem::path &path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot write dataset " + path.string());
  io::write_magic(out, kDatasetMagic);
  io::write_u32(out, kDatasetVersion);
  io::write_u64(out, size());
  io::write_u32(out, static_cast<std::uint32_t>(meta.k_on));
  io::write_u32(out, static_cast<std::uint32_t>(meta.frame_length));
  io::write_u32(out, static_cast<std::uint32_t>(meta.pilot_indices.size()));
  for (int p : meta.pilot_indices)
    io::write_u32(out, static_cast<std::uint32_t>(p));
  io::write_u32(out, static_cast<std::uint32_t>(meta.scenario));
  io::write_u32(out, static_cast<std::uint32_t>(meta.modulation));
  io::write_f64(out, meta.doppler_hz);
  io::write_f64(out, meta.symbol_duration_s);
  io::write_f64(out, meta.snr_db);
  io::write_u32(out, static_cast<std::uint32_t>(meta.channel_length));
  io::write_u32(out, static_cast<std::uint32_t>(meta.basis_length));
  io::write_u64(out, meta.seed);
  for (std::size_t n = 0; n < size(); ++n) {
    io::write_f64s(out, {pilot_inputs[n].data(), static_cast<std::size_t>(pilot_inputs[n].size())});
    io::write_f64s(out, {targets[n].data(), static_cast<std::size_t>(targets[n].size())});
  }
}

Dataset Dataset::load(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open dataset " + path.string());
  io::expect_magic(in, kDatasetMagic, path.string());
  if (const auto v = io::read_u32(in); v != kDatasetVersion)
    throw std::runtime_error(path.string() + ": unsupported dataset version " + std::to_string(v));
  Dataset d;
  const std::uint64_t count = io::read_u64(in);
  d.meta.k_on = static_cast<int>(io::read_u32(in));
  d.meta.frame_length = static_cast<int>(io::read_u32(in));
  const std::uint32_t p = io::read_u32(in);
  if (d.meta.k_on <= 0 || d.meta.frame_length <= 0 || p == 0 ||
      p > static_cast<std::uint32_t>(d.meta.frame_length))
    throw std::runtime_error(path.string() + ": corrupt dataset header");
  for (std::uint32_t q = 0; q < p; ++q)
    d.meta.pilot_indices.push_back(static_cast<int>(io::read_u32(in)));
  const std::uint32_t sc = io::read_u32(in);
  const std::uint32_t mod = io::read_u32(in);
  if (sc > 2 || mod > 1)
    throw std::runtime_error(path.string() + ": corrupt dataset header");
  d.meta.scenario = static_cast<Mobility>(sc);
  d.meta.modulation = static_cast<Modulation>(mod);
  d.meta.doppler_hz = io::read_f64(in);
  d.meta.symbol_duration_s = io::read_f64(in);
  d.meta.snr_db = io::read_f64(in);
  d.meta.channel_length = static_cast<int>(io::read_u32(in));
  d.meta.basis_length = static_cast<int>(io::read_u32(in));
  d.meta.seed = io::read_u64(in);
  const Eigen::Index rows = 2 * static_cast<Eigen::Index>(d.meta.k_on);
  d.pilot_inputs.reserve(count);
  d.targets.reserve(count);
  for (std::uint64_t n = 0; n < count; ++n) {
    Matrix x(rows, static_cast<Eigen::Index>(p));
    Matrix y(rows, d.meta.frame_length);
    io::read_f64s(in, {x.data(), static_cast<std::size_t>(x.size())});
    io::read_f64s(in, {y.data(), static_cast<std::size_t>(y.size())});
    d.pilot_inputs.push_back(std::move(x));
    d.targets.push_back(std::move(y));
  }
  return d;
}

std::string Dataset::metadata_json() const {
  nlohmann::json j;
  j["format"] = "BRDS";
  j["version"] = kDatasetVersion;
  j["count"] = size();
  j["k_on"] = meta.k_on;
  j["frame_length"] = meta.frame_length;
  j["pilot_indices"] = meta.pilot_indices;
  j["scenario"] = to_string(meta.scenario);
  j["modulation"] = to_string(meta.modulation);
  j["doppler_hz"] = meta.doppler_hz;
  j["symbol_duration_s"] = meta.symbol_duration_s;
  j["snr_db"] = meta.snr_db;
  j["channel_length"] = meta.channel_length;
  j["basis_length"] = meta.basis_length;
  j["seed"] = meta.seed;
  return j.dump(2);
}

Dataset generate_dataset(const DatasetSpec &spec) {
  if (spec.frames <= 0)
    throw std::invalid_argument("generate_dataset: frame count must be positive");
  const ScenarioParams sp = scenario(spec.scenario);
  ChannelProfile profile = spec.profile;
  profile.doppler_hz = sp.doppler_hz;
  const LinkSetup link =
    LinkSetup::make(profile, spec.frame_length, sp.pilot_count, spec.modulation, spec.basis_length);

  Dataset d;
  d.meta.k_on = profile.k_on();
  d.meta.frame_length = spec.frame_length;
  d.meta.pilot_indices = link.pilots.pilot_indices;
  d.meta.scenario = spec.scenario;
  d.meta.modulation = spec.modulation;
  d.meta.doppler_hz = profile.doppler_hz;
  d.meta.symbol_duration_s = profile.symbol_duration_s;
  d.meta.snr_db = spec.snr_db;
  d.meta.channel_length = profile.length();
  d.meta.basis_length = link.basis.length();
  d.meta.seed = spec.seed;

  const auto n = static_cast<std::size_t>(spec.frames);
  d.pilot_inputs.resize(n);
  d.targets.resize(n);
  parallel_for(n, spec.workers, [&](std::size_t f) {
    Rng frame_rng = make_stream({spec.seed, f, 1});
    Rng noise_rng = make_stream({spec.seed, f, 2});
    const FrameTrial trial = simulate_frame(link, spec.snr_db, frame_rng, noise_rng);
    const PilotEstimates est =
      estimate_pilots(trial.received, link.pilots, PilotMethod::ALS, &link.basis);
    d.pilot_inputs[f] = stack_real(est.h_hat);
    d.targets[f] = stack_real(trial.channel.H);
  });
  return d;
}

// ---------------------------------------------------------------------------
// Loss and gradients

double mse_loss(const Matrix &pred, const Matrix &target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw std::invalid_argument("mse_loss: shape mismatch");
  if (pred.size() == 0)
    throw std::invalid_argument("mse_loss: empty input");
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

namespace {

void backward_direction(const RnnModel &model, const CellWeights &w, const DirectionCache &cache,
                        const SequenceBatch &in, const std::vector<bool> &zero_step, bool reverse,
                        const Matrix &dh_out, CellWeights &grad) {
  const ModelShape &s = model.shape;
  const Eigen::Index q = s.hidden;
  const Eigen::Index batch = in.batch;
  const Eigen::Index total = static_cast<Eigen::Index>(in.steps) * batch;
  const Eigen::Index g = gate_count(s.kind) * q;

  Matrix d_pre(g, total);
  Matrix h_prev_all = Matrix::Zero(q, total);
  Matrix dh_next = Matrix::Zero(q, batch);
  Matrix dc_next = Matrix::Zero(q, batch);
  const Matrix zeros = Matrix::Zero(q, batch);

  auto block = [batch](const Matrix &m, int t) { return m.middleCols(t * batch, batch); };

  for (int n = in.steps - 1; n >= 0; --n) {
    const int t = reverse ? in.steps - 1 - n : n;
    const int prev = reverse ? t + 1 : t - 1;
    const bool has_prev = n > 0;
    const Matrix hp = has_prev ? Matrix(block(cache.h, prev)) : zeros;
    if (has_prev)
      h_prev_all.middleCols(t * batch, batch) = hp;

    const Matrix dh = block(dh_out, t) + dh_next;
    const auto gates = block(cache.gates, t);
    auto da = d_pre.middleCols(t * batch, batch);

    switch (s.kind) {
    case CellKind::SRNN: {
      da = dh.cwiseProduct(detail::activation_grad(s.candidate, gates));
      dh_next.noalias() = w.wh.transpose() * da;
      break;
    }
    case CellKind::GRU: {
      const auto z = gates.topRows(q).array();
      const auto r = gates.middleRows(q, q).array();
      const auto c = gates.bottomRows(q);
      const Matrix dc = (dh.array() * z).matrix();
      da.bottomRows(q) = dc.cwiseProduct(detail::activation_grad(s.candidate, c));
      const Matrix drh = w.wh.bottomRows(q).transpose() * da.bottomRows(q);
      da.topRows(q) = (dh.array() * (c.array() - hp.array()) * z * (1.0 - z)).matrix();
      da.middleRows(q, q) = (drh.array() * hp.array() * r * (1.0 - r)).matrix();
      Matrix dhp = (dh.array() * (1.0 - z) + drh.array() * r).matrix();
      dhp.noalias() += w.wh.topRows(2 * q).transpose() * da.topRows(2 * q);
      dh_next = std::move(dhp);
      break;
    }
    case CellKind::LSTM: {
      const auto i = gates.topRows(q).array();
      const auto f = gates.middleRows(q, q).array();
      const auto o = gates.middleRows(2 * q, q).array();
      const auto gg = gates.bottomRows(q);
      const auto st = block(cache.s, t);
      const Matrix cp = has_prev ? Matrix(block(cache.c, prev)) : zeros;
      const Matrix dc =
        dc_next + (dh.array() * o).matrix().cwiseProduct(detail::activation_grad(s.candidate, st));
      da.topRows(q) = (dc.array() * gg.array() * i * (1.0 - i)).matrix();
      da.middleRows(q, q) = (dc.array() * cp.array() * f * (1.0 - f)).matrix();
      da.middleRows(2 * q, q) = (dh.array() * st.array() * o * (1.0 - o)).matrix();
      da.bottomRows(q) =
        (dc.array() * i).matrix().cwiseProduct(detail::activation_grad(s.candidate, gg));
      dc_next = (dc.array() * f).matrix();
      dh_next.noalias() = w.wh.transpose() * da;
      break;
    }
    }
  }

  grad.b += d_pre.rowwise().sum();
  for (int t = 0; t < in.steps; ++t)
    if (!zero_step[static_cast<std::size_t>(t)])
      grad.wx.noalias() += block(d_pre, t) * in.step(t).transpose();
  if (s.kind == CellKind::GRU) {
    grad.wh.topRows(2 * q).noalias() += d_pre.topRows(2 * q) * h_prev_all.transpose();
    const Matrix rh = cache.gates.middleRows(q, q).cwiseProduct(h_prev_all);
    grad.wh.bottomRows(q).noalias() += d_pre.bottomRows(q) * rh.transpose();
  } else {
    grad.wh.noalias() += d_pre * h_prev_all.transpose();
  }
}

} // namespace

Gradients backward(const RnnModel &model, const SequenceActivations &act, const Matrix &output_grad) {
  if (act.model != &model || act.revision != model.revision)
    throw std::logic_error("backward: activation cache is stale (model changed since forward)");
  if (output_grad.rows() != act.output.rows() || output_grad.cols() != act.output.cols())
    throw std::invalid_argument("backward: output gradient shape mismatch");

  const Eigen::Index q = model.shape.hidden;
  Gradients g = BiRnnWeights::zeros(model.shape);

  Matrix dy = output_grad;
  if (model.shape.output != Activation::Identity)
    dy = dy.cwiseProduct(detail::activation_grad(model.shape.output, act.output));

  g.w_out.leftCols(q).noalias() = dy * act.fwd.h.transpose();
  g.w_out.rightCols(q).noalias() = dy * act.bwd.h.transpose();
  g.b_out = dy.rowwise().sum();
  const Matrix dhf = model.weights.w_out.leftCols(q).transpose() * dy;
  const Matrix dhb = model.weights.w_out.rightCols(q).transpose() * dy;

  backward_direction(model, model.weights.fwd, act.fwd, act.input, act.zero_step, false, dhf, g.fwd);
  backward_direction(model, model.weights.bwd, act.bwd, act.input, act.zero_step, true, dhb, g.bwd);
  return g;
}

// ---------------------------------------------------------------------------
// ADAM

AdamState AdamState::zeros(const BiRnnWeights &like) {
  AdamState s;
  for (const auto &t : like.tensors()) {
    s.m.push_back(Vector::Zero(static_cast<Eigen::Index>(t.data.size())));
    s.v.push_back(Vector::Zero(static_cast<Eigen::Index>(t.data.size())));
  }
  return s;
}

void adam_step(BiRnnWeights &weights, const Gradients &grads, AdamState &state,
               const AdamHyper &hyper) {
  auto w = weights.tensors();
  const auto g = grads.tensors();
  if (state.m.size() != w.size() || g.size() != w.size())
    throw std::invalid_argument("adam_step: optimizer state does not match the weights");
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g[k].data.size() != w[k].data.size())
      throw std::invalid_argument("adam_step: gradient shape mismatch for " + g[k].name);
    for (std::size_t e = 0; e < g[k].data.size(); ++e)
      if (!std::isfinite(g[k].data[e]))
        throw std::domain_error("adam_step: non-finite gradient in " + g[k].name + "[" +
                                std::to_string(e) + "] = " + std::to_string(g[k].data[e]));
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t k = 0; k < w.size(); ++k) {
    double *wp = w[k].data.data();
    const double *gp = g[k].data.data();
    double *mp = state.m[k].data();
    double *vp = state.v[k].data();
    for (std::size_t e = 0; e < w[k].data.size(); ++e) {
      mp[e] = hyper.beta1 * mp[e] + (1.0 - hyper.beta1) * gp[e];
      vp[e] = hyper.beta2 * vp[e] + (1.0 - hyper.beta2) * gp[e] * gp[e];
      const double m_hat = mp[e] / c1;
      const double v_hat = vp[e] / c2;
      wp[e] -= hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
    }
  }
}

void adam_step(RnnModel &model, const Gradients &grads, AdamState &state, const AdamHyper &hyper) {
  adam_step(model.weights, grads, state, hyper);
  ++model.revision;
}

// ---------------------------------------------------------------------------
// Training loop

namespace {

struct PackedBatch {
  SequenceBatch x;
  Matrix target;
};

PackedBatch pack(const Dataset &data, std::span<const std::size_t> ids) {
  const int steps = data.meta.frame_length;
  const auto b = static_cast<Eigen::Index>(ids.size());
  const Eigen::Index rows = 2 * static_cast<Eigen::Index>(data.meta.k_on);
  PackedBatch p;
  p.x.steps = steps;
  p.x.batch = static_cast<int>(b);
  p.x.x = Matrix::Zero(rows, steps * b);
  p.target.resize(rows, steps * b);
  for (Eigen::Index n = 0; n < b; ++n) {
    const std::size_t id = ids[static_cast<std::size_t>(n)];
    for (std::size_t q = 0; q < data.meta.pilot_indices.size(); ++q)
      p.x.x.col(data.meta.pilot_indices[q] * b + n) =
        data.pilot_inputs[id].col(static_cast<Eigen::Index>(q));
    for (int t = 0; t < steps; ++t)
      p.target.col(t * b + n) = data.targets[id].col(t);
  }
  return p;
}

void check_compatible(const RnnModel &model, const Dataset &data) {
  if (data.size() == 0)
    throw std::invalid_argument("train: dataset is empty");
  if (model.shape.input_size != 2 * data.meta.k_on || model.shape.k_on != data.meta.k_on)
    throw std::invalid_argument("train: model expects K_on = " + std::to_string(model.shape.k_on) +
                                ", dataset has " + std::to_string(data.meta.k_on));
}

} // namespace

double evaluate_mse(const RnnModel &model, const Dataset &data, int batch_size) {
  check_compatible(model, data);
  std::vector<std::size_t> ids(data.size());
  std::iota(ids.begin(), ids.end(), 0);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t start = 0; start < ids.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(ids.size(), start + static_cast<std::size_t>(batch_size));
    PackedBatch p = pack(data, std::span(ids).subspan(start, end - start));
    const SequenceActivations act = birnn_forward_batch(model, std::move(p.x));
    sum += (act.output - p.target).squaredNorm();
    count += static_cast<std::size_t>(p.target.size());
  }
  return sum / static_cast<double>(count);
}

TrainResult train(RnnModel init, const Dataset &train_set, const Dataset *val_set,
                  const TrainingConfig &cfg, const EpochCallback &on_epoch) {
  if (cfg.epochs <= 0 || cfg.batch_size <= 0)
    throw std::invalid_argument("train: epochs and batch size must be positive");
  check_compatible(init, train_set);
  if (val_set != nullptr && val_set->size() > 0)
    check_compatible(init, *val_set);
  else
    val_set = nullptr;

  TrainResult result;
  RnnModel model = std::move(init);
  model.validate();
  AdamState state = AdamState::zeros(model.weights);
  double best = std::numeric_limits<double>::infinity();
  result.model = model;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  const auto bs = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffler = make_stream({cfg.seed, static_cast<std::uint64_t>(epoch), 0x5f});
    std::shuffle(order.begin(), order.end(), shuffler);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      PackedBatch p = pack(train_set, std::span(order).subspan(start, end - start));
      const SequenceActivations act = birnn_forward_batch(model, std::move(p.x));
      const Matrix diff = act.output - p.target;
      const double loss = diff.squaredNorm() / static_cast<double>(diff.size());
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "training diverged at epoch " << epoch << " (batch loss " << loss << ")";
        throw TrainingDiverged(msg.str(), result.history);
      }
      loss_sum += loss * static_cast<double>(end - start);

      Gradients g = backward(model, act, (2.0 / static_cast<double>(diff.size())) * diff);
      if (cfg.clip_norm > 0.0) {
        double sq = 0.0;
        for (const auto &t : std::as_const(g).tensors())
          for (double v : t.data)
            sq += v * v;
        const double norm = std::sqrt(sq);
        if (norm > cfg.clip_norm)
          for (auto &t : g.tensors())
            for (double &v : t.data)
              v *= cfg.clip_norm / norm;
      }
      adam_step(model, g, state, cfg.adam);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_mse = loss_sum / static_cast<double>(order.size());
    rec.val_mse = val_set ? evaluate_mse(model, *val_set, cfg.batch_size) : rec.train_mse;
    if (!std::isfinite(rec.val_mse)) {
      result.history.push_back(rec);
      throw TrainingDiverged("validation loss is not finite at epoch " + std::to_string(epoch),
                             result.history);
    }
    result.history.push_back(rec);
    if (rec.val_mse < best) {
      best = rec.val_mse;
      result.model = model;
      result.best_epoch = epoch;
    }
    if (on_epoch)
      on_epoch(rec);
  }
  return result;
}

void write_history_csv(const std::vector<EpochRecord> &history, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  out << "epoch,train_mse,val_mse\n";
  out.precision(17);
  for (const EpochRecord &r : history)
    out << r.epoch << ',' << r.train_mse << ',' << r.val_mse << '\n';
}

// ---------------------------------------------------------------------------
// Gradient check

GradCheckReport grad_check(CellKind kind, const GradCheckDims &dims, std::uint64_t seed,
                           Activation candidate, Activation output) {
  if (dims.input_size % 2 != 0)
    throw std::invalid_argument("grad_check: input size must be even (real-stacked)");
  ModelShape shape;
  shape.kind = kind;
  shape.hidden = dims.hidden;
  shape.input_size = dims.input_size;
  shape.k_on = dims.input_size / 2;
  shape.frame_length = dims.steps;
  shape.candidate = candidate;
  shape.output = output;

  RnnModel model = RnnModel::glorot(shape, seed);
  Rng rng = make_stream({seed, 0x6c});
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> small(-0.5, 0.5);
  for (auto &t : model.weights.tensors())
    if (t.name.ends_with(".b") || t.name == "b_out")
      for (double &v : t.data)
        v += small(rng);

  SequenceBatch x;
  x.steps = dims.steps;
  x.batch = dims.batch;
  x.x.resize(dims.input_size, static_cast<Eigen::Index>(dims.steps) * dims.batch);
  for (Eigen::Index j = 0; j < x.x.size(); ++j)
    x.x.data()[j] = normal(rng);
  // One all-zero step exercises the skipped input projection.
  if (dims.steps > 2)
    x.step(dims.steps / 2).setZero();
  Matrix target(shape.output_size(), x.x.cols());
  for (Eigen::Index j = 0; j < target.size(); ++j)
    target.data()[j] = normal(rng);

  auto output_of = [&](const RnnModel &m) { return birnn_forward_batch(m, x).output; };

  const SequenceActivations act = birnn_forward_batch(model, x);
  const Gradients g =
    backward(model, act, (2.0 / static_cast<double>(target.size())) * (act.output - target));

  GradCheckReport report;
  const double h = kGradCheckStep;
  auto params = model.weights.tensors();
  const auto grads = g.tensors();
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t e = 0; e < params[k].data.size(); ++e) {
      double &w = params[k].data[e];
      const double saved = w;
      w = saved + h;
      const Matrix up = output_of(model);
      w = saved - h;
      const Matrix down = output_of(model);
      w = saved;
      const double diff =
        ((up - down).array() * (up + down - 2.0 * target).array()).sum() /
        static_cast<double>(target.size());
      const double numeric = diff / (2.0 * h);
      const double analytic = grads[k].data[e];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
      const double rel = std::abs(analytic - numeric) / denom;
      ++report.parameters;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_tensor = params[k].name;
        report.worst_index = e;
      }
    }
  }
  return report;
}

} // namespace birnn
