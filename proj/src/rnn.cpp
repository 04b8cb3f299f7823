// SPDX-License-Identifier: Apache-2.0
/**
 * @file   rnn.cpp
 * @brief  Bidirectional recurrent forward pass and weight container.
 */
#include <birnn/rnn.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include <birnn/binary_io.hpp>
#include <birnn/rnn_detail.hpp>

namespace birnn {

int gate_count(CellKind kind) {
  switch (kind) {
  case CellKind::SRNN: return 1;
  case CellKind::LSTM: return 4;
  case CellKind::GRU: return 3;
  }
  throw std::invalid_argument("gate_count: invalid cell kind");
}

std::string to_string(CellKind kind) {
  switch (kind) {
  case CellKind::SRNN: return "srnn";
  case CellKind::LSTM: return "lstm";
  case CellKind::GRU: return "gru";
  }
  return "?";
}

CellKind parse_cell_kind(std::string_view name) {
  if (name == "srnn" || name == "SRNN" || name == "rnn")
    return CellKind::SRNN;
  if (name == "lstm" || name == "LSTM")
    return CellKind::LSTM;
  if (name == "gru" || name == "GRU")
    return CellKind::GRU;
  throw std::invalid_argument("unknown cell kind: " + std::string(name));
}

std::string to_string(Activation a) {
  switch (a) {
  case Activation::Identity: return "identity";
  case Activation::Tanh: return "tanh";
  case Activation::Relu: return "relu";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "identity" || name == "linear" || name == "none")
    return Activation::Identity;
  if (name == "tanh")
    return Activation::Tanh;
  if (name == "relu")
    return Activation::Relu;
  throw std::invalid_argument("unknown activation: " + std::string(name));
}

// ---------------------------------------------------------------------------
// Weights

namespace {

CellWeights cell_zeros(const ModelShape &s) {
  const int g = gate_count(s.kind) * s.hidden;
  return {Matrix::Zero(g, s.input_size), Matrix::Zero(g, s.hidden), Vector::Zero(g)};
}

template <typename T> std::span<T> span_of(auto &m) {
  return std::span<T>(m.data(), static_cast<std::size_t>(m.size()));
}

} // namespace

BiRnnWeights BiRnnWeights::zeros(const ModelShape &shape) {
  BiRnnWeights w;
  w.fwd = cell_zeros(shape);
  w.bwd = cell_zeros(shape);
  w.w_out = Matrix::Zero(shape.output_size(), 2 * shape.hidden);
  w.b_out = Vector::Zero(shape.output_size());
  return w;
}

std::vector<TensorView> BiRnnWeights::tensors() {
  return {{"fwd.wx", span_of<double>(fwd.wx)}, {"fwd.wh", span_of<double>(fwd.wh)},
          {"fwd.b", span_of<double>(fwd.b)},   {"bwd.wx", span_of<double>(bwd.wx)},
          {"bwd.wh", span_of<double>(bwd.wh)}, {"bwd.b", span_of<double>(bwd.b)},
          {"w_out", span_of<double>(w_out)},   {"b_out", span_of<double>(b_out)}};
}

std::vector<ConstTensorView> BiRnnWeights::tensors() const {
  return {{"fwd.wx", span_of<const double>(fwd.wx)}, {"fwd.wh", span_of<const double>(fwd.wh)},
          {"fwd.b", span_of<const double>(fwd.b)},   {"bwd.wx", span_of<const double>(bwd.wx)},
          {"bwd.wh", span_of<const double>(bwd.wh)}, {"bwd.b", span_of<const double>(bwd.b)},
          {"w_out", span_of<const double>(w_out)},   {"b_out", span_of<const double>(b_out)}};
}

std::size_t BiRnnWeights::parameter_count() const {
  std::size_t n = 0;
  for (const auto &t : tensors())
    n += t.data.size();
  return n;
}

bool BiRnnWeights::all_finite() const {
  for (const auto &t : tensors())
    for (double v : t.data)
      if (!std::isfinite(v))
        return false;
  return true;
}

RnnModel RnnModel::zeros(const ModelShape &shape) {
  RnnModel m;
  m.shape = shape;
  m.weights = BiRnnWeights::zeros(shape);
  m.validate();
  return m;
}

RnnModel RnnModel::glorot(const ModelShape &shape, std::uint64_t seed) {
  RnnModel m = zeros(shape);
  Rng rng = make_stream({seed, 0x1417});
  auto fill = [&rng](Matrix &w) {
    const double a = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> u(-a, a);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        w(i, j) = u(rng);
  };
  for (CellWeights *cw : {&m.weights.fwd, &m.weights.bwd}) {
    fill(cw->wx);
    fill(cw->wh);
    if (shape.kind == CellKind::LSTM)
      cw->b.segment(shape.hidden, shape.hidden).setOnes();
  }
  fill(m.weights.w_out);
  return m;
}

void RnnModel::validate() const {
  const ModelShape &s = shape;
  if (s.hidden <= 0 || s.input_size <= 0 || s.k_on <= 0 || s.frame_length <= 0)
    throw std::invalid_argument("RnnModel: dimensions must be positive");
  if (s.candidate == Activation::Identity && s.kind != CellKind::SRNN)
    throw std::invalid_argument("RnnModel: gated cells need a tanh or relu candidate");
  const Eigen::Index g = static_cast<Eigen::Index>(gate_count(s.kind)) * s.hidden;
  for (const CellWeights *cw : {&weights.fwd, &weights.bwd})
    if (cw->wx.rows() != g || cw->wx.cols() != s.input_size || cw->wh.rows() != g ||
        cw->wh.cols() != s.hidden || cw->b.size() != g)
      throw std::invalid_argument("RnnModel: cell weight shapes inconsistent with " +
                                  to_string(s.kind));
  if (weights.w_out.rows() != s.output_size() || weights.w_out.cols() != 2 * s.hidden ||
      weights.b_out.size() != s.output_size())
    throw std::invalid_argument("RnnModel: output projection shape inconsistent");
}

namespace {
constexpr char kWeightMagic[5] = "BRNW";
constexpr std::uint32_t kWeightVersion = 1;
} // namespace

void RnnModel::save(const std::filesystem::path &path) const {
  validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot write weight file " + path.string());
  io::write_magic(out, kWeightMagic);
  io::write_u32(out, kWeightVersion);
  io::write_u32(out, static_cast<std::uint32_t>(shape.kind));
  io::write_u32(out, static_cast<std::uint32_t>(shape.hidden));
  io::write_u32(out, static_cast<std::uint32_t>(shape.input_size));
  io::write_u32(out, static_cast<std::uint32_t>(shape.k_on));
  io::write_u32(out, static_cast<std::uint32_t>(shape.frame_length));
  io::write_u32(out, static_cast<std::uint32_t>(shape.candidate));
  io::write_u32(out, static_cast<std::uint32_t>(shape.output));
  for (const auto &t : weights.tensors())
    io::write_f64s(out, t.data);
}

RnnModel RnnModel::load(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open weight file " + path.string());
  io::expect_magic(in, kWeightMagic, path.string());
  const std::uint32_t version = io::read_u32(in);
  if (version != kWeightVersion)
    throw std::runtime_error(path.string() + ": unsupported weight file version " +
                             std::to_string(version));
  ModelShape s;
  const std::uint32_t kind = io::read_u32(in);
  if (kind > 2)
    throw std::runtime_error(path.string() + ": invalid cell kind");
  s.kind = static_cast<CellKind>(kind);
  s.hidden = static_cast<int>(io::read_u32(in));
  s.input_size = static_cast<int>(io::read_u32(in));
  s.k_on = static_cast<int>(io::read_u32(in));
  s.frame_length = static_cast<int>(io::read_u32(in));
  const std::uint32_t cand = io::read_u32(in);
  const std::uint32_t outp = io::read_u32(in);
  if (cand > 2 || outp > 2)
    throw std::runtime_error(path.string() + ": invalid activation code");
  s.candidate = static_cast<Activation>(cand);
  s.output = static_cast<Activation>(outp);
  RnnModel m = zeros(s);
  for (auto &t : m.weights.tensors())
    io::read_f64s(in, t.data);
  if (in.peek() != std::char_traits<char>::eof())
    throw std::runtime_error(path.string() + ": trailing bytes after weights");
  return m;
}

std::string RnnModel::metadata_json() const {
  nlohmann::json j;
  j["format"] = "BRNW";
  j["version"] = kWeightVersion;
  j["cell"] = to_string(shape.kind);
  j["hidden"] = shape.hidden;
  j["input_size"] = shape.input_size;
  j["k_on"] = shape.k_on;
  j["frame_length"] = shape.frame_length;
  j["candidate_activation"] = to_string(shape.candidate);
  j["output_activation"] = to_string(shape.output);
  j["parameters"] = weights.parameter_count();
  auto order = nlohmann::json::array();
  for (const auto &t : weights.tensors())
    order.push_back({{"name", t.name}, {"size", t.data.size()}});
  j["tensor_order"] = order;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Forward

namespace detail {

void activate(Activation a, Eigen::Ref<Matrix> m) {
  switch (a) {
  case Activation::Identity: break;
  case Activation::Tanh: m = m.array().tanh().matrix(); break;
  case Activation::Relu: m = m.cwiseMax(0.0); break;
  }
}

Matrix activation_grad(Activation a, const Eigen::Ref<const Matrix> &y) {
  switch (a) {
  case Activation::Identity: return Matrix::Ones(y.rows(), y.cols());
  case Activation::Tanh: return (1.0 - y.array().square()).matrix();
  case Activation::Relu: return (y.array() > 0.0).cast<double>().matrix();
  }
  throw std::invalid_argument("activation_grad: invalid activation");
}

void sigmoid(Eigen::Ref<Matrix> m) { m = (1.0 / (1.0 + (-m.array()).exp())).matrix(); }

StepResult step_forward(CellKind kind, const CellWeights &w, Activation act, const Matrix *x_pre,
                        const Eigen::Ref<const Matrix> &h_prev,
                        const Eigen::Ref<const Matrix> &c_prev) {
  const Eigen::Index q = h_prev.rows();
  const Eigen::Index batch = h_prev.cols();
  StepResult r;
  // Input contribution plus bias.
  Matrix a = x_pre ? Matrix(*x_pre) : Matrix::Zero(w.wx.rows(), batch);
  a.colwise() += w.b;

  switch (kind) {
  case CellKind::SRNN: {
    a.noalias() += w.wh * h_prev;
    activate(act, a);
    r.h = a;
    r.gates = std::move(a);
    break;
  }
  case CellKind::GRU: {
    a.topRows(2 * q).noalias() += w.wh.topRows(2 * q) * h_prev;
    sigmoid(a.topRows(2 * q));
    const Matrix rh = a.middleRows(q, q).cwiseProduct(h_prev);
    a.bottomRows(q).noalias() += w.wh.bottomRows(q) * rh;
    activate(act, a.bottomRows(q));
    const auto z = a.topRows(q).array();
    r.h = (h_prev.array() + z * (a.bottomRows(q).array() - h_prev.array())).matrix();
    r.gates = std::move(a);
    break;
  }
  case CellKind::LSTM: {
    a.noalias() += w.wh * h_prev;
    sigmoid(a.topRows(3 * q));
    activate(act, a.bottomRows(q));
    const auto i = a.topRows(q).array();
    const auto f = a.middleRows(q, q).array();
    const auto g = a.bottomRows(q).array();
    r.c = (f * c_prev.array() + i * g).matrix();
    r.s = r.c;
    activate(act, r.s);
    r.h = (a.middleRows(2 * q, q).array() * r.s.array()).matrix();
    r.gates = std::move(a);
    break;
  }
  }
  return r;
}

void scan_direction(const RnnModel &model, const CellWeights &w, const SequenceBatch &in,
                    const std::vector<bool> &zero_step, bool reverse, DirectionCache &cache) {
  const ModelShape &s = model.shape;
  const Eigen::Index q = s.hidden;
  const Eigen::Index batch = in.batch;
  const Eigen::Index total = static_cast<Eigen::Index>(in.steps) * batch;
  const bool lstm = s.kind == CellKind::LSTM;
  cache.h.resize(q, total);
  cache.gates.resize(gate_count(s.kind) * q, total);
  if (lstm) {
    cache.c.resize(q, total);
    cache.s.resize(q, total);
  }
  const Matrix zeros = Matrix::Zero(q, batch);
  Matrix x_pre;
  for (int n = 0; n < in.steps; ++n) {
    const int t = reverse ? in.steps - 1 - n : n;
    const int prev = reverse ? t + 1 : t - 1;
    const bool has_prev = n > 0;
    const Matrix *xp = nullptr;
    if (!zero_step[static_cast<std::size_t>(t)]) {
      x_pre.noalias() = w.wx * in.step(t);
      xp = &x_pre;
    }
    const auto cols = [&](Matrix &m, int step) { return m.middleCols(step * batch, batch); };
    StepResult r = has_prev
                     ? step_forward(s.kind, w, s.candidate, xp, cols(cache.h, prev),
                                    lstm ? Eigen::Ref<const Matrix>(cols(cache.c, prev))
                                         : Eigen::Ref<const Matrix>(zeros))
                     : step_forward(s.kind, w, s.candidate, xp, zeros, zeros);
    cols(cache.h, t) = r.h;
    cols(cache.gates, t) = r.gates;
    if (lstm) {
      cols(cache.c, t) = r.c;
      cols(cache.s, t) = r.s;
    }
  }
}

} // namespace detail

CellState cell_step(CellKind kind, const CellWeights &w, Activation act, const Vector &x,
                    const CellState &state) {
  if (x.size() != w.wx.cols() || state.h.size() != w.wh.cols())
    throw std::invalid_argument("cell_step: shape mismatch");
  if (!x.allFinite() || !state.h.allFinite())
    throw std::invalid_argument("cell_step: non-finite input");
  const Eigen::Index q = state.h.size();
  const Vector c_prev = kind == CellKind::LSTM
                          ? (state.c.size() == q ? state.c : Vector(Vector::Zero(q)))
                          : Vector(Vector::Zero(q));
  const Matrix x_pre = w.wx * x;
  const detail::StepResult r = detail::step_forward(kind, w, act, &x_pre, state.h, c_prev);
  CellState out;
  out.h = r.h.col(0);
  if (kind == CellKind::LSTM)
    out.c = r.c.col(0);
  return out;
}

SequenceBatch pack_batch(std::span<const Matrix *const> samples) {
  if (samples.empty())
    throw std::invalid_argument("pack_batch: empty batch");
  const Eigen::Index rows = samples.front()->rows();
  const Eigen::Index steps = samples.front()->cols();
  SequenceBatch b;
  b.steps = static_cast<int>(steps);
  b.batch = static_cast<int>(samples.size());
  b.x.resize(rows, steps * b.batch);
  for (std::size_t n = 0; n < samples.size(); ++n) {
    const Matrix &m = *samples[n];
    if (m.rows() != rows || m.cols() != steps)
      throw std::invalid_argument("pack_batch: samples differ in shape");
    for (Eigen::Index t = 0; t < steps; ++t)
      b.x.col(t * b.batch + static_cast<Eigen::Index>(n)) = m.col(t);
  }
  return b;
}

SequenceBatch pack_batch(const Matrix &sample) {
  const Matrix *p = &sample;
  return pack_batch(std::span<const Matrix *const>(&p, 1));
}

Matrix unpack_sample(const Matrix &packed, int steps, int batch, int b) {
  Matrix out(packed.rows(), steps);
  for (int t = 0; t < steps; ++t)
    out.col(t) = packed.col(static_cast<Eigen::Index>(t) * batch + b);
  return out;
}

SequenceActivations birnn_forward_batch(const RnnModel &model, SequenceBatch input) {
  const ModelShape &s = model.shape;
  if (input.x.rows() != s.input_size)
    throw std::invalid_argument("birnn_forward: input has " + std::to_string(input.x.rows()) +
                                " features, model expects " + std::to_string(s.input_size));
  if (input.steps < 1 || input.batch < 1 ||
      input.x.cols() != static_cast<Eigen::Index>(input.steps) * input.batch)
    throw std::invalid_argument("birnn_forward: malformed batch");

  SequenceActivations act;
  act.model = &model;
  act.revision = model.revision;
  act.zero_step.resize(static_cast<std::size_t>(input.steps));
  for (int t = 0; t < input.steps; ++t)
    act.zero_step[static_cast<std::size_t>(t)] = input.step(t).isZero(0.0);
  act.input = std::move(input);

  detail::scan_direction(model, model.weights.fwd, act.input, act.zero_step, false, act.fwd);
  detail::scan_direction(model, model.weights.bwd, act.input, act.zero_step, true, act.bwd);

  const Eigen::Index q = s.hidden;
  act.output.noalias() = model.weights.w_out.leftCols(q) * act.fwd.h;
  act.output.noalias() += model.weights.w_out.rightCols(q) * act.bwd.h;
  act.output.colwise() += model.weights.b_out;
  detail::activate(s.output, act.output);
  return act;
}

Matrix birnn_forward(const RnnModel &model, const Matrix &h_in) {
  // With batch 1 the packed layout is the frame itself.
  return birnn_forward_batch(model, pack_batch(h_in)).output;
}

CMatrix estimate_channel(const RnnModel &model, const EstimatorInput &input) {
  if (input.h_in.rows() != model.shape.input_size ||
      input.h_in.rows() != 2 * static_cast<Eigen::Index>(model.shape.k_on))
    throw std::invalid_argument("estimate_channel: input rows do not match the model");
  return unstack_real(birnn_forward(model, input.h_in));
}

} // namespace birnn
