// SPDX-License-Identifier: Apache-2.0
/**
 * @file   test_rnn.cpp
 * @brief  Cell equations, bidirectional scan and the weight container.
 */
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include <birnn/rnn.hpp>

using namespace birnn;

namespace {

ModelShape toy(CellKind kind, Activation act = Activation::Relu) {
  ModelShape s;
  s.kind = kind;
  s.hidden = 3;
  s.input_size = 4;
  s.k_on = 2;
  s.frame_length = 6;
  s.candidate = act;
  return s;
}

void randomize(RnnModel &m, std::uint64_t seed) {
  Rng rng = make_stream({seed});
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  for (auto &t : m.weights.tensors())
    for (double &v : t.data)
      v = u(rng);
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  Rng rng = make_stream({seed});
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < m.size(); ++j)
    m.data()[j] = n(rng);
  return m;
}

double act(Activation a, double x) {
  return a == Activation::Relu ? std::max(x, 0.0) : a == Activation::Tanh ? std::tanh(x) : x;
}
double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Scalar-loop reference of one cell step from zero state.
Vector oracle_step(CellKind kind, const CellWeights &w, Activation a, const Vector &x) {
  const Eigen::Index q = w.wh.cols();
  auto pre = [&](Eigen::Index row) {
    double s = w.b[row];
    for (Eigen::Index j = 0; j < x.size(); ++j)
      s += w.wx(row, j) * x[j];
    return s; // recurrent term vanishes for a zero state
  };
  Vector h(q);
  for (Eigen::Index u = 0; u < q; ++u) {
    switch (kind) {
    case CellKind::SRNN: h[u] = act(a, pre(u)); break;
    case CellKind::GRU: {
      const double z = sig(pre(u));
      const double c = act(a, pre(2 * q + u));
      h[u] = z * c;
      break;
    }
    case CellKind::LSTM: {
      const double i = sig(pre(u)), o = sig(pre(2 * q + u));
      const double g = act(a, pre(3 * q + u));
      h[u] = o * act(a, i * g);
      break;
    }
    }
  }
  return h;
}

} // namespace

TEST_CASE("gate counts and names") {
  CHECK(gate_count(CellKind::SRNN) == 1);
  CHECK(gate_count(CellKind::LSTM) == 4);
  CHECK(gate_count(CellKind::GRU) == 3);
  CHECK(parse_cell_kind("gru") == CellKind::GRU);
  CHECK(parse_activation("relu") == Activation::Relu);
  CHECK_THROWS_AS(parse_cell_kind("transformer"), std::invalid_argument);
}

TEST_CASE("cell_step edge cases") {
  const ModelShape s = toy(CellKind::GRU);
  const RnnModel zero = RnnModel::zeros(s);
  const CellState st = cell_step(CellKind::GRU, zero.weights.fwd, Activation::Relu,
                                 Vector::Ones(4), {Vector::Zero(3), {}});
  CHECK(st.h.isZero(0.0));

  RnnModel m = RnnModel::zeros(toy(CellKind::SRNN));
  randomize(m, 1);
  m.weights.fwd.wh.setZero();
  const Vector x = random_matrix(4, 1, 2).col(0);
  const CellState a = cell_step(CellKind::SRNN, m.weights.fwd, Activation::Relu, x,
                                {Vector::Ones(3), {}});
  const Vector ff = (m.weights.fwd.wx * x + m.weights.fwd.b).cwiseMax(0.0);
  CHECK((a.h - ff).norm() < 1e-14);

  Vector bad = x;
  bad[1] = std::nan("");
  CHECK_THROWS_AS(cell_step(CellKind::SRNN, m.weights.fwd, Activation::Relu, bad,
                            {Vector::Zero(3), {}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(cell_step(CellKind::SRNN, m.weights.fwd, Activation::Relu, Vector::Zero(5),
                            {Vector::Zero(3), {}}),
                  std::invalid_argument);
}

TEST_CASE("single-step frame matches a scalar oracle") {
  for (CellKind k : {CellKind::SRNN, CellKind::LSTM, CellKind::GRU})
    for (Activation a : {Activation::Relu, Activation::Tanh}) {
      ModelShape s = toy(k, a);
      s.frame_length = 1;
      RnnModel m = RnnModel::zeros(s);
      randomize(m, 3);
      const Matrix x = random_matrix(4, 1, 4);
      const Vector hf = oracle_step(k, m.weights.fwd, a, x.col(0));
      const Vector hb = oracle_step(k, m.weights.bwd, a, x.col(0));
      Vector cat(6);
      cat << hf, hb;
      const Vector want = m.weights.w_out * cat + m.weights.b_out;
      CHECK((birnn_forward(m, x).col(0) - want).norm() < 1e-13);
    }
}

TEST_CASE("zero input and zero biases keep the state at zero") {
  for (CellKind k : {CellKind::SRNN, CellKind::LSTM, CellKind::GRU}) {
    RnnModel m = RnnModel::zeros(toy(k));
    randomize(m, 5);
    for (CellWeights *w : {&m.weights.fwd, &m.weights.bwd})
      w->b.setZero();
    const SequenceActivations act = birnn_forward_batch(m, pack_batch(Matrix::Zero(4, 6)));
    CHECK(act.fwd.h.isZero(0.0));
    CHECK(act.bwd.h.isZero(0.0));
  }
}

TEST_CASE("zero weights output the bias") {
  RnnModel m = RnnModel::zeros(toy(CellKind::GRU));
  m.weights.b_out << 0.1, -0.2, 0.3, 0.4;
  const Matrix y = birnn_forward(m, random_matrix(4, 6, 6));
  for (Eigen::Index i = 0; i < 6; ++i)
    CHECK(y.col(i) == m.weights.b_out);
}

TEST_CASE("reversal symmetry") {
  for (CellKind k : {CellKind::SRNN, CellKind::LSTM, CellKind::GRU}) {
    RnnModel m = RnnModel::zeros(toy(k, Activation::Tanh));
    randomize(m, 7);
    const Matrix x = random_matrix(4, 6, 8);
    const Matrix y = birnn_forward(m, x);

    RnnModel swapped = m;
    std::swap(swapped.weights.fwd, swapped.weights.bwd);
    const Eigen::Index q = m.shape.hidden;
    swapped.weights.w_out.leftCols(q) = m.weights.w_out.rightCols(q);
    swapped.weights.w_out.rightCols(q) = m.weights.w_out.leftCols(q);
    const Matrix yr = birnn_forward(swapped, x.rowwise().reverse());
    CHECK((yr.rowwise().reverse() - y).norm() < 1e-13);
  }
}

TEST_CASE("zero recurrent kernels give column-local outputs") {
  for (CellKind k : {CellKind::SRNN, CellKind::LSTM, CellKind::GRU}) {
    RnnModel m = RnnModel::zeros(toy(k));
    randomize(m, 9);
    m.weights.fwd.wh.setZero();
    m.weights.bwd.wh.setZero();
    Matrix x = random_matrix(4, 6, 10);
    const Matrix y = birnn_forward(m, x);
    if (k != CellKind::SRNN)
      continue; // gated cells still pass the state through (1 - z) or f
    x(2, 3) += 0.5;
    const Matrix y2 = birnn_forward(m, x);
    for (Eigen::Index i = 0; i < 6; ++i)
      if (i != 3)
        CHECK(y2.col(i) == y.col(i));
  }
}

TEST_CASE("tanh keeps hidden states bounded and the pass is deterministic") {
  RnnModel m = RnnModel::glorot(toy(CellKind::LSTM, Activation::Tanh), 11);
  randomize(m, 11);
  const Matrix x = 10.0 * random_matrix(4, 6, 12);
  const SequenceActivations a = birnn_forward_batch(m, pack_batch(x));
  CHECK(a.fwd.h.cwiseAbs().maxCoeff() <= 1.0);
  CHECK(a.bwd.h.cwiseAbs().maxCoeff() <= 1.0);
  CHECK(birnn_forward(m, x) == birnn_forward(m, x));
}

TEST_CASE("batched forward equals per-sample forward") {
  RnnModel m = RnnModel::glorot(toy(CellKind::GRU), 13);
  const Matrix a = random_matrix(4, 6, 14), b = random_matrix(4, 6, 15);
  const Matrix *both[] = {&a, &b};
  const SequenceActivations act = birnn_forward_batch(m, pack_batch(both));
  CHECK((unpack_sample(act.output, 6, 2, 0) - birnn_forward(m, a)).norm() < 1e-13);
  CHECK((unpack_sample(act.output, 6, 2, 1) - birnn_forward(m, b)).norm() < 1e-13);
}

TEST_CASE("forward rejects mismatched shapes") {
  RnnModel m = RnnModel::glorot(toy(CellKind::GRU), 16);
  CHECK_THROWS_AS(birnn_forward(m, Matrix::Zero(5, 6)), std::invalid_argument);
  EstimatorInput in;
  in.h_in = Matrix::Zero(6, 6);
  CHECK_THROWS_AS(estimate_channel(m, in), std::invalid_argument);
  in.h_in = Matrix::Zero(4, 6);
  const CMatrix h = estimate_channel(m, in);
  CHECK(h.rows() == 2);
  CHECK(h.cols() == 6);
}

TEST_CASE("Glorot initialisation") {
  const ModelShape s = toy(CellKind::LSTM);
  const RnnModel m = RnnModel::glorot(s, 17);
  const double a = std::sqrt(6.0 / (12.0 + 4.0));
  CHECK(m.weights.fwd.wx.cwiseAbs().maxCoeff() <= a);
  CHECK(m.weights.fwd.b.segment(3, 3) == Vector::Ones(3));
  CHECK(m.weights.fwd.b.head(3).isZero(0.0));
  CHECK(m.weights.b_out.isZero(0.0));
  CHECK(RnnModel::glorot(s, 17).weights.fwd.wx == m.weights.fwd.wx);
}

TEST_CASE("weight file round trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "birnn_rnn_test";
  fs::create_directories(dir);
  for (CellKind k : {CellKind::SRNN, CellKind::LSTM, CellKind::GRU}) {
    RnnModel m = RnnModel::glorot(toy(k), 18);
    randomize(m, 19);
    m.shape.output = Activation::Relu;
    const fs::path f = dir / ("m_" + to_string(k) + ".brnw");
    m.save(f);
    const RnnModel back = RnnModel::load(f);
    CHECK(back.shape == m.shape);
    const auto a = m.weights.tensors();
    const auto b = back.weights.tensors();
    REQUIRE(a.size() == b.size());
    for (std::size_t t = 0; t < a.size(); ++t)
      CHECK(std::equal(a[t].data.begin(), a[t].data.end(), b[t].data.begin()));

    const auto meta = nlohmann::json::parse(m.metadata_json());
    CHECK(meta["cell"] == to_string(k));
    CHECK(meta["parameters"] == m.weights.parameter_count());

    std::ofstream(f, std::ios::app) << 'x';
    CHECK_THROWS(RnnModel::load(f));
  }
  std::ofstream(dir / "junk.brnw") << "nope";
  CHECK_THROWS(RnnModel::load(dir / "junk.brnw"));
  fs::remove_all(dir);
}
