// SPDX-License-Identifier: Apache-2.0
/**
 * @file   test_complexity.cpp
 * @brief  Operation counts and report consistency.
 */
#include <doctest.h>

#include <json.hpp>

#include <birnn/complexity.hpp>

using namespace birnn;

namespace {

/// Per-step multiplications of one direction, counted from the cell
/// equations: matrix products plus elementwise gate products.
Count direction_cost(CellKind k, Count q, Count n) {
  switch (k) {
  case CellKind::SRNN: return q * n + q * q;
  case CellKind::GRU: return 3 * q * n + 3 * q * q + 3 * q;
  case CellKind::LSTM: return 4 * q * n + 4 * q * q + 3 * q;
  }
  return 0;
}

} // namespace

TEST_CASE("unit costs equal the sum of two directions") {
  for (CellKind k : {CellKind::GRU, CellKind::LSTM})
    for (Count q : {1, 8, 32})
      for (Count n : {4, 104, 10400})
        CHECK(birnn_unit_cost(k, q, n) == 2 * direction_cost(k, q, n));
  // The simple-cell count charges the recurrent product twice per direction.
  for (Count q : {1, 8, 32})
    for (Count n : {4, 104, 10400})
      CHECK(birnn_unit_cost(CellKind::SRNN, q, n) ==
            2 * direction_cost(CellKind::SRNN, q, n) + 2 * q * q);
  CHECK(birnn_unit_cost(CellKind::SRNN, 1, 1) == 6);
  CHECK(birnn_unit_cost(CellKind::LSTM, 1, 1) == 22);
  CHECK(birnn_unit_cost(CellKind::GRU, 1, 1) == 18);
  CHECK_THROWS(birnn_unit_cost(CellKind::GRU, 0, 3));
}

TEST_CASE("operation counts at the default configuration") {
  const ComplexityParams p;
  CHECK(p.k_in() == 10400);
  CHECK(birnn_unit_cost(CellKind::GRU, 32, 10400) == 2'003'136);
  CHECK(birnn_unit_cost(CellKind::LSTM, 32, 10400) == 2'670'784);
  CHECK(birnn_unit_cost(CellKind::SRNN, 32, 10400) == 669'696);
  CHECK(als_cost(52, 3) == 32'864);
  CHECK(paper_total(CellKind::GRU, 52) == 2'126'792);
  CHECK(paper_total(CellKind::LSTM, 52) == 2'821'064);
  CHECK(paper_total(CellKind::SRNN, 52) == 740'104);
}

TEST_CASE("ALS cost is linear in P") {
  for (Count k : {1, 26, 52}) {
    const Count d = als_cost(k, 2) - als_cost(k, 1);
    for (Count p = 2; p < 8; ++p)
      CHECK(als_cost(k, p + 1) - als_cost(k, p) == d);
    CHECK(d == 4 * k * k + 2 * k);
  }
}

TEST_CASE("dominance LSTM > GRU > SRNN") {
  for (Count k : {4, 26, 52, 64}) {
    CHECK(paper_total(CellKind::LSTM, k) > paper_total(CellKind::GRU, k));
    CHECK(paper_total(CellKind::GRU, k) > paper_total(CellKind::SRNN, k));
    CHECK(birnn_unit_cost(CellKind::LSTM, 32, 2 * k * 100) >
          birnn_unit_cost(CellKind::GRU, 32, 2 * k * 100));
  }
}

TEST_CASE("report entries and claims") {
  const ComplexityReport r = complexity_report({});
  for (const ComplexityEntry &e : r.entries) {
    Count sum = 0;
    for (const ComplexityTerm &t : e.terms)
      sum += t.count;
    CHECK(sum == e.count);
  }
  auto find = [&](const std::string &name) {
    for (const RatioClaim &c : r.claims)
      if (c.name == name)
        return c;
    FAIL("missing claim " << name);
    return RatioClaim{};
  };
  CHECK(find("lmmse_over_gru_figure").matches);
  CHECK(find("srcnn_over_gru_figure").matches);
  CHECK(find("srnn_below_lstm_pct").computed == doctest::Approx(73.7655).epsilon(1e-4));

  const auto j = nlohmann::json::parse(complexity_json(r));
  CHECK(j["estimators"].size() == r.entries.size());
  CHECK(j["parameters"]["k_in"] == 10400);
  const std::string csv = complexity_csv(r);
  CHECK(csv.rfind("estimator,count,source,q,k_on,p,frame_length\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(r.entries.size() + 1));
}
