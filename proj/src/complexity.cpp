// SPDX-License-Identifier: Apache-2.0
/**
 * @file   complexity.cpp
 * @brief  Analytic operation counts and the comparison report.
 */
#include <birnn/complexity.hpp>

#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace birnn {

Count birnn_unit_cost(CellKind kind, Count q, Count k_in) {
  if (q <= 0 || k_in <= 0)
    throw std::invalid_argument("birnn_unit_cost: Q and K_in must be positive");
  switch (kind) {
  case CellKind::SRNN: return 2 * q * k_in + 4 * q * q;
  case CellKind::LSTM: return 8 * q * k_in + 8 * q * q + 6 * q;
  case CellKind::GRU: return 6 * q * k_in + 6 * q * q + 6 * q;
  }
  throw std::invalid_argument("birnn_unit_cost: invalid cell kind");
}

Count als_cost(Count k_on, Count p) {
  if (k_on <= 0 || p <= 0)
    throw std::invalid_argument("als_cost: K_on and P must be positive");
  return 4 * k_on * k_on * p + 2 * k_on * p + 2 * k_on;
}

namespace {

struct ClosedForm {
  Count quad, lin, constant;
};

ClosedForm closed_form(CellKind kind) {
  switch (kind) {
  case CellKind::SRNN: return {16, 13322, 4096};
  case CellKind::LSTM: return {16, 53258, 8384};
  case CellKind::GRU: return {16, 39946, 6336};
  }
  throw std::invalid_argument("paper_total: invalid cell kind");
}

std::string label(CellKind kind) {
  switch (kind) {
  case CellKind::SRNN: return "ALS-Bi-SRNN";
  case CellKind::LSTM: return "ALS-Bi-LSTM";
  case CellKind::GRU: return "ALS-Bi-GRU";
  }
  return "?";
}

} // namespace

Count paper_total(CellKind kind, Count k_on) {
  if (k_on <= 0)
    throw std::invalid_argument("paper_total: K_on must be positive");
  const ClosedForm c = closed_form(kind);
  return c.quad * k_on * k_on + c.lin * k_on + c.constant;
}

const std::vector<ReferenceCount> &reference_constants() {
  static const std::vector<ReferenceCount> table{
    {"2D-LMMSE", 3'686'656'161'000},     {"ChannelNet", 2'595'149'600},
    {"TS-ChannelNet", 1'180'150'400},    {"ALS-WI-DNCNN", 428'595'544},
    {"ALS-WI-SRCNN", 36'108'800},
  };
  return table;
}

Count figure_value(CellKind kind) {
  switch (kind) {
  case CellKind::SRNN: return 740'104;
  case CellKind::LSTM: return 2'821'064;
  case CellKind::GRU: return 2'083'008;
  }
  throw std::invalid_argument("figure_value: invalid cell kind");
}

namespace {

Count reference(const std::string &name) {
  for (const ReferenceCount &r : reference_constants())
    if (r.name == name)
      return r.count;
  throw std::logic_error("missing reference constant " + name);
}

double pct(double num, double den) { return 100.0 * num / den; }

RatioClaim percent_claim(std::string name, double claimed, double computed, std::string note) {
  return {std::move(name), claimed, computed, std::abs(computed - claimed) < 0.05,
          std::move(note)};
}

/// Ratio claims phrased as "Nx less complex" hold to order of magnitude.
RatioClaim order_claim(std::string name, double claimed, double computed, std::string note) {
  const bool same = std::floor(std::log10(computed)) == std::floor(std::log10(claimed));
  return {std::move(name), claimed, computed, same, std::move(note)};
}

} // namespace

ComplexityReport complexity_report(const ComplexityParams &params) {
  ComplexityReport r;
  r.params = params;
  const Count als = als_cost(params.k_on, params.p);
  const Count k = params.k_on;

  for (CellKind kind : {CellKind::GRU, CellKind::LSTM, CellKind::SRNN}) {
    const Count unit = birnn_unit_cost(kind, params.q, params.k_in());
    r.entries.push_back({label(kind) + " (unit+ALS)", unit + als,
                         {{"bi_rnn_unit", unit}, {"als", als}}, "formula"});
    const ClosedForm c = closed_form(kind);
    r.entries.push_back({label(kind) + " (closed form)", paper_total(kind, k),
                         {{"k_on^2 term", c.quad * k * k},
                          {"k_on term", c.lin * k},
                          {"constant", c.constant}},
                         "closed_form"});
    r.entries.push_back({label(kind) + " (figure)", figure_value(kind),
                         {{"published", figure_value(kind)}}, "figure"});
  }
  for (const ReferenceCount &ref : reference_constants())
    r.entries.push_back({ref.name, ref.count, {{"published", ref.count}}, "reference"});

  const auto lstm = static_cast<double>(paper_total(CellKind::LSTM, k));
  const auto srnn = static_cast<double>(paper_total(CellKind::SRNN, k));
  const auto gru_cf = static_cast<double>(paper_total(CellKind::GRU, k));
  const auto gru_fig = static_cast<double>(figure_value(CellKind::GRU));

  r.claims.push_back(percent_claim("lstm_over_gru_closed_form_pct", 26.29,
                                   pct(lstm - gru_cf, gru_cf), "(LSTM - GRU) / GRU"));
  r.claims.push_back(percent_claim("lstm_over_gru_figure_pct", 26.29, pct(lstm - gru_fig, gru_fig),
                                   "(LSTM - GRU) / GRU, GRU from figure"));
  r.claims.push_back(percent_claim("gru_closed_form_below_lstm_pct", 26.29,
                                   pct(lstm - gru_cf, lstm), "(LSTM - GRU) / LSTM"));
  r.claims.push_back(percent_claim("gru_figure_below_lstm_pct", 26.29, pct(lstm - gru_fig, lstm),
                                   "(LSTM - GRU) / LSTM, GRU from figure"));
  r.claims.push_back(
    percent_claim("srnn_below_lstm_pct", 73.63, pct(lstm - srnn, lstm), "(LSTM - SRNN) / LSTM"));
  r.claims.push_back(percent_claim("srnn_below_gru_closed_form_pct", 64.22,
                                   pct(gru_cf - srnn, gru_cf), "(GRU - SRNN) / GRU"));
  r.claims.push_back(percent_claim("srnn_below_gru_figure_pct", 64.22,
                                   pct(gru_fig - srnn, gru_fig),
                                   "(GRU - SRNN) / GRU, GRU from figure"));
  r.claims.push_back(percent_claim("gru_closed_form_vs_figure_pct", 0.0,
                                   pct(gru_cf - gru_fig, gru_fig),
                                   "closed form disagrees with the published bar"));

  for (double gru : {gru_fig, gru_cf}) {
    const std::string tag = gru == gru_fig ? "figure" : "closed_form";
    const auto srcnn = static_cast<double>(reference("ALS-WI-SRCNN"));
    const auto dncnn = static_cast<double>(reference("ALS-WI-DNCNN"));
    const auto lmmse = static_cast<double>(reference("2D-LMMSE"));
    r.claims.push_back(order_claim("srcnn_over_gru_" + tag, 10.0, srcnn / gru,
                                   "stated 10x, checked to order of magnitude"));
    r.claims.push_back(order_claim("dncnn_over_gru_" + tag, 115.0, dncnn / gru,
                                   "stated 115x, checked to order of magnitude"));
    RatioClaim c{"lmmse_over_gru_" + tag, 1e6, lmmse / gru, lmmse / gru >= 1e6,
                 "stated at least 1e6x"};
    r.claims.push_back(c);
  }
  return r;
}

std::string complexity_table(const ComplexityReport &report) {
  std::ostringstream out;
  const ComplexityParams &p = report.params;
  out << "Q=" << p.q << " K_on=" << p.k_on << " P=" << p.p << " I=" << p.frame_length
      << " K_in=" << p.k_in() << "\n\n";
  out << std::left << std::setw(34) << "estimator" << std::right << std::setw(20) << "mult/div"
      << "  source\n";
  for (const ComplexityEntry &e : report.entries)
    out << std::left << std::setw(34) << e.name << std::right << std::setw(20) << e.count << "  "
        << e.source << '\n';
  out << '\n'
      << std::left << std::setw(34) << "claim" << std::right << std::setw(14) << "stated"
      << std::setw(14) << "computed"
      << "  ok  note\n";
  for (const RatioClaim &c : report.claims)
    out << std::left << std::setw(34) << c.name << std::right << std::setw(14) << std::setprecision(6)
        << c.claimed << std::setw(14) << c.computed << "  " << (c.matches ? "yes" : "NO ") << " "
        << c.note << '\n';
  return out.str();
}

std::string complexity_csv(const ComplexityReport &report) {
  std::ostringstream out;
  out << "estimator,count,source,q,k_on,p,frame_length\n";
  const ComplexityParams &p = report.params;
  for (const ComplexityEntry &e : report.entries)
    out << e.name << ',' << e.count << ',' << e.source << ',' << p.q << ',' << p.k_on << ','
        << p.p << ',' << p.frame_length << '\n';
  return out.str();
}

std::string complexity_json(const ComplexityReport &report) {
  nlohmann::json j;
  const ComplexityParams &p = report.params;
  j["parameters"] = {{"q", p.q}, {"k_on", p.k_on}, {"p", p.p}, {"frame_length", p.frame_length},
                     {"k_in", p.k_in()}};
  auto entries = nlohmann::json::array();
  for (const ComplexityEntry &e : report.entries) {
    auto terms = nlohmann::json::array();
    for (const ComplexityTerm &t : e.terms)
      terms.push_back({{"name", t.name}, {"count", t.count}});
    entries.push_back({{"name", e.name}, {"count", e.count}, {"source", e.source}, {"terms", terms}});
  }
  j["estimators"] = entries;
  auto claims = nlohmann::json::array();
  for (const RatioClaim &c : report.claims)
    claims.push_back({{"name", c.name},
                      {"stated", c.claimed},
                      {"computed", c.computed},
                      {"matches", c.matches},
                      {"note", c.note}});
  j["claims"] = claims;
  return j.dump(2);
}

} // namespace birnn
