// SPDX-License-Identifier: Apache-2.0
/**
 * @file   complexity.hpp
 * @brief  Real multiplication/division counts of the studied estimators.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <birnn/rnn.hpp>

namespace birnn {

using Count = std::int64_t;

/// Bidirectional unit cost: SRNN 2QK+4Q^2, LSTM 8QK+8Q^2+6Q, GRU 6QK+6Q^2+6Q.
Count birnn_unit_cost(CellKind kind, Count q, Count k_in);

/// 4K^2 P + 2KP + 2K.
Count als_cost(Count k_on, Count p);

/// Published closed-form total of ALS-Bi-<kind> at K_on.
Count paper_total(CellKind kind, Count k_on);

struct ReferenceCount {
  std::string name;
  Count count;
};

/// Published counts of the non-recurrent estimators.
const std::vector<ReferenceCount> &reference_constants();

/// Published bar values of the recurrent estimators (K_on = 52, Q = 32, P = 3).
Count figure_value(CellKind kind);

struct ComplexityTerm {
  std::string name;
  Count count;
};

struct ComplexityEntry {
  std::string name;
  Count count = 0;
  std::vector<ComplexityTerm> terms; ///< sums to count
  std::string source; ///< "formula", "closed_form", "figure" or "reference"
};

struct ComplexityParams {
  Count q = 32;
  Count k_on = 52;
  Count p = 3;
  Count frame_length = 100;
  Count k_in() const { return 2 * k_on * frame_length; }
};

struct RatioClaim {
  std::string name;
  double claimed = 0.0;
  double computed = 0.0;
  bool matches = false;
  std::string note;
};

struct ComplexityReport {
  ComplexityParams params;
  std::vector<ComplexityEntry> entries;
  std::vector<RatioClaim> claims;
};

ComplexityReport complexity_report(const ComplexityParams &params);

std::string complexity_table(const ComplexityReport &report);
std::string complexity_csv(const ComplexityReport &report);
std::string complexity_json(const ComplexityReport &report);

} // namespace birnn
