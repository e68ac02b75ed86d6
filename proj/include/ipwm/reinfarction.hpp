#pragma once

// Built-in worked example: a hypothetical cohort of 33,007 patients with a
// binary treatment (A), reinfarction outcome (Y) and one binary confounder
// (L), the misclassification rates applied to it, and the validation
// mechanism Pr(R=1 | B=b) = 0.25 + 0.10 b.

#include <array>

#include "ipwm/data_model.hpp"

namespace ipwm::reinfarction {

/// True counts n[y][a][l].
inline CellCountTable true_counts() {
  CellCountTable t(bit(Var::Y) | bit(Var::A) | bit(Var::L));
  t.at(0, 0, 0, 0, 0) = 11602;
  t.at(0, 0, 0, 1, 0) = 13116;
  t.at(0, 0, 1, 0, 0) = 890;
  t.at(0, 0, 1, 1, 0) = 589;
  t.at(0, 0, 0, 0, 1) = 1302;
  t.at(0, 0, 0, 1, 1) = 5363;
  t.at(0, 0, 1, 0, 1) = 49;
  t.at(0, 0, 1, 1, 1) = 96;
  return t;
}

inline MisclassRates rates() {
  MisclassRates r;
  // pi[b][y][a][l]
  r.pi[0][0][0][0] = 0.050; r.pi[0][0][0][1] = 0.020;
  r.pi[1][0][0][0] = 0.060; r.pi[1][0][0][1] = 0.108;
  r.pi[0][1][0][0] = 0.930; r.pi[0][1][0][1] = 0.806;
  r.pi[1][1][0][0] = 0.938; r.pi[1][1][0][1] = 0.692;
  r.pi[0][0][1][0] = 0.030; r.pi[0][0][1][1] = 0.109;
  r.pi[1][0][1][0] = 0.060; r.pi[1][0][1][1] = 0.050;
  r.pi[0][1][1][0] = 0.906; r.pi[0][1][1][1] = 0.765;
  r.pi[1][1][1][0] = 0.950; r.pi[1][1][1][1] = 0.861;
  // lambda[y][a][l]
  r.lambda[0][0][0] = 0.010; r.lambda[0][0][1] = 0.100;
  r.lambda[1][0][0] = 0.181; r.lambda[1][0][1] = 0.265;
  r.lambda[0][1][0] = 0.880; r.lambda[0][1][1] = 0.930;
  r.lambda[1][1][0] = 0.910; r.lambda[1][1][1] = 0.823;
  return r;
}

inline double selection(int /*z*/, int b, int /*l*/) { return 0.25 + 0.10 * b; }

/// Published rounded misclassified counts: rows (y, a, l), columns
/// (Z,B) = 00, 01, 10, 11.
struct PrintedMisclassifiedRow {
  int y, a, l;
  std::array<int, 4> zb;
};

inline constexpr std::array<PrintedMisclassifiedRow, 8> kPrintedMisclassified = {{
    {0, 0, 0, {10912, 109, 574, 7}},
    {1, 0, 0, {51, 10, 678, 151}},
    {0, 1, 0, {1527, 10850, 47, 693}},
    {1, 1, 0, {5, 27, 48, 509}},
    {0, 0, 1, {1148, 116, 23, 14}},
    {1, 0, 1, {7, 4, 29, 9}},
    {0, 1, 1, {334, 4738, 41, 249}},
    {1, 1, 1, {4, 11, 13, 68}},
}};

/// Published rounded validation counts m_1..m_48, exactly as printed. In the
/// printed layout the Z and B labels of every slot are exchanged relative to
/// ValidationCounts indexing (e.g. the second slot, 7147, holds Z=0,B=1);
/// printed_validation_counts().swap_surrogates() is in engine layout.
inline constexpr std::array<double, 48> kPrintedValidation = {
    9371, 7147, 1011, 884, 1120, 3165, 80, 221,
    0, 0, 0, 0, 0, 0, 0, 0,
    2728, 38, 144, 2, 13, 3, 169, 53, 382, 3797, 12, 242, 1, 9, 12, 178,
    287, 41, 6, 5, 2, 1, 7, 3, 84, 1658, 10, 87, 1, 4, 3, 24};

inline ValidationCounts printed_validation_counts() { return ValidationCounts(kPrintedValidation); }

inline CellCountTable expected_misclassified() {
  return expected_misclassified_counts(true_counts(), rates());
}

inline ValidationCounts expected_validation() {
  return expected_validation_counts(expected_misclassified(), selection);
}

}  // namespace ipwm::reinfarction
