// Canonical example fields for each degeneracy case, |B| = 3 mT throughout
// (except the zero-field case). Expected values were frozen from an
// independent numeric derivation, not from the code under test.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "odmr/geometry.hpp"

namespace cases {

struct CanonicalCase {
  std::string label;
  odmr::FieldVector field;
  int dips;                  // resolvable dips at the 12 MHz threshold
  int degeneracy_distinct;   // counting b and -b separately
  int degeneracy_identified; // counting b and -b once
};

inline std::vector<CanonicalCase> table() {
  const double s2 = std::sqrt(2.0), s5 = std::sqrt(5.0), s3 = std::sqrt(3.0);
  const double s6 = std::sqrt(6.0), s18 = std::sqrt(18.0), s14 = std::sqrt(14.0);
  const double s21 = std::sqrt(21.0);
  return {
      {"1", {0.0, 0.0, 0.0}, 1, 1, 1},
      {"2", {0.0, 0.0, 3.0}, 2, 6, 3},
      {"3", {3.0 / s2, 3.0 / s2, 0.0}, 3, 12, 6},
      {"4a", {3.0 / s5, 6.0 / s5, 0.0}, 4, 24, 12},
      {"4b", {3.0 / s3, 3.0 / s3, 3.0 / s3}, 4, 8, 4},
      {"5", {3.0 / s6, 3.0 / s6, 6.0 / s6}, 5, 24, 12},
      {"6", {3.0 / s18, 3.0 / s18, 12.0 / s18}, 6, 24, 12},
      {"7", {3.0 / s14, 6.0 / s14, 9.0 / s14}, 7, 48, 24},
      {"8", {3.0 / s21, 6.0 / s21, 12.0 / s21}, 8, 48, 24},
  };
}

}  // namespace cases
