#pragma once

// Random real diagonal ensembles on [-1, 1]: polynomial branches of degree
// <= 2 and polynomial control entries of degree <= 1.

#include <random>
#include <string>

#include "ensemblectl/spec_io.h"

namespace ensemblectl::testing {

inline std::string coefficient(std::mt19937_64& rng) {
  // Quarter steps keep coincidences (shared eigenvalues, zero control rows)
  // frequent enough to exercise both verdicts.
  const int q = std::uniform_int_distribution<int>(-8, 8)(rng);
  return std::to_string(q / 4.0);
}

inline std::string term(const std::string& c, const std::string& power) {
  return "(" + c + ")" + power;
}

inline EnsembleSpec random_rr_spec(std::mt19937_64& rng) {
  const int n = std::uniform_int_distribution<int>(1, 2)(rng);
  const int m = std::uniform_int_distribution<int>(1, 2)(rng);
  Json doc;
  doc["domain"] = Json::array({Json::array({-1, 1})});
  doc["real_branches"] = Json::array();
  doc["control"] = Json::array();
  for (int j = 0; j < n; ++j) {
    std::string c1, c2;
    do {
      c1 = coefficient(rng);
      c2 = std::uniform_int_distribution<int>(0, 2)(rng) == 0 ? "0"
                                                              : coefficient(rng);
    } while (std::stod(c1) == 0.0 && std::stod(c2) == 0.0);
    doc["real_branches"].push_back(term(c2, "*b^2") + " + " + term(c1, "*b") +
                                   " + " + term(coefficient(rng), ""));
    Json row = Json::array();
    for (int k = 0; k < m; ++k) {
      const bool constant = std::uniform_int_distribution<int>(0, 2)(rng) == 0;
      row.push_back(term(constant ? "0" : coefficient(rng), "*b") + " + " +
                    term(coefficient(rng), ""));
    }
    doc["control"].push_back(row);
  }
  return parse_spec(doc).spec;
}

}  // namespace ensemblectl::testing
