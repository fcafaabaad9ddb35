#pragma once

#include <string>
#include <variant>
#include <vector>

#include "qsr/states.hpp"

namespace qsr {

// State files are JSON objects with fields "labels" (array of strings),
// "dims" (array of integers), "kind" ("pure" | "density") and "data"
// (array of [re, im] pairs; length = dim for pure, dim^2 row-major for
// density). Numbers are written with 17 significant digits.
using AnyState = std::variant<StateVector, DensityOperator>;

AnyState load_state(const std::string& path);
void save_state(const StateVector& psi, const std::string& path);
void save_state(const DensityOperator& rho, const std::string& path);

DensityOperator as_density(const AnyState& s);

// %.17g rendering used for every number we serialize (CSV and JSON alike),
// so reruns are byte-identical
std::string format_g17(double x);

// minimal CSV emitter: comma separation, '.' decimal point, header row
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void add_row(const std::vector<std::string>& cells);
  void write(const std::string& path) const;
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace qsr
