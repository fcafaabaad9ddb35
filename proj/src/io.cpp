#include "qsr/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace qsr {

using nlohmann::json;

std::string format_g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

json complex_array(const Scalar* data, long long n) {
  json arr = json::array();
  for (long long i = 0; i < n; ++i) {
    // parse-and-dump keeps the 17-digit decimal rendering in the output
    arr.push_back(json::array({json::parse(format_g17(data[i].real())),
                               json::parse(format_g17(data[i].imag()))}));
  }
  return arr;
}

json layout_json(const RegisterLayout& layout, const char* kind) {
  json j;
  j["labels"] = layout.labels();
  j["dims"] = layout.dims();
  j["kind"] = kind;
  return j;
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw invalid_input("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

RegisterLayout parse_layout(const json& j) {
  if (!j.contains("labels") || !j["labels"].is_array())
    throw invalid_input("state file: missing or non-array field 'labels'");
  if (!j.contains("dims") || !j["dims"].is_array())
    throw invalid_input("state file: missing or non-array field 'dims'");
  auto labels = j["labels"].get<std::vector<std::string>>();
  auto dims = j["dims"].get<std::vector<long long>>();
  if (labels.size() != dims.size())
    throw invalid_input("state file: 'labels' and 'dims' lengths differ");
  std::vector<std::pair<std::string, int>> regs;
  for (size_t i = 0; i < labels.size(); ++i)
    regs.push_back({labels[i], static_cast<int>(dims[i])});
  return RegisterLayout(regs);
}

std::vector<Scalar> parse_data(const json& j, long long expect) {
  if (!j.contains("data") || !j["data"].is_array())
    throw invalid_input("state file: missing or non-array field 'data'");
  const auto& arr = j["data"];
  if (static_cast<long long>(arr.size()) != expect) {
    std::ostringstream os;
    os << "state file: field 'data' has length " << arr.size() << ", expected "
       << expect;
    throw invalid_input(os.str());
  }
  std::vector<Scalar> out;
  out.reserve(arr.size());
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 2)
      throw invalid_input("state file: 'data' entries must be [re, im] pairs");
    out.emplace_back(e[0].get<double>(), e[1].get<double>());
  }
  return out;
}

}  // namespace

AnyState load_state(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input("cannot open state file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw invalid_input("state file '" + path + "' is not valid JSON: " +
                        std::string(e.what()));
  }
  auto layout = parse_layout(j);
  if (!j.contains("kind") || !j["kind"].is_string())
    throw invalid_input("state file: missing or non-string field 'kind'");
  const std::string kind = j["kind"].get<std::string>();
  const long long d = layout.dim();
  if (kind == "pure") {
    auto data = parse_data(j, d);
    Vec v(d);
    for (long long i = 0; i < d; ++i) v(i) = data[i];
    return StateVector(v, layout);
  }
  if (kind == "density") {
    auto data = parse_data(j, d * d);
    Mat m(d, d);
    for (long long r = 0; r < d; ++r)
      for (long long c = 0; c < d; ++c) m(r, c) = data[r * d + c];  // row-major
    return DensityOperator(m, layout);
  }
  throw invalid_input("state file: field 'kind' must be 'pure' or 'density'");
}

void save_state(const StateVector& psi, const std::string& path) {
  json j = layout_json(psi.layout(), "pure");
  j["data"] = complex_array(psi.vector().data(), psi.dim());
  write_json(j, path);
}

void save_state(const DensityOperator& rho, const std::string& path) {
  json j = layout_json(rho.layout(), "density");
  const long long d = rho.dim();
  std::vector<Scalar> rowmajor(d * d);
  for (long long r = 0; r < d; ++r)
    for (long long c = 0; c < d; ++c) rowmajor[r * d + c] = rho.matrix()(r, c);
  j["data"] = complex_array(rowmajor.data(), d * d);
  write_json(j, path);
}

DensityOperator as_density(const AnyState& s) {
  if (std::holds_alternative<StateVector>(s))
    return std::get<StateVector>(s).to_density();
  return std::get<DensityOperator>(s);
}

CsvWriter::CsvWriter(std::vector<std::string> header)
    : header_(std::move(header)) {}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != header_.size())
    throw invalid_input("CSV row width does not match header");
  rows_.push_back(cells);
}

std::string CsvWriter::str() const {
  std::ostringstream os;
  for (size_t i = 0; i < header_.size(); ++i)
    os << header_[i] << (i + 1 < header_.size() ? "," : "\n");
  for (const auto& row : rows_)
    for (size_t i = 0; i < row.size(); ++i)
      os << row[i] << (i + 1 < row.size() ? "," : "\n");
  return os.str();
}

void CsvWriter::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw invalid_input("cannot open '" + path + "' for writing");
  out << str();
}

}  // namespace qsr
