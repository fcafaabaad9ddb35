#include "qsr/register_layout.hpp"

#include <algorithm>
#include <set>

namespace qsr {

RegisterLayout::RegisterLayout(
    std::initializer_list<std::pair<std::string, int>> regs)
    : regs_(regs) {
  validate();
}

RegisterLayout::RegisterLayout(std::vector<std::pair<std::string, int>> regs)
    : regs_(std::move(regs)) {
  validate();
}

void RegisterLayout::validate() const {
  std::set<std::string> seen;
  for (const auto& [label, d] : regs_) {
    if (label.empty()) throw invalid_input("register label must be non-empty");
    if (d < 1) throw invalid_input("register '" + label + "' has dimension < 1");
    if (!seen.insert(label).second)
      throw invalid_input("duplicate register label '" + label + "'");
  }
}

long long RegisterLayout::dim() const {
  long long d = 1;
  for (const auto& [_, di] : regs_) d *= di;
  return d;
}

bool RegisterLayout::has(const std::string& label) const {
  return std::any_of(regs_.begin(), regs_.end(),
                     [&](const auto& r) { return r.first == label; });
}

int RegisterLayout::index_of(const std::string& label) const {
  for (int i = 0; i < size(); ++i)
    if (regs_[i].first == label) return i;
  throw invalid_input("no register labeled '" + label + "'");
}

int RegisterLayout::dim_of(const std::string& label) const {
  return regs_[index_of(label)].second;
}

std::vector<int> RegisterLayout::dims() const {
  std::vector<int> out;
  out.reserve(regs_.size());
  for (const auto& [_, d] : regs_) out.push_back(d);
  return out;
}

std::vector<std::string> RegisterLayout::labels() const {
  std::vector<std::string> out;
  out.reserve(regs_.size());
  for (const auto& [l, _] : regs_) out.push_back(l);
  return out;
}

std::vector<int> RegisterLayout::positions_of(
    const std::vector<std::string>& labels) const {
  std::set<std::string> want(labels.begin(), labels.end());
  if (want.size() != labels.size())
    throw invalid_input("duplicate label in register selection");
  std::vector<int> out;
  for (const auto& l : labels) out.push_back(index_of(l));
  return out;
}

RegisterLayout RegisterLayout::sublayout(
    const std::vector<std::string>& labels) const {
  auto pos = positions_of(labels);
  std::sort(pos.begin(), pos.end());
  std::vector<std::pair<std::string, int>> out;
  for (int p : pos) out.push_back(regs_[p]);
  return RegisterLayout(out);
}

RegisterLayout RegisterLayout::concat(const RegisterLayout& other) const {
  auto out = regs_;
  out.insert(out.end(), other.regs_.begin(), other.regs_.end());
  return RegisterLayout(out);
}

RegisterLayout RegisterLayout::renamed(const std::string& from,
                                       const std::string& to) const {
  auto out = regs_;
  out[index_of(from)].first = to;
  return RegisterLayout(out);
}

}  // namespace qsr
