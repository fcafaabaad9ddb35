#pragma once

#include <string>
#include <vector>

#include "qsr/types.hpp"

namespace qsr {

// Ordered list of (label, dimension) register entries. Labels are unique,
// dimensions >= 1. The tensor-product index convention is row-major in the
// listed order (first register is the most significant index).
class RegisterLayout {
 public:
  RegisterLayout() = default;
  RegisterLayout(std::initializer_list<std::pair<std::string, int>> regs);
  explicit RegisterLayout(std::vector<std::pair<std::string, int>> regs);

  int size() const { return static_cast<int>(regs_.size()); }
  long long dim() const;  // product of all register dims
  const std::string& label(int i) const { return regs_[i].first; }
  int dim_at(int i) const { return regs_[i].second; }
  bool has(const std::string& label) const;
  int index_of(const std::string& label) const;  // throws if absent
  int dim_of(const std::string& label) const;

  std::vector<int> dims() const;
  std::vector<std::string> labels() const;

  // positions of the given labels in layout order
  std::vector<int> positions_of(const std::vector<std::string>& labels) const;
  // sub-layout of the given labels, kept in *this* layout's relative order
  RegisterLayout sublayout(const std::vector<std::string>& labels) const;
  // layouts concatenated; throws on label collision
  RegisterLayout concat(const RegisterLayout& other) const;
  RegisterLayout renamed(const std::string& from, const std::string& to) const;

  bool operator==(const RegisterLayout& o) const { return regs_ == o.regs_; }

 private:
  void validate() const;
  std::vector<std::pair<std::string, int>> regs_;
};

}  // namespace qsr
