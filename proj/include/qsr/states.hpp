#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qsr/linalg.hpp"
#include "qsr/random.hpp"
#include "qsr/register_layout.hpp"

namespace qsr {

// Trace-one PSD Hermitian operator on a labeled register tuple. Construction
// validates hermiticity (max-abs-entry tolerance 1e-10), eigenvalue floor
// -1e-9 and trace within 1e-9 of one, then re-symmetrizes, clips negative
// eigenvalues and renormalizes, so stored data is exactly Hermitian/PSD/
// trace-one up to machine precision.
class DensityOperator {
 public:
  DensityOperator(Mat data, RegisterLayout layout);

  const Mat& matrix() const { return data_; }
  const RegisterLayout& layout() const { return layout_; }
  long long dim() const { return layout_.dim(); }

 private:
  Mat data_;
  RegisterLayout layout_;
};

// Unit-norm pure state on a labeled register tuple (norm tolerance 1e-10,
// renormalized on construction).
class StateVector {
 public:
  StateVector(Vec data, RegisterLayout layout);

  const Vec& vector() const { return data_; }
  const RegisterLayout& layout() const { return layout_; }
  long long dim() const { return layout_.dim(); }
  DensityOperator to_density() const;

 private:
  Vec data_;
  RegisterLayout layout_;
};

// Isometry between labeled register tuples: V^dag V = I within 1e-9 and
// output dimension >= input dimension.
class IsometryMap {
 public:
  IsometryMap(Mat data, RegisterLayout in, RegisterLayout out);

  const Mat& matrix() const { return data_; }
  const RegisterLayout& input() const { return in_; }
  const RegisterLayout& output() const { return out_; }

 private:
  Mat data_;
  RegisterLayout in_, out_;
};

// --- labeled operations ---

DensityOperator tensor(const DensityOperator& a, const DensityOperator& b);
StateVector tensor(const StateVector& a, const StateVector& b);

// keep the named registers (result layout preserves their original relative
// order); trace of the result equals the input trace within 1e-10
DensityOperator partial_trace(const DensityOperator& rho,
                              const std::vector<std::string>& keep);
DensityOperator partial_trace(const StateVector& psi,
                              const std::vector<std::string>& keep);

// reorder registers to the given label order (a permutation of the layout)
DensityOperator permute(const DensityOperator& rho,
                        const std::vector<std::string>& order);
StateVector permute(const StateVector& psi,
                    const std::vector<std::string>& order);

// canonical purification sum_i sqrt(lambda_i) |v_i>|i>: ancilla register
// (with the given label) is appended last and has dimension = system dim
StateVector purify(const DensityOperator& rho, const std::string& anc_label);

// apply V to the registers it declares as input; other registers pass
// through untouched (input labels are replaced by V's output labels)
DensityOperator apply_isometry(const IsometryMap& v, const DensityOperator& rho);
StateVector apply_isometry(const IsometryMap& v, const StateVector& psi);

// seeded Haar-random pure state / unitary on the given layout
StateVector random_state(const RegisterLayout& layout, std::uint64_t seed);
IsometryMap random_unitary(const RegisterLayout& layout, std::uint64_t seed);

}  // namespace qsr
