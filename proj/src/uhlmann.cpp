#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "qsr/linalg.hpp"
#include "qsr/protocol.hpp"

namespace qsr {

namespace {

// Pure state reshaped to (rest) x (fixed), both groups in the order given,
// row-major (rest most significant).
Mat rest_by_fixed(const StateVector& s, const std::vector<std::string>& rest,
                  const std::vector<std::string>& fixed) {
  std::vector<std::string> order = rest;
  order.insert(order.end(), fixed.begin(), fixed.end());
  StateVector p = permute(s, order);
  long long dr = 1;
  for (const auto& l : rest) dr *= s.layout().dim_of(l);
  const long long df = p.dim() / dr;
  Mat x(dr, df);
  for (long long r = 0; r < dr; ++r)
    for (long long f = 0; f < df; ++f) x(r, f) = p.vector()(r * df + f);
  return x;
}

std::vector<std::string> complement_labels(const RegisterLayout& layout,
                                           const std::vector<std::string>& fixed) {
  std::vector<std::string> rest;
  for (const auto& l : layout.labels())
    if (std::find(fixed.begin(), fixed.end(), l) == fixed.end())
      rest.push_back(l);
  return rest;
}

RegisterLayout sublayout_of(const RegisterLayout& layout,
                            const std::vector<std::string>& labels) {
  std::vector<std::pair<std::string, int>> regs;
  for (const auto& l : labels) regs.push_back({l, layout.dim_of(l)});
  return RegisterLayout(regs);
}

struct UhlmannCore {
  Mat v;          // r1 x r2 isometry
  double overlap; // singular value sum = fidelity of the fixed marginals
};

UhlmannCore uhlmann_core(const Mat& x1, const Mat& x2) {
  const Mat c = x2 * x1.adjoint();  // r2 x r1
  Eigen::BDCSVD<Mat> svd(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
  UhlmannCore out;
  out.v = svd.matrixV() * svd.matrixU().adjoint();
  out.overlap = svd.singularValues().sum();
  return out;
}

}  // namespace

UhlmannResult uhlmann_isometry_full(const StateVector& pur1,
                                    const StateVector& pur2,
                                    const std::vector<std::string>& fixed) {
  if (fixed.empty()) throw invalid_input("uhlmann: fixed register list empty");
  for (const auto& l : fixed) {
    if (!pur1.layout().has(l) || !pur2.layout().has(l))
      throw invalid_input("uhlmann: fixed register '" + l +
                          "' missing from a purification");
    if (pur1.layout().dim_of(l) != pur2.layout().dim_of(l))
      throw invalid_input("uhlmann: fixed register '" + l +
                          "' has mismatched dimensions");
  }
  const auto rest1 = complement_labels(pur1.layout(), fixed);
  const auto rest2 = complement_labels(pur2.layout(), fixed);
  long long r1 = 1, r2 = 1;
  for (const auto& l : rest1) r1 *= pur1.layout().dim_of(l);
  for (const auto& l : rest2) r2 *= pur2.layout().dim_of(l);
  if (r1 < r2) {
    std::ostringstream os;
    os << "uhlmann: free side of pur1 (" << r1
       << ") smaller than free side of pur2 (" << r2
       << "); pad pur1 with an ancilla register";
    throw invalid_input(os.str());
  }
  const Mat x1 = rest_by_fixed(pur1, rest1, fixed);
  const Mat x2 = rest_by_fixed(pur2, rest2, fixed);
  auto core = uhlmann_core(x1, x2);
  IsometryMap v(core.v, sublayout_of(pur2.layout(), rest2),
                sublayout_of(pur1.layout(), rest1));
  return UhlmannResult{std::move(v), core.overlap};
}

IsometryMap uhlmann_isometry(const StateVector& pur1, const StateVector& pur2,
                             const std::vector<std::string>& fixed) {
  return uhlmann_isometry_full(pur1, pur2, fixed).v;
}

DensityOperator pure_close_extension(const StateVector& psi_a,
                                     const DensityOperator& rho_ab) {
  const auto a_labels = psi_a.layout().labels();
  for (const auto& l : a_labels) {
    if (!rho_ab.layout().has(l))
      throw invalid_input("pure_close_extension: register '" + l +
                          "' of psi missing from rho");
    if (rho_ab.layout().dim_of(l) != psi_a.layout().dim_of(l))
      throw invalid_input("pure_close_extension: register '" + l +
                          "' dimension mismatch");
  }
  const auto b_labels = complement_labels(rho_ab.layout(), a_labels);
  if (b_labels.empty())
    throw invalid_input("pure_close_extension: rho has no registers beyond psi's");

  std::string anc = "_pce_anc";
  while (rho_ab.layout().has(anc)) anc += "_";
  StateVector pur = purify(rho_ab, anc);

  // arrange as A x (B, anc) and contract against psi
  std::vector<std::string> border = b_labels;
  border.push_back(anc);
  const Mat x = rest_by_fixed(pur, a_labels, border);
  const Vec v = x.adjoint() * psi_a.vector();  // on (B, anc)
  const double nrm = v.norm();

  long long db = 1;
  for (const auto& l : b_labels) db *= rho_ab.layout().dim_of(l);
  const long long danc = v.size() / db;

  Mat theta;
  if (nrm < 1e-14) {
    // psi orthogonal to the support of rho_A: any extension is equally (un)close
    theta = Mat::Identity(db, db) / static_cast<double>(db);
  } else {
    // conjugate so the product-state overlap becomes |v| rather than sum v^2,
    // then trace the purifying ancilla
    const Vec phi = v.conjugate() / nrm;
    Eigen::Map<const Mat> y(phi.data(), danc, db);  // column-major: (anc, b)
    theta = y.transpose() * y.conjugate();
  }
  return DensityOperator(theta, sublayout_of(rho_ab.layout(), b_labels));
}

}  // namespace qsr
