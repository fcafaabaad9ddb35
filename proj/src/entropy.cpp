#include "qsr/entropy.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

#include "qsr/sdp.hpp"

namespace qsr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSupportCut = 1e-12;  // sigma eigenvalue considered zero
constexpr double kSupportMass = 1e-10;  // rho mass on sigma's kernel => +inf

void require_same_layout(const RegisterLayout& a, const RegisterLayout& b,
                         const char* who) {
  if (a.labels() == b.labels() && a.dims() == b.dims()) return;
  throw invalid_input(std::string(who) + ": layout mismatch");
}

void require_disjoint(const std::vector<std::string>& a,
                      const std::vector<std::string>& b, const char* who) {
  for (const auto& x : a)
    for (const auto& y : b)
      if (x == y)
        throw invalid_input(std::string(who) + ": overlapping label sets ('" +
                            x + "')");
}

std::vector<std::string> concat_labels(const std::vector<std::string>& a,
                                       const std::vector<std::string>& b) {
  std::vector<std::string> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

void require_bipartition(const DensityOperator& rho,
                         const std::vector<std::string>& part_a,
                         const std::vector<std::string>& part_b,
                         const char* who) {
  require_disjoint(part_a, part_b, who);
  auto all = concat_labels(part_a, part_b);
  if (static_cast<int>(all.size()) != rho.layout().size())
    throw invalid_input(std::string(who) +
                        ": parts must bipartition the layout");
  for (const auto& l : all)
    if (!rho.layout().has(l))
      throw invalid_input(std::string(who) + ": unknown label '" + l + "'");
}

// value = log2 Tr Y* of  min Tr Y  s.t.  K (x) Y >= R  on A (x) B, plus the
// certified witness sigma = Y*/TrY*
QuantityResult dominance_result(const Mat& k, const Mat& r, int dim_a,
                                int dim_b, bool negate, const char* who) {
  SdpResult sol = solve_dominance_sdp(k, r, dim_a, dim_b);
  if (!sol.converged || sol.min_eig_s < -1e-8)
    throw invalid_input(std::string(who) +
                        ": SDP did not certify (primal " +
                        std::to_string(sol.trace_y) + ", dual " +
                        std::to_string(sol.dual_obj) + ", gap " +
                        std::to_string(sol.gap) + ")");
  QuantityResult res;
  res.value = (negate ? -1.0 : 1.0) * std::log2(sol.trace_y);
  res.kind = ResultKind::sdp_certified;
  res.certificate = sol.gap;
  res.witness = sol.y / sol.trace_y;
  return res;
}

}  // namespace

std::string to_string(ResultKind k) {
  switch (k) {
    case ResultKind::exact: return "exact";
    case ResultKind::sdp_certified: return "sdp_certified";
    case ResultKind::heuristic_upper: return "heuristic_upper";
    case ResultKind::heuristic_lower: return "heuristic_lower";
  }
  return "unknown";
}

double vn_entropy(const Mat& rho) {
  auto eig = eig_hermitian(rho);
  double s = 0.0;
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    const double l = eig.values(i);
    if (l > 0.0) s -= l * std::log2(l);
  }
  return s;
}

double vn_entropy(const DensityOperator& rho) { return vn_entropy(rho.matrix()); }

double fidelity(const Mat& rho, const Mat& sigma) {
  const Mat m = mat_sqrt(rho) * mat_sqrt(sigma);
  Eigen::JacobiSVD<Mat> svd(m);
  const double f = svd.singularValues().sum();
  return std::clamp(f, 0.0, 1.0);
}

double fidelity(const DensityOperator& rho, const DensityOperator& sigma) {
  require_same_layout(rho.layout(), sigma.layout(), "fidelity");
  return fidelity(rho.matrix(), sigma.matrix());
}

double purified_distance(const Mat& rho, const Mat& sigma) {
  const double f = fidelity(rho, sigma);
  return std::sqrt(std::max(0.0, 1.0 - f * f));
}

double purified_distance(const DensityOperator& rho,
                         const DensityOperator& sigma) {
  require_same_layout(rho.layout(), sigma.layout(), "purified_distance");
  return purified_distance(rho.matrix(), sigma.matrix());
}

double trace_distance(const Mat& rho, const Mat& sigma) {
  auto eig = eig_hermitian(Mat(rho - sigma));
  return 0.5 * eig.values.cwiseAbs().sum();
}

double rel_entropy(const Mat& rho, const Mat& sigma) {
  auto es = eig_hermitian(sigma);
  // support check: rho mass on sigma's kernel
  double kernel_mass = 0.0;
  for (Eigen::Index j = 0; j < es.values.size(); ++j)
    if (es.values(j) <= kSupportCut)
      kernel_mass +=
          std::real(Scalar(es.vectors.col(j).adjoint() * rho * es.vectors.col(j)));
  if (kernel_mass > kSupportMass) return kInf;

  double tr_rho_log_rho = 0.0;
  auto er = eig_hermitian(rho);
  for (Eigen::Index i = 0; i < er.values.size(); ++i) {
    const double l = er.values(i);
    if (l > 0.0) tr_rho_log_rho += l * std::log2(l);
  }
  double tr_rho_log_sigma = 0.0;
  for (Eigen::Index j = 0; j < es.values.size(); ++j) {
    const double l = es.values(j);
    if (l <= kSupportCut) continue;
    const double w =
        std::real(Scalar(es.vectors.col(j).adjoint() * rho * es.vectors.col(j)));
    if (w > 0.0) tr_rho_log_sigma += w * std::log2(l);
  }
  return tr_rho_log_rho - tr_rho_log_sigma;
}

double rel_entropy(const DensityOperator& rho, const DensityOperator& sigma) {
  require_same_layout(rho.layout(), sigma.layout(), "rel_entropy");
  return rel_entropy(rho.matrix(), sigma.matrix());
}

double dmax(const Mat& rho, const Mat& sigma) {
  auto es = eig_hermitian(sigma);
  double kernel_mass = 0.0;
  for (Eigen::Index j = 0; j < es.values.size(); ++j)
    if (es.values(j) <= kSupportCut)
      kernel_mass +=
          std::real(Scalar(es.vectors.col(j).adjoint() * rho * es.vectors.col(j)));
  if (kernel_mass > kSupportMass) return kInf;

  const Mat sis = mat_pinv_sqrt(sigma, kSupportCut);
  auto eig = eig_hermitian(Mat(sis * rho * sis));
  const double lmax = std::max(eig.values(0), 0.0);
  if (lmax == 0.0) return -kInf;  // rho = 0 never happens for states
  return std::log2(lmax);
}

double dmax(const DensityOperator& rho, const DensityOperator& sigma) {
  require_same_layout(rho.layout(), sigma.layout(), "dmax");
  return dmax(rho.matrix(), sigma.matrix());
}

double mutual_info(const DensityOperator& rho,
                   const std::vector<std::string>& part_a,
                   const std::vector<std::string>& part_b) {
  require_disjoint(part_a, part_b, "mutual_info");
  auto rho_ab = partial_trace(rho, concat_labels(part_a, part_b));
  auto rho_a = partial_trace(rho_ab, part_a);
  auto rho_b = partial_trace(rho_ab, part_b);
  return vn_entropy(rho_a) + vn_entropy(rho_b) - vn_entropy(rho_ab);
}

double cond_mutual_info(const DensityOperator& rho,
                        const std::vector<std::string>& part_a,
                        const std::vector<std::string>& part_b,
                        const std::vector<std::string>& part_c) {
  require_disjoint(part_a, part_b, "cond_mutual_info");
  require_disjoint(part_a, part_c, "cond_mutual_info");
  require_disjoint(part_b, part_c, "cond_mutual_info");
  // I(A:B|C) = S(AC) + S(BC) - S(C) - S(ABC)
  auto abc = concat_labels(concat_labels(part_a, part_b), part_c);
  auto rho_abc = partial_trace(rho, abc);
  const double s_ac =
      vn_entropy(partial_trace(rho_abc, concat_labels(part_a, part_c)));
  const double s_bc =
      vn_entropy(partial_trace(rho_abc, concat_labels(part_b, part_c)));
  const double s_c = part_c.empty()
                         ? 0.0
                         : vn_entropy(partial_trace(rho_abc, part_c));
  return s_ac + s_bc - s_c - vn_entropy(rho_abc);
}

QuantityResult imax(const DensityOperator& rho,
                    const std::vector<std::string>& part_a,
                    const std::vector<std::string>& part_b) {
  require_bipartition(rho, part_a, part_b, "imax");
  auto ordered = permute(rho, concat_labels(part_a, part_b));
  auto rho_a = partial_trace(ordered, part_a);
  const int dim_a = static_cast<int>(rho_a.dim());
  const int dim_b = static_cast<int>(ordered.dim() / rho_a.dim());
  auto res = dominance_result(rho_a.matrix(), ordered.matrix(), dim_a, dim_b,
                              /*negate=*/false, "imax");
  const double bound =
      2.0 * std::min(std::log2(double(dim_a)), std::log2(double(dim_b)));
  if (res.value > bound + 1e-7)
    throw invalid_input("imax: certified value exceeds the dimension bound");
  if (res.value < 0.0 && res.value > -1e-9) res.value = 0.0;
  return res;
}

QuantityResult hmin(const DensityOperator& rho,
                    const std::vector<std::string>& part_a,
                    const std::vector<std::string>& part_b) {
  require_bipartition(rho, part_a, part_b, "hmin");
  auto ordered = permute(rho, concat_labels(part_a, part_b));
  long long dim_a = 1;
  for (const auto& l : part_a) dim_a *= rho.layout().dim_of(l);
  const int da = static_cast<int>(dim_a);
  const int db = static_cast<int>(ordered.dim() / dim_a);
  return dominance_result(Mat::Identity(da, da), ordered.matrix(), da, db,
                          /*negate=*/true, "hmin");
}

QuantityResult hmax(const DensityOperator& rho,
                    const std::vector<std::string>& part_a,
                    const std::vector<std::string>& part_b,
                    const std::string& purifying_label) {
  require_bipartition(rho, part_a, part_b, "hmax");
  if (rho.layout().has(purifying_label))
    throw invalid_input("hmax: purifying label '" + purifying_label +
                        "' collides with the layout");
  auto psi = purify(rho, purifying_label);
  auto rho_ar =
      partial_trace(psi, concat_labels(part_a, {purifying_label}));
  auto res = hmin(rho_ar, part_a, {purifying_label});
  res.value = -res.value;
  return res;
}

}  // namespace qsr
