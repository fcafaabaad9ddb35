#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qsr/states.hpp"

namespace qsr {

enum class ResultKind { exact, sdp_certified, heuristic_upper, heuristic_lower };
std::string to_string(ResultKind k);

struct QuantityResult {
  double value = 0.0;
  ResultKind kind = ResultKind::exact;
  // sdp_certified: duality gap of the solved program
  // heuristic: residual of the constraint at the reported witness (e.g. the
  // purified distance to the center for smoothed quantities)
  double certificate = 0.0;
  // achieving object when one exists: sigma_B for imax/hmin, the smoothed
  // state for smooth, the recovered state for fidelity_of_recovery
  std::optional<Mat> witness;
};

// von Neumann entropy in bits
double vn_entropy(const DensityOperator& rho);
double vn_entropy(const Mat& rho);

// Uhlmann fidelity ||sqrt(rho) sqrt(sigma)||_1, in [0,1]
double fidelity(const DensityOperator& rho, const DensityOperator& sigma);
double fidelity(const Mat& rho, const Mat& sigma);
// sqrt(1 - F^2)
double purified_distance(const DensityOperator& rho, const DensityOperator& sigma);
double purified_distance(const Mat& rho, const Mat& sigma);
// trace norm distance ||rho - sigma||_1
double trace_distance(const Mat& rho, const Mat& sigma);

// D(rho||sigma) in bits; +infinity when supp(rho) is not contained in
// supp(sigma) (sigma eigenvalue < 1e-12 on rho's support)
double rel_entropy(const DensityOperator& rho, const DensityOperator& sigma);
double rel_entropy(const Mat& rho, const Mat& sigma);

// Dmax(rho||sigma) = log2 lmax(sigma^{-1/2+} rho sigma^{-1/2+}) in bits;
// +infinity on support failure
double dmax(const DensityOperator& rho, const DensityOperator& sigma);
double dmax(const Mat& rho, const Mat& sigma);

// I(A:B) = S(A) + S(B) - S(AB) >= 0
double mutual_info(const DensityOperator& rho,
                   const std::vector<std::string>& part_a,
                   const std::vector<std::string>& part_b);
// I(A:B|C) = I(A:BC) - I(A:C) >= 0
double cond_mutual_info(const DensityOperator& rho,
                        const std::vector<std::string>& part_a,
                        const std::vector<std::string>& part_b,
                        const std::vector<std::string>& part_c);

// Imax(A:B) = inf_sigma Dmax(rho_AB || rho_A x sigma_B), solved exactly as
// the SDP minimize Tr Y s.t. rho_A x Y >= rho_AB; witness = sigma_B
QuantityResult imax(const DensityOperator& rho,
                    const std::vector<std::string>& part_a,
                    const std::vector<std::string>& part_b);

// Hmin(A|B) = -inf_sigma Dmax(rho_AB || I_A x sigma_B); same SDP with
// rho_A replaced by the identity
QuantityResult hmin(const DensityOperator& rho,
                    const std::vector<std::string>& part_a,
                    const std::vector<std::string>& part_b);

// Hmax(A|B) = -Hmin(A|R) evaluated on the canonical purification, with R
// the purifying register label
QuantityResult hmax(const DensityOperator& rho,
                    const std::vector<std::string>& part_a,
                    const std::vector<std::string>& part_b,
                    const std::string& purifying_label);

enum class SmoothQuantity { imax, hmin, hmax };

struct SmoothOptions {
  int restarts = 8;
  int iters = 500;  // candidate evaluations per restart
  std::uint64_t seed = 0x5eed;
  std::string purifying_label = "W";  // hmax only
};

// Heuristic smoothing over the normalized eps-ball in purified distance.
// imax/hmax are minimized over the ball (kind heuristic_upper), hmin is
// maximized (kind heuristic_lower). witness = the achieving state; the
// certificate is its purified distance to the input.
QuantityResult smooth(SmoothQuantity q, const DensityOperator& rho,
                      const std::vector<std::string>& part_a,
                      const std::vector<std::string>& part_b, double eps,
                      const SmoothOptions& opts = {});

enum class RecoveryMethod { petz, optimize };

struct RecoveryOptions {
  int restarts = 2;
  int iters = 80;
  std::uint64_t seed = 0x0eca;
};

// Fidelity of recovery F(A:C|B): best fidelity between rho_ACB and a channel
// E: B -> BC applied to rho_AB. petz evaluates the Petz recovery map;
// optimize local-searches isometric dilations seeded at the Petz dilation.
// Both are heuristic_lower with witness = recovered state.
QuantityResult fidelity_of_recovery(const DensityOperator& rho,
                                    const std::vector<std::string>& part_a,
                                    const std::vector<std::string>& part_c,
                                    const std::vector<std::string>& part_b,
                                    RecoveryMethod method,
                                    const RecoveryOptions& opts = {});

}  // namespace qsr
