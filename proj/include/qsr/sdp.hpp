#pragma once

#include "qsr/types.hpp"

namespace qsr {

// Solves  minimize Tr Y  subject to  K (x) Y >= R,  Y Hermitian on the
// second factor, for PSD K (side dim_a) and Hermitian R (side dim_a*dim_b),
// with supp(R) compatible with supp(K) (x) I. This is the common core of
// Imax (K = rho_A) and Hmin (K = I_A).
//
// Feasible-start primal-dual interior-point method with Nesterov-Todd
// scaling and a Mehrotra-style predictor-corrector; the iterates stay
// exactly primal and dual feasible, so the duality gap Tr(S Z) certifies
// the value.
struct SdpResult {
  Mat y;                 // optimal Y
  double trace_y = 0.0;  // primal objective
  double dual_obj = 0.0;
  double gap = 0.0;       // Tr(S Z) at termination, >= 0 up to roundoff
  double min_eig_s = 0.0; // primal feasibility certificate
  int iterations = 0;
  bool converged = false;
};

SdpResult solve_dominance_sdp(const Mat& k, const Mat& r, int dim_a, int dim_b,
                              double tol_gap = 1e-11, int max_iter = 80);

}  // namespace qsr
