#pragma once

#include <optional>
#include <string>

#include "qsr/states.hpp"

namespace qsr {

// One convex-split problem: rho_PQ on a two-register layout, a reference
// sigma on Q, the slack delta, the dominance coefficient k (bits) and the
// copy count n from the lemma formula (or an explicit override).
struct ConvexSplitInstance {
  DensityOperator rho_pq;
  DensityOperator sigma_q;
  double delta = 0.1;
  double k = 0.0;
  long long n = 1;
  bool n_overridden = false;
};

// n = 1 when k <= 3 delta, else ceil(8 * 2^k * log2(k/delta) / delta^3);
// the ceiling convention is ours (the formula is stated without rounding)
long long lemma_n(double k, double delta);

// computes k = Dmax(rho_PQ || rho_P (x) sigma_Q) and n; rejects infinite k
ConvexSplitInstance make_instance(const DensityOperator& rho_pq,
                                  const DensityOperator& sigma_q, double delta,
                                  std::optional<long long> n_override = {});

inline constexpr long long kDefaultMemCap = 1024;  // dense-tau dimension cap

// tau = (1/n) sum_j rho_{P Q_j} (x) sigma^{(x) rest}, dense, on registers
// [P, Q1..Qn]; errors when |P| |Q|^n exceeds mem_cap
DensityOperator build_tau(const ConvexSplitInstance& inst,
                          long long mem_cap = kDefaultMemCap);

// each side of the three chained proof inequalities, evaluated numerically:
//  (1)  I(P:Q1..Qn)_tau <= D(rho_{PQn} (x) sigma^rest || rho_P (x) tau_Q) -
//                          D(rho_{PQn} || tau_{PQn})
//  (2)  D(rho_{PQn} || tau_{PQn}) >= D(rho_{PQn} || rho_P (x) sigma) -
//                                    log(1 + 2^k/n)
//  (3)  D(rho_{PQn} (x) sigma^rest || rho_P (x) tau_Q) <=
//         D(rho_{PQn} || rho_P (x) sigma) + log(1/(1-delta)) +
//         log(n) exp(-delta^2 2^-k (n-1)/2)
// plus the assembled final bound and the exact binomial tail against its
// Chernoff estimate
struct ProofStageTerms {
  double eq1_lhs = 0, eq1_rhs = 0;
  double eq2_lhs = 0, eq2_rhs = 0;
  double eq3_lhs = 0, eq3_rhs = 0;
  double assembled_bound = 0;
  double binom_tail = 0, chernoff_bound = 0;
  bool eq1_ok = false, eq2_ok = false, eq3_ok = false, tail_ok = false;
};

struct SplitReport {
  double mutual_info = 0;    // I(P:Q1..Qn)_tau, bits
  double fidelity_sq = 0;    // F^2(tau_P (x) tau_Q, tau)
  bool bound_3delta_ok = false;  // mutual_info <= 3 delta + 1e-9
  bool bound_6delta_ok = false;  // fidelity_sq >= 1 - 6 delta - 1e-9
  bool chain_ok = false;         // F >= 1 - I within 1e-8 (closing chain)
  ProofStageTerms stage_terms;
};

std::string to_json(const SplitReport& r);

SplitReport verify_lemma(const ConvexSplitInstance& inst,
                         long long mem_cap = kDefaultMemCap);
ProofStageTerms derivation_diagnostics(const ConvexSplitInstance& inst,
                                       long long mem_cap = kDefaultMemCap);

// classical-on-Q structure (qubit Q, sigma diagonal, rho_PQ block diagonal
// over Q): the lemma quantities collapse to binomially-weighted sums of
// 2x2-block terms, evaluable at any n without the dense construction
bool is_cq(const ConvexSplitInstance& inst);
double cq_tau_mutual_info(const ConvexSplitInstance& inst);
double cq_tau_fidelity_sq(const ConvexSplitInstance& inst);

// |mu> = (1/sqrt n) sum_j |j>_M |rho>_{S E_j P Q_j} (x)_{i != j} |sigma>_{E_i Q_i}
// on registers [M, S, E1..En, P, Q1..Qn]; tracing out M, S, E reproduces tau
StateVector canonical_purification_of_tau(const ConvexSplitInstance& inst,
                                          long long mem_cap = kDefaultMemCap);

}  // namespace qsr
