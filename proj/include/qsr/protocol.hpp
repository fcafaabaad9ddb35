#pragma once

// One-shot state redistribution driven by convex splitting.
//
// Setting: a pure state Psi on registers (R, A, B, C) is shared between a
// referee (R), Alice (A and C) and Bob (B). Alice must hand C to Bob using
// pre-shared entanglement and a single quantum message, so that the final
// global state is close to Psi in purified distance P = sqrt(1 - F^2).
//
// The construction: pick an extension kappa on (R, B, C, T) whose RB marginal
// equals Psi_RB and which a unitary U on (B, C, T) maps eps-close to
// Psi_RBC (x) sigma'_T. Alice and Bob share n copies of a purification of
// sigma (the optimal product witness for k = Imax(RB : CT)_kappa) plus one
// purification of kappa; a convex-split argument makes the mixture over which
// slot carries kappa look like the product state once n is large enough
// relative to k. Alice's message is the slot index, sent by superdense coding
// at log2(n)/2 qubits; local Uhlmann isometries on both sides then restore
// the redistributed state.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qsr/states.hpp"

namespace qsr {

// Isometry turning one purification into the best approximation of another.
//
// Both inputs are pure states that share the registers named in `fixed` (same
// labels, same dimensions). Let rho_i be the marginal of pur_i on the fixed
// registers. The returned V acts on the non-fixed registers of pur2 and maps
// them into the non-fixed registers of pur1 such that
//
//   <pur1| (V (x) I_fixed) |pur2>  =  F(rho_1, rho_2)   (real, nonnegative),
//
// which is the largest overlap any isometry can achieve. Computed from the
// singular value decomposition of the cross-overlap matrix X2 X1^dag, where
// X_i is pur_i reshaped to (non-fixed) x (fixed); the achieved overlap is the
// singular value sum. Requires dim(non-fixed of pur1) >= dim(non-fixed of
// pur2); pad pur1 with an ancilla register otherwise. Deterministic.
IsometryMap uhlmann_isometry(const StateVector& pur1, const StateVector& pur2,
                             const std::vector<std::string>& fixed);

// Same computation, also returning the achieved overlap F(rho_1, rho_2)
// (the singular value sum of the cross-overlap matrix).
struct UhlmannResult {
  IsometryMap v;
  double overlap;
};
UhlmannResult uhlmann_isometry_full(const StateVector& pur1,
                                    const StateVector& pur2,
                                    const std::vector<std::string>& fixed);

// Closest product extension with a fixed pure factor.
//
// Given |psi> on registers A and a density operator rho on registers (A, B),
// returns theta on B maximizing F(psi (x) theta, rho_AB). The maximum equals
// F(psi_A, rho_A) exactly: contract a purification of rho_AB against |psi>,
// conjugate the resulting vector (so the overlap becomes a norm rather than a
// sum of squares), and trace out the purifying ancilla.
DensityOperator pure_close_extension(const StateVector& psi_a,
                                     const DensityOperator& rho_ab);

// A feasible point of the redistribution measure: an extension kappa of
// Psi_RB on (R, B, C, T) together with the unitary and the T-state that
// witness its eps-closeness to Psi_RBC (x) sigma'_T after rotation.
struct AchievingPoint {
  long long t_dim = 1;
  IsometryMap u_bct;            // unitary on (B, C, T)
  DensityOperator sigma_prime;  // state on [T]
  DensityOperator kappa;        // extension on [R, B, C, T], kappa_RB = Psi_RB
};

struct RedistributionInput {
  StateVector psi;   // pure state on registers R, A, B, C (dim-1 allowed)
  double eps = 0.1;  // error parameter, in (0, 1/3)
  // Feasible point to run at; searched for heuristically when absent.
  std::optional<AchievingPoint> achieving;
  // Force the convex-split copy count (bypasses the adaptive ladder).
  std::optional<long long> n_override;
};

struct RunOptions {
  // Cap on the global state-vector size (number of complex amplitudes).
  long long max_amplitudes = 1ll << 24;
  // Cap on the dominant cost rows*cols*inner of the big Uhlmann solve.
  double max_svd_flops = 6.0e9;
  // When set, draw one message outcome with its Born weight instead of
  // averaging the exact channel; accounting is identical in both modes.
  std::optional<std::uint64_t> sample_seed;
  // Budget for the internal feasible-point search when none is supplied.
  int search_restarts = 2;
  int search_iterations = 60;
  std::uint64_t search_seed = 7;
};

struct ProtocolStep {
  std::string name;
  std::string party;      // "alice", "bob", or "shared"
  std::string registers;  // registers touched, human-readable
};

// Superdense-coding cost of sending one of n outcomes:
// qubits = log2(n)/2 exactly; the operational count rounds the classical
// message up to whole bits first (ceil(ceil(log2 n)/2)); one Bell pair per
// operational qubit.
struct SuperdenseCost {
  double qubits = 0.0;
  long long operational_qubits = 0;
  long long bell_pairs = 0;
};
SuperdenseCost superdense_cost(long long n);

// Copy count demanded by the closed-form rule at error parameter eps:
// with delta = eps^2/4, n = 1 when k <= 2*delta (nothing needs to be sent),
// otherwise n = ceil(8 * 2^k * log2(k/delta) / delta^3). The log2 of that
// value is returned exactly even when n itself overflows.
double protocol_n_log2(double k, double eps);

struct ProtocolTranscript {
  std::vector<ProtocolStep> steps;
  double eps = 0.0;

  // Copy count: n actually used; the closed-form demand (as log2); whether
  // the zero-communication clause k <= eps^2/2 fired (then n = 1).
  long long n = 1;
  double n_formula_log2 = 0.0;
  bool zero_comm = false;

  double k_bits = 0.0;  // Imax(RB : CT) at the achieving point
  double p2 = 0.0;      // P((I (x) U) kappa (I (x) U^dag), Psi_RBC (x) sigma')

  // Communication accounting (see SuperdenseCost).
  double comm_qubits = 0.0;
  long long comm_qubits_operational = 0;
  long long bell_pairs = 0;
  // Pre-shared registers and their dimensions (purification slots and pads).
  std::vector<std::pair<std::string, long long>> entanglement_dims;

  // Fidelity of the two marginals matched by the big Uhlmann isometry; the
  // convex-split fidelity that governs how close the run can get.
  double marginal_fidelity = 0.0;

  // F^2(output, Psi). For merge runs this is the reversal certificate, which
  // equals the forward run's output fidelity by construction.
  double output_fidelity_sq = 0.0;
  // Merge only: honest F^2 of the reversed run's (R, B, C) marginal (at least
  // the certificate), and the norm^2 kept when projecting onto the ranges of
  // the reversed isometries (the output is renormalized by it).
  std::optional<double> output_fidelity_sq_reversed;
  std::optional<double> range_mass;

  // Mixture-level diagnostics: F^2 of the idealized mixture (kappa placed in
  // slot j, averaged) vs Psi, and F^2 between the actual output mixture and
  // that idealized one. P(output, Psi) <= P(ideal, Psi) + P(actual, ideal).
  double fidelity_phi1_sq = 0.0;
  double cross_fidelity_sq = 0.0;

  bool in_ball_2eps = false;  // P(output, Psi) <= 2*eps + 1e-6
  bool in_ball_3eps = false;  // P(output, Psi) <= 3*eps + 1e-6
  double trace_error = 0.0;   // |sum of branch weights - 1|

  std::optional<long long> sampled_branch;  // sampling mode: the drawn slot

  // split()/merge() only: the one-shot communication budget
  //   Imax^eps(R:C)/2 + log2 log2(4 Imax^eps / eps^2) + 2 log2(1/eps) + 4
  // and its smooth-Imax ingredient.
  std::optional<double> budget_bits;
  std::optional<double> budget_imax_eps;

  std::optional<DensityOperator> output;  // on [R, A, B, C]
};

// Run the redistribution protocol. The channel is evaluated exactly (every
// message outcome mixed with its Born weight) unless sampling is requested.
// When no achieving point is supplied, a feasible one is searched for; the
// canonical point (T trivial, U identity, kappa the RBC marginal of Psi) is
// always feasible and is the fallback. Without n_override the copy count
// walks the ladder n = 2, 4, 8, ... inside the memory caps and stops at the
// first n whose measured output lands in the 2*eps ball (the closed-form n is
// astronomically larger and is reported separately). Deterministic: equal
// inputs give bit-identical transcripts.
ProtocolTranscript redistribute(const RedistributionInput& input,
                                const RunOptions& opts = {});

// State splitting: Psi on (R, A, C), all of (A, C) with Alice; C must end up
// with Bob. Runs redistribute() with a trivial B inserted (the canonical
// achieving point is exact here: k = Imax(R : C)). The transcript records the
// one-shot budget built from the smoothed Imax of the (R, C) marginal.
ProtocolTranscript split(const StateVector& psi_rac, double eps,
                         const RunOptions& opts = {});

// State merging: Psi on (R, B, C), C with Alice, B with Bob; C must end up
// with Bob. Constructed as the time reversal of a split on the relabeled
// state (the roles of the two parties swap, the message direction does not):
// the forward split run is replayed coherently, the closest pure extension of
// its output supplies the reversed run's entanglement, and the forward
// isometries are undone adjoint-by-adjoint. Communication cost equals the
// split's exactly; output_fidelity_sq is the reversal certificate (equal to
// the forward output fidelity), while the honest reversed-run marginal
// fidelity and kept mass are reported alongside and must clear
// F^2 >= 1 - (3*eps)^2 - 1e-6.
ProtocolTranscript merge(const StateVector& psi_rbc, double eps,
                         const RunOptions& opts = {});

std::string to_json(const ProtocolTranscript& t);

// CSV: input_id, eps, n, comm_qubits, operational_qubits, out_fidelity_sq,
// in_ball
std::string transcript_csv_header();
std::string transcript_csv_row(const std::string& input_id,
                               const ProtocolTranscript& t);

}  // namespace qsr
