#include "qsr/convex_split.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "qsr/entropy.hpp"

namespace qsr {

namespace {

constexpr double kLn2 = 0.69314718055994531;
constexpr double kCqTol = 1e-13;  // classical-structure detection
constexpr double kInf = std::numeric_limits<double>::infinity();

// F_un(X, Y) = || sqrt(X) sqrt(Y) ||_1; also the state fidelity when X, Y
// have unit trace (divide-and-conquer SVD: Jacobi would crawl at dim ~1e3)
double fid_unnorm(const Mat& x, const Mat& y) {
  Eigen::BDCSVD<Mat> svd(mat_sqrt(x) * mat_sqrt(y));
  return svd.singularValues().sum();
}

double log_binom(long long n, long long m) {
  return std::lgamma(double(n) + 1.0) - std::lgamma(double(m) + 1.0) -
         std::lgamma(double(n - m) + 1.0);
}

// tr A log2 A over A's support (A PSD, not necessarily normalized)
double tr_a_log_a(const Mat& a) {
  EigResult e = eig_hermitian(a);
  double s = 0;
  for (long long i = 0; i < e.values.size(); ++i)
    if (e.values(i) > 0) s += e.values(i) * std::log2(e.values(i));
  return s;
}

// tr A log2 B; -inf when A has mass outside B's support
double tr_a_log_b(const Mat& a, const Mat& b) {
  EigResult e = eig_hermitian(b);
  const double cut = std::max(e.values.size() ? e.values(0) : 0.0, 1.0) * 1e-14;
  double s = 0;
  for (long long i = 0; i < e.values.size(); ++i) {
    const Vec v = e.vectors.col(i);
    const double mass = std::real(Scalar(v.adjoint() * (a * v)));
    if (e.values(i) <= cut) {
      if (mass > 1e-11) return -kInf;
      continue;
    }
    s += mass * std::log2(e.values(i));
  }
  return s;
}

// log2(1 + 2^k / n), stable for large k
double log2_one_plus_pow(double k, long long n) {
  const double x = std::exp2(k) / double(n);
  if (std::isinf(x)) return k - std::log2(double(n));
  return std::log1p(x) / kLn2;
}

long long dense_tau_dim(int dp, int dq, long long n, long long cap) {
  long long d = dp;
  for (long long i = 0; i < n; ++i) {
    d *= dq;
    if (d > cap) return -1;  // overflow-safe: cap is modest
  }
  return d;
}

// rho_{P Q_j} (x) sigma^{(x) n-1} arranged on [P, Q1..Qn] (j is 1-based)
Mat split_term(const Mat& rho, const Mat& sigma, int dp, int dq, long long n,
               long long j) {
  Mat base = rho;
  for (long long i = 1; i < n; ++i) base = kron(base, sigma);
  // source axes: [P, Q_j, Q_1, .., Q_{j-1}, Q_{j+1}, .., Q_n]
  std::vector<int> dims(size_t(n) + 1, dq);
  dims[0] = dp;
  std::vector<int> perm(size_t(n) + 1);
  perm[0] = 0;
  for (long long i = 1; i <= n; ++i) {
    if (i == j)
      perm[size_t(i)] = 1;
    else
      perm[size_t(i)] = int(i < j ? i + 1 : i);
  }
  return permute_matrix_axes(base, dims, perm);
}

struct CqBlocks {
  Mat r[2];      // P-blocks of rho_PQ over the classical Q basis
  double s[2];   // sigma diagonal
  double tr[2];  // traces of the blocks
  Mat rho_p;
};

std::optional<CqBlocks> cq_blocks(const ConvexSplitInstance& inst) {
  if (inst.sigma_q.layout().dim_at(0) != 2) return {};
  const Mat& sig = inst.sigma_q.matrix();
  if (std::abs(sig(0, 1)) > kCqTol || std::abs(sig(1, 0)) > kCqTol) return {};
  const Mat& rho = inst.rho_pq.matrix();
  const long long dp = rho.rows() / 2;
  CqBlocks b;
  b.r[0] = Mat::Zero(dp, dp);
  b.r[1] = Mat::Zero(dp, dp);
  for (long long p = 0; p < dp; ++p)
    for (long long pp = 0; pp < dp; ++pp) {
      if (std::abs(rho(2 * p, 2 * pp + 1)) > kCqTol ||
          std::abs(rho(2 * p + 1, 2 * pp)) > kCqTol)
        return {};
      b.r[0](p, pp) = rho(2 * p, 2 * pp);
      b.r[1](p, pp) = rho(2 * p + 1, 2 * pp + 1);
    }
  b.s[0] = std::real(sig(0, 0));
  b.s[1] = std::real(sig(1, 1));
  if (b.s[0] <= 0 || b.s[1] <= 0) return {};  // collapse needs full support
  b.tr[0] = std::real(b.r[0].trace());
  b.tr[1] = std::real(b.r[1].trace());
  b.rho_p = b.r[0] + b.r[1];
  return b;
}

// blocks of tau over a classical string of weight m (m ones among n):
//   A_m = w_m * At_m,  w_m = s0^{n-m} s1^m / n,
//   At_m = m R1/s1 + (n-m) R0/s0,  multiplicity C(n,m)
struct CqTauEntropies {
  double s_tau = 0;    // S(tau_{P Q1..Qn})
  double s_tau_q = 0;  // S(tau_{Q1..Qn})
};

CqTauEntropies cq_tau_entropies(const CqBlocks& b, long long n) {
  CqTauEntropies out;
  const double ls0 = std::log(b.s[0]), ls1 = std::log(b.s[1]);
  for (long long m = 0; m <= n; ++m) {
    const double lw = double(n - m) * ls0 + double(m) * ls1 - std::log(double(n));
    const double weight = std::exp(log_binom(n, m) + lw);
    if (weight == 0) continue;
    const double lw2 = lw / kLn2;
    Mat at = (double(m) / b.s[1]) * b.r[1] + (double(n - m) / b.s[0]) * b.r[0];
    const double tt = std::real(at.trace());
    out.s_tau -= weight * (tr_a_log_a(at) + tt * lw2);
    const double as = double(m) / b.s[1] * b.tr[1] +
                      double(n - m) / b.s[0] * b.tr[0];
    out.s_tau_q -= weight * ((as > 0 ? as * std::log2(as) : 0.0) + as * lw2);
  }
  return out;
}

// D(rho_{PQn} (x) sigma^{n-1} || rho_P (x) tau_Q), collapsed over strings:
// the left blocks depend on (weight of the first n-1 symbols, q_n) only and
// the weight ratio reduces to log2(n / (s_q * tt_m))
double cq_big_divergence(const CqBlocks& b, long long n) {
  double u[2], lg_s[2];
  for (int q = 0; q < 2; ++q) {
    u[q] = tr_a_log_a(b.r[q]) - tr_a_log_b(b.r[q], b.rho_p);
    lg_s[q] = std::log2(b.s[q]);
  }
  const double ls0 = std::log(b.s[0]), ls1 = std::log(b.s[1]);
  double d = 0;
  for (long long mp = 0; mp < n; ++mp) {
    const double w = std::exp(log_binom(n - 1, mp) + double(n - 1 - mp) * ls0 +
                              double(mp) * ls1);
    if (w == 0) continue;
    for (int q = 0; q < 2; ++q) {
      const long long m = mp + q;
      const double tt = double(m) / b.s[1] * b.tr[1] +
                        double(n - m) / b.s[0] * b.tr[0];
      d += w * (u[q] + b.tr[q] * (std::log2(double(n)) - lg_s[q] - std::log2(tt)));
    }
  }
  return d;
}

double cq_fidelity(const CqBlocks& b, long long n) {
  const double ls0 = std::log(b.s[0]), ls1 = std::log(b.s[1]);
  double f = 0;
  for (long long m = 0; m <= n; ++m) {
    const double lw = double(n - m) * ls0 + double(m) * ls1 - std::log(double(n));
    const double weight = std::exp(log_binom(n, m) + lw);
    if (weight == 0) continue;
    Mat at = (double(m) / b.s[1]) * b.r[1] + (double(n - m) / b.s[0]) * b.r[0];
    const double tt = std::real(at.trace());
    f += weight * std::sqrt(tt) * fid_unnorm(at, b.rho_p);
  }
  return f;
}

// exact tail sum_{m < (n-1) p (1-delta)} C(n-1,m) p^m (1-p)^{n-1-m}, p = 2^-k
double binomial_tail(double k, double delta, long long n) {
  if (n <= 1) return 0.0;
  const double p = std::exp2(-k);
  const double thresh = double(n - 1) * p * (1.0 - delta);
  if (p >= 1.0) return 0.0;  // all weight at m = n-1, above the threshold
  const double lp = -k * kLn2, l1p = std::log1p(-p);
  double tail = 0;
  for (long long m = 0; m < n && double(m) < thresh; ++m)
    tail += std::exp(log_binom(n - 1, m) + double(m) * lp +
                     double(n - 1 - m) * l1p);
  return tail;
}

struct LemmaQuantities {
  double mutual_info = 0;
  double fidelity_sq = 0;
};

std::string q_label(const ConvexSplitInstance& inst, long long i) {
  return inst.sigma_q.layout().label(0) + std::to_string(i);
}

Mat dense_tau_matrix(const ConvexSplitInstance& inst) {
  const int dp = inst.rho_pq.layout().dim_at(0);
  const int dq = inst.rho_pq.layout().dim_at(1);
  Mat tau;
  for (long long j = 1; j <= inst.n; ++j) {
    Mat term = split_term(inst.rho_pq.matrix(), inst.sigma_q.matrix(), dp, dq,
                          inst.n, j);
    if (j == 1)
      tau = term / double(inst.n);
    else
      tau += term / double(inst.n);
  }
  return tau;
}

}  // namespace

long long lemma_n(double k, double delta) {
  if (!(delta > 0.0) || !(delta < 1.0 / 6.0))
    throw invalid_input("delta must lie in (0, 1/6)");
  if (!std::isfinite(k) || k < 0)
    throw invalid_input("dominance coefficient k must be finite and >= 0");
  if (k <= 3.0 * delta) return 1;
  const double raw = std::ceil(8.0 * std::exp2(k) * std::log2(k / delta) /
                               (delta * delta * delta));
  if (!(raw < 9.0e15))
    throw invalid_input("copy count from the lemma formula overflows");
  return static_cast<long long>(raw);
}

ConvexSplitInstance make_instance(const DensityOperator& rho_pq,
                                  const DensityOperator& sigma_q, double delta,
                                  std::optional<long long> n_override) {
  if (!(delta > 0.0) || !(delta < 1.0 / 6.0))
    throw invalid_input("delta must lie in (0, 1/6)");
  if (rho_pq.layout().size() != 2)
    throw invalid_input("rho must live on exactly two registers [P, Q]");
  if (sigma_q.layout().size() != 1)
    throw invalid_input("sigma must live on exactly one register [Q]");
  const std::string ql = sigma_q.layout().label(0);
  if (!rho_pq.layout().has(ql))
    throw invalid_input("sigma's register label is absent from rho");
  if (rho_pq.layout().dim_of(ql) != sigma_q.layout().dim_at(0))
    throw invalid_input("sigma's dimension differs from rho's Q register");

  const std::string pl = rho_pq.layout().label(0) == ql
                             ? rho_pq.layout().label(1)
                             : rho_pq.layout().label(0);
  DensityOperator rho_canon = permute(rho_pq, {pl, ql});

  const DensityOperator rho_p = partial_trace(rho_canon, {pl});
  const double k =
      dmax(rho_canon.matrix(), kron(rho_p.matrix(), sigma_q.matrix()));
  if (!std::isfinite(k))
    throw invalid_input(
        "dominance coefficient is infinite: sigma does not dominate rho's "
        "Q marginal support");
  const double kk = std::max(k, 0.0);

  long long n = 1;
  if (n_override) {
    if (*n_override < 1) throw invalid_input("n override must be >= 1");
    n = *n_override;
  } else {
    n = lemma_n(kk, delta);
  }
  return ConvexSplitInstance{std::move(rho_canon), sigma_q, delta, kk, n,
                             n_override.has_value()};
}

DensityOperator build_tau(const ConvexSplitInstance& inst, long long mem_cap) {
  const int dp = inst.rho_pq.layout().dim_at(0);
  const int dq = inst.rho_pq.layout().dim_at(1);
  const long long d = dense_tau_dim(dp, dq, inst.n, mem_cap);
  if (d < 0)
    throw invalid_input(
        "dense tau dimension exceeds the memory cap; use "
        "derivation_diagnostics / the collapsed classical-on-Q path instead");

  std::vector<std::pair<std::string, int>> regs;
  regs.push_back({inst.rho_pq.layout().label(0), dp});
  for (long long i = 1; i <= inst.n; ++i) regs.push_back({q_label(inst, i), dq});
  DensityOperator tau(dense_tau_matrix(inst),
                      RegisterLayout(std::vector<std::pair<std::string, int>>(regs)));

  // the P marginal of tau is rho_P by construction; enforce it
  const Mat tau_p = partial_trace(tau, {inst.rho_pq.layout().label(0)}).matrix();
  const Mat rho_p =
      partial_trace(inst.rho_pq, {inst.rho_pq.layout().label(0)}).matrix();
  if ((tau_p - rho_p).cwiseAbs().maxCoeff() > 1e-10)
    throw std::runtime_error("tau construction lost the P marginal");
  return tau;
}

bool is_cq(const ConvexSplitInstance& inst) {
  return cq_blocks(inst).has_value();
}

double cq_tau_mutual_info(const ConvexSplitInstance& inst) {
  auto b = cq_blocks(inst);
  if (!b) throw invalid_input("instance is not classical on a qubit Q");
  const CqTauEntropies e = cq_tau_entropies(*b, inst.n);
  return -tr_a_log_a(b->rho_p) + e.s_tau_q - e.s_tau;
}

double cq_tau_fidelity_sq(const ConvexSplitInstance& inst) {
  auto b = cq_blocks(inst);
  if (!b) throw invalid_input("instance is not classical on a qubit Q");
  const double f = cq_fidelity(*b, inst.n);
  return std::min(f * f, 1.0);
}

namespace {

LemmaQuantities lemma_quantities(const ConvexSplitInstance& inst,
                                 long long mem_cap) {
  const int dp = inst.rho_pq.layout().dim_at(0);
  const int dq = inst.rho_pq.layout().dim_at(1);
  LemmaQuantities out;
  if (dense_tau_dim(dp, dq, inst.n, mem_cap) > 0) {
    const Mat tau = dense_tau_matrix(inst);
    std::vector<int> dims(size_t(inst.n) + 1, dq);
    dims[0] = dp;
    std::vector<int> qaxes;
    for (long long i = 1; i <= inst.n; ++i) qaxes.push_back(int(i));
    const Mat tau_q = partial_trace_axes(tau, dims, qaxes);
    const Mat rho_p = partial_trace_axes(inst.rho_pq.matrix(), {dp, dq}, {0});
    out.mutual_info = vn_entropy(rho_p) + vn_entropy(tau_q) - vn_entropy(tau);
    const double f = fid_unnorm(kron(rho_p, tau_q), tau);
    out.fidelity_sq = std::min(f * f, 1.0);
    return out;
  }
  if (is_cq(inst)) {
    out.mutual_info = cq_tau_mutual_info(inst);
    out.fidelity_sq = cq_tau_fidelity_sq(inst);
    return out;
  }
  throw invalid_input(
      "instance exceeds the dense cap and is not classical-on-Q; lower n or "
      "raise mem_cap");
}

}  // namespace

ProofStageTerms derivation_diagnostics(const ConvexSplitInstance& inst,
                                       long long mem_cap) {
  const int dp = inst.rho_pq.layout().dim_at(0);
  const int dq = inst.rho_pq.layout().dim_at(1);
  const long long n = inst.n;
  const double k = inst.k, delta = inst.delta;
  const Mat& rho = inst.rho_pq.matrix();
  const Mat& sig = inst.sigma_q.matrix();
  const Mat rho_p = partial_trace_axes(rho, {dp, dq}, {0});
  const Mat prod = kron(rho_p, sig);

  ProofStageTerms t;
  // small-space pieces: tau restricted to (P, Q_n) is an explicit mixture
  const Mat tau_pqn = (1.0 / double(n)) * rho + (double(n - 1) / double(n)) * prod;
  const double d_small = rel_entropy(rho, prod);
  t.eq2_lhs = rel_entropy(rho, tau_pqn);
  t.eq2_rhs = d_small - log2_one_plus_pow(k, n);

  const double chern = std::exp(-delta * delta * std::exp2(-k) *
                                double(n - 1) / 2.0);
  t.chernoff_bound = chern;
  t.binom_tail = binomial_tail(k, delta, n);
  t.eq3_rhs = d_small + std::log2(1.0 / (1.0 - delta)) +
              std::log2(double(n)) * chern;
  t.assembled_bound = std::log2(1.0 / (1.0 - delta)) +
                      std::log2(double(n)) * chern + log2_one_plus_pow(k, n);

  // large-space pieces: dense when tau fits, collapsed for classical-on-Q
  if (dense_tau_dim(dp, dq, n, mem_cap) > 0) {
    const Mat tau = dense_tau_matrix(inst);
    std::vector<int> dims(size_t(n) + 1, dq);
    dims[0] = dp;
    std::vector<int> qaxes;
    for (long long i = 1; i <= n; ++i) qaxes.push_back(int(i));
    const Mat tau_q = partial_trace_axes(tau, dims, qaxes);
    const Mat arg1 = split_term(rho, sig, dp, dq, n, n);
    t.eq3_lhs = rel_entropy(arg1, kron(rho_p, tau_q));
    t.eq1_lhs = vn_entropy(rho_p) + vn_entropy(tau_q) - vn_entropy(tau);
  } else if (auto b = cq_blocks(inst)) {
    t.eq3_lhs = cq_big_divergence(*b, n);
    const CqTauEntropies e = cq_tau_entropies(*b, n);
    t.eq1_lhs = -tr_a_log_a(b->rho_p) + e.s_tau_q - e.s_tau;
  } else {
    throw invalid_input(
        "instance exceeds the dense cap and is not classical-on-Q; lower n "
        "or raise mem_cap");
  }
  t.eq1_rhs = t.eq3_lhs - t.eq2_lhs;

  t.eq1_ok = t.eq1_lhs <= t.eq1_rhs + 1e-8;
  t.eq2_ok = t.eq2_lhs >= t.eq2_rhs - 1e-8;
  t.eq3_ok = t.eq3_lhs <= t.eq3_rhs + 1e-8;
  t.tail_ok = t.binom_tail <= t.chernoff_bound + 1e-8;
  return t;
}

SplitReport verify_lemma(const ConvexSplitInstance& inst, long long mem_cap) {
  SplitReport r;
  r.stage_terms = derivation_diagnostics(inst, mem_cap);
  const LemmaQuantities q = lemma_quantities(inst, mem_cap);
  r.mutual_info = q.mutual_info;
  r.fidelity_sq = q.fidelity_sq;
  r.bound_3delta_ok = r.mutual_info <= 3.0 * inst.delta + 1e-9;
  r.bound_6delta_ok = r.fidelity_sq >= 1.0 - 6.0 * inst.delta - 1e-9;
  r.chain_ok = std::sqrt(r.fidelity_sq) >= 1.0 - r.mutual_info - 1e-8;
  return r;
}

std::string to_json(const SplitReport& r) {
  nlohmann::json j;
  j["mutual_info"] = r.mutual_info;
  j["fidelity_sq"] = r.fidelity_sq;
  j["bound_3delta_ok"] = r.bound_3delta_ok;
  j["bound_6delta_ok"] = r.bound_6delta_ok;
  j["chain_ok"] = r.chain_ok;
  nlohmann::json s;
  s["eq1_lhs"] = r.stage_terms.eq1_lhs;
  s["eq1_rhs"] = r.stage_terms.eq1_rhs;
  s["eq2_lhs"] = r.stage_terms.eq2_lhs;
  s["eq2_rhs"] = r.stage_terms.eq2_rhs;
  s["eq3_lhs"] = r.stage_terms.eq3_lhs;
  s["eq3_rhs"] = r.stage_terms.eq3_rhs;
  s["assembled_bound"] = r.stage_terms.assembled_bound;
  s["binom_tail"] = r.stage_terms.binom_tail;
  s["chernoff_bound"] = r.stage_terms.chernoff_bound;
  s["eq1_ok"] = r.stage_terms.eq1_ok;
  s["eq2_ok"] = r.stage_terms.eq2_ok;
  s["eq3_ok"] = r.stage_terms.eq3_ok;
  s["tail_ok"] = r.stage_terms.tail_ok;
  j["stage_terms"] = s;
  return j.dump();
}

StateVector canonical_purification_of_tau(const ConvexSplitInstance& inst,
                                          long long mem_cap) {
  const int dp = inst.rho_pq.layout().dim_at(0);
  const int dq = inst.rho_pq.layout().dim_at(1);
  const long long n = inst.n;
  const long long d_tau = dense_tau_dim(dp, dq, n, mem_cap);
  if (d_tau < 0)
    throw invalid_input(
        "dense tau dimension exceeds the memory cap; the purification is "
        "only available for dense instances");
  if (n * d_tau > (1LL << 24) / d_tau)
    throw invalid_input("purification dimension exceeds 2^24");

  const std::string pl = inst.rho_pq.layout().label(0);
  const std::string ql = inst.sigma_q.layout().label(0);
  std::vector<std::pair<std::string, int>> regs;
  regs.push_back({"M", int(n)});
  regs.push_back({"S", dp});
  for (long long i = 1; i <= n; ++i)
    regs.push_back({"E" + std::to_string(i), dq});
  regs.push_back({pl, dp});
  for (long long i = 1; i <= n; ++i) regs.push_back({q_label(inst, i), dq});
  RegisterLayout layout(regs);  // throws on label collisions with M/S/E

  // |rho> on axes [P, Q, S, E] (the canonical ancilla of dim dp*dq split
  // with S major), |sigma> on axes [Q, E]
  const Vec rv = purify(inst.rho_pq, "__anc").vector();
  const Vec sv = purify(inst.sigma_q, "__anc").vector();

  const long long total = layout.dim();
  Vec mu = Vec::Zero(total);
  for (long long j = 1; j <= n; ++j) {
    Vec ej = Vec::Zero(n);
    ej(j - 1) = 1.0;
    Vec term = kron_vec(ej, rv);
    for (long long i = 1; i <= n; ++i)
      if (i != j) term = kron_vec(term, sv);
    // source axes: M, P, Q_j, S, E_j, then (Q_i, E_i) for i != j ascending
    std::vector<int> dims;
    dims.push_back(int(n));
    dims.push_back(dp);
    dims.push_back(dq);
    dims.push_back(dp);
    dims.push_back(dq);
    for (long long i = 1; i <= n; ++i)
      if (i != j) {
        dims.push_back(dq);
        dims.push_back(dq);
      }
    auto pair_pos = [&](long long i) {  // source axis of Q_i for i != j
      const long long t = i < j ? i - 1 : i - 2;
      return int(5 + 2 * t);
    };
    std::vector<int> perm;
    perm.push_back(0);  // M
    perm.push_back(3);  // S
    for (long long i = 1; i <= n; ++i)
      perm.push_back(i == j ? 4 : pair_pos(i) + 1);  // E_i
    perm.push_back(1);  // P
    for (long long i = 1; i <= n; ++i)
      perm.push_back(i == j ? 2 : pair_pos(i));  // Q_i
    mu += permute_vector_axes(term, dims, perm) / std::sqrt(double(n));
  }
  return StateVector(mu, layout);
}

}  // namespace qsr
