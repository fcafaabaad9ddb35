#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include "qsr/entropy.hpp"
#include "qsr/linalg.hpp"
#include "qsr/protocol.hpp"
#include "qsr/qeps.hpp"
#include "qsr/random.hpp"

namespace qsr {

namespace {

constexpr double kBallSlack = 1e-6;

// ---------------------------------------------------------------- raw helpers

// apply m (dout x din) to the frontmost din-dimensional block of v
Vec apply_matrix_front(const Vec& v, long long din, const Mat& m) {
  const long long rest = v.size() / din;
  const long long dout = m.rows();
  Eigen::Map<const Mat> x(v.data(), rest, din);  // column-major: front index = column
  Mat y = x * m.transpose();                     // (rest, dout)
  Vec out(rest * dout);
  for (long long a = 0; a < dout; ++a)
    for (long long r = 0; r < rest; ++r) out(a * rest + r) = y(r, a);
  return out;
}

struct RawState {
  Vec v;
  RegisterLayout layout;
};

RawState raw_permute(const RawState& s, const std::vector<std::string>& order) {
  std::vector<int> perm;
  perm.reserve(order.size());
  for (const auto& l : order) perm.push_back((int)s.layout.index_of(l));
  Vec out = permute_vector_axes(s.v, s.layout.dims(), perm);
  std::vector<std::pair<std::string, int>> regs;
  for (const auto& l : order) regs.push_back({l, s.layout.dim_of(l)});
  return RawState{std::move(out), RegisterLayout(regs)};
}

std::vector<std::string> labels_minus(const RegisterLayout& layout,
                                      const std::vector<std::string>& drop) {
  std::vector<std::string> out;
  for (const auto& l : layout.labels())
    if (std::find(drop.begin(), drop.end(), l) == drop.end()) out.push_back(l);
  return out;
}

// adjoint of an isometry: project back from its output registers onto its
// input registers (norm may shrink; the caller tracks it)
RawState raw_apply_adjoint(const IsometryMap& iso, const RawState& s) {
  std::vector<std::string> order = iso.output().labels();
  auto rest = labels_minus(s.layout, order);
  order.insert(order.end(), rest.begin(), rest.end());
  RawState moved = raw_permute(s, order);
  Vec out = apply_matrix_front(moved.v, iso.output().dim(), iso.matrix().adjoint());
  RegisterLayout lay = iso.input();
  for (const auto& l : rest)
    lay = lay.concat(RegisterLayout({{l, s.layout.dim_of(l)}}));
  return RawState{std::move(out), std::move(lay)};
}

// relabel axes without moving data: `from` (consecutive axes) fused/split into
// `to`, total dimension preserved
RegisterLayout reshape_layout(const RegisterLayout& layout,
                              const std::vector<std::string>& from,
                              const std::vector<std::pair<std::string, int>>& to) {
  std::vector<std::pair<std::string, int>> regs;
  const auto labels = layout.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == from[0]) {
      long long dfrom = 1;
      for (std::size_t k = 0; k < from.size(); ++k) {
        if (labels[i + k] != from[k]) throw invalid_input("reshape: axes not consecutive");
        dfrom *= layout.dim_of(from[k]);
      }
      long long dto = 1;
      for (const auto& r : to) dto *= r.second;
      if (dfrom != dto) throw invalid_input("reshape: dimension mismatch");
      for (const auto& r : to) regs.push_back(r);
      i += from.size() - 1;
    } else {
      regs.push_back({labels[i], layout.dim_of(labels[i])});
    }
  }
  return RegisterLayout(regs);
}

// ------------------------------------------------------------- purifications

// minimized purification: |p> = sum_k sqrt(l_k) |v_k>|k> with the ancilla
// dimension given (>= rank); ancilla appended as the least significant axes
Vec purify_to(const Mat& rho, long long danc) {
  auto eig = eig_hermitian(rho);
  const long long d = rho.rows();
  Vec out = Vec::Zero(d * danc);
  const long long kmax = std::min(danc, d);
  for (long long k = 0; k < kmax; ++k) {
    const double lk = eig.values(k);
    if (lk <= 0.0) continue;
    const double s = std::sqrt(lk);
    for (long long i = 0; i < d; ++i) out(i * danc + k) = s * eig.vectors(i, k);
  }
  return out;
}

std::string ename(long long i) { return "E" + std::to_string(i + 1); }
std::string fname(long long i) { return "F" + std::to_string(i + 1); }

// --------------------------------------------------------------- the engine

struct EngineSetup {
  StateVector psi;  // canonical [R, A, B, C]
  double eps = 0.0;
  AchievingPoint point;
  Mat kappa_pq;   // kappa permuted to [R, B, (C,T) fused]
  Mat sigma_q;    // Imax witness on the fused (C, T)
  double k_bits = 0.0;
  double p2 = 0.0;
  bool zero_comm = false;
  double n_formula_log2 = 0.0;
  long long rank_kappa = 0;
  long long dr = 1, da = 1, db = 1, dc = 1, dt = 1, dq = 1;
};

struct SizePlan {
  long long ds = 1, dpad = 1;
  long long mu_dim = 0, xi_dim = 0, g_dim = 0;
  long long r1 = 0, r2 = 0, df = 0;
  double flops = 0.0;
  long long amps = 0;
};

SizePlan plan_sizes(const EngineSetup& su, long long n) {
  SizePlan p;
  const long long dq = su.dq;
  long long dqn = 1;
  for (long long i = 0; i < n; ++i) {
    if (dqn > (1ll << 56) / dq) { p.amps = std::numeric_limits<long long>::max(); return p; }
    dqn *= dq;
  }
  p.ds = std::max<long long>((su.rank_kappa + dq - 1) / dq,
                             (su.da * su.dc + n - 1) / n);
  p.ds = std::max<long long>(p.ds, 1);
  const long long dse = p.ds * dq;
  p.dpad = std::max<long long>(1, (dse + su.da * su.dt - 1) / (su.da * su.dt));
  const long long drb = su.dr * su.db;
  p.r1 = n * p.ds * dqn;
  p.r2 = su.da * su.dc * dqn;
  p.df = drb * dqn;
  p.mu_dim = p.r1 * p.df;
  p.xi_dim = p.r2 * p.df;
  p.g_dim = (p.mu_dim / dse) * (su.da * su.dt * p.dpad);
  p.amps = std::max({p.mu_dim, p.xi_dim, p.g_dim});
  p.flops = double(p.r1) * double(p.r2) * double(p.df);
  return p;
}

bool plan_fits(const SizePlan& p, const RunOptions& opts) {
  return p.amps <= opts.max_amplitudes && p.flops <= opts.max_svd_flops &&
         p.r1 >= p.r2;
}

struct Capture {
  StateVector g;  // coherent global state after the full forward chain
  IsometryMap vprime, vfin, u;
  long long n = 1;
  StateVector psi4;  // the [R, A, B, C] input the forward run used
};

struct EngineOut {
  ProtocolTranscript t;
  std::optional<Capture> cap;
};

// controlled slot swap: on the canonical order [M, S, E1..En, R, B, F1..Fn],
// swap E1<->Ej and F1<->Fj inside the M = j slice (self-inverse)
Vec cswap_canonical(const Vec& v, long long n, const std::vector<int>& dims) {
  std::vector<int> inner(dims.begin() + 1, dims.end());
  const long long len = v.size() / n;
  Vec out(v.size());
  out.segment(0, len) = v.segment(0, len);  // j = 0: slot already in place
  for (long long j = 1; j < n; ++j) {
    std::vector<int> perm(inner.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::swap(perm[1], perm[1 + j]);              // E1 <-> E(j+1)
    std::swap(perm[1 + n + 2], perm[1 + n + 2 + j]);  // F1 <-> F(j+1)
    Vec seg = v.segment(j * len, len);
    out.segment(j * len, len) = permute_vector_axes(seg, inner, perm);
  }
  return out;
}

double pure_overlap_sq(const StateVector& psi, const DensityOperator& rho) {
  DensityOperator al = permute(rho, psi.layout().labels());
  const std::complex<double> v =
      psi.vector().adjoint() * (al.matrix() * psi.vector());
  return std::clamp(v.real(), 0.0, 1.0);
}

EngineOut run_fixed_n(const EngineSetup& su, long long n, const SizePlan& pl,
                      const RunOptions& opts, bool capture) {
  const long long dq = su.dq, ds = pl.ds, dse = ds * dq;
  long long dqn = 1;
  for (long long i = 0; i < n; ++i) dqn *= dq;

  // purification of kappa with purifier split (S, E1); its fused (C,T) axis
  // plays the bob-side slot F
  Vec kp = purify_to(su.kappa_pq, dse);
  // axes [R, B, Fslot, S, E]
  std::vector<int> kp_dims = {(int)su.dr, (int)su.db, (int)dq, (int)ds, (int)dq};

  // purification of the witness sigma, purifier (alice E) first
  Vec sp(dq * dq);
  {
    auto eig = eig_hermitian(su.sigma_q);
    sp.setZero();
    for (long long k = 0; k < dq; ++k) {
      const double lk = eig.values(k);
      if (lk <= 0.0) continue;
      for (long long f = 0; f < dq; ++f)
        sp(k * dq + f) = std::sqrt(lk) * eig.vectors(f, k);
    }
  }

  // canonical register order [M, S, E1..En, R, B, F1..Fn]
  std::vector<std::pair<std::string, int>> canon_regs;
  canon_regs.push_back({"M", (int)n});
  canon_regs.push_back({"S", (int)ds});
  for (long long i = 0; i < n; ++i) canon_regs.push_back({ename(i), (int)dq});
  canon_regs.push_back({"R", (int)su.dr});
  canon_regs.push_back({"B", (int)su.db});
  for (long long i = 0; i < n; ++i) canon_regs.push_back({fname(i), (int)dq});
  RegisterLayout canon(canon_regs);
  std::vector<std::string> canon_order = canon.labels();

  // the shared resource state: kappa's purification in slot j, sigma's in the
  // others, averaged coherently against the message register M
  Vec mu = Vec::Zero(pl.mu_dim);
  const long long branch_len = pl.mu_dim / n;
  const double wj = 1.0 / std::sqrt((double)n);
  for (long long j = 0; j < n; ++j) {
    // built axis order: [R, B, Fj, S, Ej] + [Ei, Fi] for i != j ascending
    Vec branch = kp;
    std::vector<int> bdims = kp_dims;
    std::vector<std::string> bnames = {"R", "B", fname(j), "S", ename(j)};
    for (long long i = 0; i < n; ++i) {
      if (i == j) continue;
      branch = kron_vec(branch, sp);
      bdims.push_back((int)dq);
      bdims.push_back((int)dq);
      bnames.push_back(ename(i));
      bnames.push_back(fname(i));
    }
    // permute to [S, E1..En, R, B, F1..Fn]
    std::vector<std::string> target(canon_order.begin() + 1, canon_order.end());
    std::vector<int> perm;
    perm.reserve(target.size());
    for (const auto& t : target) {
      auto it = std::find(bnames.begin(), bnames.end(), t);
      perm.push_back((int)(it - bnames.begin()));
    }
    mu.segment(j * branch_len, branch_len) =
        wj * permute_vector_axes(branch, bdims, perm);
  }
  StateVector mu_sv(mu, canon);

  // bob-side marginal of mu: mixture over which slot carries kappa's (C,T)
  Mat kq = partial_trace(DensityOperator(su.kappa_pq,
                                         RegisterLayout({{"R", (int)su.dr},
                                                         {"B", (int)su.db},
                                                         {"Q", (int)dq}})),
                         {"Q"})
               .matrix();
  Mat tau = Mat::Zero(dqn, dqn);
  for (long long j = 0; j < n; ++j) {
    Mat term = Mat::Identity(1, 1);
    for (long long i = 0; i < n; ++i) term = kron(term, i == j ? kq : su.sigma_q);
    tau += term / (double)n;
  }
  std::vector<std::pair<std::string, int>> fregs;
  for (long long i = 0; i < n; ++i) fregs.push_back({fname(i), (int)dq});
  StateVector theta = purify(DensityOperator(tau, RegisterLayout(fregs)), "G");

  StateVector xi = tensor(su.psi, theta);  // [R, A, B, C, F1..Fn, G]

  // alice's encoding isometry: (A, C, G) -> (M, S, E1..En)
  std::vector<std::string> fixed = {"R", "B"};
  for (long long i = 0; i < n; ++i) fixed.push_back(fname(i));
  UhlmannResult vprime = uhlmann_isometry_full(mu_sv, xi, fixed);

  StateVector xi_p = apply_isometry(vprime.v, xi);  // canonical order again
  StateVector xi_c = permute(xi_p, canon_order);

  // branch weights (norms of the M slices)
  std::vector<double> pj(n);
  {
    const long long len = xi_c.dim() / n;
    for (long long j = 0; j < n; ++j)
      pj[j] = xi_c.vector().segment(j * len, len).squaredNorm();
  }
  double psum = std::accumulate(pj.begin(), pj.end(), 0.0);

  // alice's finishing isometry: (S, E1) -> (A, Tp, W), from the ideal branch
  StateVector kp_sv(kp, RegisterLayout({{"R", (int)su.dr},
                                        {"B", (int)su.db},
                                        {"C", (int)su.dc},
                                        {"T", (int)su.dt},
                                        {"S", (int)ds},
                                        {ename(0), (int)dq}}));
  StateVector ideal_u = apply_isometry(su.point.u_bct, kp_sv);
  StateVector sig_pur = purify(su.point.sigma_prime, "Tp");  // [T, Tp]
  Vec pad0 = Vec::Zero(pl.dpad);
  pad0(0) = 1.0;
  StateVector target = tensor(tensor(su.psi, sig_pur),
                              StateVector(pad0, RegisterLayout({{"W", (int)pl.dpad}})));
  UhlmannResult vfin =
      uhlmann_isometry_full(target, ideal_u, {"R", "B", "C", "T"});

  // coherent chain: controlled slot swap, bob's decoder, alice's finisher
  auto chain = [&](const StateVector& start) {
    StateVector c = permute(start, canon_order);
    Vec sw = cswap_canonical(c.vector(), n, canon.dims());
    RegisterLayout split_f1 = reshape_layout(
        canon, {fname(0)}, {{"C", (int)su.dc}, {"T", (int)su.dt}});
    StateVector c2(sw, split_f1);
    StateVector c3 = apply_isometry(su.point.u_bct, c2);
    return apply_isometry(vfin.v, c3);
  };

  StateVector g = chain(xi_c);
  DensityOperator phi =
      permute(partial_trace(g, {"R", "A", "B", "C"}), {"R", "A", "B", "C"});
  StateVector g1 = chain(mu_sv);
  DensityOperator phi1 =
      permute(partial_trace(g1, {"R", "A", "B", "C"}), {"R", "A", "B", "C"});

  ProtocolTranscript t;
  t.eps = su.eps;
  t.n = n;
  t.n_formula_log2 = su.n_formula_log2;
  t.zero_comm = su.zero_comm;
  t.k_bits = su.k_bits;
  t.p2 = su.p2;
  SuperdenseCost sc = superdense_cost(n);
  t.comm_qubits = sc.qubits;
  t.comm_qubits_operational = sc.operational_qubits;
  t.bell_pairs = sc.bell_pairs;
  t.entanglement_dims.push_back({"G", theta.layout().dim_of("G")});
  for (long long i = 0; i < n; ++i) t.entanglement_dims.push_back({fname(i), dq});
  t.entanglement_dims.push_back({"W", pl.dpad});
  t.marginal_fidelity = vprime.overlap;
  t.fidelity_phi1_sq = pure_overlap_sq(su.psi, phi1);
  t.cross_fidelity_sq = [&] {
    const double f = fidelity(phi, phi1);
    return std::clamp(f * f, 0.0, 1.0);
  }();
  t.trace_error = std::abs(psum - 1.0);

  DensityOperator output = phi;
  if (opts.sample_seed) {
    Rng rng(*opts.sample_seed);
    const double u01 = rng.uniform();
    double acc = 0.0;
    long long jstar = n - 1;
    for (long long j = 0; j < n; ++j) {
      acc += pj[j] / psum;
      if (u01 <= acc) { jstar = j; break; }
    }
    StateVector gm = permute(g, [&] {
      std::vector<std::string> o = {"M"};
      auto rest = labels_minus(g.layout(), {"M"});
      o.insert(o.end(), rest.begin(), rest.end());
      return o;
    }());
    const long long len = gm.dim() / n;
    Vec sl = gm.vector().segment(jstar * len, len);
    sl /= sl.norm();
    RegisterLayout slay({{"_m1", 1}});
    auto rest = labels_minus(gm.layout(), {"M"});
    for (const auto& l : rest) slay = slay.concat(RegisterLayout({{l, gm.layout().dim_of(l)}}));
    StateVector branch(sl, slay);
    output = permute(partial_trace(branch, {"R", "A", "B", "C"}),
                     {"R", "A", "B", "C"});
    t.sampled_branch = jstar;
  }
  t.output_fidelity_sq = pure_overlap_sq(su.psi, output);
  const double pout = std::sqrt(std::max(0.0, 1.0 - t.output_fidelity_sq));
  t.in_ball_2eps = pout <= 2.0 * su.eps + kBallSlack;
  t.in_ball_3eps = pout <= 3.0 * su.eps + kBallSlack;
  t.output = output;

  char buf[160];
  std::snprintf(buf, sizeof(buf), "G (alice) entangled with F1..F%lld (bob); pad W (alice)",
                (long long)n);
  t.steps.push_back({"preshare", "shared", buf});
  std::snprintf(buf, sizeof(buf), "V': (A, C, G) -> (M, S, E1..E%lld)", (long long)n);
  t.steps.push_back({"encode", "alice", buf});
  std::snprintf(buf, sizeof(buf), "M via superdense coding: %.6g qubits", sc.qubits);
  t.steps.push_back({"send", "alice", buf});
  t.steps.push_back({"select", "both", "swap E_j <-> E1 (alice), F_j <-> F1 (bob), controlled on M"});
  t.steps.push_back({"decode", "bob", "U on (B, C, T), F1 read as (C, T)"});
  t.steps.push_back({"finish", "alice", "V_fin: (S, E1) -> (A, Tp, W)"});
  t.steps.push_back({"discard", "both", "trace M, Tp, W, T, E2.., F2.."});

  EngineOut out{std::move(t), std::nullopt};
  if (capture)
    out.cap = Capture{g, vprime.v, vfin.v, su.point.u_bct, n, su.psi};
  return out;
}

StateVector canonicalize_rabc(const StateVector& psi) {
  for (const char* l : {"R", "A", "B", "C"})
    if (!psi.layout().has(l))
      throw invalid_input(std::string("redistribute: input needs register '") + l + "'");
  if (psi.layout().labels().size() != 4)
    throw invalid_input("redistribute: input must carry exactly R, A, B, C");
  return permute(psi, {"R", "A", "B", "C"});
}

EngineSetup build_setup(const StateVector& psi4, double eps,
                        const AchievingPoint& pt) {
  EngineSetup su{psi4, eps, pt, Mat(), Mat(), 0, 0, false, 0.0, 0,
                 psi4.layout().dim_of("R"), psi4.layout().dim_of("A"),
                 psi4.layout().dim_of("B"), psi4.layout().dim_of("C"), pt.t_dim,
                 0};
  su.dq = su.dc * su.dt;

  // validate the achieving point
  const std::vector<std::string> kl = {"R", "B", "C", "T"};
  for (const auto& l : kl)
    if (!pt.kappa.layout().has(l))
      throw invalid_input("achieving point: kappa needs register '" + l + "'");
  DensityOperator kappa = permute(pt.kappa, kl);
  if (kappa.layout().dim_of("R") != su.dr || kappa.layout().dim_of("B") != su.db ||
      kappa.layout().dim_of("C") != su.dc || kappa.layout().dim_of("T") != pt.t_dim)
    throw invalid_input("achieving point: kappa dimensions mismatch");
  if (pt.sigma_prime.dim() != pt.t_dim || !pt.sigma_prime.layout().has("T"))
    throw invalid_input("achieving point: sigma' must live on register T of dim t_dim");
  {
    auto inl = pt.u_bct.input().labels();
    auto outl = pt.u_bct.output().labels();
    std::sort(inl.begin(), inl.end());
    std::sort(outl.begin(), outl.end());
    if (inl != std::vector<std::string>{"B", "C", "T"} || inl != outl ||
        pt.u_bct.input().dim() != pt.u_bct.output().dim())
      throw invalid_input("achieving point: U must be a unitary on (B, C, T)");
  }
  DensityOperator psi_rb = partial_trace(psi4, {"R", "B"});
  DensityOperator kap_rb = permute(partial_trace(kappa, {"R", "B"}), {"R", "B"});
  const double rbdev =
      (kap_rb.matrix() - permute(psi_rb, {"R", "B"}).matrix()).cwiseAbs().maxCoeff();
  if (rbdev > 1e-8)
    throw invalid_input("achieving point: kappa_RB deviates from Psi_RB");

  DensityOperator rot = permute(apply_isometry(pt.u_bct, kappa), kl);
  DensityOperator psi_rbc = partial_trace(psi4, {"R", "B", "C"});
  DensityOperator ideal =
      permute(tensor(psi_rbc, pt.sigma_prime), kl);
  su.p2 = purified_distance(rot, ideal);
  if (su.p2 > eps + kBallSlack)
    throw invalid_input("achieving point: rotated extension misses the eps-ball");

  QuantityResult im = imax(kappa, {"R", "B"}, {"C", "T"});
  su.k_bits = im.value;
  if (!im.witness) throw invalid_input("imax witness unavailable");
  su.sigma_q = *im.witness;

  su.kappa_pq = kappa.matrix();
  auto eig = eig_hermitian(su.kappa_pq);
  su.rank_kappa = 0;
  for (long long i = 0; i < eig.values.size(); ++i)
    if (eig.values(i) > 1e-12) ++su.rank_kappa;
  su.rank_kappa = std::max<long long>(su.rank_kappa, 1);

  const double delta = eps * eps / 4.0;
  su.zero_comm = su.k_bits <= 2.0 * delta + 1e-12;
  su.n_formula_log2 = protocol_n_log2(su.k_bits, eps);
  return su;
}

EngineOut run_protocol(const RedistributionInput& input, const RunOptions& opts,
                       bool capture) {
  if (!(input.eps > 0.0 && input.eps < 1.0 / 3.0))
    throw invalid_input("redistribute: eps must lie in (0, 1/3)");
  StateVector psi4 = canonicalize_rabc(input.psi);

  AchievingPoint pt = input.achieving
                          ? *input.achieving
                          : [&] {
                              QepsOptions qo;
                              qo.restarts = opts.search_restarts;
                              qo.iterations = opts.search_iterations;
                              qo.seed = opts.search_seed;
                              auto est = qeps_upper(psi4, input.eps, 1, qo);
                              return *est.feasible_point;
                            }();
  EngineSetup su = build_setup(psi4, input.eps, pt);

  std::vector<long long> ladder;
  if (input.n_override) {
    if (*input.n_override < 1)
      throw invalid_input("redistribute: n_override must be >= 1");
    ladder = {*input.n_override};
  } else if (su.zero_comm) {
    ladder = {1};
  } else {
    for (long long n = 2;; n *= 2) {
      SizePlan p = plan_sizes(su, n);
      if (!plan_fits(p, opts)) break;
      ladder.push_back(n);
      if (n > (1ll << 40)) break;
    }
    if (ladder.empty())
      throw invalid_input("redistribute: no copy count fits within the caps");
  }

  std::optional<EngineOut> last;
  for (long long n : ladder) {
    SizePlan p = plan_sizes(su, n);
    if (!plan_fits(p, opts)) {
      if (input.n_override)
        throw invalid_input("redistribute: n_override exceeds the configured caps");
      break;
    }
    last = run_fixed_n(su, n, p, opts, capture);
    const double pout =
        std::sqrt(std::max(0.0, 1.0 - last->t.output_fidelity_sq));
    if (pout <= 2.0 * input.eps + kBallSlack) break;
  }
  if (!last) throw invalid_input("redistribute: no copy count fits within the caps");
  return std::move(*last);
}

// one-shot communication budget for splitting: half the smoothed Imax plus a
// double-log overhead plus the O(log 1/eps) surrogate 2 log2(1/eps) + 4
std::pair<double, double> split_budget(const StateVector& psi4, double eps) {
  DensityOperator rc = partial_trace(psi4, {"R", "C"});
  SmoothOptions so;
  so.restarts = 2;
  so.iters = 60;
  QuantityResult sm = smooth(SmoothQuantity::imax, rc, {"R"}, {"C"}, eps, so);
  const double is = std::max(0.0, sm.value);
  const double inner = std::max(4.0 * is / (eps * eps), 2.0);
  const double loglog = std::log2(std::max(std::log2(inner), 1.0));
  const double budget = 0.5 * is + loglog + 2.0 * std::log2(1.0 / eps) + 4.0;
  return {budget, is};
}

StateVector insert_trivial(const StateVector& psi, const std::string& label,
                           const std::vector<std::string>& order) {
  RegisterLayout lay = psi.layout().concat(RegisterLayout({{label, 1}}));
  return permute(StateVector(psi.vector(), lay), order);
}

}  // namespace

double protocol_n_log2(double k, double eps) {
  const double delta = eps * eps / 4.0;
  if (k <= 2.0 * delta + 1e-12) return 0.0;
  const double ratio = std::max(k / delta, 2.0 + 1e-12);
  return 3.0 + k + std::log2(std::log2(ratio)) - 3.0 * std::log2(delta);
}

SuperdenseCost superdense_cost(long long n) {
  if (n < 1) throw invalid_input("superdense_cost: n must be positive");
  SuperdenseCost c;
  c.qubits = std::log2((double)n) / 2.0;
  long long bits = 0;
  while ((1ll << bits) < n) ++bits;
  c.operational_qubits = (bits + 1) / 2;
  c.bell_pairs = c.operational_qubits;
  return c;
}

ProtocolTranscript redistribute(const RedistributionInput& input,
                                const RunOptions& opts) {
  return run_protocol(input, opts, false).t;
}

ProtocolTranscript split(const StateVector& psi_rac, double eps,
                         const RunOptions& opts) {
  for (const char* l : {"R", "A", "C"})
    if (!psi_rac.layout().has(l))
      throw invalid_input(std::string("split: input needs register '") + l + "'");
  StateVector psi4 = psi_rac.layout().has("B")
                         ? permute(psi_rac, {"R", "A", "B", "C"})
                         : insert_trivial(psi_rac, "B", {"R", "A", "B", "C"});
  if (psi4.layout().dim_of("B") != 1)
    throw invalid_input("split: register B must be absent or trivial");

  RedistributionInput in{psi4, eps, canonical_achieving_point(psi4), std::nullopt};
  ProtocolTranscript t = run_protocol(in, opts, false).t;
  auto [budget, is] = split_budget(psi4, eps);
  t.budget_bits = budget;
  t.budget_imax_eps = is;
  return t;
}

ProtocolTranscript merge(const StateVector& psi_rbc, double eps,
                         const RunOptions& opts) {
  for (const char* l : {"R", "B", "C"})
    if (!psi_rbc.layout().has(l))
      throw invalid_input(std::string("merge: input needs register '") + l + "'");
  StateVector psim = psi_rbc.layout().has("A")
                         ? permute(psi_rbc, {"R", "A", "B", "C"})
                         : insert_trivial(psi_rbc, "A", {"R", "A", "B", "C"});
  if (psim.layout().dim_of("A") != 1)
    throw invalid_input("merge: register A must be absent or trivial");

  // the time-reversed protocol is a split on the input with the roles of A
  // and B exchanged
  StateVector psis = permute(
      StateVector(permute(psim, {"R", "B", "A", "C"}).vector(),
                  RegisterLayout({{"R", psim.layout().dim_of("R")},
                                  {"A", psim.layout().dim_of("B")},
                                  {"B", psim.layout().dim_of("A")},
                                  {"C", psim.layout().dim_of("C")}})),
      {"R", "A", "B", "C"});

  RedistributionInput in{psis, eps, canonical_achieving_point(psis), std::nullopt};
  RunOptions mopts = opts;
  mopts.sample_seed.reset();  // the reversal needs the exact coherent run
  EngineOut fwd = run_protocol(in, mopts, true);
  const Capture& cap = *fwd.cap;

  // contract the coherent forward output against the ideal state: the norm of
  // the leftover vector certifies the forward fidelity, and its conjugate is
  // the closest pure extension -- the entanglement the reversed run starts from
  std::vector<std::string> outl = {"R", "A", "B", "C"};
  auto junk = labels_minus(cap.g.layout(), outl);
  std::vector<std::string> order = outl;
  order.insert(order.end(), junk.begin(), junk.end());
  RawState graw{cap.g.vector(), cap.g.layout()};
  RawState gord = raw_permute(graw, order);
  const long long dout = cap.psi4.dim();
  const long long djunk = gord.v.size() / dout;
  Eigen::Map<const Mat> xm(gord.v.data(), djunk, dout);  // column-major
  Vec ve = xm.conjugate() * cap.psi4.vector();
  const double fcert = ve.norm();
  if (fcert < 1e-12) throw invalid_input("merge: forward run has zero fidelity");
  Vec mup = ve.conjugate() / fcert;

  // reversed run: start from Psi (x) mu', undo the forward chain
  RawState cur{kron_vec(cap.psi4.vector(), mup), gord.layout};
  cur = raw_permute(cur, cap.g.layout().labels());
  cur = raw_apply_adjoint(cap.vfin, cur);   // (A, Tp, W) -> (S, E1)
  cur = raw_apply_adjoint(cap.u, cur);      // undo bob's decoder
  cur.layout = reshape_layout(cur.layout, {"C", "T"},
                              {{fname(0), (int)(cur.layout.dim_of("C") *
                                                cur.layout.dim_of("T"))}});
  {
    std::vector<std::string> canon_order = {"M", "S"};
    for (long long i = 0; i < cap.n; ++i) canon_order.push_back(ename(i));
    canon_order.push_back("R");
    canon_order.push_back("B");
    for (long long i = 0; i < cap.n; ++i) canon_order.push_back(fname(i));
    cur = raw_permute(cur, canon_order);
    cur.v = cswap_canonical(cur.v, cap.n, cur.layout.dims());
  }
  cur = raw_apply_adjoint(cap.vprime, cur);  // (M, S, E..) -> (A, C, G)

  const double mass = cur.v.squaredNorm();
  cur.v /= std::sqrt(mass);
  cur = raw_permute(cur, [&] {
    std::vector<std::string> o = {"R", "A", "B", "C"};
    auto rest = labels_minus(cur.layout, o);
    o.insert(o.end(), rest.begin(), rest.end());
    return o;
  }());
  Mat phim = vector_marginal_axes(cur.v, cur.layout.dims(), {0, 1, 2, 3});
  // back to merge labeling: the split's A is the merge's B
  DensityOperator phi_rev =
      permute(DensityOperator(phim, RegisterLayout({{"R", (int)psim.layout().dim_of("R")},
                                                    {"B", (int)psim.layout().dim_of("B")},
                                                    {"A", 1},
                                                    {"C", (int)psim.layout().dim_of("C")}})),
              {"R", "A", "B", "C"});

  ProtocolTranscript t = fwd.t;
  t.output = phi_rev;
  t.output_fidelity_sq = fcert * fcert;
  t.output_fidelity_sq_reversed = pure_overlap_sq(psim, phi_rev);
  t.range_mass = mass;
  const double pout =
      std::sqrt(std::max(0.0, 1.0 - *t.output_fidelity_sq_reversed));
  t.in_ball_2eps = pout <= 2.0 * eps + kBallSlack;
  t.in_ball_3eps = pout <= 3.0 * eps + kBallSlack;
  auto [budget, is] = split_budget(psis, eps);
  t.budget_bits = budget;
  t.budget_imax_eps = is;

  // reversed step list with the party roles exchanged (split-Alice acts as
  // merge-Bob). The send is the exception: reversing also flips who transmits,
  // and the two swaps cancel — the merge message still leaves Alice.
  std::vector<ProtocolStep> rev;
  for (auto it = t.steps.rbegin(); it != t.steps.rend(); ++it) {
    ProtocolStep s = *it;
    if (s.name != "send") {
      if (s.party == "alice") s.party = "bob";
      else if (s.party == "bob") s.party = "alice";
      s.name = "undo " + s.name;
    }
    rev.push_back(s);
  }
  t.steps = std::move(rev);
  return t;
}

std::string to_json(const ProtocolTranscript& t) {
  std::ostringstream os;
  auto num = [](double x) {
    char b[40];
    std::snprintf(b, sizeof(b), "%.17g", x);
    return std::string(b);
  };
  os << "{\n  \"eps\": " << num(t.eps) << ",\n  \"n\": " << t.n
     << ",\n  \"n_formula_log2\": " << num(t.n_formula_log2)
     << ",\n  \"zero_comm\": " << (t.zero_comm ? "true" : "false")
     << ",\n  \"k_bits\": " << num(t.k_bits) << ",\n  \"p2\": " << num(t.p2)
     << ",\n  \"comm_qubits\": " << num(t.comm_qubits)
     << ",\n  \"comm_qubits_operational\": " << t.comm_qubits_operational
     << ",\n  \"bell_pairs\": " << t.bell_pairs
     << ",\n  \"marginal_fidelity\": " << num(t.marginal_fidelity)
     << ",\n  \"output_fidelity_sq\": " << num(t.output_fidelity_sq);
  if (t.output_fidelity_sq_reversed)
    os << ",\n  \"output_fidelity_sq_reversed\": "
       << num(*t.output_fidelity_sq_reversed);
  if (t.range_mass) os << ",\n  \"range_mass\": " << num(*t.range_mass);
  os << ",\n  \"fidelity_phi1_sq\": " << num(t.fidelity_phi1_sq)
     << ",\n  \"cross_fidelity_sq\": " << num(t.cross_fidelity_sq)
     << ",\n  \"in_ball_2eps\": " << (t.in_ball_2eps ? "true" : "false")
     << ",\n  \"in_ball_3eps\": " << (t.in_ball_3eps ? "true" : "false")
     << ",\n  \"trace_error\": " << num(t.trace_error);
  if (t.sampled_branch) os << ",\n  \"sampled_branch\": " << *t.sampled_branch;
  if (t.budget_bits) os << ",\n  \"budget_bits\": " << num(*t.budget_bits);
  if (t.budget_imax_eps)
    os << ",\n  \"budget_imax_eps\": " << num(*t.budget_imax_eps);
  os << ",\n  \"entanglement_dims\": [";
  for (std::size_t i = 0; i < t.entanglement_dims.size(); ++i) {
    if (i) os << ", ";
    os << "[\"" << t.entanglement_dims[i].first << "\", "
       << t.entanglement_dims[i].second << "]";
  }
  os << "],\n  \"steps\": [";
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    if (i) os << ", ";
    os << "{\"name\": \"" << t.steps[i].name << "\", \"party\": \""
       << t.steps[i].party << "\", \"registers\": \"" << t.steps[i].registers
       << "\"}";
  }
  os << "]\n}";
  return os.str();
}

std::string transcript_csv_header() {
  return "input_id,eps,n,comm_qubits,operational_qubits,out_fidelity_sq,in_ball";
}

std::string transcript_csv_row(const std::string& input_id,
                               const ProtocolTranscript& t) {
  char b[256];
  std::snprintf(b, sizeof(b), "%s,%.17g,%lld,%.17g,%lld,%.17g,%d",
                input_id.c_str(), t.eps, t.n, t.comm_qubits,
                t.comm_qubits_operational, t.output_fidelity_sq,
                t.in_ball_2eps ? 1 : 0);
  return std::string(b);
}

}  // namespace qsr
