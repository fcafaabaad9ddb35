#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <sstream>

#include "qsr/entropy.hpp"
#include "qsr/linalg.hpp"
#include "qsr/qeps.hpp"
#include "qsr/random.hpp"

namespace qsr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kMix = 0x9e3779b97f4a7c15ull;

Mat expi(const Mat& h) {
  EigResult eg = eig_hermitian(h);
  const long long d = h.rows();
  Mat out = Mat::Zero(d, d);
  for (long long k = 0; k < d; ++k) {
    const std::complex<double> ph(std::cos(eg.values(k)), std::sin(eg.values(k)));
    out.noalias() += ph * (eg.vectors.col(k) * eg.vectors.col(k).adjoint());
  }
  return out;
}

Mat random_hermitian(long long d, double scale, Rng& rng) {
  Mat h(d, d);
  for (long long i = 0; i < d; ++i) {
    h(i, i) = scale * rng.normal();
    for (long long j = i + 1; j < d; ++j) {
      h(i, j) = scale * rng.complex_normal();
      h(j, i) = std::conj(h(i, j));
    }
  }
  return h;
}

StateVector basis0(const std::string& label, long long d) {
  Vec v = Vec::Zero(d);
  v(0) = 1.0;
  return StateVector(v, RegisterLayout({{label, (int)d}}));
}

// accept a state on [R, B, C] or [R, A, B, C]; canonicalize to the latter
StateVector qeps_canonical(const StateVector& psi) {
  for (const char* l : {"R", "B", "C"})
    if (!psi.layout().has(l))
      throw invalid_input(std::string("qeps: input needs register '") + l + "'");
  StateVector cur = psi;
  if (!cur.layout().has("A"))
    cur = StateVector(cur.vector(), cur.layout().concat(RegisterLayout({{"A", 1}})));
  if (cur.layout().labels().size() != 4)
    throw invalid_input("qeps: input must carry R, B, C and optionally A");
  return permute(cur, {"R", "A", "B", "C"});
}

// fixed scaffolding of the upper-bound ansatz at one T dimension
struct Ansatz {
  DensityOperator psi_rbc;  // [R, B, C]
  Mat psi_rb;               // [R, B] marginal, the hard constraint
  StateVector src;          // [R, B, P1, anc]
  IsometryMap w0;           // (P1, anc) -> (A, C, T, Pad), the canonical seed
  RegisterLayout u_lay;     // [B, C, T]
  long long dbig = 1, dbct = 1, t = 1;
};

Ansatz build_ansatz(const StateVector& psi4, long long t) {
  const long long dr = psi4.layout().dim_of("R"), da = psi4.layout().dim_of("A"),
                  db = psi4.layout().dim_of("B"), dc = psi4.layout().dim_of("C");
  const long long drb = dr * db, danc = dc * t * da;

  DensityOperator rho_rb =
      permute(partial_trace(psi4, {"R", "B"}), {"R", "B"});
  StateVector phi = purify(rho_rb, "P1");  // [R, B, P1(drb)]
  StateVector src = tensor(phi, basis0("anc", danc));
  StateVector tgt = tensor(tensor(psi4, basis0("T", t)), basis0("Pad", drb));
  UhlmannResult w0 = uhlmann_isometry_full(tgt, src, {"R", "B"});

  Ansatz az{permute(partial_trace(psi4, {"R", "B", "C"}), {"R", "B", "C"}),
            rho_rb.matrix(),
            src,
            w0.v,
            RegisterLayout({{"B", (int)db}, {"C", (int)dc}, {"T", (int)t}}),
            drb * danc,
            db * dc * t,
            t};
  return az;
}

struct Candidate {
  DensityOperator kappa;   // [R, B, C, T]
  IsometryMap u;           // on [B, C, T]
  DensityOperator sigma;   // [T]
  double p = 1.0;          // purified distance of the rotated state to ideal
  double rb_residual = 0.0;
  double k = kInf;         // Imax(RB : CT), set when scored
};

Candidate evaluate(const Ansatz& az, const Mat& kgen, const Mat& hgen) {
  Mat w = expi(kgen) * az.w0.matrix();
  IsometryMap wiso(w, az.w0.input(), az.w0.output());
  StateVector big = apply_isometry(wiso, az.src);
  DensityOperator kappa =
      permute(partial_trace(big, {"R", "B", "C", "T"}), {"R", "B", "C", "T"});
  IsometryMap u(expi(hgen), az.u_lay, az.u_lay);
  DensityOperator rotated =
      permute(apply_isometry(u, kappa), {"R", "B", "C", "T"});
  DensityOperator sigma = partial_trace(rotated, {"T"});
  DensityOperator ideal = tensor(az.psi_rbc, sigma);  // already [R, B, C, T]

  Candidate c{std::move(kappa), std::move(u), std::move(sigma), 0.0, 0.0, kInf};
  c.p = purified_distance(rotated, ideal);
  c.rb_residual = (permute(partial_trace(c.kappa, {"R", "B"}), {"R", "B"}).matrix() -
                   az.psi_rb)
                      .cwiseAbs()
                      .maxCoeff();
  return c;
}

double score_imax(const Candidate& c) {
  return imax(c.kappa, {"R", "B"}, {"C", "T"}).value;
}

// one coordinate of a Hermitian parameter matrix: upper-triangle indices
// address real perturbations, lower-triangle the imaginary ones
void bump(Mat& m, long long idx, double amount) {
  const long long d = m.rows();
  const long long i = idx / d, j = idx % d;
  if (i == j) {
    m(i, i) += amount;
  } else if (i < j) {
    m(i, j) += amount;
    m(j, i) = std::conj(m(i, j));
  } else {
    m(j, i) += std::complex<double>(0.0, amount);
    m(i, j) = std::conj(m(j, i));
  }
}

StateVector doubled_state(const StateVector& psi4) {
  RegisterLayout second = psi4.layout()
                              .renamed("R", "R2")
                              .renamed("A", "A2")
                              .renamed("B", "B2")
                              .renamed("C", "C2");
  StateVector prod = tensor(psi4, StateVector(psi4.vector(), second));
  StateVector perm =
      permute(prod, {"R", "R2", "A", "A2", "B", "B2", "C", "C2"});
  auto d = [&](const char* l) { return psi4.layout().dim_of(l); };
  RegisterLayout fused({{"R", d("R") * d("R")},
                        {"A", d("A") * d("A")},
                        {"B", d("B") * d("B")},
                        {"C", d("C") * d("C")}});
  return StateVector(perm.vector(), fused);
}

std::string num(double x) {
  if (std::isnan(x)) return "\"nan\"";
  if (std::isinf(x)) return x > 0 ? "\"inf\"" : "\"-inf\"";
  char b[40];
  std::snprintf(b, sizeof(b), "%.17g", x);
  return std::string(b);
}

}  // namespace

AchievingPoint canonical_achieving_point(const StateVector& psi) {
  StateVector psi4 = qeps_canonical(psi);
  DensityOperator sigma1(Mat::Identity(1, 1), RegisterLayout({{"T", 1}}));
  DensityOperator kappa =
      tensor(permute(partial_trace(psi4, {"R", "B", "C"}), {"R", "B", "C"}),
             sigma1);
  const long long dbct =
      psi4.layout().dim_of("B") * psi4.layout().dim_of("C");
  RegisterLayout u_lay({{"B", psi4.layout().dim_of("B")},
                        {"C", psi4.layout().dim_of("C")},
                        {"T", 1}});
  IsometryMap u(Mat::Identity(dbct, dbct), u_lay, u_lay);
  return AchievingPoint{1, u, sigma1, kappa};
}

QepsEstimate qeps_upper(const StateVector& psi, double eps, long long t_dim,
                        const QepsOptions& opts) {
  if (!(eps > 0.0 && eps < 1.0))
    throw invalid_input("qeps_upper: eps must lie in (0, 1)");
  if (t_dim < 1 || t_dim > 4)
    throw invalid_input("qeps_upper: t_dim must lie in [1, 4]");
  StateVector psi4 = qeps_canonical(psi);
  Ansatz az = build_ansatz(psi4, t_dim);

  const long long nk = az.dbig * az.dbig, nh = az.dbct * az.dbct;
  long long evaluations = 0;
  bool all_converged = true;
  double best_k = kInf;
  Mat best_kgen, best_hgen;

  const int restarts = std::max(1, opts.restarts);
  for (int r = 0; r < restarts; ++r) {
    Rng rng(opts.seed ^ (kMix * (std::uint64_t)(r + 1)));
    Mat kgen = Mat::Zero(az.dbig, az.dbig);
    Mat hgen = Mat::Zero(az.dbct, az.dbct);
    if (r > 0) {
      kgen = random_hermitian(az.dbig, 0.35, rng);
      hgen = random_hermitian(az.dbct, 0.35, rng);
    }
    Candidate cur = evaluate(az, kgen, hgen);
    double cur_k = kInf;
    if (cur.p <= eps) {
      cur_k = score_imax(cur);
      ++evaluations;
    }

    double step = 0.3;
    int rejects = 0;
    bool converged = false;
    for (int it = 0; it < opts.iterations; ++it) {
      const long long idx = (long long)rng.integer((std::uint64_t)(nk + nh));
      const double dir = rng.integer(2) ? 1.0 : -1.0;
      Mat kt = kgen, ht = hgen;
      if (idx < nk) bump(kt, idx, dir * step);
      else bump(ht, idx - nk, dir * step);
      Candidate trial = evaluate(az, kt, ht);
      bool improved = false;
      if (trial.p <= eps) {
        trial.k = score_imax(trial);
        ++evaluations;
        improved = trial.k < cur_k - 1e-12;
      }
      if (improved) {
        kgen = std::move(kt);
        hgen = std::move(ht);
        cur_k = trial.k;
        rejects = 0;
      } else if (++rejects >= 10) {
        rejects = 0;
        step *= 0.7;
        if (step < 1e-4) { converged = true; break; }
      }
    }
    all_converged = all_converged && converged;
    if (cur_k < best_k - 1e-12) {
      best_k = cur_k;
      best_kgen = kgen;
      best_hgen = hgen;
    }
  }

  if (!std::isfinite(best_k))
    throw invalid_input("qeps_upper: no feasible point found; raise t_dim");

  // independent re-check of the returned point against the constraints
  Candidate fin = evaluate(az, best_kgen, best_hgen);
  fin.k = score_imax(fin);
  if (fin.p > eps + 1e-6 || fin.rb_residual > 1e-8) {
    fin = evaluate(az, Mat::Zero(az.dbig, az.dbig), Mat::Zero(az.dbct, az.dbct));
    fin.k = score_imax(fin);
  }

  QepsEstimate est;
  est.upper = fin.k;
  RecoveryLowerBound lb = qeps_lower_recovery(psi4, eps, opts.recovery);
  est.lower_petz = lb.petz;
  est.lower_optimized = lb.optimized;
  est.feasible_point = AchievingPoint{t_dim, fin.u, fin.sigma, fin.kappa};
  est.search_meta =
      QepsSearchMeta{restarts, opts.iterations, opts.seed, evaluations,
                     all_converged};
  return est;
}

QepsEstimate qeps_upper_sweep(const StateVector& psi, double eps,
                              const std::vector<long long>& t_dims,
                              const QepsOptions& opts) {
  if (t_dims.empty()) throw invalid_input("qeps_upper_sweep: empty t_dim list");
  std::optional<QepsEstimate> best;
  for (long long t : t_dims) {
    QepsEstimate e = qeps_upper(psi, eps, t, opts);
    if (!best || e.upper < best->upper - 1e-12) best = std::move(e);
  }
  return *best;
}

RecoveryLowerBound qeps_lower_recovery(const StateVector& psi, double eps,
                                       const RecoveryOptions& opts) {
  if (!(eps >= 0.0 && eps < 1.0))
    throw invalid_input("qeps_lower_recovery: eps must lie in [0, 1)");
  StateVector psi4 = qeps_canonical(psi);
  DensityOperator rho =
      permute(partial_trace(psi4, {"R", "B", "C"}), {"R", "B", "C"});
  auto low = [eps](double f) {
    if (f < 1e-12) return -kInf;
    return -2.0 * std::log2(std::min(f, 1.0)) + std::log2(1.0 - eps * eps);
  };
  const double fp =
      fidelity_of_recovery(rho, {"R"}, {"C"}, {"B"}, RecoveryMethod::petz, opts)
          .value;
  const double fo = fidelity_of_recovery(rho, {"R"}, {"C"}, {"B"},
                                         RecoveryMethod::optimize, opts)
                        .value;
  return RecoveryLowerBound{low(fp), low(std::max(fp, fo))};
}

SplittingIdentityReport splitting_identity_check(const StateVector& psi_rac,
                                                 double eps,
                                                 const QepsOptions& opts) {
  for (const char* l : {"R", "C"})
    if (!psi_rac.layout().has(l))
      throw invalid_input(std::string("splitting_identity_check: input needs '") +
                          l + "'");
  if (psi_rac.layout().has("B") && psi_rac.layout().dim_of("B") != 1)
    throw invalid_input("splitting_identity_check: register B must be trivial");
  StateVector cur = psi_rac;
  if (!cur.layout().has("A"))
    cur = StateVector(cur.vector(), cur.layout().concat(RegisterLayout({{"A", 1}})));
  if (!cur.layout().has("B"))
    cur = StateVector(cur.vector(), cur.layout().concat(RegisterLayout({{"B", 1}})));
  StateVector psi4 = permute(cur, {"R", "A", "B", "C"});

  QepsEstimate est = qeps_upper(psi4, eps, 1, opts);
  DensityOperator rc = permute(partial_trace(psi4, {"R", "C"}), {"R", "C"});
  QuantityResult sm = smooth(SmoothQuantity::imax, rc, {"R"}, {"C"}, eps);
  const double un = imax(rc, {"R"}, {"C"}).value;

  SplittingIdentityReport rep;
  rep.qeps_upper_bits = est.upper;
  rep.smooth_imax_bits = sm.value;
  rep.imax_unsmoothed_bits = un;
  rep.difference = est.upper - sm.value;
  rep.qeps_below_unsmoothed = est.upper <= un + 1e-6;
  rep.smooth_below_unsmoothed = sm.value <= un + 1e-6;
  return rep;
}

QprimeReport qprime_decomposition(const StateVector& psi, long long t_dim,
                                  std::uint64_t seed) {
  if (t_dim < 1) throw invalid_input("qprime_decomposition: t_dim must be >= 1");
  StateVector psi4 = qeps_canonical(psi);
  DensityOperator rho =
      permute(partial_trace(psi4, {"R", "B", "C"}), {"R", "B", "C"});
  const long long db = psi4.layout().dim_of("B"), dc = psi4.layout().dim_of("C");
  const long long dbct = db * dc * t_dim;
  RegisterLayout u_lay({{"B", (int)db}, {"C", (int)dc}, {"T", (int)t_dim}});
  RegisterLayout ct_lay({{"C", (int)dc}, {"T", (int)t_dim}});
  Mat psi_rb = permute(partial_trace(psi4, {"R", "B"}), {"R", "B"}).matrix();

  QprimeReport rep;
  rep.i_rcb_psi = cond_mutual_info(rho, {"R"}, {"C"}, {"B"});

  struct Spec {
    std::string kind;
    Mat u;      // unitary on [B, C, T]
    Mat sigma;  // density on T
  };
  std::vector<Spec> specs;
  specs.push_back({"identity", Mat::Identity(dbct, dbct),
                   Mat::Identity(t_dim, t_dim) / (double)t_dim});
  for (int k = 0; k < 6; ++k) {
    Rng rng(seed ^ (kMix * (std::uint64_t)(2 * k + 1)));
    IsometryMap v = random_unitary(ct_lay, seed ^ (kMix * (std::uint64_t)(2 * k + 2)));
    specs.push_back({"ct-unitary",
                     kron(Mat::Identity(db, db), v.matrix()),
                     random_density_matrix((int)t_dim, rng)});
  }
  for (int k = 0; k < 3; ++k) {
    Rng rng(seed ^ (kMix * (std::uint64_t)(k + 101)));
    specs.push_back({"random-generator", expi(random_hermitian(dbct, 0.7, rng)),
                     random_density_matrix((int)t_dim, rng)});
  }

  rep.best_decoupling = kInf;
  rep.max_identity_residual = 0.0;
  for (const auto& s : specs) {
    IsometryMap udag(s.u.adjoint(), u_lay, u_lay);
    DensityOperator prod =
        tensor(rho, DensityOperator(s.sigma, RegisterLayout({{"T", (int)t_dim}})));
    DensityOperator gamma =
        permute(apply_isometry(udag, prod), {"R", "B", "C", "T"});
    QprimeCandidate c;
    c.kind = s.kind;
    c.marginal_residual =
        (permute(partial_trace(gamma, {"R", "B"}), {"R", "B"}).matrix() - psi_rb)
            .cwiseAbs()
            .maxCoeff();
    c.accepted = c.marginal_residual <= 1e-5;
    c.i_rb_ct = mutual_info(gamma, {"R", "B"}, {"C", "T"});
    c.i_b_ct = mutual_info(gamma, {"B"}, {"C", "T"});
    c.identity_residual = std::abs(c.i_rb_ct - rep.i_rcb_psi - c.i_b_ct);
    if (c.accepted) {
      rep.best_decoupling = std::min(rep.best_decoupling, c.i_b_ct);
      rep.max_identity_residual =
          std::max(rep.max_identity_residual, c.identity_residual);
    }
    rep.candidates.push_back(std::move(c));
  }
  if (!std::isfinite(rep.best_decoupling)) rep.best_decoupling = 0.0;
  return rep;
}

BoundSuiteReport bound_suite(const StateVector& psi, double eps,
                             const QepsOptions& opts,
                             long long two_copy_dim_cap) {
  if (!(eps > 0.0 && eps < 1.0))
    throw invalid_input("bound_suite: eps must lie in (0, 1)");
  StateVector psi4 = qeps_canonical(psi);
  DensityOperator rho =
      permute(partial_trace(psi4, {"R", "B", "C"}), {"R", "B", "C"});

  BoundSuiteReport rep;
  rep.eps = eps;
  rep.i_rcb = cond_mutual_info(rho, {"R"}, {"C"}, {"B"});
  rep.budget = 49.0 / (2.0 * eps * eps) * rep.i_rcb + 98.0 / (2.0 * eps * eps) + 15.0;

  QepsEstimate est = qeps_upper(psi4, eps, 1, opts);
  rep.upper_bits = est.upper;
  rep.half_upper_below_budget = 0.5 * rep.upper_bits <= rep.budget + 1e-9;

  // recovery-route witness: Petz output mixed with a depolarizing floor keeps
  // the max-relative entropy finite while staying an explicit channel output
  QuantityResult rec = fidelity_of_recovery(rho, {"R"}, {"C"}, {"B"},
                                            RecoveryMethod::petz, opts.recovery);
  if (!rec.witness) throw invalid_input("bound_suite: recovery witness missing");
  const double floor_y = 1e-3;
  const long long d = rho.dim();
  Mat blend = (1.0 - floor_y) * (*rec.witness) +
              (floor_y / (double)d) * Mat::Identity(d, d);
  rep.corollary_witness_dmax = dmax(rho.matrix(), blend);
  rep.corollary_witness_below_budget =
      rep.corollary_witness_dmax <= rep.budget + 1e-9;

  rep.per_copy_upper_1 = rep.upper_bits;
  if (rho.dim() <= two_copy_dim_cap) {
    QepsOptions o2 = opts;
    o2.restarts = 1;
    o2.iterations = std::min(opts.iterations, 40);
    o2.recovery.restarts = 1;
    o2.recovery.iters = 10;
    rep.per_copy_upper_2 = qeps_upper(doubled_state(psi4), eps, 1, o2).upper / 2.0;
    rep.two_copy_skipped = false;
  } else {
    rep.two_copy_skipped = true;
    rep.notice = "two-copy search skipped: RBC dimension " +
                 std::to_string(rho.dim()) + " exceeds the cap " +
                 std::to_string(two_copy_dim_cap);
  }
  return rep;
}

std::string to_json(const QepsEstimate& e) {
  std::ostringstream os;
  os << "{\n  \"upper\": " << num(e.upper)
     << ",\n  \"lower_petz\": " << num(e.lower_petz)
     << ",\n  \"lower_optimized\": " << num(e.lower_optimized)
     << ",\n  \"t_dim\": " << (e.feasible_point ? e.feasible_point->t_dim : 0)
     << ",\n  \"has_feasible_point\": "
     << (e.feasible_point ? "true" : "false") << ",\n  \"search\": {\"restarts\": "
     << e.search_meta.restarts << ", \"iterations\": " << e.search_meta.iterations
     << ", \"seed\": " << e.search_meta.seed
     << ", \"evaluations\": " << e.search_meta.evaluations
     << ", \"converged\": " << (e.search_meta.converged ? "true" : "false")
     << "}\n}";
  return os.str();
}

std::string to_json(const QprimeReport& r) {
  std::ostringstream os;
  os << "{\n  \"i_rcb_psi\": " << num(r.i_rcb_psi) << ",\n  \"candidates\": [";
  for (std::size_t i = 0; i < r.candidates.size(); ++i) {
    const auto& c = r.candidates[i];
    if (i) os << ", ";
    os << "{\"kind\": \"" << c.kind << "\", \"accepted\": "
       << (c.accepted ? "true" : "false")
       << ", \"marginal_residual\": " << num(c.marginal_residual)
       << ", \"i_rb_ct\": " << num(c.i_rb_ct) << ", \"i_b_ct\": " << num(c.i_b_ct)
       << ", \"identity_residual\": " << num(c.identity_residual) << "}";
  }
  os << "],\n  \"best_decoupling\": " << num(r.best_decoupling)
     << ",\n  \"max_identity_residual\": " << num(r.max_identity_residual)
     << "\n}";
  return os.str();
}

std::string to_json(const BoundSuiteReport& r) {
  std::ostringstream os;
  os << "{\n  \"eps\": " << num(r.eps) << ",\n  \"i_rcb\": " << num(r.i_rcb)
     << ",\n  \"budget\": " << num(r.budget)
     << ",\n  \"upper_bits\": " << num(r.upper_bits)
     << ",\n  \"half_upper_below_budget\": "
     << (r.half_upper_below_budget ? "true" : "false")
     << ",\n  \"corollary_witness_dmax\": " << num(r.corollary_witness_dmax)
     << ",\n  \"corollary_witness_below_budget\": "
     << (r.corollary_witness_below_budget ? "true" : "false")
     << ",\n  \"per_copy_upper_1\": " << num(r.per_copy_upper_1);
  if (r.per_copy_upper_2)
    os << ",\n  \"per_copy_upper_2\": " << num(*r.per_copy_upper_2);
  os << ",\n  \"two_copy_skipped\": " << (r.two_copy_skipped ? "true" : "false")
     << ",\n  \"notice\": \"" << r.notice << "\"\n}";
  return os.str();
}

std::string qeps_csv_header() {
  return "input_id,eps,t_dim,upper_bits,lower_bits,restarts,converged";
}

std::string qeps_csv_row(const std::string& input_id, double eps,
                         long long t_dim, const QepsEstimate& e) {
  char b[256];
  std::snprintf(b, sizeof(b), "%s,%.17g,%lld,%.17g,%.17g,%d,%d",
                input_id.c_str(), eps, t_dim, e.upper, e.lower_optimized,
                e.search_meta.restarts, e.search_meta.converged ? 1 : 0);
  return std::string(b);
}

}  // namespace qsr
