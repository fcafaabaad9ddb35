#include <cmath>
#include <string>

#include <json.hpp>

#include "doctest.h"
#include "qsr/convex_split.hpp"
#include "qsr/entropy.hpp"
#include "qsr/random.hpp"

using namespace qsr;

namespace {

RegisterLayout pq_layout() { return RegisterLayout({{"P", 2}, {"Q", 2}}); }
RegisterLayout q_layout() { return RegisterLayout({{"Q", 2}}); }

DensityOperator maximally_mixed_q() {
  return DensityOperator(Mat::Identity(2, 2) / 2.0, q_layout());
}

// rho_PQ = (|00><00| + |11><11|) / 2
DensityOperator classical_correlated() {
  Mat m = Mat::Zero(4, 4);
  m(0, 0) = 0.5;
  m(3, 3) = 0.5;
  return DensityOperator(m, pq_layout());
}

// random classical-on-Q state: PSD 2x2 blocks R_0, R_1 over the Q basis
DensityOperator random_cq_state(std::uint64_t seed) {
  Rng rng(seed);
  Mat m = Mat::Zero(4, 4);
  for (int q = 0; q < 2; ++q) {
    Mat g(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) g(i, j) = rng.complex_normal();
    Mat r = g * g.adjoint();
    for (int p = 0; p < 2; ++p)
      for (int pp = 0; pp < 2; ++pp) m(2 * p + q, 2 * pp + q) = r(p, pp);
  }
  m /= m.trace().real();
  return DensityOperator(m, pq_layout());
}

DensityOperator random_diag_sigma(std::uint64_t seed) {
  Rng rng(seed);
  const double s0 = 0.3 + 0.4 * rng.uniform();
  Mat s = Mat::Zero(2, 2);
  s(0, 0) = s0;
  s(1, 1) = 1.0 - s0;
  return DensityOperator(s, q_layout());
}

// mixes a correlated cq state toward its own product until k lands in
// [klo, khi]; deterministic in the seed
ConvexSplitInstance cq_instance_with_k(std::uint64_t seed, double klo,
                                       double khi, double delta,
                                       std::optional<long long> n_override) {
  for (std::uint64_t attempt = 0; attempt < 32; ++attempt) {
    DensityOperator corr = random_cq_state(seed * 131 + attempt * 7 + 1);
    DensityOperator sig = random_diag_sigma(seed * 977 + attempt * 13 + 2);
    const Mat rho_p = partial_trace(corr, {"P"}).matrix();
    const Mat prod = kron(rho_p, sig.matrix());
    auto k_at = [&](double t) {
      Mat m = (1.0 - t) * prod + t * corr.matrix();
      return dmax(m, prod);
    };
    if (k_at(1.0) < khi) continue;  // this draw cannot reach the window
    double lo = 0.0, hi = 1.0;
    const double target = 0.5 * (klo + khi);
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (k_at(mid) < target ? lo : hi) = mid;
    }
    Mat m = (1.0 - hi) * prod + hi * corr.matrix();
    DensityOperator rho(m, pq_layout());
    ConvexSplitInstance inst = make_instance(rho, sig, delta, n_override);
    if (inst.k >= klo && inst.k <= khi) return inst;
  }
  throw std::runtime_error("no cq draw reached the requested k window");
}

DensityOperator random_general_rho(std::uint64_t seed) {
  Rng rng(seed);
  return DensityOperator(random_density_matrix(4, rng), pq_layout());
}

DensityOperator random_general_sigma(std::uint64_t seed) {
  Rng rng(seed);
  return DensityOperator(random_density_matrix(2, rng), q_layout());
}

double min_eig(const Mat& m) {
  EigResult e = eig_hermitian(m);
  return e.values(e.values.size() - 1);
}

}  // namespace

TEST_SUITE("convex_split") {

TEST_CASE("lemma_n: formula, boundary, frozen values") {
  CHECK(lemma_n(0.1, 0.05) == 1);
  CHECK(lemma_n(0.15, 0.05) == 1);   // k = 3 delta exactly: inclusive
  CHECK(lemma_n(0.36, 0.12) == 1);   // inclusive at delta = 0.12 too
  CHECK(lemma_n(0.0, 0.1) == 1);
  CHECK(lemma_n(1.0, 0.1) == 53151);
  CHECK(lemma_n(0.5, 0.1) == 26270);
  CHECK(lemma_n(0.37, 0.12) == 9720);

  CHECK_THROWS_AS(lemma_n(1.0, 0.0), invalid_input);
  CHECK_THROWS_AS(lemma_n(1.0, 1.0 / 6.0), invalid_input);
  CHECK_THROWS_AS(lemma_n(1.0, 0.2), invalid_input);
  CHECK_THROWS_AS(lemma_n(-0.1, 0.1), invalid_input);
  CHECK_THROWS_AS(lemma_n(std::numeric_limits<double>::infinity(), 0.1),
                  invalid_input);
  CHECK_THROWS_AS(lemma_n(2000.0, 0.1), invalid_input);  // count overflows
}

TEST_CASE("make_instance: k, n, canonical order, rejections") {
  // product input: k = 0, n = 1
  auto sig = random_general_sigma(41);
  Rng rng(42);
  Mat rp = random_density_matrix(2, rng);
  DensityOperator prod(kron(rp, sig.matrix()), pq_layout());
  auto inst = make_instance(prod, sig, 0.1);
  CHECK(inst.k == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(inst.n == 1);
  CHECK_FALSE(inst.n_overridden);

  // classical-correlated vs I/2: k = 1 exactly
  auto cc = make_instance(classical_correlated(), maximally_mixed_q(), 0.12, 2);
  CHECK(cc.k == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(cc.n == 2);
  CHECK(cc.n_overridden);

  // registers passed in [Q, P] order are canonicalized to [P, Q]
  RegisterLayout qp({{"Q", 2}, {"P", 2}});
  DensityOperator swapped(permute(prod, {"Q", "P"}).matrix(), qp);
  auto inst2 = make_instance(swapped, sig, 0.1);
  CHECK(inst2.rho_pq.layout().label(0) == "P");
  CHECK(inst2.rho_pq.layout().label(1) == "Q");
  CHECK((inst2.rho_pq.matrix() - prod.matrix()).cwiseAbs().maxCoeff() < 1e-12);

  // support failure: sigma has a kernel where rho's Q marginal has mass
  Mat pure0 = Mat::Zero(2, 2);
  pure0(0, 0) = 1.0;
  CHECK_THROWS_AS(make_instance(classical_correlated(),
                                DensityOperator(pure0, q_layout()), 0.1),
                  invalid_input);

  CHECK_THROWS_AS(make_instance(prod, sig, 0.2), invalid_input);
  CHECK_THROWS_AS(make_instance(prod, sig, 0.1, 0), invalid_input);

  // label / dimension mismatches
  DensityOperator sig_b(sig.matrix(), RegisterLayout({{"B", 2}}));
  CHECK_THROWS_AS(make_instance(prod, sig_b, 0.1), invalid_input);
  Rng rng3(7);
  DensityOperator sig3(random_density_matrix(3, rng3), RegisterLayout({{"Q", 3}}));
  CHECK_THROWS_AS(make_instance(prod, sig3, 0.1), invalid_input);
}

TEST_CASE("build_tau: single copy and product input") {
  auto inst = cq_instance_with_k(5, 0.05, 0.3, 0.12, 1);
  auto tau = build_tau(inst);
  CHECK(tau.layout().label(0) == "P");
  CHECK(tau.layout().label(1) == "Q1");
  CHECK((tau.matrix() - inst.rho_pq.matrix()).cwiseAbs().maxCoeff() < 1e-13);

  Rng rng(42);
  Mat rp = random_density_matrix(2, rng);
  auto sig = random_general_sigma(41);
  DensityOperator prod(kron(rp, sig.matrix()), pq_layout());
  auto pinst = make_instance(prod, sig, 0.1, 3);
  auto ptau = build_tau(pinst);
  Mat expect = kron(kron(kron(rp, sig.matrix()), sig.matrix()), sig.matrix());
  CHECK((ptau.matrix() - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("build_tau: hand-built classical-correlated 8x8 oracle") {
  auto inst = make_instance(classical_correlated(), maximally_mixed_q(), 0.12, 2);
  auto tau = build_tau(inst);
  const Mat rho = classical_correlated().matrix();
  Mat expect = Mat::Zero(8, 8);
  for (int p = 0; p < 2; ++p)
    for (int q1 = 0; q1 < 2; ++q1)
      for (int q2 = 0; q2 < 2; ++q2)
        for (int pp = 0; pp < 2; ++pp)
          for (int r1 = 0; r1 < 2; ++r1)
            for (int r2 = 0; r2 < 2; ++r2) {
              Scalar v = 0.0;
              if (q2 == r2) v += 0.5 * rho(2 * p + q1, 2 * pp + r1) * 0.5;
              if (q1 == r1) v += 0.5 * rho(2 * p + q2, 2 * pp + r2) * 0.5;
              expect(4 * p + 2 * q1 + q2, 4 * pp + 2 * r1 + r2) = v;
            }
  CHECK((tau.matrix() - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("build_tau: memory cap error points to the diagnostics path") {
  auto inst = cq_instance_with_k(9, 0.2, 1.0, 0.12, 16);
  try {
    build_tau(inst);
    FAIL("expected the memory cap rejection");
  } catch (const invalid_input& e) {
    CHECK(std::string(e.what()).find("diagnostics") != std::string::npos);
  }
  auto tau8 = build_tau(cq_instance_with_k(9, 0.2, 1.0, 0.12, 8));
  CHECK(tau8.dim() == 512);
}

TEST_CASE("tau invariants: P marginal, Q exchange symmetry, PQn mixture") {
  // a general (non-classical) instance
  auto rho = random_general_rho(71);
  auto sig = random_general_sigma(72);
  auto inst = make_instance(rho, sig, 0.12, 3);
  auto tau = build_tau(inst);

  const Mat tau_p = partial_trace(tau, {"P"}).matrix();
  const Mat rho_p = partial_trace(inst.rho_pq, {"P"}).matrix();
  CHECK((tau_p - rho_p).cwiseAbs().maxCoeff() < 1e-10);

  // exchange of any two Q registers leaves tau fixed
  for (auto order : std::vector<std::vector<std::string>>{
           {"P", "Q2", "Q1", "Q3"}, {"P", "Q3", "Q2", "Q1"},
           {"P", "Q1", "Q3", "Q2"}}) {
    auto swapped = permute(tau, order);
    CHECK((swapped.matrix() - tau.matrix()).cwiseAbs().maxCoeff() < 1e-12);
  }

  // tau restricted to (P, Q_n) is the explicit two-term mixture
  const Mat tau_pqn = partial_trace(tau, {"P", "Q3"}).matrix();
  const Mat mix = (1.0 / 3.0) * inst.rho_pq.matrix() +
                  (2.0 / 3.0) * kron(rho_p, sig.matrix());
  CHECK((tau_pqn - mix).cwiseAbs().maxCoeff() < 1e-12);

  // operator bound tau_PQn <= (1 + 2^k/n)(rho_P x sigma)
  const Mat gap =
      (1.0 + std::exp2(inst.k) / 3.0) * kron(rho_p, sig.matrix()) - tau_pqn;
  CHECK(min_eig(gap) >= -1e-9);
}

TEST_CASE("verify_lemma: product input is exact everywhere") {
  Rng rng(42);
  Mat rp = random_density_matrix(2, rng);
  auto sig = random_general_sigma(41);
  DensityOperator prod(kron(rp, sig.matrix()), pq_layout());
  auto inst = make_instance(prod, sig, 0.1, 4);
  auto rep = verify_lemma(inst);
  CHECK(rep.mutual_info == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(rep.fidelity_sq == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.bound_3delta_ok);
  CHECK(rep.bound_6delta_ok);
  CHECK(rep.chain_ok);
  // every proof-stage divergence collapses to zero on a product input
  CHECK(std::abs(rep.stage_terms.eq1_lhs) < 1e-10);
  CHECK(std::abs(rep.stage_terms.eq2_lhs) < 1e-10);
  CHECK(std::abs(rep.stage_terms.eq3_lhs) < 1e-10);
  CHECK(rep.stage_terms.eq1_ok);
  CHECK(rep.stage_terms.eq2_ok);
  CHECK(rep.stage_terms.eq3_ok);
  CHECK(rep.stage_terms.tail_ok);
}

TEST_CASE("verify_lemma: small-k instance at n = 1 reduces to I(P:Q)") {
  auto inst = cq_instance_with_k(21, 0.05, 0.3, 0.12, std::nullopt);
  REQUIRE(inst.k <= 3 * inst.delta);
  REQUIRE(inst.n == 1);
  auto rep = verify_lemma(inst);
  const double i_rho = mutual_info(inst.rho_pq, {"P"}, {"Q"});
  CHECK(rep.mutual_info == doctest::Approx(i_rho).epsilon(1e-10));
  CHECK(rep.bound_3delta_ok);
  CHECK(rep.bound_6delta_ok);
  CHECK(rep.chain_ok);
}

TEST_CASE("derivation_diagnostics: Eq.(2) margin on the classical instance") {
  auto inst = make_instance(classical_correlated(), maximally_mixed_q(), 0.12, 2);
  auto st = derivation_diagnostics(inst);
  CHECK(st.eq2_lhs >= st.eq2_rhs);  // margin >= 0, no tolerance needed
  CHECK(st.eq1_ok);
  CHECK(st.eq2_ok);
  CHECK(st.eq3_ok);
  CHECK(st.tail_ok);
}

TEST_CASE("derivation_diagnostics: exact binomial tail vs string enumeration") {
  auto inst = cq_instance_with_k(33, 0.5, 0.9, 0.12, 9);
  auto st = derivation_diagnostics(inst);
  // brute force over all binary strings of length n-1
  const double p = std::exp2(-inst.k);
  const long long n = inst.n;
  double tail = 0.0;
  for (int s = 0; s < (1 << (n - 1)); ++s) {
    const int ones = __builtin_popcount(unsigned(s));
    if (double(ones) < double(n - 1) * p * (1.0 - inst.delta))
      tail += std::pow(p, ones) * std::pow(1.0 - p, int(n - 1) - ones);
  }
  CHECK(st.binom_tail == doctest::Approx(tail).epsilon(1e-12));
  CHECK(st.binom_tail <= st.chernoff_bound + 1e-8);
}

TEST_CASE("perturbed product family: I non-increasing over n = 1,2,4,8,16") {
  auto base = cq_instance_with_k(57, 0.28, 0.32, 0.12, std::nullopt);
  double prev = std::numeric_limits<double>::infinity();
  for (long long n : {1LL, 2LL, 4LL, 8LL, 16LL}) {
    auto inst = make_instance(base.rho_pq, base.sigma_q, 0.12, n);
    auto rep = verify_lemma(inst);
    CHECK(rep.mutual_info <= prev + 1e-10);
    CHECK(rep.stage_terms.eq1_ok);
    CHECK(rep.stage_terms.eq2_ok);
    CHECK(rep.stage_terms.eq3_ok);
    CHECK(rep.stage_terms.tail_ok);
    CHECK(rep.chain_ok);
    prev = rep.mutual_info;
  }
}

TEST_CASE("collapsed classical path matches the dense evaluation") {
  for (std::uint64_t seed : {101ULL, 102ULL}) {
    auto base = cq_instance_with_k(seed, 0.3, 1.0, 0.12, std::nullopt);
    REQUIRE(is_cq(base));
    for (long long n : {1LL, 2LL, 3LL, 4LL}) {
      auto inst = make_instance(base.rho_pq, base.sigma_q, 0.12, n);
      auto dense = verify_lemma(inst, kDefaultMemCap);
      CHECK(cq_tau_mutual_info(inst) ==
            doctest::Approx(dense.mutual_info).epsilon(1e-9));
      CHECK(cq_tau_fidelity_sq(inst) ==
            doctest::Approx(dense.fidelity_sq).epsilon(1e-9));
      // force the collapsed branch with a cap below the dense dimension
      auto coll = derivation_diagnostics(inst, 1);
      auto dd = derivation_diagnostics(inst, kDefaultMemCap);
      CHECK(coll.eq1_lhs == doctest::Approx(dd.eq1_lhs).epsilon(1e-9));
      CHECK(coll.eq3_lhs == doctest::Approx(dd.eq3_lhs).epsilon(1e-9));
      CHECK(coll.eq2_lhs == doctest::Approx(dd.eq2_lhs).epsilon(1e-12));
    }
  }

  // rank-deficient classical blocks go through the same collapse
  auto cc = make_instance(classical_correlated(), maximally_mixed_q(), 0.12, 3);
  REQUIRE(is_cq(cc));
  auto dense = verify_lemma(cc, kDefaultMemCap);
  CHECK(cq_tau_mutual_info(cc) ==
        doctest::Approx(dense.mutual_info).epsilon(1e-9));
  CHECK(cq_tau_fidelity_sq(cc) ==
        doctest::Approx(dense.fidelity_sq).epsilon(1e-9));
  auto coll = derivation_diagnostics(cc, 1);
  auto dd = derivation_diagnostics(cc, kDefaultMemCap);
  CHECK(coll.eq1_lhs == doctest::Approx(dd.eq1_lhs).epsilon(1e-9));
  CHECK(coll.eq3_lhs == doctest::Approx(dd.eq3_lhs).epsilon(1e-9));
}

TEST_CASE("collapsed path handles n = 16 with all stage flags green") {
  auto inst = cq_instance_with_k(201, 0.2, 1.0, 0.12, 16);
  auto rep = verify_lemma(inst);  // dense dim would be 131072: collapsed
  CHECK(rep.stage_terms.eq1_ok);
  CHECK(rep.stage_terms.eq2_ok);
  CHECK(rep.stage_terms.eq3_ok);
  CHECK(rep.stage_terms.tail_ok);
  CHECK(rep.chain_ok);
  CHECK(rep.fidelity_sq <= 1.0);
  CHECK(rep.mutual_info >= 0.0);
}

TEST_CASE("verify_lemma fidelity agrees with the entropy-module fidelity") {
  auto inst = cq_instance_with_k(77, 0.3, 1.0, 0.12, 2);
  auto rep = verify_lemma(inst);
  auto tau = build_tau(inst);
  const Mat rho_p = partial_trace(inst.rho_pq, {"P"}).matrix();
  const Mat tau_q = partial_trace(tau, {"Q1", "Q2"}).matrix();
  const double f = fidelity(kron(rho_p, tau_q), tau.matrix());
  CHECK(rep.fidelity_sq == doctest::Approx(f * f).epsilon(1e-10));
}

TEST_CASE("non-classical instance beyond the cap is rejected") {
  auto rho = random_general_rho(88);
  auto sig = random_general_sigma(89);
  auto inst = make_instance(rho, sig, 0.12, 16);
  CHECK_THROWS_AS(derivation_diagnostics(inst), invalid_input);
  CHECK_THROWS_AS(verify_lemma(inst), invalid_input);
  CHECK_FALSE(is_cq(inst));
}

TEST_CASE("canonical purification: single branch at n = 1") {
  auto inst = cq_instance_with_k(5, 0.05, 0.3, 0.12, 1);
  auto mu = canonical_purification_of_tau(inst);
  CHECK(mu.layout().label(0) == "M");
  CHECK(mu.layout().dim_of("M") == 1);
  // |mu> = |1>_M (x) |kappa> with kappa the canonical purification of rho,
  // its ancilla split as (S, E1); M is one-dimensional so the reordered
  // vector must equal the purification exactly
  auto flat = permute(mu, {"P", "Q1", "S", "E1", "M"});
  const Vec expect = purify(inst.rho_pq, "anc").vector();
  CHECK((flat.vector() - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("canonical purification: uniform index and round trip") {
  auto rho = random_general_rho(91);
  auto sig = random_general_sigma(92);
  auto inst = make_instance(rho, sig, 0.12, 2);
  auto mu = canonical_purification_of_tau(inst);

  const Mat m_marg = partial_trace(mu, {"M"}).matrix();
  for (int j = 0; j < 2; ++j)
    CHECK(std::real(m_marg(j, j)) == doctest::Approx(0.5).epsilon(1e-12));

  const Mat round_trip = partial_trace(mu, {"P", "Q1", "Q2"}).matrix();
  auto tau = build_tau(inst);
  CHECK((round_trip - tau.matrix()).cwiseAbs().maxCoeff() < 1e-9);

  auto big = make_instance(rho, sig, 0.12, 16);
  CHECK_THROWS_AS(canonical_purification_of_tau(big), invalid_input);
}

TEST_CASE("canonical purification: three branches round trip") {
  auto inst = cq_instance_with_k(93, 0.3, 1.0, 0.12, 3);
  auto mu = canonical_purification_of_tau(inst);
  const Mat m_marg = partial_trace(mu, {"M"}).matrix();
  for (int j = 0; j < 3; ++j)
    CHECK(std::real(m_marg(j, j)) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  const Mat round_trip = partial_trace(mu, {"P", "Q1", "Q2", "Q3"}).matrix();
  auto tau = build_tau(inst);
  CHECK((round_trip - tau.matrix()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("split report serializes every field") {
  auto inst = make_instance(classical_correlated(), maximally_mixed_q(), 0.12, 2);
  auto rep = verify_lemma(inst);
  auto j = nlohmann::json::parse(to_json(rep));
  CHECK(j["mutual_info"].get<double>() ==
        doctest::Approx(rep.mutual_info).epsilon(1e-15));
  CHECK(j["fidelity_sq"].get<double>() ==
        doctest::Approx(rep.fidelity_sq).epsilon(1e-15));
  CHECK(j["bound_3delta_ok"].get<bool>() == rep.bound_3delta_ok);
  CHECK(j["bound_6delta_ok"].get<bool>() == rep.bound_6delta_ok);
  CHECK(j["chain_ok"].get<bool>() == rep.chain_ok);
  auto s = j["stage_terms"];
  CHECK(s["eq1_lhs"].get<double>() ==
        doctest::Approx(rep.stage_terms.eq1_lhs).epsilon(1e-15));
  CHECK(s["eq2_rhs"].get<double>() ==
        doctest::Approx(rep.stage_terms.eq2_rhs).epsilon(1e-15));
  CHECK(s["eq3_lhs"].get<double>() ==
        doctest::Approx(rep.stage_terms.eq3_lhs).epsilon(1e-15));
  CHECK(s["assembled_bound"].get<double>() ==
        doctest::Approx(rep.stage_terms.assembled_bound).epsilon(1e-15));
  CHECK(s["binom_tail"].get<double>() ==
        doctest::Approx(rep.stage_terms.binom_tail).epsilon(1e-15));
  CHECK(s["tail_ok"].get<bool>() == rep.stage_terms.tail_ok);
}

}  // TEST_SUITE
