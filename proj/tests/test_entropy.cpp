#include <cmath>
#include <limits>

#include "doctest.h"
#include "qsr/entropy.hpp"
#include "qsr/random.hpp"

using namespace qsr;

namespace {

RegisterLayout qubit(const std::string& l) { return RegisterLayout({{l, 2}}); }

RegisterLayout two_qubits() {
  return RegisterLayout({{"A", 2}, {"B", 2}});
}

DensityOperator phi_plus() {
  Vec v = Vec::Zero(4);
  v(0) = v(3) = 1.0 / std::sqrt(2.0);
  return StateVector(v, two_qubits()).to_density();
}

DensityOperator ket(int k, const std::string& l) {
  Vec v = Vec::Zero(2);
  v(k) = 1.0;
  return StateVector(v, qubit(l)).to_density();
}

DensityOperator random_mixed(const RegisterLayout& lay, std::uint64_t seed,
                             int rank = -1) {
  Rng rng(seed);
  return DensityOperator(random_density_matrix((int)lay.dim(), rng, rank), lay);
}

// the frozen 2-qubit oracle state (entries generated once, independently)
DensityOperator frozen_w() {
  const double re[4][4] = {
      {0.38853655942358412, -0.032403952938647042, 0.2073050481954398,
       0.023829922079848853},
      {-0.032403952938647042, 0.23474434612784495, -0.087500465069388175,
       0.050376887792610479},
      {0.2073050481954398, -0.087500465069388175, 0.20680355483065932,
       -0.040030088354876626},
      {0.023829922079848853, 0.050376887792610479, -0.040030088354876626,
       0.16991553961791181}};
  const double im[4][4] = {
      {0, 0.099454233561607153, -0.049259798543303465, 0.019820221150808174},
      {-0.099454233561607153, 0, -0.032756017826221964, -0.14894710106381864},
      {0.049259798543303465, 0.032756017826221964, 0, 0.057881830398667032},
      {-0.019820221150808174, 0.14894710106381864, -0.057881830398667032, 0}};
  Mat w(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) w(i, j) = Scalar(re[i][j], im[i][j]);
  return DensityOperator(w, two_qubits());
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_SUITE("entropy") {

TEST_CASE("fidelity identities") {
  auto rho = random_mixed(two_qubits(), 11);
  CHECK(fidelity(rho, rho) == doctest::Approx(1.0).epsilon(1e-12));

  Vec plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  auto p0 = ket(0, "A");
  auto pp = StateVector(plus, qubit("A")).to_density();
  CHECK(fidelity(p0, pp) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

  DensityOperator mixed(Mat::Identity(2, 2) / 2.0, qubit("A"));
  CHECK(fidelity(p0, mixed) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));

  CHECK_THROWS_AS(fidelity(p0, random_mixed(two_qubits(), 3)), invalid_input);
}

TEST_CASE("purified distance: extremes and triangle inequality") {
  auto p0 = ket(0, "A");
  auto p1 = ket(1, "A");
  CHECK(purified_distance(p0, p0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(purified_distance(p0, p1) == doctest::Approx(1.0).epsilon(1e-12));

  Rng rng(2718);
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 2 + (int)rng.integer(3);  // dims 2..4
    Mat a = random_density_matrix(d, rng);
    Mat b = random_density_matrix(d, rng);
    Mat c = random_density_matrix(d, rng);
    CHECK(purified_distance(a, c) <=
          purified_distance(a, b) + purified_distance(b, c) + 1e-9);
  }
}

TEST_CASE("relative entropy: identities and support failure") {
  auto rho = random_mixed(two_qubits(), 17);
  CHECK(rel_entropy(rho, rho) == doctest::Approx(0.0).epsilon(1e-9));

  DensityOperator mixed(Mat::Identity(2, 2) / 2.0, qubit("A"));
  CHECK(rel_entropy(ket(0, "A"), mixed) == doctest::Approx(1.0).epsilon(1e-10));

  // mixed relative to pure: support failure
  CHECK(rel_entropy(mixed, ket(0, "A")) == kInf);
}

TEST_CASE("Pinsker-type bound F >= 2^{-D/2} on random pairs") {
  Rng rng(31415);
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 2 + (int)rng.integer(3);
    Mat a = random_density_matrix(d, rng);
    Mat b = random_density_matrix(d, rng);
    const double f = fidelity(a, b);
    const double dr = rel_entropy(a, b);
    CHECK(f >= std::pow(2.0, -dr / 2.0) - 1e-9);
  }
}

TEST_CASE("dmax: identities, frozen value, feasibility certificate") {
  auto rho = random_mixed(two_qubits(), 23);
  CHECK(dmax(rho, rho) == doctest::Approx(0.0).epsilon(1e-9));

  DensityOperator idq(Mat::Identity(4, 4) / 4.0, two_qubits());
  CHECK(dmax(phi_plus(), idq) == doctest::Approx(2.0).epsilon(1e-10));

  // support failure
  DensityOperator mixed(Mat::Identity(2, 2) / 2.0, qubit("A"));
  CHECK(dmax(mixed, ket(0, "A")) == kInf);

  // 2^lambda sigma - rho is PSD at value+1e-6 and not PSD at value-1e-3
  Rng rng(57);
  for (int trial = 0; trial < 25; ++trial) {
    const int d = 2 + (int)rng.integer(3);
    Mat a = random_density_matrix(d, rng);
    Mat b = random_density_matrix(d, rng);
    const double v = dmax(a, b);
    auto min_eig = [&](double lam) {
      auto e = eig_hermitian(Mat(std::pow(2.0, lam) * b - a));
      return e.values(e.values.size() - 1);
    };
    CHECK(min_eig(v + 1e-6) >= -1e-12);
    CHECK(min_eig(v - 1e-3) < 0.0);
  }
}

TEST_CASE("dmax dominates relative entropy on full-rank pairs") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + (int)rng.integer(3);
    Mat a = random_density_matrix(d, rng);
    Mat b = random_density_matrix(d, rng);
    CHECK(dmax(a, b) >= rel_entropy(a, b) - 1e-8);
  }
}

TEST_CASE("mutual information: product, maximally entangled, chain identity") {
  auto a = random_mixed(qubit("A"), 5);
  auto b = random_mixed(qubit("B"), 6);
  CHECK(mutual_info(tensor(a, b), {"A"}, {"B"}) ==
        doctest::Approx(0.0).epsilon(1e-10));

  CHECK(mutual_info(phi_plus(), {"A"}, {"B"}) ==
        doctest::Approx(2.0).epsilon(1e-10));

  RegisterLayout abc({{"A", 2}, {"B", 2}, {"C", 2}});
  for (std::uint64_t s : {101, 102, 103, 104, 105}) {
    auto psi = random_state(abc, s).to_density();
    const double lhs = cond_mutual_info(psi, {"A"}, {"B"}, {"C"});
    const double rhs =
        mutual_info(psi, {"B"}, {"A", "C"}) - mutual_info(psi, {"B"}, {"C"});
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    CHECK(lhs >= -1e-9);  // strong subadditivity
  }

  CHECK_THROWS_AS(mutual_info(phi_plus(), {"A"}, {"A"}), invalid_input);
}

TEST_CASE("imax: certified values and frozen oracle") {
  auto a = random_mixed(qubit("A"), 7);
  auto b = random_mixed(qubit("B"), 8);
  auto prod = tensor(a, b);
  auto r0 = imax(prod, {"A"}, {"B"});
  CHECK(r0.kind == ResultKind::sdp_certified);
  CHECK(r0.value == doctest::Approx(0.0).epsilon(1e-7));

  auto r1 = imax(phi_plus(), {"A"}, {"B"});
  CHECK(r1.value == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(r1.certificate < 1e-8);
  REQUIRE(r1.witness.has_value());
  CHECK(r1.witness->trace().real() == doctest::Approx(1.0).epsilon(1e-9));

  // classical maximally correlated bit -> 1 bit
  Mat cc = Mat::Zero(4, 4);
  cc(0, 0) = cc(3, 3) = 0.5;
  auto r2 = imax(DensityOperator(cc, two_qubits()), {"A"}, {"B"});
  CHECK(r2.value == doctest::Approx(1.0).epsilon(1e-8));

  auto r3 = imax(frozen_w(), {"A"}, {"B"});
  CHECK(r3.value == doctest::Approx(0.703040934891).epsilon(1e-7));

  // the SDP witness sigma_B achieves Dmax(rho_AB || rho_A x sigma_B) = Imax
  auto rho_a = partial_trace(frozen_w(), {"A"});
  Mat prod_w = kron(rho_a.matrix(), *r3.witness);
  CHECK(dmax(frozen_w().matrix(), prod_w) ==
        doctest::Approx(r3.value).epsilon(1e-6));
}

TEST_CASE("frozen oracles for plain divergences on the same state") {
  auto w = frozen_w();
  auto wa = partial_trace(w, {"A"});
  auto wb = partial_trace(w, {"B"});
  Mat prod = kron(wa.matrix(), wb.matrix());
  CHECK(dmax(w.matrix(), prod) == doctest::Approx(0.800358337961).epsilon(1e-9));
  CHECK(rel_entropy(w.matrix(), prod) ==
        doctest::Approx(0.165867556715).epsilon(1e-9));
  CHECK(fidelity(w.matrix(), prod) ==
        doctest::Approx(0.972959791071).epsilon(1e-9));
  // and D(rho_AB || rho_A x rho_B) is exactly the mutual information
  CHECK(rel_entropy(w.matrix(), prod) ==
        doctest::Approx(mutual_info(w, {"A"}, {"B"})).epsilon(1e-9));
}

TEST_CASE("mutual information as a minimum over sigma_B") {
  Rng rng(4242);
  for (std::uint64_t s : {301, 302, 303}) {
    auto rho = random_mixed(two_qubits(), s);
    auto rho_a = partial_trace(rho, {"A"});
    const double mi = mutual_info(rho, {"A"}, {"B"});
    for (int k = 0; k < 100; ++k) {
      Mat sig = random_density_matrix(2, rng);
      CHECK(rel_entropy(rho.matrix(), kron(rho_a.matrix(), sig)) >= mi - 1e-8);
    }
  }
}

TEST_CASE("imax: dimension bound and monotonicity under extension") {
  RegisterLayout abc({{"A", 2}, {"B", 2}, {"C", 2}});
  for (std::uint64_t s : {501, 502, 503, 504}) {
    Rng rng(s);
    auto rho = DensityOperator(random_density_matrix(8, rng, 4), abc);
    auto big = imax(rho, {"A"}, {"B", "C"});
    auto small = imax(partial_trace(rho, {"A", "B"}), {"A"}, {"B"});
    CHECK(big.value >= small.value - 1e-7);
    CHECK(big.value <= 2.0 * std::log2(2.0) + 1e-7);  // 2 min(log|A|, log|BC|)
  }
}

TEST_CASE("hmin and hmax") {
  // uniform uncorrelated qubit: Hmin(A|B) = 1
  DensityOperator mixed(Mat::Identity(2, 2) / 2.0, qubit("A"));
  auto sb = random_mixed(qubit("B"), 77);
  auto r0 = hmin(tensor(mixed, sb), {"A"}, {"B"});
  CHECK(r0.value == doctest::Approx(1.0).epsilon(1e-8));

  auto r1 = hmin(phi_plus(), {"A"}, {"B"});
  CHECK(r1.value == doctest::Approx(-1.0).epsilon(1e-8));

  // Hmax >= Hmin on random states
  for (std::uint64_t s : {601, 602, 603, 604, 605}) {
    auto rho = random_mixed(two_qubits(), s);
    auto lo = hmin(rho, {"A"}, {"B"});
    auto hi = hmax(rho, {"A"}, {"B"}, "W");
    CHECK(hi.value >= lo.value - 1e-7);
  }

  // hmax of the maximally entangled state: Hmax(A|B) = -1 (pure state,
  // purifying register is trivial-like: Hmax = -Hmin(A|W) with AW product)
  auto h = hmax(phi_plus(), {"A"}, {"B"}, "W");
  CHECK(h.value == doctest::Approx(-1.0).epsilon(1e-6));

  CHECK_THROWS_AS(hmax(phi_plus(), {"A"}, {"B"}, "B"), invalid_input);
}

TEST_CASE("data processing under partial trace") {
  RegisterLayout ab({{"A", 3}, {"B", 2}});
  for (std::uint64_t s : {701, 702, 703, 704, 705}) {
    auto rho = random_mixed(ab, s);
    auto sig = random_mixed(ab, s + 5000);
    auto ra = partial_trace(rho, {"A"}).matrix();
    auto sa = partial_trace(sig, {"A"}).matrix();
    CHECK(trace_distance(ra, sa) <=
          trace_distance(rho.matrix(), sig.matrix()) + 1e-9);
    CHECK(fidelity(ra, sa) >= fidelity(rho.matrix(), sig.matrix()) - 1e-9);
    CHECK(rel_entropy(ra, sa) <=
          rel_entropy(rho.matrix(), sig.matrix()) + 1e-8);
  }
}

TEST_CASE("relative entropy of classical mixtures: mixing bound") {
  Rng rng(808);
  for (int trial = 0; trial < 40; ++trial) {
    const int m = 2 + (int)rng.integer(3);  // 2..4 branches
    std::vector<double> p(m), q(m);
    double sp = 0, sq = 0;
    for (int i = 0; i < m; ++i) {
      p[i] = rng.uniform() + 1e-3;
      q[i] = rng.uniform() + 1e-3;
      sp += p[i];
      sq += q[i];
    }
    Mat mix_r = Mat::Zero(2, 2), mix_s = Mat::Zero(2, 2);
    double dpq = 0.0, sum_pd = 0.0;
    bool finite = true;
    std::vector<Mat> rs(m), ss(m);
    for (int i = 0; i < m; ++i) {
      p[i] /= sp;
      q[i] /= sq;
      rs[i] = random_density_matrix(2, rng);
      ss[i] = random_density_matrix(2, rng);
      mix_r += p[i] * rs[i];
      mix_s += q[i] * ss[i];
      dpq += p[i] * std::log2(p[i] / q[i]);
      const double d_i = rel_entropy(rs[i], ss[i]);
      if (d_i == kInf) finite = false;
      sum_pd += p[i] * d_i;
    }
    REQUIRE(finite);
    CHECK(rel_entropy(mix_r, mix_s) <= dpq + sum_pd + 1e-8);
  }
}

TEST_CASE("smoothing: degenerate ball, dominance, pseudo-pure gap") {
  auto rho = random_mixed(two_qubits(), 900);
  SmoothOptions light;
  light.restarts = 2;
  light.iters = 40;

  auto base = imax(rho, {"A"}, {"B"});
  auto e0 = smooth(SmoothQuantity::imax, rho, {"A"}, {"B"}, 0.0, light);
  CHECK(e0.value == doctest::Approx(base.value).epsilon(1e-6));

  auto e1 = smooth(SmoothQuantity::imax, rho, {"A"}, {"B"}, 0.1, light);
  CHECK(e1.value <= base.value + 1e-7);
  CHECK(e1.kind == ResultKind::heuristic_upper);
  CHECK(e1.certificate <= 0.1 + 1e-9);
  REQUIRE(e1.witness.has_value());
  CHECK(purified_distance(rho.matrix(), *e1.witness) <= 0.1 + 1e-9);

  // hmin smooths upward
  auto hbase = hmin(rho, {"A"}, {"B"});
  auto h1 = smooth(SmoothQuantity::hmin, rho, {"A"}, {"B"}, 0.1, light);
  CHECK(h1.value >= hbase.value - 1e-7);
  CHECK(h1.kind == ResultKind::heuristic_lower);

  // hmax smooths downward
  auto xbase = hmax(rho, {"A"}, {"B"}, "W");
  auto x1 = smooth(SmoothQuantity::hmax, rho, {"A"}, {"B"}, 0.1, light);
  CHECK(x1.value <= xbase.value + 1e-7);

  CHECK_THROWS_AS(smooth(SmoothQuantity::imax, rho, {"A"}, {"B"}, 1.0, light),
                  invalid_input);

  // pseudo-pure pair: the 0.2-ball around (1-p) phi+ + p I/4 contains states
  // with visibly smaller Imax
  Mat pp = 0.99 * phi_plus().matrix() + 0.01 * Mat::Identity(4, 4) / 4.0;
  DensityOperator rho_pp(pp, two_qubits());
  auto u = imax(rho_pp, {"A"}, {"B"});
  auto sm = smooth(SmoothQuantity::imax, rho_pp, {"A"}, {"B"}, 0.2, light);
  CHECK(u.value - sm.value >= 0.05);
}

TEST_CASE("fidelity of recovery") {
  RegisterLayout ab({{"A", 2}, {"B", 2}});

  // extension by attaching a fixed sigma_C (channel B -> BC) is exactly
  // recoverable by construction
  Rng rng(1001);
  auto rho_ab = DensityOperator(random_density_matrix(4, rng), ab);
  auto sig_c = DensityOperator(random_density_matrix(2, rng),
                               RegisterLayout({{"C", 2}}));
  auto ext = tensor(rho_ab, sig_c);
  auto rp = fidelity_of_recovery(ext, {"A"}, {"C"}, {"B"},
                                 RecoveryMethod::petz);
  CHECK(rp.value >= 1.0 - 1e-6);
  CHECK(rp.kind == ResultKind::heuristic_lower);

  // block Markov chain rho_{A B1} (x) rho_{B2 C}: I(A:C|B) = 0 and the Petz
  // map recovers it exactly from the AB marginal
  RegisterLayout ab1({{"A", 2}, {"B1", 2}});
  RegisterLayout b2c({{"B2", 2}, {"C", 2}});
  auto markov = tensor(DensityOperator(random_density_matrix(4, rng), ab1),
                       DensityOperator(random_density_matrix(4, rng), b2c));
  CHECK(cond_mutual_info(markov, {"A"}, {"C"}, {"B1", "B2"}) ==
        doctest::Approx(0.0).epsilon(1e-9));
  auto rm = fidelity_of_recovery(markov, {"A"}, {"C"}, {"B1", "B2"},
                                 RecoveryMethod::petz);
  CHECK(rm.value >= 1.0 - 1e-6);

  // product state: Petz recovers exactly
  auto prod = tensor(tensor(random_mixed(qubit("A"), 1), random_mixed(qubit("B"), 2)),
                     random_mixed(qubit("C"), 3));
  auto rq = fidelity_of_recovery(prod, {"A"}, {"C"}, {"B"},
                                 RecoveryMethod::petz);
  CHECK(rq.value >= 1.0 - 1e-6);

  // optimize dominates petz on random pure tripartite states
  RegisterLayout abc({{"A", 2}, {"B", 2}, {"C", 2}});
  RecoveryOptions ro;
  ro.restarts = 2;
  ro.iters = 60;
  for (std::uint64_t s : {41, 42}) {
    auto psi = random_state(abc, s).to_density();
    auto pz = fidelity_of_recovery(psi, {"A"}, {"C"}, {"B"},
                                   RecoveryMethod::petz);
    auto op = fidelity_of_recovery(psi, {"A"}, {"C"}, {"B"},
                                   RecoveryMethod::optimize, ro);
    CHECK(pz.value <= op.value + 1e-6);
    REQUIRE(op.witness.has_value());
    CHECK(op.witness->trace().real() == doctest::Approx(1.0).epsilon(1e-9));
  }

  CHECK_THROWS_AS(fidelity_of_recovery(prod, {"A"}, {}, {"B", "C"},
                                       RecoveryMethod::petz),
                  invalid_input);
}

TEST_CASE("vn entropy basics") {
  CHECK(vn_entropy(Mat(Mat::Identity(4, 4) / 4.0)) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(vn_entropy(phi_plus()) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(to_string(ResultKind::sdp_certified) == "sdp_certified");
}

}  // TEST_SUITE
