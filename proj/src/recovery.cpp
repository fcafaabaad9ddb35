#include <Eigen/QR>
#include <algorithm>
#include <cmath>

#include "qsr/entropy.hpp"
#include "qsr/random.hpp"

namespace qsr {

namespace {

struct Tripartition {
  DensityOperator ordered;  // permuted to [A..., B..., C...]
  Mat rho_ab;               // on [A..., B...]
  Mat rho_bc;               // on [B..., C...]
  Mat rho_b;
  int da, db, dc;
};

Tripartition split_abc(const DensityOperator& rho,
                       const std::vector<std::string>& part_a,
                       const std::vector<std::string>& part_c,
                       const std::vector<std::string>& part_b) {
  auto check = [&](const std::vector<std::string>& p, const char* name) {
    if (p.empty())
      throw invalid_input(std::string("fidelity_of_recovery: empty part ") +
                          name + " (degenerate tripartition)");
  };
  check(part_a, "A");
  check(part_c, "C");
  check(part_b, "B");
  std::vector<std::string> order = part_a;
  order.insert(order.end(), part_b.begin(), part_b.end());
  order.insert(order.end(), part_c.begin(), part_c.end());
  if (static_cast<int>(order.size()) != rho.layout().size())
    throw invalid_input(
        "fidelity_of_recovery: parts must tripartition the layout");
  auto ordered = permute(rho, order);  // also validates disjoint/known labels

  std::vector<std::string> ab = part_a;
  ab.insert(ab.end(), part_b.begin(), part_b.end());
  std::vector<std::string> bc = part_b;
  bc.insert(bc.end(), part_c.begin(), part_c.end());

  Tripartition t{ordered,
                 partial_trace(ordered, ab).matrix(),
                 partial_trace(ordered, bc).matrix(),
                 partial_trace(ordered, part_b).matrix(),
                 1, 1, 1};
  long long da = 1, db = 1, dc = 1;
  for (const auto& l : part_a) da *= rho.layout().dim_of(l);
  for (const auto& l : part_b) db *= rho.layout().dim_of(l);
  for (const auto& l : part_c) dc *= rho.layout().dim_of(l);
  t.da = static_cast<int>(da);
  t.db = static_cast<int>(db);
  t.dc = static_cast<int>(dc);
  return t;
}

// Petz recovery Kraus operators K_c = rho_BC^{1/2} (rho_B^{-1/2+} (x) |c>),
// mapping B -> B (x) C
std::vector<Mat> petz_kraus(const Tripartition& t) {
  const Mat sqrt_bc = mat_sqrt(t.rho_bc);
  const Mat pinv_b = mat_pinv_sqrt(t.rho_b);
  std::vector<Mat> ks;
  ks.reserve(t.dc);
  for (int c = 0; c < t.dc; ++c) {
    Mat e = Mat::Zero(t.dc, 1);
    e(c, 0) = 1.0;
    ks.push_back(sqrt_bc * kron(pinv_b, e));
  }
  return ks;
}

// apply the channel with the given B -> BC Kraus operators to rho_AB
Mat apply_recovery(const Tripartition& t, const std::vector<Mat>& ks) {
  Mat out = Mat::Zero(t.da * t.db * t.dc, t.da * t.db * t.dc);
  const Mat ia = Mat::Identity(t.da, t.da);
  for (const Mat& k : ks) {
    const Mat lift = kron(ia, k);
    out += lift * t.rho_ab * lift.adjoint();
  }
  return out;
}

// isometric dilation V: B -> (BC) (x) E of the Petz channel, completed on the
// kernel of rho_B so that V is a true isometry
Mat petz_dilation(const Tripartition& t, int de) {
  const auto ks = petz_kraus(t);
  Mat v = Mat::Zero(t.db * t.dc * de, t.db);
  for (int c = 0; c < t.dc; ++c)
    for (int bc = 0; bc < t.db * t.dc; ++bc)
      for (int b = 0; b < t.db; ++b) v(bc * de + c, b) = ks[c](bc, b);
  // completion: map ker(rho_B) into the env slot dc (identity on B, C = |0>)
  Mat gram = Mat::Zero(t.db, t.db);
  for (const Mat& k : ks) gram += k.adjoint() * k;
  Mat defect = Mat::Identity(t.db, t.db) - gram;  // projector onto the kernel
  if (defect.norm() > 1e-12) {
    Mat half = mat_sqrt(defect);
    for (int bp = 0; bp < t.db; ++bp)
      for (int b = 0; b < t.db; ++b)
        v((bp * t.dc + 0) * de + t.dc, b) += half(bp, b);
  }
  return v;
}

// recovered state from a dilation: Tr_E[(I_A (x) V) rho_AB (.)^dag]
Mat recover_from_dilation(const Tripartition& t, const Mat& v, int de) {
  const Mat lift = kron(Mat::Identity(t.da, t.da), v);
  const Mat full = lift * t.rho_ab * lift.adjoint();
  return partial_trace_axes(full, {t.da, t.db * t.dc, de}, {0, 1});
}

Mat orthonormalize(const Mat& m) {
  Eigen::HouseholderQR<Mat> qr(m);
  Mat q = qr.householderQ() * Mat::Identity(m.rows(), m.cols());
  return q;
}

}  // namespace

QuantityResult fidelity_of_recovery(const DensityOperator& rho,
                                    const std::vector<std::string>& part_a,
                                    const std::vector<std::string>& part_c,
                                    const std::vector<std::string>& part_b,
                                    RecoveryMethod method,
                                    const RecoveryOptions& opts) {
  Tripartition t = split_abc(rho, part_a, part_c, part_b);
  const Mat& target = t.ordered.matrix();

  Mat best_out;
  double best_f = -1.0;
  double trace_residual = 0.0;

  if (method == RecoveryMethod::petz) {
    Mat out = apply_recovery(t, petz_kraus(t));
    const double tr = out.trace().real();
    trace_residual = std::abs(1.0 - tr);
    if (tr > 0.0 && trace_residual > 1e-14) out /= tr;
    best_out = out;
    best_f = fidelity(target, out);
  } else {
    const int de = std::max(t.db * t.dc, t.dc + 1);
    auto eval = [&](const Mat& v) {
      Mat out = recover_from_dilation(t, v, de);
      const double tr = out.trace().real();
      if (tr > 0.0 && std::abs(1.0 - tr) > 1e-14) out /= tr;
      return std::make_pair(fidelity(target, out), out);
    };
    Rng base(opts.seed);
    for (int r = 0; r < std::max(1, opts.restarts); ++r) {
      Rng rng = base.fork(r);
      Mat v;
      if (r == 0) {
        v = petz_dilation(t, de);
      } else {
        Mat g(t.db * t.dc * de, t.db);
        for (int i = 0; i < g.rows(); ++i)
          for (int j = 0; j < g.cols(); ++j) g(i, j) = rng.complex_normal();
        v = orthonormalize(g);
      }
      auto [f, out] = eval(v);
      if (f > best_f) {
        best_f = f;
        best_out = out;
      }
      double step = 0.3;
      for (int i = 0; i < opts.iters; ++i) {
        Mat g(v.rows(), v.cols());
        for (int a = 0; a < g.rows(); ++a)
          for (int b = 0; b < g.cols(); ++b) g(a, b) = rng.complex_normal();
        Mat cand = orthonormalize(v + step * g / g.norm());
        auto [fc, outc] = eval(cand);
        if (fc > f) {
          f = fc;
          v = cand;
          step = std::min(step * 1.2, 1.0);
          if (fc > best_f) {
            best_f = fc;
            best_out = outc;
          }
        } else {
          step = std::max(step * 0.85, 1e-4);
        }
      }
    }
  }

  // witness in the caller's original register order
  RegisterLayout abc_layout = t.ordered.layout();
  DensityOperator witness(best_out, abc_layout);
  QuantityResult res;
  res.value = best_f;
  res.kind = ResultKind::heuristic_lower;
  res.certificate = trace_residual;
  res.witness = permute(witness, rho.layout().labels()).matrix();
  return res;
}

}  // namespace qsr
