#include <algorithm>
#include <cmath>
#include <limits>

#include "qsr/entropy.hpp"
#include "qsr/random.hpp"

namespace qsr {

namespace {

// clip negative eigenvalues and renormalize the trace: nearest valid state
// along the spectral decomposition
Mat psd_project_normalize(const Mat& m) {
  Mat h = (m + m.adjoint()) / 2.0;
  auto eig = eig_hermitian(h);
  RealVec v = eig.values.cwiseMax(0.0);
  const double tr = v.sum();
  if (tr <= 0.0) return Mat::Identity(m.rows(), m.cols()) / double(m.rows());
  v /= tr;
  return eig.vectors * v.asDiagonal() * eig.vectors.adjoint();
}

// random direction of unit Frobenius norm
Mat random_direction(int d, Rng& rng) {
  Mat g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.complex_normal();
  Mat h = (g + g.adjoint()) / 2.0;
  const double n = h.norm();
  return n > 0 ? Mat(h / n) : Mat::Identity(d, d) / std::sqrt(double(d));
}

// largest alpha in [0,1] with P(rho, (1-a) rho + a target) <= eps_eff
double largest_inball_mix(const Mat& rho, const Mat& target, double eps_eff) {
  auto pd = [&](double a) {
    return purified_distance(rho, Mat((1.0 - a) * rho + a * target));
  };
  if (pd(1.0) <= eps_eff) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 50; ++i) {
    const double mid = (lo + hi) / 2.0;
    (pd(mid) <= eps_eff ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

QuantityResult smooth(SmoothQuantity q, const DensityOperator& rho,
                      const std::vector<std::string>& part_a,
                      const std::vector<std::string>& part_b, double eps,
                      const SmoothOptions& opts) {
  if (eps < 0.0 || eps >= 1.0)
    throw invalid_input("smooth: eps out of range [0,1)");

  const RegisterLayout layout = rho.layout();
  const int d = static_cast<int>(layout.dim());

  // objective in minimization form: s * value
  const double s = (q == SmoothQuantity::hmin) ? -1.0 : 1.0;
  auto eval = [&](const Mat& m) -> double {
    try {
      DensityOperator cand(m, layout);
      switch (q) {
        case SmoothQuantity::imax: return s * imax(cand, part_a, part_b).value;
        case SmoothQuantity::hmin: return s * hmin(cand, part_a, part_b).value;
        case SmoothQuantity::hmax:
          return s * hmax(cand, part_a, part_b, opts.purifying_label).value;
      }
    } catch (const std::exception&) {
      // a candidate the solver cannot certify is simply skipped
    }
    return std::numeric_limits<double>::infinity();
  };

  const Mat& center = rho.matrix();
  double best_obj = eval(center);
  Mat best_state = center;

  const double eps_eff = std::max(0.0, eps - 1e-10);  // stay strictly in-ball
  auto consider = [&](const Mat& m) {
    if (purified_distance(center, m) > eps) return;
    const double v = eval(m);
    if (v < best_obj) {
      best_obj = v;
      best_state = m;
    }
  };

  if (eps > 0.0) {
    // structured directions: toward maximal mixing, toward the product of the
    // marginals, toward the dominant eigenvector (de-mixing)
    std::vector<Mat> targets;
    targets.push_back(Mat::Identity(d, d) / double(d));
    {
      auto ra = partial_trace(rho, part_a);
      auto rb = partial_trace(rho, part_b);
      auto ordered = permute(rho, [&] {
        std::vector<std::string> o = part_a;
        o.insert(o.end(), part_b.begin(), part_b.end());
        return o;
      }());
      Mat prod = kron(ra.matrix(), rb.matrix());
      // bring the product back to the layout's own label order
      DensityOperator prod_op(prod, ordered.layout());
      targets.push_back(permute(prod_op, layout.labels()).matrix());
    }
    {
      auto eig = eig_hermitian(center);
      Mat top = eig.vectors.col(0) * eig.vectors.col(0).adjoint();
      targets.push_back(top);
    }
    for (const Mat& t : targets) {
      const double a = largest_inball_mix(center, t, eps_eff);
      for (double f : {1.0, 0.5, 0.25})
        consider(psd_project_normalize((1.0 - a * f) * center + a * f * t));
    }

    // randomized hill climb
    for (int r = 0; r < opts.restarts; ++r) {
      Rng base(opts.seed);
      Rng rng = base.fork(1000 + r);
      Mat cur = best_state;
      double cur_obj = best_obj;
      double step = 0.25 * eps;
      for (int i = 0; i < opts.iters; ++i) {
        Mat dir = random_direction(d, rng);
        Mat cand = psd_project_normalize(cur + step * dir);
        if (purified_distance(center, cand) > eps_eff) {
          const double a = largest_inball_mix(center, cand, eps_eff);
          cand = psd_project_normalize((1.0 - a) * center + a * cand);
        }
        const double v = eval(cand);
        if (v < cur_obj) {
          cur = cand;
          cur_obj = v;
          step = std::min(step * 1.25, 0.5);
        } else {
          step = std::max(step * 0.9, 1e-4 * eps);
        }
      }
      if (cur_obj < best_obj) {
        best_obj = cur_obj;
        best_state = cur;
      }
    }
  }

  QuantityResult res;
  res.value = s * best_obj;
  res.kind = (q == SmoothQuantity::hmin) ? ResultKind::heuristic_lower
                                         : ResultKind::heuristic_upper;
  res.certificate = purified_distance(center, best_state);
  res.witness = best_state;
  return res;
}

}  // namespace qsr
