#include "qsr/random.hpp"

#include <cmath>

namespace qsr {

double Rng::uniform() {
  // 53-bit mantissa from the top bits, in [0,1)
  return (eng_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Box-Muller; u1 shifted away from zero for a finite log
  double u1 = uniform(), u2 = uniform();
  u1 = u1 > 0.0 ? u1 : 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

Scalar Rng::complex_normal() {
  const double re = normal();
  const double im = normal();
  return Scalar(re, im) / std::sqrt(2.0);
}

std::uint64_t Rng::integer(std::uint64_t bound) {
  // rejection-free modulo is fine here: bounds are tiny vs 2^64
  return eng_() % bound;
}

Rng Rng::fork(std::uint64_t salt) {
  // splitmix-style decorrelation of (stream draw, salt)
  std::uint64_t z = eng_() + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return Rng(z ^ (z >> 31));
}

Mat haar_unitary(int dim, Rng& rng) {
  Mat g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = rng.complex_normal();
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  // fix the R-diagonal phases so the distribution is exactly Haar
  for (int j = 0; j < dim; ++j) {
    Scalar d = r(j, j);
    double a = std::abs(d);
    q.col(j) *= (a > 0 ? d / a : Scalar(1.0));
  }
  return q;
}

Vec haar_vector(int dim, Rng& rng) {
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.complex_normal();
  v.normalize();
  return v;
}

Mat random_density_matrix(int dim, Rng& rng, int rank) {
  if (rank < 1 || rank > dim) rank = dim;
  Mat g(dim, rank);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < rank; ++j) g(i, j) = rng.complex_normal();
  Mat rho = g * g.adjoint();
  rho /= rho.trace();
  return rho;
}

}  // namespace qsr
