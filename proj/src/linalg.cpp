#include "qsr/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <numeric>

namespace qsr {

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Vec kron_vec(const Vec& a, const Vec& b) {
  Vec out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

EigResult eig_hermitian(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  if (es.info() != Eigen::Success)
    throw invalid_input("hermitian eigendecomposition failed to converge");
  const Eigen::Index n = m.rows();
  // solver returns ascending; stable-sort descending so degenerate clusters
  // keep the solver's relative order
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    return es.eigenvalues()(a) > es.eigenvalues()(b);
  });
  EigResult out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = es.eigenvalues()(idx[k]);
    Vec v = es.eigenvectors().col(idx[k]);
    // phase convention: largest-magnitude component real positive
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double a = std::abs(v(i));
      if (a > best + 1e-15) {  // strict improvement keeps ties at lowest index
        best = a;
        imax = i;
      }
    }
    if (best > 0) v *= std::conj(v(imax)) / std::abs(v(imax));
    out.vectors.col(k) = v;
  }
  return out;
}

Mat mat_sqrt(const Mat& m) {
  auto eig = eig_hermitian(m);
  RealVec s = eig.values.cwiseMax(0.0).cwiseSqrt();
  return eig.vectors * s.asDiagonal() * eig.vectors.adjoint();
}

Mat mat_pinv_sqrt(const Mat& m, double rank_tol) {
  auto eig = eig_hermitian(m);
  RealVec s = RealVec::Zero(eig.values.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (eig.values(i) > rank_tol) s(i) = 1.0 / std::sqrt(eig.values(i));
  return eig.vectors * s.asDiagonal() * eig.vectors.adjoint();
}

Mat mat_pinv(const Mat& m, double rank_tol) {
  auto eig = eig_hermitian(m);
  RealVec s = RealVec::Zero(eig.values.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (eig.values(i) > rank_tol) s(i) = 1.0 / eig.values(i);
  return eig.vectors * s.asDiagonal() * eig.vectors.adjoint();
}

namespace {

// row-major multi-index strides for the given dims
std::vector<long long> strides_of(const std::vector<int>& dims) {
  std::vector<long long> s(dims.size());
  long long acc = 1;
  for (int i = static_cast<int>(dims.size()) - 1; i >= 0; --i) {
    s[i] = acc;
    acc *= dims[i];
  }
  return s;
}

}  // namespace

Vec permute_vector_axes(const Vec& v, const std::vector<int>& dims,
                        const std::vector<int>& perm) {
  const int n = static_cast<int>(dims.size());
  if (static_cast<int>(perm.size()) != n)
    throw invalid_input("axis permutation has wrong length");
  std::vector<int> newdims(n);
  for (int i = 0; i < n; ++i) newdims[i] = dims[perm[i]];
  auto src_str = strides_of(dims);
  auto dst_str = strides_of(newdims);
  // stride of destination slot i in the source flat index
  std::vector<long long> mix(n);
  for (int i = 0; i < n; ++i) mix[i] = src_str[perm[i]];
  Vec out(v.size());
  std::vector<int> digit(n, 0);
  long long src = 0;
  for (long long dst = 0; dst < v.size(); ++dst) {
    out(dst) = v(src);
    for (int i = n - 1; i >= 0; --i) {
      if (++digit[i] < newdims[i]) {
        src += mix[i];
        break;
      }
      digit[i] = 0;
      src -= mix[i] * (newdims[i] - 1);
    }
  }
  return out;
}

Mat permute_matrix_axes(const Mat& m, const std::vector<int>& dims,
                        const std::vector<int>& perm) {
  // permute rows and columns with the same axis map
  const long long d = m.rows();
  const int n = static_cast<int>(dims.size());
  std::vector<int> newdims(n);
  for (int i = 0; i < n; ++i) newdims[i] = dims[perm[i]];
  auto src_str = strides_of(dims);
  std::vector<long long> mix(n);
  for (int i = 0; i < n; ++i) mix[i] = src_str[perm[i]];
  std::vector<long long> map(d, 0);
  std::vector<int> digit(n, 0);
  long long src = 0;
  for (long long dst = 0; dst < d; ++dst) {
    map[dst] = src;
    for (int i = n - 1; i >= 0; --i) {
      if (++digit[i] < newdims[i]) {
        src += mix[i];
        break;
      }
      digit[i] = 0;
      src -= mix[i] * (newdims[i] - 1);
    }
  }
  Mat out(d, d);
  for (long long r = 0; r < d; ++r)
    for (long long c = 0; c < d; ++c) out(r, c) = m(map[r], map[c]);
  return out;
}

Mat partial_trace_axes(const Mat& m, const std::vector<int>& dims,
                       const std::vector<int>& keep) {
  const int n = static_cast<int>(dims.size());
  std::vector<int> keep_sorted(keep);
  std::sort(keep_sorted.begin(), keep_sorted.end());
  std::vector<int> traced;
  for (int i = 0; i < n; ++i)
    if (!std::binary_search(keep_sorted.begin(), keep_sorted.end(), i))
      traced.push_back(i);
  auto str = strides_of(dims);
  long long dk = 1, dt = 1;
  for (int i : keep_sorted) dk *= dims[i];
  for (int i : traced) dt *= dims[i];
  // flat offsets of every kept / traced multi-index
  auto offsets = [&](const std::vector<int>& axes) {
    std::vector<long long> out;
    long long total = 1;
    for (int a : axes) total *= dims[a];
    out.reserve(total);
    std::vector<int> digit(axes.size(), 0);
    long long off = 0;
    for (long long c = 0; c < total; ++c) {
      out.push_back(off);
      for (int i = static_cast<int>(axes.size()) - 1; i >= 0; --i) {
        if (++digit[i] < dims[axes[i]]) {
          off += str[axes[i]];
          break;
        }
        digit[i] = 0;
        off -= str[axes[i]] * (dims[axes[i]] - 1);
      }
    }
    return out;
  };
  auto koff = offsets(keep_sorted);
  auto toff = offsets(traced);
  Mat out = Mat::Zero(dk, dk);
  for (long long r = 0; r < dk; ++r)
    for (long long c = 0; c < dk; ++c) {
      Scalar acc = 0.0;
      for (long long t = 0; t < dt; ++t)
        acc += m(koff[r] + toff[t], koff[c] + toff[t]);
      out(r, c) = acc;
    }
  return out;
}

Mat vector_marginal_axes(const Vec& v, const std::vector<int>& dims,
                         const std::vector<int>& keep) {
  const int n = static_cast<int>(dims.size());
  std::vector<int> keep_sorted(keep);
  std::sort(keep_sorted.begin(), keep_sorted.end());
  std::vector<int> perm(keep_sorted);
  for (int i = 0; i < n; ++i)
    if (!std::binary_search(keep_sorted.begin(), keep_sorted.end(), i))
      perm.push_back(i);
  Vec p = permute_vector_axes(v, dims, perm);
  long long dk = 1;
  for (int i : keep_sorted) dk *= dims[i];
  Eigen::Map<const Mat> x(p.data(), v.size() / dk, dk);
  // columns indexed by kept registers: marginal = X^T conj(X)
  return (x.transpose() * x.conjugate());
}

}  // namespace qsr
