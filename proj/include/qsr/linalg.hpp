#pragma once

#include <utility>
#include <vector>

#include "qsr/types.hpp"

namespace qsr {

// Kronecker product a (x) b.
Mat kron(const Mat& a, const Mat& b);
Vec kron_vec(const Vec& a, const Vec& b);

// Eigendecomposition of a Hermitian matrix with deterministic conventions:
// eigenvalues sorted descending (stable: degenerate ties keep the solver's
// original relative order), each eigenvector's largest-magnitude component
// made real and positive. Reconstruction error <= 1e-9 * max|M_ij|.
struct EigResult {
  RealVec values;  // descending
  Mat vectors;     // columns aligned with values
};
EigResult eig_hermitian(const Mat& m);

// Hermitian square root of a PSD matrix (negative eigenvalues clipped to 0).
Mat mat_sqrt(const Mat& m);
// Moore-Penrose inverse square root on the support (eigenvalues below
// rank_tol are treated as zero and excluded).
Mat mat_pinv_sqrt(const Mat& m, double rank_tol = tol::pinv_rank);
// Pseudo-inverse on the support, same cutoff convention.
Mat mat_pinv(const Mat& m, double rank_tol = tol::pinv_rank);

// Reorder the tensor factors of a vector / square matrix living on registers
// with the given dims: perm[i] = current axis that target slot i takes.
Vec permute_vector_axes(const Vec& v, const std::vector<int>& dims,
                        const std::vector<int>& perm);
Mat permute_matrix_axes(const Mat& m, const std::vector<int>& dims,
                        const std::vector<int>& perm);

// Partial trace keeping the axes in `keep` (indices into dims, any order
// given; kept axes stay in their original relative order).
Mat partial_trace_axes(const Mat& m, const std::vector<int>& dims,
                       const std::vector<int>& keep);
// Same contraction applied to a pure-state vector: returns the Gram matrix
// X X^dag of the (keep x traced) reshape, i.e. the kept marginal.
Mat vector_marginal_axes(const Vec& v, const std::vector<int>& dims,
                         const std::vector<int>& keep);

}  // namespace qsr
