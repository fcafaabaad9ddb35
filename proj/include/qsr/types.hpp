#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace qsr {

using Scalar = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RealVec = Eigen::VectorXd;

// thrown on any input-contract violation; the CLI maps it to exit code 2
struct invalid_input : std::runtime_error {
  explicit invalid_input(const std::string& msg) : std::runtime_error(msg) {}
};

namespace tol {
inline constexpr double hermiticity = 1e-10;   // max abs entry of rho - rho^dag
inline constexpr double psd_floor = -1e-9;     // smallest admissible eigenvalue
inline constexpr double trace_one = 1e-9;
inline constexpr double state_norm = 1e-10;
inline constexpr double isometry = 1e-9;       // ||V^dag V - I||_max
inline constexpr double rank_cut = 1e-12;      // support detection
inline constexpr double pinv_rank = 1e-10;     // pseudo-inverse rank cutoff
}  // namespace tol

inline double log2_safe(double x) { return std::log2(x); }

}  // namespace qsr
