#include "qsr/states.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qsr {

DensityOperator::DensityOperator(Mat data, RegisterLayout layout)
    : data_(std::move(data)), layout_(std::move(layout)) {
  if (data_.rows() != data_.cols())
    throw invalid_input("density operator must be square");
  if (data_.rows() != layout_.dim())
    throw invalid_input("density operator dimension does not match layout");
  const double herm = (data_ - data_.adjoint()).cwiseAbs().maxCoeff();
  if (herm > tol::hermiticity) {
    std::ostringstream os;
    os << "density operator not Hermitian (residual " << herm << ")";
    throw invalid_input(os.str());
  }
  data_ = (data_ + data_.adjoint().eval()) / 2.0;
  auto eig = eig_hermitian(data_);
  const double mineig = eig.values(eig.values.size() - 1);
  if (mineig < tol::psd_floor) {
    std::ostringstream os;
    os << "density operator not PSD (min eigenvalue " << mineig << ")";
    throw invalid_input(os.str());
  }
  const double tr = data_.trace().real();
  if (std::abs(tr - 1.0) > tol::trace_one) {
    std::ostringstream os;
    os << "density operator trace " << tr << " is not 1";
    throw invalid_input(os.str());
  }
  if (mineig < 0) {
    RealVec clipped = eig.values.cwiseMax(0.0);
    data_ = eig.vectors * clipped.asDiagonal() * eig.vectors.adjoint();
  }
  data_ /= data_.trace().real();
}

StateVector::StateVector(Vec data, RegisterLayout layout)
    : data_(std::move(data)), layout_(std::move(layout)) {
  if (data_.size() != layout_.dim())
    throw invalid_input("state vector dimension does not match layout");
  const double nrm = data_.norm();
  if (std::abs(nrm - 1.0) > tol::state_norm) {
    std::ostringstream os;
    os << "state vector norm " << nrm << " is not 1";
    throw invalid_input(os.str());
  }
  data_ /= nrm;
}

DensityOperator StateVector::to_density() const {
  return DensityOperator(data_ * data_.adjoint(), layout_);
}

IsometryMap::IsometryMap(Mat data, RegisterLayout in, RegisterLayout out)
    : data_(std::move(data)), in_(std::move(in)), out_(std::move(out)) {
  if (data_.rows() != out_.dim() || data_.cols() != in_.dim())
    throw invalid_input("isometry shape does not match layouts");
  if (data_.rows() < data_.cols())
    throw invalid_input("isometry output dimension smaller than input");
  const double res =
      (data_.adjoint() * data_ - Mat::Identity(data_.cols(), data_.cols()))
          .cwiseAbs()
          .maxCoeff();
  if (res > tol::isometry) {
    std::ostringstream os;
    os << "V^dag V deviates from identity by " << res;
    throw invalid_input(os.str());
  }
}

DensityOperator tensor(const DensityOperator& a, const DensityOperator& b) {
  return DensityOperator(kron(a.matrix(), b.matrix()),
                         a.layout().concat(b.layout()));
}

StateVector tensor(const StateVector& a, const StateVector& b) {
  return StateVector(kron_vec(a.vector(), b.vector()),
                     a.layout().concat(b.layout()));
}

DensityOperator partial_trace(const DensityOperator& rho,
                              const std::vector<std::string>& keep) {
  auto pos = rho.layout().positions_of(keep);
  Mat out = partial_trace_axes(rho.matrix(), rho.layout().dims(), pos);
  return DensityOperator(out, rho.layout().sublayout(keep));
}

DensityOperator partial_trace(const StateVector& psi,
                              const std::vector<std::string>& keep) {
  auto pos = psi.layout().positions_of(keep);
  Mat out = vector_marginal_axes(psi.vector(), psi.layout().dims(), pos);
  return DensityOperator(out, psi.layout().sublayout(keep));
}

namespace {
std::vector<int> order_perm(const RegisterLayout& layout,
                            const std::vector<std::string>& order) {
  if (static_cast<int>(order.size()) != layout.size())
    throw invalid_input("permutation must list every register exactly once");
  return layout.positions_of(order);
}
std::vector<std::pair<std::string, int>> ordered_regs(
    const RegisterLayout& layout, const std::vector<std::string>& order) {
  std::vector<std::pair<std::string, int>> out;
  for (const auto& l : order) out.push_back({l, layout.dim_of(l)});
  return out;
}
}  // namespace

DensityOperator permute(const DensityOperator& rho,
                        const std::vector<std::string>& order) {
  auto perm = order_perm(rho.layout(), order);
  Mat out = permute_matrix_axes(rho.matrix(), rho.layout().dims(), perm);
  return DensityOperator(out, RegisterLayout(ordered_regs(rho.layout(), order)));
}

StateVector permute(const StateVector& psi,
                    const std::vector<std::string>& order) {
  auto perm = order_perm(psi.layout(), order);
  Vec out = permute_vector_axes(psi.vector(), psi.layout().dims(), perm);
  return StateVector(out, RegisterLayout(ordered_regs(psi.layout(), order)));
}

StateVector purify(const DensityOperator& rho, const std::string& anc_label) {
  const long long d = rho.dim();
  auto eig = eig_hermitian(rho.matrix());
  Vec out = Vec::Zero(d * d);
  for (long long k = 0; k < d; ++k) {
    const double lk = std::max(0.0, eig.values(k));
    if (lk == 0.0) continue;
    const double s = std::sqrt(lk);
    for (long long i = 0; i < d; ++i) out(i * d + k) = s * eig.vectors(i, k);
  }
  RegisterLayout anc({{anc_label, static_cast<int>(d)}});
  // single fused register for the system side keeps the ancilla appended last
  return StateVector(out, rho.layout().concat(anc));
}

namespace {
template <typename StateT, typename ApplyFn>
StateT apply_isometry_impl(const IsometryMap& v, const StateT& st,
                           ApplyFn&& apply) {
  const auto& layout = st.layout();
  const auto in_labels = v.input().labels();
  for (const auto& l : in_labels)
    if (layout.dim_of(l) != v.input().dim_of(l))
      throw invalid_input("isometry input register '" + l +
                          "' dimension mismatch");
  // move the acted-on registers to the front, in the isometry's input order
  std::vector<std::string> order = in_labels;
  std::vector<std::string> rest;
  for (const auto& l : layout.labels())
    if (std::find(in_labels.begin(), in_labels.end(), l) == in_labels.end()) {
      order.push_back(l);
      rest.push_back(l);
    }
  StateT moved = permute(st, order);
  RegisterLayout out_layout = v.output();
  for (const auto& l : rest) {
    if (out_layout.has(l))
      throw invalid_input("isometry output label '" + l +
                          "' collides with an untouched register");
    out_layout = out_layout.concat(RegisterLayout({{l, layout.dim_of(l)}}));
  }
  return apply(moved, out_layout);
}
}  // namespace

StateVector apply_isometry(const IsometryMap& v, const StateVector& psi) {
  return apply_isometry_impl(
      v, psi, [&](const StateVector& moved, const RegisterLayout& out_layout) {
        const long long din = v.input().dim();
        const long long rest = moved.dim() / din;
        Eigen::Map<const Mat> x(moved.vector().data(), rest, din);
        Mat y = x * v.matrix().transpose();  // (rest, dout)
        Vec out(y.size());
        const long long dout = v.output().dim();
        for (long long a = 0; a < dout; ++a)
          for (long long r = 0; r < rest; ++r) out(a * rest + r) = y(r, a);
        return StateVector(out, out_layout);
      });
}

DensityOperator apply_isometry(const IsometryMap& v, const DensityOperator& rho) {
  return apply_isometry_impl(
      v, rho, [&](const DensityOperator& moved, const RegisterLayout& out_layout) {
        const long long din = v.input().dim();
        const long long dout = v.output().dim();
        const long long rest = moved.dim() / din;
        Mat big = kron(v.matrix(), Mat::Identity(rest, rest));
        Mat out = big * moved.matrix() * big.adjoint();
        (void)dout;
        return DensityOperator(out, out_layout);
      });
}

StateVector random_state(const RegisterLayout& layout, std::uint64_t seed) {
  Rng rng(seed);
  return StateVector(haar_vector(static_cast<int>(layout.dim()), rng), layout);
}

IsometryMap random_unitary(const RegisterLayout& layout, std::uint64_t seed) {
  Rng rng(seed);
  Mat u = haar_unitary(static_cast<int>(layout.dim()), rng);
  return IsometryMap(u, layout, layout);
}

}  // namespace qsr
