#include "phl/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

namespace phl {

namespace {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

void require_same_layout(const SpaceLayout& a, const SpaceLayout& b, const char* what) {
  if (!(a == b)) throw DimensionError(std::string(what) + ": layout mismatch");
}

}  // namespace

SpaceLayout::SpaceLayout(std::initializer_list<Subsystem> subsystems)
    : SpaceLayout(std::vector<Subsystem>(subsystems)) {}

SpaceLayout::SpaceLayout(std::vector<Subsystem> subsystems) : subsystems_(std::move(subsystems)) {
  for (const auto& s : subsystems_) {
    if (s.kind == SubsystemKind::Spin && s.dim != 2)
      throw DimensionError("spin subsystems must have dimension 2");
    if (s.kind == SubsystemKind::Oscillator && s.dim < 2)
      throw DimensionError("oscillator subsystems need at least two Fock levels");
  }
  strides_.assign(subsystems_.size(), 1);
  total_dim_ = 1;
  for (std::size_t k = subsystems_.size(); k-- > 0;) {
    strides_[k] = total_dim_;
    total_dim_ *= subsystems_[k].dim;
  }
}

Operator::Operator(SpaceLayout l, Matrix m) : layout(std::move(l)), matrix(std::move(m)) {
  const auto d = static_cast<Eigen::Index>(layout.total_dim());
  if (matrix.rows() != d || matrix.cols() != d)
    throw DimensionError("operator matrix side " + std::to_string(matrix.rows()) +
                         " does not match layout dimension " + std::to_string(d));
}

Operator Operator::identity(const SpaceLayout& layout) {
  const auto d = static_cast<Eigen::Index>(layout.total_dim());
  return {layout, Matrix::Identity(d, d)};
}

Operator Operator::zero(const SpaceLayout& layout) {
  const auto d = static_cast<Eigen::Index>(layout.total_dim());
  return {layout, Matrix::Zero(d, d)};
}

double Operator::hermiticity_error() const {
  return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
}

Operator operator+(const Operator& a, const Operator& b) {
  require_same_layout(a.layout, b.layout, "operator sum");
  return {a.layout, a.matrix + b.matrix};
}

Operator operator-(const Operator& a, const Operator& b) {
  require_same_layout(a.layout, b.layout, "operator difference");
  return {a.layout, a.matrix - b.matrix};
}

Operator operator*(const Operator& a, const Operator& b) {
  require_same_layout(a.layout, b.layout, "operator product");
  return {a.layout, a.matrix * b.matrix};
}

Operator operator*(cplx s, const Operator& a) { return {a.layout, s * a.matrix}; }

DensityMatrix::DensityMatrix(SpaceLayout l, Matrix m) : layout(std::move(l)), matrix(std::move(m)) {
  const auto d = static_cast<Eigen::Index>(layout.total_dim());
  if (matrix.rows() != d || matrix.cols() != d)
    throw DimensionError("density matrix side does not match layout dimension");
}

double DensityMatrix::hermiticity_error() const {
  return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const {
  const Matrix h = 0.5 * (matrix + matrix.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

void DensityMatrix::validate() const {
  if (hermiticity_error() > 1e-10) throw DimensionError("density matrix is not Hermitian");
  if (std::abs(trace() - 1.0) > 1e-8) throw DimensionError("density matrix trace differs from 1");
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  std::vector<Subsystem> subs = a.layout.subsystems();
  subs.insert(subs.end(), b.layout.subsystems().begin(), b.layout.subsystems().end());
  return {SpaceLayout(std::move(subs)), kron(a.matrix, b.matrix)};
}

Operator embed(const Matrix& local_op, std::size_t site_index, const SpaceLayout& layout) {
  if (site_index >= layout.size())
    throw DimensionError("site index " + std::to_string(site_index) + " out of range");
  const auto d = static_cast<Eigen::Index>(layout[site_index].dim);
  if (local_op.rows() != d || local_op.cols() != d)
    throw DimensionError("local operator side " + std::to_string(local_op.rows()) +
                         " does not match subsystem dimension " + std::to_string(d));
  const auto before = static_cast<Eigen::Index>(layout.total_dim() / (layout.stride(site_index) * d));
  const auto after = static_cast<Eigen::Index>(layout.stride(site_index));
  Matrix m = kron(kron(Matrix::Identity(before, before), local_op), Matrix::Identity(after, after));
  return {layout, std::move(m)};
}

Matrix annihilation(int n_max) {
  if (n_max < 1) throw DimensionError("annihilation operator needs n_max >= 1");
  Matrix b = Matrix::Zero(n_max + 1, n_max + 1);
  for (int n = 1; n <= n_max; ++n) b(n - 1, n) = std::sqrt(static_cast<double>(n));
  return b;
}

const SpinOps& spin_ops() {
  static const SpinOps ops = [] {
    const cplx i(0.0, 1.0);
    SpinOps s;
    s.x = Matrix::Zero(2, 2);
    s.y = Matrix::Zero(2, 2);
    s.z = Matrix::Zero(2, 2);
    s.plus = Matrix::Zero(2, 2);
    s.minus = Matrix::Zero(2, 2);
    s.x(0, 1) = s.x(1, 0) = 1.0;
    s.y(0, 1) = -i;
    s.y(1, 0) = i;
    s.z(0, 0) = 1.0;
    s.z(1, 1) = -1.0;
    s.plus(0, 1) = 1.0;
    s.minus(1, 0) = 1.0;
    return s;
  }();
  return ops;
}

DensityMatrix thermal_state(double n_bar, int n_max) {
  if (n_bar < 0.0) throw DimensionError("thermal occupation must be nonnegative");
  if (n_max < 1) throw DimensionError("thermal state needs n_max >= 1");
  Matrix rho = Matrix::Zero(n_max + 1, n_max + 1);
  const double ratio = n_bar / (1.0 + n_bar);
  double p = 1.0;
  double total = 0.0;
  for (int n = 0; n <= n_max; ++n) {
    rho(n, n) = p;
    total += p;
    p *= ratio;
  }
  rho /= total;
  return {SpaceLayout{oscillator(static_cast<std::size_t>(n_max))}, std::move(rho)};
}

DensityMatrix fock_state(int n, int n_max) {
  if (n < 0 || n > n_max) throw DimensionError("Fock level outside truncated space");
  Matrix rho = Matrix::Zero(n_max + 1, n_max + 1);
  rho(n, n) = 1.0;
  return {SpaceLayout{oscillator(static_cast<std::size_t>(n_max))}, std::move(rho)};
}

DensityMatrix coherent_state(cplx alpha, int n_max) {
  if (n_max < 1) throw DimensionError("coherent state needs n_max >= 1");
  Eigen::VectorXcd psi(n_max + 1);
  psi(0) = 1.0;
  for (int n = 1; n <= n_max; ++n) psi(n) = psi(n - 1) * alpha / std::sqrt(static_cast<double>(n));
  psi.normalize();
  return {SpaceLayout{oscillator(static_cast<std::size_t>(n_max))}, psi * psi.adjoint()};
}

DensityMatrix spin_down() {
  Matrix rho = Matrix::Zero(2, 2);
  rho(1, 1) = 1.0;
  return {SpaceLayout{spin()}, std::move(rho)};
}

DensityMatrix spin_up() {
  Matrix rho = Matrix::Zero(2, 2);
  rho(0, 0) = 1.0;
  return {SpaceLayout{spin()}, std::move(rho)};
}

cplx expectation(const Operator& op, const DensityMatrix& rho) {
  require_same_layout(op.layout, rho.layout, "expectation");
  return op.matrix.cwiseProduct(rho.matrix.transpose()).sum();
}

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::size_t>& keep) {
  const SpaceLayout& layout = rho.layout;
  if (keep.empty()) throw DimensionError("partial trace needs at least one kept subsystem");
  std::vector<std::size_t> sorted = keep;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw DimensionError("partial trace: duplicate subsystem index");
  if (sorted.back() >= layout.size()) throw DimensionError("partial trace: subsystem index out of range");

  std::vector<Subsystem> kept_subs;
  std::vector<std::size_t> traced;
  for (std::size_t k = 0; k < layout.size(); ++k) {
    if (std::binary_search(sorted.begin(), sorted.end(), k))
      kept_subs.push_back(layout[k]);
    else
      traced.push_back(k);
  }
  SpaceLayout reduced_layout(kept_subs);
  const std::size_t dk = reduced_layout.total_dim();
  const std::size_t dt = layout.total_dim() / dk;

  // Global index = kept part + traced part, both assembled from per-subsystem strides.
  std::vector<std::size_t> kept_offset(dk, 0), traced_offset(dt, 0);
  for (std::size_t r = 0; r < dk; ++r) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i)
      off += reduced_layout.local_index(r, i) * layout.stride(sorted[i]);
    kept_offset[r] = off;
  }
  std::vector<std::size_t> traced_strides;
  std::size_t acc = 1;
  std::vector<std::size_t> tdims;
  for (auto k : traced) tdims.push_back(layout[k].dim);
  traced_strides.assign(traced.size(), 1);
  for (std::size_t i = traced.size(); i-- > 0;) {
    traced_strides[i] = acc;
    acc *= tdims[i];
  }
  for (std::size_t r = 0; r < dt; ++r) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < traced.size(); ++i)
      off += ((r / traced_strides[i]) % tdims[i]) * layout.stride(traced[i]);
    traced_offset[r] = off;
  }

  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));
  for (std::size_t c = 0; c < dk; ++c)
    for (std::size_t r = 0; r < dk; ++r) {
      cplx s = 0.0;
      for (std::size_t t = 0; t < dt; ++t)
        s += rho.matrix(static_cast<Eigen::Index>(kept_offset[r] + traced_offset[t]),
                        static_cast<Eigen::Index>(kept_offset[c] + traced_offset[t]));
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = s;
    }
  return {std::move(reduced_layout), std::move(out)};
}

TruncationReport check_truncation(const DensityMatrix& rho, double threshold) {
  TruncationReport report;
  const SpaceLayout& layout = rho.layout;
  for (std::size_t k = 0; k < layout.size(); ++k) {
    if (layout[k].kind != SubsystemKind::Oscillator) continue;
    const std::size_t top = layout[k].dim - 1;
    double pop = 0.0;
    for (std::size_t a = 0; a < layout.total_dim(); ++a) {
      const std::size_t level = layout.local_index(a, k);
      if (level + 1 >= top) pop += rho.matrix(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)).real();
    }
    report.top_population.push_back(pop);
    if (pop >= threshold) report.safe = false;
  }
  return report;
}

}  // namespace phl
