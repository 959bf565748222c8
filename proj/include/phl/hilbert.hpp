#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace phl {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class SubsystemKind { Spin, Oscillator };

struct Subsystem {
  SubsystemKind kind = SubsystemKind::Spin;
  std::size_t dim = 2;

  bool operator==(const Subsystem&) const = default;
};

inline Subsystem spin() { return {SubsystemKind::Spin, 2}; }
inline Subsystem oscillator(std::size_t n_max) { return {SubsystemKind::Oscillator, n_max + 1}; }

/// Tensor-product bookkeeping. Subsystems appear in declaration order and the
/// basis index varies fastest for the last subsystem.
class SpaceLayout {
 public:
  SpaceLayout() = default;
  SpaceLayout(std::initializer_list<Subsystem> subsystems);
  explicit SpaceLayout(std::vector<Subsystem> subsystems);

  const std::vector<Subsystem>& subsystems() const { return subsystems_; }
  const Subsystem& operator[](std::size_t k) const { return subsystems_.at(k); }
  std::size_t size() const { return subsystems_.size(); }
  std::size_t total_dim() const { return total_dim_; }
  std::size_t stride(std::size_t k) const { return strides_.at(k); }

  /// Level of subsystem k encoded in a global basis index.
  std::size_t local_index(std::size_t global, std::size_t k) const {
    return (global / strides_[k]) % subsystems_[k].dim;
  }

  bool operator==(const SpaceLayout& other) const { return subsystems_ == other.subsystems_; }

 private:
  std::vector<Subsystem> subsystems_;
  std::vector<std::size_t> strides_;
  std::size_t total_dim_ = 1;
};

struct Operator {
  SpaceLayout layout;
  Matrix matrix;

  Operator() = default;
  Operator(SpaceLayout l, Matrix m);

  static Operator identity(const SpaceLayout& layout);
  static Operator zero(const SpaceLayout& layout);

  Operator adjoint() const { return {layout, matrix.adjoint()}; }
  double hermiticity_error() const;
};

Operator operator+(const Operator& a, const Operator& b);
Operator operator-(const Operator& a, const Operator& b);
Operator operator*(const Operator& a, const Operator& b);
Operator operator*(cplx s, const Operator& a);

struct DensityMatrix {
  SpaceLayout layout;
  Matrix matrix;

  DensityMatrix() = default;
  DensityMatrix(SpaceLayout l, Matrix m);

  cplx trace() const { return matrix.trace(); }
  double hermiticity_error() const;
  double min_eigenvalue() const;

  /// Throws DimensionError unless Hermitian to 1e-10 and trace is 1 to 1e-8.
  void validate() const;
};

/// Tensor product of density matrices, in argument order.
DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);

/// identity ⊗ … ⊗ local_op ⊗ … ⊗ identity.
Operator embed(const Matrix& local_op, std::size_t site_index, const SpaceLayout& layout);

/// Truncated ladder operator with ⟨n−1|b|n⟩ = √n.
Matrix annihilation(int n_max);

struct SpinOps {
  Matrix x, y, z, plus, minus;
};

/// Basis {|↑⟩, |↓⟩}: σz = diag(+1, −1), σ+ = |↑⟩⟨↓|.
const SpinOps& spin_ops();

DensityMatrix thermal_state(double n_bar, int n_max);
DensityMatrix fock_state(int n, int n_max);
/// Coherent state projected onto the truncated basis and renormalised.
DensityMatrix coherent_state(cplx alpha, int n_max);
DensityMatrix spin_down();
DensityMatrix spin_up();

cplx expectation(const Operator& op, const DensityMatrix& rho);

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::size_t>& keep);

struct TruncationReport {
  bool safe = true;
  /// Combined population of the top two Fock levels, one entry per oscillator subsystem.
  std::vector<double> top_population;
};

inline constexpr double kTruncationThreshold = 1e-4;

TruncationReport check_truncation(const DensityMatrix& rho, double threshold = kTruncationThreshold);

}  // namespace phl
