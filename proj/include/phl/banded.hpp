#pragma once

#include <vector>

#include "phl/hilbert.hpp"

namespace phl {

/// One diagonal of a matrix: A[a, a + offset] = values[a - first] for a in [first, first + len).
/// Because subsystem level differences are bounded by the subsystem dimension, every
/// offset corresponds to exactly one change of subsystem levels.
struct Band {
  Eigen::Index offset = 0;
  Eigen::Index first = 0;
  Eigen::VectorXcd values;
  /// level_k(row) - level_k(col) for each subsystem.
  std::vector<double> level_change;

  Eigen::Index len() const { return values.size(); }
};

/// Diagonal-storage form of an operator, trimmed to the nonzero range of each diagonal.
struct BandedOperator {
  Eigen::Index dim = 0;
  std::vector<Band> bands;

  static BandedOperator from_dense(const Matrix& m, const SpaceLayout& layout, double drop_below = 0.0);
  Matrix to_dense() const;
  const Band* find(Eigen::Index offset) const;
};

// Kernels run column by column so the inner loop is a contiguous, vectorisable segment.

/// out.middleRows(first) += diag(v) * x.middleRows(first + offset), i.e. A x for one band.
inline void band_left(Eigen::Index offset, Eigen::Index first, const Eigen::VectorXcd& v, const Matrix& x, Matrix& out) {
  const Eigen::Index n = v.size();
  for (Eigen::Index c = 0; c < x.cols(); ++c)
    out.col(c).segment(first, n).array() += v.array() * x.col(c).segment(first + offset, n).array();
}

/// out.middleCols(first) += x.middleCols(first + offset) * diag(conj(v)), i.e. x A^dag for one band.
inline void band_right_adjoint(Eigen::Index offset, Eigen::Index first, const Eigen::VectorXcd& v, const Matrix& x,
                               Matrix& out) {
  const Eigen::Index n = v.size();
  for (Eigen::Index k = 0; k < n; ++k) out.col(first + k) += std::conj(v(k)) * x.col(first + offset + k);
}

/// out += rate * A x B^dag restricted to one band of A and one band of B.
inline void band_sandwich(const Band& a, const Band& b, double rate, const Matrix& x, Matrix& out) {
  const Eigen::Index n = a.len();
  for (Eigen::Index k = 0; k < b.len(); ++k) {
    const cplx w = rate * std::conj(b.values(k));
    if (w == cplx(0.0)) continue;
    out.col(b.first + k).segment(a.first, n).array() +=
        w * a.values.array() * x.col(b.first + b.offset + k).segment(a.first + a.offset, n).array();
  }
}

}  // namespace phl
