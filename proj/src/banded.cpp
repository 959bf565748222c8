#include "phl/banded.hpp"

#include <map>

namespace phl {

BandedOperator BandedOperator::from_dense(const Matrix& m, const SpaceLayout& layout, double drop_below) {
  const Eigen::Index d = m.rows();
  if (m.cols() != d || d != static_cast<Eigen::Index>(layout.total_dim()))
    throw DimensionError("banded form: matrix does not match layout");
  std::map<Eigen::Index, std::pair<Eigen::Index, Eigen::Index>> ranges;  // offset -> [first, last]
  for (Eigen::Index c = 0; c < d; ++c)
    for (Eigen::Index r = 0; r < d; ++r) {
      if (std::abs(m(r, c)) <= drop_below) continue;
      auto [it, inserted] = ranges.try_emplace(c - r, r, r);
      if (!inserted) {
        it->second.first = std::min(it->second.first, r);
        it->second.second = std::max(it->second.second, r);
      }
    }
  BandedOperator out;
  out.dim = d;
  for (const auto& [offset, range] : ranges) {
    Band b;
    b.offset = offset;
    b.first = range.first;
    b.values.resize(range.second - range.first + 1);
    for (Eigen::Index k = 0; k < b.values.size(); ++k) {
      const cplx v = m(b.first + k, b.first + k + offset);
      b.values(k) = std::abs(v) > drop_below ? v : cplx(0.0);
    }
    const auto row = static_cast<std::size_t>(b.first);
    const auto col = static_cast<std::size_t>(b.first + offset);
    b.level_change.resize(layout.size());
    for (std::size_t k = 0; k < layout.size(); ++k) {
      const double lr = layout[k].kind == SubsystemKind::Spin ? (layout.local_index(row, k) == 0 ? 1.0 : -1.0)
                                                                : static_cast<double>(layout.local_index(row, k));
      const double lc = layout[k].kind == SubsystemKind::Spin ? (layout.local_index(col, k) == 0 ? 1.0 : -1.0)
                                                                : static_cast<double>(layout.local_index(col, k));
      b.level_change[k] = lr - lc;
    }
    out.bands.push_back(std::move(b));
  }
  return out;
}

Matrix BandedOperator::to_dense() const {
  Matrix m = Matrix::Zero(dim, dim);
  for (const auto& b : bands)
    for (Eigen::Index k = 0; k < b.len(); ++k) m(b.first + k, b.first + k + b.offset) += b.values(k);
  return m;
}

const Band* BandedOperator::find(Eigen::Index offset) const {
  for (const auto& b : bands)
    if (b.offset == offset) return &b;
  return nullptr;
}

}  // namespace phl
