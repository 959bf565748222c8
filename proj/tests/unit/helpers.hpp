#pragma once

#include <random>

#include "phl/hilbert.hpp"
#include "phl/model.hpp"

namespace testing {

inline phl::Matrix random_matrix(Eigen::Index n, std::mt19937& rng) {
  std::normal_distribution<double> g;
  phl::Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = {g(rng), g(rng)};
  return m;
}

inline phl::Matrix random_hermitian(Eigen::Index n, std::mt19937& rng) {
  const phl::Matrix m = random_matrix(n, rng);
  return 0.5 * (m + m.adjoint());
}

/// Random full-rank density matrix.
inline phl::DensityMatrix random_state(const phl::SpaceLayout& layout, std::mt19937& rng) {
  const auto n = static_cast<Eigen::Index>(layout.total_dim());
  const phl::Matrix a = random_matrix(n, rng);
  phl::Matrix rho = a * a.adjoint();
  rho /= rho.trace().real();
  return {layout, rho};
}

inline double max_abs(const phl::Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// Caption values of the minimal Case I setup.
inline phl::ChainConfig fig2_chain(int n_max = 10) {
  phl::ChainConfig c;
  c.sites = {{2.0, 5.0, 0.4, n_max}, {2.0, 0.0, 0.0, n_max}};
  c.bonds = {{0.08, 9.0}};
  c.gamma_spin = 0.02;
  c.gamma_mech = 8e-4;
  c.nbar_spin = 0.01;
  c.nbar_mech = 0.1;
  return c;
}

inline phl::ChainConfig figs1_chain(int n_max = 6) {
  phl::ChainConfig c;
  c.sites = {{2.0, 8.0, 0.4, n_max}, {2.0, 0.0, 0.0, n_max}};
  c.bonds = {{0.1, 4.0}};
  c.gamma_spin = 8e-3;
  c.gamma_mech = 1e-3;
  c.nbar_spin = 0.01;
  c.nbar_mech = 0.1;
  return c;
}

}  // namespace testing
