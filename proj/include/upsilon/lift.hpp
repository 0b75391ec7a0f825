#pragma once

// The lifted calculus on configuration space: independent-particle generator
// L^Y, product heat kernel rows, lifted semigroup, exponential calculus, and
// the two square fields (exact sectional form vs cylinder chain-rule form).
//
// Exact identities are always checked through two independent code paths:
// kernel convolution vs matrix exponential, star-then-heat vs heat-then-star.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "upsilon/base_calculus.hpp"
#include "upsilon/config_space.hpp"
#include "upsilon/cylinder.hpp"
#include "upsilon/measures.hpp"
#include "upsilon/report.hpp"

namespace upsilon {

// (L^Y u)(gamma) = sum_x gamma_x sum_y Q[x,y] (u(gamma - d_x + d_y) - u(gamma));
// sector-preserving by construction.
inline ConfigFunction lifted_generator_apply(const ConfigSpace& cs, const ConfigFunction& u) {
  if (u.size() != cs.size()) throw std::invalid_argument("config function dimension mismatch");
  const auto& q = cs.base().Q;
  const int n = cs.base().size();
  ConfigFunction out = ConfigFunction::Zero(cs.size());
  for (int i = 0; i < cs.size(); ++i) {
    const auto& occ = cs.config(i).occupation;
    double acc = 0.0;
    for (int x = 0; x < n; ++x) {
      if (occ[x] == 0) continue;
      for (int y = 0; y < n; ++y) {
        if (y == x || q(x, y) == 0.0) continue;
        acc += occ[x] * q(x, y) * (u(cs.index_after_move(i, x, y)) - u(i));
      }
    }
    out(i) = acc;
  }
  return out;
}

// dense block of L^Y on one particle-count sector
inline Eigen::MatrixXd lifted_generator_sector_matrix(const ConfigSpace& cs, int sector) {
  const int b = cs.sector_begin(sector);
  const int sz = cs.sector_size(sector);
  const auto& q = cs.base().Q;
  const int n = cs.base().size();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(sz, sz);
  for (int i = 0; i < sz; ++i) {
    const auto& occ = cs.config(b + i).occupation;
    for (int x = 0; x < n; ++x) {
      if (occ[x] == 0) continue;
      for (int y = 0; y < n; ++y) {
        if (y == x || q(x, y) == 0.0) continue;
        const double rate = occ[x] * q(x, y);
        l(i, cs.index_after_move(b + i, x, y) - b) += rate;
        l(i, i) -= rate;
      }
    }
  }
  return l;
}

namespace detail {

// push a measure through one particle jumping from x with kernel row h_t(x, .)
inline void convolve_particle(const ConfigSpace& cs, std::vector<double>& nu,
                              std::vector<int>& support, int x, const Eigen::MatrixXd& ht) {
  const int n = cs.base().size();
  std::vector<double> next(nu.size(), 0.0);
  std::vector<int> next_support;
  for (int idx : support) {
    const double w = nu[idx];
    if (w == 0.0) continue;
    for (int y = 0; y < n; ++y) {
      const double p = ht(x, y);
      if (p == 0.0) continue;
      const int j = cs.index_after_insert(idx, y);
      if (j < 0) throw std::logic_error("kernel convolution left the enumerated range");
      if (next[j] == 0.0) next_support.push_back(j);
      next[j] += w * p;
    }
  }
  nu.swap(next);
  support.swap(next_support);
}

}  // namespace detail

// h^Y_t(gamma, .) by sequential single-particle convolution; a probability
// measure concentrated on the sector of gamma (zero tail).
inline ConfigMeasure kernel_config_row_with(const ConfigSpace& cs, int config_index,
                                            const Eigen::MatrixXd& ht) {
  const auto& occ = cs.config(config_index).occupation;
  std::vector<double> nu(cs.size(), 0.0);
  std::vector<int> support{cs.index_of(Configuration::empty(cs.base().size()).occupation)};
  nu[support[0]] = 1.0;
  for (std::size_t x = 0; x < occ.size(); ++x)
    for (int k = 0; k < occ[x]; ++k)
      detail::convolve_particle(cs, nu, support, static_cast<int>(x), ht);
  ConfigMeasure row;
  row.kind = MeasureKind::kernel_row;
  row.tail = 0.0;
  row.weights = Eigen::Map<const Eigen::VectorXd>(nu.data(), cs.size());
  return row;
}

inline ConfigMeasure kernel_config_row(const ConfigSpace& cs, int config_index, double t) {
  if (cs.config(config_index).total > cs.n_max())
    throw std::invalid_argument("configuration exceeds the particle cap");
  return kernel_config_row_with(cs, config_index, semigroup_matrix(cs.base(), t));
}

// (T^Y_t u)(gamma) = sum_eta h^Y_t(gamma, eta) u(eta), kernel route
inline ConfigFunction lifted_semigroup_apply(const ConfigSpace& cs, const ConfigFunction& u,
                                             double t) {
  if (t < 0.0) throw std::invalid_argument("semigroup time must be >= 0");
  if (u.size() != cs.size()) throw std::invalid_argument("config function dimension mismatch");
  const Eigen::MatrixXd ht = semigroup_matrix(cs.base(), t);
  ConfigFunction out(cs.size());
  for (int i = 0; i < cs.size(); ++i)
    out(i) = kernel_config_row_with(cs, i, ht).weights.dot(u);
  return out;
}

// exp(t L^Y) restricted to one sector, the independent matrix-exponential route
inline Eigen::MatrixXd lifted_semigroup_sector_matrix(const ConfigSpace& cs, int sector,
                                                      double t) {
  return expm(t * lifted_generator_sector_matrix(cs, sector));
}

// permanent by expansion over the first row (cross-check for small sectors)
inline double permanent(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  if (n > 12) throw std::invalid_argument("permanent limited to n <= 12");
  if (n == 0) return 1.0;
  std::vector<char> used(n, 0);
  const auto rec = [&](auto&& self, int row) -> double {
    if (row == n) return 1.0;
    double acc = 0.0;
    for (int col = 0; col < n; ++col) {
      if (used[col] || a(row, col) == 0.0) continue;
      used[col] = 1;
      acc += a(row, col) * self(self, row + 1);
      used[col] = 0;
    }
    return acc;
  };
  return rec(rec, 0);
}

// h^Y_t(gamma, {eta}) = perm(H) / prod_y eta_y!, H[i][j] = h_t(x_i, y_j)
inline double kernel_entry_by_permanent(const ConfigSpace& cs, int from, int to,
                                        const Eigen::MatrixXd& ht) {
  const auto& a = cs.config(from);
  const auto& b = cs.config(to);
  if (a.total != b.total) return 0.0;
  const int n = a.total;
  Eigen::MatrixXd h(n, n);
  int i = 0;
  for (std::size_t x = 0; x < a.occupation.size(); ++x)
    for (int k = 0; k < a.occupation[x]; ++k) {
      int j = 0;
      for (std::size_t y = 0; y < b.occupation.size(); ++y)
        for (int l = 0; l < b.occupation[y]; ++l)
          h(i, j++) = ht(static_cast<int>(x), static_cast<int>(y));
      ++i;
    }
  double mult = 1.0;
  for (int c : b.occupation)
    for (int k = 2; k <= c; ++k) mult *= k;
  return permanent(h) / mult;
}

// --- exact-tier identity checks -------------------------------------------

// kernel rows vs rows of exp(t L^Y), plus row mass 1 and sector invariance
inline DefectReport check_kernel_matrix_identification(const ConfigSpace& cs,
                                                       const std::vector<double>& t_grid,
                                                       double tolerance = 1e-10,
                                                       const std::string& fixture = {}) {
  double worst = 0.0;
  std::string witness;
  for (double t : t_grid) {
    const Eigen::MatrixXd ht = semigroup_matrix(cs.base(), t);
    for (int k = 0; k <= cs.n_max(); ++k) {
      const Eigen::MatrixXd block = lifted_semigroup_sector_matrix(cs, k, t);
      const int b = cs.sector_begin(k);
      for (int i = 0; i < cs.sector_size(k); ++i) {
        const ConfigMeasure row = kernel_config_row_with(cs, b + i, ht);
        for (int j = 0; j < cs.size(); ++j) {
          const double mat = (j >= b && j < cs.sector_end(k)) ? block(i, j - b) : 0.0;
          const double diff = std::abs(row.weights(j) - mat);
          if (diff > worst) {
            worst = diff;
            witness = "t=" + std::to_string(t) + " gamma=" + cs.config(b + i).label() +
                      " eta=" + cs.config(j).label();
          }
        }
      }
    }
  }
  return DefectReport::exact("identity.kernel_vs_expm", fixture, worst, tolerance, 0.0, witness);
}

inline DefectReport check_kernel_row_mass(const ConfigSpace& cs,
                                          const std::vector<double>& t_grid,
                                          double tolerance = 1e-12,
                                          const std::string& fixture = {}) {
  double worst = 0.0;
  std::string witness;
  for (double t : t_grid) {
    const Eigen::MatrixXd ht = semigroup_matrix(cs.base(), t);
    for (int i = 0; i < cs.size(); ++i) {
      const ConfigMeasure row = kernel_config_row_with(cs, i, ht);
      const int k = cs.config(i).total;
      double inside = 0.0, outside = 0.0;
      for (int j = 0; j < cs.size(); ++j) {
        if (j >= cs.sector_begin(k) && j < cs.sector_end(k))
          inside += row.weights(j);
        else
          outside = std::max(outside, std::abs(row.weights(j)));
      }
      const double defect = std::max(std::abs(inside - 1.0), outside);
      if (defect > worst) {
        worst = defect;
        witness = "t=" + std::to_string(t) + " gamma=" + cs.config(i).label();
      }
    }
  }
  return DefectReport::exact("identity.kernel_row_mass", fixture, worst, tolerance, 0.0, witness);
}

// T^Y_t exp(log(1+f)*) = exp(log(1+T_t f)*): the flagship exact check.
// LHS by kernel convolution, RHS through the base semigroup only.
inline DefectReport check_semigroup_representation(const ConfigSpace& cs, const ExpCylinder& e,
                                                   const std::vector<double>& t_grid,
                                                   double tolerance = 1e-10,
                                                   const std::string& fixture = {}) {
  e.validate();
  const ConfigFunction u = tabulate(cs, e);
  double worst = 0.0;
  std::string witness;
  for (double t : t_grid) {
    const Eigen::MatrixXd ht = semigroup_matrix(cs.base(), t);
    ExpCylinder pushed{ht * e.f};
    const ConfigFunction rhs = tabulate(cs, pushed);
    for (int i = 0; i < cs.size(); ++i) {
      const double lhs = kernel_config_row_with(cs, i, ht).weights.dot(u);
      const double diff = std::abs(lhs - rhs(i));
      if (diff > worst) {
        worst = diff;
        witness = "t=" + std::to_string(t) + " gamma=" + cs.config(i).label();
      }
    }
  }
  return DefectReport::exact("identity.semigroup_representation", fixture, worst, tolerance,
                             0.0, witness);
}

// L^Y exp(log(1+f)*) = (Lf/(1+f))* exp(log(1+f)*)
inline DefectReport check_exp_generator_formula(const ConfigSpace& cs, const ExpCylinder& e,
                                                double tolerance = 1e-11,
                                                const std::string& fixture = {}) {
  e.validate();
  const ConfigFunction u = tabulate(cs, e);
  const ConfigFunction lhs = lifted_generator_apply(cs, u);
  const BaseFunction ratio =
      (cs.base().Q * e.f).cwiseQuotient((1.0 + e.f.array()).matrix());
  double worst = 0.0;
  std::string witness;
  for (int i = 0; i < cs.size(); ++i) {
    const double rhs = star(ratio, cs.config(i)) * u(i);
    const double diff = std::abs(lhs(i) - rhs);
    if (diff > worst) {
      worst = diff;
      witness = "gamma=" + cs.config(i).label();
    }
  }
  return DefectReport::exact("identity.exp_generator", fixture, worst, tolerance, 0.0, witness);
}

// T^Y_t (f*) = (T_t f)*: star-then-heat vs heat-then-star
inline DefectReport check_intertwining(const ConfigSpace& cs,
                                       const std::vector<BaseFunction>& f_samples,
                                       const std::vector<double>& t_grid,
                                       double tolerance = 1e-10,
                                       const std::string& fixture = {}) {
  double worst = 0.0;
  std::string witness;
  for (double t : t_grid) {
    const Eigen::MatrixXd ht = semigroup_matrix(cs.base(), t);
    for (std::size_t fi = 0; fi < f_samples.size(); ++fi) {
      const ConfigFunction u = star_table(cs, f_samples[fi]);
      const ConfigFunction rhs = star_table(cs, ht * f_samples[fi]);
      for (int i = 0; i < cs.size(); ++i) {
        const double lhs = kernel_config_row_with(cs, i, ht).weights.dot(u);
        const double diff = std::abs(lhs - rhs(i));
        if (diff > worst) {
          worst = diff;
          witness = "f=" + std::to_string(fi) + " t=" + std::to_string(t) +
                    " gamma=" + cs.config(i).label();
        }
      }
    }
  }
  return DefectReport::exact("identity.intertwining_star", fixture, worst, tolerance, 0.0,
                             witness);
}

// --- square fields ----------------------------------------------------------

// exact sectional square field:
// Gamma_sec(u, v)(gamma) = sum_x gamma_x Gamma_base(u(gamma - d_x + d_.), v(...))(x);
// the true carre du champ of L^Y for any rate matrix.
inline ConfigFunction gamma_section(const ConfigSpace& cs, const ConfigFunction& u,
                                    const ConfigFunction& v) {
  if (u.size() != cs.size() || v.size() != cs.size())
    throw std::invalid_argument("config function dimension mismatch");
  const auto& q = cs.base().Q;
  const int n = cs.base().size();
  ConfigFunction out = ConfigFunction::Zero(cs.size());
  for (int i = 0; i < cs.size(); ++i) {
    const auto& occ = cs.config(i).occupation;
    double acc = 0.0;
    for (int x = 0; x < n; ++x) {
      if (occ[x] == 0) continue;
      double local = 0.0;
      for (int y = 0; y < n; ++y) {
        if (y == x || q(x, y) == 0.0) continue;
        const int j = cs.index_after_move(i, x, y);
        local += q(x, y) * (u(j) - u(i)) * (v(j) - v(i));
      }
      acc += occ[x] * 0.5 * local;
    }
    out(i) = acc;
  }
  return out;
}

inline ConfigFunction gamma_section(const ConfigSpace& cs, const ConfigFunction& u) {
  return gamma_section(cs, u, u);
}

// chain-rule square field on cylinder functions (exact only on diffusions):
// sum_{i,j} d_i F(f* gamma) d_j G(g* gamma) Gamma(f_i, g_j)* gamma
inline ConfigFunction gamma_cylinder(const ConfigSpace& cs, const CylinderFunction& cu,
                                     const CylinderFunction& cv) {
  cu.validate(cs.base().size());
  cv.validate(cs.base().size());
  const int k = static_cast<int>(cu.inner.size());
  const int m = static_cast<int>(cv.inner.size());
  std::vector<ConfigFunction> gamma_star(k * m);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < m; ++j)
      gamma_star[i * m + j] =
          star_table(cs, square_field(cs.base(), cu.inner[i], cv.inner[j]));
  ConfigFunction out(cs.size());
  for (int c = 0; c < cs.size(); ++c) {
    const auto eu = cu.outer.eval(cu.star_values(cs.config(c)));
    const auto ev = cv.outer.eval(cv.star_values(cs.config(c)));
    double acc = 0.0;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < m; ++j) acc += eu.grad(i) * ev.grad(j) * gamma_star[i * m + j](c);
    out(c) = acc;
  }
  return out;
}

// chain-rule form of the generator on a cylinder function:
// gamma -> sum_x gamma_x [ sum_j d_j G (L g_j)(x) + sum_pq d^2_pq G Gamma(g_p,g_q)(x) ]
inline ConfigFunction cylinder_generator_formula(const ConfigSpace& cs,
                                                 const CylinderFunction& cv) {
  cv.validate(cs.base().size());
  const int m = static_cast<int>(cv.inner.size());
  std::vector<ConfigFunction> lg_star(m);
  for (int j = 0; j < m; ++j) lg_star[j] = star_table(cs, cs.base().Q * cv.inner[j]);
  std::vector<ConfigFunction> gamma_star(m * m);
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < m; ++q)
      gamma_star[p * m + q] =
          star_table(cs, square_field(cs.base(), cv.inner[p], cv.inner[q]));
  ConfigFunction out(cs.size());
  for (int c = 0; c < cs.size(); ++c) {
    const auto e = cv.outer.eval(cv.star_values(cs.config(c)));
    double acc = 0.0;
    for (int j = 0; j < m; ++j) acc += e.grad(j) * lg_star[j](c);
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < m; ++q) acc += e.hess(p, q) * gamma_star[p * m + q](c);
    out(c) = acc;
  }
  return out;
}

// defect of the chain-rule generator formula vs the true L^Y (asymptotic tier;
// exact when the outer map is affine)
inline DefectReport check_cylinder_generator_formula(const ConfigSpace& cs,
                                                     const CylinderFunction& cv,
                                                     const std::string& fixture = {}) {
  const ConfigFunction exact = lifted_generator_apply(cs, tabulate(cs, cv));
  const ConfigFunction formula = cylinder_generator_formula(cs, cv);
  int arg = 0;
  const double defect = (exact - formula).cwiseAbs().maxCoeff(&arg);
  return DefectReport::asymptotic("cylinder.generator_formula", fixture, defect,
                                  "gamma=" + cs.config(arg).label());
}

inline DefectReport check_cylinder_gamma_formula(const ConfigSpace& cs,
                                                 const CylinderFunction& cv,
                                                 const std::string& fixture = {}) {
  const ConfigFunction sec = gamma_section(cs, tabulate(cs, cv));
  const ConfigFunction cyl = gamma_cylinder(cs, cv, cv);
  int arg = 0;
  const double defect = (sec - cyl).cwiseAbs().maxCoeff(&arg);
  return DefectReport::asymptotic("cylinder.gamma_formula", fixture, defect,
                                  "gamma=" + cs.config(arg).label());
}

// Gamma_sec(u) = 1/2 (L^Y u^2 - 2 u L^Y u), exactly
inline DefectReport check_carre_du_champ(const ConfigSpace& cs,
                                         const std::vector<ConfigFunction>& samples,
                                         double tolerance = 1e-12,
                                         const std::string& fixture = {}) {
  double worst = 0.0;
  std::string witness;
  for (std::size_t si = 0; si < samples.size(); ++si) {
    const ConfigFunction& u = samples[si];
    const ConfigFunction lhs = gamma_section(cs, u);
    const ConfigFunction rhs =
        0.5 * (lifted_generator_apply(cs, u.cwiseProduct(u)) -
               2.0 * u.cwiseProduct(lifted_generator_apply(cs, u)));
    int arg = 0;
    const double diff = (lhs - rhs).cwiseAbs().maxCoeff(&arg);
    if (diff > worst) {
      worst = diff;
      witness = "sample=" + std::to_string(si) + " gamma=" + cs.config(arg).label();
    }
  }
  return DefectReport::exact("identity.carre_du_champ_section", fixture, worst, tolerance,
                             0.0, witness);
}

// symmetry of diag(mu) L^Y, sector by sector (finite-space surrogate of
// essential self-adjointness in L^2(mu))
inline DefectReport check_selfadjointness(const ConfigSpace& cs, const ConfigMeasure& mu,
                                          double tolerance = 1e-11,
                                          const std::string& fixture = {},
                                          const std::string& check_id =
                                              "identity.selfadjoint") {
  if (mu.weights.size() != cs.size())
    throw std::invalid_argument("measure dimension mismatch");
  if (mu.weights.minCoeff() <= 0.0)
    throw std::invalid_argument("self-adjointness check needs strictly positive weights");
  double worst = 0.0;
  std::string witness;
  for (int k = 0; k <= cs.n_max(); ++k) {
    const Eigen::MatrixXd l = lifted_generator_sector_matrix(cs, k);
    const int b = cs.sector_begin(k);
    const Eigen::VectorXd w = mu.weights.segment(b, cs.sector_size(k));
    const Eigen::MatrixXd a = w.asDiagonal() * l;
    int r = 0, c = 0;
    const double diff = (a - a.transpose()).cwiseAbs().maxCoeff(&r, &c);
    if (diff > worst) {
      worst = diff;
      witness = "sector=" + std::to_string(k) + " gamma=" + cs.config(b + r).label() +
                " eta=" + cs.config(b + c).label();
    }
  }
  return DefectReport::exact(check_id, fixture, worst, tolerance, 0.0, witness);
}

// partial semigroups acting on all but one particle keep [0,1]-valued tables
// in [0,1] (sub-Markovian tensor step, exercised on 2-particle sectors)
inline DefectReport check_submarkov_tensorization(const ConfigSpace& cs,
                                                  const std::vector<double>& t_grid,
                                                  int sample_count, std::uint64_t seed,
                                                  double tolerance = 1e-12,
                                                  const std::string& fixture = {}) {
  if (cs.n_max() < 2)
    return DefectReport::refusal("identity.submarkov_tensorization", fixture,
                                 "needs the 2-particle sector (n_max >= 2)");
  const int n = cs.base().size();
  CounterRng rng(seed);
  double worst = 0.0;
  std::string witness;
  for (int s = 0; s < sample_count; ++s) {
    // [0,1]-valued function on the 2-sector, as a symmetric labeled table
    Eigen::MatrixXd table(n, n);
    for (int x = 0; x < n; ++x)
      for (int y = x; y < n; ++y) table(x, y) = table(y, x) = rng.next_uniform();
    for (double t : t_grid) {
      const Eigen::MatrixXd ht = semigroup_matrix(cs.base(), t);
      const Eigen::MatrixXd moved = table * ht.transpose();  // heat on coordinate 2 only
      const double defect =
          std::max(-moved.minCoeff(), moved.maxCoeff() - 1.0);
      if (defect > worst) {
        worst = defect;
        witness = "sample=" + std::to_string(s) + " t=" + std::to_string(t);
      }
    }
  }
  return DefectReport::exact("identity.submarkov_tensorization", fixture, worst, tolerance,
                             0.0, witness, seed);
}

}  // namespace upsilon
