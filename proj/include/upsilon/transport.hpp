#pragma once

// Metric-side machinery: the L2-transportation distance between
// configurations (optimal assignment on the multiset expansion), exact
// Wasserstein-2 over base and configuration measures with the sector
// decomposition, kernel Wasserstein contraction, entropy and Fisher
// functionals, and the entropy-cost / EVI defect reports.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "upsilon/assignment.hpp"
#include "upsilon/base_calculus.hpp"
#include "upsilon/config_space.hpp"
#include "upsilon/expm.hpp"
#include "upsilon/lift.hpp"
#include "upsilon/measures.hpp"
#include "upsilon/mincost_flow.hpp"
#include "upsilon/report.hpp"

namespace upsilon {

// Exact OT stays desk-scale: per-sector problems beyond this refuse instead
// of approximating. 600 admits the circle-32 two-particle sector (528) used
// by the refinement studies.
inline constexpr int kOtSectorLimit = 600;

struct ExtendedDistance {
  double value = 0.0;
  bool is_infinite = false;

  static ExtendedDistance infinite() { return {std::numeric_limits<double>::infinity(), true}; }
  static ExtendedDistance finite(double v) { return {v, false}; }
};

// d_Y(gamma, eta): +infinity across particle counts ("inf of an empty
// coupling set"), otherwise the square root of the optimal assignment of
// squared base distances over the multiset expansion.
inline ExtendedDistance config_distance(const FiniteBaseSpace& base, const Configuration& a,
                                        const Configuration& b,
                                        std::vector<int>* matching = nullptr) {
  if (!base.d) throw std::invalid_argument("config_distance needs a base metric");
  if (a.total != b.total) return ExtendedDistance::infinite();
  if (a.total == 0) return ExtendedDistance::finite(0.0);

  std::vector<int> xs, ys;
  xs.reserve(a.total);
  ys.reserve(b.total);
  for (std::size_t s = 0; s < a.occupation.size(); ++s)
    for (int k = 0; k < a.occupation[s]; ++k) xs.push_back(static_cast<int>(s));
  for (std::size_t s = 0; s < b.occupation.size(); ++s)
    for (int k = 0; k < b.occupation[s]; ++k) ys.push_back(static_cast<int>(s));

  if (a.total == 1) {
    // Dirac embedding stays bitwise isometric
    if (matching) *matching = {0};
    return ExtendedDistance::finite(base.metric(xs[0], ys[0]));
  }

  const int n = a.total;
  Eigen::MatrixXd cost(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double d = base.metric(xs[i], ys[j]);
      cost(i, j) = d * d;
    }
  std::vector<int> rowsol;
  const double opt = solve_assignment(cost, rowsol);
  if (matching) *matching = rowsol;
  return ExtendedDistance::finite(std::sqrt(std::max(0.0, opt)));
}

enum class PlanStatus { optimal, infinite };

struct TransportPlan {
  PlanStatus status = PlanStatus::optimal;
  double squared_cost = 0.0;  // sum over sectors of W2^2
  std::vector<TransportEntry> entries;

  double w2() const {
    return status == PlanStatus::infinite ? std::numeric_limits<double>::infinity()
                                          : std::sqrt(std::max(0.0, squared_cost));
  }
};

// exact W2 between probability vectors on the base states
inline TransportPlan wasserstein_base(const FiniteBaseSpace& base, const Eigen::VectorXd& mu,
                                      const Eigen::VectorXd& nu) {
  if (!base.d) throw std::invalid_argument("wasserstein_base needs a base metric");
  if (mu.size() != base.size() || nu.size() != base.size())
    throw std::invalid_argument("wasserstein_base: dimension mismatch");
  if (std::abs(mu.sum() - nu.sum()) > 1e-10)
    throw std::invalid_argument("wasserstein_base: unbalanced masses");
  const Eigen::MatrixXd cost = base.d->cwiseProduct(*base.d);
  const TransportSolution sol = solve_transport(mu, nu, cost, 1e-10);
  TransportPlan plan;
  plan.squared_cost = sol.cost;
  plan.entries = sol.plan;
  return plan;
}

// squared d_Y between all config pairs of one sector (symmetric)
inline Eigen::MatrixXd sector_cost_matrix(const ConfigSpace& cs, int sector) {
  const int b = cs.sector_begin(sector);
  const int sz = cs.sector_size(sector);
  Eigen::MatrixXd cost(sz, sz);
  for (int i = 0; i < sz; ++i) {
    cost(i, i) = 0.0;
    for (int j = i + 1; j < sz; ++j) {
      const auto d = config_distance(cs.base(), cs.config(b + i), cs.config(b + j));
      cost(i, j) = cost(j, i) = d.value * d.value;
    }
  }
  return cost;
}

// W2 over configuration measures: W2^2 = sum over sectors of the per-sector
// optimum; infinite as soon as any sector masses differ beyond tolerance.
// A cache of sector cost matrices can be supplied when many solves share one
// configuration space.
inline TransportPlan wasserstein_config(const ConfigSpace& cs, const ConfigMeasure& mu,
                                        const ConfigMeasure& nu,
                                        const std::vector<Eigen::MatrixXd>* cost_cache = nullptr,
                                        double sector_mass_tol = 1e-9) {
  if (mu.weights.size() != cs.size() || nu.weights.size() != cs.size())
    throw std::invalid_argument("wasserstein_config: dimension mismatch");
  TransportPlan plan;
  for (int k = 0; k <= cs.n_max(); ++k) {
    const int b = cs.sector_begin(k);
    const int sz = cs.sector_size(k);
    const Eigen::VectorXd a = mu.weights.segment(b, sz);
    const Eigen::VectorXd c = nu.weights.segment(b, sz);
    const double ma = a.sum(), mc = c.sum();
    if (std::abs(ma - mc) > sector_mass_tol) {
      plan.status = PlanStatus::infinite;
      plan.entries.clear();
      plan.squared_cost = std::numeric_limits<double>::infinity();
      return plan;
    }
    if (ma <= 1e-15 && mc <= 1e-15) continue;
    if (k == 0) continue;  // a single point, zero cost
    if (sz > kOtSectorLimit)
      throw std::runtime_error("sector size exceeds OT desk-scale limit (" +
                               std::to_string(sz) + " > " + std::to_string(kOtSectorLimit) + ")");
    const Eigen::MatrixXd cost =
        cost_cache ? (*cost_cache)[k] : sector_cost_matrix(cs, k);
    const TransportSolution sol = solve_transport(a, c, cost, sector_mass_tol);
    plan.squared_cost += sol.cost;
    for (const auto& e : sol.plan) plan.entries.push_back({b + e.from, b + e.to, e.mass});
  }
  return plan;
}

// measure pushed through the lifted heat flow, sector by sector
inline ConfigMeasure flow_measure(const ConfigSpace& cs, const ConfigMeasure& mu, double t) {
  ConfigMeasure out = mu;
  out.kind = MeasureKind::custom;
  for (int k = 0; k <= cs.n_max(); ++k) {
    const int b = cs.sector_begin(k);
    const int sz = cs.sector_size(k);
    if (mu.weights.segment(b, sz).cwiseAbs().maxCoeff() == 0.0) continue;
    const Eigen::MatrixXd ht = lifted_semigroup_sector_matrix(cs, k, t);
    out.weights.segment(b, sz) = ht.transpose() * mu.weights.segment(b, sz);
  }
  return out;
}

// kernel Wasserstein contraction: W2(h_t(gamma,.), h_t(eta,.)) <= c(t) d_Y(gamma,eta)
inline DefectReport check_kwc(const ConfigSpace& cs,
                              const std::function<double(double)>& c_fn,
                              const std::vector<double>& t_grid,
                              const std::vector<std::pair<int, int>>& pairs,
                              double tolerance = 1e-8, const std::string& fixture = {}) {
  if (!cs.base().d) throw std::invalid_argument("check_kwc needs a base metric");
  for (const auto& [i, j] : pairs)
    if (cs.config(i).total != cs.config(j).total)
      throw std::invalid_argument("check_kwc: cross-sector pair has d_Y = +inf");

  std::vector<Eigen::MatrixXd> cache(cs.n_max() + 1);
  for (int k = 1; k <= cs.n_max(); ++k) cache[k] = sector_cost_matrix(cs, k);

  double worst = -std::numeric_limits<double>::infinity();
  std::string witness;
  for (double t : t_grid) {
    const Eigen::MatrixXd ht = semigroup_matrix(cs.base(), t);
    const double ct = c_fn(t);
    for (const auto& [i, j] : pairs) {
      const auto rows_i = kernel_config_row_with(cs, i, ht);
      const auto rows_j = kernel_config_row_with(cs, j, ht);
      const double w2 = wasserstein_config(cs, rows_i, rows_j, &cache).w2();
      const double dist = config_distance(cs.base(), cs.config(i), cs.config(j)).value;
      const double defect = w2 - ct * dist;
      if (defect > worst) {
        worst = defect;
        witness = "t=" + std::to_string(t) + " gamma=" + cs.config(i).label() +
                  " eta=" + cs.config(j).label();
      }
    }
  }
  return DefectReport::exact("transport.kwc", fixture, worst, tolerance, 0.0, witness);
}

// relative entropy Ent(mu | ref) = sum rho log rho d(ref); +inf off absolute
// continuity.
inline double entropy(const Eigen::VectorXd& mu, const Eigen::VectorXd& ref) {
  if (mu.size() != ref.size()) throw std::invalid_argument("entropy: dimension mismatch");
  double acc = 0.0;
  for (int i = 0; i < mu.size(); ++i) {
    if (mu(i) <= 0.0) {
      if (mu(i) < -1e-14) throw std::invalid_argument("entropy: negative mass");
      continue;
    }
    if (ref(i) <= 0.0) return std::numeric_limits<double>::infinity();
    acc += mu(i) * std::log(mu(i) / ref(i));
  }
  return acc;
}

inline double entropy(const ConfigMeasure& mu, const ConfigMeasure& ref) {
  return entropy(mu.weights, ref.weights);
}

// Dirichlet pairing E(u,v) = 1/2 sum_gamma pi(gamma) sum_moves rate (Du)(Dv);
// equals -<u, L v>_pi by reversibility, evaluated through the jump sum so it
// is an independent route.
inline double dirichlet_pair(const ConfigSpace& cs, const Eigen::VectorXd& pi,
                             const ConfigFunction& u, const ConfigFunction& v) {
  const auto& q = cs.base().Q;
  const int n = cs.base().size();
  double acc = 0.0;
  for (int i = 0; i < cs.size(); ++i) {
    if (pi(i) == 0.0) continue;
    const auto& occ = cs.config(i).occupation;
    double local = 0.0;
    for (int x = 0; x < n; ++x) {
      if (occ[x] == 0) continue;
      for (int y = 0; y < n; ++y) {
        if (y == x || q(x, y) == 0.0) continue;
        const int j = cs.index_after_move(i, x, y);
        local += occ[x] * q(x, y) * (u(j) - u(i)) * (v(j) - v(i));
      }
    }
    acc += 0.5 * pi(i) * local;
  }
  return acc;
}

struct FisherInfo {
  double f_sqrt = 0.0;  // 4 E(sqrt(rho)): the Fisher information
  double f_log = 0.0;   // E(rho, log rho): the entropy-dissipation form
};

// On diffusions the two coincide; on chains they differ and the gap feeds the
// refinement studies.
inline FisherInfo fisher_information(const ConfigSpace& cs, const Eigen::VectorXd& pi,
                                     const Eigen::VectorXd& rho) {
  if (rho.minCoeff() < -1e-14)
    throw std::invalid_argument("fisher_information: negative density");
  FisherInfo out;
  const Eigen::VectorXd root = rho.cwiseMax(0.0).cwiseSqrt();
  out.f_sqrt = 4.0 * pi.dot(gamma_section(cs, root));
  if (rho.minCoeff() <= 0.0) {
    out.f_log = std::numeric_limits<double>::infinity();
    return out;
  }
  out.f_log = dirichlet_pair(cs, pi, rho, rho.array().log().matrix());
  return out;
}

// Ent(h_t mu | pi) <= Ent(nu | pi) + W2(mu, nu)^2 / (4 I_{2K}(t)); asymptotic
// tier, reported per grid time, maximum defect returned.
inline DefectReport check_entropy_cost(const ConfigSpace& cs, const ConfigMeasure& pi,
                                       const ConfigMeasure& mu, const ConfigMeasure& nu,
                                       double k_lower, const std::vector<double>& t_grid,
                                       const std::string& fixture = {}) {
  const TransportPlan coupling = wasserstein_config(cs, mu, nu);
  if (coupling.status == PlanStatus::infinite)
    return DefectReport::refusal("entropy.entropy_cost", fixture,
                                 "W2(mu, nu) is infinite (sector masses differ)");
  const double w2_sq = coupling.squared_cost;
  const double ent_nu = entropy(nu, pi);
  double worst = -std::numeric_limits<double>::infinity();
  std::string witness;
  for (double t : t_grid) {
    const double ent_t = entropy(flow_measure(cs, mu, t), pi);
    const double defect = ent_t - ent_nu - w2_sq / (4.0 * rate_integral(2.0 * k_lower, t));
    if (defect > worst) {
      worst = defect;
      witness = "t=" + std::to_string(t);
    }
  }
  return DefectReport::asymptotic("entropy.entropy_cost", fixture, worst, witness);
}

// EVI_K along the kernel heat flow of the entropy:
//   d+/dt 1/2 W2(mu_t, nu)^2 + K/2 W2(mu_t, nu)^2 <= Ent(nu) - Ent(mu_t).
// The upper-right derivative is approximated by forward differences at three
// step sizes; the largest defect over steps and grid times is reported, and
// no extrapolated single derivative is claimed.
inline DefectReport check_evi(const ConfigSpace& cs, const ConfigMeasure& pi,
                              const ConfigMeasure& mu0, const ConfigMeasure& nu,
                              double k_lower, const std::vector<double>& t_grid,
                              const std::string& fixture = {}) {
  const std::vector<double> rel_steps{1e-2, 5e-3, 2.5e-3};
  double worst = -std::numeric_limits<double>::infinity();
  std::string witness;
  const double ent_nu = entropy(nu, pi);
  std::vector<Eigen::MatrixXd> cache(cs.n_max() + 1);
  for (int k = 1; k <= cs.n_max(); ++k)
    cache[k] = cs.sector_size(k) <= kOtSectorLimit ? sector_cost_matrix(cs, k)
                                                   : Eigen::MatrixXd();
  for (double t : t_grid) {
    const ConfigMeasure mu_t = flow_measure(cs, mu0, t);
    const TransportPlan at_t = wasserstein_config(cs, mu_t, nu, &cache);
    if (at_t.status == PlanStatus::infinite)
      return DefectReport::refusal("entropy.evi", fixture,
                                   "W2(mu_t, nu) is infinite (sector masses differ)");
    const double w2_sq = at_t.squared_cost;
    const double ent_t = entropy(mu_t, pi);
    for (double rel : rel_steps) {
      const double h = rel * t;
      const ConfigMeasure mu_th = flow_measure(cs, mu0, t + h);
      const double w2h_sq = wasserstein_config(cs, mu_th, nu, &cache).squared_cost;
      const double dplus = (0.5 * w2h_sq - 0.5 * w2_sq) / h;
      const double defect = dplus + 0.5 * k_lower * w2_sq - (ent_nu - ent_t);
      if (defect > worst) {
        worst = defect;
        witness = "t=" + std::to_string(t) + " h=" + std::to_string(h);
      }
    }
  }
  return DefectReport::asymptotic("entropy.evi", fixture, worst, witness);
}

}  // namespace upsilon
