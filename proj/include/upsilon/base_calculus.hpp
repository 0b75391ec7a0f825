#pragma once

// Carre du champ, heat semigroup, Bakry-Emery constants and the base-level
// log-Harnack defect for finite reversible chains.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "upsilon/base_space.hpp"
#include "upsilon/expm.hpp"
#include "upsilon/report.hpp"
#include "upsilon/rng.hpp"

namespace upsilon {

// Gamma(f,g)(x) = 1/2 sum_y Q[x,y] (f(y)-f(x)) (g(y)-g(x)); the unique
// bilinear form satisfying 2 Gamma(f,g) = L(fg) - f Lg - g Lf for Q.
inline BaseFunction square_field(const FiniteBaseSpace& s, const BaseFunction& f,
                                 const BaseFunction& g) {
  const int n = s.size();
  if (f.size() != n || g.size() != n)
    throw std::invalid_argument("square_field: dimension mismatch");
  BaseFunction out = BaseFunction::Zero(n);
  for (int x = 0; x < n; ++x) {
    double acc = 0.0;
    for (int y = 0; y < n; ++y) {
      if (y == x) continue;
      acc += s.Q(x, y) * (f(y) - f(x)) * (g(y) - g(x));
    }
    out(x) = 0.5 * acc;
  }
  return out;
}

inline BaseFunction square_field(const FiniteBaseSpace& s, const BaseFunction& f) {
  return square_field(s, f, f);
}

inline BaseFunction generator_apply(const FiniteBaseSpace& s, const BaseFunction& f) {
  return s.Q * f;
}

// T_t = exp(tQ). Rows are checked stochastic; stray negatives at rounding
// level are clamped, anything worse signals a broken generator.
inline Eigen::MatrixXd semigroup_matrix(const FiniteBaseSpace& s, double t) {
  if (t < 0.0) throw std::invalid_argument("semigroup time must be >= 0");
  const int n = s.size();
  if (t == 0.0) return Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd h = expm(t * s.Q);
  for (int x = 0; x < n; ++x) {
    double row = 0.0;
    for (int y = 0; y < n; ++y) {
      if (h(x, y) < 0.0) {
        if (h(x, y) < -1e-14)
          throw std::runtime_error("semigroup_matrix: negative kernel entry beyond rounding");
        h(x, y) = 0.0;
      }
      row += h(x, y);
    }
    if (std::abs(row - 1.0) > 1e-12)
      throw std::runtime_error("semigroup_matrix: row mass deviates from 1");
  }
  return h;
}

// smallest nonzero eigenvalue of -Q in L^2(m); Q is m-symmetrizable
inline double spectral_gap(const FiniteBaseSpace& s) {
  const int n = s.size();
  Eigen::VectorXd r = s.m.cwiseSqrt();
  Eigen::MatrixXd sym = r.asDiagonal() * (-s.Q) * r.cwiseInverse().asDiagonal();
  sym = 0.5 * (sym + sym.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const Eigen::VectorXd ev = es.eigenvalues();
  for (int i = 0; i < n; ++i)
    if (ev(i) > 1e-10 * std::max(1.0, ev(n - 1))) return ev(i);
  throw std::runtime_error("spectral_gap: no nonzero eigenvalue found");
}

// I_K(t) = (e^{Kt}-1)/K, with the K=0 singularity removed by its limit t.
inline double rate_integral(double k, double t) {
  if (k == 0.0) return t;
  return std::expm1(k * t) / k;
}

struct BEWitness {
  int function_index = -1;
  double time = 0.0;
  int state = -1;
};

struct BEResult {
  double c = 1.0;
  double k_best = 0.0;
  std::vector<double> t_grid;
  double max_defect = 0.0;  // at k_best
  BEWitness witness;
};

// all coordinate indicators plus `extra` seeded standard-normal vectors
inline std::vector<BaseFunction> default_be_samples(const FiniteBaseSpace& s, int extra,
                                                    std::uint64_t seed) {
  std::vector<BaseFunction> out;
  const int n = s.size();
  for (int i = 0; i < n; ++i) {
    BaseFunction e = BaseFunction::Zero(n);
    e(i) = 1.0;
    out.push_back(e);
  }
  CounterRng rng(seed);
  for (int k = 0; k < extra; ++k) {
    BaseFunction f(n);
    for (int i = 0; i < n; ++i) f(i) = rng.next_normal();
    out.push_back(f);
  }
  return out;
}

namespace detail {

// max over (f,t,x) of Gamma(T_t f)(x) - c e^{-2Kt} (T_t Gamma f)(x)
inline double be_defect(const FiniteBaseSpace& s, double c, double k,
                        const std::vector<double>& t_grid,
                        const std::vector<BaseFunction>& samples, BEWitness* witness) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
    const double t = t_grid[ti];
    const Eigen::MatrixXd ht = semigroup_matrix(s, t);
    const double factor = c * std::exp(-2.0 * k * t);
    for (std::size_t fi = 0; fi < samples.size(); ++fi) {
      const BaseFunction& f = samples[fi];
      const BaseFunction lhs = square_field(s, ht * f);
      const BaseFunction rhs = factor * (ht * square_field(s, f));
      for (int x = 0; x < s.size(); ++x) {
        const double dx = lhs(x) - rhs(x);
        if (dx > worst) {
          worst = dx;
          if (witness) *witness = {static_cast<int>(fi), t, x};
        }
      }
    }
  }
  return worst;
}

}  // namespace detail

// Largest K with Gamma(T_t f) <= c e^{-2Kt} T_t Gamma(f) over the grid and
// samples; the defect is monotone increasing in K, so bisection applies.
inline BEResult best_be_constant(const FiniteBaseSpace& s, double c,
                                 const std::vector<double>& t_grid,
                                 const std::vector<BaseFunction>& samples,
                                 double bisect_tol = 1e-6) {
  if (!(c >= 1.0)) throw std::invalid_argument("best_be_constant: c must be >= 1");
  if (t_grid.empty() || samples.empty())
    throw std::invalid_argument("best_be_constant: empty grid or samples");
  for (double t : t_grid)
    if (!(t > 0.0)) throw std::invalid_argument("best_be_constant: grid times must be positive");

  const double span = 10.0 * s.Q.cwiseAbs().maxCoeff();
  double lo = -span, hi = span;
  if (detail::be_defect(s, c, lo, t_grid, samples, nullptr) > 0.0)
    throw std::runtime_error("best_be_constant: bracket too small (defect at lower end)");
  if (detail::be_defect(s, c, hi, t_grid, samples, nullptr) <= 0.0) {
    lo = hi;  // inequality holds on the whole bracket
  }
  while (hi - lo > bisect_tol) {
    const double mid = 0.5 * (lo + hi);
    if (detail::be_defect(s, c, mid, t_grid, samples, nullptr) <= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  BEResult r;
  r.c = c;
  r.k_best = lo;
  r.t_grid = t_grid;
  r.max_defect = detail::be_defect(s, c, lo, t_grid, samples, &r.witness);
  return r;
}

inline double be_defect_at(const FiniteBaseSpace& s, double c, double k,
                           const std::vector<double>& t_grid,
                           const std::vector<BaseFunction>& samples,
                           BEWitness* witness = nullptr) {
  return detail::be_defect(s, c, k, t_grid, samples, witness);
}

// max over (x,y,t,f) of T_t log f (x) - log T_t f (y) - d(x,y)^2 / (4 I_{2K}(t)).
// Discrete chains need not satisfy the continuum inequality exactly, so this
// is reported as a defect, not a hard pass (asymptotic tier).
inline DefectReport check_log_harnack_base(const FiniteBaseSpace& s, double k,
                                           const std::vector<double>& t_grid,
                                           const std::vector<BaseFunction>& f_samples,
                                           const std::string& fixture = {}) {
  if (!s.d) throw std::invalid_argument("log-Harnack needs a base metric");
  for (const auto& f : f_samples)
    if (f.minCoeff() <= 0.0)
      throw std::invalid_argument("log-Harnack samples must be strictly positive");
  double worst = -std::numeric_limits<double>::infinity();
  std::string witness;
  for (double t : t_grid) {
    const Eigen::MatrixXd ht = semigroup_matrix(s, t);
    const double denom = 4.0 * rate_integral(2.0 * k, t);
    for (std::size_t fi = 0; fi < f_samples.size(); ++fi) {
      const BaseFunction& f = f_samples[fi];
      const BaseFunction t_log_f = ht * f.array().log().matrix();
      const BaseFunction log_t_f = (ht * f).array().log().matrix();
      for (int x = 0; x < s.size(); ++x)
        for (int y = 0; y < s.size(); ++y) {
          const double gap = t_log_f(x) - log_t_f(y) -
                             s.metric(x, y) * s.metric(x, y) / denom;
          if (gap > worst) {
            worst = gap;
            witness = "f=" + std::to_string(fi) + " t=" + std::to_string(t) +
                      " x=" + std::to_string(x) + " y=" + std::to_string(y);
          }
        }
    }
  }
  return DefectReport::asymptotic("harnack.base", fixture, worst, witness);
}

}  // namespace upsilon
