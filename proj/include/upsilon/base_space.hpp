#pragma once

// Finite reversible Markov base spaces: a state set with reference weights m,
// a rate generator Q in detailed balance with m, and an optional metric d.

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace upsilon {

using BaseFunction = Eigen::VectorXd;

struct FiniteBaseSpace {
  std::vector<std::string> states;
  Eigen::VectorXd m;                  // strictly positive reference weights
  Eigen::MatrixXd Q;                  // rate generator, rows sum to 0
  std::optional<Eigen::MatrixXd> d;   // symmetric metric, finite entries

  int size() const { return static_cast<int>(states.size()); }
  double total_mass() const { return m.sum(); }

  double metric(int x, int y) const {
    if (!d) throw std::runtime_error("base space has no metric");
    return (*d)(x, y);
  }

  void validate() const;
};

namespace detail {

inline bool generator_irreducible(const Eigen::MatrixXd& q) {
  const int n = static_cast<int>(q.rows());
  // forward reachability from state 0; detailed balance makes edges symmetric,
  // so one sweep decides strong connectivity
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    const int x = stack.back();
    stack.pop_back();
    for (int y = 0; y < n; ++y) {
      if (y != x && q(x, y) > 0.0 && !seen[y]) {
        seen[y] = 1;
        stack.push_back(y);
      }
    }
  }
  for (char s : seen)
    if (!s) return false;
  return true;
}

}  // namespace detail

inline void FiniteBaseSpace::validate() const {
  const int n = size();
  if (n <= 0) throw std::invalid_argument("base space needs at least one state");
  if (m.size() != n || Q.rows() != n || Q.cols() != n)
    throw std::invalid_argument("base space dimension mismatch");
  for (int x = 0; x < n; ++x) {
    if (!(m(x) > 0.0) || !std::isfinite(m(x)))
      throw std::invalid_argument("reference weights must be strictly positive");
  }
  const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
  for (int x = 0; x < n; ++x) {
    double row = 0.0;
    for (int y = 0; y < n; ++y) {
      if (!std::isfinite(Q(x, y))) throw std::invalid_argument("generator entries must be finite");
      if (y != x && Q(x, y) < 0.0)
        throw std::invalid_argument("off-diagonal generator entries must be >= 0");
      row += Q(x, y);
    }
    if (std::abs(row) > 1e-12 * scale)
      throw std::invalid_argument("generator rows must sum to 0");
  }
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      if (std::abs(m(x) * Q(x, y) - m(y) * Q(y, x)) > 1e-12 * scale * m.maxCoeff())
        throw std::invalid_argument("detailed balance violated");
  if (d) {
    const Eigen::MatrixXd& dd = *d;
    if (dd.rows() != n || dd.cols() != n)
      throw std::invalid_argument("metric dimension mismatch");
    for (int x = 0; x < n; ++x) {
      if (dd(x, x) != 0.0) throw std::invalid_argument("metric diagonal must vanish");
      for (int y = 0; y < n; ++y) {
        if (!std::isfinite(dd(x, y)) || dd(x, y) < 0.0)
          throw std::invalid_argument("metric entries must be finite and nonnegative");
        if (dd(x, y) != dd(y, x)) throw std::invalid_argument("metric must be symmetric");
      }
    }
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y)
        for (int z = 0; z < n; ++z)
          if (dd(x, z) > dd(x, y) + dd(y, z) + 1e-12)
            throw std::invalid_argument("metric violates the triangle inequality");
  }
  if (!detail::generator_irreducible(Q))
    throw std::invalid_argument("generator must be irreducible");
}

// Canonical fixture: two states at unit distance, symmetric jump rate.
inline FiniteBaseSpace build_two_state(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("rate must be positive");
  FiniteBaseSpace s;
  s.states = {"a", "b"};
  s.m = Eigen::Vector2d(1.0, 1.0);
  s.Q = Eigen::MatrixXd(2, 2);
  s.Q << -rate, rate, rate, -rate;
  Eigen::MatrixXd d(2, 2);
  d << 0.0, 1.0, 1.0, 0.0;
  s.d = d;
  s.validate();
  return s;
}

// Nearest-neighbor walk on n equispaced sites of the unit circle; uniform m
// with total mass 2*pi, arc-length metric. Translation invariant, so it
// carries exact BE(0,infty) and an exact Wasserstein shift coupling.
inline FiniteBaseSpace build_circle(int n, double rate) {
  if (n < 3) throw std::invalid_argument("circle needs n >= 3");
  if (!(rate > 0.0)) throw std::invalid_argument("rate must be positive");
  FiniteBaseSpace s;
  const double h = 2.0 * M_PI / n;
  s.states.reserve(n);
  for (int i = 0; i < n; ++i) s.states.push_back("s" + std::to_string(i));
  s.m = Eigen::VectorXd::Constant(n, h);
  s.Q = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    s.Q(i, (i + 1) % n) = rate;
    s.Q(i, (i + n - 1) % n) = rate;
    s.Q(i, i) = -2.0 * rate;
  }
  Eigen::MatrixXd d(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int k = std::abs(i - j);
      d(i, j) = std::min(k, n - k) * h;
    }
  s.d = d;
  s.validate();
  return s;
}

inline nlohmann::json to_json(const FiniteBaseSpace& s) {
  nlohmann::json j;
  j["states"] = s.states;
  j["m"] = std::vector<double>(s.m.data(), s.m.data() + s.m.size());
  nlohmann::json q = nlohmann::json::array();
  for (int x = 0; x < s.size(); ++x) {
    nlohmann::json row = nlohmann::json::array();
    for (int y = 0; y < s.size(); ++y) row.push_back(s.Q(x, y));
    q.push_back(row);
  }
  j["Q"] = q;
  if (s.d) {
    nlohmann::json dm = nlohmann::json::array();
    for (int x = 0; x < s.size(); ++x) {
      nlohmann::json row = nlohmann::json::array();
      for (int y = 0; y < s.size(); ++y) row.push_back((*s.d)(x, y));
      dm.push_back(row);
    }
    j["d"] = dm;
  } else {
    j["d"] = nullptr;
  }
  return j;
}

inline FiniteBaseSpace base_space_from_json(const nlohmann::json& j) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k != "states" && k != "m" && k != "Q" && k != "d")
      throw std::invalid_argument("unknown key in base space document: " + k);
  }
  FiniteBaseSpace s;
  s.states = j.at("states").get<std::vector<std::string>>();
  const auto mv = j.at("m").get<std::vector<double>>();
  const int n = static_cast<int>(s.states.size());
  if (static_cast<int>(mv.size()) != n)
    throw std::invalid_argument("m length must match states");
  s.m = Eigen::Map<const Eigen::VectorXd>(mv.data(), n);
  const auto& qj = j.at("Q");
  if (static_cast<int>(qj.size()) != n) throw std::invalid_argument("Q must be n x n");
  s.Q = Eigen::MatrixXd(n, n);
  for (int x = 0; x < n; ++x) {
    if (static_cast<int>(qj[x].size()) != n) throw std::invalid_argument("Q must be n x n");
    for (int y = 0; y < n; ++y) s.Q(x, y) = qj[x][y].get<double>();
  }
  if (j.contains("d") && !j.at("d").is_null()) {
    const auto& dj = j.at("d");
    if (static_cast<int>(dj.size()) != n) throw std::invalid_argument("d must be n x n");
    Eigen::MatrixXd d(n, n);
    for (int x = 0; x < n; ++x) {
      if (static_cast<int>(dj[x].size()) != n) throw std::invalid_argument("d must be n x n");
      for (int y = 0; y < n; ++y) d(x, y) = dj[x][y].get<double>();
    }
    s.d = d;
  }
  s.validate();
  return s;
}

}  // namespace upsilon
