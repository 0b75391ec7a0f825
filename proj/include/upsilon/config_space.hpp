#pragma once

// Multiset configurations over a finite base, enumerated exhaustively up to a
// particle cap. Order is graded: by particle count, then within a sector by
// occupation of earlier states first, so indices are stable across runs.

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "upsilon/base_space.hpp"

namespace upsilon {

struct Configuration {
  std::vector<int> occupation;
  int total = 0;

  static Configuration from_occupation(std::vector<int> occ) {
    Configuration c;
    c.total = std::accumulate(occ.begin(), occ.end(), 0);
    c.occupation = std::move(occ);
    return c;
  }

  static Configuration empty(int n_states) {
    return from_occupation(std::vector<int>(n_states, 0));
  }

  bool operator==(const Configuration& o) const { return occupation == o.occupation; }

  std::string label() const {
    std::string s = "[";
    for (std::size_t i = 0; i < occupation.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(occupation[i]);
    }
    return s + "]";
  }
};

namespace detail {

struct OccupationHash {
  std::size_t operator()(const std::vector<int>& v) const {
    std::uint64_t h = 1469598103934665603ull;
    for (int x : v) {
      h ^= static_cast<std::uint64_t>(x) + 0x9e3779b97f4a7c15ull;
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace detail

class ConfigSpace {
 public:
  ConfigSpace(FiniteBaseSpace base, int n_max) : base_(std::move(base)), n_max_(n_max) {
    if (n_max < 0) throw std::invalid_argument("n_max must be >= 0");
    const int n = base_.size();
    // |configs| = sum_k C(n+k-1, k); overflow guard before materializing
    double count = 0.0;
    double sector = 1.0;
    for (int k = 0; k <= n_max; ++k) {
      count += sector;
      sector = sector * (n + k) / (k + 1);
    }
    if (count > 1e7) throw std::invalid_argument("configuration space exceeds 1e7 entries");

    sector_begin_.assign(n_max + 2, 0);
    std::vector<int> occ(n, 0);
    for (int k = 0; k <= n_max_; ++k) {
      sector_begin_[k] = static_cast<int>(configs_.size());
      emit_sector(occ, 0, k);
    }
    sector_begin_[n_max_ + 1] = static_cast<int>(configs_.size());
    index_.reserve(configs_.size() * 2);
    for (std::size_t i = 0; i < configs_.size(); ++i)
      index_.emplace(configs_[i].occupation, static_cast<int>(i));
  }

  const FiniteBaseSpace& base() const { return base_; }
  int n_max() const { return n_max_; }
  int size() const { return static_cast<int>(configs_.size()); }
  const Configuration& config(int i) const { return configs_[i]; }
  const std::vector<Configuration>& configs() const { return configs_; }

  int sector_count() const { return n_max_ + 1; }
  int sector_begin(int k) const { return sector_begin_.at(k); }
  int sector_end(int k) const { return sector_begin_.at(k + 1); }
  int sector_size(int k) const { return sector_end(k) - sector_begin(k); }

  int index_of(const std::vector<int>& occupation) const {
    auto it = index_.find(occupation);
    if (it == index_.end()) throw std::out_of_range("configuration not enumerated");
    return it->second;
  }

  int index_of(const Configuration& c) const { return index_of(c.occupation); }

  // index of gamma - delta_x + delta_y; caller guarantees gamma_x > 0
  int index_after_move(int config_index, int x, int y) const {
    if (y == x) return config_index;
    scratch_ = configs_[config_index].occupation;
    scratch_[x] -= 1;
    scratch_[y] += 1;
    return index_of(scratch_);
  }

  // index of gamma + delta_y, or -1 if that leaves the enumerated range
  int index_after_insert(int config_index, int y) const {
    if (configs_[config_index].total + 1 > n_max_) return -1;
    scratch_ = configs_[config_index].occupation;
    scratch_[y] += 1;
    return index_of(scratch_);
  }

 private:
  void emit_sector(std::vector<int>& occ, int state, int remaining) {
    const int n = base_.size();
    if (state == n - 1) {
      occ[state] = remaining;
      configs_.push_back(Configuration::from_occupation(occ));
      occ[state] = 0;
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      occ[state] = k;
      emit_sector(occ, state + 1, remaining - k);
    }
    occ[state] = 0;
  }

  FiniteBaseSpace base_;
  int n_max_;
  std::vector<Configuration> configs_;
  std::vector<int> sector_begin_;
  std::unordered_map<std::vector<int>, int, detail::OccupationHash> index_;
  mutable std::vector<int> scratch_;
};

using ConfigFunction = Eigen::VectorXd;  // one value per enumerated configuration

// f*gamma = sum_x gamma_x f(x)
inline double star(const BaseFunction& f, const Configuration& gamma) {
  double acc = 0.0;
  for (std::size_t x = 0; x < gamma.occupation.size(); ++x)
    if (gamma.occupation[x] != 0) acc += gamma.occupation[x] * f(static_cast<int>(x));
  return acc;
}

inline ConfigFunction star_table(const ConfigSpace& cs, const BaseFunction& f) {
  ConfigFunction u(cs.size());
  for (int i = 0; i < cs.size(); ++i) u(i) = star(f, cs.config(i));
  return u;
}

}  // namespace upsilon
