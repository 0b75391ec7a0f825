#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "upsilon/rng.hpp"
#include "upsilon/transport.hpp"

using namespace upsilon;

namespace {

// brute force over all permutations
double assignment_brute(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += cost(i, perm[i]);
    best = std::min(best, acc);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("assignment solver vs exhaustive search") {
  Eigen::MatrixXd known(3, 3);
  known << 4, 1, 3, 2, 0, 5, 3, 2, 2;
  std::vector<int> sol;
  CHECK(solve_assignment(known, sol) == Catch::Approx(5.0));

  CounterRng rng(2718);
  for (int n : {2, 3, 4, 5, 6}) {
    for (int rep = 0; rep < 6; ++rep) {
      Eigen::MatrixXd cost(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) cost(i, j) = rng.next_uniform();
      std::vector<int> rowsol;
      const double got = solve_assignment(cost, rowsol);
      CHECK(got == Catch::Approx(assignment_brute(cost)).margin(1e-12));
      // rowsol is a permutation achieving the optimum
      std::vector<char> used(n, 0);
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        REQUIRE(rowsol[i] >= 0);
        CHECK(!used[rowsol[i]]);
        used[rowsol[i]] = 1;
        acc += cost(i, rowsol[i]);
      }
      CHECK(acc == Catch::Approx(got));
    }
  }
}

TEST_CASE("transportation solver: marginals and unit-expansion oracle") {
  CounterRng rng(31415);
  for (int rep = 0; rep < 8; ++rep) {
    const int ns = 3 + static_cast<int>(rng.next_u64() % 3);
    const int nt = 3 + static_cast<int>(rng.next_u64() % 3);
    // rational masses k/8 so the problem expands exactly into unit particles
    Eigen::VectorXd supply(ns), demand(nt);
    std::vector<int> su(ns), de(nt);
    int total = 0;
    for (int i = 0; i < ns; ++i) {
      su[i] = 1 + static_cast<int>(rng.next_u64() % 4);
      total += su[i];
    }
    int left = total;
    for (int j = 0; j < nt - 1; ++j) {
      de[j] = std::min<int>(left, 1 + static_cast<int>(rng.next_u64() % 4));
      left -= de[j];
    }
    de[nt - 1] = left;
    if (de[nt - 1] <= 0) continue;
    for (int i = 0; i < ns; ++i) supply(i) = su[i] / 8.0;
    for (int j = 0; j < nt; ++j) demand(j) = de[j] / 8.0;

    Eigen::MatrixXd cost(ns, nt);
    for (int i = 0; i < ns; ++i)
      for (int j = 0; j < nt; ++j) cost(i, j) = rng.next_uniform();

    const TransportSolution sol = solve_transport(supply, demand, cost);

    // marginals
    Eigen::VectorXd row = Eigen::VectorXd::Zero(ns), col = Eigen::VectorXd::Zero(nt);
    for (const auto& e : sol.plan) {
      CHECK(e.mass > 0.0);
      row(e.from) += e.mass;
      col(e.to) += e.mass;
    }
    CHECK((row - supply).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((col - demand).cwiseAbs().maxCoeff() < 1e-10);

    // expansion into unit masses solved as an assignment problem
    Eigen::MatrixXd unit(total, total);
    int r = 0;
    for (int i = 0; i < ns; ++i)
      for (int k = 0; k < su[i]; ++k) {
        int c = 0;
        for (int j = 0; j < nt; ++j)
          for (int l = 0; l < de[j]; ++l) unit(r, c++) = cost(i, j);
        ++r;
      }
    std::vector<int> rowsol;
    const double expect = solve_assignment(unit, rowsol) / 8.0;
    CHECK(sol.cost == Catch::Approx(expect).margin(1e-10));
  }

  // unbalanced masses rejected
  Eigen::VectorXd a = Eigen::VectorXd::Ones(2), b = Eigen::VectorXd::Ones(2);
  b(0) = 2.0;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, 2);
  CHECK_THROWS(solve_transport(a, b, c));
}

TEST_CASE("wasserstein on the base") {
  const auto two = build_two_state(1.0);
  Eigen::VectorXd da(2), db(2);
  da << 1.0, 0.0;
  db << 0.0, 1.0;
  CHECK(wasserstein_base(two, da, db).w2() == Catch::Approx(1.0));
  CHECK(wasserstein_base(two, da, da).w2() == 0.0);

  // circle n=8, delta_0 vs uniform: the coupling from a Dirac is unique
  const auto c8 = build_circle(8, 1.0);
  Eigen::VectorXd d0 = Eigen::VectorXd::Zero(8);
  d0(0) = 1.0;
  Eigen::VectorXd uni = Eigen::VectorXd::Constant(8, 1.0 / 8.0);
  double expect = 0.0;
  for (int j = 0; j < 8; ++j) expect += c8.metric(0, j) * c8.metric(0, j) / 8.0;
  const auto plan = wasserstein_base(c8, d0, uni);
  CHECK(plan.squared_cost == Catch::Approx(expect).margin(1e-12));

  CHECK_THROWS(wasserstein_base(c8, d0, 0.5 * uni));
}

TEST_CASE("config distance: extended metric on multisets") {
  const auto two = build_two_state(1.0);
  const ConfigSpace cs(two, 3);

  // no coupling across sectors
  const auto empty = Configuration::empty(2);
  const auto a = Configuration::from_occupation({1, 0});
  CHECK(config_distance(two, empty, a).is_infinite);

  const auto aa = Configuration::from_occupation({2, 0});
  const auto ab = Configuration::from_occupation({1, 1});
  const auto d = config_distance(two, aa, ab);
  CHECK_FALSE(d.is_infinite);
  CHECK(d.value == Catch::Approx(1.0));

  // Dirac embedding is exactly isometric
  const auto c8 = build_circle(8, 1.0);
  for (int x = 0; x < 8; ++x)
    for (int y = 0; y < 8; ++y) {
      std::vector<int> ox(8, 0), oy(8, 0);
      ox[x] = 1;
      oy[y] = 1;
      const auto dd = config_distance(
          c8, Configuration::from_occupation(ox), Configuration::from_occupation(oy));
      CHECK(dd.value == c8.metric(x, y));
    }

  // identity, symmetry, triangle over all same-sector pairs/triples
  const ConfigSpace c5(build_circle(5, 1.0), 3);
  for (int k = 1; k <= 3; ++k) {
    const int b = c5.sector_begin(k);
    const int sz = c5.sector_size(k);
    Eigen::MatrixXd dist(sz, sz);
    for (int i = 0; i < sz; ++i)
      for (int j = 0; j < sz; ++j)
        dist(i, j) = config_distance(c5.base(), c5.config(b + i), c5.config(b + j)).value;
    for (int i = 0; i < sz; ++i) {
      CHECK(dist(i, i) == 0.0);
      for (int j = 0; j < sz; ++j) CHECK(dist(i, j) == dist(j, i));
    }
    for (int i = 0; i < sz; ++i)
      for (int j = 0; j < sz; ++j)
        for (int l = 0; l < sz; ++l)
          CHECK(dist(i, l) <= dist(i, j) + dist(j, l) + 1e-10);
  }

  FiniteBaseSpace no_metric = two;
  no_metric.d.reset();
  CHECK_THROWS(config_distance(no_metric, aa, ab));
}

TEST_CASE("wasserstein over configuration measures") {
  const ConfigSpace cs(build_two_state(1.0), 3);
  const auto pi = poisson_weights(cs, 1.0);

  CHECK(wasserstein_config(cs, pi, pi).w2() == Catch::Approx(0.0).margin(1e-12));

  // Diracs reproduce the assignment distance (cross-oracle of the two solvers)
  for (int i = 0; i < cs.size(); ++i)
    for (int j = 0; j < cs.size(); ++j) {
      if (cs.config(i).total != cs.config(j).total) continue;
      ConfigMeasure di, dj;
      di.weights = Eigen::VectorXd::Zero(cs.size());
      dj.weights = Eigen::VectorXd::Zero(cs.size());
      di.weights(i) = 1.0;
      dj.weights(j) = 1.0;
      const double w2 = wasserstein_config(cs, di, dj).w2();
      const double dy = config_distance(cs.base(), cs.config(i), cs.config(j)).value;
      CHECK(w2 == Catch::Approx(dy).margin(1e-9));
    }

  // different intensities give different sector masses: +infinity
  const auto pi2 = poisson_weights(cs, 2.0);
  const auto plan = wasserstein_config(cs, pi, pi2);
  CHECK(plan.status == PlanStatus::infinite);
  CHECK(std::isinf(plan.w2()));

  // desk-scale guard: circle n=36 has a 2-sector of 666 > 600
  const ConfigSpace big(build_circle(36, 1.0), 2);
  const auto pb = poisson_weights(big, 1.0);
  CHECK_THROWS_WITH(wasserstein_config(big, pb, pb),
                    Catch::Matchers::ContainsSubstring("desk-scale"));
}

TEST_CASE("kernel Wasserstein contraction on the circle, c == 1") {
  const ConfigSpace cs(build_circle(8, 1.0), 2);
  std::vector<std::pair<int, int>> pairs;
  // gamma = {0,2}, eta = {1,3} and a few shifted two-particle pairs
  auto occ_idx = [&](std::initializer_list<int> sites) {
    std::vector<int> occ(8, 0);
    for (int s : sites) occ[s] += 1;
    return cs.index_of(occ);
  };
  pairs.emplace_back(occ_idx({0, 2}), occ_idx({1, 3}));
  pairs.emplace_back(occ_idx({0, 4}), occ_idx({2, 6}));
  pairs.emplace_back(occ_idx({0, 0}), occ_idx({3, 3}));
  pairs.emplace_back(occ_idx({5}), occ_idx({1}));
  pairs.emplace_back(occ_idx({0, 1}), occ_idx({0, 1}));  // equal pair: both sides 0

  const auto rep = check_kwc(cs, [](double) { return 1.0; }, {0.1, 0.5, 1.0}, pairs);
  CHECK(rep.status == CheckStatus::pass);
  CHECK(rep.max_defect <= 1e-8);

  // base-level recovery through singleton configurations
  const auto& base = cs.base();
  const Eigen::MatrixXd ht = semigroup_matrix(base, 0.5);
  const double w_base = wasserstein_base(base, ht.row(5).transpose(), ht.row(1).transpose()).w2();
  const auto r5 = kernel_config_row(cs, occ_idx({5}), 0.5);
  const auto r1 = kernel_config_row(cs, occ_idx({1}), 0.5);
  const double w_conf = wasserstein_config(cs, r5, r1).w2();
  CHECK(w_conf == Catch::Approx(w_base).margin(1e-9));

  // shift coupling: the analytic bound is attained within LP precision
  for (int shift : {1, 2, 3}) {
    std::vector<int> occ(8, 0);
    occ[0] = 1;
    occ[2] = 1;
    std::vector<int> occ_s(8, 0);
    occ_s[(0 + shift) % 8] += 1;
    occ_s[(2 + shift) % 8] += 1;
    const int i = cs.index_of(occ), j = cs.index_of(occ_s);
    const double dy = config_distance(base, cs.config(i), cs.config(j)).value;
    const double w2 = wasserstein_config(cs, kernel_config_row(cs, i, 0.5),
                                         kernel_config_row(cs, j, 0.5))
                          .w2();
    CHECK(w2 <= dy + 1e-8);
  }

  CHECK_THROWS(check_kwc(cs, [](double) { return 1.0; }, {0.5},
                         {{occ_idx({0}), occ_idx({1, 2})}}));
}

TEST_CASE("relative entropy") {
  const ConfigSpace cs(build_two_state(1.0), 14);
  const auto pi = poisson_weights(cs, 1.0);

  CHECK(entropy(pi, pi) == 0.0);

  // point mass at the empty configuration: -log pi(empty) = s mX = 2
  ConfigMeasure delta;
  delta.weights = Eigen::VectorXd::Zero(cs.size());
  delta.weights(0) = 1.0;
  CHECK(entropy(delta, pi) == Catch::Approx(2.0).epsilon(1e-12));

  // nonnegative against probability references; zero only at equality
  CounterRng rng(55);
  Eigen::VectorXd w(cs.size());
  for (int i = 0; i < cs.size(); ++i) w(i) = rng.next_uniform();
  w /= w.sum();
  const Eigen::VectorXd ref = pi.weights / pi.weights.sum();
  CHECK(entropy(w, ref) > 0.0);

  // absolute continuity failure
  Eigen::VectorXd zero_ref = ref;
  zero_ref(3) = 0.0;
  Eigen::VectorXd mass_there = Eigen::VectorXd::Zero(cs.size());
  mass_there(3) = 1.0;
  CHECK(std::isinf(entropy(mass_there, zero_ref)));
}

TEST_CASE("entropy is nonincreasing along the lifted heat flow") {
  const ConfigSpace cs(build_two_state(1.0), 4);
  const auto pi = poisson_weights(cs, 1.0);
  CounterRng rng(66);
  ConfigMeasure mu;
  mu.weights.resize(cs.size());
  for (int i = 0; i < cs.size(); ++i) mu.weights(i) = rng.next_uniform();
  mu.weights *= pi.enumerated_mass() / mu.weights.sum();

  double prev = entropy(mu, pi);
  for (double t : {0.05, 0.2, 0.5, 1.0, 3.0}) {
    const double ent = entropy(flow_measure(cs, mu, t), pi);
    CHECK(ent <= prev + 1e-12);
    prev = ent;
  }
}

TEST_CASE("Fisher information and the exact dissipation identity") {
  const ConfigSpace cs(build_two_state(1.0), 4);
  const auto pi = poisson_weights(cs, 1.0);

  // rho == 1: both forms vanish
  const auto flat = fisher_information(cs, pi.weights, Eigen::VectorXd::Ones(cs.size()));
  CHECK(flat.f_sqrt == 0.0);
  CHECK(flat.f_log == 0.0);

  // strictly positive density, normalized against the enumerated pi
  CounterRng rng(77);
  Eigen::VectorXd rho(cs.size());
  for (int i = 0; i < cs.size(); ++i) rho(i) = 0.2 + rng.next_uniform();
  rho /= pi.weights.dot(rho);

  for (double t : {0.1, 0.5, 1.0}) {
    // evolve the density sector by sector
    Eigen::VectorXd rho_t = rho;
    for (int k = 0; k <= cs.n_max(); ++k) {
      const int b = cs.sector_begin(k);
      const int sz = cs.sector_size(k);
      rho_t.segment(b, sz) =
          lifted_semigroup_sector_matrix(cs, k, t) * rho.segment(b, sz);
    }
    // analytic derivative <L rho_t, 1 + log rho_t>_pi vs the Dirichlet pairing
    const Eigen::VectorXd lrho = lifted_generator_apply(cs, rho_t);
    const Eigen::VectorXd one_plus_log =
        (rho_t.array().log() + 1.0).matrix();
    const double analytic = pi.weights.dot(lrho.cwiseProduct(one_plus_log));
    const auto fisher = fisher_information(cs, pi.weights, rho_t);
    CHECK(std::abs(analytic + fisher.f_log) < 1e-8);

    // third route: central difference of the entropy itself
    const double h = 1e-5;
    auto ent_at = [&](double tt) {
      Eigen::VectorXd r = rho;
      Eigen::VectorXd w(cs.size());
      for (int k = 0; k <= cs.n_max(); ++k) {
        const int b = cs.sector_begin(k);
        const int sz = cs.sector_size(k);
        r.segment(b, sz) = lifted_semigroup_sector_matrix(cs, k, tt) * rho.segment(b, sz);
      }
      for (int i = 0; i < cs.size(); ++i) w(i) = r(i) * pi.weights(i);
      return entropy(w, pi.weights);
    };
    const double fd = (ent_at(t + h) - ent_at(t - h)) / (2.0 * h);
    CHECK(std::abs(fd - analytic) < 1e-6);

    // Fisher comparison: 4 E(sqrt rho) <= E(rho, log rho) on chains
    CHECK(fisher.f_sqrt <= fisher.f_log + 1e-12);
  }
}

TEST_CASE("integrated dissipation bound: int_0^T F_log dt <= 2 Ent(mu_0)") {
  const ConfigSpace cs(build_two_state(1.0), 4);
  const auto pi = poisson_weights(cs, 1.0);
  CounterRng rng(88);
  Eigen::VectorXd rho(cs.size());
  for (int i = 0; i < cs.size(); ++i) rho(i) = 0.05 + rng.next_uniform();
  rho /= pi.weights.dot(rho);

  const double horizon = 2.0;
  const int steps = 200;  // Simpson rule
  auto f_log_at = [&](double t) {
    Eigen::VectorXd rho_t = rho;
    for (int k = 0; k <= cs.n_max(); ++k) {
      const int b = cs.sector_begin(k);
      const int sz = cs.sector_size(k);
      rho_t.segment(b, sz) = lifted_semigroup_sector_matrix(cs, k, t) * rho.segment(b, sz);
    }
    return fisher_information(cs, pi.weights, rho_t).f_log;
  };
  double integral = 0.0;
  const double h = horizon / steps;
  for (int i = 0; i < steps; ++i) {
    const double a = i * h;
    integral += h / 6.0 * (f_log_at(a) + 4.0 * f_log_at(a + h / 2.0) + f_log_at(a + h));
  }
  Eigen::VectorXd mu0 = rho.cwiseProduct(pi.weights);
  const double ent0 = entropy(mu0, pi.weights);
  CHECK(integral <= 2.0 * ent0 + 1e-8);
  // and the integral is exactly the entropy drop (validates the quadrature)
  Eigen::VectorXd rho_T = rho;
  for (int k = 0; k <= cs.n_max(); ++k) {
    const int b = cs.sector_begin(k);
    const int sz = cs.sector_size(k);
    rho_T.segment(b, sz) =
        lifted_semigroup_sector_matrix(cs, k, horizon) * rho.segment(b, sz);
  }
  const double entT = entropy(rho_T.cwiseProduct(pi.weights), pi.weights);
  CHECK(integral == Catch::Approx(ent0 - entT).margin(1e-6));
}

TEST_CASE("entropy-cost and EVI defect reports") {
  const ConfigSpace cs(build_two_state(1.0), 3);
  const auto pi = poisson_weights(cs, 1.0);

  // mu = nu = pi: 0 <= 0 + 0 at every t
  const auto rep = check_entropy_cost(cs, pi, pi, pi, 0.0, {0.1, 0.5, 1.0});
  CHECK(rep.tier == Tier::asymptotic);
  CHECK(rep.max_defect <= 1e-12);

  // stationary-within-sector flow: both sides of EVI vanish up to step noise
  ConfigMeasure cond;
  cond.weights = Eigen::VectorXd::Zero(cs.size());
  const int b = cs.sector_begin(1), sz = cs.sector_size(1);
  cond.weights.segment(b, sz) = pi.weights.segment(b, sz);
  cond.weights /= cond.weights.sum();
  const auto evi = check_evi(cs, pi, cond, cond, 0.0, {0.5, 1.0});
  CHECK(std::abs(evi.max_defect) <= 1e-6);

  // cross-sector data refuses
  ConfigMeasure d0, d1;
  d0.weights = Eigen::VectorXd::Zero(cs.size());
  d1.weights = Eigen::VectorXd::Zero(cs.size());
  d0.weights(0) = 1.0;
  d1.weights(cs.sector_begin(1)) = 1.0;
  CHECK(check_entropy_cost(cs, pi, d0, d1, 0.0, {0.5}).status == CheckStatus::refused);
  CHECK(check_evi(cs, pi, d0, d1, 0.0, {0.5}).status == CheckStatus::refused);
}
