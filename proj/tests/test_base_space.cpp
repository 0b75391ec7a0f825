#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "upsilon/base_calculus.hpp"
#include "upsilon/base_space.hpp"
#include "upsilon/expm.hpp"
#include "upsilon/rng.hpp"

using namespace upsilon;

TEST_CASE("expm matches closed forms") {
  // nilpotent: exp([[0,1],[0,0]]) = [[1,1],[0,1]]
  Eigen::MatrixXd n(2, 2);
  n << 0, 1, 0, 0;
  Eigen::MatrixXd e = expm(n);
  CHECK(std::abs(e(0, 0) - 1.0) < 1e-15);
  CHECK(std::abs(e(0, 1) - 1.0) < 1e-15);
  CHECK(std::abs(e(1, 0)) < 1e-15);

  // rotation generator
  const double theta = 1.3;
  Eigen::MatrixXd r(2, 2);
  r << 0, -theta, theta, 0;
  e = expm(r);
  CHECK(std::abs(e(0, 0) - std::cos(theta)) < 1e-14);
  CHECK(std::abs(e(1, 0) - std::sin(theta)) < 1e-14);

  // large-norm scaling path: diag entries
  Eigen::MatrixXd d = Eigen::Vector3d(-40.0, 3.0, 17.0).asDiagonal();
  e = expm(d);
  CHECK(std::abs(e(0, 0) - std::exp(-40.0)) < 1e-13 * std::exp(-40.0) + 1e-300);
  CHECK(std::abs(e(2, 2) - std::exp(17.0)) < 1e-12 * std::exp(17.0));
}

TEST_CASE("two-state fixture") {
  const auto s = build_two_state(1.0);
  REQUIRE(s.size() == 2);
  CHECK(s.Q.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
  // detailed balance: diag(m) Q symmetric
  Eigen::MatrixXd mq = s.m.asDiagonal() * s.Q;
  CHECK((mq - mq.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  // spectral gap of -Q is 2*rate (2x2 eigenvalues 0 and -2*rate)
  CHECK(spectral_gap(s) == Catch::Approx(2.0).margin(1e-10));
  CHECK(spectral_gap(build_two_state(3.0)) == Catch::Approx(6.0).margin(1e-9));

  CHECK_THROWS(build_two_state(0.0));
  CHECK_THROWS(build_two_state(-1.0));
}

TEST_CASE("two-state heat kernel closed form") {
  // h_t(a,b) = (1 - e^{-2 r t})/2
  for (double rate : {1.0, 3.0}) {
    const auto s = build_two_state(rate);
    for (double t : {0.1, 0.7, 2.0}) {
      const Eigen::MatrixXd h = semigroup_matrix(s, t);
      const double off = 0.5 * (1.0 - std::exp(-2.0 * rate * t));
      CHECK(h(0, 1) == Catch::Approx(off).margin(1e-13));
      CHECK(h(0, 0) == Catch::Approx(1.0 - off).margin(1e-13));
    }
  }
  const auto s1 = build_two_state(1.0);
  CHECK(semigroup_matrix(s1, 1.0)(0, 0) ==
        Catch::Approx(0.5 * (1.0 + std::exp(-2.0))).margin(1e-14));
  CHECK_THROWS(semigroup_matrix(s1, -0.5));
}

TEST_CASE("circle fixture") {
  const auto c4 = build_circle(4, 1.0);
  for (int i = 0; i < 4; ++i) {
    CHECK(c4.Q(i, i) == -2.0);
    CHECK(c4.Q(i, (i + 1) % 4) == 1.0);
    CHECK(c4.Q(i, (i + 3) % 4) == 1.0);
    CHECK(c4.Q(i, (i + 2) % 4) == 0.0);
  }
  const auto c8 = build_circle(8, 1.0);
  CHECK(c8.metric(0, 5) == Catch::Approx(3.0 * 2.0 * M_PI / 8.0));
  CHECK(c8.m.sum() == Catch::Approx(2.0 * M_PI));
  CHECK_THROWS(build_circle(2, 1.0));

  for (double t : {0.3, 1.5}) {
    const Eigen::MatrixXd h = semigroup_matrix(c8, t);
    CHECK((h.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK(h.minCoeff() >= 0.0);
  }
}

TEST_CASE("square field") {
  const auto s = build_two_state(1.0);
  Eigen::VectorXd f(2);
  f << 0.0, 1.0;
  const auto g = square_field(s, f);
  CHECK(g(0) == Catch::Approx(0.5));
  CHECK(g(1) == Catch::Approx(0.5));

  const auto c = build_circle(8, 1.0);
  CHECK(square_field(c, Eigen::VectorXd::Constant(8, 3.7)).cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd bad(3);
  CHECK_THROWS(square_field(s, bad));
}

TEST_CASE("carre du champ identity, both fixtures, random functions") {
  CounterRng rng(42);
  for (const auto& s : {build_two_state(2.0), build_circle(7, 0.8)}) {
    const int n = s.size();
    for (int rep = 0; rep < 8; ++rep) {
      Eigen::VectorXd f(n), g(n);
      for (int i = 0; i < n; ++i) {
        f(i) = rng.next_normal();
        g(i) = rng.next_normal();
      }
      const Eigen::VectorXd lhs = square_field(s, f, g);
      const Eigen::VectorXd rhs =
          0.5 * (s.Q * f.cwiseProduct(g) - f.cwiseProduct(s.Q * g) - g.cwiseProduct(s.Q * f));
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(square_field(s, f).minCoeff() >= 0.0);
      // bilinearity + symmetry
      const Eigen::VectorXd sym = square_field(s, g, f);
      CHECK((lhs - sym).cwiseAbs().maxCoeff() < 1e-14);
    }
  }
}

TEST_CASE("semigroup laws") {
  const auto c = build_circle(6, 1.3);
  const Eigen::MatrixXd t0 = semigroup_matrix(c, 0.0);
  CHECK((t0 - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::MatrixXd a = semigroup_matrix(c, 0.4);
  const Eigen::MatrixXd b = semigroup_matrix(c, 1.1);
  const Eigen::MatrixXd ab = semigroup_matrix(c, 1.5);
  CHECK((a * b - ab).cwiseAbs().maxCoeff() < 1e-10);

  // sub-Markov: [0,1] functions stay in [0,1]
  CounterRng rng(7);
  for (int rep = 0; rep < 4; ++rep) {
    Eigen::VectorXd f(6);
    for (int i = 0; i < 6; ++i) f(i) = rng.next_uniform();
    const Eigen::VectorXd tf = a * f;
    CHECK(tf.minCoeff() >= -1e-14);
    CHECK(tf.maxCoeff() <= 1.0 + 1e-14);
  }
}

TEST_CASE("best BE constant: two-state equals spectral computation") {
  const auto s = build_two_state(1.0);
  const std::vector<double> grid{0.1, 0.5, 1.0, 2.0};
  const auto samples = default_be_samples(s, 32, 7);
  const auto r = best_be_constant(s, 1.0, grid, samples);
  CHECK(r.k_best == Catch::Approx(2.0).margin(1e-5));
  CHECK(r.max_defect <= 0.0);

  // weaker inequality admits a larger constant
  const auto r2 = best_be_constant(s, 2.0, grid, samples);
  CHECK(r2.k_best >= r.k_best - 1e-9);

  CHECK_THROWS(best_be_constant(s, 1.0, {}, samples));
  CHECK_THROWS(best_be_constant(s, 1.0, grid, {}));
}

TEST_CASE("best BE constant: circle has K >= 0 by translation invariance") {
  const auto c = build_circle(8, 1.0);
  const std::vector<double> grid{0.1, 0.5, 1.0};
  const auto samples = default_be_samples(c, 16, 11);
  CHECK(be_defect_at(c, 1.0, 0.0, grid, samples) <= 1e-10);
  const auto r = best_be_constant(c, 1.0, grid, samples);
  CHECK(r.k_best >= -1e-6);
}

TEST_CASE("log-Harnack base defect") {
  const auto c = build_circle(8, 1.0);
  const std::vector<double> grid{0.2, 1.0};

  // constant f: LHS - RHS = -d^2/(4 I) <= 0, max 0 at x = y
  std::vector<Eigen::VectorXd> constant{Eigen::VectorXd::Constant(8, 2.5)};
  auto rep = check_log_harnack_base(c, 0.0, grid, constant);
  CHECK(std::abs(rep.max_defect) < 1e-12);

  // x = y reduces to Jensen: T_t log f <= log T_t f
  CounterRng rng(5);
  for (int reps = 0; reps < 4; ++reps) {
    Eigen::VectorXd f(8);
    for (int i = 0; i < 8; ++i) f(i) = 0.2 + rng.next_uniform();
    for (double t : grid) {
      const Eigen::MatrixXd h = semigroup_matrix(c, t);
      const Eigen::VectorXd lhs = h * f.array().log().matrix();
      const Eigen::VectorXd rhs = (h * f).array().log().matrix();
      CHECK((lhs - rhs).maxCoeff() <= 1e-12);
    }
  }

  Eigen::VectorXd neg = Eigen::VectorXd::Constant(8, -1.0);
  CHECK_THROWS(check_log_harnack_base(c, 0.0, grid, {neg}));
}

TEST_CASE("rate integral handles the K=0 limit") {
  CHECK(rate_integral(0.0, 0.7) == 0.7);
  CHECK(rate_integral(2.0, 0.7) == Catch::Approx((std::exp(1.4) - 1.0) / 2.0));
  CHECK(rate_integral(-3.0, 0.5) == Catch::Approx((std::exp(-1.5) - 1.0) / -3.0));
}

TEST_CASE("base space JSON round trip and validation") {
  const auto c = build_circle(5, 2.0);
  const auto j = to_json(c);
  const auto back = base_space_from_json(j);
  CHECK(back.states == c.states);
  CHECK((back.Q - c.Q).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.m - c.m).cwiseAbs().maxCoeff() == 0.0);
  CHECK((*back.d - *c.d).cwiseAbs().maxCoeff() == 0.0);

  // unknown key rejected
  auto bad = j;
  bad["extra"] = 1;
  CHECK_THROWS(base_space_from_json(bad));

  // broken detailed balance
  FiniteBaseSpace s = build_two_state(1.0);
  s.m(0) = 2.0;
  CHECK_THROWS(s.validate());

  // reducible: two disconnected pairs
  FiniteBaseSpace r;
  r.states = {"1", "2", "3", "4"};
  r.m = Eigen::VectorXd::Ones(4);
  r.Q = Eigen::MatrixXd::Zero(4, 4);
  r.Q(0, 1) = r.Q(1, 0) = 1.0;
  r.Q(2, 3) = r.Q(3, 2) = 1.0;
  r.Q(0, 0) = r.Q(1, 1) = r.Q(2, 2) = r.Q(3, 3) = -1.0;
  CHECK_THROWS(r.validate());
}

TEST_CASE("counter rng is deterministic and seed-separated") {
  CounterRng a(123), b(123), c(124);
  for (int i = 0; i < 100; ++i) {
    const double x = a.next_uniform();
    CHECK(x == b.next_uniform());
    CHECK(x > 0.0);
    CHECK(x < 1.0);
  }
  CHECK(a.next_u64() != c.next_u64());

  // poisson inversion: empirical mean of Poisson(2) over 20k draws
  CounterRng r(99);
  double acc = 0.0;
  for (int i = 0; i < 20000; ++i) acc += r.next_poisson(2.0);
  CHECK(acc / 20000.0 == Catch::Approx(2.0).margin(0.05));
  CHECK_THROWS(r.next_poisson(31.0));
}
