#include <doctest.h>

#include <cmath>
#include <vector>

#include "test_support.hpp"
#include "varopt/error.hpp"
#include "varopt/numeric.hpp"
#include "varopt/oracle.hpp"
#include "varopt/rbm.hpp"

using namespace varopt;
using varopt::testing::random_rbm;
using varopt::testing::stationarity_error;

namespace {

RbmParams tiny(double w) {
  Eigen::MatrixXd W(1, 1);
  W << w;
  return RbmParams(W, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1));
}

double brute_log_pstar(const VisibleState& v, const RbmParams& params) {
  const int m = params.n_hidden();
  std::vector<double> terms;
  for (std::uint64_t h = 0; h < (1ULL << m); ++h) {
    Eigen::VectorXd hv(m);
    for (int i = 0; i < m; ++i) hv[i] = static_cast<double>((h >> i) & 1ULL);
    terms.push_back(-energy(hv, v, params));
  }
  return log_sum_exp(terms);
}

}  // namespace

TEST_CASE("params reject inconsistent shapes and non-finite entries") {
  CHECK_THROWS_AS(RbmParams(Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Zero(2),
                            Eigen::VectorXd::Zero(2)),
                  ContractViolation);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(1, 1);
  w(0, 0) = std::nan("");
  CHECK_THROWS_AS(RbmParams(w, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)),
                  ContractViolation);
  CHECK_THROWS_AS(VisibleState(std::vector<int>{0, 2}), ContractViolation);
}

TEST_CASE("energy") {
  const RbmParams zero = RbmParams::zeros(3, 2);
  CHECK(energy(Eigen::Vector2d(1, 0), VisibleState(std::vector<int>{1, 0, 1}), zero) == 0.0);

  Eigen::MatrixXd W(1, 2);
  W << 1, 2;
  const RbmParams p(W, Eigen::VectorXd::Constant(1, 0.5), Eigen::Vector2d(-1, 0));
  CHECK(energy(Eigen::VectorXd::Ones(1), VisibleState(std::vector<int>{1, 1}), p) ==
        doctest::Approx(-2.5).epsilon(1e-15));

  const RbmParams r = random_rbm(4, 3, 1.0, 1.0, 5);
  const RbmParams only_b(r.weights(), r.hidden_bias(), Eigen::VectorXd::Ones(4));
  CHECK(energy(Eigen::VectorXd::Zero(3), VisibleState(std::vector<int>{1, 1, 1, 1}), only_b) ==
        -4.0);

  CHECK_THROWS_AS(energy(Eigen::VectorXd::Zero(2), VisibleState(std::vector<int>{1, 1}), p),
                  ContractViolation);
}

TEST_CASE("log_pstar closed form") {
  CHECK(log_pstar(VisibleState(std::vector<int>{1, 0}), RbmParams::zeros(2, 3)) ==
        doctest::Approx(3 * std::log(2.0)).epsilon(1e-14));
  CHECK(log_pstar(VisibleState(std::vector<int>{1}), tiny(1.0)) ==
        doctest::Approx(1.3132616875182228).epsilon(1e-14));

  // Saturated pre-activations stay finite.
  const double big = log_pstar(VisibleState(std::vector<int>{1}), tiny(800.0));
  CHECK(big == doctest::Approx(800.0));
  CHECK(log_pstar(VisibleState(std::vector<int>{1}), tiny(-800.0)) >= 0.0);
}

TEST_CASE("log_pstar equals the explicit hidden-state sum") {
  std::uint64_t seed = 0;
  for (int m : {1, 3, 6, 9, 12}) {
    const RbmParams p = random_rbm(5, m, 1.5, 1.0, ++seed);
    for (std::uint64_t s = 0; s < 32; s += 5) {
      const VisibleState v = VisibleState::from_index(s, 5);
      CHECK(std::abs(log_pstar(v, p) - brute_log_pstar(v, p)) < 1e-10);
    }
  }
}

TEST_CASE("geometric path") {
  const RbmParams target = random_rbm(4, 3, 1.0, 0.5, 1);
  Eigen::VectorXd ba(4);
  ba << 0.3, -0.2, 0.0, 1.0;
  const GeometricPath path(RbmParams::factorial(ba, 2), target);

  CHECK_THROWS_AS(GeometricPath(target, target), ContractViolation);
  CHECK_THROWS_AS(GeometricPath(RbmParams::zeros(3, 1), target), ContractViolation);

  SUBCASE("endpoints and affinity") {
    for (std::uint64_t s = 0; s < 16; ++s) {
      const VisibleState v = VisibleState::from_index(s, 4);
      CHECK(log_pstar_beta(v, 0.0, path) == log_pstar(v, path.base()));
      CHECK(log_pstar_beta(v, 1.0, path) == log_pstar(v, path.target()));
      const double l0 = log_pstar_beta(v, 0.2, path);
      const double l1 = log_pstar_beta(v, 0.5, path);
      const double l2 = log_pstar_beta(v, 0.8, path);
      CHECK(std::abs((l1 - l0) - (l2 - l1)) < 1e-12);
      CHECK(dlog_pstar_dbeta(v, path) ==
            log_pstar_beta(v, 1.0, path) - log_pstar_beta(v, 0.0, path));
      const double eps = 1e-3;
      const double fd = (log_pstar_beta(v, 0.5 + eps, path) -
                         log_pstar_beta(v, 0.5 - eps, path)) / (2 * eps);
      CHECK(fd == doctest::Approx(dlog_pstar_dbeta(v, path)).epsilon(1e-9));
    }
  }

  SUBCASE("beta range") {
    const VisibleState v = VisibleState::from_index(3, 4);
    CHECK_THROWS_AS(log_pstar_beta(v, -0.1, path), ContractViolation);
    CHECK_THROWS_AS(log_pstar_beta(v, 1.1, path), ContractViolation);
  }

  SUBCASE("degenerate path") {
    const RbmParams f = RbmParams::factorial(ba, 2);
    const GeometricPath same(f, f);
    for (std::uint64_t s = 0; s < 16; ++s) {
      const VisibleState v = VisibleState::from_index(s, 4);
      CHECK(dlog_pstar_dbeta(v, same) == 0.0);
      CHECK(log_pstar_beta(v, 0.3, same) == doctest::Approx(log_pstar_beta(v, 0.9, same)));
    }
  }

  SUBCASE("single visible bias") {
    const GeometricPath p(RbmParams::zeros(1, 1),
                          RbmParams(Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Zero(1),
                                    Eigen::VectorXd::Ones(1)));
    CHECK(dlog_pstar_dbeta(VisibleState(std::vector<int>{0}), p) == 0.0);
    CHECK(dlog_pstar_dbeta(VisibleState(std::vector<int>{1}), p) == 1.0);
  }

  SUBCASE("base log partition function") {
    CHECK(path.log_z_base() == doctest::Approx(exact_log_z(path.base()).log_z).epsilon(1e-14));
  }
}

TEST_CASE("fast sweep log-odds agree with the reference conditional") {
  const RbmParams target = random_rbm(6, 5, 2.0, 1.0, 17);
  const GeometricPath path(RbmParams::zeros(6, 1), target);
  for (std::uint64_t s = 0; s < 64; s += 7) {
    const VisibleState v = VisibleState::from_index(s, 6);
    for (int j = 0; j < 6; ++j) {
      VisibleState on = v, off = v;
      on.set(j, true);
      off.set(j, false);
      const double ref = log_pstar_beta(on, 0.37, path) - log_pstar_beta(off, 0.37, path);
      CHECK(site_log_odds(v, j, 0.37, path) == doctest::Approx(ref).epsilon(1e-12));
    }
  }
}

TEST_CASE("sampler follows the reference conditionals draw for draw") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Eigen::VectorXd ba = Eigen::VectorXd::Constant(8, 0.3 * static_cast<double>(seed));
    const GeometricPath path(RbmParams::factorial(ba, 1), random_rbm(8, 6, 2.0, 1.0, 40 + seed));
    for (double beta : {0.0, 0.3, 0.8, 1.0})
      CHECK(varopt::testing::sweep_disagreement(path, beta, 2000, seed) == 0.0);
  }
  // Saturated weights take the softplus fallback.
  const GeometricPath hot(RbmParams::zeros(5, 1), random_rbm(5, 4, 200.0, 5.0, 2));
  CHECK(varopt::testing::sweep_disagreement(hot, 0.5, 2000, 9) == 0.0);
}

TEST_CASE("heat-bath sweep leaves p_beta exactly invariant") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const RbmParams target = random_rbm(3, 2, 2.0, 1.0, 100 + seed);
    Eigen::VectorXd ba = Eigen::VectorXd::Zero(3);
    ba[0] = 0.5 * static_cast<double>(seed);
    const GeometricPath path(RbmParams::factorial(ba, 1), target);
    for (double beta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      CHECK(stationarity_error(path, beta) < 1e-12);
    }
  }
  // Larger state space, D + M = 14.
  const GeometricPath wide(RbmParams::zeros(7, 1), random_rbm(7, 7, 1.0, 0.5, 9));
  CHECK(stationarity_error(wide, 0.6) < 1e-12);
}

TEST_CASE("gibbs_transition matches the exact kernel in distribution") {
  const RbmParams target = random_rbm(3, 2, 1.5, 0.5, 3);
  const GeometricPath path(RbmParams::zeros(3, 1), target);
  const double beta = 0.7;
  const auto kernel = varopt::testing::exact_sweep_kernel(path, beta);
  const VisibleState start = VisibleState::from_index(5, 3);
  Rng rng(42);
  const int n = 200000;
  std::vector<double> counts(8, 0.0);
  for (int t = 0; t < n; ++t) counts[gibbs_transition(start, beta, path, rng).index()] += 1.0;
  for (int s = 0; s < 8; ++s) {
    const double p = kernel[5][s];
    const double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(counts[s] / n - p) < 4 * se + 1e-12);
  }
}

TEST_CASE("beta = 0 with a factorial base mixes in one sweep") {
  Eigen::VectorXd ba(3);
  ba << -1.0, 0.0, 2.0;
  const GeometricPath path(RbmParams::factorial(ba, 1), random_rbm(3, 2, 3.0, 1.0, 8));
  const auto kernel = varopt::testing::exact_sweep_kernel(path, 0.0);
  const auto p = PathEnumeration(path).probabilities(0.0);
  for (std::size_t from = 0; from < 8; ++from)
    for (std::size_t to = 0; to < 8; ++to) CHECK(std::abs(kernel[from][to] - p[to]) < 1e-14);

  Rng rng(1);
  const int n = 100000;
  std::vector<double> counts(8, 0.0);
  const VisibleState start = VisibleState::from_index(7, 3);
  for (int t = 0; t < n; ++t) counts[gibbs_transition(start, 0.0, path, rng).index()] += 1.0;
  for (int s = 0; s < 8; ++s) CHECK(std::abs(counts[s] / n - p[s]) < 4 * std::sqrt(p[s] / n));
}

TEST_CASE("kernel does not depend on beta when base equals target") {
  Eigen::VectorXd ba(3);
  ba << 0.2, -0.4, 1.1;
  const RbmParams f = RbmParams::factorial(ba, 1);
  const GeometricPath path(f, f);
  const auto k1 = varopt::testing::exact_sweep_kernel(path, 0.1);
  const auto k2 = varopt::testing::exact_sweep_kernel(path, 0.9);
  for (std::size_t a = 0; a < 8; ++a)
    for (std::size_t b = 0; b < 8; ++b) CHECK(k1[a][b] == doctest::Approx(k2[a][b]));
  for (double beta : {0.1, 0.9}) {
    Rng r1(5), r2(5);
    VisibleState v1 = VisibleState::from_index(2, 3);
    VisibleState v2 = v1;
    v1 = gibbs_transition(v1, beta, path, r1);
    v2 = gibbs_transition(v2, 0.5, path, r2);
    CHECK(v1.index() == v2.index());
  }
}

TEST_CASE("sample_base") {
  Eigen::VectorXd ba(4);
  ba << 0.0, 20.0, -1.0, 1.5;
  const GeometricPath path(RbmParams::factorial(ba, 1), random_rbm(4, 2, 1.0, 1.0, 2));
  Rng rng(7);
  const int n = 100000;
  std::vector<double> ones(4, 0.0);
  for (int t = 0; t < n; ++t) {
    const VisibleState v = sample_base(path, rng);
    for (int j = 0; j < 4; ++j) ones[j] += v[j];
  }
  for (int j = 0; j < 4; ++j) {
    const double p = sigmoid(ba[j]);
    const double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(ones[j] / n - p) <= 3 * se + 1e-12);
  }
  CHECK(ones[1] == n);
}
