#include <catch2/catch.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "helpers.hpp"
#include "pgs/reconstruct.hpp"

using namespace pgs;

TEST_CASE("sampling a product signal") {
  auto eng = th::engine(201);
  const ProductSignal x{th::gaussian_matrix(5, 6, eng)};
  SECTION("full selection returns the signal") {
    const SamplingDesign d{th::iota_set(6), th::iota_set(5), {1, 1, 11}};
    REQUIRE((sample(x, d).y - x.values).norm() == 0.0);
  }
  SECTION("singleton sets pick one entry") {
    const SamplingDesign d{{4}, {2}, {1, 1, 2}};
    const SampledObservation obs = sample(x, d);
    REQUIRE(obs.y.rows() == 1);
    REQUIRE(obs.y.cols() == 1);
    REQUIRE(obs.y(0, 0) == x.values(2, 4));
  }
  SECTION("vectorized form matches the explicit selection matrices") {
    const SamplingDesign d{{0, 2, 5}, {1, 3}, {2, 2, 5}};
    const SampledObservation obs = sample(x, d);
    const Eigen::MatrixXd phi1 = th::selection_matrix(6, d.set1);
    const Eigen::MatrixXd phi2 = th::selection_matrix(5, d.set2);
    const Eigen::VectorXd y_vec = th::kron_oracle(phi1, phi2) * vectorize(x);
    REQUIRE((vectorize(ProductSignal{obs.y}) - y_vec).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("out-of-range indices are rejected") {
    SamplingDesign d{{0, 6}, {0}, {1, 1, 3}};
    REQUIRE_THROWS_AS(sample(x, d), std::invalid_argument);
  }
}

TEST_CASE("coefficient estimation") {
  auto eng = th::engine(203);
  SECTION("noiseless bandlimited signals are recovered exactly") {
    for (int trial = 0; trial < 5; ++trial) {
      const int n1 = 8 + int(uniform_index(eng, 8));
      const int n2 = 8 + int(uniform_index(eng, 8));
      const int k1 = 2 + int(uniform_index(eng, 3));
      const int k2 = 2 + int(uniform_index(eng, 3));
      const ProductModel model = th::random_model(n1, k1, n2, k2, eng);
      const Budgets budgets{k1, k2, k1 + k2 + 3};
      const SamplingDesign d = greedy_design(model, budgets);
      REQUIRE(check_identifiability(model, d).identifiable);

      const Eigen::MatrixXd coeffs = th::gaussian_matrix(k2, k1, eng);
      const ProductSignal x = synthesize(model, coeffs);
      const Eigen::MatrixXd estimated = estimate_coefficients(sample(x, d), model);
      REQUIRE((estimated - coeffs).norm() / coeffs.norm() <= 1e-8);
      REQUIRE(relative_error(reconstruct_signal(estimated, model), x) <= 1e-8);
    }
  }
  SECTION("full selection reduces to analyze on the support") {
    const ProductModel model = th::random_model(6, 2, 5, 3, eng);
    const SamplingDesign d{th::iota_set(6), th::iota_set(5), {2, 3, 11}};
    const ProductSignal x{th::gaussian_matrix(5, 6, eng)};
    const Eigen::MatrixXd via_estimate = estimate_coefficients(sample(x, d), model);
    const Eigen::MatrixXd via_analyze = analyze(model, x);
    REQUIRE((via_estimate - via_analyze).cwiseAbs().maxCoeff() <= 1e-10);
  }
  SECTION("matches the explicit Kronecker pseudo-inverse of the vectorized model") {
    const ProductModel model = th::random_model(7, 2, 6, 2, eng);
    const SamplingDesign d = greedy_design(model, Budgets{2, 2, 7});
    const ProductSignal x{th::gaussian_matrix(6, 7, eng)};
    const SampledObservation obs = sample(x, d);

    const Eigen::MatrixXd a1 = select_rows(model.basis1.u, d.set1);
    const Eigen::MatrixXd a2 = select_rows(model.basis2.u, d.set2);
    const Eigen::VectorXd xf_vec =
        th::pinv_oracle(th::kron_oracle(a1, a2)) * vectorize(ProductSignal{obs.y});
    const Eigen::MatrixXd expected =
        Eigen::Map<const Eigen::MatrixXd>(xf_vec.data(), 2, 2);
    const Eigen::MatrixXd estimated = estimate_coefficients(obs, model);
    REQUIRE((estimated - expected).cwiseAbs().maxCoeff() <= 1e-9);
  }
  SECTION("rank-deficient factors raise errors naming the factor") {
    Eigen::MatrixXd u1(3, 2);
    u1 << 1, 0,
          0, 1,
          0, 0;
    const ProductModel model{th::reduced_from(u1),
                             th::reduced_from(th::random_orthonormal(4, 2, eng))};
    const ProductSignal x{th::gaussian_matrix(4, 3, eng)};
    SamplingDesign d;
    d.set1 = {0, 2};  // rows e1 and zero: rank deficient
    d.set2 = {0, 1, 2};
    d.budgets = {2, 2, 5};
    try {
      estimate_coefficients(sample(x, d), model);
      FAIL("expected SingularSystemError");
    } catch (const SingularSystemError& e) {
      REQUIRE(e.factor() == 1);
      REQUIRE(std::string(e.what()).find("factor 1") != std::string::npos);
    }
    SamplingDesign short2;
    short2.set1 = {0, 1};
    short2.set2 = {0};  // fewer rows than K2 = 2
    short2.budgets = {2, 2, 3};
    try {
      estimate_coefficients(sample(x, short2), model);
      FAIL("expected SingularSystemError");
    } catch (const SingularSystemError& e) {
      REQUIRE(e.factor() == 2);
    }
  }
}

TEST_CASE("fisher information") {
  auto eng = th::engine(211);
  const ProductModel model = th::random_model(6, 2, 5, 3, eng);
  SECTION("full selection of orthonormal bases gives identities") {
    const SamplingDesign d{th::iota_set(6), th::iota_set(5), {2, 3, 11}};
    const auto [t1, t2] = fisher_information(model, d);
    REQUIRE((t1 - Eigen::MatrixXd::Identity(2, 2)).norm() <= 1e-10);
    REQUIRE((t2 - Eigen::MatrixXd::Identity(3, 3)).norm() <= 1e-10);
  }
  SECTION("empty factor selection gives the zero matrix") {
    SamplingDesign d;
    d.set2 = {0, 1};
    const auto [t1, t2] = fisher_information(model, d);
    REQUIRE(t1.isZero(0.0));
    REQUIRE(t1.rows() == 2);
  }
  SECTION("the full information matrix is the Kronecker product of the factors") {
    const SamplingDesign d{{0, 2, 3}, {1, 2, 4}, {2, 3, 6}};
    const auto [t1, t2] = fisher_information(model, d);
    const Eigen::MatrixXd a1 = select_rows(model.basis1.u, d.set1);
    const Eigen::MatrixXd a2 = select_rows(model.basis2.u, d.set2);
    const Eigen::MatrixXd big = th::kron_oracle(a1, a2);
    const Eigen::MatrixXd t_explicit = big.transpose() * big;
    REQUIRE((t_explicit - th::kron_oracle(t1, t2)).norm() <= 1e-10);
  }
}

TEST_CASE("pseudo-inverse Kronecker identity") {
  auto eng = th::engine(213);
  const Eigen::MatrixXd a = th::gaussian_matrix(5, 3, eng);
  const Eigen::MatrixXd b = th::gaussian_matrix(6, 2, eng);
  const Eigen::MatrixXd lhs = th::pinv_oracle(th::kron_oracle(a, b));
  const Eigen::MatrixXd rhs = th::kron_oracle(th::pinv_oracle(a), th::pinv_oracle(b));
  REQUIRE((lhs - rhs).norm() <= 1e-8);

  // the library's left pseudo-inverse agrees with the oracle on tall input
  REQUIRE((left_pseudo_inverse(a, 1e-10, 1) - th::pinv_oracle(a)).norm() <= 1e-10);
}

TEST_CASE("reconstruction metrics") {
  auto eng = th::engine(217);
  const ProductSignal x{th::gaussian_matrix(4, 5, eng)};
  SECTION("relative error identities") {
    REQUIRE(relative_error(x, x) == 0.0);
    REQUIRE(relative_error(ProductSignal{Eigen::MatrixXd::Zero(4, 5)}, x) == 1.0);
    REQUIRE(relative_error(ProductSignal{2.0 * x.values}, x) == Approx(1.0).margin(1e-12));
  }
  SECTION("zero reference is undefined") {
    const ProductSignal zero{Eigen::MatrixXd::Zero(4, 5)};
    REQUIRE_THROWS_AS(relative_error(x, zero), std::domain_error);
  }
  SECTION("multi-channel error concatenates channels") {
    const ProductSignal y{th::gaussian_matrix(4, 5, eng)};
    const ProductSignal xhat{x.values * 0.9};
    const ProductSignal yhat{y.values * 1.1};
    const double expected = std::sqrt(
        ((xhat.values - x.values).squaredNorm() + (yhat.values - y.values).squaredNorm()) /
        (x.values.squaredNorm() + y.values.squaredNorm()));
    REQUIRE(relative_error({xhat, yhat}, {x, y}) == Approx(expected).epsilon(1e-12));
  }
  SECTION("masked rmse") {
    ProductSignal est{Eigen::MatrixXd::Zero(3, 3)};
    est.values << 1, 2, 3,
                  4, 5, 6,
                  7, 8, 9;
    std::vector<MaskedEntry> exact{{0, 0, 1.0}, {1, 2, 6.0}, {2, 1, 8.0}};
    REQUIRE(masked_rmse(est, exact) == 0.0);

    std::vector<MaskedEntry> shifted{{0, 0, 1.5}, {1, 2, 6.5}, {2, 1, 8.5}};
    REQUIRE(masked_rmse(est, shifted) == Approx(0.5).margin(1e-12));

    // residuals (1, 2, 2): rmse = sqrt((1 + 4 + 4) / 3) = sqrt(3)
    std::vector<MaskedEntry> residuals{{0, 0, 0.0}, {0, 1, 0.0}, {1, 0, 2.0}};
    REQUIRE(masked_rmse(est, residuals) == Approx(std::sqrt(3.0)).epsilon(1e-12));

    REQUIRE_THROWS_AS(masked_rmse(est, {}), std::domain_error);
    REQUIRE_THROWS_AS(masked_rmse(est, {MaskedEntry{3, 0, 1.0}}), std::invalid_argument);
  }
}

TEST_CASE("noise scaling follows the Fisher information") {
  auto eng = th::engine(219);
  const Graph g1 = th::random_connected_graph(10, 0.3, eng);
  const Graph g2 = th::random_connected_graph(8, 0.3, eng);
  const ProductModel model = th::graph_model(g1, g2, 3, 2);
  const Budgets budgets{3, 2, 8};
  const SamplingDesign d = greedy_design(model, budgets);
  REQUIRE(check_identifiability(model, d).identifiable);

  const auto [t1, t2] = fisher_information(model, d);
  const double theoretical_mse =
      t1.inverse().trace() * t2.inverse().trace();  // sigma^2 = 1 scaling below

  const double sigma = 0.05;
  const Eigen::MatrixXd coeffs = th::gaussian_matrix(2, 3, eng);
  const SampledObservation clean = sample(synthesize(model, coeffs), d);

  std::normal_distribution<double> gauss(0.0, 1.0);
  double total_sq = 0.0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    SampledObservation noisy = clean;
    for (Eigen::Index i = 0; i < noisy.y.rows(); ++i) {
      for (Eigen::Index j = 0; j < noisy.y.cols(); ++j) {
        noisy.y(i, j) += sigma * gauss(eng);
      }
    }
    total_sq += (estimate_coefficients(noisy, model) - coeffs).squaredNorm();
  }
  const double empirical = total_sq / trials;
  const double expected = sigma * sigma * theoretical_mse;
  REQUIRE(empirical == Approx(expected).epsilon(0.10));
}

TEST_CASE("greedy designs beat the best of 100 random designs") {
  // structured spatial factor (8 tight clusters of 5 markers) at a tight
  // budget; empirical MSE with common noise across designs
  auto eng = th::engine(223);
  const int clusters = 8, per = 5, n2 = clusters * per, n1 = 12;
  Eigen::MatrixXd pts(n2, 2);
  for (int c = 0; c < clusters; ++c) {
    for (int i = 0; i < per; ++i) {
      pts.row(c * per + i) << 10.0 * c + 0.3 * i, 0.1 * ((c + i) % 3);
    }
  }
  const Graph g2 = build_knn_graph(pts, 2, Metric::euclidean);
  const Graph g1 = build_cycle_graph(n1);
  const ProductModel model = th::graph_model(g1, g2, 4, 16);
  const Budgets budgets{4, 16, 24};

  const SamplingDesign greedy = greedy_design(model, budgets);
  REQUIRE(check_identifiability(model, greedy).identifiable);

  const Eigen::MatrixXd coeffs = th::gaussian_matrix(16, 4, eng);
  const ProductSignal x = synthesize(model, coeffs);
  const double sigma = 0.1;

  const int trials = 200;
  // common random numbers: one noise panel per trial over the full graph
  std::vector<Eigen::MatrixXd> noise;
  noise.reserve(trials);
  for (int t = 0; t < trials; ++t) {
    noise.push_back(sigma * th::gaussian_matrix(n2, n1, eng));
  }
  auto empirical_mse = [&](const SamplingDesign& d) {
    double total = 0.0;
    for (int t = 0; t < trials; ++t) {
      SampledObservation obs = sample(x, d);
      obs.y += sample(ProductSignal{noise[std::size_t(t)]}, d).y;
      total += (estimate_coefficients(obs, model) - coeffs).squaredNorm();
    }
    return total / trials;
  };

  const double greedy_mse = empirical_mse(greedy);
  double best_random = std::numeric_limits<double>::infinity();
  int identifiable_count = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SamplingDesign d = random_design(n1, n2, budgets, seed);
    if (!check_identifiability(model, d).identifiable) continue;
    ++identifiable_count;
    best_random = std::min(best_random, empirical_mse(d));
  }
  INFO("identifiable random designs: " << identifiable_count);
  REQUIRE(identifiable_count > 0);
  REQUIRE(greedy_mse < best_random);
}
