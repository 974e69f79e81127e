#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "bcgram/missingness.hpp"
#include "bcgram/rng.hpp"

using namespace bcgram;

TEST_CASE("MCAR with p=1 keeps everything") {
  Eigen::MatrixXd complete = Eigen::MatrixXd::Random(10, 20);
  auto [obs, probs] = apply_missingness(complete, MechanismSpec::mcar(1.0, 42));
  CHECK(obs.mask.minCoeff() == 1.0);
  CHECK(obs.values == complete);
  CHECK(probs(3, 7) == 1.0);
}

TEST_CASE("MCAR observed fraction concentrates at p") {
  // 10^6 cells, binomial sd ~ 0.0005, 4-sigma band
  Eigen::MatrixXd complete = Eigen::MatrixXd::Ones(1000, 1000);
  auto [obs, probs] = apply_missingness(complete, MechanismSpec::mcar(0.6, 1));
  double frac = obs.mask.mean();
  CHECK(frac == Catch::Approx(0.6).margin(0.002));
}

TEST_CASE("rank1 mechanism realizes the documented missing fraction") {
  Eigen::MatrixXd complete = Eigen::MatrixXd::Ones(300, 3000);
  auto [obs, probs] =
      apply_missingness(complete, MechanismSpec::rank1(0.4, 0.6, 0.7, 0.9, 3));
  double missing = 1.0 - obs.mask.mean();
  CHECK(missing == Catch::Approx(0.40).margin(0.02));
}

TEST_CASE("identical MechanismSpec yields identical masks") {
  Eigen::MatrixXd complete = Eigen::MatrixXd::Random(40, 60);
  auto spec = MechanismSpec::rank1(0.3, 0.5, 0.6, 0.8, 99);
  auto [a, pa] = apply_missingness(complete, spec);
  auto [b, pb] = apply_missingness(complete, spec);
  CHECK(a.mask == b.mask);
  CHECK(pa.dense() == pb.dense());
}

TEST_CASE("per-row observation rate follows the mean probability") {
  const Eigen::Index n = 20, d = 10000;
  Eigen::MatrixXd complete = Eigen::MatrixXd::Ones(n, d);
  auto [obs, probs] =
      apply_missingness(complete, MechanismSpec::rank1(0.2, 0.8, 0.5, 1.0, 11));
  for (Eigen::Index i = 0; i < n; ++i) {
    double expected = 0.0, var = 0.0;
    for (Eigen::Index s = 0; s < d; ++s) {
      double p = probs(i, s);
      expected += p;
      var += p * (1.0 - p);
    }
    expected /= static_cast<double>(d);
    double sd = std::sqrt(var) / static_cast<double>(d);
    CHECK(obs.mask.row(i).mean() == Catch::Approx(expected).margin(3.0 * sd + 1e-12));
  }
}

TEST_CASE("estimate_probabilities on an all-ones mask is exactly 1") {
  ProbabilityModel est = estimate_probabilities(Eigen::MatrixXd::Ones(6, 9));
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index s = 0; s < 9; ++s) CHECK(est(i, s) == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("estimate_probabilities matches the hand-evaluated 2x2 case") {
  Eigen::MatrixXd mask(2, 2);
  mask << 1, 1, 1, 0;
  ProbabilityModel est = estimate_probabilities(mask);
  // M_1. = 2, M_2. = 1, M_.1 = 2, M_.2 = 1, m = 3, n_c = max(1, 0.75) = 1
  CHECK(est(0, 0) == Catch::Approx(1.0));
  CHECK(est(0, 1) == Catch::Approx(0.5));
  CHECK(est(1, 0) == Catch::Approx(0.5));
  CHECK(est(1, 1) == Catch::Approx(0.25));
}

TEST_CASE("estimate_probabilities rejects empty rows and columns") {
  Eigen::MatrixXd mask = Eigen::MatrixXd::Ones(3, 3);
  mask.row(1).setZero();
  CHECK_THROWS_WITH(estimate_probabilities(mask), Catch::Matchers::ContainsSubstring("row 1"));
  mask.row(1).setOnes();
  mask.col(2).setZero();
  CHECK_THROWS_WITH(estimate_probabilities(mask),
                    Catch::Matchers::ContainsSubstring("column 2"));
}

TEST_CASE("estimated probabilities satisfy the moment equations up to one scale") {
  std::mt19937_64 rng = derive_stream(5, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd mask(30, 50);
  for (Eigen::Index i = 0; i < 30; ++i)
    for (Eigen::Index s = 0; s < 50; ++s) mask(i, s) = unif(rng) < 0.6 ? 1.0 : 0.0;
  ProbabilityModel est = estimate_probabilities(mask);
  Eigen::MatrixXd p = est.dense();
  // row sums proportional to M_i. and column sums to M_.s with one global scale
  Eigen::VectorXd row_counts = mask.rowwise().sum();
  Eigen::VectorXd col_counts = mask.colwise().sum();
  double row_scale = p.row(0).sum() / row_counts(0);
  double col_scale = p.col(0).sum() / col_counts(0);
  for (Eigen::Index i = 1; i < 30; ++i)
    CHECK(p.row(i).sum() / row_counts(i) == Catch::Approx(row_scale).epsilon(1e-10));
  for (Eigen::Index s = 1; s < 50; ++s)
    CHECK(p.col(s).sum() / col_counts(s) == Catch::Approx(col_scale).epsilon(1e-10));
  CHECK(p.maxCoeff() <= 1.0 + 1e-12);
}

TEST_CASE("recovery of known rank-1 probabilities at scale") {
  const Eigen::Index n = 300, d = 3000;
  std::mt19937_64 rng = derive_stream(17, 0);
  // factors near 1 keep the binomial noise of the N=300 column sums below the
  // tolerance; at moderate probabilities the moment estimator's sampling error
  // alone exceeds 0.05
  std::uniform_real_distribution<double> uc(0.99, 0.998), ug(0.995, 1.0);
  Eigen::VectorXd c(n), g(d);
  for (Eigen::Index i = 0; i < n; ++i) c(i) = uc(rng);
  for (Eigen::Index s = 0; s < d; ++s) g(s) = ug(rng);
  ProbabilityModel truth = ProbabilityModel::rank1(c, g);
  Eigen::MatrixXd mask = sample_mask(truth, 7);
  ProbabilityModel est = estimate_probabilities(mask);
  double max_err = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index s = 0; s < d; ++s)
      max_err = std::max(max_err, std::abs(est(i, s) - truth(i, s)));
  CHECK(max_err <= 0.05);
}

TEST_CASE("rank-1 probability recovery is relatively accurate at moderate p") {
  // moderate regime: products are noisier, so compare in relative terms
  const Eigen::Index n = 300, d = 3000;
  std::mt19937_64 rng = derive_stream(18, 0);
  std::uniform_real_distribution<double> uc(0.55, 0.8), ug(0.8, 1.0);
  Eigen::VectorXd c(n), g(d);
  for (Eigen::Index i = 0; i < n; ++i) c(i) = uc(rng);
  for (Eigen::Index s = 0; s < d; ++s) g(s) = ug(rng);
  ProbabilityModel truth = ProbabilityModel::rank1(c, g);
  Eigen::MatrixXd mask = sample_mask(truth, 7);
  ProbabilityModel est = estimate_probabilities(mask);
  double max_rel = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index s = 0; s < d; ++s)
      max_rel = std::max(max_rel, std::abs(est(i, s) / truth(i, s) - 1.0));
  CHECK(max_rel <= 0.25);
}

TEST_CASE("mechanism specs validate their parameters") {
  CHECK_THROWS_AS(MechanismSpec::mcar(0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(MechanismSpec::mcar(1.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(MechanismSpec::rank1(0.6, 0.4, 0.7, 0.9, 1), std::invalid_argument);
  CHECK_THROWS_AS(MechanismSpec::rank1(0.4, 0.6, 0.9, 0.7, 1), std::invalid_argument);
}
