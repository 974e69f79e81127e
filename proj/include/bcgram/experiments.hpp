#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "bcgram/clustering.hpp"
#include "bcgram/dimred.hpp"
#include "bcgram/gram.hpp"
#include "bcgram/missingness.hpp"
#include "bcgram/simulate.hpp"

namespace bcgram {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Two-sided Kolmogorov-Smirnov statistic of a sample against N(0,1).
inline double ks_statistic_vs_normal(std::vector<double> sample) {
  if (sample.empty()) throw std::domain_error("empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double stat = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    double cdf = normal_cdf(sample[i]);
    stat = std::max(stat, std::abs(cdf - static_cast<double>(i) / n));
    stat = std::max(stat, std::abs(static_cast<double>(i + 1) / n - cdf));
  }
  return stat;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::domain_error("median of empty vector");
  std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Monte Carlo verification of the estimator's statistical properties

struct VerificationConfig {
  Eigen::Index n = 5;
  Eigen::Index d = 2000;
  int replicates = 200;
  std::uint64_t seed = 20240901;
  /// "complete", "homogeneous", or "heterogeneous"
  std::string regime = "heterogeneous";
  double p = 0.6;  // homogeneous retention probability
  /// rank-1 non-missingness factors p_is = c_i g_s, drawn uniformly
  double c_low = 0.55, c_high = 0.75, g_low = 0.8, g_high = 1.0;
  std::vector<Eigen::Index> d_sweep = {500, 2000, 8000};
  int sweep_replicates = 50;
  int ks_replicates = 0;  // 0 disables the CLT check
  Eigen::Index ks_d = 5000;
  int variance_replicates = 0;  // 0 reuses `replicates`

  void validate() const {
    if (n < 2 || d < 1 || replicates < 2)
      throw std::domain_error("verification config requires n >= 2, d >= 1, R >= 2");
    if (regime != "complete" && regime != "homogeneous" && regime != "heterogeneous")
      throw std::domain_error("regime must be complete, homogeneous, or heterogeneous");
    if (regime == "homogeneous" && (p <= 0.0 || p > 1.0))
      throw std::domain_error("homogeneous regime requires 0 < p <= 1");
  }
};

struct VerificationReport {
  Eigen::MatrixXd k_true;
  Eigen::MatrixXd mean_naive;
  Eigen::MatrixXd mean_corrected;
  Eigen::MatrixXd predicted_naive_mean;
  Eigen::MatrixXd bias_corrected_in_se;  // |mean - K| in standard-error units
  Eigen::MatrixXd naive_deviation_in_se;  // |mean_naive - prediction| in SE units
  Eigen::MatrixXd empirical_variance;
  VarianceReport variances;
  double bound_violation_fraction = 0.0;  // empirical variance outside [lower,upper]
  double max_variance_relative_error = 0.0;
  double ks_statistic = 0.0;
  std::vector<std::pair<Eigen::Index, double>> median_max_error_by_d;
};

inline ProbabilityModel verification_probs(const VerificationConfig& cfg,
                                           Eigen::Index d) {
  if (cfg.regime == "complete") return ProbabilityModel::constant(cfg.n, d, 1.0);
  if (cfg.regime == "homogeneous") return ProbabilityModel::constant(cfg.n, d, cfg.p);
  std::mt19937_64 rng = derive_stream(cfg.seed, 0x70726f62ULL, static_cast<std::uint64_t>(d));
  std::uniform_real_distribution<double> uc(cfg.c_low, cfg.c_high);
  std::uniform_real_distribution<double> ug(cfg.g_low, cfg.g_high);
  Eigen::VectorXd c(cfg.n), g(d);
  for (Eigen::Index i = 0; i < cfg.n; ++i) c(i) = uc(rng);
  for (Eigen::Index s = 0; s < d; ++s) g(s) = ug(rng);
  return ProbabilityModel::rank1(std::move(c), std::move(g));
}

/// One simulated draw of the observed matrix under the model: columns of the
/// complete matrix are iid N(0,K), then masked by Bernoulli(p(i,s)).
inline ObservedMatrix simulate_observation(const CovarianceMatrix& k,
                                           const ProbabilityModel& probs,
                                           std::mt19937_64& rng) {
  Eigen::MatrixXd complete = sample_gaussian_columns(k, probs.cols(), rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd mask(probs.rows(), probs.cols());
  for (Eigen::Index i = 0; i < mask.rows(); ++i)
    for (Eigen::Index s = 0; s < mask.cols(); ++s)
      mask(i, s) = unif(rng) < probs(i, s) ? 1.0 : 0.0;
  return ObservedMatrix{complete.cwiseProduct(mask), std::move(mask)};
}

inline GramEstimate corrected_estimate(const ObservedMatrix& obs,
                                       const ProbabilityModel& probs,
                                       const VerificationConfig& cfg) {
  if (cfg.regime == "complete") return naive_gram(obs);
  if (cfg.regime == "homogeneous") return bc_gram_homogeneous(obs, cfg.p);
  return bc_gram_heterogeneous(obs, probs);
}

inline VerificationReport run_estimator_verification(const VerificationConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = cfg.n;
  CovarianceMatrix k = random_psd_covariance(n, cfg.seed);
  ProbabilityModel probs = verification_probs(cfg, cfg.d);

  VerificationReport rep;
  rep.k_true = k.entries;
  rep.variances = variance_report(k, probs);

  // bias study at R = cfg.replicates
  Eigen::MatrixXd sum_naive = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd sum_corr = Eigen::MatrixXd::Zero(n, n);
  for (int r = 0; r < cfg.replicates; ++r) {
    std::mt19937_64 rng = derive_stream(cfg.seed, 0x62696173ULL, static_cast<std::uint64_t>(r));
    ObservedMatrix obs = simulate_observation(k, probs, rng);
    sum_naive += naive_gram(obs).entries;
    sum_corr += corrected_estimate(obs, probs, cfg).entries;
  }
  const double r_count = static_cast<double>(cfg.replicates);
  rep.mean_naive = sum_naive / r_count;
  rep.mean_corrected = sum_corr / r_count;

  Eigen::MatrixXd pair_sums = probs.pair_product_sums();
  pair_sums.diagonal() = probs.row_sums();
  const double d_count = static_cast<double>(cfg.d);
  rep.predicted_naive_mean = k.entries.cwiseProduct(pair_sums) / d_count;

  rep.bias_corrected_in_se.resize(n, n);
  rep.naive_deviation_in_se.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      double se_corr = std::sqrt(rep.variances.exact(i, j) / r_count);
      rep.bias_corrected_in_se(i, j) =
          std::abs(rep.mean_corrected(i, j) - k.entries(i, j)) / se_corr;
      // naive = corrected * (pair_sums/D); its SE scales the same way
      double se_naive = se_corr * pair_sums(i, j) / d_count;
      rep.naive_deviation_in_se(i, j) =
          std::abs(rep.mean_naive(i, j) - rep.predicted_naive_mean(i, j)) / se_naive;
    }

  // variance study
  int rv = cfg.variance_replicates > 0 ? cfg.variance_replicates : cfg.replicates;
  Eigen::MatrixXd vsum = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd vsum2 = Eigen::MatrixXd::Zero(n, n);
  for (int r = 0; r < rv; ++r) {
    std::mt19937_64 rng = derive_stream(cfg.seed, 0x766172ULL, static_cast<std::uint64_t>(r));
    ObservedMatrix obs = simulate_observation(k, probs, rng);
    Eigen::MatrixXd g = corrected_estimate(obs, probs, cfg).entries;
    vsum += g;
    vsum2 += g.cwiseProduct(g);
  }
  rep.empirical_variance =
      (vsum2 - vsum.cwiseProduct(vsum) / static_cast<double>(rv)) /
      static_cast<double>(rv - 1);
  Eigen::Index violations = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      double ev = rep.empirical_variance(i, j);
      if (ev < rep.variances.lower(i, j) || ev > rep.variances.upper(i, j)) ++violations;
      double rel = std::abs(ev - rep.variances.exact(i, j)) / rep.variances.exact(i, j);
      rep.max_variance_relative_error = std::max(rep.max_variance_relative_error, rel);
    }
  rep.bound_violation_fraction =
      static_cast<double>(violations) / static_cast<double>(n * n);

  // CLT check for entry (0,1)
  if (cfg.ks_replicates > 0) {
    ProbabilityModel ks_probs = verification_probs(cfg, cfg.ks_d);
    double mu_sum = 0.0, var_sum = 0.0;
    for (Eigen::Index s = 0; s < cfg.ks_d; ++s) {
      auto [mu, var] = moments_under_missingness(k, ks_probs, 0, 1, s);
      mu_sum += mu;
      var_sum += var;
    }
    CovarianceMatrix k2 = make_covariance(k.entries.topLeftCorner(2, 2));
    std::vector<double> z;
    z.reserve(cfg.ks_replicates);
    for (int r = 0; r < cfg.ks_replicates; ++r) {
      std::mt19937_64 rng = derive_stream(cfg.seed, 0x6b73ULL, static_cast<std::uint64_t>(r));
      Eigen::MatrixXd pair = sample_gaussian_columns(k2, cfg.ks_d, rng);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      double t = 0.0;
      for (Eigen::Index s = 0; s < cfg.ks_d; ++s) {
        double y0 = unif(rng) < ks_probs(0, s) ? pair(0, s) : 0.0;
        double y1 = unif(rng) < ks_probs(1, s) ? pair(1, s) : 0.0;
        t += y0 * y1;
      }
      z.push_back((t - mu_sum) / std::sqrt(var_sum));
    }
    rep.ks_statistic = ks_statistic_vs_normal(std::move(z));
  }

  // consistency sweep: median max-norm error vs D
  for (Eigen::Index d : cfg.d_sweep) {
    ProbabilityModel dp = verification_probs(cfg, d);
    std::vector<double> errs;
    errs.reserve(cfg.sweep_replicates);
    for (int r = 0; r < cfg.sweep_replicates; ++r) {
      std::mt19937_64 rng = derive_stream(cfg.seed, 0x737765ULL + static_cast<std::uint64_t>(d),
                                          static_cast<std::uint64_t>(r));
      ObservedMatrix obs = simulate_observation(k, dp, rng);
      VerificationConfig c2 = cfg;
      Eigen::MatrixXd g = corrected_estimate(obs, dp, c2).entries;
      errs.push_back((g - k.entries).cwiseAbs().maxCoeff());
    }
    rep.median_max_error_by_d.emplace_back(d, median(std::move(errs)));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Feature-subsampling dimension-reduction experiment

struct ExperimentConfig {
  Eigen::Index n = 300;
  Eigen::Index d_in = 3000;
  Eigen::Index d_latent = 2;
  int clusters = 3;
  double separation = 8.0;
  double noise_sd = 1.0;
  // constant added to every entry of the complete matrix before missingness,
  // mimicking the positive baseline of log-expression data; without it the
  // heterogeneous missingness barely distorts the naive Gram geometry
  double mean_shift = 35.0;
  MechanismSpec mechanism = MechanismSpec::rank1(0.4, 0.6, 0.7, 0.9, 20240901);
  std::vector<Eigen::Index> subset_sizes = {500, 1000, 2000, 3000};
  int subsets_per_size = 10;
  Eigen::Index embed_dims = 2;
  int kmeans_restarts = 30;
  std::uint64_t seed = 20240901;

  void validate() const {
    for (Eigen::Index s : subset_sizes)
      if (s < 1 || s > d_in)
        throw std::domain_error("subset size must lie in [1, d_in]");
    if (subsets_per_size < 1) throw std::domain_error("subsets_per_size must be >= 1");
  }
};

struct ExperimentRow {
  std::string pipeline;
  Eigen::Index subset_size;
  int replicate;
  double ari;
};

namespace detail {

inline ObservedMatrix select_columns(const ObservedMatrix& m,
                                     const std::vector<Eigen::Index>& cols) {
  Eigen::MatrixXd values(m.rows(), static_cast<Eigen::Index>(cols.size()));
  Eigen::MatrixXd mask(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    values.col(static_cast<Eigen::Index>(c)) = m.values.col(cols[c]);
    mask.col(static_cast<Eigen::Index>(c)) = m.mask.col(cols[c]);
  }
  return ObservedMatrix{std::move(values), std::move(mask)};
}

inline ProbabilityModel select_columns(const ProbabilityModel& p,
                                       const std::vector<Eigen::Index>& cols) {
  if (p.is_rank1()) {
    Eigen::VectorXd g(static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) g(static_cast<Eigen::Index>(c)) = p.feature_factors()(cols[c]);
    return ProbabilityModel::rank1(p.cell_factors(), std::move(g));
  }
  Eigen::MatrixXd full(p.rows(), static_cast<Eigen::Index>(cols.size()));
  Eigen::MatrixXd dense = p.dense();
  for (std::size_t c = 0; c < cols.size(); ++c)
    full.col(static_cast<Eigen::Index>(c)) = dense.col(cols[c]);
  return ProbabilityModel::full(std::move(full));
}

inline double pipeline_ari(const GramEstimate& g, const LabelVector& truth,
                           const ExperimentConfig& cfg, std::uint64_t seed) {
  Embedding emb = pca_from_gram(g, cfg.embed_dims, true);
  LabelVector labels =
      kmeans(emb.coords, cfg.clusters, cfg.kmeans_restarts, seed).labels;
  return ari(labels, truth);
}

}  // namespace detail

/// Runs the feature-subsampling study: for each subset size, draw random
/// feature subsets and compare complete-data PCA, naive PCA, and
/// bias-corrected PCA with true and with estimated probabilities, each
/// followed by k-means, scored by ARI against the ground truth.
inline std::vector<ExperimentRow> run_missingness_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  SimulatedDataset ds = simulate_ppca(cfg.n, cfg.d_in, cfg.d_latent, cfg.clusters,
                                      cfg.separation, cfg.noise_sd, cfg.seed);
  ds.complete.array() += cfg.mean_shift;
  with_missingness(ds, cfg.mechanism);
  ObservedMatrix complete_obs{ds.complete, Eigen::MatrixXd::Ones(cfg.n, cfg.d_in)};

  std::vector<ExperimentRow> rows;
  std::vector<Eigen::Index> all_cols(cfg.d_in);
  std::iota(all_cols.begin(), all_cols.end(), 0);
  for (Eigen::Index size : cfg.subset_sizes) {
    for (int rep = 0; rep < cfg.subsets_per_size; ++rep) {
      std::mt19937_64 rng = derive_stream(cfg.seed, 0x737562ULL + static_cast<std::uint64_t>(size),
                                          static_cast<std::uint64_t>(rep));
      std::vector<Eigen::Index> cols = all_cols;
      std::shuffle(cols.begin(), cols.end(), rng);
      cols.resize(static_cast<std::size_t>(size));
      std::sort(cols.begin(), cols.end());

      ObservedMatrix sub = detail::select_columns(ds.observed, cols);
      ObservedMatrix sub_complete = detail::select_columns(complete_obs, cols);
      ProbabilityModel sub_probs = detail::select_columns(ds.true_probs, cols);
      std::uint64_t km_seed = mix64(cfg.seed ^ static_cast<std::uint64_t>(size * 1000 + rep));

      rows.push_back({"complete-pca", size, rep,
                      detail::pipeline_ari(naive_gram(sub_complete), ds.truth, cfg, km_seed)});
      rows.push_back({"naive-pca", size, rep,
                      detail::pipeline_ari(naive_gram(sub), ds.truth, cfg, km_seed)});
      rows.push_back({"bc-pca-true", size, rep,
                      detail::pipeline_ari(bc_gram_heterogeneous(sub, sub_probs), ds.truth,
                                           cfg, km_seed)});
      ProbabilityModel est = estimate_probabilities(sub.mask);
      rows.push_back({"bc-pca-estimated", size, rep,
                      detail::pipeline_ari(bc_gram_heterogeneous(sub, est), ds.truth, cfg,
                                           km_seed)});
    }
  }
  return rows;
}

struct PipelineSummary {
  double mean = 0.0;
  double sd = 0.0;
};

inline PipelineSummary summarize(const std::vector<ExperimentRow>& rows,
                                 const std::string& pipeline, Eigen::Index subset_size) {
  std::vector<double> vals;
  for (const auto& r : rows)
    if (r.pipeline == pipeline && r.subset_size == subset_size) vals.push_back(r.ari);
  if (vals.empty()) throw std::domain_error("no rows for requested pipeline/size");
  double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
  double ss = 0.0;
  for (double v : vals) ss += (v - mean) * (v - mean);
  double sd = vals.size() > 1 ? std::sqrt(ss / (vals.size() - 1)) : 0.0;
  return {mean, sd};
}

}  // namespace bcgram
