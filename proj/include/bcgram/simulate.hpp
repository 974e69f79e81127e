#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/SVD>
#include <cstdint>
#include <random>
#include <stdexcept>

#include "bcgram/clustering.hpp"
#include "bcgram/matrix_io.hpp"
#include "bcgram/missingness.hpp"
#include "bcgram/rng.hpp"

namespace bcgram {

/// Random well-conditioned PSD covariance: A A^T / n + 0.1 I.
inline CovarianceMatrix random_psd_covariance(Eigen::Index n, std::uint64_t seed,
                                              double ridge = 0.1) {
  std::mt19937_64 rng = derive_stream(seed, 0x636f76ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = normal(rng);
  Eigen::MatrixXd k = a * a.transpose() / static_cast<double>(n);
  k += ridge * Eigen::MatrixXd::Identity(n, n);
  return CovarianceMatrix{std::move(k)};
}

/// N x D matrix whose columns are iid N(0, K) draws.
inline Eigen::MatrixXd sample_gaussian_columns(const CovarianceMatrix& k,
                                               Eigen::Index d, std::mt19937_64& rng) {
  const Eigen::Index n = k.size();
  Eigen::LLT<Eigen::MatrixXd> llt(k.entries);
  if (llt.info() != Eigen::Success)
    throw std::domain_error("covariance matrix is not positive definite");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd z(n, d);
  for (Eigen::Index s = 0; s < d; ++s)
    for (Eigen::Index i = 0; i < n; ++i) z(i, s) = normal(rng);
  return llt.matrixL() * z;
}

/// Complete matrix, ground-truth labels, true latent points, and (after a
/// mechanism is applied) the realized observed matrix with its generating
/// probabilities.
struct SimulatedDataset {
  Eigen::MatrixXd complete;
  ObservedMatrix observed;
  LabelVector truth;
  ProbabilityModel true_probs = ProbabilityModel::constant(2, 1, 1.0);
  Eigen::MatrixXd latent;
};

/// k centroids pairwise `separation` apart (exactly so when d_latent >= k-1;
/// truncated to the leading coordinates otherwise), centered at the origin.
inline Eigen::MatrixXd simplex_centroids(int k, Eigen::Index d_latent,
                                         double separation) {
  Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(k, k);
  basis.array() -= 1.0 / static_cast<double>(k);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(basis, Eigen::ComputeThinU);
  Eigen::Index r = std::min<Eigen::Index>(k - 1, d_latent);
  Eigen::MatrixXd coords = Eigen::MatrixXd::Zero(k, d_latent);
  for (Eigen::Index c = 0; c < r; ++c)
    coords.col(c) = svd.matrixU().col(c) * svd.singularValues()(c);
  // centered identity vertices are sqrt(2) apart
  coords *= separation / std::sqrt(2.0);
  return coords;
}

/// PPCA map: complete = X W^T + noise with noise iid N(0, noise_sd^2).
inline Eigen::MatrixXd ppca_complete(const Eigen::MatrixXd& latent,
                                     const Eigen::MatrixXd& loading, double noise_sd,
                                     std::mt19937_64& rng) {
  Eigen::MatrixXd out = latent * loading.transpose();
  if (noise_sd > 0.0) {
    std::normal_distribution<double> normal(0.0, noise_sd);
    for (Eigen::Index i = 0; i < out.rows(); ++i)
      for (Eigen::Index s = 0; s < out.cols(); ++s) out(i, s) += normal(rng);
  }
  return out;
}

/// Clustered PPCA data: latent points are unit Gaussians around simplex
/// centroids, pushed through a random 1/sqrt(d_latent)-scaled Gaussian
/// loading matrix. Cluster sizes are balanced, remainder to the first
/// clusters.
inline SimulatedDataset simulate_ppca(Eigen::Index n, Eigen::Index d_in,
                                      Eigen::Index d_latent, int k, double separation,
                                      double noise_sd, std::uint64_t seed) {
  if (k < 1 || static_cast<Eigen::Index>(k) > n)
    throw std::domain_error("simulate_ppca requires 1 <= k <= n");
  if (d_latent >= d_in)
    throw std::domain_error("simulate_ppca requires d_latent < d_in");
  if (noise_sd < 0.0) throw std::domain_error("noise_sd must be nonnegative");
  std::mt19937_64 rng = derive_stream(seed, 0x70706361ULL);
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::MatrixXd centroids = simplex_centroids(k, d_latent, separation);
  SimulatedDataset ds;
  ds.latent.resize(n, d_latent);
  ds.truth.resize(n);
  Eigen::Index base = n / k, rem = n % k, row = 0;
  for (int c = 0; c < k; ++c) {
    Eigen::Index size = base + (c < rem ? 1 : 0);
    for (Eigen::Index t = 0; t < size; ++t, ++row) {
      ds.truth(row) = c;
      for (Eigen::Index l = 0; l < d_latent; ++l)
        ds.latent(row, l) = centroids(c, l) + normal(rng);
    }
  }
  Eigen::MatrixXd loading(d_in, d_latent);
  for (Eigen::Index s = 0; s < d_in; ++s)
    for (Eigen::Index l = 0; l < d_latent; ++l)
      loading(s, l) = normal(rng) / std::sqrt(static_cast<double>(d_latent));
  ds.complete = ppca_complete(ds.latent, loading, noise_sd, rng);
  ds.observed = ObservedMatrix{ds.complete, Eigen::MatrixXd::Ones(n, d_in)};
  ds.true_probs = ProbabilityModel::constant(n, d_in, 1.0);
  return ds;
}

/// Replaces the observed part of a dataset with a realization of the given
/// missingness mechanism.
inline void with_missingness(SimulatedDataset& ds, const MechanismSpec& spec) {
  auto [observed, probs] = apply_missingness(ds.complete, spec);
  ds.observed = std::move(observed);
  ds.true_probs = std::move(probs);
}

}  // namespace bcgram
