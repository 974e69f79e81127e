#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bcgram/clustering.hpp"

namespace bcgram {

struct EnsembleConfig {
  std::vector<int> ks = {4, 6, 8, 10, 12};
  bool use_kmeans = true;
  bool use_spectral = true;
  double threshold = 0.85;     // within-cluster zero fraction deeming non-expression
  int kmeans_restarts = 30;
  std::uint64_t seed = 0;

  void validate(Eigen::Index n) const {
    if (threshold < 0.5 || threshold > 0.99)
      throw std::domain_error("threshold must lie in [0.5, 0.99]");
    if (!use_kmeans && !use_spectral)
      throw std::domain_error("at least one clusterer must be enabled");
    if (ks.empty()) throw std::domain_error("at least one cluster count required");
    for (int k : ks)
      if (k < 1 || static_cast<Eigen::Index>(k) >= n)
        throw std::domain_error("every configured k must satisfy 1 <= k < N");
  }
};

/// Ensemble decision per cell. mask = 1 means observed / true value
/// (including true non-expression zeros); mask = 0 means inferred dropout.
/// votes counts the runs that marked the cell as a dropout candidate.
struct DropoutCall {
  Eigen::MatrixXd mask;
  Eigen::MatrixXi votes;
  int ensemble_size = 0;
};

namespace detail {

// One indicator matrix: for each zero cell, 1 if the run calls it a dropout
// candidate, 0 if the zero fraction of the feature within the cell's cluster
// reaches the threshold (true non-expression).
inline Eigen::MatrixXi dropout_indicator(const Eigen::MatrixXd& data,
                                         const LabelVector& labels, int k,
                                         double threshold) {
  const Eigen::Index n = data.rows(), d = data.cols();
  Eigen::MatrixXd zero_counts = Eigen::MatrixXd::Zero(k, d);
  Eigen::VectorXd cluster_sizes = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    cluster_sizes(labels(i)) += 1.0;
    for (Eigen::Index s = 0; s < d; ++s)
      if (data(i, s) == 0.0) zero_counts(labels(i), s) += 1.0;
  }
  Eigen::MatrixXi ind = Eigen::MatrixXi::Zero(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index s = 0; s < d; ++s)
      if (data(i, s) == 0.0) {
        double frac = zero_counts(labels(i), s) / cluster_sizes(labels(i));
        ind(i, s) = frac >= threshold ? 0 : 1;
      }
  return ind;
}

}  // namespace detail

/// Ensemble dropout inference: cluster the rows with every configured
/// (clusterer, k) pair, mark each zero cell as true non-expression when the
/// within-cluster zero fraction of its feature reaches the threshold, and
/// take a strict majority vote across runs. A tie resolves to dropout.
inline DropoutCall infer_dropouts(const Eigen::MatrixXd& data,
                                  const EnsembleConfig& config) {
  const Eigen::Index n = data.rows(), d = data.cols();
  if (data.minCoeff() < 0.0)
    throw std::domain_error("dropout inference expects nonnegative (log-transformed) data");
  config.validate(n);
  const int configured_runs = static_cast<int>(config.ks.size()) *
                              ((config.use_kmeans ? 1 : 0) + (config.use_spectral ? 1 : 0));
  if (!(data.array() == 0.0).any()) {
    // no zero cells, hence no dropout candidates; clustering cannot change that
    DropoutCall call;
    call.votes = Eigen::MatrixXi::Zero(n, d);
    call.ensemble_size = configured_runs;
    call.mask = Eigen::MatrixXd::Ones(n, d);
    return call;
  }
  Eigen::MatrixXi votes = Eigen::MatrixXi::Zero(n, d);
  int runs = 0;
  std::uint64_t run_index = 0;
  for (int k : config.ks) {
    if (config.use_kmeans) {
      LabelVector labels =
          kmeans(data, k, config.kmeans_restarts, mix64(config.seed) ^ run_index).labels;
      votes += detail::dropout_indicator(data, labels, k, config.threshold);
      ++runs;
      ++run_index;
    }
    if (config.use_spectral) {
      LabelVector labels = spectral_clustering(data, k, mix64(config.seed) ^ run_index);
      votes += detail::dropout_indicator(data, labels, k, config.threshold);
      ++runs;
      ++run_index;
    }
  }
  DropoutCall call;
  call.votes = votes;
  call.ensemble_size = runs;
  call.mask = Eigen::MatrixXd::Ones(n, d);
  // true non-expression needs a strict majority of non-dropout marks; a tie
  // resolves to dropout
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index s = 0; s < d; ++s)
      if (data(i, s) == 0.0 && 2 * votes(i, s) >= runs) call.mask(i, s) = 0.0;
  return call;
}

}  // namespace bcgram
