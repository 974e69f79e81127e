#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bcgram/gram.hpp"

namespace bcgram {

/// Spectral embedding: coords = U_d diag(lambda_d)^(1/2) over the retained
/// positive eigenvalues, sorted nonincreasing.
struct Embedding {
  Eigen::MatrixXd coords;
  Eigen::VectorXd eigenvalues;
  Eigen::Index dropped_negative = 0;
};

/// PCA coordinates from a Gram estimate. With center=true the matrix is
/// double-centered (J G J) first. Eigenvectors get a deterministic sign: the
/// entry of largest magnitude is made positive. If fewer than d positive
/// eigenvalues exist, d is reduced and the discarded count recorded.
inline Embedding pca_from_gram(const GramEstimate& g,
                               std::optional<Eigen::Index> d = std::nullopt,
                               bool center = true) {
  const Eigen::Index n = g.size();
  if (d && (*d > n || *d < 1))
    throw std::domain_error("target dimension must lie in [1, N]");
  Eigen::MatrixXd gc = g.entries;
  if (center) {
    Eigen::VectorXd row_mean = gc.rowwise().mean();
    double total_mean = row_mean.mean();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        gc(i, j) -= row_mean(i) + row_mean(j) - total_mean;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gc);
  // ascending from Eigen; walk from the top
  const Eigen::VectorXd& ev = es.eigenvalues();
  const Eigen::MatrixXd& vec = es.eigenvectors();
  Eigen::Index want = d.value_or(n);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index t = n - 1; t >= 0 && static_cast<Eigen::Index>(keep.size()) < want; --t) {
    if (ev(t) > 0.0) keep.push_back(t);
  }
  Eigen::Index negatives = 0;
  for (Eigen::Index t = 0; t < n; ++t)
    if (ev(t) < 0.0) ++negatives;

  Embedding out;
  Eigen::Index kept = static_cast<Eigen::Index>(keep.size());
  out.coords.resize(n, kept);
  out.eigenvalues.resize(kept);
  out.dropped_negative = negatives;
  for (Eigen::Index c = 0; c < kept; ++c) {
    Eigen::VectorXd u = vec.col(keep[c]);
    Eigen::Index argmax = 0;
    for (Eigen::Index i = 1; i < n; ++i)
      if (std::abs(u(i)) > std::abs(u(argmax))) argmax = i;
    if (u(argmax) < 0.0) u = -u;
    double lambda = ev(keep[c]);
    out.eigenvalues(c) = lambda;
    out.coords.col(c) = u * std::sqrt(lambda);
  }
  return out;
}

/// Cattell-Nelson-Gorsuch scree test: for each candidate index k fit
/// least-squares lines through the three eigenvalues ending at k and the
/// three starting at k; return the k maximizing the slope difference, ties
/// broken toward the smaller k. Fewer than 6 eigenvalues falls back to 2.
inline Eigen::Index cng_scree(const Eigen::VectorXd& eigenvalues) {
  const Eigen::Index n = eigenvalues.size();
  if (n < 6) return 2;
  auto slope3 = [&](Eigen::Index start) {
    // least-squares slope of 3 equally spaced points: (y2 - y0)/2
    return (eigenvalues(start + 2) - eigenvalues(start)) / 2.0;
  };
  Eigen::Index best = 2;
  double best_score = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 2; k <= n - 3; ++k) {
    double score = slope3(k) - slope3(k - 2);
    if (score > best_score + 1e-15 * std::max(1.0, std::abs(best_score))) {
      best_score = score;
      best = k;
    }
  }
  return best;
}

/// Pairwise Euclidean distances in the PCA embedding retaining every
/// nonnegative eigenvalue. Always nonnegative, unlike gram_to_sq_dist on a
/// bias-corrected (possibly indefinite) G.
inline Eigen::MatrixXd pc_space_distances(const GramEstimate& g, bool center = true) {
  Embedding emb = pca_from_gram(g, std::nullopt, center);
  const Eigen::Index n = g.size();
  Eigen::MatrixXd dist(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double d = (emb.coords.row(i) - emb.coords.row(j)).norm();
      dist(i, j) = dist(j, i) = d;
    }
  }
  return dist;
}

}  // namespace bcgram
