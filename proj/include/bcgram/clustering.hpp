#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "bcgram/rng.hpp"

namespace bcgram {

using LabelVector = Eigen::VectorXi;

struct KMeansResult {
  LabelVector labels;
  double inertia = 0.0;
};

namespace detail {

inline double sq_dist_rows(const Eigen::MatrixXd& x, Eigen::Index a,
                           const Eigen::RowVectorXd& c) {
  return (x.row(a) - c).squaredNorm();
}

// k-means++ seeding.
inline Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& points, int k,
                                     std::mt19937_64& rng) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd centers(k, points.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = points.row(first(rng));
  Eigen::VectorXd d2(n);
  for (Eigen::Index i = 0; i < n; ++i)
    d2(i) = sq_dist_rows(points, i, centers.row(0));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double r = unif(rng) * total, acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);
    }
    centers.row(c) = points.row(pick);
    for (Eigen::Index i = 0; i < n; ++i)
      d2(i) = std::min(d2(i), sq_dist_rows(points, i, centers.row(c)));
  }
  return centers;
}

}  // namespace detail

/// One Lloyd run from a k-means++ initialization. Empty clusters are refilled
/// with the point farthest from its assigned center.
inline KMeansResult kmeans_single(const Eigen::MatrixXd& points, int k,
                                  std::mt19937_64& rng, int max_iter = 300) {
  const Eigen::Index n = points.rows();
  if (k < 1 || static_cast<Eigen::Index>(k) > n)
    throw std::domain_error("k-means requires 1 <= k <= N");
  Eigen::MatrixXd centers = detail::kmeanspp_init(points, k, rng);
  LabelVector labels = LabelVector::Zero(n);
  Eigen::VectorXd best_d2(n);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int arg = 0;
      double best = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        double d = detail::sq_dist_rows(points, i, centers.row(c));
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      if (labels(i) != arg) {
        labels(i) = arg;
        changed = true;
      }
      best_d2(i) = best;
    }
    // refill empty clusters with the worst-fit point
    std::vector<Eigen::Index> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) ++counts[labels(i)];
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      Eigen::Index far = 0;
      for (Eigen::Index i = 1; i < n; ++i)
        if (best_d2(i) > best_d2(far)) far = i;
      --counts[labels(far)];
      labels(far) = c;
      counts[c] = 1;
      best_d2(far) = 0.0;
      changed = true;
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    for (Eigen::Index i = 0; i < n; ++i) sums.row(labels(i)) += points.row(i);
    for (int c = 0; c < k; ++c) centers.row(c) = sums.row(c) / static_cast<double>(counts[c]);
    if (!changed && iter > 0) break;
  }
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    inertia += detail::sq_dist_rows(points, i, centers.row(labels(i)));
  return {std::move(labels), inertia};
}

/// Best of `restarts` k-means++ runs by inertia; deterministic given seed.
inline KMeansResult kmeans(const Eigen::MatrixXd& points, int k, int restarts,
                           std::uint64_t seed) {
  if (restarts < 1) throw std::domain_error("k-means needs at least one restart");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    std::mt19937_64 rng = derive_stream(seed, 0x6b6dULL, static_cast<std::uint64_t>(r));
    KMeansResult run = kmeans_single(points, k, rng);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

/// Normalized spectral clustering: full RBF affinity with bandwidth sigma set
/// to the mean distance to the 7th nearest neighbour, top-k eigenvectors of
/// D^(-1/2) W D^(-1/2), row normalization, then k-means.
inline LabelVector spectral_clustering(const Eigen::MatrixXd& points, int k,
                                       std::uint64_t seed, int kmeans_restarts = 10) {
  const Eigen::Index n = points.rows();
  if (n < 8) throw std::domain_error("spectral clustering needs N >= 8 (7th neighbour)");
  if (k < 1 || static_cast<Eigen::Index>(k) > n)
    throw std::domain_error("spectral clustering requires 1 <= k <= N");
  Eigen::MatrixXd dist(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double d = (points.row(i) - points.row(j)).norm();
      dist(i, j) = dist(j, i) = d;
    }
  }
  double sigma = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> row(dist.row(i).data(), dist.row(i).data() + n);
    std::nth_element(row.begin(), row.begin() + 7, row.end());
    sigma += row[7];  // row[0] is the self distance
  }
  sigma /= static_cast<double>(n);
  if (sigma <= 0.0)
    throw std::domain_error("degenerate point set: 7th-neighbour distance is zero");
  Eigen::MatrixXd w = (-dist.array().square() / (2.0 * sigma * sigma)).exp().matrix();
  Eigen::VectorXd deg = w.rowwise().sum();
  Eigen::VectorXd dinv_sqrt = deg.array().rsqrt().matrix();
  Eigen::MatrixXd sym = dinv_sqrt.asDiagonal() * w * dinv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  // top-k eigenvectors of the normalized affinity = bottom-k of the Laplacian
  Eigen::MatrixXd embed(n, k);
  for (int c = 0; c < k; ++c) embed.col(c) = es.eigenvectors().col(n - 1 - c);
  for (Eigen::Index i = 0; i < n; ++i) {
    double norm = embed.row(i).norm();
    if (norm > 0.0) embed.row(i) /= norm;
  }
  return kmeans(embed, k, kmeans_restarts, mix64(seed ^ 0x73706563ULL)).labels;
}

/// Adjusted Rand index via the contingency table.
inline double ari(const LabelVector& a, const LabelVector& b) {
  if (a.size() != b.size()) throw std::domain_error("label vectors differ in length");
  const Eigen::Index n = a.size();
  auto relabel = [](const LabelVector& v) {
    std::vector<int> ids(v.data(), v.data() + v.size());
    std::vector<int> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<int> out(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
      out[i] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), ids[i]) -
                                sorted.begin());
    return std::make_pair(out, static_cast<int>(sorted.size()));
  };
  auto [la, ka] = relabel(a);
  auto [lb, kb] = relabel(b);
  std::vector<std::vector<long long>> table(ka, std::vector<long long>(kb, 0));
  for (Eigen::Index i = 0; i < n; ++i) ++table[la[i]][lb[i]];
  auto choose2 = [](long long x) { return x * (x - 1) / 2; };
  double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (int i = 0; i < ka; ++i) {
    long long row_total = 0;
    for (int j = 0; j < kb; ++j) {
      sum_cells += static_cast<double>(choose2(table[i][j]));
      row_total += table[i][j];
    }
    sum_rows += static_cast<double>(choose2(row_total));
  }
  for (int j = 0; j < kb; ++j) {
    long long col_total = 0;
    for (int i = 0; i < ka; ++i) col_total += table[i][j];
    sum_cols += static_cast<double>(choose2(col_total));
  }
  double total = static_cast<double>(choose2(static_cast<long long>(n)));
  double expected = sum_rows * sum_cols / total;
  double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 0.0;  // both partitions trivial
  return (sum_cells - expected) / (max_index - expected);
}

}  // namespace bcgram
