#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "bcgram/matrix_io.hpp"
#include "bcgram/missingness.hpp"

namespace bcgram {

enum class EstimatorKind { Naive, BCHomogeneous, BCHeterogeneous };

inline const char* to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::Naive: return "naive";
    case EstimatorKind::BCHomogeneous: return "bc-homogeneous";
    case EstimatorKind::BCHeterogeneous: return "bc-heterogeneous";
  }
  return "?";
}

/// N x N symmetric Gram-matrix estimate of the covariance K.
struct GramEstimate {
  Eigen::MatrixXd entries;
  EstimatorKind kind = EstimatorKind::Naive;

  Eigen::Index size() const { return entries.rows(); }
};

/// (1/D) Y Y^T with zero-filled missing cells.
inline GramEstimate naive_gram(const ObservedMatrix& m) {
  Eigen::MatrixXd g = (m.values * m.values.transpose()) / static_cast<double>(m.cols());
  return {std::move(g), EstimatorKind::Naive};
}

/// Homogeneous bias correction: off-diagonal G_ij/(D p^2), diagonal G_ii/(D p).
inline GramEstimate bc_gram_homogeneous(const ObservedMatrix& m, double p) {
  if (p <= 0.0 || p > 1.0)
    throw std::domain_error("homogeneous correction requires 0 < p <= 1");
  const double d = static_cast<double>(m.cols());
  Eigen::MatrixXd g = (m.values * m.values.transpose()) / (d * p * p);
  g.diagonal() *= p;  // diagonal divisor is D p, not D p^2
  return {std::move(g), EstimatorKind::BCHomogeneous};
}

/// Heterogeneous bias correction: off-diagonal G_ij / Sigma_s p_is p_js,
/// diagonal G_ii / Sigma_s p_is.
inline GramEstimate bc_gram_heterogeneous(const ObservedMatrix& m,
                                          const ProbabilityModel& probs) {
  if (probs.rows() != m.rows() || probs.cols() != m.cols())
    throw std::invalid_argument("probability model dimensions do not match the data");
  Eigen::MatrixXd denom = probs.pair_product_sums();
  denom.diagonal() = probs.row_sums();
  if (denom.minCoeff() <= 0.0)
    throw std::domain_error("probability product sum is not positive");
  Eigen::MatrixXd g =
      (m.values * m.values.transpose()).cwiseQuotient(denom);
  return {std::move(g), EstimatorKind::BCHeterogeneous};
}

/// Mean and variance of the single product y_is y_js under the missingness
/// model (diagonal case i == j uses the squared-value moments).
inline std::pair<double, double> moments_under_missingness(
    const CovarianceMatrix& k, const ProbabilityModel& probs, Eigen::Index i,
    Eigen::Index j, Eigen::Index s) {
  const double kii = k.entries(i, i), kjj = k.entries(j, j), kij = k.entries(i, j);
  const double pis = probs(i, s), pjs = probs(j, s);
  if (i == j) {
    double mean = pis * kii;
    double var = kii * kii * (3.0 * pis - pis * pis);
    return {mean, var};
  }
  double pp = pis * pjs;
  double mean = pp * kij;
  double var = pp * kii * kjj + kij * kij * (2.0 * pp - pp * pp);
  return {mean, var};
}

/// Exact variances, variance bounds, and the averaged probability products
/// p_bar controlling them.
struct VarianceReport {
  Eigen::MatrixXd exact;
  Eigen::MatrixXd lower;
  Eigen::MatrixXd upper;
  Eigen::MatrixXd p_bar_offdiag;
  Eigen::VectorXd p_bar_diag;
};

inline VarianceReport variance_report(const CovarianceMatrix& k,
                                      const ProbabilityModel& probs) {
  const Eigen::Index n = k.size();
  if (probs.rows() != n)
    throw std::invalid_argument("probability model rows do not match K");
  const double d = static_cast<double>(probs.cols());
  VarianceReport r;
  r.exact.resize(n, n);
  r.lower.resize(n, n);
  r.upper.resize(n, n);
  r.p_bar_offdiag.resize(n, n);
  r.p_bar_diag.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double kii = k.entries(i, i), kjj = k.entries(j, j), kij = k.entries(i, j);
      if (i == j) {
        double sp = 0.0, sp_weighted = 0.0;
        for (Eigen::Index s = 0; s < probs.cols(); ++s) {
          double p = probs(i, s);
          sp += p;
          sp_weighted += p * (3.0 - p);
        }
        double p_bar = sp / d;
        r.p_bar_diag(i) = p_bar;
        r.p_bar_offdiag(i, i) = p_bar;
        r.exact(i, i) = kii * kii * sp_weighted / (sp * sp);
        r.lower(i, i) = 2.0 * kii * kii / (d * p_bar);
        r.upper(i, i) = kii * kii / d * (3.0 / p_bar - 1.0);
      } else {
        double spp = 0.0, scorr = 0.0;
        for (Eigen::Index s = 0; s < probs.cols(); ++s) {
          double pp = probs(i, s) * probs(j, s);
          spp += pp;
          scorr += 2.0 * pp - pp * pp;
        }
        double p_bar = spp / d;
        r.p_bar_offdiag(i, j) = r.p_bar_offdiag(j, i) = p_bar;
        double exact = (kii * kjj * spp + kij * kij * scorr) / (spp * spp);
        double lower = (kii * kjj + kij * kij) / (d * p_bar);
        double upper = kii * kjj / (p_bar * d) + kij * kij / d * (2.0 / p_bar - 1.0);
        r.exact(i, j) = r.exact(j, i) = exact;
        r.lower(i, j) = r.lower(j, i) = lower;
        r.upper(i, j) = r.upper(j, i) = upper;
      }
    }
  }
  return r;
}

inline VarianceReport variance_exact(const CovarianceMatrix& k,
                                     const ProbabilityModel& probs) {
  return variance_report(k, probs);
}

inline VarianceReport variance_bounds(const CovarianceMatrix& k,
                                      const ProbabilityModel& probs) {
  return variance_report(k, probs);
}

/// E^2 = diag(G) 1^T + 1 diag(G)^T - 2G. No clamping: bias-corrected G can
/// yield negative squared distances, which the caller is expected to inspect
/// (see count_negative_sq_dist) or avoid via pc_space_distances.
inline Eigen::MatrixXd gram_to_sq_dist(const GramEstimate& g) {
  Eigen::VectorXd diag = g.entries.diagonal();
  Eigen::MatrixXd e2 = diag.replicate(1, g.size()) +
                       diag.transpose().replicate(g.size(), 1) - 2.0 * g.entries;
  e2.diagonal().setZero();
  return e2;
}

inline Eigen::Index count_negative_sq_dist(const Eigen::MatrixXd& e2) {
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < e2.rows(); ++i)
    for (Eigen::Index j = 0; j < e2.cols(); ++j)
      if (e2(i, j) < 0.0) ++count;
  return count;
}

/// Double centering G = -1/2 J E^2 J with J = I - (1/N) 1 1^T.
inline GramEstimate sq_dist_to_gram(const Eigen::MatrixXd& e2) {
  const Eigen::Index n = e2.rows();
  if (e2.cols() != n) throw std::domain_error("squared-distance matrix must be square");
  double scale = std::max(e2.cwiseAbs().maxCoeff(), 1.0);
  if ((e2 - e2.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::domain_error("squared-distance matrix must be symmetric");
  if (e2.diagonal().cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::domain_error("squared-distance matrix must have zero diagonal");
  Eigen::VectorXd row_mean = e2.rowwise().mean();
  double total_mean = row_mean.mean();
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      g(i, j) = -0.5 * (e2(i, j) - row_mean(i) - row_mean(j) + total_mean);
  return {std::move(g), EstimatorKind::Naive};
}

/// Gaussian KL divergence KL(N(0, G) || N(0, K)). Both matrices must be
/// positive definite; no regularization is applied.
inline double kl_to_covariance(const GramEstimate& g, const CovarianceMatrix& k) {
  const Eigen::Index n = g.size();
  if (k.size() != n) throw std::invalid_argument("dimension mismatch between G and K");
  auto check_pd = [n](const Eigen::MatrixXd& m, const std::string& name) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    double lo = es.eigenvalues()(0), hi = es.eigenvalues()(n - 1);
    if (lo <= 1e-10 * std::max(hi, 0.0)) {
      std::ostringstream msg;
      msg << name << " is not positive definite (smallest eigenvalue " << lo << ")";
      throw std::domain_error(msg.str());
    }
  };
  check_pd(g.entries, "G");
  check_pd(k.entries, "K");
  Eigen::LLT<Eigen::MatrixXd> llt_g(g.entries), llt_k(k.entries);
  auto logdet = [](const Eigen::LLT<Eigen::MatrixXd>& llt) {
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  };
  double trace = llt_k.solve(g.entries).trace();
  return 0.5 * (logdet(llt_k) - logdet(llt_g) + trace - static_cast<double>(n));
}

}  // namespace bcgram
