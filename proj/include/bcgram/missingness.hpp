#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <variant>

#include "bcgram/matrix_io.hpp"
#include "bcgram/rng.hpp"

namespace bcgram {

/// Per-cell non-missingness probabilities p(i,s), either as rank-1 factors
/// c_i * g_s or as a full N x D matrix. All probabilities lie in (0, 1].
class ProbabilityModel {
 public:
  static ProbabilityModel rank1(Eigen::VectorXd cell_factors,
                                Eigen::VectorXd feature_factors) {
    ProbabilityModel m;
    for (Eigen::Index i = 0; i < cell_factors.size(); ++i)
      for (Eigen::Index s = 0; s < feature_factors.size(); ++s) {
        double p = cell_factors(i) * feature_factors(s);
        if (p <= 0.0 || p > 1.0 + 1e-12) {
          std::ostringstream msg;
          msg << "rank-1 probability " << p << " at (" << i << "," << s
              << ") outside (0,1]";
          throw std::invalid_argument(msg.str());
        }
      }
    m.c_ = std::move(cell_factors);
    m.g_ = std::move(feature_factors);
    m.rank1_ = true;
    return m;
  }

  static ProbabilityModel full(Eigen::MatrixXd p) {
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      for (Eigen::Index s = 0; s < p.cols(); ++s)
        if (p(i, s) <= 0.0 || p(i, s) > 1.0) {
          std::ostringstream msg;
          msg << "probability " << p(i, s) << " at (" << i << "," << s
              << ") outside (0,1]";
          throw std::invalid_argument(msg.str());
        }
    ProbabilityModel m;
    m.full_ = std::move(p);
    m.rank1_ = false;
    return m;
  }

  static ProbabilityModel constant(Eigen::Index n, Eigen::Index d, double p) {
    return rank1(Eigen::VectorXd::Constant(n, p), Eigen::VectorXd::Ones(d));
  }

  bool is_rank1() const { return rank1_; }
  Eigen::Index rows() const { return rank1_ ? c_.size() : full_.rows(); }
  Eigen::Index cols() const { return rank1_ ? g_.size() : full_.cols(); }

  double operator()(Eigen::Index i, Eigen::Index s) const {
    return rank1_ ? c_(i) * g_(s) : full_(i, s);
  }

  const Eigen::VectorXd& cell_factors() const { return c_; }
  const Eigen::VectorXd& feature_factors() const { return g_; }

  Eigen::MatrixXd dense() const {
    if (rank1_) return c_ * g_.transpose();
    return full_;
  }

  /// Sigma_s p(i,s) per row.
  Eigen::VectorXd row_sums() const {
    if (rank1_) return c_ * g_.sum();
    return full_.rowwise().sum();
  }

  /// N x N matrix of Sigma_s p(i,s) p(j,s). Rank-1 form reduces to
  /// (c c^T) * Sigma_s g_s^2.
  Eigen::MatrixXd pair_product_sums() const {
    if (rank1_) return (c_ * c_.transpose()) * g_.squaredNorm();
    return full_ * full_.transpose();
  }

 private:
  ProbabilityModel() = default;
  Eigen::VectorXd c_, g_;
  Eigen::MatrixXd full_;
  bool rank1_ = false;
};

/// Missingness mechanism: homogeneous MCAR with retention probability p, or
/// the rank-1 heterogeneous mechanism P(missing at (i,s)) = b_i q_s with
/// b ~ U[b_low, b_high], q ~ U[q_low, q_high].
struct MechanismSpec {
  enum class Kind { HomogeneousMCAR, HeterogeneousRank1 };
  Kind kind = Kind::HomogeneousMCAR;
  double p = 1.0;
  double b_low = 0.4, b_high = 0.6, q_low = 0.7, q_high = 0.9;
  std::uint64_t seed = 0;

  static MechanismSpec mcar(double p, std::uint64_t seed) {
    if (p <= 0.0 || p > 1.0)
      throw std::invalid_argument("MCAR retention probability must satisfy 0 < p <= 1");
    MechanismSpec s;
    s.kind = Kind::HomogeneousMCAR;
    s.p = p;
    s.seed = seed;
    return s;
  }

  static MechanismSpec rank1(double b_low, double b_high, double q_low,
                             double q_high, std::uint64_t seed) {
    if (!(0.0 <= b_low && b_low <= b_high && b_high <= 1.0))
      throw std::invalid_argument("rank1 mechanism requires 0 <= b_low <= b_high <= 1");
    if (!(0.0 <= q_low && q_low <= q_high && q_high <= 1.0))
      throw std::invalid_argument("rank1 mechanism requires 0 <= q_low <= q_high <= 1");
    if (b_high * q_high >= 1.0)
      throw std::invalid_argument("rank1 mechanism requires b_high*q_high < 1 so that p > 0");
    MechanismSpec s;
    s.kind = Kind::HeterogeneousRank1;
    s.b_low = b_low;
    s.b_high = b_high;
    s.q_low = q_low;
    s.q_high = q_high;
    s.seed = seed;
    return s;
  }
};

/// Draws a revelation mask with independent Bernoulli(p(i,s)) entries.
inline Eigen::MatrixXd sample_mask(const ProbabilityModel& probs, std::uint64_t seed) {
  std::mt19937_64 rng = derive_stream(seed, 0x6d61736bULL);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd mask(probs.rows(), probs.cols());
  for (Eigen::Index i = 0; i < mask.rows(); ++i)
    for (Eigen::Index s = 0; s < mask.cols(); ++s)
      mask(i, s) = unif(rng) < probs(i, s) ? 1.0 : 0.0;
  return mask;
}

/// Applies the mechanism to a complete matrix; returns the realized observed
/// matrix together with the true ProbabilityModel that generated the mask.
inline std::pair<ObservedMatrix, ProbabilityModel> apply_missingness(
    const Eigen::MatrixXd& complete, const MechanismSpec& spec) {
  const Eigen::Index n = complete.rows(), d = complete.cols();
  ProbabilityModel probs = [&] {
    if (spec.kind == MechanismSpec::Kind::HomogeneousMCAR)
      return ProbabilityModel::constant(n, d, spec.p);
    std::mt19937_64 rng = derive_stream(spec.seed, 0x66616374ULL);
    std::uniform_real_distribution<double> ub(spec.b_low, spec.b_high);
    std::uniform_real_distribution<double> uq(spec.q_low, spec.q_high);
    Eigen::VectorXd b(n), q(d);
    for (Eigen::Index i = 0; i < n; ++i) b(i) = ub(rng);
    for (Eigen::Index s = 0; s < d; ++s) q(s) = uq(rng);
    Eigen::MatrixXd p(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index s = 0; s < d; ++s) p(i, s) = 1.0 - b(i) * q(s);
    return ProbabilityModel::full(std::move(p));
  }();
  Eigen::MatrixXd mask = sample_mask(probs, spec.seed);
  Eigen::MatrixXd values = complete.cwiseProduct(mask);
  return {ObservedMatrix{std::move(values), std::move(mask)}, std::move(probs)};
}

/// Method-of-moments estimator of rank-1 non-missingness probabilities from
/// an observed mask. Raw factors M_i./N and M_.s/D are jointly rescaled by
/// 1/sqrt(n_c), n_c = max(max_{i,s} M_i. M_.s/(DN), m/(DN)), which caps every
/// product at 1.
inline ProbabilityModel estimate_probabilities(const Eigen::MatrixXd& mask) {
  const Eigen::Index n = mask.rows(), d = mask.cols();
  Eigen::VectorXd row_counts = mask.rowwise().sum();
  Eigen::VectorXd col_counts = mask.colwise().sum();
  for (Eigen::Index i = 0; i < n; ++i)
    if (row_counts(i) == 0.0) {
      std::ostringstream msg;
      msg << "row " << i << " has no observed entries; probabilities are not estimable";
      throw std::domain_error(msg.str());
    }
  for (Eigen::Index s = 0; s < d; ++s)
    if (col_counts(s) == 0.0) {
      std::ostringstream msg;
      msg << "column " << s << " has no observed entries; probabilities are not estimable";
      throw std::domain_error(msg.str());
    }
  const double m = row_counts.sum();
  const double dn = static_cast<double>(d) * static_cast<double>(n);
  double n_c = m / dn;
  n_c = std::max(n_c, row_counts.maxCoeff() * col_counts.maxCoeff() / dn);
  Eigen::VectorXd c = row_counts / (static_cast<double>(n) * std::sqrt(n_c));
  Eigen::VectorXd g = col_counts / (static_cast<double>(d) * std::sqrt(n_c));
  return ProbabilityModel::rank1(std::move(c), std::move(g));
}

}  // namespace bcgram
