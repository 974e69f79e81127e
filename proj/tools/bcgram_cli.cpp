// Command-line frontend: one binary, one subcommand per pipeline stage.

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bcgram/bcgram.hpp"

namespace {

using nlohmann::json;

constexpr std::uint64_t kDefaultSeed = 20240901;

#ifndef BCGRAM_BUILD_HASH
#define BCGRAM_BUILD_HASH "unknown"
#endif

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

bcgram::MechanismSpec parse_mechanism(const std::string& text, std::uint64_t seed) {
  auto colon = text.find(':');
  std::string kind = text.substr(0, colon);
  std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "mcar") {
    double p = std::stod(args);
    return bcgram::MechanismSpec::mcar(p, seed);
  }
  if (kind == "rank1") {
    std::vector<double> vals;
    std::size_t start = 0;
    while (start <= args.size()) {
      std::size_t pos = args.find(',', start);
      vals.push_back(std::stod(args.substr(start, pos - start)));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    if (vals.size() != 4)
      throw std::domain_error("rank1 mechanism needs b_low,b_high,q_low,q_high");
    return bcgram::MechanismSpec::rank1(vals[0], vals[1], vals[2], vals[3], seed);
  }
  throw std::domain_error("unknown mechanism '" + kind + "' (expected mcar:p or rank1:...)");
}

void write_csv_line(std::ofstream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

bcgram::VerificationConfig parse_verify_config(const std::string& path) {
  bcgram::VerificationConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  json j = json::parse(in);
  cfg.n = j.value("n", cfg.n);
  cfg.d = j.value("d", cfg.d);
  cfg.replicates = j.value("replicates", cfg.replicates);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.regime = j.value("regime", cfg.regime);
  cfg.p = j.value("p", cfg.p);
  cfg.c_low = j.value("c_low", cfg.c_low);
  cfg.c_high = j.value("c_high", cfg.c_high);
  cfg.g_low = j.value("g_low", cfg.g_low);
  cfg.g_high = j.value("g_high", cfg.g_high);
  if (j.contains("d_sweep"))
    cfg.d_sweep.assign(j["d_sweep"].begin(), j["d_sweep"].end());
  cfg.sweep_replicates = j.value("sweep_replicates", cfg.sweep_replicates);
  cfg.ks_replicates = j.value("ks_replicates", cfg.ks_replicates);
  cfg.ks_d = j.value("ks_d", cfg.ks_d);
  cfg.variance_replicates = j.value("variance_replicates", cfg.variance_replicates);
  return cfg;
}

bcgram::ExperimentConfig parse_experiment_config(const std::string& path) {
  bcgram::ExperimentConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  json j = json::parse(in);
  cfg.n = j.value("n", cfg.n);
  cfg.d_in = j.value("d_in", cfg.d_in);
  cfg.d_latent = j.value("d_latent", cfg.d_latent);
  cfg.clusters = j.value("clusters", cfg.clusters);
  cfg.separation = j.value("separation", cfg.separation);
  cfg.noise_sd = j.value("noise_sd", cfg.noise_sd);
  cfg.mean_shift = j.value("mean_shift", cfg.mean_shift);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("subset_sizes"))
    cfg.subset_sizes.assign(j["subset_sizes"].begin(), j["subset_sizes"].end());
  cfg.subsets_per_size = j.value("subsets_per_size", cfg.subsets_per_size);
  cfg.embed_dims = j.value("embed_dims", cfg.embed_dims);
  cfg.kmeans_restarts = j.value("kmeans_restarts", cfg.kmeans_restarts);
  if (j.contains("mechanism")) {
    std::uint64_t mseed = j["mechanism"].value("seed", cfg.seed);
    cfg.mechanism = parse_mechanism(j["mechanism"].value("spec", std::string("rank1:0.4,0.6,0.7,0.9")), mseed);
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bias-corrected Gram estimation for data with missing entries"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("bcgram 0.1.0 (") + BCGRAM_BUILD_HASH + ")");

  std::uint64_t seed = kDefaultSeed;
  std::string missing_token = "NA";
  int threads = 0;
  app.add_option("--seed", seed, "RNG seed (fixed default for reproducible runs)");
  app.add_option("--missing-token", missing_token, "token denoting a missing cell");
  app.add_option("--threads", threads, "worker-thread cap (0 = auto)");

  // simulate-missing -------------------------------------------------------
  auto* sim = app.add_subcommand("simulate-missing", "apply a missingness mechanism");
  std::string sim_in, sim_out, sim_mechanism = "mcar:0.6", sim_mask_out, sim_probs_out;
  sim->add_option("--input", sim_in, "complete data CSV")->required();
  sim->add_option("--mechanism", sim_mechanism, "mcar:p or rank1:b_low,b_high,q_low,q_high");
  sim->add_option("--out", sim_out, "observed matrix CSV")->required();
  sim->add_option("--emit-mask", sim_mask_out, "write the realized 0/1 mask");
  sim->add_option("--probs-out", sim_probs_out, "write the true probability matrix");

  // estimate-probs ---------------------------------------------------------
  auto* est = app.add_subcommand("estimate-probs", "estimate non-missingness probabilities");
  std::string est_mask, est_out;
  est->add_option("--mask", est_mask, "0/1 mask CSV")->required();
  est->add_option("--out", est_out, "full N x D probability matrix CSV")->required();

  // gram -------------------------------------------------------------------
  auto* gram = app.add_subcommand("gram", "compute a Gram-matrix estimate");
  std::string gram_in, gram_estimator = "naive", gram_probs, gram_out;
  gram->add_option("--input", gram_in, "data CSV (missing cells via --missing-token)")->required();
  gram->add_option("--estimator", gram_estimator,
                   "naive | bc-homogeneous:p | bc-heterogeneous");
  gram->add_option("--probs", gram_probs,
                   "probability matrix CSV (bc-heterogeneous; estimated from the mask if omitted)");
  gram->add_option("--out", gram_out, "output Gram CSV")->required();

  // variance-report --------------------------------------------------------
  auto* var = app.add_subcommand("variance-report", "exact variances and bounds");
  std::string var_k, var_probs, var_out;
  var->add_option("--k", var_k, "true covariance CSV")->required();
  var->add_option("--probs", var_probs, "probability matrix CSV")->required();
  var->add_option("--out", var_out, "JSON report")->required();

  // pca --------------------------------------------------------------------
  auto* pca = app.add_subcommand("pca", "spectral embedding of a Gram matrix");
  std::string pca_gram, pca_dims = "auto", pca_out, pca_eig;
  bool pca_no_center = false;
  pca->add_option("--gram", pca_gram, "Gram matrix CSV")->required();
  pca->add_option("--dims", pca_dims, "target dimension or 'auto' (CNG scree test)");
  pca->add_flag("--no-center", pca_no_center, "skip double centering");
  pca->add_option("--out", pca_out, "coordinates CSV")->required();
  pca->add_option("--eigenvalues", pca_eig, "retained eigenvalues CSV");

  // pc-dist ----------------------------------------------------------------
  auto* pcd = app.add_subcommand("pc-dist", "PC-space distance matrix");
  std::string pcd_gram, pcd_out;
  pcd->add_option("--gram", pcd_gram, "Gram matrix CSV")->required();
  pcd->add_option("--out", pcd_out, "distance matrix CSV")->required();

  // dropouts ---------------------------------------------------------------
  auto* drop = app.add_subcommand("dropouts", "ensemble dropout inference");
  std::string drop_in, drop_out, drop_votes, drop_ks = "4,6,8,10,12",
              drop_clusterers = "kmeans,spectral";
  double drop_threshold = 0.85;
  bool drop_log2p1 = false;
  drop->add_option("--input", drop_in, "nonnegative log-expression CSV")->required();
  drop->add_option("--threshold", drop_threshold, "within-cluster zero fraction");
  drop->add_option("--ks", drop_ks, "comma-separated cluster counts");
  drop->add_option("--clusterers", drop_clusterers, "subset of kmeans,spectral");
  drop->add_flag("--log2p1", drop_log2p1, "apply log2(x+1) before clustering");
  drop->add_option("--out", drop_out, "inferred mask CSV")->required();
  drop->add_option("--votes", drop_votes, "per-cell dropout vote counts CSV");

  // verify -----------------------------------------------------------------
  auto* verify = app.add_subcommand("verify", "Monte Carlo estimator verification");
  std::string verify_config, verify_out;
  verify->add_option("--config", verify_config, "JSON config (defaults if omitted)");
  verify->add_option("--out", verify_out, "JSON report")->required();

  // experiment -------------------------------------------------------------
  auto* exp = app.add_subcommand("experiment", "feature-subsampling DR experiment");
  std::string exp_config, exp_out;
  exp->add_option("--config", exp_config, "JSON config (defaults if omitted)");
  exp->add_option("--out", exp_out, "results CSV (pipeline,subset_size,replicate,ari)")->required();

  // allow the global options (--seed, --missing-token, --threads) to appear
  // after a subcommand name
  for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) {
      bcgram::ObservedMatrix in = bcgram::read_matrix(sim_in, missing_token);
      auto [observed, probs] =
          bcgram::apply_missingness(in.values, parse_mechanism(sim_mechanism, seed));
      bcgram::write_matrix(observed, sim_out, missing_token);
      if (!sim_mask_out.empty()) bcgram::write_dense(observed.mask, sim_mask_out);
      if (!sim_probs_out.empty()) bcgram::write_dense(probs.dense(), sim_probs_out);
    } else if (*est) {
      Eigen::MatrixXd mask = bcgram::read_dense(est_mask);
      bcgram::write_dense(bcgram::estimate_probabilities(mask).dense(), est_out);
    } else if (*gram) {
      bcgram::ObservedMatrix m = bcgram::read_matrix(gram_in, missing_token);
      bcgram::GramEstimate g = [&] {
        if (gram_estimator == "naive") return bcgram::naive_gram(m);
        if (gram_estimator.rfind("bc-homogeneous:", 0) == 0) {
          double p = std::stod(gram_estimator.substr(15));
          return bcgram::bc_gram_homogeneous(m, p);
        }
        if (gram_estimator == "bc-heterogeneous") {
          bcgram::ProbabilityModel probs =
              gram_probs.empty()
                  ? bcgram::estimate_probabilities(m.mask)
                  : bcgram::ProbabilityModel::full(bcgram::read_dense(gram_probs));
          return bcgram::bc_gram_heterogeneous(m, probs);
        }
        throw std::domain_error("unknown estimator '" + gram_estimator + "'");
      }();
      bcgram::write_dense(g.entries, gram_out);
    } else if (*var) {
      bcgram::CovarianceMatrix k = bcgram::make_covariance(bcgram::read_dense(var_k));
      bcgram::ProbabilityModel probs =
          bcgram::ProbabilityModel::full(bcgram::read_dense(var_probs));
      bcgram::VarianceReport r = bcgram::variance_report(k, probs);
      json out;
      out["schema"] = "bcgram-variance-report/1";
      out["exact"] = to_json(r.exact);
      out["lower"] = to_json(r.lower);
      out["upper"] = to_json(r.upper);
      out["p_bar_offdiag"] = to_json(r.p_bar_offdiag);
      out["p_bar_diag"] = to_json(r.p_bar_diag);
      std::ofstream f(var_out);
      f << out.dump(2) << '\n';
      if (!f) throw std::runtime_error("I/O error writing '" + var_out + "'");
    } else if (*pca) {
      bcgram::GramEstimate g{bcgram::read_dense(pca_gram), bcgram::EstimatorKind::Naive};
      std::optional<Eigen::Index> dims;
      if (pca_dims != "auto") dims = static_cast<Eigen::Index>(std::stol(pca_dims));
      bcgram::Embedding full = bcgram::pca_from_gram(g, std::nullopt, !pca_no_center);
      if (!dims) dims = std::min<Eigen::Index>(bcgram::cng_scree(full.eigenvalues),
                                               full.eigenvalues.size());
      bcgram::Embedding emb = bcgram::pca_from_gram(g, dims, !pca_no_center);
      bcgram::write_dense(emb.coords, pca_out);
      if (!pca_eig.empty()) bcgram::write_dense(emb.eigenvalues, pca_eig);
    } else if (*pcd) {
      bcgram::GramEstimate g{bcgram::read_dense(pcd_gram), bcgram::EstimatorKind::Naive};
      Eigen::MatrixXd e2 = bcgram::gram_to_sq_dist(g);
      Eigen::Index negatives = bcgram::count_negative_sq_dist(e2);
      if (negatives > 0)
        std::cerr << "note: " << negatives
                  << " negative squared distances in the direct conversion; "
                     "PC-space distances avoid them\n";
      bcgram::write_dense(bcgram::pc_space_distances(g), pcd_out);
    } else if (*drop) {
      Eigen::MatrixXd data = bcgram::read_dense(drop_in);
      if (drop_log2p1)
        data = (data.array() + 1.0).log().matrix() / std::log(2.0);
      bcgram::EnsembleConfig cfg;
      cfg.threshold = drop_threshold;
      cfg.seed = seed;
      cfg.ks.clear();
      std::size_t start = 0;
      while (start <= drop_ks.size()) {
        std::size_t pos = drop_ks.find(',', start);
        cfg.ks.push_back(std::stoi(drop_ks.substr(start, pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
      }
      cfg.use_kmeans = drop_clusterers.find("kmeans") != std::string::npos;
      cfg.use_spectral = drop_clusterers.find("spectral") != std::string::npos;
      bcgram::DropoutCall call = bcgram::infer_dropouts(data, cfg);
      bcgram::write_dense(call.mask, drop_out);
      if (!drop_votes.empty())
        bcgram::write_dense(call.votes.cast<double>(), drop_votes);
    } else if (*verify) {
      bcgram::VerificationConfig cfg = parse_verify_config(verify_config);
      if (cfg.seed == 20240901) cfg.seed = seed;
      bcgram::VerificationReport r = bcgram::run_estimator_verification(cfg);
      json out;
      out["schema"] = "bcgram-verify-report/1";
      out["k_true"] = to_json(r.k_true);
      out["mean_naive"] = to_json(r.mean_naive);
      out["mean_corrected"] = to_json(r.mean_corrected);
      out["predicted_naive_mean"] = to_json(r.predicted_naive_mean);
      out["bias_corrected_in_se"] = to_json(r.bias_corrected_in_se);
      out["naive_deviation_in_se"] = to_json(r.naive_deviation_in_se);
      out["empirical_variance"] = to_json(r.empirical_variance);
      out["variance_exact"] = to_json(r.variances.exact);
      out["variance_lower"] = to_json(r.variances.lower);
      out["variance_upper"] = to_json(r.variances.upper);
      out["bound_violation_fraction"] = r.bound_violation_fraction;
      out["max_variance_relative_error"] = r.max_variance_relative_error;
      out["ks_statistic"] = r.ks_statistic;
      json sweep = json::array();
      for (auto [d, err] : r.median_max_error_by_d)
        sweep.push_back({{"d", d}, {"median_max_error", err}});
      out["median_max_error_by_d"] = std::move(sweep);
      std::ofstream f(verify_out);
      f << out.dump(2) << '\n';
      if (!f) throw std::runtime_error("I/O error writing '" + verify_out + "'");
    } else if (*exp) {
      bcgram::ExperimentConfig cfg = parse_experiment_config(exp_config);
      if (exp_config.empty()) cfg.seed = seed;
      auto rows = bcgram::run_missingness_experiment(cfg);
      std::ofstream f(exp_out);
      if (!f) throw std::runtime_error("cannot write '" + exp_out + "'");
      f << "pipeline,subset_size,replicate,ari\n";
      for (const auto& r : rows) {
        std::vector<std::string> cells = {r.pipeline, std::to_string(r.subset_size),
                                          std::to_string(r.replicate),
                                          format_double(r.ari)};
        write_csv_line(f, cells);
      }
      if (!f) throw std::runtime_error("I/O error writing '" + exp_out + "'");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
