#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bcgram/matrix_io.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* p = std::getenv("BCGRAM_CLI");
  REQUIRE(p != nullptr);
  return p;
}

int run(const std::string& args) {
  std::string cmd = cli_path() + " " + args + " 2>/dev/null";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path work_dir() {
  fs::path dir = fs::temp_directory_path() / "bcgram_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("full pipeline via subcommands") {
  fs::path dir = work_dir();
  auto data = dir / "data.csv";
  {
    // 12 x 6 complete matrix
    std::ofstream out(data);
    for (int i = 0; i < 12; ++i) {
      for (int s = 0; s < 6; ++s) out << (s ? "," : "") << (i * 6 + s) % 7 + 0.5;
      out << '\n';
    }
  }
  auto observed = dir / "obs.csv";
  auto mask = dir / "mask.csv";
  auto probs = dir / "probs.csv";
  REQUIRE(run("simulate-missing --input " + data.string() +
              " --mechanism mcar:0.7 --seed 5 --out " + observed.string() +
              " --emit-mask " + mask.string() + " --probs-out " + probs.string()) == 0);
  REQUIRE(fs::exists(observed));
  REQUIRE(fs::exists(mask));

  auto est_probs = dir / "est_probs.csv";
  REQUIRE(run("estimate-probs --mask " + mask.string() + " --out " + est_probs.string()) == 0);
  Eigen::MatrixXd est = bcgram::read_dense(est_probs.string());
  CHECK(est.rows() == 12);
  CHECK(est.cols() == 6);
  CHECK(est.maxCoeff() <= 1.0 + 1e-12);

  auto gram = dir / "gram.csv";
  REQUIRE(run("gram --input " + observed.string() +
              " --estimator bc-heterogeneous --probs " + probs.string() + " --out " +
              gram.string()) == 0);
  Eigen::MatrixXd g = bcgram::read_dense(gram.string());
  CHECK(g.rows() == 12);
  CHECK((g - g.transpose()).cwiseAbs().maxCoeff() < 1e-12);

  auto coords = dir / "coords.csv";
  auto eig = dir / "eig.csv";
  REQUIRE(run("pca --gram " + gram.string() + " --dims 2 --out " + coords.string() +
              " --eigenvalues " + eig.string()) == 0);
  CHECK(bcgram::read_dense(coords.string()).cols() == 2);

  auto dist = dir / "dist.csv";
  REQUIRE(run("pc-dist --gram " + gram.string() + " --out " + dist.string()) == 0);
  Eigen::MatrixXd dm = bcgram::read_dense(dist.string());
  CHECK(dm.minCoeff() >= 0.0);
  CHECK(dm.diagonal().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("identical invocations produce byte-identical outputs") {
  fs::path dir = work_dir();
  auto data = dir / "det_data.csv";
  {
    std::ofstream out(data);
    for (int i = 0; i < 10; ++i) {
      for (int s = 0; s < 8; ++s) out << (s ? "," : "") << 0.25 * ((i + 2) * (s + 3) % 11);
      out << '\n';
    }
  }
  auto out1 = dir / "obs1.csv";
  auto out2 = dir / "obs2.csv";
  std::string args = " --mechanism rank1:0.4,0.6,0.7,0.9 --seed 42 --input " + data.string();
  REQUIRE(run("simulate-missing" + args + " --out " + out1.string()) == 0);
  REQUIRE(run("simulate-missing" + args + " --out " + out2.string()) == 0);
  CHECK(slurp(out1) == slurp(out2));
}

TEST_CASE("input files are never mutated") {
  fs::path dir = work_dir();
  auto data = dir / "immutable.csv";
  {
    std::ofstream out(data);
    out << "1,2\n3,4\n5,6\n";
  }
  std::string before = slurp(data);
  auto gram = dir / "g.csv";
  REQUIRE(run("gram --input " + data.string() + " --estimator naive --out " +
              gram.string()) == 0);
  CHECK(slurp(data) == before);
}

TEST_CASE("domain errors exit 1 with a diagnostic") {
  fs::path dir = work_dir();
  auto data = dir / "err_data.csv";
  {
    std::ofstream out(data);
    out << "1,2\n3,4\n";
  }
  auto out = dir / "g.csv";
  CHECK(run("gram --input " + data.string() + " --estimator bc-homogeneous:1.5 --out " +
            out.string()) == 1);
  CHECK(run("gram --input " + (dir / "missing_file.csv").string() +
            " --estimator naive --out " + out.string()) == 1);
}

TEST_CASE("usage errors exit 2") {
  CHECK(run("definitely-not-a-subcommand") == 2);
  CHECK(run("gram") == 2);  // missing required flags
}

TEST_CASE("variance-report emits schema-tagged JSON") {
  fs::path dir = work_dir();
  auto k = dir / "k.csv";
  auto probs = dir / "vp.csv";
  {
    std::ofstream out(k);
    out << "2,0.5\n0.5,1\n";
    std::ofstream pout(probs);
    pout << "0.5,0.6,0.7\n0.8,0.9,1.0\n";
  }
  auto report = dir / "report.json";
  REQUIRE(run("variance-report --k " + k.string() + " --probs " + probs.string() +
              " --out " + report.string()) == 0);
  std::string text = slurp(report);
  CHECK(text.find("\"schema\"") != std::string::npos);
  CHECK(text.find("\"exact\"") != std::string::npos);
  CHECK(text.find("\"lower\"") != std::string::npos);
  CHECK(text.find("\"upper\"") != std::string::npos);
}

TEST_CASE("dropouts subcommand writes mask and votes") {
  fs::path dir = work_dir();
  auto data = dir / "expr.csv";
  {
    std::ofstream out(data);
    for (int i = 0; i < 30; ++i) {
      for (int s = 0; s < 5; ++s) {
        double v = (s == 2) ? 0.0 : (i < 15 ? 5.0 : 2.0) + 0.01 * i;
        out << (s ? "," : "") << v;
      }
      out << '\n';
    }
  }
  auto mask = dir / "call_mask.csv";
  auto votes = dir / "votes.csv";
  REQUIRE(run("dropouts --input " + data.string() +
              " --ks 2,3 --clusterers kmeans --seed 3 --out " + mask.string() +
              " --votes " + votes.string()) == 0);
  Eigen::MatrixXd m = bcgram::read_dense(mask.string());
  CHECK(m.rows() == 30);
  CHECK(m.col(2).minCoeff() == 1.0);  // all-zero gene: non-expression
  CHECK(fs::exists(votes));
}

TEST_CASE("verify subcommand produces a JSON report") {
  fs::path dir = work_dir();
  auto config = dir / "verify.json";
  {
    std::ofstream out(config);
    out << R"({"n":3,"d":200,"replicates":50,"regime":"homogeneous","p":0.7,)"
        << R"("d_sweep":[],"seed":11})";
  }
  auto report = dir / "verify_report.json";
  REQUIRE(run("verify --config " + config.string() + " --out " + report.string()) == 0);
  std::string text = slurp(report);
  CHECK(text.find("bcgram-verify-report/1") != std::string::npos);
  CHECK(text.find("mean_corrected") != std::string::npos);
}

TEST_CASE("experiment subcommand emits the documented CSV columns") {
  fs::path dir = work_dir();
  auto config = dir / "exp.json";
  {
    std::ofstream out(config);
    out << R"({"n":60,"d_in":120,"subset_sizes":[60,120],"subsets_per_size":1,)"
        << R"("kmeans_restarts":5,"seed":12})";
  }
  auto results = dir / "results.csv";
  REQUIRE(run("experiment --config " + config.string() + " --out " + results.string()) == 0);
  std::ifstream in(results);
  std::string header;
  std::getline(in, header);
  CHECK(header == "pipeline,subset_size,replicate,ari");
  int lines = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 2 * 1 * 4);
}
