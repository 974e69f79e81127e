#pragma once

#include <Eigen/Core>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bcgram {

/// Partially observed N x D matrix. Missing cells are stored as 0 in
/// `values`; `mask` (entries 0/1) is the single source of truth for
/// missingness.
struct ObservedMatrix {
  Eigen::MatrixXd values;
  Eigen::MatrixXd mask;  // 0/1

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

/// Validates invariants and zero-fills masked cells.
inline ObservedMatrix make_observed(Eigen::MatrixXd values, Eigen::MatrixXd mask) {
  if (values.rows() != mask.rows() || values.cols() != mask.cols())
    throw std::invalid_argument("values/mask dimension mismatch");
  if (values.rows() < 2 || values.cols() < 1)
    throw std::invalid_argument("ObservedMatrix requires n >= 2 and d_in >= 1");
  for (Eigen::Index i = 0; i < mask.rows(); ++i)
    for (Eigen::Index s = 0; s < mask.cols(); ++s) {
      double m = mask(i, s);
      if (m != 0.0 && m != 1.0)
        throw std::invalid_argument("mask entries must be 0 or 1");
      if (m == 0.0) values(i, s) = 0.0;
    }
  return ObservedMatrix{std::move(values), std::move(mask)};
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& cell, Eigen::Index row, Eigen::Index col) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end) {
    std::ostringstream msg;
    msg << "non-numeric cell '" << cell << "' at row " << row << ", column " << col;
    throw std::runtime_error(msg.str());
  }
  return v;
}

inline std::vector<std::vector<std::string>> read_csv_cells(const std::string& path,
                                                            bool skip_header) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open '" + path + "': " + std::strerror(errno));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first && skip_header) {
      first = false;
      continue;
    }
    first = false;
    if (line.empty() && in.peek() == EOF) break;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw std::runtime_error("empty CSV file '" + path + "'");
  return rows;
}

inline void format_cell(char* buf, std::size_t n, double v) {
  std::snprintf(buf, n, "%.17g", v);
}

}  // namespace detail

/// Reads a CSV of numeric cells; cells equal to `missing_token` (or empty)
/// are treated as missing and recorded in the mask.
inline ObservedMatrix read_matrix(const std::string& path,
                                  const std::string& missing_token = "NA",
                                  bool skip_header = false) {
  auto rows = detail::read_csv_cells(path, skip_header);
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index d = static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd values(n, d), mask(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != d) {
      std::ostringstream msg;
      msg << "ragged CSV: row " << i << " has " << rows[i].size() << " cells, expected " << d;
      throw std::runtime_error(msg.str());
    }
    for (Eigen::Index s = 0; s < d; ++s) {
      std::string cell = detail::trim(rows[i][s]);
      if (cell.empty() || cell == missing_token) {
        values(i, s) = 0.0;
        mask(i, s) = 0.0;
      } else {
        values(i, s) = detail::parse_double(cell, i, s);
        mask(i, s) = 1.0;
      }
    }
  }
  return make_observed(std::move(values), std::move(mask));
}

inline void write_matrix(const ObservedMatrix& m, const std::string& path,
                         const std::string& missing_token = "NA") {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write '" + path + "': " + std::strerror(errno));
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index s = 0; s < m.cols(); ++s) {
      if (s) out << ',';
      if (m.mask(i, s) == 0.0) {
        out << missing_token;
      } else {
        detail::format_cell(buf, sizeof buf, m.values(i, s));
        out << buf;
      }
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("I/O error writing '" + path + "'");
}

/// Reads a fully observed CSV matrix (no missing tokens allowed).
inline Eigen::MatrixXd read_dense(const std::string& path, bool skip_header = false) {
  auto rows = detail::read_csv_cells(path, skip_header);
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index d = static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd out(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != d) {
      std::ostringstream msg;
      msg << "ragged CSV: row " << i << " has " << rows[i].size() << " cells, expected " << d;
      throw std::runtime_error(msg.str());
    }
    for (Eigen::Index s = 0; s < d; ++s)
      out(i, s) = detail::parse_double(detail::trim(rows[i][s]), i, s);
  }
  return out;
}

inline void write_dense(const Eigen::MatrixXd& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write '" + path + "': " + std::strerror(errno));
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index s = 0; s < m.cols(); ++s) {
      if (s) out << ',';
      detail::format_cell(buf, sizeof buf, m(i, s));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("I/O error writing '" + path + "'");
}

/// Validated N x N symmetric covariance/kernel matrix.
struct CovarianceMatrix {
  Eigen::MatrixXd entries;

  Eigen::Index size() const { return entries.rows(); }
};

inline CovarianceMatrix make_covariance(Eigen::MatrixXd k) {
  if (k.rows() != k.cols()) throw std::invalid_argument("covariance matrix must be square");
  double scale = k.cwiseAbs().maxCoeff();
  if ((k - k.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1.0))
    throw std::invalid_argument("covariance matrix must be symmetric");
  return CovarianceMatrix{std::move(k)};
}

}  // namespace bcgram
