#include "copvi/data_prep.hpp"

#include "copvi/errors.hpp"
#include "copvi/numerics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace copvi {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  out.push_back(cell);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_cell(const std::string& raw, double& value) {
  const std::string s = trim(raw);
  if (s.empty() || s == "NA" || s == "NaN" || s == "nan") return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw DataError("unparseable numeric cell '" + s + "'");
  }
  return std::isfinite(value);
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

PanelRead read_panel_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV input");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 2) throw DataError("CSV header needs a row-label column and data columns");
  const std::size_t r = header.size() - 1;

  std::vector<std::string> row_labels;
  std::vector<std::vector<double>> cells;
  std::vector<bool> missing(r, false);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError("CSV line " + std::to_string(lineno) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(header.size()));
    }
    row_labels.push_back(trim(fields[0]));
    std::vector<double> row(r, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t j = 0; j < r; ++j) {
      try {
        if (!parse_cell(fields[j + 1], row[j])) missing[j] = true;
      } catch (const DataError& e) {
        throw DataError("CSV line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    cells.push_back(std::move(row));
  }

  PanelRead out;
  out.panel.corner_label = trim(header[0]);
  out.panel.row_labels = row_labels;
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < r; ++j) {
    if (missing[j]) {
      out.dropped_columns.push_back(trim(header[j + 1]));
    } else {
      keep.push_back(j);
      out.panel.column_labels.push_back(trim(header[j + 1]));
    }
  }
  const auto T = static_cast<Eigen::Index>(cells.size());
  out.panel.values.resize(T, static_cast<Eigen::Index>(keep.size()));
  for (Eigen::Index t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < keep.size(); ++k) {
      out.panel.values(t, static_cast<Eigen::Index>(k)) = cells[static_cast<std::size_t>(t)][keep[k]];
    }
  }
  return out;
}

PanelRead read_panel_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_panel_csv(in);
}

void write_panel_csv(std::ostream& out, const Panel& panel) {
  out << quote_if_needed(panel.corner_label);
  for (const auto& c : panel.column_labels) out << ',' << quote_if_needed(c);
  out << '\n';
  out << std::setprecision(17);
  for (Eigen::Index t = 0; t < panel.values.rows(); ++t) {
    const std::string label = static_cast<std::size_t>(t) < panel.row_labels.size()
                                  ? panel.row_labels[static_cast<std::size_t>(t)]
                                  : std::to_string(t);
    out << quote_if_needed(label);
    for (Eigen::Index j = 0; j < panel.values.cols(); ++j) out << ',' << panel.values(t, j);
    out << '\n';
  }
}

Panel difference_series(const Panel& panel) {
  const Eigen::Index T = panel.values.rows();
  if (T < 2) throw DataError("difference_series: need at least two rows");
  Panel out;
  out.corner_label = panel.corner_label;
  out.column_labels = panel.column_labels;
  out.values = panel.values.bottomRows(T - 1) - panel.values.topRows(T - 1);
  if (panel.row_labels.size() == static_cast<std::size_t>(T)) {
    out.row_labels.assign(panel.row_labels.begin() + 1, panel.row_labels.end());
  }
  return out;
}

KdeMarginal KdeMarginal::fit(const Eigen::Ref<const Eigen::VectorXd>& data) {
  const Eigen::Index n = data.size();
  if (n < 1) throw DataError("kde: empty sample");
  KdeMarginal k;
  k.points = data;
  double sd = 0.0;
  if (n > 1) {
    const double mean = data.mean();
    sd = std::sqrt((data.array() - mean).square().sum() / static_cast<double>(n - 1));
  }
  // a constant column still needs a positive bandwidth
  if (!(sd > 0.0)) sd = 1.0;
  k.bandwidth = 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
  return k;
}

double KdeMarginal::density(double y) const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < points.size(); ++i) s += num::norm_pdf((y - points(i)) / bandwidth);
  return s / (static_cast<double>(points.size()) * bandwidth);
}

double kde_cdf(const KdeMarginal& kde, double y) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < kde.points.size(); ++i) {
    s += num::norm_cdf((y - kde.points(i)) / kde.bandwidth);
  }
  return std::clamp(s / static_cast<double>(kde.points.size()), kCdfClamp, 1.0 - kCdfClamp);
}

CopulaData to_copula_scores(const Panel& panel, Eigen::Index min_obs) {
  const Eigen::Index T = panel.values.rows();
  const Eigen::Index r = panel.values.cols();
  if (T < min_obs) {
    throw DataError("to_copula_scores: " + std::to_string(T) +
                    " observations per column, need at least " + std::to_string(min_obs));
  }
  CopulaData data;
  data.X.resize(T, r);
  for (Eigen::Index j = 0; j < r; ++j) {
    const KdeMarginal kde = KdeMarginal::fit(panel.values.col(j));
    for (Eigen::Index t = 0; t < T; ++t) {
      data.X(t, j) = num::norm_quantile(kde_cdf(kde, panel.values(t, j)));
    }
  }
  return data;
}

Eigen::MatrixXd corr_from_pairs(const std::vector<double>& pairs, Eigen::Index r) {
  if (static_cast<Eigen::Index>(pairs.size()) != pair_count(r)) {
    throw std::invalid_argument("corr_from_pairs: expected r(r-1)/2 = " +
                                std::to_string(pair_count(r)) + " values");
  }
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(r, r);
  std::size_t k = 0;
  for (Eigen::Index i = 1; i < r; ++i) {
    for (Eigen::Index j = 0; j < i; ++j, ++k) {
      c(i, j) = c(j, i) = pairs[k];
    }
  }
  return c;
}

Panel simulate_gaussian_panel(const Eigen::MatrixXd& corr, Eigen::Index n, std::uint64_t seed) {
  const Eigen::Index r = corr.rows();
  const Eigen::LLT<Eigen::MatrixXd> llt(corr);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("simulate: correlation matrix is not positive definite");
  }
  const Eigen::MatrixXd L = llt.matrixL();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Panel p;
  p.corner_label = "row";
  p.values.resize(n, r);
  Eigen::VectorXd z(r);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index j = 0; j < r; ++j) z(j) = normal(rng);
    p.values.row(t) = (L * z).transpose();
    p.row_labels.push_back(std::to_string(t + 1));
  }
  for (Eigen::Index j = 0; j < r; ++j) p.column_labels.push_back("V" + std::to_string(j + 1));
  return p;
}

}  // namespace copvi
