#pragma once

#include "copvi/targets.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace copvi {

struct Panel {
  Eigen::MatrixXd values;  // T x r
  std::vector<std::string> column_labels;
  std::vector<std::string> row_labels;
  std::string corner_label;  // header cell above the row labels
};

struct PanelRead {
  Panel panel;
  std::vector<std::string> dropped_columns;  // had at least one missing cell
};

// First row holds column labels, first column holds row labels. Empty, "NA"
// and "NaN" cells count as missing; columns containing any are dropped.
PanelRead read_panel_csv(std::istream& in);
PanelRead read_panel_csv_file(const std::string& path);

void write_panel_csv(std::ostream& out, const Panel& panel);

Panel difference_series(const Panel& panel);

struct KdeMarginal {
  Eigen::VectorXd points;
  double bandwidth = 1.0;

  // Gaussian kernel, Silverman bandwidth 1.06 sd n^{-1/5}.
  static KdeMarginal fit(const Eigen::Ref<const Eigen::VectorXd>& data);
  double density(double y) const;
};

inline constexpr double kCdfClamp = 1e-6;

// Mean of Phi((y - y_i)/b), clamped to [1e-6, 1 - 1e-6].
double kde_cdf(const KdeMarginal& kde, double y);

// Column-wise KDE, CDF and probit. Throws DataError when a column has fewer
// than min_obs observations.
CopulaData to_copula_scores(const Panel& panel, Eigen::Index min_obs = 10);

// Correlation matrix from the r(r-1)/2 entries below the diagonal, listed
// row by row: (1,0), (2,0), (2,1), ...
Eigen::MatrixXd corr_from_pairs(const std::vector<double>& pairs, Eigen::Index r);

// n rows drawn from N(0, corr); rows labelled 1..n, columns V1..Vr.
Panel simulate_gaussian_panel(const Eigen::MatrixXd& corr, Eigen::Index n, std::uint64_t seed);

}  // namespace copvi
