#include "copvi/commands.hpp"

#include "copvi/artifact.hpp"
#include "copvi/data_prep.hpp"
#include "copvi/errors.hpp"
#include "copvi/parallel.hpp"
#include "copvi/targets.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <stdexcept>

namespace copvi {

namespace {

using nlohmann::json;

constexpr std::uint64_t kInitStream = 0x5eed1a3bULL;
constexpr double kCorrInitialSigma = 0.1;
constexpr double kReportQuantiles[] = {0.025, 0.05, 0.25, 0.5, 0.75, 0.95, 0.975};

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

FamilyKind sampling_family(const std::string& name) {
  const FamilyKind k = family_kind_from_string(name);
  if (k == FamilyKind::ExpPower) {
    throw UnsupportedFamilyError("family exp-power cannot be sampled; use gaussian, t or laplace");
  }
  return k;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

// Writes to path, or to stdout when path is empty.
template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty()) {
    fn(std::cout);
    return;
  }
  std::ofstream out = open_out(path);
  fn(out);
  if (!out) throw DataError("failed writing " + path);
}

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::string csv_label(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

VariationalParams corr_initial(Eigen::Index m, Eigen::Index K, TransformKind kind,
                               FamilyKind family, std::uint64_t seed) {
  std::mt19937_64 init_rng = stream_rng(seed, kInitStream);
  VariationalParams lambda0 = VariationalParams::initial(m, K, kind, family, init_rng);
  // the copula posterior is sharp in eta, a unit-scale start lands on near-singular Omega
  for (auto& t : lambda0.transforms) t.log_sigma = std::log(kCorrInitialSigma);
  return lambda0;
}

void cmd_fit_corr(const FitCorrOptions& opt, std::ostream& log) {
  if (opt.factors < 0) throw std::invalid_argument("--factors must be >= 0");
  if (opt.steps == 0) throw std::invalid_argument("--steps must be >= 1");
  if (opt.out.empty()) throw std::invalid_argument("--out is required");
  const FamilyKind family = sampling_family(opt.family);
  const TransformKind kind = transform_kind_from_string(opt.transform);
  SgaConfig cfg;
  cfg.steps = opt.steps;
  cfg.seed = opt.seed;
  cfg.rule = step_rule_from_string(opt.step_rule);

  PanelRead read = read_panel_csv_file(opt.data);
  for (const auto& c : read.dropped_columns) {
    log << "warning: dropping column '" << c << "' (missing cells)\n";
  }
  Panel panel = opt.difference ? difference_series(read.panel) : std::move(read.panel);
  if (panel.values.cols() < 2) throw DataError("need at least two complete columns");
  const CorrModel model(to_copula_scores(panel, opt.min_obs));
  const Eigen::Index r = model.r();
  const Eigen::Index m = model.dim();

  const VariationalParams lambda0 = corr_initial(m, opt.factors, kind, family, opt.seed);

  std::ofstream trace;
  if (!opt.trace.empty()) {
    trace = open_out(opt.trace);
    trace << "step,elbo\n" << std::setprecision(17);
  }
  TraceSink sink;
  if (trace.is_open()) sink = [&trace](const TracePoint& p) { trace << p.step << ',' << p.elbo << '\n'; };

  const auto t0 = std::chrono::steady_clock::now();
  FitResult res = run(model, lambda0, cfg, sink);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (trace.is_open() && !trace) throw DataError("failed writing " + opt.trace);

  FitArtifact art;
  art.config = {{"command", "fit-corr"},        {"data", opt.data},
                {"difference", opt.difference}, {"family", opt.family},
                {"transform", opt.transform},   {"factors", opt.factors},
                {"steps", opt.steps},           {"seed", opt.seed},
                {"step_rule", opt.step_rule},   {"min_obs", opt.min_obs}};
  art.lambda = std::move(res.lambda_star);
  art.lb_bar = res.lb.value;
  art.lb_bar_short = res.lb.short_trace;
  art.steps = res.steps;
  art.seed = opt.seed;
  art.wall_seconds = opt.reproducible ? 0.0 : wall;
  art.r = r;
  art.column_labels = panel.column_labels;
  save_artifact(opt.out, art);

  log << "fit-corr: r=" << r << " N=" << model.n() << " m=" << m << " K=" << opt.factors
      << " family=" << opt.family << " transform=" << opt.transform << " steps=" << res.steps
      << " lb_bar=" << std::setprecision(8) << res.lb.value
      << (res.lb.short_trace ? " (short trace)" : "") << '\n';
  if (art.lambda.family.kind == FamilyKind::StudentT && art.lambda.family.nu() > 29.0) {
    log << "note: fitted nu = " << art.lambda.family.nu() << " (effectively Gaussian)\n";
  }
}

void cmd_report(const ReportOptions& opt, std::ostream& log) {
  if (opt.draws == 0) throw std::invalid_argument("--draws must be >= 1");
  const FitArtifact art = load_artifact(opt.artifact);
  const Eigen::Index r = art.r;
  if (r < 2 || corr_param_dim(r) != art.lambda.dim()) {
    throw DataError("artifact does not hold a correlation-model fit");
  }
  const Eigen::Index S = pair_count(r);
  const Eigen::Index m = art.lambda.dim();
  const Eigen::Index K = art.lambda.factors();
  const std::size_t D = opt.draws;

  Eigen::MatrixXd pairs(static_cast<Eigen::Index>(D), S);
  parallel_for(D, worker_count(), [&](std::size_t d) {
    std::mt19937_64 rng = stream_rng(opt.seed, d);
    const SampleRecord rec = sample(art.lambda, BaseDraw::draw(m, K, rng));
    const Eigen::MatrixXd sp = spearman_from_omega(omega_from_theta(rec.theta, r));
    for (Eigen::Index i = 1; i < r; ++i) {
      for (Eigen::Index j = 0; j < i; ++j) pairs(static_cast<Eigen::Index>(d), pair_index(i, j)) = sp(i, j);
    }
  });

  const Eigen::VectorXd mean = pairs.colwise().mean().transpose();
  Eigen::MatrixXd mean_sp = Eigen::MatrixXd::Identity(r, r);
  for (Eigen::Index i = 1; i < r; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) mean_sp(i, j) = mean_sp(j, i) = mean(pair_index(i, j));
  }
  auto label = [&](Eigen::Index i) {
    return static_cast<std::size_t>(i) < art.column_labels.size()
               ? art.column_labels[static_cast<std::size_t>(i)]
               : "V" + std::to_string(i + 1);
  };

  if (!opt.out_mean.empty()) {
    with_output(opt.out_mean, [&](std::ostream& out) {
      out << "";
      for (Eigen::Index j = 0; j < r; ++j) out << ',' << csv_label(label(j));
      out << '\n' << std::setprecision(10);
      for (Eigen::Index i = 0; i < r; ++i) {
        out << csv_label(label(i));
        for (Eigen::Index j = 0; j < r; ++j) out << ',' << mean_sp(i, j);
        out << '\n';
      }
    });
  }
  if (!opt.out_quantiles.empty()) {
    with_output(opt.out_quantiles, [&](std::ostream& out) {
      out << "row,col,row_label,col_label,mean,sd";
      for (double q : kReportQuantiles) out << ",q" << q;
      out << '\n' << std::setprecision(10);
      for (Eigen::Index i = 1; i < r; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
          const Eigen::Index s = pair_index(i, j);
          std::vector<double> v(pairs.col(s).data(), pairs.col(s).data() + D);
          std::sort(v.begin(), v.end());
          double var = 0.0;
          for (double x : v) var += (x - mean(s)) * (x - mean(s));
          const double sd = D > 1 ? std::sqrt(var / static_cast<double>(D - 1)) : 0.0;
          out << i + 1 << ',' << j + 1 << ',' << csv_label(label(i)) << ',' << csv_label(label(j))
              << ',' << mean(s) << ',' << sd;
          for (double q : kReportQuantiles) out << ',' << quantile_sorted(v, q);
          out << '\n';
        }
      }
    });
  }
  log << "report: r=" << r << " draws=" << D << '\n';
}

void cmd_kl_bench(const KlBenchOptions& opt, std::ostream& log) {
  const std::vector<KlRow> rows = kl_bench(opt.config, worker_count());
  with_output(opt.out, [&](std::ostream& out) { write_kl_csv(out, rows); });
  std::map<std::string, std::pair<double, double>> range;
  for (const auto& r : rows) {
    const std::string f(to_string(r.family));
    auto it = range.find(f);
    if (it == range.end()) {
      range[f] = {r.kl, r.kl};
    } else {
      it->second.first = std::min(it->second.first, r.kl);
      it->second.second = std::max(it->second.second, r.kl);
    }
    if (!r.converged) {
      log << "warning: " << f << " mu=" << r.mu << " sigma=" << r.sigma << " did not converge\n";
    }
  }
  for (const auto& [f, mm] : range) {
    log << "kl-bench: " << f << " KL in [" << std::setprecision(5) << mm.first << ", "
        << mm.second << "]\n";
  }
}

void cmd_sample(const SampleOptions& opt, std::ostream& log) {
  const FitArtifact art = load_artifact(opt.artifact);
  const Eigen::Index m = art.lambda.dim();
  const Eigen::Index K = art.lambda.factors();
  std::mt19937_64 rng(opt.seed);
  with_output(opt.out, [&](std::ostream& out) {
    for (Eigen::Index i = 0; i < m; ++i) out << (i ? "," : "") << "theta_" << i + 1;
    out << '\n' << std::setprecision(17);
    for (std::size_t n = 0; n < opt.count; ++n) {
      const SampleRecord rec = sample(art.lambda, BaseDraw::draw(m, K, rng));
      for (Eigen::Index i = 0; i < m; ++i) out << (i ? "," : "") << rec.theta(i);
      out << '\n';
    }
  });
  log << "sample: " << opt.count << " draws of dimension " << m << '\n';
}

void cmd_simulate(const SimulateOptions& opt, std::ostream& log) {
  if (opt.r < 2) throw std::invalid_argument("--r must be >= 2");
  std::vector<double> pairs = opt.pairs;
  if (pairs.empty()) pairs.assign(static_cast<std::size_t>(pair_count(opt.r)), opt.rho);
  const Eigen::MatrixXd corr = corr_from_pairs(pairs, opt.r);
  const Panel p = simulate_gaussian_panel(corr, static_cast<Eigen::Index>(opt.n), opt.seed);
  with_output(opt.out, [&](std::ostream& out) { write_panel_csv(out, p); });
  log << "simulate: r=" << opt.r << " n=" << opt.n << '\n';
}

int guarded(const std::function<void()>& body, std::ostream& err) {
  try {
    body();
    return kExitOk;
  } catch (const RunError& e) {
    err << "error: numeric failure at " << e.what() << '\n';
    return kExitNumeric;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
}

}  // namespace copvi
