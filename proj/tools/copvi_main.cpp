#include "copvi/commands.hpp"
#include "copvi/kl_bench.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  using namespace copvi;

  CLI::App app{"Elliptical copula variational inference"};
  app.require_subcommand(1);

  FitCorrOptions fit;
  auto* fit_cmd = app.add_subcommand("fit-corr", "fit the regularized correlation model to a CSV panel");
  fit_cmd->add_option("--data", fit.data, "input CSV (labels in first row and column)")->required();
  fit_cmd->add_flag("--difference", fit.difference, "use first differences of each column");
  fit_cmd->add_option("--family", fit.family)->check(CLI::IsMember({"gaussian", "t", "laplace"}));
  fit_cmd->add_option("--transform", fit.transform)
      ->check(CLI::IsMember({"identity", "yj", "igh", "double-yj"}));
  fit_cmd->add_option("--factors", fit.factors, "columns K of B")->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--steps", fit.steps)->check(CLI::PositiveNumber);
  fit_cmd->add_option("--seed", fit.seed);
  fit_cmd->add_option("--step-rule", fit.step_rule)->check(CLI::IsMember({"adadelta", "adam"}));
  fit_cmd->add_option("--out", fit.out, "JSON artifact path")->required();
  fit_cmd->add_option("--trace", fit.trace, "CSV trace path (step,elbo)");
  fit_cmd->add_option("--min-obs", fit.min_obs, "minimum observations per column");
  fit_cmd->add_flag("--reproducible", fit.reproducible, "record wall_seconds as 0");

  ReportOptions rep;
  auto* rep_cmd = app.add_subcommand("report", "posterior mean Spearman matrix from a fit");
  rep_cmd->add_option("--artifact", rep.artifact)->required();
  rep_cmd->add_option("--draws", rep.draws)->check(CLI::PositiveNumber);
  rep_cmd->add_option("--seed", rep.seed);
  rep_cmd->add_option("--out-mean", rep.out_mean, "mean Spearman matrix CSV");
  rep_cmd->add_option("--out-quantiles", rep.out_quantiles, "per-pair summary CSV");

  KlBenchOptions kl;
  std::vector<std::string> kl_families{"adjusted", "sln2020", "gaussian"};
  std::string fit_dir = "target-to-q";
  std::string report_dir = "q-to-target";
  auto* kl_cmd = app.add_subcommand("kl-bench", "optimal KL of marginal families to skew-normal targets");
  kl_cmd->add_option("--skew", kl.config.skew);
  kl_cmd->add_option("--mu-grid", kl.config.mu_grid)->delimiter(',');
  kl_cmd->add_option("--sigma-grid", kl.config.sigma_grid)->delimiter(',');
  kl_cmd->add_option("--families", kl_families)
      ->delimiter(',')
      ->check(CLI::IsMember({"adjusted", "sln2020", "gaussian"}));
  kl_cmd->add_option("--direction", fit_dir, "divergence minimized")
      ->check(CLI::IsMember({"target-to-q", "q-to-target"}));
  kl_cmd->add_option("--report-direction", report_dir, "divergence reported in the kl column")
      ->check(CLI::IsMember({"target-to-q", "q-to-target"}));
  kl_cmd->add_option("--nodes", kl.config.nodes)->check(CLI::Range(2, 100000));
  kl_cmd->add_option("--starts", kl.config.starts)->check(CLI::Range(1, 1000));
  kl_cmd->add_option("--out", kl.out, "CSV path (default stdout)");

  SampleOptions smp;
  auto* smp_cmd = app.add_subcommand("sample", "draw theta from a fitted approximation");
  smp_cmd->add_option("--artifact", smp.artifact)->required();
  smp_cmd->add_option("--count", smp.count);
  smp_cmd->add_option("--seed", smp.seed);
  smp_cmd->add_option("--out", smp.out, "CSV path (default stdout)");

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "write a Gaussian-copula panel with normal margins");
  sim_cmd->add_option("--r", sim.r)->check(CLI::Range(2L, 10000L));
  sim_cmd->add_option("--n", sim.n);
  sim_cmd->add_option("--pairs", sim.pairs, "below-diagonal correlations, row by row")->delimiter(',');
  sim_cmd->add_option("--rho", sim.rho, "common correlation when --pairs is absent");
  sim_cmd->add_option("--seed", sim.seed);
  sim_cmd->add_option("--out", sim.out, "CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  return guarded(
      [&] {
        if (*fit_cmd) {
          cmd_fit_corr(fit, std::cerr);
        } else if (*rep_cmd) {
          cmd_report(rep, std::cerr);
        } else if (*kl_cmd) {
          kl.config.families.clear();
          for (const auto& f : kl_families) kl.config.families.push_back(kl_family_from_string(f));
          kl.config.fit_direction = kl_direction_from_string(fit_dir);
          kl.config.report_direction = kl_direction_from_string(report_dir);
          cmd_kl_bench(kl, std::cerr);
        } else if (*smp_cmd) {
          cmd_sample(smp, std::cerr);
        } else if (*sim_cmd) {
          cmd_simulate(sim, std::cerr);
        }
      },
      std::cerr);
}
