#pragma once

#include "copvi/kl_bench.hpp"
#include "copvi/optimizer.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace copvi {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitData = 3, kExitNumeric = 4 };

struct FitCorrOptions {
  std::string data;
  bool difference = false;
  std::string family = "t";
  std::string transform = "yj";
  long factors = 2;
  std::size_t steps = 15000;
  std::uint64_t seed = 1;
  std::string step_rule = "adadelta";
  std::string out;
  std::string trace;
  long min_obs = 10;
  bool reproducible = false;  // write wall_seconds as 0
};

struct ReportOptions {
  std::string artifact;
  std::size_t draws = 2000;
  std::uint64_t seed = 1;
  std::string out_mean;
  std::string out_quantiles;
};

struct KlBenchOptions {
  KlBenchConfig config;
  std::string out;  // empty: stdout
};

struct SampleOptions {
  std::string artifact;
  std::size_t count = 1000;
  std::uint64_t seed = 1;
  std::string out;  // empty: stdout
};

struct SimulateOptions {
  long r = 3;
  std::size_t n = 500;
  std::vector<double> pairs;  // r(r-1)/2 correlations; empty uses rho
  double rho = 0.0;
  std::uint64_t seed = 1;
  std::string out;  // empty: stdout
};

// Starting point used by fit-corr: neutral shapes with sigma = 0.1.
VariationalParams corr_initial(Eigen::Index m, Eigen::Index K, TransformKind kind,
                               FamilyKind family, std::uint64_t seed);

void cmd_fit_corr(const FitCorrOptions& opt, std::ostream& log);
void cmd_report(const ReportOptions& opt, std::ostream& log);
void cmd_kl_bench(const KlBenchOptions& opt, std::ostream& log);
void cmd_sample(const SampleOptions& opt, std::ostream& log);
void cmd_simulate(const SimulateOptions& opt, std::ostream& log);

// Runs body and maps exceptions to exit codes: usage 2, data 3, numeric 4.
int guarded(const std::function<void()>& body, std::ostream& err);

}  // namespace copvi
