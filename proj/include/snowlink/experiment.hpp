#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "snowlink/estimators.hpp"
#include "snowlink/simulator.hpp"
#include "snowlink/variance.hpp"

namespace snowlink {

struct OutputPaths {
  std::filesystem::path dir = "experiment_out";
  std::string summary = "summary.json";
  std::string replicates_csv = "replicates.csv";
  std::string digest = "digest.txt";
};

struct ExperimentConfig {
  PopulationConfig population;
  int replicates = 1;
  std::vector<Method> methods{Method::Umle, Method::Cmle};
  std::uint64_t master_seed = 0;
  int workers = 1;
  double level = 0.95;
  VarianceSource variance_source = VarianceSource::Analytic;
  FitOptions fit;
  OutputPaths outputs;

  void validate() const;
};

ExperimentConfig experiment_from_json(const nlohmann::json& doc);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct MethodOutcome {
  Method method = Method::Umle;
  bool ok = false;
  std::string error;
  EstimateReport estimate;
  VarianceReport variance;
};

struct ReplicateRecord {
  int index = 0;
  std::uint64_t seed = 0;
  GroundTruth truth;
  std::vector<MethodOutcome> outcomes;  // same order as config.methods
};

struct TargetSummary {
  std::string target;
  int count = 0;
  double mean = 0.0;
  std::optional<double> mean_ratio;  // mean of estimate / truth, tau targets only
  double bias = 0.0;
  double empirical_sd = 0.0;
  double mean_asymptotic_sd = 0.0;
  double sd_ratio = 0.0;
  double coverage = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double ks_statistic = 0.0;  // sup distance of standardized residuals to N(0,1)

  bool operator==(const TargetSummary&) const = default;
};

struct MethodSummary {
  Method method = Method::Umle;
  int successes = 0;
  int failures = 0;
  std::map<std::string, int> failure_kinds;
  std::vector<TargetSummary> targets;

  bool operator==(const MethodSummary&) const = default;
};

struct MonteCarloSummary {
  int replicates = 0;
  std::uint64_t master_seed = 0;
  double level = 0.95;
  std::string variance_source = "analytic";
  std::vector<MethodSummary> methods;
  std::vector<ReplicateRecord> records;

  const TargetSummary& target(Method method, const std::string& name) const;
};

MonteCarloSummary run_experiment(const ExperimentConfig& config);

// single replicate, as run_experiment performs it
ReplicateRecord run_replicate(const ExperimentConfig& config, int index);

nlohmann::json summary_to_json(const MonteCarloSummary& summary);
// aggregates only; per-replicate records are not part of the JSON summary
MonteCarloSummary summary_from_json(const nlohmann::json& doc);

std::string replicates_csv_header();
std::string replicates_csv(const MonteCarloSummary& summary);
std::string digest_text(const MonteCarloSummary& summary);

void emit_reports(const MonteCarloSummary& summary, const OutputPaths& paths);

}  // namespace snowlink
