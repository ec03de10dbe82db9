#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include <json.hpp>

#include "snowlink/link_model.hpp"
#include "snowlink/patterns.hpp"
#include "snowlink/rng.hpp"

namespace snowlink {

struct PoissonClusters {
  double lambda1 = 0.0;
};

// (M_1..M_N) ~ multinomial(tau1; 1/N, ..., 1/N)
struct FixedTotalClusters {
  std::int64_t tau1 = 0;
};

using ClusterMode = std::variant<PoissonClusters, FixedTotalClusters>;

struct PopulationConfig {
  std::int64_t N = 1;
  int n = 1;
  ClusterMode clusters = FixedTotalClusters{};
  std::int64_t tau2 = 0;
  ModelSpec model1;
  ModelSpec model2;
  LinkParams theta1;
  LinkParams theta2;

  void validate() const;
};

struct GroundTruth {
  std::int64_t tau1 = 0;
  std::int64_t tau2 = 0;
  std::int64_t tau = 0;
  std::vector<std::int64_t> cluster_sizes;  // M_1..M_N over the frame
  std::vector<std::int64_t> sampled_sites;  // frame index of sampled site l
  std::int64_t unobserved1 = 0;             // zero-pattern persons outside the sampled sites
  std::int64_t unobserved2 = 0;
  LinkParams theta1;
  LinkParams theta2;
};

struct SimulatedSample {
  SampleData data;
  GroundTruth truth;
};

std::vector<std::int64_t> draw_cluster_sizes(const PopulationConfig& config, Rng& rng);
SimulatedSample draw_sample(const PopulationConfig& config, Rng& rng);
SimulatedSample draw_sample(const PopulationConfig& config, std::uint64_t seed);

PopulationConfig population_from_json(const nlohmann::json& doc);
nlohmann::json population_to_json(const PopulationConfig& config);
nlohmann::json ground_truth_to_json(const GroundTruth& truth);
ModelSpec model_spec_from_json(const nlohmann::json& doc, int default_n);
nlohmann::json model_spec_to_json(const ModelSpec& spec);

}  // namespace snowlink
