#include "snowlink/simulator.hpp"

#include <numeric>

#include "snowlink/errors.hpp"
#include "snowlink/json_io.hpp"

namespace snowlink {

void PopulationConfig::validate() const {
  if (n < 1 || n > kMaxSites) fail(ErrorKind::ConfigError, "population n out of range");
  if (N < n) fail(ErrorKind::ConfigError, "population needs N >= n");
  if (const auto* p = std::get_if<PoissonClusters>(&clusters)) {
    if (!(p->lambda1 > 0.0)) fail(ErrorKind::ConfigError, "lambda1 must be > 0");
  } else if (std::get<FixedTotalClusters>(clusters).tau1 < 0) {
    fail(ErrorKind::ConfigError, "tau1 must be >= 0");
  }
  if (tau2 < 0) fail(ErrorKind::ConfigError, "tau2 must be >= 0");
  if (model1.n != n || model2.n != n) fail(ErrorKind::ConfigError, "model site count must equal n");
  const auto m1 = make_model(model1);
  const auto m2 = make_model(model2);
  try {
    m1->check_params(theta1);
    m2->check_params(theta2);
  } catch (const Error& e) {
    fail(ErrorKind::ConfigError, e.what());
  }
  for (std::size_t j = 0; j < theta1.size(); ++j) {
    if (m1->nonnegative()[j] && theta1[j] < 0) fail(ErrorKind::ConfigError, "theta1 violates sigma >= 0");
  }
  for (std::size_t j = 0; j < theta2.size(); ++j) {
    if (m2->nonnegative()[j] && theta2[j] < 0) fail(ErrorKind::ConfigError, "theta2 violates sigma >= 0");
  }
}

std::vector<std::int64_t> draw_cluster_sizes(const PopulationConfig& config, Rng& rng) {
  config.validate();
  const auto N = static_cast<std::size_t>(config.N);
  std::vector<std::int64_t> sizes(N, 0);
  if (const auto* p = std::get_if<PoissonClusters>(&config.clusters)) {
    std::poisson_distribution<std::int64_t> pois(p->lambda1);
    for (auto& s : sizes) s = pois(rng);
    return sizes;
  }
  // sequential binomial split of a fixed total
  std::int64_t remaining = std::get<FixedTotalClusters>(config.clusters).tau1;
  for (std::size_t i = 0; i + 1 < N && remaining > 0; ++i) {
    std::binomial_distribution<std::int64_t> bin(remaining, 1.0 / static_cast<double>(N - i));
    sizes[i] = bin(rng);
    remaining -= sizes[i];
  }
  sizes[N - 1] += remaining;
  return sizes;
}

SimulatedSample draw_sample(const PopulationConfig& config, Rng& rng) {
  const auto sizes = draw_cluster_sizes(config, rng);
  const auto model1 = make_model(config.model1);
  const auto model2 = make_model(config.model2);
  const int n = config.n;

  // partial Fisher-Yates: the first n entries are the sample, in draw order
  std::vector<std::int64_t> frame(static_cast<std::size_t>(config.N));
  std::iota(frame.begin(), frame.end(), std::int64_t{0});
  for (int l = 0; l < n; ++l) {
    std::uniform_int_distribution<std::int64_t> pick(l, config.N - 1);
    std::swap(frame[static_cast<std::size_t>(l)], frame[static_cast<std::size_t>(pick(rng))]);
  }

  GroundTruth truth;
  truth.cluster_sizes = sizes;
  truth.sampled_sites.assign(frame.begin(), frame.begin() + n);
  truth.tau1 = std::accumulate(sizes.begin(), sizes.end(), std::int64_t{0});
  truth.tau2 = config.tau2;
  truth.tau = truth.tau1 + truth.tau2;
  truth.theta1 = config.theta1;
  truth.theta2 = config.theta2;

  std::vector<std::int64_t> m(static_cast<std::size_t>(n));
  std::vector<CountMap> within(static_cast<std::size_t>(n));
  for (int l = 0; l < n; ++l) {
    m[l] = sizes[static_cast<std::size_t>(truth.sampled_sites[l])];
    for (std::int64_t p = 0; p < m[l]; ++p) {
      const auto x = model1->draw(config.theta1, Scope::within(l), rng);
      if (!x.is_zero()) ++within[l][x];
    }
  }
  const std::int64_t m_total = std::accumulate(m.begin(), m.end(), std::int64_t{0});

  CountMap between1;
  for (std::int64_t p = 0; p < truth.tau1 - m_total; ++p) {
    const auto x = model1->draw(config.theta1, Scope::between(), rng);
    if (x.is_zero()) {
      ++truth.unobserved1;
    } else {
      ++between1[x];
    }
  }
  CountMap between2;
  for (std::int64_t p = 0; p < config.tau2; ++p) {
    const auto x = model2->draw(config.theta2, Scope::between(), rng);
    if (x.is_zero()) {
      ++truth.unobserved2;
    } else {
      ++between2[x];
    }
  }
  return {SampleData(n, config.N, std::move(m), std::move(between1), std::move(within), std::move(between2)),
          std::move(truth)};
}

SimulatedSample draw_sample(const PopulationConfig& config, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return draw_sample(config, rng);
}

ModelSpec model_spec_from_json(const json& doc, int default_n) {
  if (!doc.is_object()) fail(ErrorKind::ConfigError, "model spec must be an object");
  ModelSpec spec;
  try {
    spec.family = doc.value("family", std::string("homogeneous"));
    spec.n = doc.value("n", default_n);
    spec.quadrature_nodes = doc.value("quadrature_nodes", 30);
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigError, std::string("model spec: ") + e.what());
  }
  make_model(spec);
  return spec;
}

json model_spec_to_json(const ModelSpec& spec) {
  json out{{"family", spec.family}, {"n", spec.n}};
  if (spec.family == "rasch") out["quadrature_nodes"] = spec.quadrature_nodes;
  return out;
}

PopulationConfig population_from_json(const json& doc) {
  if (!doc.is_object()) fail(ErrorKind::ConfigError, "population config must be an object");
  PopulationConfig cfg;
  try {
    cfg.N = doc.at("N").get<std::int64_t>();
    cfg.n = doc.at("n").get<int>();
    const auto& cl = doc.at("clusters");
    const auto mode = cl.at("mode").get<std::string>();
    if (mode == "poisson") {
      cfg.clusters = PoissonClusters{cl.at("lambda1").get<double>()};
    } else if (mode == "conditional_multinomial") {
      cfg.clusters = FixedTotalClusters{cl.at("tau1").get<std::int64_t>()};
    } else {
      fail(ErrorKind::ConfigError, "unknown cluster mode '" + mode + "'");
    }
    cfg.tau2 = doc.at("tau2").get<std::int64_t>();
    cfg.model1 = model_spec_from_json(doc.at("model1"), cfg.n);
    cfg.model2 = model_spec_from_json(doc.at("model2"), cfg.n);
    cfg.theta1 = doc.at("theta1").get<LinkParams>();
    cfg.theta2 = doc.at("theta2").get<LinkParams>();
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigError, std::string("population config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json population_to_json(const PopulationConfig& cfg) {
  json clusters;
  if (const auto* p = std::get_if<PoissonClusters>(&cfg.clusters)) {
    clusters = {{"mode", "poisson"}, {"lambda1", p->lambda1}};
  } else {
    clusters = {{"mode", "conditional_multinomial"}, {"tau1", std::get<FixedTotalClusters>(cfg.clusters).tau1}};
  }
  return json{{"N", cfg.N},
              {"n", cfg.n},
              {"clusters", clusters},
              {"tau2", cfg.tau2},
              {"model1", model_spec_to_json(cfg.model1)},
              {"model2", model_spec_to_json(cfg.model2)},
              {"theta1", cfg.theta1},
              {"theta2", cfg.theta2}};
}

json ground_truth_to_json(const GroundTruth& t) {
  return json{{"schema_version", kSchemaVersion},
              {"tau1", t.tau1},
              {"tau2", t.tau2},
              {"tau", t.tau},
              {"cluster_sizes", t.cluster_sizes},
              {"sampled_sites", t.sampled_sites},
              {"unobserved1", t.unobserved1},
              {"unobserved2", t.unobserved2},
              {"theta1", t.theta1},
              {"theta2", t.theta2}};
}

}  // namespace snowlink
