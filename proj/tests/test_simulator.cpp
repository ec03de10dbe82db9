#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "snowlink/errors.hpp"
#include "snowlink/simulator.hpp"

using namespace snowlink;

namespace {

PopulationConfig base_config(int n, long N, ClusterMode clusters, std::int64_t tau2, double p1, double p2) {
  PopulationConfig c;
  c.N = N;
  c.n = n;
  c.clusters = clusters;
  c.tau2 = tau2;
  c.model1 = {"homogeneous", n, 30};
  c.model2 = {"homogeneous", n, 30};
  c.theta1.assign(static_cast<std::size_t>(n), logit(p1));
  c.theta2.assign(static_cast<std::size_t>(n), logit(p2));
  return c;
}

struct Moments {
  double mean = 0, var = 0;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  for (double x : xs) m.mean += x;
  m.mean /= xs.size();
  for (double x : xs) m.var += (x - m.mean) * (x - m.mean);
  m.var /= xs.size() - 1;
  return m;
}

}  // namespace

TEST_CASE("empty population") {
  auto c = base_config(3, 8, FixedTotalClusters{0}, 0, 0.3, 0.3);
  Rng rng = make_rng(1);
  auto sizes = draw_cluster_sizes(c, rng);
  CHECK(sizes.size() == 8);
  for (auto s : sizes) CHECK(s == 0);
  auto sim = draw_sample(c, 2);
  CHECK(sim.data.m_total() == 0);
  CHECK(sim.data.r1() == 0);
  CHECK(sim.truth.tau == 0);
}

TEST_CASE("fixed-total cluster sizes are multinomial") {
  // M_1 ~ Bin(1000, 0.1): mean 100, variance 90
  auto c = base_config(2, 10, FixedTotalClusters{1000}, 0, 0.3, 0.3);
  Rng rng = make_rng(2024);
  std::vector<double> first;
  const int reps = 10000;
  for (int r = 0; r < reps; ++r) {
    auto sizes = draw_cluster_sizes(c, rng);
    CHECK(std::accumulate(sizes.begin(), sizes.end(), std::int64_t{0}) == 1000);
    first.push_back(static_cast<double>(sizes[0]));
  }
  auto m = moments(first);
  CHECK(std::abs(m.mean - 100.0) < 4 * std::sqrt(90.0 / reps));
  CHECK(m.var == doctest::Approx(90.0).epsilon(0.1));
}

TEST_CASE("poisson cluster sizes") {
  auto c = base_config(2, 10, PoissonClusters{50.0}, 0, 0.3, 0.3);
  Rng rng = make_rng(77);
  std::vector<double> totals;
  const int reps = 4000;
  for (int r = 0; r < reps; ++r) {
    auto sizes = draw_cluster_sizes(c, rng);
    totals.push_back(static_cast<double>(std::accumulate(sizes.begin(), sizes.end(), std::int64_t{0})));
  }
  // sum of 10 Poisson(50) is Poisson(500)
  CHECK(std::abs(moments(totals).mean - 500.0) < 4 * std::sqrt(500.0 / reps));
}

TEST_CASE("no links when link probabilities vanish") {
  auto c = base_config(3, 6, FixedTotalClusters{300}, 200, 0.5, 0.5);
  c.theta1.assign(3, -20.0);
  c.theta2.assign(3, -20.0);
  auto sim = draw_sample(c, 5);
  CHECK(sim.data.r1() == 0);
  CHECK(sim.data.r2() == 0);
  CHECK_FALSE(sim.data.has_within_links());
  CHECK(sim.data.m_total() > 0);
}

TEST_CASE("full frame sample has no between-site persons") {
  auto c = base_config(4, 4, FixedTotalClusters{400}, 50, 0.3, 0.3);
  auto sim = draw_sample(c, 8);
  CHECK(sim.data.m_total() == 400);
  CHECK(sim.data.between1().empty());
  CHECK(sim.truth.unobserved1 == 0);
}

TEST_CASE("conservation and sampled sites") {
  auto c = base_config(4, 10, PoissonClusters{30.0}, 500, 0.2, 0.25);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto sim = draw_sample(c, seed);
    const auto& t = sim.truth;
    CHECK(sim.data.m_total() + sim.data.r1() + t.unobserved1 == t.tau1);
    CHECK(sim.data.r2() + t.unobserved2 == t.tau2);
    CHECK(t.tau == t.tau1 + t.tau2);
    CHECK(t.tau1 == std::accumulate(t.cluster_sizes.begin(), t.cluster_sizes.end(), std::int64_t{0}));
    std::vector<std::int64_t> sites = t.sampled_sites;
    std::sort(sites.begin(), sites.end());
    CHECK(std::adjacent_find(sites.begin(), sites.end()) == sites.end());
    for (int l = 0; l < 4; ++l) {
      CHECK(sim.data.site_sizes()[l] == t.cluster_sizes[static_cast<std::size_t>(t.sampled_sites[l])]);
    }
  }
}

TEST_CASE("seeded determinism") {
  auto c = base_config(4, 10, FixedTotalClusters{800}, 300, 0.3, 0.25);
  auto a = draw_sample(c, 1234);
  auto b = draw_sample(c, 1234);
  CHECK(a.data == b.data);
  CHECK(a.truth.cluster_sizes == b.truth.cluster_sizes);
  CHECK(a.truth.sampled_sites == b.truth.sampled_sites);
  CHECK_FALSE(draw_sample(c, 1235).data == a.data);
  CHECK(child_seed(7, 0) != child_seed(7, 1));
  CHECK(child_seed(7, 3) == child_seed(7, 3));
}

TEST_CASE("linked share among unsampled-site persons") {
  // R1 | tau1 - m ~ Bin(tau1 - m, 1 - 0.7^4)
  auto c = base_config(4, 10, FixedTotalClusters{2000}, 0, 0.3, 0.3);
  const int reps = 2000;
  std::vector<double> share;
  for (int r = 0; r < reps; ++r) {
    auto sim = draw_sample(c, child_seed(555, r));
    share.push_back(double(sim.data.r1()) / double(2000 - sim.data.m_total()));
  }
  const double target = 1 - std::pow(0.7, 4);
  auto m = moments(share);
  CHECK(std::abs(m.mean - target) < 4 * std::sqrt(m.var / reps));
  CHECK(target == doctest::Approx(0.7599));
}

TEST_CASE("pattern counts have binomial margins") {
  // R_x ~ Bin(tau1, (1 - n/N) pi_x) for each fixed linked x
  const int n = 3;
  auto c = base_config(n, 6, FixedTotalClusters{1500}, 0, 0.3, 0.3);
  c.theta1 = {logit(0.2), logit(0.35), logit(0.5)};
  HomogeneousModel model(n);
  const int reps = 600;
  std::vector<std::vector<double>> per(8);
  for (int r = 0; r < reps; ++r) {
    auto sim = draw_sample(c, child_seed(808, r));
    for (std::uint32_t b = 1; b < 8; ++b) {
      auto it = sim.data.between1().find(OutcomePattern(b, n));
      per[b].push_back(it == sim.data.between1().end() ? 0.0 : double(it->second));
    }
  }
  for (std::uint32_t b = 1; b < 8; ++b) {
    const double p = 0.5 * pattern_prob(model, c.theta1, OutcomePattern(b, n));
    const double mean = 1500 * p, var = 1500 * p * (1 - p);
    auto m = moments(per[b]);
    CHECK(std::abs(m.mean - mean) < 4 * std::sqrt(var / reps));
    CHECK(m.var == doctest::Approx(var).epsilon(0.2));
  }
}

TEST_CASE("config validation") {
  auto c = base_config(4, 3, FixedTotalClusters{10}, 0, 0.3, 0.3);
  CHECK_THROWS_AS(c.validate(), Error);
  c = base_config(2, 5, PoissonClusters{0.0}, 0, 0.3, 0.3);
  CHECK_THROWS_AS(c.validate(), Error);
  c = base_config(2, 5, FixedTotalClusters{10}, -1, 0.3, 0.3);
  CHECK_THROWS_AS(c.validate(), Error);
  c = base_config(2, 5, FixedTotalClusters{10}, 0, 0.3, 0.3);
  c.theta1.push_back(0.0);
  CHECK_THROWS_AS(c.validate(), Error);

  auto doc = population_to_json(base_config(3, 7, PoissonClusters{12.5}, 40, 0.3, 0.2));
  auto back = population_from_json(doc);
  CHECK(population_to_json(back) == doc);
}
