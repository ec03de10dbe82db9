#pragma once

// Independent reference computations used only by tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "snowlink/link_model.hpp"
#include "snowlink/patterns.hpp"

namespace oracle {

using snowlink::LinkModel;
using snowlink::OutcomePattern;
using snowlink::Scope;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                              std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double xj = x[j];
    x[j] = xj + h;
    const double up = f(x);
    x[j] = xj - h;
    const double down = f(x);
    x[j] = xj;
    g[j] = (up - down) / (2 * h);
  }
  return g;
}

// max_j |a_j - b_j| / max(|a|_inf, |b|_inf); an analytic gradient a that is zero
// up to rounding (|a|_inf <= 1e-12) is compared absolutely, b then holds only noise
inline double relative_gap(const std::vector<double>& a, const std::vector<double>& b) {
  double scale = 0, gap = 0, analytic = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    scale = std::max({scale, std::abs(a[j]), std::abs(b[j])});
    gap = std::max(gap, std::abs(a[j] - b[j]));
    analytic = std::max(analytic, std::abs(a[j]));
  }
  return analytic > 1e-12 ? gap / scale : gap;
}

inline double trapezoid(const std::function<double(double)>& f, double a, double b, int points) {
  const double h = (b - a) / (points - 1);
  double s = 0.5 * (f(a) + f(b));
  for (int i = 1; i < points - 1; ++i) s += f(a + i * h);
  return s * h;
}

inline double std_normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2 * std::numbers::pi); }

inline double expit(double u) { return 1.0 / (1.0 + std::exp(-u)); }

// Rasch pattern probability by dense integration over the person effect
inline double rasch_dense(const std::vector<double>& theta, std::uint32_t bits, int n, int skip = -1) {
  const double sigma = theta[static_cast<std::size_t>(n)];
  auto integrand = [&](double z) {
    double p = 1;
    for (int i = 0; i < n; ++i) {
      if (i == skip) continue;
      const double pi = expit(theta[static_cast<std::size_t>(i)] + sigma * z);
      p *= ((bits >> i) & 1u) ? pi : 1 - pi;
    }
    return p * std_normal_pdf(z);
  };
  return trapezoid(integrand, -10, 10, 100000);
}

// homogeneous product probability written out directly
inline double product_prob(const std::vector<double>& logits, std::uint32_t bits, int skip = -1) {
  double p = 1;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (static_cast<int>(i) == skip) continue;
    const double pi = expit(logits[i]);
    p *= ((bits >> i) & 1u) ? pi : 1 - pi;
  }
  return p;
}

struct Case {
  double prob;
  Vec v;
};

inline Vec score_of(const LinkModel& m, const std::vector<double>& th, OutcomePattern x, Scope s, double& prob) {
  std::vector<double> g(static_cast<std::size_t>(m.dimension()));
  prob = m.evaluate(th, x, s, g);
  Vec out(m.dimension());
  for (int j = 0; j < m.dimension(); ++j) out[j] = g[static_cast<std::size_t>(j)] / prob;
  return out;
}

inline Vec stack(double head, const Vec& tail) {
  Vec v(tail.size() + 1);
  v[0] = head;
  v.tail(tail.size()) = tail;
  return v;
}

// person types of the frame population with their limiting frequencies
inline std::vector<Case> frame_cases(const LinkModel& m, const std::vector<double>& th, int n, long N, bool truncated) {
  const double f = double(n) / double(N);
  const int q = m.dimension();
  std::vector<Case> cases;
  double p0 = 0;
  const Vec s0 = score_of(m, th, OutcomePattern::zero(n), Scope::between(), p0);
  for (std::uint32_t b = 1; b < (1u << n); ++b) {
    double p = 0;
    const Vec s = score_of(m, th, OutcomePattern(b, n), Scope::between(), p);
    // d log(p / (1 - p0)) = s + grad p0 / (1 - p0)
    const Vec st = s + s0 * p0 / (1 - p0);
    cases.push_back({(1 - f) * p, truncated ? st : stack(1.0, s)});
  }
  const double a = (1 - f) * p0;
  cases.push_back({(1 - f) * p0, truncated ? Vec(Vec::Zero(q)) : stack(-(1 - a) / a, s0)});
  for (int l = 0; l < n; ++l) {
    for (std::uint32_t b = 0; b < (1u << n); ++b) {
      if ((b >> l) & 1u) continue;
      double p = 0;
      const Vec s = score_of(m, th, OutcomePattern(b, n), Scope::within(l), p);
      cases.push_back({p / double(N), truncated ? s : stack(1.0, s)});
    }
  }
  return cases;
}

inline std::vector<Case> outside_cases(const LinkModel& m, const std::vector<double>& th, int n) {
  std::vector<Case> cases;
  double p0 = 0;
  const Vec s0 = score_of(m, th, OutcomePattern::zero(n), Scope::between(), p0);
  for (std::uint32_t b = 1; b < (1u << n); ++b) {
    double p = 0;
    const Vec s = score_of(m, th, OutcomePattern(b, n), Scope::between(), p);
    cases.push_back({p, stack(1.0, s)});
  }
  cases.push_back({p0, stack(-(1 - p0) / p0, s0)});
  return cases;
}

inline Vec first_moment(const std::vector<Case>& cs) {
  Vec out = Vec::Zero(cs.front().v.size());
  for (const auto& c : cs) out += c.prob * c.v;
  return out;
}

inline Mat second_moment(const std::vector<Case>& cs) {
  const auto d = cs.front().v.size();
  Mat out = Mat::Zero(d, d);
  for (const auto& c : cs) out += c.prob * c.v * c.v.transpose();
  return out;
}

// coarse-to-fine grid maximization over a box; each stage refines around the best point
inline std::vector<double> grid_argmax(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> lo, std::vector<double> hi, double resolution,
                                       int per_axis = 21) {
  const std::size_t d = lo.size();
  std::vector<double> best(d);
  for (std::size_t j = 0; j < d; ++j) best[j] = 0.5 * (lo[j] + hi[j]);
  double span = 0;
  for (std::size_t j = 0; j < d; ++j) span = std::max(span, hi[j] - lo[j]);
  while (true) {
    std::vector<double> step(d);
    for (std::size_t j = 0; j < d; ++j) step[j] = (hi[j] - lo[j]) / (per_axis - 1);
    double best_val = -std::numeric_limits<double>::infinity();
    std::vector<int> idx(d, 0);
    std::vector<double> x(d);
    while (true) {
      for (std::size_t j = 0; j < d; ++j) x[j] = lo[j] + idx[j] * step[j];
      double v = -std::numeric_limits<double>::infinity();
      try {
        v = f(x);
      } catch (...) {
      }
      if (v > best_val) {
        best_val = v;
        best = x;
      }
      std::size_t k = 0;
      while (k < d && ++idx[k] == per_axis) idx[k++] = 0;
      if (k == d) break;
    }
    double max_step = 0;
    for (double s : step) max_step = std::max(max_step, s);
    if (max_step <= resolution) return best;
    for (std::size_t j = 0; j < d; ++j) {
      lo[j] = best[j] - 2 * step[j];
      hi[j] = best[j] + 2 * step[j];
    }
  }
}

// n = 2, one parameter: pi_0 is fixed, only the split among linked patterns moves
class FlatZeroModel final : public LinkModel {
 public:
  std::string family() const override { return "flat_zero"; }
  int sites() const override { return 2; }
  int dimension() const override { return 1; }
  snowlink::LinkParams initial_params(std::span<const double>) const override { return {0.0}; }

 protected:
  double do_evaluate(std::span<const double> th, OutcomePattern x, Scope scope, std::span<double> grad) const override {
    const double s = expit(th[0]);
    const double ds = s * (1 - s);
    double p = 0, dp = 0;
    if (!scope.excluded) {
      switch (x.bits()) {
        case 0: p = 0.4; dp = 0; break;
        case 1:
        case 2: p = 0.3 * s; dp = 0.3 * ds; break;
        default: p = 0.6 * (1 - s); dp = -0.6 * ds; break;
      }
    } else if (x.is_zero()) {
      p = 0.8 - 0.5 * s;
      dp = -0.5 * ds;
    } else {
      p = 0.2 + 0.5 * s;
      dp = 0.5 * ds;
    }
    if (!grad.empty()) grad[0] = dp;
    return p;
  }
};

inline std::vector<double> random_theta(const LinkModel& m, std::mt19937_64& rng, double lo = -2, double hi = 2,
                                        double sigma_max = 2) {
  std::uniform_real_distribution<double> u(lo, hi), s(0.0, sigma_max);
  std::vector<double> th(static_cast<std::size_t>(m.dimension()));
  for (auto& t : th) t = u(rng);
  if (m.family() == "rasch") th.back() = s(rng);
  return th;
}

// random admissible sample with counts up to max_count
inline snowlink::SampleData random_sample(int n, long N, std::mt19937_64& rng, int max_count = 5) {
  std::uniform_int_distribution<int> c(0, max_count);
  snowlink::CountMap b1, b2;
  std::vector<snowlink::CountMap> within(static_cast<std::size_t>(n));
  std::vector<std::int64_t> m(static_cast<std::size_t>(n));
  for (std::uint32_t b = 1; b < (1u << n); ++b) {
    b1[OutcomePattern(b, n)] = c(rng);
    b2[OutcomePattern(b, n)] = c(rng);
  }
  for (int l = 0; l < n; ++l) {
    std::int64_t linked = 0;
    for (std::uint32_t b = 1; b < (1u << n); ++b) {
      if ((b >> l) & 1u) continue;
      const int k = c(rng);
      within[static_cast<std::size_t>(l)][OutcomePattern(b, n)] = k;
      linked += k;
    }
    m[static_cast<std::size_t>(l)] = linked + c(rng);
  }
  return snowlink::SampleData(n, N, m, b1, within, b2);
}

}  // namespace oracle
