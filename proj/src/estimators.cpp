#include "snowlink/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "snowlink/errors.hpp"
#include "snowlink/json_io.hpp"
#include "snowlink/likelihood.hpp"
#include "snowlink/optimizer.hpp"

namespace snowlink {

std::string_view to_string(Method method) { return method == Method::Umle ? "umle" : "cmle"; }

Method parse_method(std::string_view text) {
  if (text == "umle" || text == "UMLE") return Method::Umle;
  if (text == "cmle" || text == "CMLE") return Method::Cmle;
  fail(ErrorKind::ConfigError, "unknown method '" + std::string(text) + "'");
}

std::int64_t snap_floor(double value) {
  const double nearest = std::nearbyint(value);
  if (nearest > value && nearest - value <= 1e-9 * std::max(1.0, std::abs(value))) {
    return static_cast<std::int64_t>(nearest);
  }
  return static_cast<std::int64_t>(std::floor(value));
}

TauEstimate tau1_closed_form(std::int64_t m, std::int64_t r1, int n, std::int64_t N, double pi0) {
  if (m < 0 || r1 < 0) fail(ErrorKind::DomainError, "negative counts");
  if (n < 1 || N < n) fail(ErrorKind::DomainError, "need 1 <= n <= N");
  if (!(pi0 >= 0.0 && pi0 <= 1.0)) fail(ErrorKind::DomainError, "pi_0 outside [0, 1]");
  const double unsampled = 1.0 - static_cast<double>(n) / static_cast<double>(N);
  const double denom = 1.0 - unsampled * pi0;
  if (denom <= 1e-12) fail(ErrorKind::DegenerateDenominator, "1 - (1 - n/N) pi_0 vanishes");
  const double real = static_cast<double>(m + r1) / denom;
  return {real, snap_floor(real)};
}

TauEstimate tau2_closed_form(std::int64_t r2, double pi0) {
  if (r2 < 0) fail(ErrorKind::DomainError, "negative count");
  if (!(pi0 >= 0.0 && pi0 <= 1.0)) fail(ErrorKind::DomainError, "pi_0 outside [0, 1]");
  const double denom = 1.0 - pi0;
  if (denom <= 1e-12) fail(ErrorKind::DegenerateDenominator, "1 - pi_0 vanishes");
  const double real = static_cast<double>(r2) / denom;
  return {real, snap_floor(real)};
}

std::vector<double> empirical_site_probs(const SampleData& data, int component) {
  const int n = data.sites();
  std::vector<double> links(static_cast<std::size_t>(n), 0.0);
  std::vector<double> at_risk(static_cast<std::size_t>(n), 0.0);
  const CountMap& between = component == 1 ? data.between1() : data.between2();
  const double observed = static_cast<double>(component == 1 ? data.r1() : data.r2());
  for (int i = 0; i < n; ++i) at_risk[i] = observed;
  for (const auto& [x, count] : between) {
    for (int i = 0; i < n; ++i) {
      if (x.linked_to(i)) links[i] += static_cast<double>(count);
    }
  }
  if (component == 1) {
    for (int l = 0; l < n; ++l) {
      for (int i = 0; i < n; ++i) {
        if (i != l) at_risk[i] += static_cast<double>(data.site_sizes()[static_cast<std::size_t>(l)]);
      }
      for (const auto& [x, count] : data.within(l)) {
        for (int i = 0; i < n; ++i) {
          if (x.linked_to(i)) links[i] += static_cast<double>(count);
        }
      }
    }
  }
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double p = at_risk[i] > 0 ? links[i] / at_risk[i] : 0.5;
    out[i] = std::clamp(p, 1e-4, 1.0 - 1e-4);
  }
  return out;
}

namespace {

using Vec = Eigen::VectorXd;

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }
LinkParams to_params(const Vec& v) { return LinkParams(v.data(), v.data() + v.size()); }

ObjectiveValue wrap(const LogLikTerms& t) { return {t.value, to_vec(t.grad)}; }

OptimizerOptions optimizer_options(const FitOptions& options) {
  OptimizerOptions o;
  o.tolerance = options.score_tolerance;
  o.max_iterations = options.max_iterations;
  return o;
}

LinkParams starting_point(const SampleData& data, const LinkModel& model, int component,
                          const std::optional<LinkParams>& given) {
  if (given) {
    model.check_params(*given);
    return *given;
  }
  return model.initial_params(empirical_site_probs(data, component));
}

// best of `starts` runs; extra starts shift every coordinate deterministically
OptimizerResult multi_start(const Objective& f, const LinkParams& start, const LinkModel& model,
                            const FitOptions& options) {
  const auto nonneg = model.nonnegative();
  OptimizerResult best = maximize(f, to_vec(start), nonneg, optimizer_options(options));
  for (int s = 1; s < options.starts; ++s) {
    const double shift = (s % 2 == 1 ? 1.0 : -1.0) * 0.5 * ((s + 1) / 2);
    Vec x0 = to_vec(start).array() + shift;
    try {
      auto r = maximize(f, x0, nonneg, optimizer_options(options));
      if (r.converged && (!best.converged || r.value > best.value)) best = std::move(r);
    } catch (const Error&) {
    }
  }
  return best;
}

void require_identifiable(const SampleData& data, int component) {
  if (data.sites() == 1) {
    fail(ErrorKind::Unidentifiable, "with one sampled site the link pattern carries no information on theta");
  }
  if (component == 1 && data.r1() == 0 && !data.has_within_links()) {
    fail(ErrorKind::Unidentifiable, "no linked between-site persons and no within-site links");
  }
  if (component == 2 && data.r2() == 0) {
    fail(ErrorKind::Unidentifiable, "no observed persons outside the frame");
  }
}

double pi0_at(const LinkModel& model, const LinkParams& theta) {
  return pattern_prob(model, theta, OutcomePattern::zero(model.sites()));
}

void require_converged(const OptimizerResult& r, const char* what) {
  if (!r.converged) {
    fail(ErrorKind::NoConvergence, std::string(what) + ": score norm " + std::to_string(r.grad_norm) +
                                       " after " + std::to_string(r.iterations) + " iterations");
  }
}

double projected_score(const std::vector<double>& grad, const LinkParams& theta, const LinkModel& model) {
  const auto nonneg = model.nonnegative();
  double out = 0.0;
  for (std::size_t j = 0; j < grad.size(); ++j) {
    if (nonneg[j] && theta[j] <= 0.0 && grad[j] <= 0.0) continue;
    out = std::max(out, std::abs(grad[j]));
  }
  return out;
}

// tau <- closed form at theta; theta <- argmax of the full likelihood at tau
template <class TauOf, class FullAt>
ComponentFit alternate(const LinkModel& model, LinkParams theta, const FitOptions& options, TauOf tau_of,
                       FullAt full_at, const char* label) {
  ComponentFit fit;
  double tau = tau_of(theta).real;
  double prev_change = std::numeric_limits<double>::infinity();
  int growth = 0;
  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    const double tau_fixed = tau;
    Objective f = [&](const Vec& x) { return wrap(full_at(tau_fixed, to_params(x))); };
    auto r = maximize(f, to_vec(theta), model.nonnegative(), optimizer_options(options));
    require_converged(r, label);
    theta = to_params(r.x);
    fit.diagnostics.iterations += r.iterations;

    const TauEstimate next = tau_of(theta);
    const double change = std::abs(next.real - tau);
    tau = next.real;
    const double score = projected_score(full_at(tau, theta).grad, theta, model);
    fit.diagnostics.sweeps = sweep;
    fit.diagnostics.grad_norm = score;
    if (change / std::max(tau, 1.0) < options.tau_tolerance && score < options.score_tolerance) {
      fit.theta = std::move(theta);
      fit.tau = next;
      fit.diagnostics.converged = true;
      return fit;
    }
    growth = (change >= prev_change && change > 0.0) ? growth + 1 : 0;
    prev_change = change;
  }
  if (growth > 0) {
    fail(ErrorKind::OscillationDetected, std::string(label) + ": alternation stopped contracting");
  }
  fail(ErrorKind::NoConvergence, std::string(label) + ": alternation did not settle within max sweeps");
}

}  // namespace

ComponentFit fit_cmle_1(const SampleData& data, const LinkModel& model, const FitOptions& options) {
  require_identifiable(data, 1);
  const LinkParams start = starting_point(data, model, 1, options.initial_theta1);
  Objective f = [&](const Vec& x) { return wrap(loglik_cond_1(data, to_params(x), model)); };
  auto r = multi_start(f, start, model, options);
  require_converged(r, "conditional fit (frame)");

  ComponentFit fit;
  fit.theta = to_params(r.x);
  fit.tau = tau1_closed_form(data.m_total(), data.r1(), data.sites(), data.frame_size(), pi0_at(model, fit.theta));
  fit.diagnostics = {r.iterations, 0, r.grad_norm, true};
  return fit;
}

ComponentFit fit_umle_1(const SampleData& data, const LinkModel& model, const FitOptions& options) {
  require_identifiable(data, 1);
  LinkParams start;
  if (options.initial_theta1) {
    model.check_params(*options.initial_theta1);
    start = *options.initial_theta1;
  } else {
    start = fit_cmle_1(data, model, options).theta;
  }
  auto tau_of = [&](const LinkParams& theta) {
    return tau1_closed_form(data.m_total(), data.r1(), data.sites(), data.frame_size(), pi0_at(model, theta));
  };
  auto full_at = [&](double tau, const LinkParams& theta) { return loglik_full_1(data, tau, theta, model); };
  return alternate(model, std::move(start), options, tau_of, full_at, "unconditional fit (frame)");
}

ComponentFit fit_2(const SampleData& data, const LinkModel& model, Method method, const FitOptions& options) {
  require_identifiable(data, 2);
  const LinkParams start = starting_point(data, model, 2, options.initial_theta2);
  Objective cond = [&](const Vec& x) { return wrap(loglik_2(data, 0.0, to_params(x), model, true)); };
  auto r = multi_start(cond, start, model, options);
  require_converged(r, "conditional fit (outside frame)");
  ComponentFit fit;
  fit.theta = to_params(r.x);
  fit.tau = tau2_closed_form(data.r2(), pi0_at(model, fit.theta));
  fit.diagnostics = {r.iterations, 0, r.grad_norm, true};
  if (method == Method::Cmle) return fit;

  auto tau_of = [&](const LinkParams& theta) { return tau2_closed_form(data.r2(), pi0_at(model, theta)); };
  auto full_at = [&](double tau, const LinkParams& theta) { return loglik_2(data, tau, theta, model, false); };
  LinkParams umle_start = options.initial_theta2 ? *options.initial_theta2 : fit.theta;
  auto out = alternate(model, std::move(umle_start), options, tau_of, full_at, "unconditional fit (outside frame)");
  if (!options.initial_theta2) out.diagnostics.iterations += fit.diagnostics.iterations;
  return out;
}

EstimateReport fit_total(const SampleData& data, const LinkModel& model1, const LinkModel& model2, Method method,
                         const FitOptions& options) {
  EstimateReport report;
  report.method = method;
  try {
    report.u1 = method == Method::Umle ? fit_umle_1(data, model1, options) : fit_cmle_1(data, model1, options);
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("U1 (frame-covered): ") + e.detail());
  }
  try {
    report.u2 = fit_2(data, model2, method, options);
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("U2 (frame-uncovered): ") + e.detail());
  }
  report.tau_real = report.u1.tau.real + report.u2.tau.real;
  report.tau = report.u1.tau.floored + report.u2.tau.floored;
  return report;
}

namespace {

json component_json(const ComponentFit& fit) {
  return json{{"theta", fit.theta},
              {"tau_real", fit.tau.real},
              {"tau", fit.tau.floored},
              {"diagnostics",
               {{"iterations", fit.diagnostics.iterations},
                {"sweeps", fit.diagnostics.sweeps},
                {"grad_norm", fit.diagnostics.grad_norm},
                {"converged", fit.diagnostics.converged}}}};
}

}  // namespace

json estimate_report_to_json(const EstimateReport& report) {
  return json{{"schema_version", kSchemaVersion},
              {"method", std::string(to_string(report.method))},
              {"u1", component_json(report.u1)},
              {"u2", component_json(report.u2)},
              {"tau_real", report.tau_real},
              {"tau", report.tau}};
}

}  // namespace snowlink
