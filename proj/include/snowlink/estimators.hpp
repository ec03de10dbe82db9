#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include <json.hpp>

#include "snowlink/link_model.hpp"
#include "snowlink/patterns.hpp"

namespace snowlink {

enum class Method { Umle, Cmle };

std::string_view to_string(Method method);
Method parse_method(std::string_view text);

struct TauEstimate {
  double real = 0.0;
  std::int64_t floored = 0;
};

// floor that treats values within 1e-9 relative below an integer as that integer
std::int64_t snap_floor(double value);

TauEstimate tau1_closed_form(std::int64_t m, std::int64_t r1, int n, std::int64_t N, double pi0);
TauEstimate tau2_closed_form(std::int64_t r2, double pi0);

struct FitOptions {
  double score_tolerance = 1e-8;
  int max_iterations = 200;
  double tau_tolerance = 1e-10;
  int max_sweeps = 500;
  int starts = 1;
  std::optional<LinkParams> initial_theta1;
  std::optional<LinkParams> initial_theta2;
};

struct SolverDiagnostics {
  int iterations = 0;  // Newton iterations, summed over sweeps
  int sweeps = 0;      // alternation sweeps (0 for two-step fits)
  double grad_norm = 0.0;
  bool converged = false;
};

struct ComponentFit {
  LinkParams theta;
  TauEstimate tau;
  SolverDiagnostics diagnostics;
};

struct EstimateReport {
  Method method = Method::Umle;
  ComponentFit u1;
  ComponentFit u2;
  double tau_real = 0.0;
  std::int64_t tau = 0;
};

// per-site link frequencies used as starting values, clipped to [1e-4, 1 - 1e-4]
std::vector<double> empirical_site_probs(const SampleData& data, int component);

ComponentFit fit_cmle_1(const SampleData& data, const LinkModel& model, const FitOptions& options = {});
ComponentFit fit_umle_1(const SampleData& data, const LinkModel& model, const FitOptions& options = {});
ComponentFit fit_2(const SampleData& data, const LinkModel& model, Method method, const FitOptions& options = {});
EstimateReport fit_total(const SampleData& data, const LinkModel& model1, const LinkModel& model2, Method method,
                         const FitOptions& options = {});

nlohmann::json estimate_report_to_json(const EstimateReport& report);

}  // namespace snowlink
