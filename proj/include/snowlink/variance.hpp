#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "snowlink/estimators.hpp"
#include "snowlink/link_model.hpp"
#include "snowlink/patterns.hpp"

namespace snowlink {

enum class MatrixKind { Sigma1, Psi1, Sigma2 };
enum class VarianceSource { Analytic, EmpiricalV };

std::string_view to_string(MatrixKind kind);
MatrixKind parse_matrix_kind(std::string_view text);
std::string_view to_string(VarianceSource source);
VarianceSource parse_variance_source(std::string_view text);

inline constexpr double kMaxConditionNumber = 1e12;

// Sigma1 / Sigma2: index 0 is the tau coordinate, 1..q are theta
struct AsymptoticMatrices {
  MatrixKind which = MatrixKind::Sigma1;
  Eigen::MatrixXd inverse_form;
  Eigen::MatrixXd covariance_form;
  double condition_number = 0.0;
};

// symmetrizes, inverts, and refuses matrices with condition number above 1e12
AsymptoticMatrices finalize_matrix(MatrixKind which, Eigen::MatrixXd inverse_form);

// raw inverse-form entries, no inversion attempted
Eigen::MatrixXd assemble_sigma1(std::span<const double> theta, const LinkModel& model, int n, std::int64_t N);
Eigen::MatrixXd assemble_psi1(std::span<const double> theta, const LinkModel& model, int n, std::int64_t N);
Eigen::MatrixXd assemble_sigma2(std::span<const double> theta, const LinkModel& model);

AsymptoticMatrices sigma1_inverse(std::span<const double> theta, const LinkModel& model, int n, std::int64_t N);
AsymptoticMatrices psi1_inverse(std::span<const double> theta, const LinkModel& model, int n, std::int64_t N);
AsymptoticMatrices sigma2_inverse(std::span<const double> theta, const LinkModel& model);

// scalar variances from the theta-block of the matching inverse matrix
double sigma1_u_sq(const Eigen::MatrixXd& sigma1_inv_block, double pi0, const Eigen::VectorXd& grad_pi0, double f);
double sigma1_c_sq(const Eigen::MatrixXd& psi1_inv, double pi0, const Eigen::VectorXd& grad_pi0, double f);
double sigma2_sq(const Eigen::MatrixXd& sigma2_inv_block, double pi0, const Eigen::VectorXd& grad_pi0);

struct ScalarVariances {
  double sigma1_sq = 0.0;
  double sigma2_sq = 0.0;
};

ScalarVariances scalar_variances(const AsymptoticMatrices& frame, const AsymptoticMatrices& outside,
                                 std::span<const double> theta1, const LinkModel& model1,
                                 std::span<const double> theta2, const LinkModel& model2, int n, std::int64_t N,
                                 Method method);

// sample covariance (divisor count - 1) of per-person V vectors, weighted per pattern
AsymptoticMatrices empirical_v_covariance(const SampleData& data, std::span<const double> theta,
                                          std::int64_t tau_hat, const LinkModel& model, MatrixKind which);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool contains(double value) const noexcept { return lower <= value && value <= upper; }
};

double normal_quantile(double p);
Interval wald_interval(double estimate, double variance, double level);

struct VarianceReport {
  Method method = Method::Umle;
  VarianceSource source = VarianceSource::Analytic;
  double level = 0.95;
  double sigma1_sq = 0.0;
  double sigma2_sq = 0.0;
  double sigma_sq = 0.0;  // alpha1 sigma1^2 + alpha2 sigma2^2
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double var_tau1 = 0.0;
  double var_tau2 = 0.0;
  double var_tau = 0.0;
  std::vector<double> var_theta1;
  std::vector<double> var_theta2;
  Interval tau1;
  Interval tau2;
  Interval tau;
  double condition1 = 0.0;
  double condition2 = 0.0;
};

struct WaldIntervals {
  Interval tau1;
  Interval tau2;
  Interval tau;
};

WaldIntervals wald_intervals(const EstimateReport& estimates, const VarianceReport& variances, double level);

VarianceReport variance_report(const EstimateReport& estimates, const SampleData& data, const LinkModel& model1,
                               const LinkModel& model2, VarianceSource source = VarianceSource::Analytic,
                               double level = 0.95);

nlohmann::json matrices_to_json(const AsymptoticMatrices& m);
nlohmann::json variance_report_to_json(const VarianceReport& v);

}  // namespace snowlink
