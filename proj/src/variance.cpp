#include "snowlink/variance.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "snowlink/errors.hpp"
#include "snowlink/json_io.hpp"

namespace snowlink {

std::string_view to_string(MatrixKind kind) {
  switch (kind) {
    case MatrixKind::Sigma1: return "sigma1";
    case MatrixKind::Psi1: return "psi1";
    case MatrixKind::Sigma2: return "sigma2";
  }
  return "unknown";
}

MatrixKind parse_matrix_kind(std::string_view text) {
  if (text == "sigma1") return MatrixKind::Sigma1;
  if (text == "psi1") return MatrixKind::Psi1;
  if (text == "sigma2") return MatrixKind::Sigma2;
  fail(ErrorKind::ConfigError, "unknown matrix '" + std::string(text) + "'");
}

std::string_view to_string(VarianceSource source) {
  return source == VarianceSource::Analytic ? "analytic" : "empirical_v";
}

VarianceSource parse_variance_source(std::string_view text) {
  if (text == "analytic") return VarianceSource::Analytic;
  if (text == "empirical_v" || text == "empirical") return VarianceSource::EmpiricalV;
  fail(ErrorKind::ConfigError, "unknown variance source '" + std::string(text) + "'");
}

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct ProbGrad {
  double prob;
  Vec grad;
};

ProbGrad eval(const LinkModel& model, std::span<const double> theta, OutcomePattern x, Scope scope) {
  ProbGrad out{0.0, Vec(model.dimension())};
  out.prob = model.evaluate(theta, x, scope, std::span<double>(out.grad.data(), static_cast<std::size_t>(out.grad.size())));
  if (!(out.prob >= 1e-300)) fail(ErrorKind::NonFiniteLikelihood, "pattern probability below floor");
  return out;
}

void check_design(const LinkModel& model, std::span<const double> theta, int n, std::int64_t N) {
  model.check_params(theta);
  if (model.sites() != n) fail(ErrorKind::DimensionMismatch, "model site count differs from n");
  if (N < n) fail(ErrorKind::DomainError, "need n <= N");
}

// sum over Omega_{-l}, all l, of grad grad' / pi
Mat within_information(std::span<const double> theta, const LinkModel& model) {
  const int q = model.dimension();
  Mat out = Mat::Zero(q, q);
  for (int l = 0; l < model.sites(); ++l) {
    for (const auto& x : enumerate_patterns(model.sites(), l)) {
      auto pg = eval(model, theta, x, Scope::within(l));
      out.noalias() += pg.grad * pg.grad.transpose() / pg.prob;
    }
  }
  return out;
}

// sum over Omega of grad grad' / pi
Mat between_information(std::span<const double> theta, const LinkModel& model) {
  const int q = model.dimension();
  Mat out = Mat::Zero(q, q);
  for (const auto& x : enumerate_patterns(model.sites())) {
    auto pg = eval(model, theta, x, Scope::between());
    out.noalias() += pg.grad * pg.grad.transpose() / pg.prob;
  }
  return out;
}

Mat with_tau_row(double corner, const Vec& edge, const Mat& block) {
  const auto q = block.rows();
  Mat out(q + 1, q + 1);
  out(0, 0) = corner;
  out.block(0, 1, 1, q) = edge.transpose();
  out.block(1, 0, q, 1) = edge;
  out.block(1, 1, q, q) = block;
  return out;
}

Mat checked_inverse(const Mat& m, const char* what) {
  try {
    return finalize_matrix(MatrixKind::Psi1, m).covariance_form;
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(what) + ": " + e.detail());
  }
}

}  // namespace

AsymptoticMatrices finalize_matrix(MatrixKind which, Mat inverse_form) {
  inverse_form = 0.5 * (inverse_form + inverse_form.transpose()).eval();
  if (!inverse_form.allFinite()) fail(ErrorKind::SingularMatrix, "matrix has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Mat> eig(inverse_form);
  const Vec abs_eval = eig.eigenvalues().cwiseAbs();
  const double largest = abs_eval.maxCoeff();
  const double smallest = abs_eval.minCoeff();
  const double cond = smallest > 0.0 ? largest / smallest : std::numeric_limits<double>::infinity();
  if (!(cond <= kMaxConditionNumber)) {
    fail(ErrorKind::SingularMatrix, std::string(to_string(which)) + " condition number " + std::to_string(cond));
  }
  AsymptoticMatrices out;
  out.which = which;
  out.condition_number = cond;
  Eigen::LLT<Mat> llt(inverse_form);
  if (llt.info() == Eigen::Success) {
    out.covariance_form = llt.solve(Mat::Identity(inverse_form.rows(), inverse_form.cols()));
  } else {
    const Vec inv_eval = eig.eigenvalues().cwiseInverse();
    out.covariance_form = eig.eigenvectors() * inv_eval.asDiagonal() * eig.eigenvectors().transpose();
  }
  out.covariance_form = 0.5 * (out.covariance_form + out.covariance_form.transpose()).eval();
  out.inverse_form = std::move(inverse_form);
  return out;
}

Mat assemble_sigma1(std::span<const double> theta, const LinkModel& model, int n, std::int64_t N) {
  check_design(model, theta, n, N);
  if (n >= N) fail(ErrorKind::DegenerateDenominator, "sigma1 needs n < N");
  const double f = static_cast<double>(n) / static_cast<double>(N);
  const auto zero = eval(model, theta, OutcomePattern::zero(n), Scope::between());
  const double a = (1.0 - f) * zero.prob;
  const Mat block = (1.0 - f) * between_information(theta, model) + within_information(theta, model) / static_cast<double>(N);
  return with_tau_row((1.0 - a) / a, -zero.grad / zero.prob, block);
}

Mat assemble_psi1(std::span<const double> theta, const LinkModel& model, int n, std::int64_t N) {
  check_design(model, theta, n, N);
  const double f = static_cast<double>(n) / static_cast<double>(N);
  const int q = model.dimension();
  const auto zero = eval(model, theta, OutcomePattern::zero(n), Scope::between());
  const double linked = 1.0 - zero.prob;
  Mat truncated = Mat::Zero(q, q);
  for (const auto& x : enumerate_patterns(n)) {
    if (x.is_zero()) continue;
    const auto pg = eval(model, theta, x, Scope::between());
    const double pt = pg.prob / linked;
    const Vec gt = (pg.grad * linked + pg.prob * zero.grad) / (linked * linked);
    truncated.noalias() += gt * gt.transpose() / pt;
  }
  return (1.0 - f) * linked * truncated + within_information(theta, model) / static_cast<double>(N);
}

Mat assemble_sigma2(std::span<const double> theta, const LinkModel& model) {
  model.check_params(theta);
  const auto zero = eval(model, theta, OutcomePattern::zero(model.sites()), Scope::between());
  return with_tau_row((1.0 - zero.prob) / zero.prob, -zero.grad / zero.prob, between_information(theta, model));
}

AsymptoticMatrices sigma1_inverse(std::span<const double> theta, const LinkModel& model, int n, std::int64_t N) {
  return finalize_matrix(MatrixKind::Sigma1, assemble_sigma1(theta, model, n, N));
}

AsymptoticMatrices psi1_inverse(std::span<const double> theta, const LinkModel& model, int n, std::int64_t N) {
  return finalize_matrix(MatrixKind::Psi1, assemble_psi1(theta, model, n, N));
}

AsymptoticMatrices sigma2_inverse(std::span<const double> theta, const LinkModel& model) {
  return finalize_matrix(MatrixKind::Sigma2, assemble_sigma2(theta, model));
}

double sigma1_u_sq(const Mat& block, double pi0, const Vec& g, double f) {
  if (f >= 1.0) return 0.0;
  const double d = 1.0 - (1.0 - f) * pi0;
  const Mat s = checked_inverse(block - (1.0 - f) / (pi0 * d) * g * g.transpose(), "sigma1_22");
  return (1.0 - f) / d * (pi0 + (1.0 - f) / d * g.dot(s * g));
}

double sigma1_c_sq(const Mat& psi_inv, double pi0, const Vec& g, double f) {
  if (f >= 1.0) return 0.0;
  const double d = 1.0 - (1.0 - f) * pi0;
  const Mat psi = checked_inverse(psi_inv, "psi1");
  return (1.0 - f) / d * (pi0 + (1.0 - f) * g.dot(psi * g) / d);
}

double sigma2_sq(const Mat& block, double pi0, const Vec& g) {
  const double linked = 1.0 - pi0;
  const Mat s = checked_inverse(block - g * g.transpose() / (pi0 * linked), "sigma2_22");
  return (pi0 + g.dot(s * g) / linked) / linked;
}

namespace {

Vec zero_grad(std::span<const double> theta, const LinkModel& model, double& pi0) {
  auto z = zero_pattern_prob_and_grad(model, theta);
  pi0 = z.prob;
  return Eigen::Map<const Vec>(z.grad.data(), static_cast<Eigen::Index>(z.grad.size()));
}

Mat theta_block(const AsymptoticMatrices& m) {
  if (m.which == MatrixKind::Psi1) return m.inverse_form;
  const auto q = m.inverse_form.rows() - 1;
  return m.inverse_form.block(1, 1, q, q);
}

}  // namespace

ScalarVariances scalar_variances(const AsymptoticMatrices& frame, const AsymptoticMatrices& outside,
                                 std::span<const double> theta1, const LinkModel& model1,
                                 std::span<const double> theta2, const LinkModel& model2, int n, std::int64_t N,
                                 Method method) {
  const double f = static_cast<double>(n) / static_cast<double>(N);
  ScalarVariances out;
  double p1 = 0.0;
  const Vec g1 = zero_grad(theta1, model1, p1);
  if (method == Method::Umle) {
    if (frame.which != MatrixKind::Sigma1) fail(ErrorKind::ConfigError, "unconditional variance needs sigma1");
    out.sigma1_sq = sigma1_u_sq(theta_block(frame), p1, g1, f);
  } else {
    if (frame.which != MatrixKind::Psi1) fail(ErrorKind::ConfigError, "conditional variance needs psi1");
    out.sigma1_sq = sigma1_c_sq(frame.inverse_form, p1, g1, f);
  }
  if (outside.which != MatrixKind::Sigma2) fail(ErrorKind::ConfigError, "outside-frame variance needs sigma2");
  double p2 = 0.0;
  const Vec g2 = zero_grad(theta2, model2, p2);
  out.sigma2_sq = sigma2_sq(theta_block(outside), p2, g2);
  return out;
}

AsymptoticMatrices empirical_v_covariance(const SampleData& data, std::span<const double> theta,
                                          std::int64_t tau_hat, const LinkModel& model, MatrixKind which) {
  if (model.sites() != data.sites()) fail(ErrorKind::DimensionMismatch, "model site count differs from sample");
  model.check_params(theta);
  const int n = data.sites();
  const int q = model.dimension();
  const bool with_tau = which != MatrixKind::Psi1;
  const int dim = with_tau ? q + 1 : q;
  const double f = data.sampling_fraction();

  std::vector<std::pair<double, Vec>> cells;
  auto push = [&](double weight, double scalar, const Vec& score) {
    if (weight <= 0.0) return;
    Vec v(dim);
    if (with_tau) {
      v[0] = scalar;
      v.tail(q) = score;
    } else {
      v = score;
    }
    cells.emplace_back(weight, std::move(v));
  };

  const auto zero = eval(model, theta, OutcomePattern::zero(n), Scope::between());
  if (which == MatrixKind::Sigma2) {
    const double unseen = static_cast<double>(tau_hat - data.r2());
    if (unseen < 0) fail(ErrorKind::DomainError, "tau2 estimate below r2");
    for (const auto& [x, count] : data.between2()) {
      auto pg = eval(model, theta, x, Scope::between());
      push(static_cast<double>(count), 1.0, pg.grad / pg.prob);
    }
    push(unseen, -(1.0 - zero.prob) / zero.prob, zero.grad / zero.prob);
  } else {
    const double unseen = static_cast<double>(tau_hat - data.m_total() - data.r1());
    if (unseen < 0) fail(ErrorKind::DomainError, "tau1 estimate below m + r1");
    const double linked = 1.0 - zero.prob;
    for (const auto& [x, count] : data.between1()) {
      auto pg = eval(model, theta, x, Scope::between());
      if (which == MatrixKind::Sigma1) {
        push(static_cast<double>(count), 1.0, pg.grad / pg.prob);
      } else {
        const Vec gt = (pg.grad * linked + pg.prob * zero.grad) / (linked * linked);
        push(static_cast<double>(count), 0.0, gt / (pg.prob / linked));
      }
    }
    if (which == MatrixKind::Sigma1) {
      const double a = (1.0 - f) * zero.prob;
      push(unseen, -(1.0 - a) / a, zero.grad / zero.prob);
    } else {
      push(unseen, 0.0, Vec::Zero(q));
    }
    for (int l = 0; l < n; ++l) {
      const auto ml = data.site_sizes()[static_cast<std::size_t>(l)];
      for (const auto& [x, count] : data.within(l)) {
        auto pg = eval(model, theta, x, Scope::within(l));
        push(static_cast<double>(count), 1.0, pg.grad / pg.prob);
      }
      if (ml > data.within_linked(l)) {
        auto pg = eval(model, theta, OutcomePattern::zero(n), Scope::within(l));
        push(static_cast<double>(ml - data.within_linked(l)), 1.0, pg.grad / pg.prob);
      }
    }
  }

  double total = 0.0;
  Vec mean = Vec::Zero(dim);
  for (const auto& [w, v] : cells) {
    total += w;
    mean += w * v;
  }
  if (total < q + 2) fail(ErrorKind::InsufficientData, "too few persons for a V-vector covariance");
  mean /= total;
  Mat cov = Mat::Zero(dim, dim);
  for (const auto& [w, v] : cells) {
    const Vec c = v - mean;
    cov.noalias() += w * c * c.transpose();
  }
  cov /= (total - 1.0);
  return finalize_matrix(which, std::move(cov));
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorKind::DomainError, "quantile probability outside (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

Interval wald_interval(double estimate, double variance, double level) {
  if (!(level > 0.0 && level < 1.0)) fail(ErrorKind::DomainError, "interval level outside (0, 1)");
  if (!(variance >= 0.0) || !std::isfinite(variance)) fail(ErrorKind::DomainError, "variance must be finite and >= 0");
  const double half = normal_quantile(0.5 + level / 2.0) * std::sqrt(variance);
  return {estimate - half, estimate + half};
}

WaldIntervals wald_intervals(const EstimateReport& est, const VarianceReport& v, double level) {
  return {wald_interval(static_cast<double>(est.u1.tau.floored), v.var_tau1, level),
          wald_interval(static_cast<double>(est.u2.tau.floored), v.var_tau2, level),
          wald_interval(static_cast<double>(est.tau), v.var_tau, level)};
}

VarianceReport variance_report(const EstimateReport& est, const SampleData& data, const LinkModel& model1,
                               const LinkModel& model2, VarianceSource source, double level) {
  const int n = data.sites();
  const std::int64_t N = data.frame_size();
  const double f = data.sampling_fraction();
  VarianceReport out;
  out.method = est.method;
  out.source = source;
  out.level = level;

  const auto& th1 = est.u1.theta;
  const auto& th2 = est.u2.theta;
  double p1 = 0.0;
  const Vec g1 = zero_grad(th1, model1, p1);
  const bool full_frame = n >= N;
  const MatrixKind kind1 = (est.method == Method::Umle && !full_frame) ? MatrixKind::Sigma1 : MatrixKind::Psi1;

  AsymptoticMatrices m1, m2;
  if (source == VarianceSource::Analytic) {
    m1 = kind1 == MatrixKind::Sigma1 ? sigma1_inverse(th1, model1, n, N) : psi1_inverse(th1, model1, n, N);
    m2 = sigma2_inverse(th2, model2);
  } else {
    m1 = empirical_v_covariance(data, th1, est.u1.tau.floored, model1, kind1);
    m2 = empirical_v_covariance(data, th2, est.u2.tau.floored, model2, MatrixKind::Sigma2);
  }
  out.condition1 = m1.condition_number;
  out.condition2 = m2.condition_number;

  Mat theta_cov1;
  if (kind1 == MatrixKind::Sigma1) {
    out.sigma1_sq = sigma1_u_sq(theta_block(m1), p1, g1, f);
    const double d = 1.0 - (1.0 - f) * p1;
    theta_cov1 = checked_inverse(theta_block(m1) - (1.0 - f) / (p1 * d) * g1 * g1.transpose(), "sigma1_22");
  } else {
    out.sigma1_sq = sigma1_c_sq(m1.inverse_form, p1, g1, f);
    theta_cov1 = m1.covariance_form;
  }
  double p2 = 0.0;
  const Vec g2 = zero_grad(th2, model2, p2);
  out.sigma2_sq = sigma2_sq(theta_block(m2), p2, g2);
  const Mat theta_cov2 = checked_inverse(theta_block(m2) - g2 * g2.transpose() / (p2 * (1.0 - p2)), "sigma2_22");

  const double t1 = static_cast<double>(est.u1.tau.floored);
  const double t2 = static_cast<double>(est.u2.tau.floored);
  const double t = t1 + t2;
  out.var_tau1 = t1 * out.sigma1_sq;
  out.var_tau2 = t2 * out.sigma2_sq;
  out.var_tau = out.var_tau1 + out.var_tau2;
  out.alpha1 = t > 0 ? t1 / t : 0.0;
  out.alpha2 = t > 0 ? t2 / t : 0.0;
  out.sigma_sq = out.alpha1 * out.sigma1_sq + out.alpha2 * out.sigma2_sq;
  for (Eigen::Index j = 0; j < theta_cov1.rows(); ++j) {
    out.var_theta1.push_back(t1 > 0 ? theta_cov1(j, j) / t1 : std::numeric_limits<double>::infinity());
  }
  for (Eigen::Index j = 0; j < theta_cov2.rows(); ++j) {
    out.var_theta2.push_back(t2 > 0 ? theta_cov2(j, j) / t2 : std::numeric_limits<double>::infinity());
  }
  const auto iv = wald_intervals(est, out, level);
  out.tau1 = iv.tau1;
  out.tau2 = iv.tau2;
  out.tau = iv.tau;
  return out;
}

namespace {

json matrix_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

json interval_json(const Interval& iv) { return json::array({iv.lower, iv.upper}); }

}  // namespace

json matrices_to_json(const AsymptoticMatrices& m) {
  return json{{"schema_version", kSchemaVersion},
              {"which", std::string(to_string(m.which))},
              {"inverse_form", matrix_json(m.inverse_form)},
              {"covariance_form", matrix_json(m.covariance_form)},
              {"condition_number", m.condition_number}};
}

json variance_report_to_json(const VarianceReport& v) {
  return json{{"method", std::string(to_string(v.method))},
              {"source", std::string(to_string(v.source))},
              {"level", v.level},
              {"sigma1_sq", v.sigma1_sq},
              {"sigma2_sq", v.sigma2_sq},
              {"sigma_sq", v.sigma_sq},
              {"alpha1", v.alpha1},
              {"alpha2", v.alpha2},
              {"var_tau1", v.var_tau1},
              {"var_tau2", v.var_tau2},
              {"var_tau", v.var_tau},
              {"var_theta1", v.var_theta1},
              {"var_theta2", v.var_theta2},
              {"interval_tau1", interval_json(v.tau1)},
              {"interval_tau2", interval_json(v.tau2)},
              {"interval_tau", interval_json(v.tau)},
              {"condition_sigma1_or_psi1", v.condition1},
              {"condition_sigma2", v.condition2}};
}

}  // namespace snowlink
