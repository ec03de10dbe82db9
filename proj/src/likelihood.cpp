#include "snowlink/likelihood.hpp"

#include <cmath>
#include <limits>

#include "snowlink/errors.hpp"

namespace snowlink {

std::string_view to_string(LikTerm term) {
  switch (term) {
    case LikTerm::Full1: return "Full1";
    case LikTerm::Cond1: return "Cond1";
    case LikTerm::Binom12: return "Binom12";
    case LikTerm::Mult: return "Mult";
    case LikTerm::Full2: return "Full2";
    case LikTerm::Cond2: return "Cond2";
  }
  return "Unknown";
}

namespace {

void check_model(const SampleData& data, const LinkModel& model) {
  if (model.sites() != data.sites()) {
    fail(ErrorKind::DimensionMismatch, "model site count differs from sample");
  }
}

double checked_prob(const LinkModel& model, std::span<const double> theta, OutcomePattern x, Scope scope,
                    std::span<double> grad) {
  const double p = model.evaluate(theta, x, scope, grad);
  if (!(p >= kProbabilityFloor)) {
    fail(ErrorKind::NonFiniteLikelihood, "pattern " + x.to_string() + " has probability below floor");
  }
  return p;
}

// adds count * ln pi_x to value and count * grad pi_x / pi_x to grad
void add_cell(const LinkModel& model, std::span<const double> theta, OutcomePattern x, Scope scope, double count,
              double& value, std::vector<double>& grad, std::vector<double>& scratch) {
  if (count == 0.0) return;
  const double p = checked_prob(model, theta, x, scope, scratch);
  value += count * std::log(p);
  for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += count * scratch[j] / p;
}

void add_within(const SampleData& data, std::span<const double> theta, const LinkModel& model, double& value,
                std::vector<double>& grad, std::vector<double>& scratch) {
  for (int l = 0; l < data.sites(); ++l) {
    const auto ml = data.site_sizes()[static_cast<std::size_t>(l)];
    if (ml == 0) continue;
    const Scope scope = Scope::within(l);
    for (const auto& [x, count] : data.within(l)) {
      add_cell(model, theta, x, scope, static_cast<double>(count), value, grad, scratch);
    }
    add_cell(model, theta, OutcomePattern::zero(data.sites()), scope,
             static_cast<double>(ml - data.within_linked(l)), value, grad, scratch);
  }
}

double unlinked_frame_term(const SampleData& data, double tau1) {
  const double f = data.sampling_fraction();
  const double outside = tau1 - static_cast<double>(data.m_total());
  if (outside == 0.0) return 0.0;
  if (f >= 1.0) return -std::numeric_limits<double>::infinity();
  return outside * std::log1p(-f);
}

void check_tau1(const SampleData& data, double tau1) {
  const double lower = static_cast<double>(data.m_total() + data.r1());
  if (!(tau1 >= lower)) fail(ErrorKind::DomainError, "tau1 below m + r1");
}

}  // namespace

LogLikTerms loglik_full_1(const SampleData& data, double tau1, std::span<const double> theta,
                          const LinkModel& model) {
  check_model(data, model);
  check_tau1(data, tau1);
  const auto q = static_cast<std::size_t>(model.dimension());
  LogLikTerms out{0.0, std::vector<double>(q, 0.0), LikTerm::Full1};
  std::vector<double> scratch(q);

  const double m = static_cast<double>(data.m_total());
  const double r1 = static_cast<double>(data.r1());
  out.value = std::lgamma(tau1 + 1.0) - std::lgamma(tau1 - m - r1 + 1.0) + unlinked_frame_term(data, tau1);
  for (const auto& [x, count] : data.between1()) {
    add_cell(model, theta, x, Scope::between(), static_cast<double>(count), out.value, out.grad, scratch);
  }
  add_cell(model, theta, OutcomePattern::zero(data.sites()), Scope::between(), tau1 - m - r1, out.value, out.grad,
           scratch);
  add_within(data, theta, model, out.value, out.grad, scratch);
  return out;
}

LogLikTerms loglik_cond_1(const SampleData& data, std::span<const double> theta, const LinkModel& model) {
  check_model(data, model);
  if (data.r1() == 0 && !data.has_within_links()) {
    fail(ErrorKind::Unidentifiable, "no linked between-site persons and no within-site links");
  }
  const auto q = static_cast<std::size_t>(model.dimension());
  LogLikTerms out{0.0, std::vector<double>(q, 0.0), LikTerm::Cond1};
  std::vector<double> scratch(q);

  for (const auto& [x, count] : data.between1()) {
    add_cell(model, theta, x, Scope::between(), static_cast<double>(count), out.value, out.grad, scratch);
  }
  if (data.r1() > 0) {
    const double p0 = model.evaluate(theta, OutcomePattern::zero(data.sites()), Scope::between(), scratch);
    const double linked = 1.0 - p0;
    if (!(linked >= kProbabilityFloor)) fail(ErrorKind::NonFiniteLikelihood, "1 - pi_0 below floor");
    const double r1 = static_cast<double>(data.r1());
    out.value -= r1 * std::log(linked);
    for (std::size_t j = 0; j < q; ++j) out.grad[j] += r1 * scratch[j] / linked;
  }
  add_within(data, theta, model, out.value, out.grad, scratch);
  return out;
}

LogLikTerms loglik_binom_12(const SampleData& data, double tau1, std::span<const double> theta,
                            const LinkModel& model) {
  check_model(data, model);
  check_tau1(data, tau1);
  const auto q = static_cast<std::size_t>(model.dimension());
  LogLikTerms out{0.0, std::vector<double>(q, 0.0), LikTerm::Binom12};
  std::vector<double> scratch(q);

  const double outside = tau1 - static_cast<double>(data.m_total());
  const double r1 = static_cast<double>(data.r1());
  out.value = std::lgamma(outside + 1.0) - std::lgamma(outside - r1 + 1.0);
  add_cell(model, theta, OutcomePattern::zero(data.sites()), Scope::between(), outside - r1, out.value, out.grad,
           scratch);
  if (r1 > 0) {
    const double p0 = model.evaluate(theta, OutcomePattern::zero(data.sites()), Scope::between(), scratch);
    const double linked = 1.0 - p0;
    if (!(linked >= kProbabilityFloor)) fail(ErrorKind::NonFiniteLikelihood, "1 - pi_0 below floor");
    out.value += r1 * std::log(linked);
    for (std::size_t j = 0; j < q; ++j) out.grad[j] -= r1 * scratch[j] / linked;
  }
  return out;
}

LogLikTerms loglik_mult(const SampleData& data, double tau1, const LinkModel& model) {
  check_model(data, model);
  const double m = static_cast<double>(data.m_total());
  if (!(tau1 >= m)) fail(ErrorKind::DomainError, "tau1 below m");
  LogLikTerms out{0.0, std::vector<double>(static_cast<std::size_t>(model.dimension()), 0.0), LikTerm::Mult};
  out.value = std::lgamma(tau1 + 1.0) - std::lgamma(tau1 - m + 1.0) + unlinked_frame_term(data, tau1);
  return out;
}

LogLikTerms loglik_2(const SampleData& data, double tau2, std::span<const double> theta, const LinkModel& model,
                     bool conditional) {
  check_model(data, model);
  const auto q = static_cast<std::size_t>(model.dimension());
  LogLikTerms out{0.0, std::vector<double>(q, 0.0), conditional ? LikTerm::Cond2 : LikTerm::Full2};
  std::vector<double> scratch(q);
  const double r2 = static_cast<double>(data.r2());

  for (const auto& [x, count] : data.between2()) {
    add_cell(model, theta, x, Scope::between(), static_cast<double>(count), out.value, out.grad, scratch);
  }
  if (conditional) {
    if (data.r2() == 0) fail(ErrorKind::Unidentifiable, "no observed persons outside the frame");
    const double p0 = model.evaluate(theta, OutcomePattern::zero(data.sites()), Scope::between(), scratch);
    const double linked = 1.0 - p0;
    if (!(linked >= kProbabilityFloor)) fail(ErrorKind::NonFiniteLikelihood, "1 - pi_0 below floor");
    out.value -= r2 * std::log(linked);
    for (std::size_t j = 0; j < q; ++j) out.grad[j] += r2 * scratch[j] / linked;
    return out;
  }
  if (!(tau2 >= r2)) fail(ErrorKind::DomainError, "tau2 below r2");
  out.value += std::lgamma(tau2 + 1.0) - std::lgamma(tau2 - r2 + 1.0);
  add_cell(model, theta, OutcomePattern::zero(data.sites()), Scope::between(), tau2 - r2, out.value, out.grad,
           scratch);
  return out;
}

}  // namespace snowlink
