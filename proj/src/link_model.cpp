#include "snowlink/link_model.hpp"

#include <algorithm>
#include <cmath>

#include "snowlink/errors.hpp"

namespace snowlink {

double logistic(double u) noexcept {
  if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

double logit(double p) noexcept { return std::log(p / (1.0 - p)); }

void LinkModel::check_params(std::span<const double> theta) const {
  if (static_cast<int>(theta.size()) != dimension()) {
    fail(ErrorKind::DimensionMismatch, family() + " model expects " + std::to_string(dimension()) +
                                           " parameters, got " + std::to_string(theta.size()));
  }
  for (double t : theta) {
    if (!std::isfinite(t)) fail(ErrorKind::DomainError, "non-finite link parameter");
  }
}

double LinkModel::evaluate(std::span<const double> theta, OutcomePattern x, Scope scope,
                           std::span<double> grad) const {
  check_params(theta);
  if (x.sites() != sites()) fail(ErrorKind::DimensionMismatch, "pattern width differs from model site count");
  if (!grad.empty() && static_cast<int>(grad.size()) != dimension()) {
    fail(ErrorKind::DimensionMismatch, "gradient buffer has wrong length");
  }
  if (scope.excluded) {
    const int l = *scope.excluded;
    if (l < 0 || l >= sites()) fail(ErrorKind::ScopeViolation, "within-site index out of range");
    if (x.linked_to(l)) fail(ErrorKind::ScopeViolation, "within-site pattern links to its own site");
  }
  return do_evaluate(theta, x, scope, grad);
}

OutcomePattern LinkModel::draw(std::span<const double> theta, Scope scope, Rng& rng) const {
  const auto patterns = enumerate_patterns(sites(), scope.excluded);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (const auto& x : patterns) {
    acc += evaluate(theta, x, scope, {});
    if (u < acc) return x;
  }
  return patterns.back();
}

HomogeneousModel::HomogeneousModel(int n) : n_(n) {
  if (n < 1 || n > kMaxSites) fail(ErrorKind::ConfigError, "homogeneous model needs 1 <= n <= 31");
}

LinkParams HomogeneousModel::initial_params(std::span<const double> site_probs) const {
  LinkParams out(site_probs.size());
  std::transform(site_probs.begin(), site_probs.end(), out.begin(), [](double p) { return logit(p); });
  return out;
}

double HomogeneousModel::do_evaluate(std::span<const double> theta, OutcomePattern x, Scope scope,
                                     std::span<double> grad) const {
  double prob = 1.0;
  for (int i = 0; i < n_; ++i) {
    if (scope.excluded == i) continue;
    const double p = logistic(theta[i]);
    prob *= x.linked_to(i) ? p : 1.0 - p;
  }
  if (!grad.empty()) {
    for (int i = 0; i < n_; ++i) {
      if (scope.excluded == i) {
        grad[i] = 0.0;
        continue;
      }
      // d/d eta of p^x (1-p)^(1-x) is (x - p) times itself
      grad[i] = prob * ((x.linked_to(i) ? 1.0 : 0.0) - logistic(theta[i]));
    }
  }
  return prob;
}

OutcomePattern HomogeneousModel::draw(std::span<const double> theta, Scope scope, Rng& rng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uint32_t bits = 0;
  for (int i = 0; i < n_; ++i) {
    if (scope.excluded == i) continue;
    if (unif(rng) < logistic(theta[i])) bits |= 1u << i;
  }
  return OutcomePattern(bits, n_);
}

RaschModel::RaschModel(int n, int quadrature_nodes)
    : n_(n), rule_(QuadratureRule::gauss_hermite(quadrature_nodes)) {
  if (n < 1 || n > kMaxSites) fail(ErrorKind::ConfigError, "rasch model needs 1 <= n <= 31");
}

std::vector<bool> RaschModel::nonnegative() const {
  std::vector<bool> out(static_cast<std::size_t>(n_) + 1, false);
  out.back() = true;
  return out;
}

LinkParams RaschModel::initial_params(std::span<const double> site_probs) const {
  LinkParams out(site_probs.size() + 1);
  std::transform(site_probs.begin(), site_probs.end(), out.begin(), [](double p) { return logit(p); });
  out.back() = 0.5;
  return out;
}

double RaschModel::do_evaluate(std::span<const double> theta, OutcomePattern x, Scope scope,
                               std::span<double> grad) const {
  const double sigma = theta[n_];
  const auto& z = rule_.nodes();
  const auto& w = rule_.weights();
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

  double prob = 0.0;
  for (int k = 0; k < rule_.size(); ++k) {
    double node_prob = 1.0;
    double resid_sum = 0.0;
    for (int i = 0; i < n_; ++i) {
      if (scope.excluded == i) continue;
      const double p = logistic(theta[i] + sigma * z[k]);
      node_prob *= x.linked_to(i) ? p : 1.0 - p;
    }
    const double wp = w[k] * node_prob;
    prob += wp;
    if (want_grad) {
      for (int i = 0; i < n_; ++i) {
        if (scope.excluded == i) continue;
        const double resid = (x.linked_to(i) ? 1.0 : 0.0) - logistic(theta[i] + sigma * z[k]);
        grad[i] += wp * resid;
        resid_sum += resid;
      }
      grad[n_] += wp * resid_sum * z[k];
    }
  }
  return prob;
}

OutcomePattern RaschModel::draw(std::span<const double> theta, Scope scope, Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double effect = theta[n_] * normal(rng);
  std::uint32_t bits = 0;
  for (int i = 0; i < n_; ++i) {
    if (scope.excluded == i) continue;
    if (unif(rng) < logistic(theta[i] + effect)) bits |= 1u << i;
  }
  return OutcomePattern(bits, n_);
}

double pattern_prob(const LinkModel& model, std::span<const double> theta, OutcomePattern x, Scope scope) {
  return model.evaluate(theta, x, scope, {});
}

std::vector<double> pattern_grad(const LinkModel& model, std::span<const double> theta, OutcomePattern x,
                                 Scope scope) {
  std::vector<double> grad(static_cast<std::size_t>(model.dimension()));
  model.evaluate(theta, x, scope, grad);
  return grad;
}

ZeroPatternTerms zero_pattern_prob_and_grad(const LinkModel& model, std::span<const double> theta, Scope scope) {
  ZeroPatternTerms out{0.0, std::vector<double>(static_cast<std::size_t>(model.dimension()))};
  out.prob = model.evaluate(theta, OutcomePattern::zero(model.sites()), scope, out.grad);
  return out;
}

std::shared_ptr<const LinkModel> make_model(const ModelSpec& spec) {
  if (spec.family == "homogeneous") return std::make_shared<HomogeneousModel>(spec.n);
  if (spec.family == "rasch") return std::make_shared<RaschModel>(spec.n, spec.quadrature_nodes);
  fail(ErrorKind::ConfigError, "unknown model family '" + spec.family + "'");
}

}  // namespace snowlink
