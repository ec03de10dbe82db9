#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snowlink/patterns.hpp"
#include "snowlink/quadrature.hpp"
#include "snowlink/rng.hpp"

namespace snowlink {

using LinkParams = std::vector<double>;

// Between: pattern over all n sites. Within(l): member of site l, pattern over the other sites.
struct Scope {
  static Scope between() { return Scope{}; }
  static Scope within(int site) { return Scope{site}; }

  std::optional<int> excluded;
};

class LinkModel {
 public:
  virtual ~LinkModel() = default;

  virtual std::string family() const = 0;
  virtual int sites() const = 0;
  virtual int dimension() const = 0;

  // coordinates constrained to be >= 0 during fitting
  virtual std::vector<bool> nonnegative() const { return std::vector<bool>(static_cast<std::size_t>(dimension()), false); }

  // start point from per-site link frequencies
  virtual LinkParams initial_params(std::span<const double> site_probs) const = 0;

  // pi_x and, if grad is non-empty, d pi_x / d theta into grad
  double evaluate(std::span<const double> theta, OutcomePattern x, Scope scope, std::span<double> grad) const;

  // one person's pattern; the default inverts the pattern table
  virtual OutcomePattern draw(std::span<const double> theta, Scope scope, Rng& rng) const;

  void check_params(std::span<const double> theta) const;

 protected:
  virtual double do_evaluate(std::span<const double> theta, OutcomePattern x, Scope scope,
                             std::span<double> grad) const = 0;
};

// per-site logits eta_1..eta_n
class HomogeneousModel final : public LinkModel {
 public:
  explicit HomogeneousModel(int n);

  std::string family() const override { return "homogeneous"; }
  int sites() const override { return n_; }
  int dimension() const override { return n_; }
  LinkParams initial_params(std::span<const double> site_probs) const override;
  OutcomePattern draw(std::span<const double> theta, Scope scope, Rng& rng) const override;

 protected:
  double do_evaluate(std::span<const double> theta, OutcomePattern x, Scope scope,
                     std::span<double> grad) const override;

 private:
  int n_;
};

// (alpha_1..alpha_n, sigma): logit p = alpha_i + sigma z, z ~ N(0,1)
class RaschModel final : public LinkModel {
 public:
  RaschModel(int n, int quadrature_nodes = 30);

  std::string family() const override { return "rasch"; }
  int sites() const override { return n_; }
  int dimension() const override { return n_ + 1; }
  std::vector<bool> nonnegative() const override;
  LinkParams initial_params(std::span<const double> site_probs) const override;
  OutcomePattern draw(std::span<const double> theta, Scope scope, Rng& rng) const override;

  const QuadratureRule& rule() const noexcept { return rule_; }

 protected:
  double do_evaluate(std::span<const double> theta, OutcomePattern x, Scope scope,
                     std::span<double> grad) const override;

 private:
  int n_;
  QuadratureRule rule_;
};

double pattern_prob(const LinkModel& model, std::span<const double> theta, OutcomePattern x,
                    Scope scope = Scope::between());
std::vector<double> pattern_grad(const LinkModel& model, std::span<const double> theta, OutcomePattern x,
                                 Scope scope = Scope::between());

struct ZeroPatternTerms {
  double prob;
  std::vector<double> grad;
};
ZeroPatternTerms zero_pattern_prob_and_grad(const LinkModel& model, std::span<const double> theta,
                                            Scope scope = Scope::between());

struct ModelSpec {
  std::string family = "homogeneous";
  int n = 1;
  int quadrature_nodes = 30;
};

std::shared_ptr<const LinkModel> make_model(const ModelSpec& spec);

double logistic(double u) noexcept;
double logit(double p) noexcept;

}  // namespace snowlink
