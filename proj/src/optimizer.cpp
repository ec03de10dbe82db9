#include "snowlink/optimizer.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include "snowlink/errors.hpp"

namespace snowlink {

namespace {

std::optional<ObjectiveValue> try_eval(const Objective& f, const Eigen::VectorXd& x) {
  try {
    auto v = f(x);
    if (!std::isfinite(v.value) || !v.grad.allFinite()) return std::nullopt;
    return v;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NonFiniteLikelihood || e.kind() == ErrorKind::DomainError) return std::nullopt;
    throw;
  }
}

void project(Eigen::VectorXd& x, const std::vector<bool>& nonneg) {
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (nonneg[static_cast<std::size_t>(j)] && x[j] < 0.0) x[j] = 0.0;
  }
}

// coordinates held at a bound with the score pointing outward are fixed
std::vector<bool> free_set(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const std::vector<bool>& nonneg) {
  std::vector<bool> free(static_cast<std::size_t>(x.size()), true);
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (nonneg[static_cast<std::size_t>(j)] && x[j] <= 0.0 && g[j] <= 0.0) free[static_cast<std::size_t>(j)] = false;
  }
  return free;
}

double projected_norm(const Eigen::VectorXd& g, const std::vector<bool>& free) {
  double out = 0.0;
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    if (free[static_cast<std::size_t>(j)]) out = std::max(out, std::abs(g[j]));
  }
  return out;
}

// An objective even in a bounded coordinate has zero score at the bound even when
// the bound is a minimum along it; probe off the bound and move if the value rises.
bool escape_bound(const Objective& f, OptimizerResult& res, const std::vector<bool>& nonneg) {
  bool moved = false;
  for (Eigen::Index j = 0; j < res.x.size(); ++j) {
    if (!nonneg[static_cast<std::size_t>(j)] || res.x[j] > 1e-6) continue;
    const double noise = 1e-12 * (1.0 + std::abs(res.value));
    for (double s = 0.5; s >= 1e-3; s *= 0.5) {
      Eigen::VectorXd trial = res.x;
      trial[j] = s;
      auto val = try_eval(f, trial);
      if (val && val->value > res.value + noise) {
        res.x = std::move(trial);
        res.value = val->value;
        res.grad = std::move(val->grad);
        moved = true;
        break;
      }
    }
  }
  return moved;
}

// full Newton steps past the tolerance while the score keeps shrinking
void polish(const Objective& f, OptimizerResult& res, const std::vector<bool>& nonneg) {
  for (int k = 0; k < 3; ++k) {
    const auto free = free_set(res.x, res.grad, nonneg);
    const double norm = projected_norm(res.grad, free);
    if (norm == 0.0) return;
    Eigen::MatrixXd negH = -fd_hessian(f, res.x);
    Eigen::VectorXd g = res.grad;
    for (Eigen::Index j = 0; j < res.x.size(); ++j) {
      if (free[static_cast<std::size_t>(j)]) continue;
      g[j] = 0.0;
      negH.row(j).setZero();
      negH.col(j).setZero();
      negH(j, j) = 1.0;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(negH);
    if (llt.info() != Eigen::Success) return;
    Eigen::VectorXd trial = res.x + llt.solve(g);
    project(trial, nonneg);
    auto val = try_eval(f, trial);
    if (!val || val->value < res.value - 1e-13 * (1.0 + std::abs(res.value))) return;
    if (projected_norm(val->grad, free_set(trial, val->grad, nonneg)) >= norm) return;
    res.x = std::move(trial);
    res.value = val->value;
    res.grad = std::move(val->grad);
    res.grad_norm = projected_norm(res.grad, free_set(res.x, res.grad, nonneg));
  }
}

}  // namespace

Eigen::MatrixXd fd_hessian(const Objective& f, const Eigen::VectorXd& x) {
  const Eigen::Index q = x.size();
  Eigen::MatrixXd H(q, q);
  for (Eigen::Index j = 0; j < q; ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(x[j]));
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    H.col(j) = (f(xp).grad - f(xm).grad) / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

OptimizerResult maximize(const Objective& f, Eigen::VectorXd x0, const std::vector<bool>& nonnegative,
                         const OptimizerOptions& options) {
  const Eigen::Index q = x0.size();
  std::vector<bool> nonneg = nonnegative;
  nonneg.resize(static_cast<std::size_t>(q), false);
  project(x0, nonneg);

  auto start = try_eval(f, x0);
  if (!start) fail(ErrorKind::NonFiniteLikelihood, "objective is not finite at the starting point");

  OptimizerResult res;
  res.x = std::move(x0);
  res.value = start->value;
  res.grad = std::move(start->grad);
  double ascent_rate = 1.0 / std::max(1.0, res.grad.lpNorm<Eigen::Infinity>());
  int escapes = 0;

  for (res.iterations = 0; res.iterations <= options.max_iterations; ++res.iterations) {
    auto free = free_set(res.x, res.grad, nonneg);
    res.grad_norm = projected_norm(res.grad, free);
    if (res.grad_norm <= options.tolerance) {
      if (escapes < 3 && escape_bound(f, res, nonneg)) {
        ++escapes;
        continue;
      }
      polish(f, res, nonneg);
      res.converged = true;
      return res;
    }
    if (res.iterations == options.max_iterations) break;

    Eigen::VectorXd g_free = res.grad;
    for (Eigen::Index j = 0; j < q; ++j) {
      if (!free[static_cast<std::size_t>(j)]) g_free[j] = 0.0;
    }

    Eigen::VectorXd newton;
    bool have_newton = false;
    {
      Eigen::MatrixXd negH = -fd_hessian(f, res.x);
      for (Eigen::Index j = 0; j < q; ++j) {
        if (free[static_cast<std::size_t>(j)]) continue;
        negH.row(j).setZero();
        negH.col(j).setZero();
        negH(j, j) = 1.0;
      }
      Eigen::LLT<Eigen::MatrixXd> llt(negH);
      if (llt.info() == Eigen::Success) {
        newton = llt.solve(g_free);
        have_newton = newton.allFinite();
      }
    }

    bool moved = false;
    for (int attempt = 0; attempt < 2 && !moved; ++attempt) {
      const bool use_newton = attempt == 0 && have_newton;
      if (attempt == 0 && !have_newton) continue;
      Eigen::VectorXd dir = use_newton ? newton : Eigen::VectorXd(ascent_rate * g_free);
      const double len = dir.lpNorm<Eigen::Infinity>();
      if (len > options.max_step) dir *= options.max_step / len;

      double t = 1.0;
      for (int k = 0; k < 60; ++k, t *= 0.5) {
        Eigen::VectorXd trial = res.x + t * dir;
        project(trial, nonneg);
        const Eigen::VectorXd delta = trial - res.x;
        if (delta.lpNorm<Eigen::Infinity>() == 0.0) break;
        auto val = try_eval(f, trial);
        if (!val) continue;
        const double predicted = res.grad.dot(delta);
        // near the optimum the gain drops below rounding in the value; then demand a smaller score
        const double noise = 1e-13 * (1.0 + std::abs(res.value));
        const bool armijo = val->value >= res.value + 1e-4 * predicted;
        const bool flat_progress = val->value >= res.value - noise &&
                                   projected_norm(val->grad, free_set(trial, val->grad, nonneg)) <
                                       0.5 * projected_norm(res.grad, free);
        if (armijo || flat_progress) {
          if (!use_newton) ascent_rate = (k == 0) ? ascent_rate * 2.0 : ascent_rate * t;
          res.x = std::move(trial);
          res.value = val->value;
          res.grad = std::move(val->grad);
          moved = true;
          break;
        }
      }
      if (!moved && !use_newton) ascent_rate *= 0.1;
    }
    if (!moved) {
      // no representable ascent remains
      auto free_now = free_set(res.x, res.grad, nonneg);
      res.grad_norm = projected_norm(res.grad, free_now);
      if (escapes < 3 && escape_bound(f, res, nonneg)) {
        ++escapes;
        continue;
      }
      res.converged = res.grad_norm <= options.tolerance;
      return res;
    }
  }
  return res;
}

}  // namespace snowlink
