#include "snowlink/quadrature.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "snowlink/errors.hpp"

namespace snowlink {

namespace {

// orthonormal probabilists' Hermite values h_0..h_K at z
void hermite_orthonormal(double z, int K, std::vector<double>& h) {
  h.assign(static_cast<std::size_t>(K) + 1, 0.0);
  h[0] = 1.0;
  if (K >= 1) h[1] = z;
  for (int j = 2; j <= K; ++j) {
    h[j] = (z * h[j - 1] - std::sqrt(j - 1.0) * h[j - 2]) / std::sqrt(static_cast<double>(j));
  }
}

}  // namespace

QuadratureRule QuadratureRule::gauss_hermite(int K) {
  if (K < 1 || K > 200) fail(ErrorKind::ConfigError, "quadrature node count must be in [1, 200]");

  // Golub-Welsch start, then Newton polish on h_K and Christoffel weights
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(K, K);
  for (int k = 1; k < K; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi, Eigen::EigenvaluesOnly);
  std::vector<double> z(solver.eigenvalues().data(), solver.eigenvalues().data() + K);
  std::vector<double> w(static_cast<std::size_t>(K));
  std::vector<double> h;

  for (int i = 0; i < K; ++i) {
    double x = z[i];
    for (int it = 0; it < 8; ++it) {
      hermite_orthonormal(x, K, h);
      const double step = h[K] / (std::sqrt(static_cast<double>(K)) * h[K - 1]);
      x -= step;
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
    }
    hermite_orthonormal(x, K, h);
    double s = 0.0;
    for (int j = 0; j < K; ++j) s += h[j] * h[j];
    z[i] = x;
    w[i] = 1.0 / s;
  }

  // exact symmetry
  for (int i = 0; i < K / 2; ++i) {
    const double zm = 0.5 * (z[K - 1 - i] - z[i]);
    const double wm = 0.5 * (w[i] + w[K - 1 - i]);
    z[i] = -zm;
    z[K - 1 - i] = zm;
    w[i] = w[K - 1 - i] = wm;
  }
  if (K % 2 == 1) z[K / 2] = 0.0;

  double total = 0.0;
  for (double wi : w) total += wi;
  for (double& wi : w) wi /= total;
  return QuadratureRule(std::move(z), std::move(w));
}

}  // namespace snowlink
