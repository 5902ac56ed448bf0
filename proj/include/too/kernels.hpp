#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "too/common.hpp"

namespace too {

enum class KernelFamily { gaussian, matern52 };

/// Hyperparameters of the seed-aware product kernel: anisotropic
/// lengthscales over the continuous coordinates, process variance sigma^2,
/// cross-seed correlation rho and noise nugget tau^2.
///
/// rho < 1 is the usual seed-aware setting; rho == 1 degenerates to a
/// seed-blind kernel (used by the mean-behavior baseline surrogate).
struct KernelParams {
  Eigen::VectorXd lengthscales;
  double variance = 1.0;
  double rho = 0.5;
  double nugget = 1e-6;

  void validate() const {
    if (lengthscales.size() < 1) throw std::invalid_argument("KernelParams: no lengthscales");
    if ((lengthscales.array() <= 0.0).any())
      throw std::invalid_argument("KernelParams: lengthscales must be positive");
    if (variance <= 0.0) throw std::invalid_argument("KernelParams: variance must be positive");
    if (nugget <= 0.0) throw std::invalid_argument("KernelParams: nugget must be positive");
    if (rho <= 0.0 || rho > 1.0) throw std::invalid_argument("KernelParams: rho must be in (0, 1]");
  }
};

/// One surrogate input: continuous coordinates (calibration parameters plus
/// the scaled time index, all in [0,1]) and a categorical seed label.
/// Seed labels carry no order; only equality between them is meaningful.
struct AugmentedInput {
  Eigen::VectorXd coords;
  int seed = 0;
};

/// Builds the (x, t, seed) input the surrogate operates on.
inline AugmentedInput augment(const Eigen::VectorXd& x, double t, int seed) {
  AugmentedInput in;
  in.coords.resize(x.size() + 1);
  in.coords.head(x.size()) = x;
  in.coords(x.size()) = t;
  in.seed = seed;
  return in;
}

/// Stationary covariance between two coordinate vectors.
inline double continuous_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                const KernelParams& params, KernelFamily family) {
  if (a.size() != b.size())
    throw std::invalid_argument("continuous_kernel: coordinate dimensions differ");
  if (a.size() != params.lengthscales.size())
    throw std::invalid_argument("continuous_kernel: lengthscale count does not match dimension");
  const double q = ((a - b).array() / params.lengthscales.array()).square().sum();
  switch (family) {
    case KernelFamily::gaussian:
      return params.variance * std::exp(-0.5 * q);
    case KernelFamily::matern52: {
      const double z = std::sqrt(5.0 * q);
      return params.variance * (1.0 + z + z * z / 3.0) * std::exp(-z);
    }
  }
  throw std::invalid_argument("continuous_kernel: unknown family");
}

/// Seed-aware covariance: the continuous kernel, damped by rho when the two
/// seed labels differ.
inline double crn_kernel(const AugmentedInput& p, const AugmentedInput& q,
                         const KernelParams& params, KernelFamily family) {
  const double k = continuous_kernel(p.coords, q.coords, params, family);
  return p.seed == q.seed ? k : params.rho * k;
}

/// Dense covariance matrix over a training design. With the nugget flag the
/// noise variance tau^2 is added to every diagonal entry, which also makes
/// the matrix strictly positive definite.
inline Eigen::MatrixXd build_covariance(const std::vector<AugmentedInput>& inputs,
                                        const KernelParams& params, KernelFamily family,
                                        bool with_nugget) {
  if (inputs.empty()) throw std::invalid_argument("build_covariance: empty input list");
  const int n = static_cast<int>(inputs.size());
  Eigen::MatrixXd k(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double v = crn_kernel(inputs[i], inputs[j], params, family);
      k(i, j) = v;
      k(j, i) = v;
    }
    if (with_nugget) k(i, i) += params.nugget;
  }
  return k;
}

}  // namespace too
