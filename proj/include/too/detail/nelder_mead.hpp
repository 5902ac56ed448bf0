#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

namespace too::detail {

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
};

/// Classic Nelder-Mead simplex minimization of an unconstrained objective.
/// Stops when the simplex function spread falls below ftol or after
/// max_iter reflections.
inline NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& start, double step = 0.5,
                                    int max_iter = 200, double ftol = 1e-8) {
  const int n = static_cast<int>(start.size());
  const double alpha = 1.0, gamma = 2.0, beta = 0.5, delta = 0.5;

  std::vector<Eigen::VectorXd> pts(n + 1, start);
  std::vector<double> vals(n + 1);
  for (int i = 0; i < n; ++i) pts[i + 1](i) += step;
  int evals = 0;
  for (int i = 0; i <= n; ++i) vals[i] = (++evals, f(pts[i]));

  std::vector<int> order(n + 1);
  for (int it = 0; it < max_iter; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
    const int best = order[0], worst = order[n], second_worst = order[n - 1];
    if (vals[worst] - vals[best] < ftol) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i <= n; ++i)
      if (i != worst) centroid += pts[i];
    centroid /= n;

    Eigen::VectorXd reflected = centroid + alpha * (centroid - pts[worst]);
    const double fr = (++evals, f(reflected));
    if (fr < vals[best]) {
      Eigen::VectorXd expanded = centroid + gamma * (reflected - centroid);
      const double fe = (++evals, f(expanded));
      if (fe < fr) {
        pts[worst] = expanded;
        vals[worst] = fe;
      } else {
        pts[worst] = reflected;
        vals[worst] = fr;
      }
    } else if (fr < vals[second_worst]) {
      pts[worst] = reflected;
      vals[worst] = fr;
    } else {
      const bool outside = fr < vals[worst];
      Eigen::VectorXd contracted =
          outside ? centroid + beta * (reflected - centroid) : centroid + beta * (pts[worst] - centroid);
      const double fc = (++evals, f(contracted));
      if (fc < std::min(fr, vals[worst])) {
        pts[worst] = contracted;
        vals[worst] = fc;
      } else {
        for (int i = 0; i <= n; ++i) {
          if (i == best) continue;
          pts[i] = pts[best] + delta * (pts[i] - pts[best]);
          vals[i] = (++evals, f(pts[i]));
        }
      }
    }
  }

  int best = 0;
  for (int i = 1; i <= n; ++i)
    if (vals[i] < vals[best]) best = i;
  return {pts[best], vals[best], evals};
}

}  // namespace too::detail
