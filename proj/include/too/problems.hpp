#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "too/campaign.hpp"
#include "too/gp.hpp"
#include "too/seir.hpp"

namespace too::problems {

/// A calibration problem as the campaign sees it: input dimension, output
/// times (unit scale for the surrogate, raw scale for reporting) and the
/// deterministic (x, seed) -> trajectories map.
struct Problem {
  int dim = 1;
  int n_objectives = 1;
  std::vector<double> times_unit;
  std::vector<double> times_raw;
  Simulator simulator;

  ObjectiveSpec truth_objective(const Eigen::VectorXd& x, int seed) const {
    ObjectiveSpec spec;
    spec.observed = simulator(x, seed);
    return spec;
  }
};

/// Smooth planted 1-D trajectory family. Each seed label shifts the phase
/// of a secondary oscillation, so matching a target trajectory requires
/// finding both the right x and the right seed; the global optimum g = 0 is
/// attained exactly at the pair the truth was generated from.
inline Problem make_toy1d() {
  Problem prob;
  prob.dim = 1;
  prob.n_objectives = 1;
  prob.times_unit = {0.1, 0.3, 0.5, 0.7, 0.9};
  prob.times_raw = prob.times_unit;
  const auto times = prob.times_unit;
  prob.simulator = [times](const Eigen::VectorXd& x, int seed) {
    const double phase = std::fmod(0.6180339887498949 * (seed + 1), 1.0);
    Eigen::VectorXd y(static_cast<int>(times.size()));
    for (size_t j = 0; j < times.size(); ++j) {
      const double t = times[j];
      y(static_cast<int>(j)) = std::sin(2.0 * M_PI * (t + 0.3 * x(0))) +
                               0.8 * std::cos(2.0 * M_PI * (2.0 * t + phase)) +
                               0.2 * (x(0) - 0.5);
    }
    return std::vector<Eigen::VectorXd>{y};
  };
  return prob;
}

/// Stochastic epidemic calibration problem over the unit cube image of
/// (beta, kappa_a, kappa_s). Single objective matches cumulative hospital
/// admissions; the bi-objective variant adds cumulative deaths.
inline Problem make_seir(bool biobjective, const seir::SeirFixedParams& fixed = {},
                         const seir::ParamRanges& ranges = {}, int horizon_days = 100,
                         std::vector<int> output_days = {20, 40, 60, 80, 100}) {
  Problem prob;
  prob.dim = 3;
  prob.n_objectives = biobjective ? 2 : 1;
  for (int d : output_days) {
    prob.times_unit.push_back(static_cast<double>(d) / static_cast<double>(horizon_days));
    prob.times_raw.push_back(static_cast<double>(d));
  }
  prob.simulator = [=](const Eigen::VectorXd& x, int seed) {
    const auto params = ranges.from_unit_cube(Eigen::Vector3d(x(0), x(1), x(2)), fixed);
    const auto traj = seir::simulate(params, seed, horizon_days, output_days);
    std::vector<Eigen::VectorXd> out{traj.hosp};
    if (biobjective) out.push_back(traj.death);
    return out;
  };
  return prob;
}

namespace detail {

/// Progressive draw from one fixed GP realization: every query is sampled
/// jointly with (conditioned on) all previously returned values, so the
/// function is coherent across calls, and repeated queries are served from
/// a cache so identical (x, seed) pairs return identical trajectories.
class CoherentGpSampler {
 public:
  CoherentGpSampler(KernelParams params, KernelFamily family, std::uint64_t seed)
      : params_(std::move(params)), family_(family), rng_(seed) {
    params_.validate();
  }

  Eigen::VectorXd sample(const std::vector<AugmentedInput>& targets) {
    const int t = static_cast<int>(targets.size());
    const int n = static_cast<int>(pts_.size());
    Eigen::MatrixXd ktt = build_covariance(targets, params_, family_, true);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(t);
    Eigen::MatrixXd v(n, t);
    if (n > 0) {
      Eigen::MatrixXd ks(n, t);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < t; ++j) ks(i, j) = crn_kernel(pts_[i], targets[j], params_, family_);
      v = chol_.triangularView<Eigen::Lower>().solve(ks);
      const Eigen::VectorXd w = chol_.triangularView<Eigen::Lower>().solve(vals_);
      mean = v.transpose() * w;
      ktt -= v.transpose() * v;
    }
    Eigen::LLT<Eigen::MatrixXd> llt;
    for (double jitter = 1e-12;; jitter *= 10.0) {
      Eigen::MatrixXd c = ktt;
      c.diagonal().array() += jitter;
      llt.compute(c);
      if (llt.info() == Eigen::Success) break;
      if (jitter >= 1e-4) throw NumericalError("CoherentGpSampler: factorization failed");
    }
    const Eigen::MatrixXd lc = llt.matrixL();
    Eigen::VectorXd z(t);
    std::normal_distribution<double> nd;
    for (int j = 0; j < t; ++j) z(j) = nd(rng_);
    const Eigen::VectorXd draw = mean + lc * z;

    // Extend the factorization with the new block and remember the values.
    Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(n + t, n + t);
    grown.topLeftCorner(n, n) = chol_;
    if (n > 0) grown.block(n, 0, t, n) = v.transpose();
    grown.block(n, n, t, t) = lc;
    chol_ = std::move(grown);
    pts_.insert(pts_.end(), targets.begin(), targets.end());
    vals_.conservativeResize(n + t);
    vals_.tail(t) = draw;
    return draw;
  }

 private:
  KernelParams params_;
  KernelFamily family_;
  Rng rng_;
  std::vector<AugmentedInput> pts_;
  Eigen::VectorXd vals_;
  Eigen::MatrixXd chol_;
};

}  // namespace detail

/// Simulator whose ground truth is one realization of a known seed-aware
/// GP, revealed lazily as the campaign queries it.
inline Problem make_synthetic_crngp(const KernelParams& params, KernelFamily family,
                                    std::uint64_t realization_seed,
                                    std::vector<double> times = {0.1, 0.3, 0.5, 0.7, 0.9}) {
  if (params.lengthscales.size() != 2)
    throw std::invalid_argument("make_synthetic_crngp: expects (x, t) lengthscales");
  Problem prob;
  prob.dim = 1;
  prob.n_objectives = 1;
  prob.times_unit = times;
  prob.times_raw = times;

  auto sampler = std::make_shared<detail::CoherentGpSampler>(params, family, realization_seed);
  auto cache = std::make_shared<std::map<std::string, Eigen::VectorXd>>();
  prob.simulator = [sampler, cache, times](const Eigen::VectorXd& x, int seed) {
    std::string key = std::to_string(seed);
    for (int i = 0; i < x.size(); ++i) key += "," + format_double(x(i));
    if (const auto it = cache->find(key); it != cache->end())
      return std::vector<Eigen::VectorXd>{it->second};
    const Eigen::VectorXd y = sampler->sample(trajectory_inputs(x, seed, times));
    cache->emplace(std::move(key), y);
    return std::vector<Eigen::VectorXd>{y};
  };
  return prob;
}

}  // namespace too::problems
