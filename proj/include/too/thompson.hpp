#pragma once

#include <Eigen/Dense>
#include <functional>
#include <numeric>
#include <set>
#include <vector>

#include "too/common.hpp"
#include "too/kernels.hpp"
#include "too/objective.hpp"

namespace too {

/// Cross product of a fresh random x grid with the candidate seed labels.
/// Candidate c maps to (x row c / |seeds|, seed c mod |seeds|).
struct CandidateSet {
  Eigen::MatrixXd xs;
  std::vector<int> seeds;
  int fresh_seed = 0;

  int n_candidates() const { return static_cast<int>(xs.rows() * seeds.size()); }
  Eigen::VectorXd x_of(int c) const { return xs.row(c / static_cast<int>(seeds.size())); }
  int seed_of(int c) const { return seeds[c % seeds.size()]; }
};

/// Fresh uniform x grid (redrawn every iteration) crossed with the observed
/// seed labels plus one extra unobserved label standing in for the mean
/// behavior. With no observations yet the set is just that one fresh label.
inline CandidateSet ts_candidates(int x_grid_size, int dim, const std::set<int>& observed_seeds,
                                  Rng& rng) {
  if (x_grid_size < 1) throw std::invalid_argument("ts_candidates: grid size must be >= 1");
  CandidateSet out;
  out.xs.resize(x_grid_size, dim);
  for (int i = 0; i < x_grid_size; ++i)
    for (int j = 0; j < dim; ++j) out.xs(i, j) = canonical(rng);
  out.seeds.assign(observed_seeds.begin(), observed_seeds.end());
  out.fresh_seed = out.seeds.empty() ? 0 : *observed_seeds.rbegin() + 1;
  out.seeds.push_back(out.fresh_seed);
  return out;
}

/// Targets for a joint posterior draw, candidate-major and time-minor:
/// candidate c occupies rows [c*T, (c+1)*T).
inline std::vector<AugmentedInput> candidate_targets(const CandidateSet& cands,
                                                     const std::vector<double>& times) {
  std::vector<AugmentedInput> targets;
  targets.reserve(static_cast<size_t>(cands.n_candidates()) * times.size());
  for (int c = 0; c < cands.n_candidates(); ++c) {
    const Eigen::VectorXd x = cands.x_of(c);
    const int seed = cands.seed_of(c);
    for (double t : times) targets.push_back(augment(x, t, seed));
  }
  return targets;
}

/// Joint posterior sampler over arbitrary targets: the surrogate-agnostic
/// facade the selection rules work through (global model, local model or
/// seed-blind baseline behind it).
using JointSampler =
    std::function<Eigen::MatrixXd(const std::vector<AugmentedInput>&, int, Rng&)>;

struct TsChoice {
  int candidate = 0;
  Eigen::VectorXd x;
  int seed = 0;
  double score = 0.0;  // g of the sampled realization at the chosen candidate
};

namespace detail {

inline Eigen::VectorXd per_candidate_g(const Eigen::VectorXd& draw, int n_candidates,
                                       const Eigen::VectorXd& observed) {
  const int t = static_cast<int>(observed.size());
  Eigen::VectorXd g(n_candidates);
  for (int c = 0; c < n_candidates; ++c)
    g(c) = (draw.segment(c * t, t) - observed).squaredNorm();
  return g;
}

}  // namespace detail

/// Thompson step: draw one joint realization over every candidate
/// trajectory, score each candidate by g against the observation, and take
/// the minimizer (ties broken by candidate index).
inline TsChoice ts_select(const JointSampler& sampler, const CandidateSet& cands,
                          const Eigen::VectorXd& observed, const std::vector<double>& times,
                          Rng& rng) {
  if (cands.n_candidates() < 1) throw std::invalid_argument("ts_select: no candidates");
  const auto targets = candidate_targets(cands, times);
  const Eigen::VectorXd draw = sampler(targets, 1, rng).col(0);
  const Eigen::VectorXd g = detail::per_candidate_g(draw, cands.n_candidates(), observed);
  int best = 0;
  for (int c = 1; c < cands.n_candidates(); ++c)
    if (g(c) < g(best)) best = c;
  return {best, cands.x_of(best), cands.seed_of(best), g(best)};
}

/// Batch Thompson: q independent realizations, each contributing its own
/// best candidate. A realization whose minimizer is already taken falls
/// back to its next-best candidate.
inline std::vector<TsChoice> ts_select_batch(const JointSampler& sampler,
                                             const CandidateSet& cands,
                                             const Eigen::VectorXd& observed,
                                             const std::vector<double>& times, int q, Rng& rng) {
  if (q < 1) throw std::invalid_argument("ts_select_batch: q must be >= 1");
  if (q > cands.n_candidates())
    throw std::invalid_argument("ts_select_batch: q exceeds the candidate count");
  const auto targets = candidate_targets(cands, times);
  const Eigen::MatrixXd draws = sampler(targets, q, rng);

  std::vector<TsChoice> chosen;
  std::set<int> taken;
  for (int k = 0; k < q; ++k) {
    const Eigen::VectorXd g = detail::per_candidate_g(draws.col(k), cands.n_candidates(), observed);
    std::vector<int> order(cands.n_candidates());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return g(a) < g(b) || (g(a) == g(b) && a < b);
    });
    for (int c : order) {
      if (taken.count(c)) continue;
      taken.insert(c);
      chosen.push_back({c, cands.x_of(c), cands.seed_of(c), g(c)});
      break;
    }
  }
  return chosen;
}

/// Bi-objective Thompson step: one realization per objective, candidates
/// scored by the hypervolume their sampled (g1, g2) would add to the
/// archive. Candidates that fail to dominate the reference contribute
/// nothing; if nothing contributes, falls back to minimizing g1 + g2.
inline TsChoice ts_select_mo(const std::vector<JointSampler>& samplers, const CandidateSet& cands,
                             const ObjectiveSpec& spec, const ParetoArchive& archive,
                             const Eigen::Vector2d& reference, const std::vector<double>& times,
                             Rng& rng) {
  if (samplers.size() != 2 || spec.n_objectives() != 2)
    throw std::invalid_argument("ts_select_mo: exactly two objectives required");
  if (cands.n_candidates() < 1) throw std::invalid_argument("ts_select_mo: no candidates");
  const auto targets = candidate_targets(cands, times);

  std::vector<Eigen::VectorXd> g_per_obj;
  for (int k = 0; k < 2; ++k) {
    const Eigen::VectorXd draw = samplers[k](targets, 1, rng).col(0);
    g_per_obj.push_back(detail::per_candidate_g(draw, cands.n_candidates(), spec.observed[k]));
  }

  std::vector<Eigen::Vector2d> front;
  for (const auto& rec : archive.records()) {
    const Eigen::Vector2d p(rec.g(0), rec.g(1));
    if (p(0) < reference(0) && p(1) < reference(1)) front.push_back(p);
  }
  const double base = hypervolume_2d(front, reference);

  int best = -1;
  double best_contrib = 0.0;
  for (int c = 0; c < cands.n_candidates(); ++c) {
    const Eigen::Vector2d p(g_per_obj[0](c), g_per_obj[1](c));
    if (!(p(0) < reference(0) && p(1) < reference(1))) continue;
    auto extended = front;
    extended.push_back(p);
    const double contrib = hypervolume_2d(extended, reference) - base;
    if (contrib > best_contrib) {
      best_contrib = contrib;
      best = c;
    }
  }
  if (best < 0) {
    best = 0;
    for (int c = 1; c < cands.n_candidates(); ++c)
      if (g_per_obj[0](c) + g_per_obj[1](c) < g_per_obj[0](best) + g_per_obj[1](best)) best = c;
  }
  return {best, cands.x_of(best), cands.seed_of(best),
          g_per_obj[0](best) + g_per_obj[1](best)};
}

}  // namespace too
