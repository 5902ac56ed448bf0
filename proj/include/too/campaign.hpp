#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <set>
#include <vector>

#include "too/common.hpp"
#include "too/crngp.hpp"
#include "too/doe.hpp"
#include "too/gp.hpp"
#include "too/objective.hpp"
#include "too/thompson.hpp"

namespace too {

enum class SurrogateKind { crngp, local_crngp, mean_gp_baseline };

struct CampaignOptions {
  int n_initial = 50;        // N0
  int n_max = 200;           // Nmax
  int batch = 1;             // posterior samples (and evaluations) per iteration
  int x_grid = 256;          // fresh candidate x points per iteration
  int refit_interval = 10;   // acquisitions between hyperparameter refits
  int refit_restarts = 2;    // restarts on refits (first is warm)
  int n_initial_seeds = 5;   // distinct seeds cycled over the initial design
  int k_report = 50;         // size of the best-trajectory report
  SurrogateKind surrogate = SurrogateKind::crngp;
  std::vector<double> partition_cuts;  // local surrogate only
  KernelFamily family = KernelFamily::gaussian;
  FitOptions fit;
  bool coupled_local_draws = false;

  void validate(int n_objectives) const {
    if (n_initial < 2 * n_initial_seeds)
      throw std::invalid_argument("CampaignOptions: n_initial must be >= 2 * n_initial_seeds");
    if (n_max < n_initial)
      throw std::invalid_argument("CampaignOptions: n_max must be >= n_initial");
    if (batch < 1 || x_grid < 1 || refit_interval < 1 || k_report < 1 || refit_restarts < 1)
      throw std::invalid_argument("CampaignOptions: counts must be positive");
    if (n_objectives == 2 && batch != 1)
      throw std::invalid_argument("CampaignOptions: bi-objective campaigns run with batch 1");
    if (surrogate == SurrogateKind::local_crngp) {
      Partition p;
      p.cuts = partition_cuts;
      p.validate();
    }
  }
};

struct IterationStat {
  int n_evals = 0;
  double best_g = 0.0;       // best single-objective g (or best g1+g2)
  double hypervolume = 0.0;  // bi-objective only, against the running reference
  int n_seeds = 0;           // distinct evaluated seed labels so far
};

struct CampaignResult {
  std::vector<EvalRecord> evals;
  ParetoArchive archive;
  std::vector<int> best_ids;  // run ids ranked by total g, best first
  std::vector<IterationStat> iterations;
  int best_run_id = -1;
  double best_g = 0.0;
};

/// A simulator evaluation: unit-cube input and seed label in, one output
/// vector per objective (aligned with the campaign's output times) out.
using Simulator = std::function<std::vector<Eigen::VectorXd>(const Eigen::VectorXd&, int)>;

namespace detail {

/// Owns the per-objective surrogate models during a campaign and hides the
/// global/local/baseline distinction behind fit/condition/sampler.
class SurrogateState {
 public:
  SurrogateState(const CampaignOptions& opts, int n_objectives)
      : opts_(opts), n_objectives_(n_objectives) {}

  void fit_all(const std::vector<AugmentedInput>& inputs,
               const std::vector<Eigen::VectorXd>& raw_outputs, bool warm, Rng& rng) {
    global_.clear();
    local_.clear();
    for (int k = 0; k < n_objectives_; ++k) {
      FitOptions fo = opts_.fit;
      if (opts_.surrogate == SurrogateKind::mean_gp_baseline) fo.fix_rho = 1.0;
      if (warm) {
        fo.n_restarts = opts_.refit_restarts;
        fo.warm_start = previous_params_[k];
      }
      const Dataset data = Dataset::standardized(inputs, raw_outputs[k]);
      if (opts_.surrogate == SurrogateKind::local_crngp) {
        Partition part;
        part.cuts = opts_.partition_cuts;
        local_.push_back(fit_local(data, part, opts_.family, fo, rng));
      } else {
        global_.push_back(fit(data, opts_.family, fo, rng));
      }
    }
    previous_params_.clear();
    for (int k = 0; k < n_objectives_; ++k) previous_params_.push_back(params_of(k));
  }

  void condition_all(const std::vector<AugmentedInput>& new_inputs,
                     const std::vector<std::vector<double>>& new_raw) {
    for (int k = 0; k < n_objectives_; ++k) {
      if (opts_.surrogate == SurrogateKind::local_crngp)
        local_[k] = condition_local(local_[k], new_inputs, new_raw[k]);
      else
        global_[k] = condition_many(global_[k], new_inputs, new_raw[k]);
    }
  }

  JointSampler sampler(int k) const {
    if (opts_.surrogate == SurrogateKind::local_crngp) {
      const LocalCrngp* model = &local_[k];
      const bool coupled = opts_.coupled_local_draws;
      return [model, coupled](const std::vector<AugmentedInput>& targets, int n, Rng& rng) {
        return sample_local(*model, targets, n, rng, coupled);
      };
    }
    const GpModel* model = &global_[k];
    return [model](const std::vector<AugmentedInput>& targets, int n, Rng& rng) {
      return sample_posterior(*model, targets, n, rng);
    };
  }

 private:
  KernelParams params_of(int k) const {
    if (opts_.surrogate == SurrogateKind::local_crngp) return local_[k].models.front().params();
    return global_[k].params();
  }

  const CampaignOptions& opts_;
  int n_objectives_;
  std::vector<GpModel> global_;
  std::vector<LocalCrngp> local_;
  std::vector<KernelParams> previous_params_;
};

}  // namespace detail

/// Reference point for hypervolume bookkeeping: 1.1 times the largest
/// observed g per objective.
inline Eigen::Vector2d running_reference(const std::vector<EvalRecord>& evals) {
  Eigen::Vector2d ref(0.0, 0.0);
  for (const auto& r : evals)
    for (int k = 0; k < 2; ++k) ref(k) = std::max(ref(k), r.g(k));
  return 1.1 * ref + Eigen::Vector2d::Constant(1e-12);
}

/// Full trajectory-search campaign: space-filling initialization, surrogate
/// fit, then Thompson-sampling acquisitions with seed-set growth until the
/// evaluation budget is spent. Performs exactly n_max simulator calls.
inline CampaignResult run_campaign(const Simulator& simulate, const ObjectiveSpec& spec,
                                   const std::vector<double>& times_unit, int dim,
                                   const CampaignOptions& opts, Rng& rng) {
  spec.validate();
  const int p = spec.n_objectives();
  opts.validate(p);
  if (static_cast<int>(times_unit.size()) != spec.observed.front().size())
    throw std::invalid_argument("run_campaign: times and observations must align");

  CampaignResult res;
  std::vector<AugmentedInput> train_inputs;
  std::vector<Eigen::VectorXd> train_outputs(p, Eigen::VectorXd());
  std::set<int> observed_seeds;

  const auto evaluate = [&](const Eigen::VectorXd& x, int seed) -> const EvalRecord& {
    EvalRecord rec;
    rec.run_id = static_cast<int>(res.evals.size());
    rec.x = x;
    rec.seed = seed;
    rec.traj = simulate(x, seed);
    if (static_cast<int>(rec.traj.size()) != p)
      throw std::invalid_argument("run_campaign: simulator returned wrong objective count");
    rec.g.resize(p);
    for (int k = 0; k < p; ++k) rec.g(k) = objective_g(rec.traj[k], spec.observed[k]);
    res.archive.insert(rec);
    res.evals.push_back(std::move(rec));
    observed_seeds.insert(seed);

    const auto& stored = res.evals.back();
    const int t = static_cast<int>(times_unit.size());
    for (int j = 0; j < t; ++j) train_inputs.push_back(augment(stored.x, times_unit[j], seed));
    for (int k = 0; k < p; ++k) {
      const int base = static_cast<int>(train_outputs[k].size());
      train_outputs[k].conservativeResize(base + t);
      for (int j = 0; j < t; ++j) train_outputs[k](base + j) = stored.traj[k](j);
    }
    return stored;
  };

  const auto total_g = [&](const EvalRecord& r) { return r.g.sum(); };

  const auto record_iteration = [&]() {
    IterationStat stat;
    stat.n_evals = static_cast<int>(res.evals.size());
    stat.n_seeds = static_cast<int>(observed_seeds.size());
    stat.best_g = total_g(res.evals[static_cast<size_t>(res.best_run_id)]);
    if (p == 2 && !res.archive.empty()) {
      Eigen::Vector2d ref = running_reference(res.evals);
      std::vector<Eigen::Vector2d> front;
      for (const auto& pt : res.archive.front_2d())
        if (pt(0) < ref(0) && pt(1) < ref(1)) front.push_back(pt);
      stat.hypervolume = hypervolume_2d(front, ref);
    }
    res.iterations.push_back(stat);
  };

  // Space-filling initial design with cycled seed labels.
  const Eigen::MatrixXd x0 = doe::latin_hypercube(opts.n_initial, dim, rng);
  const auto seeds0 = doe::assign_seeds(opts.n_initial, opts.n_initial_seeds);
  for (int i = 0; i < opts.n_initial; ++i) {
    const auto& rec = evaluate(x0.row(i), seeds0[i]);
    if (res.best_run_id < 0 ||
        total_g(rec) < total_g(res.evals[static_cast<size_t>(res.best_run_id)]))
      res.best_run_id = rec.run_id;
  }
  record_iteration();

  detail::SurrogateState state(opts, p);
  if (static_cast<int>(res.evals.size()) < opts.n_max)
    state.fit_all(train_inputs, train_outputs, false, rng);

  int since_refit = 0;
  while (static_cast<int>(res.evals.size()) < opts.n_max) {
    const int remaining = opts.n_max - static_cast<int>(res.evals.size());
    const int q = std::min(opts.batch, remaining);

    // Grow the candidate seed set by one unobserved label. The seed-blind
    // baseline has no use for replicate identity, so it evaluates each
    // acquisition under a fresh label instead.
    CandidateSet cands;
    if (opts.surrogate == SurrogateKind::mean_gp_baseline) {
      cands = ts_candidates(opts.x_grid, dim, {}, rng);
      cands.seeds = {*observed_seeds.rbegin() + 1};
      cands.fresh_seed = cands.seeds[0];
    } else {
      cands = ts_candidates(opts.x_grid, dim, observed_seeds, rng);
    }

    std::vector<TsChoice> choices;
    if (p == 1) {
      if (q == 1)
        choices.push_back(ts_select(state.sampler(0), cands, spec.observed[0], times_unit, rng));
      else
        choices = ts_select_batch(state.sampler(0), cands, spec.observed[0], times_unit, q, rng);
    } else {
      const Eigen::Vector2d ref = running_reference(res.evals);
      choices.push_back(ts_select_mo({state.sampler(0), state.sampler(1)}, cands, spec,
                                     res.archive, ref, times_unit, rng));
    }

    const size_t first_new_row = train_inputs.size();
    for (const auto& choice : choices) {
      const auto& rec = evaluate(choice.x, choice.seed);
      if (total_g(rec) < total_g(res.evals[static_cast<size_t>(res.best_run_id)]))
        res.best_run_id = rec.run_id;
    }

    ++since_refit;
    if (static_cast<int>(res.evals.size()) < opts.n_max) {
      if (since_refit >= opts.refit_interval) {
        state.fit_all(train_inputs, train_outputs, true, rng);
        since_refit = 0;
      } else {
        std::vector<AugmentedInput> fresh(train_inputs.begin() +
                                              static_cast<long>(first_new_row),
                                          train_inputs.end());
        std::vector<std::vector<double>> fresh_y(p);
        for (int k = 0; k < p; ++k)
          for (int i = static_cast<int>(first_new_row); i < train_outputs[k].size(); ++i)
            fresh_y[k].push_back(train_outputs[k](i));
        state.condition_all(fresh, fresh_y);
      }
    }
    record_iteration();
  }

  // Rank every evaluation by total g for the best-k report.
  std::vector<int> order(res.evals.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ga = total_g(res.evals[static_cast<size_t>(a)]);
    const double gb = total_g(res.evals[static_cast<size_t>(b)]);
    return ga < gb || (ga == gb && a < b);
  });
  order.resize(std::min<size_t>(order.size(), static_cast<size_t>(opts.k_report)));
  res.best_ids = order;
  res.best_g = total_g(res.evals[static_cast<size_t>(res.best_run_id)]);
  return res;
}

}  // namespace too
