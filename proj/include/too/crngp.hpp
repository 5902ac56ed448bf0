#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "too/gp.hpp"
#include "too/kernels.hpp"

namespace too {

/// Thrown when a partition leaves some cell with too few training rows.
class PartitionInfeasible : public std::runtime_error {
 public:
  explicit PartitionInfeasible(const std::string& msg) : std::runtime_error(msg) {}
};

inline std::vector<AugmentedInput> trajectory_inputs(const Eigen::VectorXd& x, int seed,
                                                     const std::vector<double>& times) {
  std::vector<AugmentedInput> out;
  out.reserve(times.size());
  for (double t : times) {
    if (t < 0.0 || t > 1.0)
      throw std::invalid_argument("trajectory_inputs: times must lie in [0,1]");
    out.push_back(augment(x, t, seed));
  }
  return out;
}

/// Posterior over one replicate's trajectory: the kriging prediction at
/// (x, t_j, seed) for every requested time. With an observed seed this
/// interpolates that replicate; with an unobserved one it gives the mean
/// behavior.
inline Prediction predict_trajectory(const GpModel& model, const Eigen::VectorXd& x, int seed,
                                     const std::vector<double>& times) {
  return predict(model, trajectory_inputs(x, seed, times));
}

/// Seed-marginal prediction, obtained by predicting at a seed label never
/// used in training.
inline Prediction predict_mean_behavior(const GpModel& model, const Eigen::VectorXd& x,
                                        const std::vector<double>& times) {
  return predict_trajectory(model, x, model.max_seed() + 1, times);
}

/// Axis-aligned partition of [0,1] into left-closed, right-open cells (the
/// last cell is closed). axis < 0 selects the last coordinate, which is the
/// time index under the augment() convention.
struct Partition {
  int axis = -1;
  std::vector<double> cuts;

  int n_cells() const { return static_cast<int>(cuts.size()) + 1; }

  void validate() const {
    for (size_t i = 0; i < cuts.size(); ++i) {
      if (cuts[i] <= 0.0 || cuts[i] >= 1.0)
        throw std::invalid_argument("Partition: cut points must lie strictly inside (0,1)");
      if (i > 0 && cuts[i] <= cuts[i - 1])
        throw std::invalid_argument("Partition: cut points must be strictly increasing");
    }
  }

  int resolve_axis(int dim) const {
    const int a = axis < 0 ? dim - 1 : axis;
    if (a < 0 || a >= dim) throw std::invalid_argument("Partition: axis out of range");
    return a;
  }

  int cell_of(double c) const {
    int l = 0;
    while (l < static_cast<int>(cuts.size()) && c >= cuts[l]) ++l;
    return l;
  }

  std::pair<double, double> cell_bounds(int l) const {
    const double lo = l == 0 ? 0.0 : cuts[l - 1];
    const double hi = l == n_cells() - 1 ? 1.0 : cuts[l];
    return {lo, hi};
  }
};

/// Partitioned surrogate: one independently fitted model per cell, blended
/// at prediction time by inverse-distance weights on the partition axis.
struct LocalCrngp {
  Partition partition;
  int axis = 0;
  std::vector<GpModel> models;
  double epsilon = 1e-6;

  int max_seed() const {
    int m = 0;
    for (const auto& gp : models) m = std::max(m, gp.max_seed());
    return m;
  }
};

/// Blending weights over cells for a target at the given partition-axis
/// coordinate: w_l = 1 / (distance to cell interval + epsilon), normalized.
/// Distance is zero inside a cell, so weights are continuous and a boundary
/// point weights its two adjacent cells equally.
inline Eigen::VectorXd local_weights(const Partition& partition, double coord, double epsilon) {
  const int n = partition.n_cells();
  Eigen::VectorXd w(n);
  for (int l = 0; l < n; ++l) {
    const auto [lo, hi] = partition.cell_bounds(l);
    const double dist = std::max({lo - coord, coord - hi, 0.0});
    w(l) = 1.0 / (dist + epsilon);
  }
  return w / w.sum();
}

/// Splits the data by cell membership on the partition axis and fits an
/// independent model per cell. Cell datasets keep the parent's output
/// transform, so a single-cell partition reproduces a global fit exactly.
inline LocalCrngp fit_local(const Dataset& data, const Partition& partition, KernelFamily family,
                            const FitOptions& opts, Rng& rng, int min_per_cell = 2,
                            double epsilon = 1e-6) {
  partition.validate();
  const int axis = partition.resolve_axis(data.dim());
  const int n_cells = partition.n_cells();
  const int required = std::max(2, min_per_cell);

  std::vector<std::vector<int>> rows(n_cells);
  for (int i = 0; i < data.size(); ++i)
    rows[partition.cell_of(data.inputs[i].coords(axis))].push_back(i);

  LocalCrngp out;
  out.partition = partition;
  out.axis = axis;
  out.epsilon = epsilon;
  out.models.reserve(n_cells);
  for (int l = 0; l < n_cells; ++l) {
    if (static_cast<int>(rows[l].size()) < required)
      throw PartitionInfeasible("fit_local: cell " + std::to_string(l) + " has " +
                                std::to_string(rows[l].size()) + " rows, needs " +
                                std::to_string(required));
    Dataset cell;
    cell.shift = data.shift;
    cell.scale = data.scale;
    cell.outputs.resize(static_cast<int>(rows[l].size()));
    cell.inputs.reserve(rows[l].size());
    for (size_t k = 0; k < rows[l].size(); ++k) {
      cell.inputs.push_back(data.inputs[rows[l][k]]);
      cell.outputs(static_cast<int>(k)) = data.outputs(rows[l][k]);
    }
    out.models.push_back(fit(cell, family, opts, rng));
  }
  return out;
}

/// One realization per cell model at every target, combined pointwise with
/// the inverse-distance weights of each target's partition-axis coordinate.
/// Per-cell realizations use independent normal draws unless coupled is
/// set, in which case all cells share the same underlying variates.
inline Eigen::MatrixXd sample_local(const LocalCrngp& local,
                                    const std::vector<AugmentedInput>& targets, int n_draws,
                                    Rng& rng, bool coupled = false) {
  if (targets.empty()) throw std::invalid_argument("sample_local: empty target list");
  const int m = static_cast<int>(targets.size());
  const int n_cells = static_cast<int>(local.models.size());

  Eigen::MatrixXd weights(m, n_cells);
  for (int i = 0; i < m; ++i)
    weights.row(i) =
        local_weights(local.partition, targets[i].coords(local.axis), local.epsilon).transpose();

  Eigen::MatrixXd shared;
  if (coupled) shared = detail::standard_normal(m, n_draws, rng);

  Eigen::MatrixXd combined = Eigen::MatrixXd::Zero(m, n_draws);
  for (int l = 0; l < n_cells; ++l) {
    const auto& model = local.models[l];
    const Eigen::MatrixXd z = coupled ? shared : detail::standard_normal(m, n_draws, rng);
    Eigen::MatrixXd draws = detail::sample_with_noise(model, targets, z);
    draws = (model.data().shift + model.data().scale * draws.array()).matrix();
    combined += weights.col(l).asDiagonal() * draws;
  }
  return combined;
}

inline Eigen::MatrixXd sample_local_trajectory(const LocalCrngp& local, const Eigen::VectorXd& x,
                                               int seed, const std::vector<double>& times,
                                               int n_draws, Rng& rng, bool coupled = false) {
  return sample_local(local, trajectory_inputs(x, seed, times), n_draws, rng, coupled);
}

/// Routes each new observation to its cell and conditions that cell's model.
inline LocalCrngp condition_local(const LocalCrngp& local,
                                  const std::vector<AugmentedInput>& new_inputs,
                                  const std::vector<double>& new_raw_outputs) {
  if (new_inputs.size() != new_raw_outputs.size())
    throw std::invalid_argument("condition_local: inputs and outputs must have equal length");
  std::vector<std::vector<int>> per_cell(local.models.size());
  for (size_t i = 0; i < new_inputs.size(); ++i)
    per_cell[local.partition.cell_of(new_inputs[i].coords(local.axis))].push_back(
        static_cast<int>(i));

  LocalCrngp out = local;
  for (size_t l = 0; l < per_cell.size(); ++l) {
    if (per_cell[l].empty()) continue;
    std::vector<AugmentedInput> ins;
    std::vector<double> ys;
    for (int i : per_cell[l]) {
      ins.push_back(new_inputs[i]);
      ys.push_back(new_raw_outputs[i]);
    }
    out.models[l] = condition_many(out.models[l], ins, ys);
  }
  return out;
}

}  // namespace too
