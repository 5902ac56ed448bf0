#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>
#include <vector>

namespace too {

/// Calibration targets: one observed vector per objective, aligned with the
/// simulator output times.
struct ObjectiveSpec {
  std::vector<Eigen::VectorXd> observed;

  int n_objectives() const { return static_cast<int>(observed.size()); }

  void validate() const {
    if (observed.empty() || observed.size() > 2)
      throw std::invalid_argument("ObjectiveSpec: need one or two objectives");
    for (const auto& y : observed)
      if (y.size() < 1 || y.size() != observed.front().size())
        throw std::invalid_argument("ObjectiveSpec: observed vectors must share a nonzero length");
  }
};

/// Squared trajectory mismatch: sum over output times of the squared
/// deviation from the observation.
inline double objective_g(const Eigen::VectorXd& values, const Eigen::VectorXd& observed) {
  if (values.size() != observed.size())
    throw std::invalid_argument("objective_g: value and observation lengths differ");
  return (values - observed).squaredNorm();
}

/// One completed simulator evaluation with its objective values. The g
/// entries are always recomputable from traj and the observations.
struct EvalRecord {
  int run_id = 0;
  Eigen::VectorXd x;
  int seed = 0;
  std::vector<Eigen::VectorXd> traj;
  Eigen::VectorXd g;
};

/// a dominates b: no worse everywhere, strictly better somewhere
/// (minimization).
inline bool dominates(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  bool strict = false;
  for (int i = 0; i < a.size(); ++i) {
    if (a(i) > b(i)) return false;
    if (a(i) < b(i)) strict = true;
  }
  return strict;
}

/// Mutually non-dominated evaluations. Inserting a dominated record is a
/// no-op; inserting a dominating one evicts everything it dominates.
class ParetoArchive {
 public:
  bool insert(const EvalRecord& rec) {
    for (const auto& r : records_)
      if (dominates(r.g, rec.g)) return false;
    records_.erase(std::remove_if(records_.begin(), records_.end(),
                                  [&](const EvalRecord& r) { return dominates(rec.g, r.g); }),
                   records_.end());
    records_.push_back(rec);
    return true;
  }

  const std::vector<EvalRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }
  size_t size() const { return records_.size(); }

  std::vector<Eigen::Vector2d> front_2d() const {
    std::vector<Eigen::Vector2d> pts;
    pts.reserve(records_.size());
    for (const auto& r : records_) pts.emplace_back(r.g(0), r.g(1));
    return pts;
  }

 private:
  std::vector<EvalRecord> records_;
};

/// Area dominated by the front between its points and the reference point
/// (minimization). Every input point must strictly dominate the reference;
/// dominated input points are filtered before the staircase sum.
inline double hypervolume_2d(std::vector<Eigen::Vector2d> pts, const Eigen::Vector2d& ref) {
  if (pts.empty()) return 0.0;
  for (const auto& p : pts)
    if (!(p(0) < ref(0) && p(1) < ref(1)))
      throw std::invalid_argument("hypervolume_2d: point does not dominate the reference");
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a(0) < b(0) || (a(0) == b(0) && a(1) < b(1));
  });
  double hv = 0.0;
  double prev_y = ref(1);
  for (const auto& p : pts) {
    if (p(1) >= prev_y) continue;  // dominated by an earlier point
    hv += (ref(0) - p(0)) * (prev_y - p(1));
    prev_y = p(1);
  }
  return hv;
}

}  // namespace too
