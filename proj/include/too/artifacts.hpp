#pragma once

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "too/campaign.hpp"
#include "too/config.hpp"
#include "too/objective.hpp"

namespace too::artifacts {

namespace detail {

inline std::ofstream open(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary);  // '\n' line endings on every platform
  if (!os) throw std::runtime_error("cannot write artifact '" + p.string() + "'");
  return os;
}

inline void csv_row_prefix(std::ostream& os, const EvalRecord& r) {
  os << r.run_id << ',' << r.seed;
  for (int i = 0; i < r.x.size(); ++i) os << ',' << format_double(r.x(i));
}

}  // namespace detail

/// evals.csv: the complete audit trail, one evaluation per row in execution
/// order. Columns: run_id, seed, x1..xd, y{k}_{j} per objective k and output
/// time index j, then g1 (and g2).
inline void write_evals_csv(const std::filesystem::path& path,
                            const std::vector<EvalRecord>& evals) {
  auto os = detail::open(path);
  const int dim = static_cast<int>(evals.front().x.size());
  const int p = static_cast<int>(evals.front().traj.size());
  const int t = static_cast<int>(evals.front().traj.front().size());
  os << "run_id,seed";
  for (int i = 1; i <= dim; ++i) os << ",x" << i;
  for (int k = 1; k <= p; ++k)
    for (int j = 1; j <= t; ++j) os << ",y" << k << "_" << j;
  for (int k = 1; k <= p; ++k) os << ",g" << k;
  os << '\n';
  for (const auto& r : evals) {
    detail::csv_row_prefix(os, r);
    for (int k = 0; k < p; ++k)
      for (int j = 0; j < t; ++j) os << ',' << format_double(r.traj[k](j));
    for (int k = 0; k < p; ++k) os << ',' << format_double(r.g(k));
    os << '\n';
  }
}

/// best_k.csv: the k best evaluations ranked by total g (rank 1 first),
/// referencing rows of evals.csv by run_id.
inline void write_best_k_csv(const std::filesystem::path& path, const CampaignResult& res) {
  auto os = detail::open(path);
  const int dim = static_cast<int>(res.evals.front().x.size());
  const int p = static_cast<int>(res.evals.front().traj.size());
  os << "rank,run_id,seed";
  for (int i = 1; i <= dim; ++i) os << ",x" << i;
  for (int k = 1; k <= p; ++k) os << ",g" << k;
  os << ",g_total\n";
  int rank = 1;
  for (int id : res.best_ids) {
    const auto& r = res.evals[static_cast<size_t>(id)];
    os << rank++ << ',';
    detail::csv_row_prefix(os, r);
    for (int k = 0; k < p; ++k) os << ',' << format_double(r.g(k));
    os << ',' << format_double(r.g.sum()) << '\n';
  }
}

/// pareto.csv: the final non-dominated set (bi-objective runs only).
inline void write_pareto_csv(const std::filesystem::path& path, const CampaignResult& res) {
  auto os = detail::open(path);
  const int dim = static_cast<int>(res.evals.front().x.size());
  os << "run_id,seed";
  for (int i = 1; i <= dim; ++i) os << ",x" << i;
  os << ",g1,g2\n";
  for (const auto& r : res.archive.records()) {
    detail::csv_row_prefix(os, r);
    os << ',' << format_double(r.g(0)) << ',' << format_double(r.g(1)) << '\n';
  }
}

/// plotdata_trajectories.csv: long format (run_id, t, value, objective,
/// rank) holding the best-k trajectories plus the observed targets as
/// run_id -1 with rank 0.
inline void write_plotdata_csv(const std::filesystem::path& path, const CampaignResult& res,
                               const ObjectiveSpec& spec, const std::vector<double>& times_raw) {
  auto os = detail::open(path);
  os << "run_id,t,value,objective,rank\n";
  for (int k = 0; k < spec.n_objectives(); ++k)
    for (size_t j = 0; j < times_raw.size(); ++j)
      os << "-1," << format_double(times_raw[j]) << ','
         << format_double(spec.observed[k](static_cast<int>(j))) << ',' << (k + 1) << ",0\n";
  int rank = 1;
  for (int id : res.best_ids) {
    const auto& r = res.evals[static_cast<size_t>(id)];
    for (int k = 0; k < spec.n_objectives(); ++k)
      for (size_t j = 0; j < times_raw.size(); ++j)
        os << r.run_id << ',' << format_double(times_raw[j]) << ','
           << format_double(r.traj[k](static_cast<int>(j))) << ',' << (k + 1) << ',' << rank
           << '\n';
    ++rank;
  }
}

/// summary.json: config echo, budgets, truth, best ids, Pareto ids, the
/// per-iteration log and the wall clock. Everything except
/// wall_clock_seconds is a deterministic function of the config.
inline void write_summary_json(
    const std::filesystem::path& path, const CampaignConfig& cfg, const CampaignResult& res,
    const ObjectiveSpec& spec, const std::vector<double>& times_raw,
    const std::optional<std::pair<Eigen::VectorXd, int>>& truth_pair, double wall_clock_seconds) {
  nlohmann::json j;
  j["schema"] = 1;
  j["config"] = cfg.echo;
  j["n_evaluations"] = res.evals.size();
  j["budget"] = {{"initial", cfg.options.n_initial}, {"max", cfg.options.n_max}};
  j["times"] = times_raw;

  nlohmann::json truth;
  truth["n_objectives"] = spec.n_objectives();
  for (int k = 0; k < spec.n_objectives(); ++k) {
    std::vector<double> row(spec.observed[k].data(),
                            spec.observed[k].data() + spec.observed[k].size());
    truth["observed"].push_back(row);
  }
  if (truth_pair) {
    truth["x"] = std::vector<double>(truth_pair->first.data(),
                                     truth_pair->first.data() + truth_pair->first.size());
    truth["seed"] = truth_pair->second;
  }
  j["ground_truth"] = truth;

  const auto& best = res.evals[static_cast<size_t>(res.best_run_id)];
  j["best"] = {{"run_id", best.run_id},
               {"seed", best.seed},
               {"g_total", res.best_g},
               {"x", std::vector<double>(best.x.data(), best.x.data() + best.x.size())}};
  j["best_k_run_ids"] = res.best_ids;

  std::vector<int> pareto_ids;
  for (const auto& r : res.archive.records()) pareto_ids.push_back(r.run_id);
  j["pareto_run_ids"] = pareto_ids;

  for (const auto& it : res.iterations)
    j["iterations"].push_back({{"n_evals", it.n_evals},
                               {"best_g", it.best_g},
                               {"hypervolume", it.hypervolume},
                               {"n_seeds", it.n_seeds}});
  j["wall_clock_seconds"] = wall_clock_seconds;

  auto os = detail::open(path);
  os << j.dump(2) << '\n';
}

/// Writes the full artifact set for one campaign into out_dir.
inline void write_campaign_artifacts(
    const std::filesystem::path& out_dir, const CampaignConfig& cfg, const CampaignResult& res,
    const ObjectiveSpec& spec, const std::vector<double>& times_raw,
    const std::optional<std::pair<Eigen::VectorXd, int>>& truth_pair, double wall_clock_seconds) {
  std::filesystem::create_directories(out_dir);
  write_evals_csv(out_dir / "evals.csv", res.evals);
  write_best_k_csv(out_dir / "best_k.csv", res);
  if (spec.n_objectives() == 2) write_pareto_csv(out_dir / "pareto.csv", res);
  write_plotdata_csv(out_dir / "plotdata_trajectories.csv", res, spec, times_raw);
  write_summary_json(out_dir / "summary.json", cfg, res, spec, times_raw, truth_pair,
                     wall_clock_seconds);
}

}  // namespace too::artifacts
