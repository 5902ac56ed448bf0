#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <thread>
#include <vector>

#include "too/artifacts.hpp"
#include "too/campaign.hpp"
#include "too/config.hpp"

namespace too {

struct CompareRep {
  int rep = 0;
  int truth_seed = 0;
  std::vector<double> truth_x;
  double best_g_a = 0.0;
  double best_g_b = 0.0;
};

struct CompareResult {
  std::vector<CompareRep> reps;
  int wins_a = 0;
  double win_rate_a = 0.0;
};

/// Paired comparison of two surrogates: every repetition draws (or reuses)
/// a ground truth shared by both arms, runs one campaign per arm on the
/// same budgets, and records each arm's best g. Repetitions run on worker
/// threads with preassigned rng substreams, so results do not depend on
/// scheduling.
inline CompareResult run_compare(const CampaignConfig& cfg) {
  const int reps = cfg.compare.repetitions;
  CompareResult out;
  out.reps.resize(static_cast<size_t>(reps));

  const auto run_rep = [&cfg](int rep) {
    CampaignConfig local = cfg;  // per-thread problem instances and options
    const auto prob = local.make_problem();
    Rng truth_rng = substream(local.seed, 900000u + static_cast<unsigned>(rep));
    ObjectiveSpec spec;
    const auto pair = local.resolve_truth(prob, spec, truth_rng);

    CompareRep r;
    r.rep = rep;
    if (pair) {
      r.truth_seed = pair->second;
      r.truth_x.assign(pair->first.data(), pair->first.data() + pair->first.size());
    }
    for (int arm = 0; arm < 2; ++arm) {
      CampaignOptions opts = local.options;
      opts.surrogate = arm == 0 ? local.compare.arm_a : local.compare.arm_b;
      Rng rng = substream(local.seed, static_cast<unsigned>(2 * rep + arm));
      const auto res =
          run_campaign(prob.simulator, spec, prob.times_unit, prob.dim, opts, rng);
      (arm == 0 ? r.best_g_a : r.best_g_b) = res.best_g;
    }
    return r;
  };

  const int workers = std::max(1, std::min(cfg.compare.workers, reps));
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&]() {
      for (int rep = next.fetch_add(1); rep < reps; rep = next.fetch_add(1))
        out.reps[static_cast<size_t>(rep)] = run_rep(rep);
    });
  for (auto& t : pool) t.join();

  for (const auto& r : out.reps)
    if (r.best_g_a < r.best_g_b) ++out.wins_a;
  out.win_rate_a = static_cast<double>(out.wins_a) / static_cast<double>(reps);
  return out;
}

/// compare.csv: one row per repetition plus the win rate in summary form.
inline void write_compare_artifacts(const std::filesystem::path& out_dir,
                                    const CampaignConfig& cfg, const CompareResult& res,
                                    double wall_clock_seconds) {
  std::filesystem::create_directories(out_dir);
  {
    auto os = artifacts::detail::open(out_dir / "compare.csv");
    os << "rep,truth_seed,best_g_arm_a,best_g_arm_b,arm_a_wins\n";
    for (const auto& r : res.reps)
      os << r.rep << ',' << r.truth_seed << ',' << format_double(r.best_g_a) << ','
         << format_double(r.best_g_b) << ',' << (r.best_g_a < r.best_g_b ? 1 : 0) << '\n';
  }
  nlohmann::json j;
  j["schema"] = 1;
  j["config"] = cfg.echo;
  j["repetitions"] = cfg.compare.repetitions;
  j["wins_arm_a"] = res.wins_a;
  j["win_rate_arm_a"] = res.win_rate_a;
  j["wall_clock_seconds"] = wall_clock_seconds;
  auto os = artifacts::detail::open(out_dir / "summary.json");
  os << j.dump(2) << '\n';
}

}  // namespace too
