#pragma once

#include <fstream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "too/campaign.hpp"
#include "too/problems.hpp"

namespace too {

/// Invalid or inconsistent configuration; the message names the offending
/// field. Mapped to exit code 2 by the command-line tool.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class ProblemKind { seir_single, seir_biobjective, toy_1d, synthetic_crngp };
enum class TruthMode { explicit_observed, simulate_pair, random_pair };

struct GroundTruthSpec {
  TruthMode mode = TruthMode::random_pair;
  std::vector<std::vector<double>> observed;  // explicit mode
  std::vector<double> x;                      // simulate mode
  int seed = 0;                               // simulate mode
};

struct CompareSpec {
  int repetitions = 20;
  SurrogateKind arm_a = SurrogateKind::crngp;
  SurrogateKind arm_b = SurrogateKind::mean_gp_baseline;
  int workers = 2;
};

/// Parameters of the synthetic surrogate-truth problem.
struct SyntheticSpec {
  std::vector<double> lengthscales = {0.3, 0.3};
  double variance = 1.0;
  double rho = 0.6;
  double nugget = 1e-6;
};

struct CampaignConfig {
  int schema = 1;
  ProblemKind problem = ProblemKind::seir_single;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  CampaignOptions options;
  GroundTruthSpec truth;
  CompareSpec compare;
  SyntheticSpec synthetic;
  nlohmann::json echo;  // parsed document, replayed into summary.json

  static CampaignConfig parse(const nlohmann::json& j);
  static CampaignConfig load(const std::string& path);

  problems::Problem make_problem() const;

  /// Resolves the ground truth into observed vectors. Pair modes run the
  /// simulator once outside any evaluation budget; random_pair draws the
  /// pair from rng over the unit cube and the initial seed labels. Returns
  /// the (x, seed) pair used, when one exists.
  std::optional<std::pair<Eigen::VectorXd, int>> resolve_truth(const problems::Problem& prob,
                                                               ObjectiveSpec& spec,
                                                               Rng& rng) const;
};

namespace detail {

template <typename T>
T field_or(const nlohmann::json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config field '" + key + "' has the wrong type");
  }
}

inline SurrogateKind parse_surrogate(const std::string& s, const std::string& field) {
  if (s == "crngp") return SurrogateKind::crngp;
  if (s == "local_crngp") return SurrogateKind::local_crngp;
  if (s == "mean_gp_baseline") return SurrogateKind::mean_gp_baseline;
  throw ConfigError("config field '" + field + "': unknown surrogate '" + s + "'");
}

}  // namespace detail

inline CampaignConfig CampaignConfig::parse(const nlohmann::json& j) {
  CampaignConfig cfg;
  cfg.echo = j;
  cfg.schema = detail::field_or(j, "schema", 1);
  if (cfg.schema != 1) throw ConfigError("config field 'schema': only version 1 is supported");

  const std::string prob = detail::field_or<std::string>(j, "problem", "seir_single");
  if (prob == "seir_single")
    cfg.problem = ProblemKind::seir_single;
  else if (prob == "seir_biobjective")
    cfg.problem = ProblemKind::seir_biobjective;
  else if (prob == "toy_1d")
    cfg.problem = ProblemKind::toy_1d;
  else if (prob == "synthetic_crngp")
    cfg.problem = ProblemKind::synthetic_crngp;
  else
    throw ConfigError("config field 'problem': unknown problem '" + prob + "'");

  cfg.seed = detail::field_or<std::uint64_t>(j, "seed", 1);
  cfg.out_dir = detail::field_or<std::string>(j, "out_dir", "out");

  if (j.contains("budget")) {
    const auto& b = j.at("budget");
    cfg.options.n_initial = detail::field_or(b, "initial", cfg.options.n_initial);
    cfg.options.n_max = detail::field_or(b, "max", cfg.options.n_max);
  }
  if (cfg.options.n_max < cfg.options.n_initial)
    throw ConfigError("config fields 'budget.max' (" + std::to_string(cfg.options.n_max) +
                      ") and 'budget.initial' (" + std::to_string(cfg.options.n_initial) +
                      "): max must be >= initial");

  if (j.contains("init"))
    cfg.options.n_initial_seeds =
        detail::field_or(j.at("init"), "n_seeds", cfg.options.n_initial_seeds);
  if (cfg.options.n_initial < 2 * cfg.options.n_initial_seeds)
    throw ConfigError("config fields 'budget.initial' and 'init.n_seeds': need initial >= 2 * n_seeds");

  if (j.contains("surrogate")) {
    const auto& s = j.at("surrogate");
    cfg.options.surrogate =
        detail::parse_surrogate(detail::field_or<std::string>(s, "kind", "crngp"), "surrogate.kind");
    const std::string kernel = detail::field_or<std::string>(s, "kernel", "gaussian");
    if (kernel == "gaussian")
      cfg.options.family = KernelFamily::gaussian;
    else if (kernel == "matern52")
      cfg.options.family = KernelFamily::matern52;
    else
      throw ConfigError("config field 'surrogate.kernel': unknown kernel '" + kernel + "'");
    cfg.options.partition_cuts =
        detail::field_or(s, "partition_cuts", cfg.options.partition_cuts);
    cfg.options.refit_interval = detail::field_or(s, "refit_interval", cfg.options.refit_interval);
    cfg.options.refit_restarts = detail::field_or(s, "refit_restarts", cfg.options.refit_restarts);
    cfg.options.fit.n_restarts = detail::field_or(s, "fit_restarts", cfg.options.fit.n_restarts);
    cfg.options.coupled_local_draws =
        detail::field_or(s, "coupled_local_draws", cfg.options.coupled_local_draws);
    if (cfg.options.surrogate == SurrogateKind::local_crngp) {
      Partition p;
      p.cuts = cfg.options.partition_cuts;
      try {
        p.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config field 'surrogate.partition_cuts': ") + e.what());
      }
    }
  }

  if (j.contains("acquisition")) {
    const auto& a = j.at("acquisition");
    cfg.options.x_grid = detail::field_or(a, "x_grid", cfg.options.x_grid);
    cfg.options.batch = detail::field_or(a, "batch", cfg.options.batch);
  }
  if (j.contains("report"))
    cfg.options.k_report = detail::field_or(j.at("report"), "k_best", cfg.options.k_report);

  if (j.contains("ground_truth")) {
    const auto& g = j.at("ground_truth");
    const std::string mode = detail::field_or<std::string>(g, "mode", "random_pair");
    if (mode == "random_pair") {
      cfg.truth.mode = TruthMode::random_pair;
    } else if (mode == "simulate") {
      cfg.truth.mode = TruthMode::simulate_pair;
      cfg.truth.x = detail::field_or(g, "x", std::vector<double>{});
      cfg.truth.seed = detail::field_or(g, "seed", 0);
      if (cfg.truth.x.empty())
        throw ConfigError("config field 'ground_truth.x': required in simulate mode");
    } else if (mode == "explicit") {
      cfg.truth.mode = TruthMode::explicit_observed;
      cfg.truth.observed =
          detail::field_or(g, "observed", std::vector<std::vector<double>>{});
      if (cfg.truth.observed.empty())
        throw ConfigError("config field 'ground_truth.observed': required in explicit mode");
    } else {
      throw ConfigError("config field 'ground_truth.mode': unknown mode '" + mode + "'");
    }
  }

  if (j.contains("compare")) {
    const auto& c = j.at("compare");
    cfg.compare.repetitions = detail::field_or(c, "repetitions", cfg.compare.repetitions);
    cfg.compare.arm_a = detail::parse_surrogate(
        detail::field_or<std::string>(c, "arm_a", "crngp"), "compare.arm_a");
    cfg.compare.arm_b = detail::parse_surrogate(
        detail::field_or<std::string>(c, "arm_b", "mean_gp_baseline"), "compare.arm_b");
    cfg.compare.workers = detail::field_or(c, "workers", cfg.compare.workers);
    if (cfg.compare.repetitions < 1 || cfg.compare.workers < 1)
      throw ConfigError("config fields 'compare.repetitions'/'compare.workers' must be positive");
  }

  if (j.contains("synthetic")) {
    const auto& s = j.at("synthetic");
    cfg.synthetic.lengthscales = detail::field_or(s, "lengthscales", cfg.synthetic.lengthscales);
    cfg.synthetic.variance = detail::field_or(s, "variance", cfg.synthetic.variance);
    cfg.synthetic.rho = detail::field_or(s, "rho", cfg.synthetic.rho);
    cfg.synthetic.nugget = detail::field_or(s, "nugget", cfg.synthetic.nugget);
  }
  return cfg;
}

inline CampaignConfig CampaignConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  return parse(j);
}

inline problems::Problem CampaignConfig::make_problem() const {
  switch (problem) {
    case ProblemKind::seir_single:
      return problems::make_seir(false);
    case ProblemKind::seir_biobjective:
      return problems::make_seir(true);
    case ProblemKind::toy_1d:
      return problems::make_toy1d();
    case ProblemKind::synthetic_crngp: {
      KernelParams p;
      p.lengthscales = Eigen::Map<const Eigen::VectorXd>(
          synthetic.lengthscales.data(), static_cast<long>(synthetic.lengthscales.size()));
      p.variance = synthetic.variance;
      p.rho = synthetic.rho;
      p.nugget = synthetic.nugget;
      return problems::make_synthetic_crngp(p, options.family, splitmix64(seed ^ 0xabcdef));
    }
  }
  throw ConfigError("config field 'problem': unhandled problem kind");
}

inline std::optional<std::pair<Eigen::VectorXd, int>> CampaignConfig::resolve_truth(
    const problems::Problem& prob, ObjectiveSpec& spec, Rng& rng) const {
  switch (truth.mode) {
    case TruthMode::explicit_observed: {
      if (static_cast<int>(truth.observed.size()) != prob.n_objectives)
        throw ConfigError("config field 'ground_truth.observed': need one vector per objective");
      spec.observed.clear();
      for (const auto& row : truth.observed) {
        if (row.size() != prob.times_unit.size())
          throw ConfigError(
              "config field 'ground_truth.observed': vector length must match the output times");
        spec.observed.push_back(
            Eigen::Map<const Eigen::VectorXd>(row.data(), static_cast<long>(row.size())));
      }
      return std::nullopt;
    }
    case TruthMode::simulate_pair: {
      if (static_cast<int>(truth.x.size()) != prob.dim)
        throw ConfigError("config field 'ground_truth.x': dimension must match the problem");
      Eigen::VectorXd x =
          Eigen::Map<const Eigen::VectorXd>(truth.x.data(), static_cast<long>(truth.x.size()));
      spec = prob.truth_objective(x, truth.seed);
      return std::make_pair(x, truth.seed);
    }
    case TruthMode::random_pair: {
      Eigen::VectorXd x(prob.dim);
      for (int i = 0; i < prob.dim; ++i) x(i) = canonical(rng);
      const int s = static_cast<int>(rng() % static_cast<std::uint64_t>(options.n_initial_seeds));
      spec = prob.truth_objective(x, s);
      return std::make_pair(x, s);
    }
  }
  throw ConfigError("config field 'ground_truth.mode': unhandled mode");
}

}  // namespace too
