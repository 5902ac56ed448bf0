#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "hv_oracle.hpp"
#include "test_support.hpp"
#include "too/objective.hpp"
#include "too/thompson.hpp"

using namespace too;

namespace {

EvalRecord rec_of(int id, double g1, double g2 = std::numeric_limits<double>::quiet_NaN()) {
  EvalRecord r;
  r.run_id = id;
  const bool two = !std::isnan(g2);
  r.g.resize(two ? 2 : 1);
  r.g(0) = g1;
  if (two) r.g(1) = g2;
  return r;
}

/// Sampler stub returning fixed realizations column by column.
JointSampler fixed_sampler(Eigen::MatrixXd draws) {
  return [draws](const std::vector<AugmentedInput>& targets, int n, Rng&) -> Eigen::MatrixXd {
    REQUIRE(static_cast<int>(targets.size()) == draws.rows());
    REQUIRE(n <= draws.cols());
    return draws.leftCols(n);
  };
}

const std::vector<double> kTimes = {0.25, 0.5, 0.75};

CandidateSet grid_candidates(int n_x, const std::vector<int>& seeds) {
  CandidateSet c;
  c.xs.resize(n_x, 1);
  for (int i = 0; i < n_x; ++i) c.xs(i, 0) = (i + 0.5) / n_x;
  c.seeds = seeds;
  c.fresh_seed = seeds.back();
  return c;
}

}  // namespace

TEST_CASE("objective g") {
  Eigen::VectorXd a(2), b(2);
  a << 1, 2;
  b << 3, 5;
  CHECK(objective_g(a, a) == 0.0);
  CHECK(objective_g(a, b) == 13.0);
  CHECK(objective_g(3.0 * a, 3.0 * b) == 9.0 * 13.0);
  Eigen::VectorXd c(3);
  CHECK_THROWS_AS(objective_g(a, c), std::invalid_argument);
}

TEST_CASE("candidate set construction") {
  Rng rng(1);

  SECTION("cross product size and fresh label") {
    const auto c = ts_candidates(100, 3, {0, 1, 2, 3, 4, 5}, rng);
    CHECK(c.n_candidates() == 700);
    CHECK(c.fresh_seed == 6);
    CHECK(c.seeds == std::vector<int>{0, 1, 2, 3, 4, 5, 6});
  }

  SECTION("no observations yet") {
    const auto c = ts_candidates(10, 2, {}, rng);
    CHECK(c.seeds == std::vector<int>{0});
    CHECK(c.n_candidates() == 10);
  }

  SECTION("fresh label is never an observed one") {
    const auto c = ts_candidates(5, 2, {0, 1, 7}, rng);
    CHECK(c.fresh_seed == 8);
    CHECK(c.seeds == std::vector<int>{0, 1, 7, 8});
  }

  SECTION("grids differ between iterations") {
    const auto a = ts_candidates(8, 2, {0}, rng);
    const auto b = ts_candidates(8, 2, {0}, rng);
    CHECK(a.xs != b.xs);
  }

  SECTION("targets are candidate-major") {
    const auto c = grid_candidates(2, {0, 1});
    const auto targets = candidate_targets(c, kTimes);
    REQUIRE(targets.size() == 4 * kTimes.size());
    CHECK(targets[0].seed == 0);
    CHECK(targets[3].seed == 1);
    CHECK(targets[0].coords(0) == c.xs(0, 0));
    CHECK(targets[6].coords(0) == c.xs(1, 0));
    CHECK(targets[1].coords(1) == kTimes[1]);
  }
}

TEST_CASE("thompson selection") {
  Eigen::VectorXd observed(3);
  observed << 1.0, 2.0, 3.0;

  SECTION("picks the candidate whose realization matches the observation") {
    const auto cands = grid_candidates(3, {0, 1});  // 6 candidates
    Eigen::MatrixXd draw = Eigen::MatrixXd::Zero(18, 1);
    draw.col(0).segment(4 * 3, 3) = observed;  // candidate 4 matches exactly
    Rng rng(2);
    const auto choice = ts_select(fixed_sampler(draw), cands, observed, kTimes, rng);
    CHECK(choice.candidate == 4);
    CHECK(choice.score == 0.0);
    CHECK(choice.seed == cands.seed_of(4));
  }

  SECTION("ties break toward the lowest candidate index") {
    const auto cands = grid_candidates(2, {0});
    const Eigen::MatrixXd draw = Eigen::MatrixXd::Zero(6, 1);
    Rng rng(3);
    const auto choice = ts_select(fixed_sampler(draw), cands, Eigen::VectorXd::Zero(3), kTimes, rng);
    CHECK(choice.candidate == 0);
  }

  SECTION("single candidate is returned unconditionally") {
    const auto cands = grid_candidates(1, {5});
    Eigen::MatrixXd draw = Eigen::MatrixXd::Constant(3, 1, 9.0);
    Rng rng(4);
    const auto choice = ts_select(fixed_sampler(draw), cands, observed, kTimes, rng);
    CHECK(choice.candidate == 0);
    CHECK(choice.seed == 5);
  }

  SECTION("posterior uncertainty produces varied selections") {
    // Two training points far apart; candidates in between carry real
    // posterior spread, so repeated draws should not always agree.
    auto p = test_support::params_of({0.3, 0.3}, 1.0, 0.5, 1e-4);
    std::vector<AugmentedInput> inputs;
    Eigen::VectorXd y(2);
    inputs.push_back(augment(Eigen::VectorXd::Constant(1, 0.0), 0.5, 0));
    inputs.push_back(augment(Eigen::VectorXd::Constant(1, 1.0), 0.5, 0));
    y << 1.0, -1.0;
    GpModel model(Dataset::raw(inputs, y), p, KernelFamily::gaussian);
    const JointSampler sampler = [&](const std::vector<AugmentedInput>& t, int n, Rng& r) {
      return sample_posterior(model, t, n, r);
    };
    const auto cands = grid_candidates(8, {0, 1});
    Rng rng(5);
    std::set<int> seen;
    for (int i = 0; i < 100; ++i)
      seen.insert(ts_select(sampler, cands, observed, kTimes, rng).candidate);
    CHECK(seen.size() >= 2);
  }
}

TEST_CASE("batch thompson selection") {
  Eigen::VectorXd observed = Eigen::VectorXd::Zero(3);
  const auto cands = grid_candidates(3, {0, 1});  // 6 candidates

  SECTION("q = 1 equals the single-draw rule") {
    Eigen::MatrixXd draw = Eigen::MatrixXd::Random(18, 1);
    Rng rng_a(6), rng_b(6);
    const auto one = ts_select(fixed_sampler(draw), cands, observed, kTimes, rng_a);
    const auto batch = ts_select_batch(fixed_sampler(draw), cands, observed, kTimes, 1, rng_b);
    REQUIRE(batch.size() == 1);
    CHECK(batch[0].candidate == one.candidate);
  }

  SECTION("duplicate winners fall back to their next-best candidate") {
    // All three realizations favor candidate 2, then 4, then 1.
    Eigen::MatrixXd draws = Eigen::MatrixXd::Constant(18, 3, 5.0);
    for (int k = 0; k < 3; ++k) {
      draws.col(k).segment(2 * 3, 3).setConstant(0.1);
      draws.col(k).segment(4 * 3, 3).setConstant(0.2);
      draws.col(k).segment(1 * 3, 3).setConstant(0.3);
    }
    Rng rng(7);
    const auto batch = ts_select_batch(fixed_sampler(draws), cands, observed, kTimes, 3, rng);
    REQUIRE(batch.size() == 3);
    CHECK(batch[0].candidate == 2);
    CHECK(batch[1].candidate == 4);
    CHECK(batch[2].candidate == 1);
    std::set<int> distinct{batch[0].candidate, batch[1].candidate, batch[2].candidate};
    CHECK(distinct.size() == 3);
  }

  SECTION("q beyond the candidate count is rejected") {
    Eigen::MatrixXd draws = Eigen::MatrixXd::Zero(18, 7);
    Rng rng(8);
    CHECK_THROWS_AS(ts_select_batch(fixed_sampler(draws), cands, observed, kTimes, 7, rng),
                    std::invalid_argument);
  }
}

TEST_CASE("hypervolume") {
  const Eigen::Vector2d ref(3.0, 3.0);

  SECTION("hand cases") {
    CHECK(hypervolume_2d({}, ref) == 0.0);
    CHECK(hypervolume_2d({{1.0, 1.0}}, ref) == Catch::Approx(4.0));
    CHECK(hypervolume_2d({{1.0, 2.0}, {2.0, 1.0}}, ref) == Catch::Approx(3.0));
    // A dominated point changes nothing.
    CHECK(hypervolume_2d({{1.0, 2.0}, {2.0, 1.0}, {2.5, 2.5}}, ref) == Catch::Approx(3.0));
  }

  SECTION("points must dominate the reference") {
    CHECK_THROWS_AS(hypervolume_2d({{3.5, 1.0}}, ref), std::invalid_argument);
    CHECK_THROWS_AS(hypervolume_2d({{1.0, 3.0}}, ref), std::invalid_argument);
  }

  SECTION("agrees with grid integration on fuzzed fronts", "[property]") {
    Rng rng(20240813);
    for (int trial = 0; trial < 100; ++trial) {
      const Eigen::Vector2d r(1.0 + 4.0 * canonical(rng), 1.0 + 4.0 * canonical(rng));
      const int n = 1 + static_cast<int>(rng() % 20);
      std::vector<Eigen::Vector2d> pts;
      double lo0 = r(0), lo1 = r(1);
      for (int i = 0; i < n; ++i) {
        pts.emplace_back(canonical(rng) * 0.95 * r(0), canonical(rng) * 0.95 * r(1));
        lo0 = std::min(lo0, pts.back()(0));
        lo1 = std::min(lo1, pts.back()(1));
      }
      const double box = (r(0) - lo0) * (r(1) - lo1);
      const double exact = hypervolume_2d(pts, r);
      const double approx = hv_oracle::hv_grid(pts, r, 2000);
      CHECK(std::abs(exact - approx) <= 1e-3 * box);
    }
  }
}

TEST_CASE("pareto archive") {
  SECTION("dominated inserts are rejected, dominating inserts evict") {
    ParetoArchive archive;
    CHECK(archive.insert(rec_of(0, 2.0, 2.0)));
    CHECK_FALSE(archive.insert(rec_of(1, 3.0, 2.5)));
    REQUIRE(archive.size() == 1);
    CHECK(archive.insert(rec_of(2, 2.0, 1.0)));  // incomparable? no: dominates run 0
    CHECK(archive.size() == 1);
    CHECK(archive.records()[0].run_id == 2);
    CHECK(archive.insert(rec_of(3, 1.0, 2.0)));  // incomparable with run 2
    CHECK(archive.size() == 2);
  }

  SECTION("matches brute-force non-dominated filtering", "[property]") {
    Rng rng(20240814);
    for (int trial = 0; trial < 20; ++trial) {
      ParetoArchive archive;
      std::vector<EvalRecord> all;
      for (int i = 0; i < 200; ++i) {
        const auto r = rec_of(i, std::round(canonical(rng) * 20.0), std::round(canonical(rng) * 20.0));
        all.push_back(r);
        archive.insert(r);
      }
      std::set<int> brute;
      for (const auto& a : all) {
        bool is_dominated = false;
        for (const auto& b : all)
          if (dominates(b.g, a.g)) {
            is_dominated = true;
            break;
          }
        if (!is_dominated) brute.insert(a.run_id);
      }
      std::set<int> got;
      for (const auto& r : archive.records()) got.insert(r.run_id);
      CHECK(got == brute);
    }
  }
}

TEST_CASE("bi-objective thompson selection") {
  Eigen::VectorXd obs = Eigen::VectorXd::Zero(3);
  ObjectiveSpec spec;
  spec.observed = {obs, obs};
  const Eigen::Vector2d ref(10.0, 10.0);
  const auto cands = grid_candidates(3, {0});  // 3 candidates

  // Fixed per-objective realizations giving candidate c the objective pair
  // (g1[c], g2[c]): trajectory value v at all 3 times yields g = 3 v^2.
  const auto draws_for = [](std::initializer_list<double> g) {
    Eigen::MatrixXd m(9, 1);
    int c = 0;
    for (double gv : g) {
      m.col(0).segment(3 * c, 3).setConstant(std::sqrt(gv / 3.0));
      ++c;
    }
    return m;
  };

  SECTION("empty archive: largest own dominated area wins") {
    ParetoArchive archive;
    // Candidate areas vs ref (10,10): (9)(8)=72, (5)(5)=25, (8)(9)=72 -> tie
    // broken by index.
    const std::vector<JointSampler> samplers = {fixed_sampler(draws_for({1.0, 5.0, 2.0})),
                                                fixed_sampler(draws_for({2.0, 5.0, 1.0}))};
    Rng rng(9);
    const auto choice = ts_select_mo(samplers, cands, spec, archive, ref, kTimes, rng);
    CHECK(choice.candidate == 0);
  }

  SECTION("candidates dominated by the archive contribute zero") {
    ParetoArchive archive;
    archive.insert(rec_of(0, 1.0, 1.0));
    // Candidate 1 is dominated by the archive point; candidate 2 extends
    // the front.
    const std::vector<JointSampler> samplers = {fixed_sampler(draws_for({2.0, 3.0, 0.5})),
                                                fixed_sampler(draws_for({2.0, 3.0, 0.5}))};
    Rng rng(10);
    const auto choice = ts_select_mo(samplers, cands, spec, archive, ref, kTimes, rng);
    CHECK(choice.candidate == 2);
  }

  SECTION("matches brute-force contribution enumeration") {
    ParetoArchive archive;
    archive.insert(rec_of(0, 2.0, 6.0));
    archive.insert(rec_of(1, 6.0, 2.0));
    const std::vector<double> g1 = {1.0, 4.0, 7.0};
    const std::vector<double> g2 = {7.0, 4.0, 1.0};
    const std::vector<JointSampler> samplers = {fixed_sampler(draws_for({1.0, 4.0, 7.0})),
                                                fixed_sampler(draws_for({7.0, 4.0, 1.0}))};

    const double base = hypervolume_2d(archive.front_2d(), ref);
    double best = -1.0;
    int best_c = -1;
    for (int c = 0; c < 3; ++c) {
      auto front = archive.front_2d();
      front.emplace_back(g1[c], g2[c]);
      const double contrib = hypervolume_2d(front, ref) - base;
      if (contrib > best) {
        best = contrib;
        best_c = c;
      }
    }
    Rng rng(11);
    const auto choice = ts_select_mo(samplers, cands, spec, archive, ref, kTimes, rng);
    CHECK(choice.candidate == best_c);
  }

  SECTION("all-zero contributions fall back to the smallest g1 + g2") {
    ParetoArchive archive;
    archive.insert(rec_of(0, 0.1, 0.1));
    const std::vector<JointSampler> samplers = {fixed_sampler(draws_for({2.0, 1.0, 3.0})),
                                                fixed_sampler(draws_for({2.0, 1.0, 3.0}))};
    Rng rng(12);
    const auto choice = ts_select_mo(samplers, cands, spec, archive, ref, kTimes, rng);
    CHECK(choice.candidate == 1);
  }
}
