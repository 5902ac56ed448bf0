#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "test_support.hpp"
#include "too/gp.hpp"

using namespace too;
using test_support::naive_lml;
using test_support::naive_predict;
using test_support::params_of;

namespace {

AugmentedInput in1(double x, double t, int seed) {
  Eigen::VectorXd c(2);
  c << x, t;
  return AugmentedInput{c, seed};
}

Dataset small_random_dataset(int n, int dim, KernelParams& p_out, Rng& rng) {
  p_out = test_support::params_of(std::vector<double>(dim, 0.2 + canonical(rng)), 0.5 + canonical(rng),
                                  0.2 + 0.6 * canonical(rng), 1e-4 + 1e-3 * canonical(rng));
  auto inputs = test_support::random_design(n, dim, 3, rng);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = 2.0 * canonical(rng) - 1.0;
  return Dataset::raw(std::move(inputs), std::move(y));
}

}  // namespace

TEST_CASE("dataset standardization") {
  Rng rng(11);
  auto inputs = test_support::random_design(40, 2, 4, rng);
  Eigen::VectorXd raw(40);
  for (int i = 0; i < 40; ++i) raw(i) = 100.0 + 25.0 * canonical(rng);
  const auto d = Dataset::standardized(std::move(inputs), raw);

  CHECK(std::abs(d.outputs.mean()) < 1e-9);
  const double var = d.outputs.array().square().sum() / 40.0;
  CHECK(var == Catch::Approx(1.0).margin(1e-9));
  for (int i = 0; i < 40; ++i) CHECK(d.raw_output(i) == Catch::Approx(raw(i)).margin(1e-9));

  SECTION("mismatched lengths throw") {
    CHECK_THROWS_AS(Dataset::raw({}, Eigen::VectorXd()), std::invalid_argument);
  }
}

TEST_CASE("log marginal likelihood") {
  SECTION("scalar closed form") {
    // N=1, y=0.3, sigma^2=1, tau^2=0.001:
    // -0.5*0.09/1.001 - 0.5*log(1.001) - 0.5*log(2*pi)
    auto p = params_of({0.5, 0.5}, 1.0, 0.5, 0.001);
    auto d = Dataset::raw({in1(0.5, 0.5, 0)}, Eigen::VectorXd::Constant(1, 0.3));
    CHECK(log_marginal_likelihood(d, p, KernelFamily::gaussian) ==
          Catch::Approx(-0.9643933283262594).epsilon(1e-12));
  }

  SECTION("duplicate inputs with identical outputs stay finite") {
    auto p = params_of({0.5, 0.5}, 1.0, 0.5, 1e-8);
    auto d = Dataset::raw({in1(0.5, 0.5, 0), in1(0.5, 0.5, 0)}, Eigen::VectorXd::Constant(2, 0.7));
    CHECK(std::isfinite(log_marginal_likelihood(d, p, KernelFamily::gaussian)));
  }

  SECTION("matches the dense-inverse oracle on small datasets") {
    Rng rng(22);
    for (int trial = 0; trial < 30; ++trial) {
      KernelParams p;
      const int n = 2 + static_cast<int>(rng() % 5);
      auto d = small_random_dataset(n, 2, p, rng);
      const auto fam = trial % 2 ? KernelFamily::matern52 : KernelFamily::gaussian;
      const double fast = log_marginal_likelihood(d, p, fam);
      CHECK(fast == Catch::Approx(naive_lml(d, p, fam)).epsilon(1e-8));
    }
  }
}

TEST_CASE("kriging prediction") {
  SECTION("interpolates a training observation at small nugget") {
    auto p = params_of({0.4, 0.4}, 1.0, 0.5, 1e-6);
    std::vector<AugmentedInput> inputs = {in1(0.2, 0.3, 0), in1(0.8, 0.6, 1), in1(0.5, 0.9, 0)};
    Eigen::VectorXd y(3);
    y << 0.4, -0.3, 0.9;
    GpModel model(Dataset::raw(inputs, y), p, KernelFamily::gaussian);
    const auto pred = predict(model, {inputs[1]});
    CHECK(pred.mean(0) == Catch::Approx(-0.3).margin(1e-2));
  }

  SECTION("reverts to the prior far from all data") {
    auto p = params_of({0.05, 0.05}, 2.0, 0.5, 1e-4);
    GpModel model(Dataset::raw({in1(0.0, 0.0, 0)}, Eigen::VectorXd::Constant(1, 5.0)), p,
                  KernelFamily::gaussian);
    const auto pred = predict(model, {in1(1.0, 1.0, 0)});
    CHECK(std::abs(pred.mean(0)) < 1e-4);
    CHECK(pred.cov(0, 0) == Catch::Approx(2.0 + 1e-4).margin(1e-4));
  }

  SECTION("matches the dense-inverse oracle") {
    Rng rng(33);
    for (int trial = 0; trial < 40; ++trial) {
      KernelParams p;
      const int n = 2 + static_cast<int>(rng() % 7);
      auto d = small_random_dataset(n, 2, p, rng);
      const auto fam = trial % 2 ? KernelFamily::matern52 : KernelFamily::gaussian;
      GpModel model(d, p, fam);
      const auto targets = test_support::random_design(4, 2, 4, rng);
      const auto got = predict(model, targets);
      const auto want = naive_predict(d, p, fam, targets);
      CHECK((got.mean - want.mean).cwiseAbs().maxCoeff() < 1e-8);
      CHECK((got.cov - want.cov).cwiseAbs().maxCoeff() < 1e-8);
    }
  }

  SECTION("posterior variance never exceeds prior variance") {
    Rng rng(44);
    for (int trial = 0; trial < 20; ++trial) {
      KernelParams p;
      auto d = small_random_dataset(8, 2, p, rng);
      GpModel model(d, p, KernelFamily::gaussian);
      const auto targets = test_support::random_design(16, 2, 4, rng);
      const auto pred = predict(model, targets);
      CHECK(pred.cov.diagonal().maxCoeff() <= p.variance + p.nugget + 1e-8);
      CHECK(pred.cov.diagonal().minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("model factorization invariant") {
  Rng rng(55);
  KernelParams p;
  auto d = small_random_dataset(12, 2, p, rng);
  GpModel model(d, p, KernelFamily::gaussian);
  const Eigen::MatrixXd k = build_covariance(d.inputs, p, KernelFamily::gaussian, true);
  const Eigen::MatrixXd rebuilt =
      model.chol() * model.chol().transpose();
  CHECK((rebuilt - k).norm() / k.norm() < 1e-8);
}

TEST_CASE("posterior sampling", "[stats]") {
  SECTION("mean of many draws at a far target") {
    auto p = params_of({0.05, 0.05}, 1.0, 0.5, 1e-6);
    GpModel model(Dataset::raw({in1(0.0, 0.0, 0)}, Eigen::VectorXd::Constant(1, 3.0)), p,
                  KernelFamily::gaussian);
    Rng rng(66);
    const auto draws = sample_posterior(model, {in1(1.0, 1.0, 0)}, 10000, rng);
    const double margin = 4.0 * std::sqrt((1.0 + 1e-6) / 10000.0);
    CHECK(std::abs(draws.row(0).mean()) < margin);
  }

  SECTION("draws collapse onto a training observation at tiny nugget") {
    auto p = params_of({0.4, 0.4}, 1.0, 0.5, 1e-8);
    GpModel model(Dataset::raw({in1(0.3, 0.4, 2)}, Eigen::VectorXd::Constant(1, 1.5)), p,
                  KernelFamily::gaussian);
    Rng rng(77);
    const auto draws = sample_posterior(model, {in1(0.3, 0.4, 2)}, 200, rng);
    CHECK((draws.array() - 1.5).abs().maxCoeff() < 1e-1);
  }

  SECTION("empirical covariance matches the predictive covariance") {
    Rng rng(88);
    KernelParams p;
    auto d = small_random_dataset(6, 2, p, rng);
    GpModel model(d, p, KernelFamily::gaussian);
    const std::vector<AugmentedInput> targets = {in1(0.1, 0.2, 0), in1(0.5, 0.5, 1),
                                                 in1(0.9, 0.8, 9)};
    const auto pred = predict(model, targets);
    const auto draws = sample_posterior(model, targets, 20000, rng);
    const Eigen::MatrixXd centered = draws.colwise() - draws.rowwise().mean();
    const Eigen::MatrixXd emp = centered * centered.transpose() / 20000.0;
    CHECK((emp - pred.cov).cwiseAbs().maxCoeff() < 0.05);
  }
}

TEST_CASE("conditioning") {
  Rng rng(99);

  SECTION("reproduces the new observation") {
    KernelParams p;
    auto d = small_random_dataset(6, 2, p, rng);
    GpModel model(d, p, KernelFamily::gaussian);
    const auto fresh = in1(0.42, 0.17, 5);
    const auto updated = condition(model, fresh, 0.33);
    const auto pred = predict(updated, {fresh});
    CHECK(pred.mean(0) == Catch::Approx(0.33).margin(3.0 * std::sqrt(p.nugget) + 1e-6));
  }

  SECTION("equals a full rebuild") {
    for (int trial = 0; trial < 10; ++trial) {
      KernelParams p;
      auto d = small_random_dataset(5 + trial % 3, 2, p, rng);
      GpModel model(d, p, KernelFamily::gaussian);
      const auto fresh = test_support::random_design(1, 2, 6, rng)[0];
      const double y_new = 2.0 * canonical(rng) - 1.0;
      const auto updated = condition(model, fresh, y_new);

      auto ext = d;
      ext.inputs.push_back(fresh);
      ext.outputs.conservativeResize(ext.outputs.size() + 1);
      ext.outputs(ext.outputs.size() - 1) = y_new;
      GpModel rebuilt(ext, p, KernelFamily::gaussian);

      const auto targets = test_support::random_design(5, 2, 6, rng);
      const auto a = predict(updated, targets);
      const auto b = predict(rebuilt, targets);
      CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() < 1e-8);
      CHECK((a.cov - b.cov).cwiseAbs().maxCoeff() < 1e-8);
    }
  }

  SECTION("order of two conditionings does not matter") {
    KernelParams p;
    auto d = small_random_dataset(6, 2, p, rng);
    GpModel model(d, p, KernelFamily::gaussian);
    const auto pa = in1(0.15, 0.85, 3);
    const auto pb = in1(0.65, 0.25, 4);
    const auto ab = condition(condition(model, pa, 0.5), pb, -0.2);
    const auto ba = condition(condition(model, pb, -0.2), pa, 0.5);
    const auto targets = test_support::random_design(6, 2, 6, rng);
    CHECK((predict(ab, targets).mean - predict(ba, targets).mean).cwiseAbs().maxCoeff() < 1e-8);
  }

  SECTION("accepts a duplicate input with a conflicting output") {
    KernelParams p;
    auto d = small_random_dataset(5, 2, p, rng);
    GpModel model(d, p, KernelFamily::gaussian);
    const auto dup = d.inputs[2];
    CHECK_NOTHROW(condition(model, dup, d.raw_output(2) + 1.0));
  }

  SECTION("standardized datasets round-trip raw outputs") {
    auto p = params_of({0.4, 0.4}, 1.0, 0.5, 1e-6);
    Rng local(123);
    auto inputs = test_support::random_design(10, 2, 3, local);
    Eigen::VectorXd raw(10);
    for (int i = 0; i < 10; ++i) raw(i) = 500.0 + 120.0 * canonical(local);
    GpModel model(Dataset::standardized(inputs, raw), p, KernelFamily::gaussian);
    const auto fresh = in1(0.31, 0.77, 7);
    const auto updated = condition(model, fresh, 640.0);
    const auto pred = predict(updated, {fresh});
    CHECK(pred.mean(0) == Catch::Approx(640.0).margin(3.0 * std::sqrt(p.nugget) * 120.0 + 1.0));
  }
}

TEST_CASE("hyperparameter fitting", "[fit]") {
  SECTION("recovers a known rho") {
    Rng rng(4242);
    const auto truth = params_of({0.3}, 1.0, 0.8, 1e-4);
    const auto inputs = test_support::replicated_design(15, 1, 8, rng);
    const auto y = test_support::draw_outputs(inputs, truth, KernelFamily::gaussian, rng);
    const auto data = Dataset::standardized(inputs, y);
    FitOptions opts;
    const auto model = fit(data, KernelFamily::gaussian, opts, rng);
    CHECK(model.params().rho > 0.65);
    CHECK(model.params().rho < 0.95);
  }

  SECTION("constant-zero outputs push variance toward its floor") {
    Rng rng(5151);
    auto inputs = test_support::random_design(12, 2, 3, rng);
    const auto data = Dataset::raw(std::move(inputs), Eigen::VectorXd::Zero(12));
    FitOptions opts;
    const auto model = fit(data, KernelFamily::gaussian, opts, rng);
    CHECK(model.params().variance < 10.0 * opts.bounds.var_lo);
  }

  SECTION("two points suffice") {
    Rng rng(6161);
    auto inputs = test_support::random_design(2, 2, 2, rng);
    Eigen::VectorXd y(2);
    y << 0.2, -0.4;
    FitOptions opts;
    opts.n_restarts = 2;
    CHECK_NOTHROW(fit(Dataset::raw(std::move(inputs), y), KernelFamily::gaussian, opts, rng));
  }

  SECTION("achieved likelihood is at least every start point's") {
    Rng rng(7171);
    KernelParams truth;
    auto data = small_random_dataset(20, 2, truth, rng);
    FitOptions opts;
    opts.n_restarts = 3;
    Rng fit_rng(999);
    const auto model = fit(data, KernelFamily::gaussian, opts, fit_rng);
    const double achieved = log_marginal_likelihood(data, model.params(), KernelFamily::gaussian);
    // The deterministic default start is always among the tried points.
    KernelParams def;
    def.lengthscales = Eigen::VectorXd::Constant(2, 0.3);
    def.variance = 1.0;
    def.nugget = 1e-3;
    def.rho = 0.5;
    CHECK(achieved >= log_marginal_likelihood(data, def, KernelFamily::gaussian) - 1e-9);
  }
}
