#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include "too/common.hpp"
#include "too/detail/nelder_mead.hpp"
#include "too/kernels.hpp"

namespace too {

/// Training data for a zero-mean GP. Outputs are stored standardized; the
/// affine transform back to raw units is raw = shift + scale * stored.
struct Dataset {
  std::vector<AugmentedInput> inputs;
  Eigen::VectorXd outputs;
  double shift = 0.0;
  double scale = 1.0;

  /// Standardizes raw outputs to empirical mean 0 and variance 1.
  /// Near-constant outputs are only centered, not rescaled.
  static Dataset standardized(std::vector<AugmentedInput> in, const Eigen::VectorXd& raw) {
    check(in, raw);
    Dataset d;
    d.shift = raw.mean();
    const double var = (raw.array() - d.shift).square().sum() / static_cast<double>(raw.size());
    d.scale = var > 1e-24 ? std::sqrt(var) : 1.0;
    d.outputs = (raw.array() - d.shift) / d.scale;
    d.inputs = std::move(in);
    return d;
  }

  /// Wraps outputs as-is (identity transform). Used by tests and by callers
  /// that standardize themselves.
  static Dataset raw(std::vector<AugmentedInput> in, Eigen::VectorXd out) {
    check(in, out);
    Dataset d;
    d.inputs = std::move(in);
    d.outputs = std::move(out);
    return d;
  }

  int size() const { return static_cast<int>(inputs.size()); }
  int dim() const { return static_cast<int>(inputs.front().coords.size()); }
  double raw_output(int i) const { return shift + scale * outputs(i); }
  double standardize_output(double raw_value) const { return (raw_value - shift) / scale; }

 private:
  static void check(const std::vector<AugmentedInput>& in, const Eigen::VectorXd& out) {
    if (in.empty() || static_cast<int>(in.size()) != out.size())
      throw std::invalid_argument("Dataset: inputs and outputs must have equal nonzero length");
    for (const auto& p : in)
      if (p.coords.size() != in.front().coords.size())
        throw std::invalid_argument("Dataset: inconsistent input dimensions");
  }
};

/// Fitted (or directly constructed) GP: data, hyperparameters and the
/// Cholesky factor of K + tau^2 I. Immutable after construction; predict
/// and sampling may run concurrently on a shared model.
class GpModel {
 public:
  GpModel(Dataset data, KernelParams params, KernelFamily family)
      : data_(std::move(data)), params_(std::move(params)), family_(family) {
    params_.validate();
    if (params_.lengthscales.size() != data_.dim())
      throw std::invalid_argument("GpModel: lengthscale count does not match input dimension");
    const Eigen::MatrixXd k = build_covariance(data_.inputs, params_, family_, true);
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success)
      throw NumericalError("GpModel: covariance factorization failed (" + describe(params_) + ")");
    chol_ = llt.matrixL();
    alpha_ = chol_.triangularView<Eigen::Lower>().solve(data_.outputs);
    chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
    max_seed_ = 0;
    for (const auto& p : data_.inputs) max_seed_ = std::max(max_seed_, p.seed);
  }

  const Dataset& data() const { return data_; }
  const KernelParams& params() const { return params_; }
  KernelFamily family() const { return family_; }
  const Eigen::MatrixXd& chol() const { return chol_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  int max_seed() const { return max_seed_; }

  static std::string describe(const KernelParams& p) {
    std::ostringstream os;
    os << "lengthscales=[";
    for (int i = 0; i < p.lengthscales.size(); ++i) os << (i ? "," : "") << p.lengthscales(i);
    os << "] variance=" << p.variance << " rho=" << p.rho << " nugget=" << p.nugget;
    return os.str();
  }

 private:
  // Trusts a caller-supplied factor of K + tau^2 I (incremental updates).
  GpModel(Dataset data, KernelParams params, KernelFamily family, Eigen::MatrixXd chol)
      : data_(std::move(data)), params_(std::move(params)), family_(family), chol_(std::move(chol)) {
    alpha_ = chol_.triangularView<Eigen::Lower>().solve(data_.outputs);
    chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
    max_seed_ = 0;
    for (const auto& p : data_.inputs) max_seed_ = std::max(max_seed_, p.seed);
  }

  friend GpModel condition_many(const GpModel&, const std::vector<AugmentedInput>&,
                                const std::vector<double>&);

  Dataset data_;
  KernelParams params_;
  KernelFamily family_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
  int max_seed_ = 0;
};

/// Gaussian log marginal likelihood of the stored (standardized) outputs,
/// computed through the Cholesky factorization.
inline double log_marginal_likelihood(const Dataset& data, const KernelParams& params,
                                      KernelFamily family) {
  params.validate();
  const Eigen::MatrixXd k = build_covariance(data.inputs, params, family, true);
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success)
    throw NumericalError("log_marginal_likelihood: factorization failed (" +
                         GpModel::describe(params) + ")");
  const Eigen::MatrixXd l = llt.matrixL();
  Eigen::VectorXd alpha = l.triangularView<Eigen::Lower>().solve(data.outputs);
  const double quad = alpha.squaredNorm();
  const double logdet = 2.0 * l.diagonal().array().log().sum();
  return -0.5 * quad - 0.5 * logdet -
         0.5 * static_cast<double>(data.size()) * std::log(2.0 * M_PI);
}

/// Box bounds for hyperparameter estimation. Defaults assume unit-cube
/// inputs and standardized outputs.
struct FitBounds {
  double ls_lo = 1e-2, ls_hi = 2.0;
  double var_lo = 1e-2, var_hi = 1e2;
  double nug_lo = 1e-8, nug_hi = 1e-1;
  double rho_lo = 0.01, rho_hi = 0.99;

  void validate() const {
    auto ok = [](double lo, double hi) { return lo > 0.0 && lo < hi; };
    if (!ok(ls_lo, ls_hi) || !ok(var_lo, var_hi) || !ok(nug_lo, nug_hi) || !ok(rho_lo, rho_hi))
      throw std::invalid_argument("FitBounds: each lower bound must be positive and below its upper bound");
  }
};

struct FitOptions {
  FitBounds bounds;
  int n_restarts = 5;
  int max_iter = 150;
  /// Fixes rho instead of estimating it (the mean-behavior baseline uses 1).
  std::optional<double> fix_rho;
  /// Extra start point, tried first (used when refitting during a campaign).
  std::optional<KernelParams> warm_start;
};

namespace detail {

/// Precomputed per-dimension squared coordinate differences and the
/// same-seed mask, so repeated likelihood evaluations during fitting only
/// pay for the elementwise kernel map and the factorization.
struct FitWorkspace {
  std::vector<Eigen::ArrayXXd> sq_diff;
  Eigen::ArrayXXd same_seed;
  const Dataset& data;

  explicit FitWorkspace(const Dataset& d) : data(d) {
    const int n = d.size(), dim = d.dim();
    sq_diff.resize(dim, Eigen::ArrayXXd(n, n));
    same_seed.resize(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < dim; ++k) {
          const double delta = d.inputs[i].coords(k) - d.inputs[j].coords(k);
          sq_diff[k](i, j) = delta * delta;
        }
        same_seed(i, j) = d.inputs[i].seed == d.inputs[j].seed ? 1.0 : 0.0;
      }
  }

  Eigen::MatrixXd covariance(const KernelParams& p, KernelFamily family) const {
    const int n = data.size();
    Eigen::ArrayXXd q = Eigen::ArrayXXd::Zero(n, n);
    for (size_t k = 0; k < sq_diff.size(); ++k)
      q += sq_diff[k] / (p.lengthscales(static_cast<int>(k)) * p.lengthscales(static_cast<int>(k)));
    Eigen::ArrayXXd base;
    if (family == KernelFamily::gaussian) {
      base = p.variance * (-0.5 * q).exp();
    } else {
      const Eigen::ArrayXXd z = (5.0 * q).sqrt();
      base = p.variance * (1.0 + z + z.square() / 3.0) * (-z).exp();
    }
    Eigen::MatrixXd k = (base * (same_seed + p.rho * (1.0 - same_seed))).matrix();
    k.diagonal().array() += p.nugget;
    return k;
  }

  double lml(const KernelParams& p, KernelFamily family, Eigen::LLT<Eigen::MatrixXd>& llt) const {
    llt.compute(covariance(p, family));
    if (llt.info() != Eigen::Success) throw NumericalError("fit: factorization failed");
    const auto l = Eigen::MatrixXd(llt.matrixL());
    const Eigen::VectorXd v = l.triangularView<Eigen::Lower>().solve(data.outputs);
    return -0.5 * v.squaredNorm() - l.diagonal().array().log().sum() -
           0.5 * static_cast<double>(data.size()) * std::log(2.0 * M_PI);
  }
};

inline double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }
inline double logit(double u) {
  const double c = std::clamp(u, 1e-12, 1.0 - 1e-12);
  return std::log(c / (1.0 - c));
}

/// Maps an unconstrained search vector to bounded hyperparameters. Positive
/// parameters move on a log scale, rho on a logit scale, each squashed into
/// its bound interval.
class ParamCoding {
 public:
  ParamCoding(int dim, const FitBounds& b, std::optional<double> fix_rho)
      : dim_(dim), bounds_(b), fix_rho_(fix_rho) {}

  int size() const { return dim_ + 2 + (fix_rho_ ? 0 : 1); }

  KernelParams decode(const Eigen::VectorXd& s) const {
    KernelParams p;
    p.lengthscales.resize(dim_);
    for (int i = 0; i < dim_; ++i)
      p.lengthscales(i) = from_log(s(i), bounds_.ls_lo, bounds_.ls_hi);
    p.variance = from_log(s(dim_), bounds_.var_lo, bounds_.var_hi);
    p.nugget = from_log(s(dim_ + 1), bounds_.nug_lo, bounds_.nug_hi);
    p.rho = fix_rho_ ? *fix_rho_ : from_logit(s(dim_ + 2), bounds_.rho_lo, bounds_.rho_hi);
    return p;
  }

  Eigen::VectorXd encode(const KernelParams& p) const {
    Eigen::VectorXd s(size());
    for (int i = 0; i < dim_; ++i) s(i) = to_log(p.lengthscales(i), bounds_.ls_lo, bounds_.ls_hi);
    s(dim_) = to_log(p.variance, bounds_.var_lo, bounds_.var_hi);
    s(dim_ + 1) = to_log(p.nugget, bounds_.nug_lo, bounds_.nug_hi);
    if (!fix_rho_) s(dim_ + 2) = to_logit(p.rho, bounds_.rho_lo, bounds_.rho_hi);
    return s;
  }

  KernelParams random_params(Rng& rng) const {
    KernelParams p;
    p.lengthscales.resize(dim_);
    for (int i = 0; i < dim_; ++i) p.lengthscales(i) = log_uniform(rng, bounds_.ls_lo, bounds_.ls_hi);
    p.variance = log_uniform(rng, bounds_.var_lo, bounds_.var_hi);
    p.nugget = log_uniform(rng, bounds_.nug_lo, bounds_.nug_hi);
    p.rho = fix_rho_ ? *fix_rho_
                     : bounds_.rho_lo + canonical(rng) * (bounds_.rho_hi - bounds_.rho_lo);
    return p;
  }

  KernelParams clamped(KernelParams p) const {
    for (int i = 0; i < dim_; ++i)
      p.lengthscales(i) = std::clamp(p.lengthscales(i), bounds_.ls_lo, bounds_.ls_hi);
    p.variance = std::clamp(p.variance, bounds_.var_lo, bounds_.var_hi);
    p.nugget = std::clamp(p.nugget, bounds_.nug_lo, bounds_.nug_hi);
    p.rho = fix_rho_ ? *fix_rho_ : std::clamp(p.rho, bounds_.rho_lo, bounds_.rho_hi);
    return p;
  }

 private:
  static double from_log(double s, double lo, double hi) {
    return std::exp(std::log(lo) + sigmoid(s) * (std::log(hi) - std::log(lo)));
  }
  static double to_log(double u, double lo, double hi) {
    return logit((std::log(u) - std::log(lo)) / (std::log(hi) - std::log(lo)));
  }
  static double from_logit(double s, double lo, double hi) { return lo + sigmoid(s) * (hi - lo); }
  static double to_logit(double u, double lo, double hi) { return logit((u - lo) / (hi - lo)); }
  static double log_uniform(Rng& rng, double lo, double hi) {
    return std::exp(std::log(lo) + canonical(rng) * (std::log(hi) - std::log(lo)));
  }

  int dim_;
  FitBounds bounds_;
  std::optional<double> fix_rho_;
};

}  // namespace detail

/// Maximum-likelihood hyperparameter estimation: multi-start derivative-free
/// local search over log-transformed positives and logit-transformed rho.
/// Returns the model at the best start's local optimum; the achieved
/// likelihood is never below the likelihood of any tried start point.
inline GpModel fit(const Dataset& data, KernelFamily family, const FitOptions& opts, Rng& rng) {
  if (data.size() < 2) throw std::invalid_argument("fit: need at least two observations");
  if (opts.n_restarts < 1) throw std::invalid_argument("fit: n_restarts must be >= 1");
  opts.bounds.validate();
  if (opts.fix_rho && (*opts.fix_rho <= 0.0 || *opts.fix_rho > 1.0))
    throw std::invalid_argument("fit: fix_rho must be in (0, 1]");

  const detail::FitWorkspace ws(data);
  const detail::ParamCoding coding(data.dim(), opts.bounds, opts.fix_rho);
  Eigen::LLT<Eigen::MatrixXd> llt(data.size());

  const auto objective = [&](const Eigen::VectorXd& s) -> double {
    try {
      return -ws.lml(coding.decode(s), family, llt);
    } catch (const NumericalError&) {
      return 1e12;
    }
  };

  std::vector<KernelParams> starts;
  if (opts.warm_start) starts.push_back(coding.clamped(*opts.warm_start));
  {
    KernelParams def;
    def.lengthscales = Eigen::VectorXd::Constant(data.dim(), 0.3);
    def.variance = 1.0;
    def.nugget = 1e-3;
    def.rho = 0.5;
    starts.push_back(coding.clamped(def));
  }
  while (static_cast<int>(starts.size()) < opts.n_restarts) starts.push_back(coding.random_params(rng));
  starts.resize(opts.n_restarts);

  double best_val = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_s;
  for (const auto& start : starts) {
    const auto res = detail::nelder_mead(objective, coding.encode(start), 0.7, opts.max_iter);
    if (res.value < best_val) {
      best_val = res.value;
      best_s = res.x;
    }
  }
  if (!std::isfinite(best_val) || best_val >= 1e12)
    throw NumericalError("fit: every restart failed to factorize");
  return GpModel(data, coding.decode(best_s), family);
}

struct Prediction {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

namespace detail {

/// Kriging prediction in standardized output units.
inline Prediction predict_standardized(const GpModel& model,
                                       const std::vector<AugmentedInput>& targets) {
  if (targets.empty()) throw std::invalid_argument("predict: empty target list");
  const int n = model.data().size();
  const int m = static_cast<int>(targets.size());
  Eigen::MatrixXd ks(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      ks(i, j) = crn_kernel(model.data().inputs[i], targets[j], model.params(), model.family());

  Prediction out;
  out.mean = ks.transpose() * model.alpha();
  const Eigen::MatrixXd v = model.chol().triangularView<Eigen::Lower>().solve(ks);
  out.cov = build_covariance(targets, model.params(), model.family(), true) - v.transpose() * v;
  out.cov = ((out.cov + out.cov.transpose()) / 2.0).eval();
  out.cov.diagonal() = out.cov.diagonal().cwiseMax(0.0);
  return out;
}

/// Posterior draws given a matrix of standard normal variates (one column
/// per draw), in standardized units. Jitter escalates from 1e-10 by factors
/// of 10 up to 1e-4 until the predictive covariance factorizes.
inline Eigen::MatrixXd sample_with_noise(const GpModel& model,
                                         const std::vector<AugmentedInput>& targets,
                                         const Eigen::MatrixXd& z) {
  const Prediction pred = predict_standardized(model, targets);
  const int m = static_cast<int>(targets.size());
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 1e-10;
  for (;; jitter *= 10.0) {
    Eigen::MatrixXd c = pred.cov;
    c.diagonal().array() += jitter;
    llt.compute(c);
    if (llt.info() == Eigen::Success) break;
    if (jitter >= 1e-4)
      throw NumericalError("sample_posterior: covariance not factorizable at maximum jitter");
  }
  const Eigen::MatrixXd l = llt.matrixL();
  return (pred.mean.replicate(1, z.cols()) + l * z).eval();
}

inline Eigen::MatrixXd standard_normal(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd z(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) z(i, j) = nd(rng);
  return z;
}

}  // namespace detail

/// Posterior mean and covariance at the targets, in raw output units. The
/// covariance includes the tau^2 observation noise on its diagonal.
inline Prediction predict(const GpModel& model, const std::vector<AugmentedInput>& targets) {
  Prediction p = detail::predict_standardized(model, targets);
  p.mean = (model.data().shift + model.data().scale * p.mean.array()).matrix();
  p.cov *= model.data().scale * model.data().scale;
  return p;
}

/// Joint posterior draws at the targets (one column per draw), raw units.
inline Eigen::MatrixXd sample_posterior(const GpModel& model,
                                        const std::vector<AugmentedInput>& targets, int n_draws,
                                        Rng& rng) {
  if (n_draws < 1) throw std::invalid_argument("sample_posterior: n_draws must be >= 1");
  const Eigen::MatrixXd z = detail::standard_normal(static_cast<int>(targets.size()), n_draws, rng);
  Eigen::MatrixXd draws = detail::sample_with_noise(model, targets, z);
  return (model.data().shift + model.data().scale * draws.array()).matrix();
}

/// Draws from the zero-mean prior (nugget included), one column per draw.
inline Eigen::MatrixXd sample_prior(const std::vector<AugmentedInput>& inputs,
                                    const KernelParams& params, KernelFamily family, int n_draws,
                                    Rng& rng) {
  params.validate();
  const Eigen::MatrixXd k = build_covariance(inputs, params, family, true);
  Eigen::LLT<Eigen::MatrixXd> llt;
  for (double jitter = 1e-10;; jitter *= 10.0) {
    Eigen::MatrixXd c = k;
    c.diagonal().array() += jitter;
    llt.compute(c);
    if (llt.info() == Eigen::Success) break;
    if (jitter >= 1e-4) throw NumericalError("sample_prior: covariance not factorizable");
  }
  const Eigen::MatrixXd l = llt.matrixL();
  return l * detail::standard_normal(static_cast<int>(inputs.size()), n_draws, rng);
}

/// Extends the model with several new observations without re-optimizing
/// hyperparameters, updating the Cholesky factor incrementally. Equivalent
/// to rebuilding the factorization on the extended dataset.
inline GpModel condition_many(const GpModel& model, const std::vector<AugmentedInput>& new_inputs,
                              const std::vector<double>& new_raw_outputs) {
  if (new_inputs.size() != new_raw_outputs.size() || new_inputs.empty())
    throw std::invalid_argument("condition: inputs and outputs must have equal nonzero length");

  Dataset data = model.data();
  const int n0 = data.size();
  const int add = static_cast<int>(new_inputs.size());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n0 + add, n0 + add);
  l.topLeftCorner(n0, n0) = model.chol();

  for (int a = 0; a < add; ++a) {
    const int n = n0 + a;
    const AugmentedInput& p = new_inputs[a];
    if (p.coords.size() != data.dim())
      throw std::invalid_argument("condition: input dimension mismatch");
    Eigen::VectorXd k(n);
    for (int i = 0; i < n; ++i)
      k(i) = crn_kernel(data.inputs[i], p, model.params(), model.family());
    const double knn =
        crn_kernel(p, p, model.params(), model.family()) + model.params().nugget;
    Eigen::VectorXd w =
        l.topLeftCorner(n, n).triangularView<Eigen::Lower>().solve(k);
    const double d2 = knn - w.squaredNorm();
    if (d2 <= 0.0)
      throw NumericalError("condition: updated covariance lost positive definiteness");
    l.block(n, 0, 1, n) = w.transpose();
    l(n, n) = std::sqrt(d2);

    data.inputs.push_back(p);
    data.outputs.conservativeResize(n + 1);
    data.outputs(n) = data.standardize_output(new_raw_outputs[a]);
  }

  GpModel out(std::move(data), model.params(), model.family(), std::move(l));
  return out;
}

inline GpModel condition(const GpModel& model, const AugmentedInput& input, double raw_output) {
  return condition_many(model, {input}, {raw_output});
}

}  // namespace too
