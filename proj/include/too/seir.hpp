#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/binomial.hpp>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <vector>

#include "too/common.hpp"

namespace too::seir {

/// Disease-progression constants held fixed during calibration. The values
/// are desk-scale defaults chosen to produce visible epidemic variation in
/// a 100-day horizon; every field is configurable.
struct SeirFixedParams {
  double severe_fraction = 0.1;         // P -> Ss (vs Sm)
  double detect_fraction = 0.3;         // share eventually detected per state
  double detect_delay_days = 2.0;       // mean days until detection
  double detected_infectiousness = 0.3; // transmission multiplier once detected
  double presymptomatic_rate = 0.5;     // P exit, per day
  double hospital_rate = 0.25;          // Ss -> H, per day
  double critical_fraction = 0.25;      // H -> C (vs R)
  double death_fraction = 0.4;          // C -> D (vs Hp)
  double recovery_rate = 1.0 / 7.0;     // As, Sm -> R and H, C, Hp exits
  std::int64_t population = 100000;
  std::int64_t initial_exposed = 10;

  double detection_rate() const { return detect_fraction / detect_delay_days; }
};

/// Simulator parameters: the three calibration inputs plus the fixed block.
struct SeirParams {
  double beta = 0.4;     // transmission rate, per day
  double kappa_a = 0.25; // E -> asymptomatic, per day
  double kappa_s = 0.25; // E -> presymptomatic, per day
  SeirFixedParams fixed;

  void validate() const {
    auto rate = [](double v) { return v >= 0.0 && std::isfinite(v); };
    auto frac = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!rate(beta) || !rate(kappa_a) || !rate(kappa_s))
      throw std::invalid_argument("SeirParams: calibration rates must be non-negative");
    if (kappa_a + kappa_s <= 0.0)
      throw std::invalid_argument("SeirParams: kappa_a + kappa_s must be positive");
    if (!rate(fixed.presymptomatic_rate) || !rate(fixed.hospital_rate) ||
        !rate(fixed.recovery_rate) || !rate(fixed.detection_rate()))
      throw std::invalid_argument("SeirParams: fixed rates must be non-negative");
    if (!frac(fixed.severe_fraction) || !frac(fixed.detect_fraction) ||
        !frac(fixed.detected_infectiousness) || !frac(fixed.critical_fraction) ||
        !frac(fixed.death_fraction))
      throw std::invalid_argument("SeirParams: fractions must lie in [0,1]");
    if (fixed.population < 1) throw std::invalid_argument("SeirParams: population must be >= 1");
    if (fixed.initial_exposed < 0 || fixed.initial_exposed > fixed.population)
      throw std::invalid_argument("SeirParams: initial exposed out of range");
  }
};

/// Affine map between the optimizer's unit cube and the physical ranges of
/// (beta, kappa_a, kappa_s).
struct ParamRanges {
  Eigen::Vector3d lo = Eigen::Vector3d(0.1, 0.1, 0.1);
  Eigen::Vector3d hi = Eigen::Vector3d(1.0, 0.5, 0.5);

  SeirParams from_unit_cube(const Eigen::Vector3d& u, const SeirFixedParams& fixed = {}) const {
    for (int i = 0; i < 3; ++i)
      if (u(i) < 0.0 || u(i) > 1.0)
        throw std::invalid_argument("from_unit_cube: coordinates must lie in [0,1]");
    SeirParams p;
    p.beta = lo(0) + u(0) * (hi(0) - lo(0));
    p.kappa_a = lo(1) + u(1) * (hi(1) - lo(1));
    p.kappa_s = lo(2) + u(2) * (hi(2) - lo(2));
    p.fixed = fixed;
    return p;
  }

  Eigen::Vector3d to_unit_cube(const SeirParams& p) const {
    const Eigen::Vector3d v(p.beta, p.kappa_a, p.kappa_s);
    for (int i = 0; i < 3; ++i)
      if (v(i) < lo(i) - 1e-12 || v(i) > hi(i) + 1e-12)
        throw std::invalid_argument("to_unit_cube: parameter outside its configured range");
    return (v - lo).cwiseQuotient(hi - lo);
  }
};

/// Integer occupancy of the fifteen compartments plus the two accumulators.
/// Subscript u/d marks undetected/detected. D always equals cum_death.
struct CompartmentState {
  std::int64_t s = 0, e = 0;
  std::int64_t as_u = 0, as_d = 0; // asymptomatic
  std::int64_t p_u = 0, p_d = 0;   // presymptomatic
  std::int64_t sm_u = 0, sm_d = 0; // mild symptomatic
  std::int64_t ss_u = 0, ss_d = 0; // severe symptomatic
  std::int64_t h = 0, c = 0, hp = 0, d = 0, r = 0;
  std::int64_t cum_hosp = 0, cum_death = 0;

  std::int64_t total() const {
    return s + e + as_u + as_d + p_u + p_d + sm_u + sm_d + ss_u + ss_d + h + c + hp + d + r;
  }
};

/// One simulator run: the physical calibration inputs, the seed, and the
/// cumulative hospitalization/death counts at the output days.
struct Trajectory {
  Eigen::Vector3d x = Eigen::Vector3d::Zero(); // (beta, kappa_a, kappa_s)
  int seed = 0;
  std::vector<int> times;
  Eigen::VectorXd hosp;
  Eigen::VectorXd death;
};

namespace detail {

/// Inverse-CDF binomial draw from a single uniform: the smallest k with
/// P(X <= k) >= u. One uniform per flow keeps runs under a common seed
/// synchronized across nearby parameter values.
inline std::int64_t inv_binomial(std::int64_t n, double p, double u) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  using policy_t =
      boost::math::policies::policy<boost::math::policies::discrete_quantile<
          boost::math::policies::integer_round_up>>;
  const boost::math::binomial_distribution<double, policy_t> dist(static_cast<double>(n), p);
  const double uu = std::clamp(u, 1e-300, 1.0 - 1e-16);
  const double k = boost::math::quantile(dist, uu);
  return std::clamp(static_cast<std::int64_t>(k), std::int64_t{0}, n);
}

inline double exit_probability(double rate) { return -std::expm1(-rate); }

/// Splits movers among destinations proportionally to their rates via
/// sequential conditional binomials. Always consumes rates.size()-1
/// uniforms, so the stream layout does not depend on the counts.
inline void split_flow(std::int64_t movers, std::initializer_list<double> rates,
                       std::initializer_list<std::int64_t*> sinks, Rng& rng) {
  double remaining = 0.0;
  for (double r : rates) remaining += r;
  auto rate_it = rates.begin();
  auto sink_it = sinks.begin();
  const size_t m = rates.size();
  for (size_t i = 0; i + 1 < m; ++i, ++rate_it, ++sink_it) {
    const double u = canonical(rng);
    const double q = remaining > 0.0 ? *rate_it / remaining : 0.0;
    const std::int64_t taken = inv_binomial(movers, q, u);
    **sink_it += taken;
    movers -= taken;
    remaining -= *rate_it;
  }
  **sink_it += movers;
}

}  // namespace detail

/// Advances the state by one day. Flows are drawn synchronously from the
/// day-start state: each compartment's outflow is Binomial(n, 1-exp(-rate))
/// and is split among competing destinations by rate-proportional
/// multinomials. Consumes a fixed number of uniforms per call.
inline CompartmentState step(const CompartmentState& cur, const SeirParams& params, Rng& rng) {
  const auto& fx = params.fixed;
  const double detect = fx.detection_rate();
  const double infectious_weight =
      static_cast<double>(cur.as_u + cur.p_u + cur.sm_u + cur.ss_u) +
      fx.detected_infectiousness * static_cast<double>(cur.as_d + cur.p_d + cur.sm_d + cur.ss_d);
  const double lambda =
      params.beta * infectious_weight / static_cast<double>(fx.population);

  CompartmentState next = cur;
  auto outflow = [&](std::int64_t n, double rate) {
    return detail::inv_binomial(n, detail::exit_probability(rate), canonical(rng));
  };

  // S -> E
  {
    const std::int64_t m = outflow(cur.s, lambda);
    next.s -= m;
    next.e += m;
  }
  // E -> {As_u, P_u} at competing rates kappa_a / kappa_s
  {
    const std::int64_t m = outflow(cur.e, params.kappa_a + params.kappa_s);
    next.e -= m;
    detail::split_flow(m, {params.kappa_a, params.kappa_s}, {&next.as_u, &next.p_u}, rng);
  }
  // As_u -> {R, As_d}
  {
    const std::int64_t m = outflow(cur.as_u, fx.recovery_rate + detect);
    next.as_u -= m;
    detail::split_flow(m, {fx.recovery_rate, detect}, {&next.r, &next.as_d}, rng);
  }
  // As_d -> R
  {
    const std::int64_t m = outflow(cur.as_d, fx.recovery_rate);
    next.as_d -= m;
    next.r += m;
  }
  // P_u -> {Sm_u, Ss_u, P_d}
  {
    const double symp = fx.presymptomatic_rate;
    const std::int64_t m = outflow(cur.p_u, symp + detect);
    next.p_u -= m;
    detail::split_flow(m, {symp * (1.0 - fx.severe_fraction), symp * fx.severe_fraction, detect},
                       {&next.sm_u, &next.ss_u, &next.p_d}, rng);
  }
  // P_d -> {Sm_d, Ss_d}
  {
    const std::int64_t m = outflow(cur.p_d, fx.presymptomatic_rate);
    next.p_d -= m;
    detail::split_flow(m,
                       {fx.presymptomatic_rate * (1.0 - fx.severe_fraction),
                        fx.presymptomatic_rate * fx.severe_fraction},
                       {&next.sm_d, &next.ss_d}, rng);
  }
  // Sm_u -> {R, Sm_d}
  {
    const std::int64_t m = outflow(cur.sm_u, fx.recovery_rate + detect);
    next.sm_u -= m;
    detail::split_flow(m, {fx.recovery_rate, detect}, {&next.r, &next.sm_d}, rng);
  }
  // Sm_d -> R
  {
    const std::int64_t m = outflow(cur.sm_d, fx.recovery_rate);
    next.sm_d -= m;
    next.r += m;
  }
  // Ss_u -> {H, Ss_d}
  {
    const std::int64_t m = outflow(cur.ss_u, fx.hospital_rate + detect);
    next.ss_u -= m;
    std::int64_t to_h = 0;
    detail::split_flow(m, {fx.hospital_rate, detect}, {&to_h, &next.ss_d}, rng);
    next.h += to_h;
    next.cum_hosp += to_h;
  }
  // Ss_d -> H
  {
    const std::int64_t m = outflow(cur.ss_d, fx.hospital_rate);
    next.ss_d -= m;
    next.h += m;
    next.cum_hosp += m;
  }
  // H -> {C, R}
  {
    const std::int64_t m = outflow(cur.h, fx.recovery_rate);
    next.h -= m;
    detail::split_flow(m, {fx.critical_fraction, 1.0 - fx.critical_fraction}, {&next.c, &next.r},
                       rng);
  }
  // C -> {D, Hp}
  {
    const std::int64_t m = outflow(cur.c, fx.recovery_rate);
    next.c -= m;
    std::int64_t to_d = 0;
    detail::split_flow(m, {fx.death_fraction, 1.0 - fx.death_fraction}, {&to_d, &next.hp}, rng);
    next.d += to_d;
    next.cum_death += to_d;
  }
  // Hp -> R
  {
    const std::int64_t m = outflow(cur.hp, fx.recovery_rate);
    next.hp -= m;
    next.r += m;
  }
  return next;
}

/// Daily states from day 0 (initial) through horizon_days, inclusive.
/// Bitwise deterministic given (params, seed).
inline std::vector<CompartmentState> simulate_daily(const SeirParams& params, int seed,
                                                    int horizon_days) {
  params.validate();
  if (horizon_days < 0) throw std::invalid_argument("simulate: negative horizon");
  CompartmentState state;
  state.s = params.fixed.population - params.fixed.initial_exposed;
  state.e = params.fixed.initial_exposed;
  std::vector<CompartmentState> days;
  days.reserve(horizon_days + 1);
  days.push_back(state);
  Rng rng(static_cast<std::uint64_t>(static_cast<std::uint32_t>(seed)));
  for (int day = 1; day <= horizon_days; ++day) {
    state = step(state, params, rng);
    days.push_back(state);
  }
  return days;
}

inline Trajectory simulate(const SeirParams& params, int seed, int horizon_days,
                           const std::vector<int>& output_times) {
  if (output_times.empty()) throw std::invalid_argument("simulate: no output times");
  for (size_t i = 0; i < output_times.size(); ++i) {
    if (output_times[i] < 0 || output_times[i] > horizon_days)
      throw std::invalid_argument("simulate: output times must lie within the horizon");
    if (i > 0 && output_times[i] <= output_times[i - 1])
      throw std::invalid_argument("simulate: output times must be sorted ascending");
  }
  const auto days = simulate_daily(params, seed, horizon_days);
  Trajectory traj;
  traj.x = Eigen::Vector3d(params.beta, params.kappa_a, params.kappa_s);
  traj.seed = seed;
  traj.times = output_times;
  traj.hosp.resize(static_cast<int>(output_times.size()));
  traj.death.resize(static_cast<int>(output_times.size()));
  for (size_t j = 0; j < output_times.size(); ++j) {
    const auto& st = days[static_cast<size_t>(output_times[j])];
    traj.hosp(static_cast<int>(j)) = static_cast<double>(st.cum_hosp);
    traj.death(static_cast<int>(j)) = static_cast<double>(st.cum_death);
  }
  return traj;
}

inline void write_trajectory_csv_header(std::ostream& os) {
  os << "run_id,seed,x1,x2,x3,t,cum_hosp,cum_death\n";
}

/// One CSV row per output time: run_id, seed, x1..x3, t, cum_hosp, cum_death.
inline void write_trajectory_csv_rows(std::ostream& os, const Trajectory& traj, int run_id) {
  for (size_t j = 0; j < traj.times.size(); ++j) {
    os << run_id << ',' << traj.seed;
    for (int i = 0; i < 3; ++i) os << ',' << format_double(traj.x(i));
    os << ',' << traj.times[j] << ',' << format_double(traj.hosp(static_cast<int>(j))) << ','
       << format_double(traj.death(static_cast<int>(j))) << '\n';
  }
}

}  // namespace too::seir
