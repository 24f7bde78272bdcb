#include "flexagg/mpc.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>

namespace flexagg {

namespace {

Eigen::VectorXd slice(const Eigen::VectorXd& v, int start, int count) {
  if (v.size() == 0) return v;
  return v.segment(start, count);
}

CostConfig slice_cost(const CostConfig& cost, int start, int count) {
  CostConfig w = cost;
  w.price = slice(cost.price, start, count);
  w.reward_up = slice(cost.reward_up, start, count);
  w.reward_down = slice(cost.reward_down, start, count);
  return w;
}

void append_num(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

Fleet slice_fleet(const Fleet& fleet, int start, int count,
                  const std::map<std::string, double>& soc_init,
                  const std::map<std::string, double>& temp_init) {
  Fleet out = fleet;
  for (auto& u : out.pv) {
    u.p_lower = u.p_lower.middleRows(start, count).eval();
    u.p_upper = u.p_upper.middleRows(start, count).eval();
    u.s_cap = u.s_cap.middleRows(start, count).eval();
  }
  for (auto& u : out.storage) {
    u.p_lower = u.p_lower.middleRows(start, count).eval();
    u.p_upper = u.p_upper.middleRows(start, count).eval();
    u.s_cap = u.s_cap.middleRows(start, count).eval();
    auto it = soc_init.find(u.id);
    if (it != soc_init.end()) u.e_init = it->second;
  }
  for (auto& u : out.loads) {
    u.p_lower = u.p_lower.middleRows(start, count).eval();
    u.p_upper = u.p_upper.middleRows(start, count).eval();
  }
  for (auto& u : out.hvac) {
    u.p_upper = u.p_upper.middleRows(start, count).eval();
    if (u.f_out.size() > 0) u.f_out = u.f_out.segment(start, count).eval();
    auto it = temp_init.find(u.id);
    if (it != temp_init.end()) u.f_init = it->second;
  }
  return out;
}

double sample_regulation(double lower, double upper, double base, const RegulationPolicy& policy,
                         Rng& rng) {
  switch (policy.mode) {
    case RegulationPolicy::Mode::gaussian_around_base: {
      const double sigma = policy.sigma >= 0.0 ? policy.sigma : 0.1 * (upper - lower);
      return std::clamp(base + sigma * rng.gaussian(), lower, upper);
    }
    case RegulationPolicy::Mode::uniform_in_interval:
      return lower + rng.uniform01() * (upper - lower);
    case RegulationPolicy::Mode::fixed_series:
      return std::clamp(base, lower, upper);
  }
  return base;
}

InteractionLog run_interaction(const FeederModel& feeder, const LinearPfModel& lin,
                               const Fleet& fleet, const Scenario& scenario,
                               const CostConfig& cost, const InteractionConfig& config) {
  if (config.t_d < 1 || config.t_d > config.t_p) throw ParseError("config", "need 1 <= t_d <= t_p");
  const int total =
      config.total_steps >= 0 ? config.total_steps : scenario.steps - config.t_p;
  if (total < config.t_d) throw ParseError("config", "no executable steps in the scenario");
  const int last_start = ((total - 1) / config.t_d) * config.t_d;
  if (last_start + config.t_p > scenario.steps)
    throw ParseError("config", "scenario must cover the horizon plus the planning lookahead");

  Rng rng(config.seed);
  InteractionLog log;
  log.dt_hours = scenario.dt_hours;
  log.base_kva = feeder.base_kva;

  std::map<std::string, double> soc;
  std::map<std::string, double> temp;
  for (const auto& u : fleet.storage) soc[u.id] = u.e_init;
  for (const auto& u : fleet.hvac) temp[u.id] = u.f_init;

  for (int start = 0, round = 0; start < total; start += config.t_d, ++round) {
    const int exec = std::min(config.t_d, total - start);
    InteractionRound rec;
    rec.round = round;
    rec.start_step = start;
    try {
      const Fleet plan_fleet = slice_fleet(fleet, start, config.t_p, soc, temp);
      const Scenario plan_scenario = scenario.slice(start, config.t_p);
      const CostConfig plan_cost = slice_cost(cost, start, config.t_p);
      const CompactModel plan_model = build_compact_model(feeder, lin, plan_fleet, plan_scenario);
      const FlexibilityEnvelope env = solve_epa(plan_model, plan_cost, config.agg);

      rec.price = plan_cost.price;
      rec.reward_up = plan_cost.reward_up;
      rec.reward_down = plan_cost.reward_down;
      rec.interval_lower = env.p_lower;
      rec.interval_upper = env.p_upper;
      rec.base = *env.p_base;

      rec.command.resize(exec);
      for (int j = 0; j < exec; ++j) {
        const double fixed = config.policy.fixed.size() > start + j
                                 ? config.policy.fixed[start + j]
                                 : (*env.p_base)[j];
        const double center = config.policy.mode == RegulationPolicy::Mode::fixed_series
                                  ? fixed
                                  : (*env.p_base)[j];
        rec.command[j] =
            sample_regulation(env.p_lower[j], env.p_upper[j], center, config.policy, rng);
      }

      const Fleet exec_fleet = slice_fleet(fleet, start, exec, soc, temp);
      const Scenario exec_scenario = scenario.slice(start, exec);
      const CostConfig exec_cost = slice_cost(cost, start, exec);
      const CompactModel exec_model = build_compact_model(feeder, lin, exec_fleet, exec_scenario);
      const Eigen::VectorXd rho = Eigen::VectorXd::Constant(exec, config.tracking_rho);
      const PdSolution pd = solve_pd(exec_model, exec_cost, rec.command, rho, config.agg);

      rec.executed_x = pd.x;
      rec.executed_p0 = pd.achieved_p0;
      rec.cost = trajectory_cost(exec_model, exec_cost, pd.x);
      for (int j = 0; j < exec; ++j)
        rec.reward += exec_cost.reward_up_at(j) * (env.p_upper[j] - (*env.p_base)[j]) +
                      exec_cost.reward_down_at(j) * ((*env.p_base)[j] - env.p_lower[j]);

      // advance device states along the executed trajectory
      for (const auto& u : exec_fleet.storage) {
        Eigen::VectorXd p(exec);
        for (int j = 0; j < exec; ++j) {
          double sum = 0.0;
          for (int s = 0; s < 3; ++s) {
            if (!u.conn.slots[static_cast<std::size_t>(s)]) continue;
            sum += pd.x[static_cast<std::size_t>(j)]
                       [exec_model.layout.index_of(u.id, s, false)];
          }
          p[j] = sum;
        }
        soc[u.id] = soc_trajectory(u, p, scenario.dt_hours)[exec - 1];
        rec.soc_after[u.id] = soc[u.id];
      }
      for (const auto& u : exec_fleet.hvac) {
        Eigen::VectorXd p(exec);
        for (int j = 0; j < exec; ++j) {
          double sum = 0.0;
          for (int s = 0; s < 3; ++s) {
            if (!u.conn.slots[static_cast<std::size_t>(s)]) continue;
            sum -= pd.x[static_cast<std::size_t>(j)]
                       [exec_model.layout.index_of(u.id, s, false)];
          }
          p[j] = sum;
        }
        temp[u.id] = temp_trajectory(u, p, scenario.dt_hours)[exec - 1];
        rec.temp_after[u.id] = temp[u.id];
      }
    } catch (const InfeasibleError& e) {
      throw InfeasibleError("round " + std::to_string(round) + ": " + e.what());
    }
    log.total_cost += rec.cost;
    log.total_reward += rec.reward;
    log.rounds.push_back(std::move(rec));
  }
  return log;
}

std::string InteractionLog::steps_csv() const {
  std::string out =
      "round,step,price,reward_up,reward_down,interval_lower_kw,base_kw,interval_upper_kw,"
      "command_kw,executed_kw\n";
  for (const auto& r : rounds) {
    for (int j = 0; j < r.command.size(); ++j) {
      out += std::to_string(r.round);
      out += ',';
      out += std::to_string(r.start_step + j);
      for (double v :
           {r.price.size() ? r.price[j] : 0.0, r.reward_up.size() ? r.reward_up[j] : 0.0,
            r.reward_down.size() ? r.reward_down[j] : 0.0, r.interval_lower[j] * base_kva,
            r.base[j] * base_kva, r.interval_upper[j] * base_kva, r.command[j] * base_kva,
            r.executed_p0[j] * base_kva}) {
        out += ',';
        append_num(out, v);
      }
      out += '\n';
    }
  }
  return out;
}

std::string InteractionLog::states_csv() const {
  std::string out = "round,device,kind,value\n";
  for (const auto& r : rounds) {
    for (const auto& [id, v] : r.soc_after) {
      out += std::to_string(r.round) + ',' + id + ",soc_kwh,";
      append_num(out, v * base_kva);
      out += '\n';
    }
    for (const auto& [id, v] : r.temp_after) {
      out += std::to_string(r.round) + ',' + id + ",temp_c,";
      append_num(out, v);
      out += '\n';
    }
  }
  return out;
}

MonteCarloStats monte_carlo_feasibility(const CompactModel& model,
                                        const FlexibilityEnvelope& envelope, int n, Rng& rng) {
  MonteCarloStats stats;
  const auto t0 = std::chrono::steady_clock::now();
  const int T = envelope.steps();
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd target(T);
    for (int t = 0; t < T; ++t)
      target[t] = envelope.p_lower[t] +
                  rng.uniform01() * (envelope.p_upper[t] - envelope.p_lower[t]);
    const auto sol = disaggregate(envelope, target);
    const auto report = verify_feasibility(model, sol.x, 1e-6);
    ++stats.samples;
    if (report.feasible) ++stats.feasible;
    stats.max_violation = std::max(stats.max_violation, report.worst.magnitude);
  }
  stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return stats;
}

}  // namespace flexagg
