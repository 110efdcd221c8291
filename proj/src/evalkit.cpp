#include "vnet/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vnet {

QosResult qos_satisfaction(const EvalSeries& series) {
  if (series.records.empty())
    throw std::invalid_argument("qos_satisfaction: empty series");
  QosResult r;
  for (const SlotVehicleRecord& rec : series.records) {
    if (rec.s_urllc) {
      ++r.urllc_opportunities;
      if (!rec.violated_urllc) ++r.urllc_satisfied;
    }
    if (rec.s_embb) {
      ++r.embb_opportunities;
      if (!rec.violated_embb) ++r.embb_satisfied;
    }
  }
  if (r.urllc_opportunities > 0)
    r.urllc_pct = 100.0 * r.urllc_satisfied / r.urllc_opportunities;
  if (r.embb_opportunities > 0)
    r.embb_pct = 100.0 * r.embb_satisfied / r.embb_opportunities;
  return r;
}

RelaxedAction random_policy(Rng& rng, int n, int m) {
  RelaxedAction a;
  a.n = n;
  a.m = m;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  a.q.resize(static_cast<size_t>(n) * m);
  a.b.resize(static_cast<size_t>(n) * m);
  for (double& v : a.q) v = u(rng);
  for (double& v : a.b) v = u(rng);
  return a;
}

EvalSeries evaluate_policy(const NetworkConfig& nc, const ActionPolicy& policy,
                           int episodes, int steps, std::uint64_t master_seed) {
  EvalSeries series;
  for (int e = 0; e < episodes; ++e) {
    Environment env(nc, stream_seed(master_seed, "eval", e));
    std::vector<double> obs = env.observe();
    double total = 0.0;
    for (int t = 0; t < steps; ++t) {
      const StepOutcome out = env.step(policy(obs));
      total += out.reward;
      for (int i = 0; i < nc.num_vehicles; ++i) {
        const VehicleState& v = env.vehicles()[i];
        SlotVehicleRecord rec;
        rec.episode = e;
        rec.slot = t;
        rec.vehicle = i;
        rec.s_urllc = v.s_urllc;
        rec.s_embb = v.s_embb;
        rec.delay_s = out.delay_s[i];
        rec.rate_bps = out.rate_bps[i];
        rec.penalty_urllc = out.penalty_urllc[i];
        rec.penalty_embb = out.penalty_embb[i];
        rec.violated_urllc = out.violated_urllc[i];
        rec.violated_embb = out.violated_embb[i];
        rec.assoc = out.assoc[i];
        rec.prbs = out.prbs_used[i];
        series.records.push_back(rec);
      }
      obs = out.observation;
    }
    series.episode_rewards.push_back(total / steps);
  }
  return series;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("pearson: need two vectors of equal size >= 2");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> feature_stddev(const std::vector<std::vector<double>>& states) {
  if (states.empty()) throw std::invalid_argument("feature_stddev: no states");
  const size_t d = states[0].size();
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  for (const auto& s : states)
    for (size_t i = 0; i < d; ++i) mean[i] += s[i];
  for (double& m : mean) m /= static_cast<double>(states.size());
  for (const auto& s : states)
    for (size_t i = 0; i < d; ++i) {
      const double dv = s[i] - mean[i];
      var[i] += dv * dv;
    }
  std::vector<double> out(d);
  const double denom = std::max<size_t>(states.size() - 1, 1);
  for (size_t i = 0; i < d; ++i) out[i] = std::sqrt(var[i] / denom);
  return out;
}

FidelityReport fidelity_pearson(
    const std::function<std::vector<double>(const std::vector<double>&)>& action_fn,
    const std::function<std::vector<double>(const std::vector<double>&)>& importance_fn,
    const std::vector<std::vector<double>>& states,
    const std::vector<double>& deltas) {
  FidelityReport rep;
  for (const auto& s : states) {
    const std::vector<double> base = action_fn(s);
    const std::vector<double> importance = importance_fn(s);
    std::vector<double> response(s.size(), 0.0);
    for (size_t i = 0; i < s.size(); ++i) {
      if (deltas[i] == 0.0) continue;
      std::vector<double> pert = s;
      pert[i] += deltas[i];
      const std::vector<double> out = action_fn(pert);
      double norm = 0.0;
      for (size_t k = 0; k < out.size(); ++k) {
        const double dv = out[k] - base[k];
        norm += dv * dv;
      }
      response[i] = std::sqrt(norm);
    }
    const double r = pearson(importance, response);
    if (std::isnan(r)) {
      ++rep.states_skipped;
      continue;
    }
    rep.per_state_r.push_back(r);
  }
  rep.states_used = static_cast<int>(rep.per_state_r.size());
  if (rep.states_used > 0) {
    double total = 0.0;
    for (double r : rep.per_state_r) total += r;
    rep.mean_r = total / rep.states_used;
  }
  return rep;
}

std::vector<std::vector<double>> collect_states(const NetworkConfig& nc,
                                                const ActionPolicy& policy,
                                                int count, int steps,
                                                std::uint64_t master_seed) {
  std::vector<std::vector<double>> states;
  states.reserve(count);
  int episode = 0;
  while (static_cast<int>(states.size()) < count) {
    Environment env(nc, stream_seed(master_seed, "collect", episode++));
    std::vector<double> obs = env.observe();
    for (int t = 0; t < steps && static_cast<int>(states.size()) < count; ++t) {
      states.push_back(obs);
      obs = env.step(policy(obs)).observation;
    }
  }
  return states;
}

}  // namespace vnet
