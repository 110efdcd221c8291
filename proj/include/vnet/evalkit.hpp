#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vnet/agent.hpp"
#include "vnet/config.hpp"
#include "vnet/env.hpp"

namespace vnet {

struct SlotVehicleRecord {
  int episode = 0;
  int slot = 0;
  int vehicle = 0;
  bool s_urllc = false;
  bool s_embb = false;
  double delay_s = 0.0;
  double rate_bps = 0.0;
  double penalty_urllc = 0.0;
  double penalty_embb = 0.0;
  bool violated_urllc = false;
  bool violated_embb = false;
  int assoc = 0;
  int prbs = 0;
};

struct EvalSeries {
  std::vector<SlotVehicleRecord> records;
  std::vector<double> episode_rewards;
};

struct QosResult {
  long urllc_opportunities = 0;
  long urllc_satisfied = 0;
  long embb_opportunities = 0;
  long embb_satisfied = 0;
  // Percentages; nullopt when a slice had no opportunities.
  std::optional<double> urllc_pct;
  std::optional<double> embb_pct;
};

// Per-(vehicle, slot) opportunity convention.
QosResult qos_satisfaction(const EvalSeries& series);

RelaxedAction random_policy(Rng& rng, int n, int m);

using ActionPolicy = std::function<RelaxedAction(const std::vector<double>&)>;

// Noise-free evaluation over `episodes` fresh environments whose seeds are
// derived from `master_seed`; identical seeds across methods by design.
EvalSeries evaluate_policy(const NetworkConfig& nc, const ActionPolicy& policy,
                           int episodes, int steps, std::uint64_t master_seed);

struct ComparisonRow {
  std::string method;
  QosResult qos;
  double mean_reward = 0.0;
};

struct FidelityReport {
  std::vector<double> per_state_r;
  double mean_r = 0.0;
  int states_used = 0;
  int states_skipped = 0;
};

double pearson(const std::vector<double>& x, const std::vector<double>& y);

// Per-feature sample standard deviation over a state set.
std::vector<double> feature_stddev(const std::vector<std::vector<double>>& states);

// For each state: perturb each feature by its delta, measure the L2 change
// of the action vector, and correlate that response with the attention
// importance. States with a degenerate response or importance vector are
// skipped and tallied.
FidelityReport fidelity_pearson(
    const std::function<std::vector<double>(const std::vector<double>&)>& action_fn,
    const std::function<std::vector<double>(const std::vector<double>&)>& importance_fn,
    const std::vector<std::vector<double>>& states,
    const std::vector<double>& deltas);

// Collects states from noise-free policy rollouts (shared across methods
// when called with the same seed).
std::vector<std::vector<double>> collect_states(const NetworkConfig& nc,
                                                const ActionPolicy& policy,
                                                int count, int steps,
                                                std::uint64_t master_seed);

}  // namespace vnet
