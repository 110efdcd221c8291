#include "vnet/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace vnet {

using nlohmann::json;

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

using NetSetter = std::function<void(NetworkConfig&, const json&)>;
using TrainSetter = std::function<void(TrainConfig&, const json&)>;

const std::map<std::string, NetSetter>& net_setters() {
  static const std::map<std::string, NetSetter> m = {
      {"area_side_m", [](NetworkConfig& c, const json& v) { c.area_side_m = v; }},
      {"num_gnbs", [](NetworkConfig& c, const json& v) { c.num_gnbs = v; }},
      {"num_vehicles", [](NetworkConfig& c, const json& v) { c.num_vehicles = v; }},
      {"prbs_per_gnb", [](NetworkConfig& c, const json& v) { c.prbs_per_gnb = v; }},
      {"tx_power_w", [](NetworkConfig& c, const json& v) { c.tx_power_w = v; }},
      {"noise_power_w", [](NetworkConfig& c, const json& v) { c.noise_power_w = v; }},
      {"prb_bandwidth_hz", [](NetworkConfig& c, const json& v) { c.prb_bandwidth_hz = v; }},
      {"urllc_delay_max_s", [](NetworkConfig& c, const json& v) { c.urllc_delay_max_s = v; }},
      {"embb_rate_min_bps", [](NetworkConfig& c, const json& v) { c.embb_rate_min_bps = v; }},
      {"vehicle_speed_mps", [](NetworkConfig& c, const json& v) { c.vehicle_speed_mps = v; }},
      {"pathloss_exponent", [](NetworkConfig& c, const json& v) { c.pathloss_exponent = v; }},
      {"urllc_demand_bits", [](NetworkConfig& c, const json& v) { c.urllc_demand_bits = v; }},
      {"fixed_delay_s", [](NetworkConfig& c, const json& v) { c.fixed_delay_s = v; }},
      {"slot_duration_s", [](NetworkConfig& c, const json& v) { c.slot_duration_s = v; }},
      {"weight_urllc", [](NetworkConfig& c, const json& v) { c.weight_urllc = v; }},
      {"weight_embb", [](NetworkConfig& c, const json& v) { c.weight_embb = v; }},
      {"penalty_cap", [](NetworkConfig& c, const json& v) { c.penalty_cap = v; }},
      {"speed_norm_mps", [](NetworkConfig& c, const json& v) { c.speed_norm_mps = v; }},
      {"shadowing_enabled", [](NetworkConfig& c, const json& v) { c.shadowing_enabled = v; }},
      {"shadowing_sigma_db", [](NetworkConfig& c, const json& v) { c.shadowing_sigma_db = v; }},
  };
  return m;
}

const std::map<std::string, TrainSetter>& train_setters() {
  static const std::map<std::string, TrainSetter> m = {
      {"gamma", [](TrainConfig& c, const json& v) { c.gamma = v; }},
      {"batch_size", [](TrainConfig& c, const json& v) { c.batch_size = v; }},
      {"tau", [](TrainConfig& c, const json& v) { c.tau = v; }},
      {"buffer_capacity", [](TrainConfig& c, const json& v) { c.buffer_capacity = v; }},
      {"noise_sigma0", [](TrainConfig& c, const json& v) { c.noise_sigma0 = v; }},
      {"noise_sigma_min", [](TrainConfig& c, const json& v) { c.noise_sigma_min = v; }},
      {"noise_decay", [](TrainConfig& c, const json& v) { c.noise_decay = v; }},
      {"episodes", [](TrainConfig& c, const json& v) { c.episodes = v; }},
      {"steps_per_episode", [](TrainConfig& c, const json& v) { c.steps_per_episode = v; }},
      {"lambda_explain", [](TrainConfig& c, const json& v) { c.lambda_explain = v; }},
      {"eval_interval", [](TrainConfig& c, const json& v) { c.eval_interval = v; }},
      {"shapley_samples", [](TrainConfig& c, const json& v) { c.shapley_samples = v; }},
      {"rollout_horizon", [](TrainConfig& c, const json& v) { c.rollout_horizon = v; }},
      {"rollouts_per_coalition", [](TrainConfig& c, const json& v) { c.rollouts_per_coalition = v; }},
      {"explain_states", [](TrainConfig& c, const json& v) { c.explain_states = v; }},
      {"actor_lr", [](TrainConfig& c, const json& v) { c.actor_lr = v; }},
      {"critic_lr", [](TrainConfig& c, const json& v) { c.critic_lr = v; }},
      {"adam_beta1", [](TrainConfig& c, const json& v) { c.adam_beta1 = v; }},
      {"adam_beta2", [](TrainConfig& c, const json& v) { c.adam_beta2 = v; }},
      {"hidden1", [](TrainConfig& c, const json& v) { c.hidden1 = v; }},
      {"hidden2", [](TrainConfig& c, const json& v) { c.hidden2 = v; }},
      {"attention_enabled", [](TrainConfig& c, const json& v) { c.attention_enabled = v; }},
  };
  return m;
}

}  // namespace

void NetworkConfig::validate() const {
  require(num_gnbs >= 1, "num_gnbs must be >= 1");
  require(num_vehicles >= 1, "num_vehicles must be >= 1");
  require(area_side_m > 0, "area_side_m must be > 0");
  require(prbs_per_gnb > 0, "prbs_per_gnb must be > 0");
  require(tx_power_w > 0, "tx_power_w must be > 0");
  require(noise_power_w > 0, "noise_power_w must be > 0");
  require(prb_bandwidth_hz > 0, "prb_bandwidth_hz must be > 0");
  require(urllc_delay_max_s > 0, "urllc_delay_max_s must be > 0");
  require(embb_rate_min_bps > 0, "embb_rate_min_bps must be > 0");
  require(vehicle_speed_mps > 0, "vehicle_speed_mps must be > 0");
  require(pathloss_exponent > 0, "pathloss_exponent must be > 0");
  require(urllc_demand_bits > 0, "urllc_demand_bits must be > 0");
  require(fixed_delay_s > 0, "fixed_delay_s must be > 0");
  require(slot_duration_s > 0, "slot_duration_s must be > 0");
  require(weight_urllc >= 0, "weight_urllc must be >= 0");
  require(weight_embb >= 0, "weight_embb must be >= 0");
  require(penalty_cap > 0, "penalty_cap must be > 0");
  require(speed_norm_mps >= vehicle_speed_mps,
          "speed_norm_mps must be >= vehicle_speed_mps");
  // Otherwise every URLLC slot violates unconditionally.
  require(urllc_delay_max_s > fixed_delay_s,
          "urllc_delay_max_s must exceed fixed_delay_s");
}

void TrainConfig::validate() const {
  require(gamma > 0 && gamma < 1, "gamma must be in (0,1)");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(batch_size <= buffer_capacity, "batch_size must be <= buffer_capacity");
  require(tau >= 0 && tau <= 1, "tau must be in [0,1]");
  require(noise_sigma0 >= 0, "noise_sigma0 must be >= 0");
  require(noise_decay > 0 && noise_decay <= 1, "noise_decay must be in (0,1]");
  require(episodes >= 1, "episodes must be >= 1");
  require(steps_per_episode >= 1, "steps_per_episode must be >= 1");
  require(lambda_explain >= 0, "lambda_explain must be >= 0");
  require(eval_interval >= 1, "eval_interval must be >= 1");
  require(shapley_samples >= 1, "shapley_samples must be >= 1");
  require(rollout_horizon >= 0, "rollout_horizon must be >= 0");
  require(rollouts_per_coalition >= 1, "rollouts_per_coalition must be >= 1");
  require(explain_states >= 1, "explain_states must be >= 1");
  require(actor_lr > 0, "actor_lr must be > 0");
  require(critic_lr > 0, "critic_lr must be > 0");
  require(hidden1 >= 1 && hidden2 >= 1, "hidden sizes must be >= 1");
}

RunProfile load_profile(const std::string& path, const std::string& profile) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config file not found: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::invalid_argument("config parse error in " + path + ": " + e.what());
  }
  if (!doc.contains("profiles") || !doc["profiles"].contains(profile))
    throw std::invalid_argument("profile not found in config: " + profile);
  const json& p = doc["profiles"][profile];

  RunProfile out;
  if (p.contains("network")) {
    for (auto it = p["network"].begin(); it != p["network"].end(); ++it) {
      auto s = net_setters().find(it.key());
      if (s == net_setters().end())
        throw std::invalid_argument("unknown network config key: " + it.key());
      s->second(out.network, it.value());
    }
  }
  if (p.contains("train")) {
    for (auto it = p["train"].begin(); it != p["train"].end(); ++it) {
      auto s = train_setters().find(it.key());
      if (s == train_setters().end())
        throw std::invalid_argument("unknown train config key: " + it.key());
      s->second(out.train, it.value());
    }
  }
  for (auto it = p.begin(); it != p.end(); ++it) {
    if (it.key() != "network" && it.key() != "train")
      throw std::invalid_argument("unknown profile section: " + it.key());
  }
  out.network.validate();
  out.train.validate();
  return out;
}

namespace {

json network_json(const NetworkConfig& n) {
  return json{
      {"area_side_m", n.area_side_m},
      {"num_gnbs", n.num_gnbs},
      {"num_vehicles", n.num_vehicles},
      {"prbs_per_gnb", n.prbs_per_gnb},
      {"tx_power_w", n.tx_power_w},
      {"noise_power_w", n.noise_power_w},
      {"prb_bandwidth_hz", n.prb_bandwidth_hz},
      {"urllc_delay_max_s", n.urllc_delay_max_s},
      {"embb_rate_min_bps", n.embb_rate_min_bps},
      {"vehicle_speed_mps", n.vehicle_speed_mps},
      {"pathloss_exponent", n.pathloss_exponent},
      {"urllc_demand_bits", n.urllc_demand_bits},
      {"fixed_delay_s", n.fixed_delay_s},
      {"slot_duration_s", n.slot_duration_s},
      {"weight_urllc", n.weight_urllc},
      {"weight_embb", n.weight_embb},
      {"penalty_cap", n.penalty_cap},
      {"speed_norm_mps", n.speed_norm_mps},
      {"shadowing_enabled", n.shadowing_enabled},
      {"shadowing_sigma_db", n.shadowing_sigma_db},
  };
}

json train_json(const TrainConfig& t) {
  return json{
      {"gamma", t.gamma},
      {"batch_size", t.batch_size},
      {"tau", t.tau},
      {"buffer_capacity", t.buffer_capacity},
      {"noise_sigma0", t.noise_sigma0},
      {"noise_sigma_min", t.noise_sigma_min},
      {"noise_decay", t.noise_decay},
      {"episodes", t.episodes},
      {"steps_per_episode", t.steps_per_episode},
      {"lambda_explain", t.lambda_explain},
      {"eval_interval", t.eval_interval},
      {"shapley_samples", t.shapley_samples},
      {"rollout_horizon", t.rollout_horizon},
      {"rollouts_per_coalition", t.rollouts_per_coalition},
      {"explain_states", t.explain_states},
      {"actor_lr", t.actor_lr},
      {"critic_lr", t.critic_lr},
      {"adam_beta1", t.adam_beta1},
      {"adam_beta2", t.adam_beta2},
      {"hidden1", t.hidden1},
      {"hidden2", t.hidden2},
      {"attention_enabled", t.attention_enabled},
  };
}

}  // namespace

std::string profile_to_json(const RunProfile& p) {
  json j;
  j["network"] = network_json(p.network);
  j["train"] = train_json(p.train);
  return j.dump(2);
}

std::string network_config_to_json(const NetworkConfig& c) {
  return network_json(c).dump();
}

NetworkConfig network_config_from_json(const std::string& text) {
  const json j = json::parse(text);
  NetworkConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto s = net_setters().find(it.key());
    if (s == net_setters().end())
      throw std::invalid_argument("unknown network config key: " + it.key());
    s->second(c, it.value());
  }
  c.validate();
  return c;
}

std::string train_config_to_json(const TrainConfig& c) {
  return train_json(c).dump();
}

TrainConfig train_config_from_json(const std::string& text) {
  const json j = json::parse(text);
  TrainConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto s = train_setters().find(it.key());
    if (s == train_setters().end())
      throw std::invalid_argument("unknown train config key: " + it.key());
    s->second(c, it.value());
  }
  c.validate();
  return c;
}

}  // namespace vnet
