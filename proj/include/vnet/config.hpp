#pragma once

#include <cstdint>
#include <string>

namespace vnet {

// Physical and QoS constants of the simulated vehicular network.
// Shipped defaults match the reference parameter set.
struct NetworkConfig {
  double area_side_m = 1000.0;
  int num_gnbs = 3;      // M
  int num_vehicles = 5;  // N
  int prbs_per_gnb = 273;  // W_m
  double tx_power_w = 100.0;          // 50 dBm
  double noise_power_w = 1.4e-15;     // sigma^2
  double prb_bandwidth_hz = 3.6e5;
  double urllc_delay_max_s = 0.015;   // T_th
  double embb_rate_min_bps = 20e6;    // R_th
  double vehicle_speed_mps = 15.0;
  double pathloss_exponent = 3.5;
  double urllc_demand_bits = 3e5;     // D
  double fixed_delay_s = 0.0015;      // processing + scheduling
  double slot_duration_s = 1.0;
  double weight_urllc = 1.0;
  double weight_embb = 1.0;
  // Single penalty term is clipped here so an unserved URLLC vehicle
  // (rate 0, delay +inf) still yields a finite reward.
  double penalty_cap = 10.0;
  // Observation normalization constants (episode-independent).
  double speed_norm_mps = 30.0;
  // Optional log-normal shadowing, off by default.
  bool shadowing_enabled = false;
  double shadowing_sigma_db = 4.0;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// Training hyperparameters; the reference work leaves these unspecified,
// values below are the artifact defaults.
struct TrainConfig {
  double gamma = 0.99;
  int batch_size = 64;       // K
  double tau = 0.005;
  int buffer_capacity = 100000;
  double noise_sigma0 = 0.2;
  double noise_sigma_min = 0.01;
  double noise_decay = 0.995;
  int episodes = 300;        // E
  int steps_per_episode = 100;  // T
  double lambda_explain = 0.1;
  int eval_interval = 10;    // N_eval, in episodes
  int shapley_samples = 32;  // M, permutations per supervised state
  int rollout_horizon = 10;  // H
  int rollouts_per_coalition = 3;  // k
  int explain_states = 4;    // states sampled per supervision pass
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  int hidden1 = 256;
  int hidden2 = 128;
  // Baseline switches: attention disabled -> plain DDPG (alpha fixed
  // uniform); lambda_explain = 0 -> attention-DDPG without Shapley
  // supervision.
  bool attention_enabled = true;

  void validate() const;
};

struct RunProfile {
  NetworkConfig network;
  TrainConfig train;
};

// Loads a profile ("paper", "desk", "smoke") from a JSON config file.
// Unknown keys are rejected; missing keys keep the defaults above.
RunProfile load_profile(const std::string& path, const std::string& profile);

// JSON snapshot of a profile (used by run manifests).
std::string profile_to_json(const RunProfile& p);

std::string network_config_to_json(const NetworkConfig& c);
NetworkConfig network_config_from_json(const std::string& text);
std::string train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const std::string& text);

}  // namespace vnet
