#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "vnet/config.hpp"
#include "vnet/rng.hpp"

namespace vnet {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// Grid road topology: two vertical and two horizontal roads spanning the
// area, crossing at four primary intersections.
struct RoadGraph {
  struct Edge {
    int a;
    int b;
    double length;
  };
  std::vector<Vec2> nodes;
  std::vector<Edge> edges;
  std::vector<std::vector<int>> incident;  // node -> edge indices
  std::vector<bool> boundary;              // node on the area border

  static RoadGraph build(const NetworkConfig& cfg);
};

// Position on the road graph: distance `offset` traveled along `edge`
// from its start node (edge.a if forward, else edge.b).
struct Kinematic {
  int edge = 0;
  bool forward = true;
  double offset = 0.0;
};

struct VehicleState {
  Kinematic kin;
  Kinematic next_kin;        // pre-drawn movement for the next slot
  bool next_respawn = false; // next move exits the area
  Vec2 exit_point;           // boundary point when next_respawn
  bool active = true;
  bool s_urllc = false;
  bool s_embb = false;
  double demand_bits = 0.0;
  int prev_assoc = 0;              // gNB index of previous association
  std::vector<int> allocation;     // PRBs per gNB at the previous slot
};

struct ChannelSnapshot {
  int n = 0;
  int m = 0;
  std::vector<double> gain;          // n x m, row-major, in (0, 1]
  std::vector<double> interference;  // n x m, watts
  double& g(int i, int j) { return gain[i * m + j]; }
  double gv(int i, int j) const { return gain[i * m + j]; }
  double iv(int i, int j) const { return interference[i * m + j]; }
};

// Raw agent output: relaxed association scores and PRB fractions.
struct RelaxedAction {
  int n = 0;
  int m = 0;
  std::vector<double> q;  // n x m in [0,1]
  std::vector<double> b;  // n x m in [0,1], fraction of W_m

  std::vector<double> flat() const;
  static RelaxedAction from_flat(const std::vector<double>& v, int n, int m);
};

// Constraint-satisfying projection of a RelaxedAction.
struct FeasibleAllocation {
  int n = 0;
  int m = 0;
  std::vector<int> assoc;  // per-vehicle serving gNB
  std::vector<int> prbs;   // n x m integer PRB counts
  int prb(int i, int j) const { return prbs[i * m + j]; }
};

struct StepOutcome {
  std::vector<double> observation;
  double reward = 0.0;
  std::vector<double> delay_s;       // per vehicle, +inf when rate is 0
  std::vector<double> rate_bps;      // per vehicle
  std::vector<double> penalty_urllc; // per vehicle (capped)
  std::vector<double> penalty_embb;  // per vehicle
  std::vector<bool> violated_urllc;
  std::vector<bool> violated_embb;
  std::vector<int> assoc;
  std::vector<int> prbs_used;        // per vehicle, on its serving gNB
};

// --- channel / link free functions -------------------------------------

// Power-law path loss with 1 m reference distance, clamped to <= 1.
double channel_gain(const Vec2& vehicle, const Vec2& gnb, double exponent);

// Shannon-style PRB throughput in bits/s.
double throughput(int prbs, double gain, double interference_w,
                  const NetworkConfig& cfg);

// Transmission plus fixed processing/scheduling delay; +inf when rate is 0
// and demand is positive.
double delay(double demand_bits, double rate_bps, const NetworkConfig& cfg);

// Downlink inter-cell interference at vehicle i served by gNB `serving`.
double interference_at(int vehicle, int serving, const std::vector<double>& gains,
                       int num_gnbs, double tx_power_w);

// Per-vehicle argmax association (ties -> lowest gNB index), rounded PRB
// requests, proportional scale-and-floor when a gNB is oversubscribed.
FeasibleAllocation project_action(const RelaxedAction& raw,
                                  const NetworkConfig& cfg);

// --- environment --------------------------------------------------------

class Environment {
 public:
  Environment(const NetworkConfig& cfg, std::uint64_t seed);

  void reset(std::uint64_t seed);
  StepOutcome step(const RelaxedAction& raw);
  // Reseeds only the RNG, leaving vehicles and channel state in place.
  void reseed(std::uint64_t seed) { rng_.seed(seed); }

  std::vector<double> observe() const;
  int obs_dim() const;
  static int obs_dim(const NetworkConfig& cfg);

  // Documented fixed layout: gNBs evenly spaced on a circle of radius
  // area_side/4 around the area center, first at the top.
  static std::vector<Vec2> gnb_layout(const NetworkConfig& cfg);
  static std::vector<std::string> feature_names(const NetworkConfig& cfg);

  const NetworkConfig& config() const { return cfg_; }
  const std::vector<VehicleState>& vehicles() const { return vehicles_; }
  const ChannelSnapshot& snapshot() const { return snapshot_; }
  const std::vector<double>& loads() const { return loads_; }
  const std::vector<Vec2>& gnbs() const { return gnbs_; }
  const RoadGraph& roads() const { return roads_; }
  int slot() const { return slot_; }

  Vec2 vehicle_position(int i) const;
  Vec2 vehicle_next_position(int i) const;

 private:
  void spawn_vehicle(VehicleState& v);
  Kinematic random_spawn();
  // Advances `k` by one slot of travel; returns false when the move exits
  // the area (out: boundary point where it left).
  bool predict_move(const Kinematic& k, Kinematic& out, Vec2& exit_point);
  void plan_next(VehicleState& v);
  void advance_mobility();
  void recompute_snapshot();
  Vec2 position_of(const Kinematic& k) const;

  NetworkConfig cfg_;
  RoadGraph roads_;
  std::vector<Vec2> gnbs_;
  std::vector<VehicleState> vehicles_;
  ChannelSnapshot snapshot_;
  std::vector<double> loads_;
  Rng rng_;
  int slot_ = 0;
};

}  // namespace vnet
