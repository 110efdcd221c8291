#include "vnet/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace vnet {

namespace {

constexpr double kRefDistanceM = 1.0;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Gains are fed to the agent in log domain, min-max scaled between 0 dB
// (reference distance) and the path loss at the area diagonal. The
// constants depend only on the config, so explanations stay comparable
// across episodes.
double gain_norm(double gain, const NetworkConfig& cfg) {
  const double diag = std::sqrt(2.0) * cfg.area_side_m;
  const double db_min = -10.0 * cfg.pathloss_exponent * std::log10(diag);
  const double db = 10.0 * std::log10(std::max(gain, 1e-300));
  return clamp01((db - db_min) / (0.0 - db_min));
}

}  // namespace

// --- road graph ----------------------------------------------------------

RoadGraph RoadGraph::build(const NetworkConfig& cfg) {
  const double L = cfg.area_side_m;
  const double a = L / 3.0;
  const double b = 2.0 * L / 3.0;

  RoadGraph g;
  g.nodes = {
      {a, a}, {a, b}, {b, a}, {b, b},          // four primary intersections
      {a, 0}, {a, L}, {b, 0}, {b, L},          // vertical road endpoints
      {0, a}, {L, a}, {0, b}, {L, b},          // horizontal road endpoints
  };
  const int pairs[][2] = {
      {4, 0}, {0, 1}, {1, 5},   // x = L/3
      {6, 2}, {2, 3}, {3, 7},   // x = 2L/3
      {8, 0}, {0, 2}, {2, 9},   // y = L/3
      {10, 1}, {1, 3}, {3, 11}, // y = 2L/3
  };
  for (auto& p : pairs) {
    const Vec2& pa = g.nodes[p[0]];
    const Vec2& pb = g.nodes[p[1]];
    g.edges.push_back({p[0], p[1], std::hypot(pb.x - pa.x, pb.y - pa.y)});
  }
  g.incident.resize(g.nodes.size());
  for (size_t e = 0; e < g.edges.size(); ++e) {
    g.incident[g.edges[e].a].push_back(static_cast<int>(e));
    g.incident[g.edges[e].b].push_back(static_cast<int>(e));
  }
  g.boundary.assign(g.nodes.size(), false);
  for (int n = 4; n < 12; ++n) g.boundary[n] = true;
  return g;
}

// --- free functions -------------------------------------------------------

double channel_gain(const Vec2& vehicle, const Vec2& gnb, double exponent) {
  const double dist = std::hypot(vehicle.x - gnb.x, vehicle.y - gnb.y);
  const double d = std::max(dist, kRefDistanceM) / kRefDistanceM;
  return std::pow(d, -exponent);
}

double throughput(int prbs, double gain, double interference_w,
                  const NetworkConfig& cfg) {
  if (prbs <= 0) return 0.0;
  const double sinr = cfg.tx_power_w * gain / (cfg.noise_power_w + interference_w);
  return prbs * cfg.prb_bandwidth_hz * std::log2(1.0 + sinr);
}

double delay(double demand_bits, double rate_bps, const NetworkConfig& cfg) {
  if (demand_bits <= 0.0) return cfg.fixed_delay_s;
  if (rate_bps <= 0.0) return std::numeric_limits<double>::infinity();
  return demand_bits / rate_bps + cfg.fixed_delay_s;
}

double interference_at(int vehicle, int serving, const std::vector<double>& gains,
                       int num_gnbs, double tx_power_w) {
  double total = 0.0;
  for (int m = 0; m < num_gnbs; ++m) {
    if (m == serving) continue;
    total += tx_power_w * gains[vehicle * num_gnbs + m];
  }
  return total;
}

std::vector<double> RelaxedAction::flat() const {
  std::vector<double> out;
  out.reserve(q.size() + b.size());
  out.insert(out.end(), q.begin(), q.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

RelaxedAction RelaxedAction::from_flat(const std::vector<double>& v, int n, int m) {
  const size_t nm = static_cast<size_t>(n) * m;
  if (v.size() != 2 * nm)
    throw std::invalid_argument("flat action has wrong dimension");
  RelaxedAction a;
  a.n = n;
  a.m = m;
  a.q.assign(v.begin(), v.begin() + nm);
  a.b.assign(v.begin() + nm, v.end());
  return a;
}

FeasibleAllocation project_action(const RelaxedAction& raw,
                                  const NetworkConfig& cfg) {
  const int n = raw.n;
  const int m = raw.m;
  if (n != cfg.num_vehicles || m != cfg.num_gnbs)
    throw std::invalid_argument("action dimensions do not match config");
  for (double v : raw.q)
    if (std::isnan(v)) throw std::invalid_argument("relaxed action contains NaN");
  for (double v : raw.b)
    if (std::isnan(v)) throw std::invalid_argument("relaxed action contains NaN");

  FeasibleAllocation out;
  out.n = n;
  out.m = m;
  out.assoc.resize(n);
  out.prbs.assign(static_cast<size_t>(n) * m, 0);

  const int W = cfg.prbs_per_gnb;
  std::vector<long> request(n, 0);
  for (int i = 0; i < n; ++i) {
    int best = 0;
    for (int j = 1; j < m; ++j)
      if (raw.q[i * m + j] > raw.q[i * m + best]) best = j;  // ties -> lowest
    out.assoc[i] = best;
    const double frac = clamp01(raw.b[i * m + best]);
    request[i] = std::lround(frac * W);
  }
  for (int j = 0; j < m; ++j) {
    long total = 0;
    for (int i = 0; i < n; ++i)
      if (out.assoc[i] == j) total += request[i];
    if (total > W) {
      for (int i = 0; i < n; ++i)
        if (out.assoc[i] == j)
          request[i] = static_cast<long>(
              std::floor(static_cast<double>(request[i]) * W / total));
    }
  }
  for (int i = 0; i < n; ++i)
    out.prbs[i * m + out.assoc[i]] = static_cast<int>(request[i]);
  return out;
}

// --- environment -----------------------------------------------------------

Environment::Environment(const NetworkConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), roads_(RoadGraph::build(cfg)), gnbs_(gnb_layout(cfg)) {
  cfg_.validate();
  reset(seed);
}

std::vector<Vec2> Environment::gnb_layout(const NetworkConfig& cfg) {
  const double c = cfg.area_side_m / 2.0;
  const double r = cfg.area_side_m / 4.0;
  std::vector<Vec2> out;
  out.reserve(cfg.num_gnbs);
  if (cfg.num_gnbs == 1) {
    out.push_back({c, c});
    return out;
  }
  const double pi = std::acos(-1.0);
  for (int i = 0; i < cfg.num_gnbs; ++i) {
    const double ang = pi / 2.0 + 2.0 * pi * i / cfg.num_gnbs;
    out.push_back({c + r * std::cos(ang), c + r * std::sin(ang)});
  }
  return out;
}

int Environment::obs_dim(const NetworkConfig& cfg) {
  return cfg.num_vehicles * (9 + 3 * cfg.num_gnbs) + cfg.num_gnbs;
}

int Environment::obs_dim() const { return obs_dim(cfg_); }

std::vector<std::string> Environment::feature_names(const NetworkConfig& cfg) {
  std::vector<std::string> names;
  names.reserve(obs_dim(cfg));
  for (int i = 0; i < cfg.num_vehicles; ++i) {
    const std::string p = "v" + std::to_string(i) + ".";
    names.push_back(p + "x");
    names.push_back(p + "y");
    names.push_back(p + "demand");
    names.push_back(p + "s_urllc");
    names.push_back(p + "s_embb");
    names.push_back(p + "active");
    for (int j = 0; j < cfg.num_gnbs; ++j)
      names.push_back(p + "q_prev" + std::to_string(j));
    for (int j = 0; j < cfg.num_gnbs; ++j)
      names.push_back(p + "prb" + std::to_string(j));
    for (int j = 0; j < cfg.num_gnbs; ++j)
      names.push_back(p + "gain" + std::to_string(j));
    names.push_back(p + "x_next");
    names.push_back(p + "y_next");
    names.push_back(p + "speed");
  }
  for (int j = 0; j < cfg.num_gnbs; ++j)
    names.push_back("load" + std::to_string(j));
  return names;
}

Vec2 Environment::position_of(const Kinematic& k) const {
  const RoadGraph::Edge& e = roads_.edges[k.edge];
  const Vec2& from = roads_.nodes[k.forward ? e.a : e.b];
  const Vec2& to = roads_.nodes[k.forward ? e.b : e.a];
  const double t = k.offset / e.length;
  return {from.x + (to.x - from.x) * t, from.y + (to.y - from.y) * t};
}

Vec2 Environment::vehicle_position(int i) const {
  return position_of(vehicles_[i].kin);
}

Vec2 Environment::vehicle_next_position(int i) const {
  const VehicleState& v = vehicles_[i];
  return v.next_respawn ? v.exit_point : position_of(v.next_kin);
}

Kinematic Environment::random_spawn() {
  std::uniform_int_distribution<int> edge_dist(0, static_cast<int>(roads_.edges.size()) - 1);
  Kinematic k;
  k.edge = edge_dist(rng_);
  k.forward = std::uniform_int_distribution<int>(0, 1)(rng_) == 1;
  k.offset = std::uniform_real_distribution<double>(0.0, roads_.edges[k.edge].length)(rng_);
  return k;
}

bool Environment::predict_move(const Kinematic& k, Kinematic& out, Vec2& exit_point) {
  Kinematic cur = k;
  double remaining = cfg_.vehicle_speed_mps * cfg_.slot_duration_s;
  while (true) {
    const RoadGraph::Edge& e = roads_.edges[cur.edge];
    const double to_end = e.length - cur.offset;
    if (remaining < to_end) {
      cur.offset += remaining;
      out = cur;
      return true;
    }
    remaining -= to_end;
    const int node = cur.forward ? e.b : e.a;
    if (roads_.boundary[node]) {
      exit_point = roads_.nodes[node];
      return false;
    }
    // Uniform turn choice, no U-turn unless the node is a dead end.
    std::vector<int> candidates;
    for (int ei : roads_.incident[node])
      if (ei != cur.edge) candidates.push_back(ei);
    int next_edge;
    if (candidates.empty()) {
      next_edge = cur.edge;
    } else {
      next_edge = candidates[std::uniform_int_distribution<size_t>(
          0, candidates.size() - 1)(rng_)];
    }
    cur.edge = next_edge;
    cur.forward = roads_.edges[next_edge].a == node;
    cur.offset = 0.0;
  }
}

void Environment::plan_next(VehicleState& v) {
  Kinematic nk;
  Vec2 ex;
  const bool ok = predict_move(v.kin, nk, ex);
  v.next_respawn = !ok;
  if (ok) {
    v.next_kin = nk;
  } else {
    v.exit_point = ex;
  }
}

void Environment::spawn_vehicle(VehicleState& v) {
  v.kin = random_spawn();
  // Service flags: uniform over {URLLC only, eMBB only, both}.
  const int kind = std::uniform_int_distribution<int>(0, 2)(rng_);
  v.s_urllc = kind == 0 || kind == 2;
  v.s_embb = kind == 1 || kind == 2;
  v.active = true;
  v.demand_bits = v.s_urllc ? cfg_.urllc_demand_bits : 0.0;
  v.allocation.assign(cfg_.num_gnbs, 0);
  const Vec2 pos = position_of(v.kin);
  int nearest = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < cfg_.num_gnbs; ++j) {
    const double d = std::hypot(pos.x - gnbs_[j].x, pos.y - gnbs_[j].y);
    if (d < best) {
      best = d;
      nearest = j;
    }
  }
  v.prev_assoc = nearest;
  plan_next(v);
}

void Environment::reset(std::uint64_t seed) {
  rng_.seed(seed);
  slot_ = 0;
  vehicles_.assign(cfg_.num_vehicles, VehicleState{});
  for (auto& v : vehicles_) spawn_vehicle(v);
  loads_.assign(cfg_.num_gnbs, 0.0);
  recompute_snapshot();
}

void Environment::advance_mobility() {
  for (auto& v : vehicles_) {
    if (v.next_respawn) {
      v.kin = random_spawn();
    } else {
      v.kin = v.next_kin;
    }
    plan_next(v);
  }
}

void Environment::recompute_snapshot() {
  const int n = cfg_.num_vehicles;
  const int m = cfg_.num_gnbs;
  snapshot_.n = n;
  snapshot_.m = m;
  snapshot_.gain.assign(static_cast<size_t>(n) * m, 0.0);
  snapshot_.interference.assign(static_cast<size_t>(n) * m, 0.0);
  for (int i = 0; i < n; ++i) {
    const Vec2 pos = position_of(vehicles_[i].kin);
    for (int j = 0; j < m; ++j) {
      double g = channel_gain(pos, gnbs_[j], cfg_.pathloss_exponent);
      if (cfg_.shadowing_enabled) {
        const double db = std::normal_distribution<double>(
            0.0, cfg_.shadowing_sigma_db)(rng_);
        g = std::min(1.0, g * std::pow(10.0, db / 10.0));
      }
      snapshot_.g(i, j) = g;
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      snapshot_.interference[i * m + j] =
          interference_at(i, j, snapshot_.gain, m, cfg_.tx_power_w);
}

std::vector<double> Environment::observe() const {
  std::vector<double> s;
  s.reserve(obs_dim());
  const double L = cfg_.area_side_m;
  for (int i = 0; i < cfg_.num_vehicles; ++i) {
    const VehicleState& v = vehicles_[i];
    const Vec2 pos = position_of(v.kin);
    const Vec2 npos = v.next_respawn ? v.exit_point : position_of(v.next_kin);
    s.push_back(clamp01(pos.x / L));
    s.push_back(clamp01(pos.y / L));
    s.push_back(v.active ? clamp01(v.demand_bits / cfg_.urllc_demand_bits) : 0.0);
    s.push_back(v.s_urllc ? 1.0 : 0.0);
    s.push_back(v.s_embb ? 1.0 : 0.0);
    s.push_back(v.active ? 1.0 : 0.0);
    for (int j = 0; j < cfg_.num_gnbs; ++j)
      s.push_back(v.prev_assoc == j ? 1.0 : 0.0);
    for (int j = 0; j < cfg_.num_gnbs; ++j)
      s.push_back(clamp01(static_cast<double>(v.allocation[j]) / cfg_.prbs_per_gnb));
    for (int j = 0; j < cfg_.num_gnbs; ++j)
      s.push_back(gain_norm(snapshot_.gv(i, j), cfg_));
    s.push_back(clamp01(npos.x / L));
    s.push_back(clamp01(npos.y / L));
    s.push_back(clamp01(cfg_.vehicle_speed_mps / cfg_.speed_norm_mps));
  }
  for (int j = 0; j < cfg_.num_gnbs; ++j) s.push_back(clamp01(loads_[j]));
  return s;
}

StepOutcome Environment::step(const RelaxedAction& raw) {
  const int n = cfg_.num_vehicles;
  const int m = cfg_.num_gnbs;
  const FeasibleAllocation alloc = project_action(raw, cfg_);

  StepOutcome out;
  out.delay_s.resize(n);
  out.rate_bps.resize(n);
  out.penalty_urllc.assign(n, 0.0);
  out.penalty_embb.assign(n, 0.0);
  out.violated_urllc.assign(n, false);
  out.violated_embb.assign(n, false);
  out.assoc = alloc.assoc;
  out.prbs_used.resize(n);

  double reward = 0.0;
  for (int i = 0; i < n; ++i) {
    VehicleState& v = vehicles_[i];
    const int j = alloc.assoc[i];
    const int prbs = alloc.prb(i, j);
    const double rate = throughput(prbs, snapshot_.gv(i, j), snapshot_.iv(i, j), cfg_);
    const double t = delay(v.demand_bits, rate, cfg_);
    out.rate_bps[i] = rate;
    out.delay_s[i] = t;
    out.prbs_used[i] = prbs;
    if (!v.active) continue;
    if (v.s_urllc) {
      double pen;
      if (!std::isfinite(t)) {
        pen = cfg_.penalty_cap;
      } else {
        pen = std::min(cfg_.penalty_cap,
                       std::max(0.0, (t - cfg_.urllc_delay_max_s) / cfg_.urllc_delay_max_s));
      }
      out.penalty_urllc[i] = pen;
      out.violated_urllc[i] = t > cfg_.urllc_delay_max_s;
      reward -= cfg_.weight_urllc * pen;
    }
    if (v.s_embb) {
      const double pen = std::min(
          cfg_.penalty_cap,
          std::max(0.0, (cfg_.embb_rate_min_bps - rate) / cfg_.embb_rate_min_bps));
      out.penalty_embb[i] = pen;
      out.violated_embb[i] = rate < cfg_.embb_rate_min_bps;
      reward -= cfg_.weight_embb * pen;
    }
  }
  out.reward = reward;

  for (int j = 0; j < m; ++j) {
    long total = 0;
    for (int i = 0; i < n; ++i) total += alloc.prb(i, j);
    loads_[j] = static_cast<double>(total) / cfg_.prbs_per_gnb;
  }
  for (int i = 0; i < n; ++i) {
    vehicles_[i].prev_assoc = alloc.assoc[i];
    for (int j = 0; j < m; ++j)
      vehicles_[i].allocation[j] = alloc.prb(i, j);
  }

  advance_mobility();
  recompute_snapshot();
  ++slot_;
  out.observation = observe();
  return out;
}

}  // namespace vnet
