// vnetslice: train, evaluate, explain and fidelity-check slicing agents.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "vnet/agent.hpp"
#include "vnet/config.hpp"
#include "vnet/csv.hpp"
#include "vnet/env.hpp"
#include "vnet/evalkit.hpp"
#include "vnet/shapley.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vnet;

namespace {

constexpr const char* kVersion = "vnetslice 0.1.0";

struct CommonOpts {
  std::string config_path;
  std::string profile = "desk";
  std::uint64_t seed = 1;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "Config file (JSON)")->required();
  cmd->add_option("--profile", o.profile, "Profile name (paper|desk|smoke)");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--out", o.out_dir, "Output directory")->required();
}

void write_manifest(const CommonOpts& o, const std::string& command,
                    const RunProfile& profile, const json& extras,
                    const std::vector<std::string>& outputs) {
  json m;
  m["command"] = command;
  m["config_path"] = o.config_path;
  m["profile"] = o.profile;
  m["seed"] = o.seed;
  m["out_dir"] = o.out_dir;
  m["config_snapshot"] = json::parse(profile_to_json(profile));
  m["options"] = extras;
  m["outputs"] = outputs;
  m["code_version"] = kVersion;
  m["timestamp_utc"] = std::chrono::duration_cast<std::chrono::seconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count();
  std::ofstream out(fs::path(o.out_dir) / "run_manifest.json");
  out << m.dump(2) << "\n";
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory: " + dir);
}

DdpgAgent load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("checkpoint not found: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return DdpgAgent::from_json(text);
}

ActionPolicy checkpoint_policy(const DdpgAgent& agent) {
  const Policy p = agent.deterministic_policy();
  const int n = agent.num_vehicles();
  const int m = agent.num_gnbs();
  return [p, n, m](const std::vector<double>& obs) {
    return RelaxedAction::from_flat(p(obs), n, m);
  };
}

void apply_variant(TrainConfig& tc, const std::string& variant) {
  if (variant == "attention_sverl") return;  // profile values as-is
  if (variant == "attention") {
    tc.lambda_explain = 0.0;
  } else if (variant == "ddpg") {
    tc.attention_enabled = false;
    tc.lambda_explain = 0.0;
  } else {
    throw std::invalid_argument("unknown variant: " + variant);
  }
}

// --- train ------------------------------------------------------------------

int cmd_train(const CommonOpts& o, const std::string& variant, int episodes_override) {
  RunProfile profile = load_profile(o.config_path, o.profile);
  apply_variant(profile.train, variant);
  if (episodes_override > 0) profile.train.episodes = episodes_override;
  ensure_out_dir(o.out_dir);

  DdpgAgent agent(profile.network, profile.train, stream_seed(o.seed, "init"));
  CsvWriter metrics((fs::path(o.out_dir) / "metrics.csv").string(),
                    {"episode", "mean_reward", "critic_loss", "actor_loss",
                     "explain_loss"});
  run_training(profile.network, profile.train, agent, o.seed,
               [&](const EpisodeLog& log) {
                 metrics.row({std::to_string(log.episode),
                              fmt_double(log.mean_reward),
                              fmt_double(log.critic_loss),
                              fmt_double(log.actor_loss),
                              fmt_double(log.explain_loss)});
               });
  metrics.close();

  std::ofstream ck(fs::path(o.out_dir) / "checkpoint.json");
  ck << agent.to_json() << "\n";
  ck.close();

  write_manifest(o, "train", profile,
                 {{"variant", variant}, {"episodes_override", episodes_override}},
                 {"metrics.csv", "checkpoint.json"});
  return 0;
}

// --- evaluate ----------------------------------------------------------------

int cmd_evaluate(const CommonOpts& o, bool with_random,
                 const std::vector<std::string>& checkpoints, int episodes,
                 int steps, bool dump_trajectories) {
  RunProfile profile = load_profile(o.config_path, o.profile);
  if (!with_random && checkpoints.empty())
    throw std::invalid_argument("evaluate: no methods requested");
  ensure_out_dir(o.out_dir);

  std::vector<std::pair<std::string, ActionPolicy>> methods;
  std::vector<DdpgAgent> agents;  // keep alive behind the policies
  agents.reserve(checkpoints.size());
  if (with_random) {
    auto rng = std::make_shared<Rng>(stream_seed(o.seed, "random-policy"));
    const int n = profile.network.num_vehicles;
    const int m = profile.network.num_gnbs;
    methods.emplace_back("random", [rng, n, m](const std::vector<double>&) {
      return random_policy(*rng, n, m);
    });
  }
  for (const std::string& spec : checkpoints) {
    const size_t eq = spec.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("expected --checkpoint NAME=PATH, got: " + spec);
    agents.push_back(load_checkpoint(spec.substr(eq + 1)));
    methods.emplace_back(spec.substr(0, eq), checkpoint_policy(agents.back()));
  }

  CsvWriter table((fs::path(o.out_dir) / "comparison.csv").string(),
                  {"method", "urllc_pct", "embb_pct", "mean_reward",
                   "urllc_satisfied", "urllc_opportunities", "embb_satisfied",
                   "embb_opportunities"});
  std::printf("%-18s %10s %10s %12s\n", "method", "URLLC%", "eMBB%", "mean_rew");
  std::vector<std::string> outputs = {"comparison.csv"};
  for (auto& [name, policy] : methods) {
    const EvalSeries series =
        evaluate_policy(profile.network, policy, episodes, steps, o.seed);
    const QosResult qos = qos_satisfaction(series);
    const double mean_reward =
        std::accumulate(series.episode_rewards.begin(),
                        series.episode_rewards.end(), 0.0) /
        series.episode_rewards.size();
    const std::string u = qos.urllc_pct ? fmt_double(*qos.urllc_pct) : "n/a";
    const std::string e = qos.embb_pct ? fmt_double(*qos.embb_pct) : "n/a";
    table.row({name, u, e, fmt_double(mean_reward),
               std::to_string(qos.urllc_satisfied),
               std::to_string(qos.urllc_opportunities),
               std::to_string(qos.embb_satisfied),
               std::to_string(qos.embb_opportunities)});
    std::printf("%-18s %10s %10s %12s\n", name.c_str(), u.c_str(), e.c_str(),
                fmt_double(mean_reward).c_str());
    if (dump_trajectories) {
      const std::string fname = "trajectories_" + name + ".csv";
      CsvWriter traj((fs::path(o.out_dir) / fname).string(),
                     {"episode", "slot", "vehicle", "assoc", "prbs", "rate_bps",
                      "delay_s", "penalty_urllc", "penalty_embb",
                      "violated_urllc", "violated_embb"});
      for (const SlotVehicleRecord& rec : series.records) {
        traj.row({std::to_string(rec.episode), std::to_string(rec.slot),
                  std::to_string(rec.vehicle), std::to_string(rec.assoc),
                  std::to_string(rec.prbs), fmt_double(rec.rate_bps),
                  fmt_double(rec.delay_s), fmt_double(rec.penalty_urllc),
                  fmt_double(rec.penalty_embb),
                  rec.violated_urllc ? "1" : "0", rec.violated_embb ? "1" : "0"});
      }
      outputs.push_back(fname);
    }
  }
  table.close();

  json extras;
  extras["random"] = with_random;
  extras["checkpoints"] = checkpoints;
  extras["episodes"] = episodes;
  extras["steps"] = steps;
  write_manifest(o, "evaluate", profile, extras, outputs);
  return 0;
}

// --- explain -----------------------------------------------------------------

int cmd_explain(const CommonOpts& o, const std::string& checkpoint, int samples,
                int num_states) {
  if (samples < 1) throw std::invalid_argument("--samples must be >= 1");
  if (num_states < 1) throw std::invalid_argument("--states must be >= 1");
  RunProfile profile = load_profile(o.config_path, o.profile);
  ensure_out_dir(o.out_dir);
  DdpgAgent agent = load_checkpoint(checkpoint);
  const NetworkConfig& nc = profile.network;
  if (agent.obs_dim() != Environment::obs_dim(nc))
    throw std::invalid_argument("checkpoint does not match config dimensions");

  const std::vector<std::string> names = Environment::feature_names(nc);
  const int d = agent.obs_dim();
  const Policy policy = agent.deterministic_policy();
  const ActionPolicy action_policy = checkpoint_policy(agent);

  // Environments captured along rollouts so each analyzed state can be
  // re-simulated for its Shapley game.
  std::vector<Environment> anchors;
  {
    Environment env(nc, stream_seed(o.seed, "explain-env"));
    std::vector<double> obs = env.observe();
    for (int t = 0; static_cast<int>(anchors.size()) < num_states; ++t) {
      anchors.push_back(env);
      obs = env.step(action_policy(obs)).observation;
    }
  }
  std::vector<std::vector<double>> obs_list;
  for (const Environment& env : anchors) obs_list.push_back(env.observe());

  std::vector<double> baseline(d, 0.0);
  for (const auto& s : obs_list)
    for (int i = 0; i < d; ++i) baseline[i] += s[i] / obs_list.size();

  const RolloutSpec spec{profile.train.rollout_horizon, profile.train.gamma,
                         profile.train.rollouts_per_coalition};

  CsvWriter per_state((fs::path(o.out_dir) / "explain.csv").string(),
                      {"state", "feature", "name", "psi", "psi_norm",
                       "psi_stderr", "alpha", "alpha_norm"});
  std::vector<double> alpha_mean(d, 0.0);
  for (size_t si = 0; si < anchors.size(); ++si) {
    const EnvRollout sim(anchors[si]);
    const ShapleyReport rep = shapley_for_state(
        sim, policy, baseline, samples, spec, stream_seed(o.seed, "explain", si));
    const std::vector<double> psi_norm = normalize_importance(rep.psi);
    const std::vector<double> alpha = agent.actor().attention_weights(obs_list[si]);
    const std::vector<double> alpha_norm = normalize_importance(alpha);
    for (int i = 0; i < d; ++i) {
      alpha_mean[i] += alpha[i] / anchors.size();
      per_state.row({std::to_string(si), std::to_string(i), names[i],
                     fmt_double(rep.psi[i]), fmt_double(psi_norm[i]),
                     fmt_double(rep.stderr_psi[i]), fmt_double(alpha[i]),
                     fmt_double(alpha_norm[i])});
    }
  }
  per_state.close();

  CsvWriter avg((fs::path(o.out_dir) / "alpha_mean.csv").string(),
                {"feature", "name", "alpha_mean"});
  for (int i = 0; i < d; ++i)
    avg.row({std::to_string(i), names[i], fmt_double(alpha_mean[i])});
  avg.close();

  // Top-10 features by average attention weight (the bar-chart data).
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return alpha_mean[a] > alpha_mean[b];
  });
  CsvWriter top((fs::path(o.out_dir) / "top10.csv").string(),
                {"rank", "feature", "name", "alpha_mean"});
  for (int r = 0; r < std::min(10, d); ++r)
    top.row({std::to_string(r + 1), std::to_string(order[r]), names[order[r]],
             fmt_double(alpha_mean[order[r]])});
  top.close();

  write_manifest(o, "explain", profile,
                 {{"checkpoint", checkpoint},
                  {"samples", samples},
                  {"states", num_states}},
                 {"explain.csv", "alpha_mean.csv", "top10.csv"});
  return 0;
}

// --- fidelity ----------------------------------------------------------------

int cmd_fidelity(const CommonOpts& o, const std::string& ck_sverl,
                 const std::string& ck_attention, int num_states, int steps) {
  RunProfile profile = load_profile(o.config_path, o.profile);
  ensure_out_dir(o.out_dir);
  DdpgAgent sverl = load_checkpoint(ck_sverl);
  DdpgAgent attention = load_checkpoint(ck_attention);

  // Shared state set: random-policy rollouts with shared seeds, so neither
  // method's own behavior biases the comparison.
  auto rng = std::make_shared<Rng>(stream_seed(o.seed, "fidelity-states"));
  const int n = profile.network.num_vehicles;
  const int m = profile.network.num_gnbs;
  const ActionPolicy random_rollout = [rng, n, m](const std::vector<double>&) {
    return random_policy(*rng, n, m);
  };
  const std::vector<std::vector<double>> states =
      collect_states(profile.network, random_rollout, num_states, steps, o.seed);
  const std::vector<double> deltas = feature_stddev(states);

  CsvWriter per_state((fs::path(o.out_dir) / "fidelity.csv").string(),
                      {"method", "state", "pearson_r"});
  CsvWriter summary((fs::path(o.out_dir) / "fidelity_summary.csv").string(),
                    {"method", "mean_r", "states_used", "states_skipped"});
  const std::vector<std::pair<std::string, const DdpgAgent*>> rows = {
      {"attention_sverl", &sverl}, {"attention", &attention}};
  for (const auto& [name, agent] : rows) {
    const FidelityReport rep = fidelity_pearson(
        [agent](const std::vector<double>& s) {
          return agent->actor().act_deterministic(s);
        },
        [agent](const std::vector<double>& s) {
          return agent->actor().attention_weights(s);
        },
        states, deltas);
    for (size_t i = 0; i < rep.per_state_r.size(); ++i)
      per_state.row({name, std::to_string(i), fmt_double(rep.per_state_r[i])});
    summary.row({name, fmt_double(rep.mean_r), std::to_string(rep.states_used),
                 std::to_string(rep.states_skipped)});
    std::printf("%-18s mean_r=%s states=%d skipped=%d\n", name.c_str(),
                fmt_double(rep.mean_r).c_str(), rep.states_used,
                rep.states_skipped);
  }
  per_state.close();
  summary.close();

  write_manifest(o, "fidelity", profile,
                 {{"checkpoint_sverl", ck_sverl},
                  {"checkpoint_attention", ck_attention},
                  {"states", num_states}},
                 {"fidelity.csv", "fidelity_summary.csv"});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vehicular network-slicing RL with Shapley-supervised attention"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonOpts train_o, eval_o, explain_o, fid_o;
  std::string variant = "attention_sverl";
  int episodes_override = 0;

  CLI::App* train = app.add_subcommand("train", "Train an agent");
  add_common(train, train_o);
  train->add_option("--variant", variant,
                    "attention_sverl | attention | ddpg");
  train->add_option("--episodes", episodes_override, "Override episode count");

  bool with_random = false;
  std::vector<std::string> checkpoints;
  int eval_episodes = 50;
  int eval_steps = 100;
  bool dump_traj = false;
  CLI::App* ev = app.add_subcommand("evaluate", "QoS comparison");
  add_common(ev, eval_o);
  ev->add_flag("--random", with_random, "Include the random baseline");
  ev->add_option("--checkpoint", checkpoints,
                 "NAME=PATH, repeatable, one comparison row each");
  ev->add_option("--episodes", eval_episodes, "Evaluation episodes");
  ev->add_option("--steps", eval_steps, "Slots per episode");
  ev->add_flag("--trajectories", dump_traj, "Dump per-slot trajectory CSVs");

  std::string explain_ck;
  int samples = 32;
  int explain_states = 5;
  CLI::App* ex = app.add_subcommand("explain", "Shapley + attention report");
  add_common(ex, explain_o);
  ex->add_option("--checkpoint", explain_ck, "Trained checkpoint")->required();
  ex->add_option("--samples", samples, "Monte-Carlo permutations per state");
  ex->add_option("--states", explain_states, "States to analyze");

  std::string ck_sverl, ck_attention;
  int fid_states = 20;
  int fid_steps = 20;
  CLI::App* fid = app.add_subcommand("fidelity", "Explanation fidelity comparison");
  add_common(fid, fid_o);
  fid->add_option("--checkpoint-sverl", ck_sverl, "Attention+SVERL checkpoint")
      ->required();
  fid->add_option("--checkpoint-attention", ck_attention,
                  "Pure attention checkpoint")
      ->required();
  fid->add_option("--states", fid_states, "Shared evaluation states");
  fid->add_option("--steps", fid_steps, "Rollout slots per collection episode");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) return cmd_train(train_o, variant, episodes_override);
    if (ev->parsed())
      return cmd_evaluate(eval_o, with_random, checkpoints, eval_episodes,
                          eval_steps, dump_traj);
    if (ex->parsed()) return cmd_explain(explain_o, explain_ck, samples,
                                         explain_states);
    if (fid->parsed())
      return cmd_fidelity(fid_o, ck_sverl, ck_attention, fid_states, fid_steps);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
