#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vnet/agent.hpp"
#include "vnet/config.hpp"
#include "vnet/env.hpp"
#include "vnet/evalkit.hpp"
#include "vnet/shapley.hpp"

namespace py = pybind11;
using namespace vnet;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Vehicular network-slicing simulator, DDPG agent with "
            "Shapley-supervised attention, and evaluation helpers";

  py::class_<NetworkConfig>(m, "NetworkConfig")
      .def(py::init<>())
      .def_readwrite("area_side_m", &NetworkConfig::area_side_m)
      .def_readwrite("num_gnbs", &NetworkConfig::num_gnbs)
      .def_readwrite("num_vehicles", &NetworkConfig::num_vehicles)
      .def_readwrite("prbs_per_gnb", &NetworkConfig::prbs_per_gnb)
      .def_readwrite("tx_power_w", &NetworkConfig::tx_power_w)
      .def_readwrite("noise_power_w", &NetworkConfig::noise_power_w)
      .def_readwrite("prb_bandwidth_hz", &NetworkConfig::prb_bandwidth_hz)
      .def_readwrite("urllc_delay_max_s", &NetworkConfig::urllc_delay_max_s)
      .def_readwrite("embb_rate_min_bps", &NetworkConfig::embb_rate_min_bps)
      .def_readwrite("vehicle_speed_mps", &NetworkConfig::vehicle_speed_mps)
      .def_readwrite("pathloss_exponent", &NetworkConfig::pathloss_exponent)
      .def_readwrite("urllc_demand_bits", &NetworkConfig::urllc_demand_bits)
      .def_readwrite("fixed_delay_s", &NetworkConfig::fixed_delay_s)
      .def_readwrite("slot_duration_s", &NetworkConfig::slot_duration_s)
      .def_readwrite("weight_urllc", &NetworkConfig::weight_urllc)
      .def_readwrite("weight_embb", &NetworkConfig::weight_embb)
      .def_readwrite("penalty_cap", &NetworkConfig::penalty_cap)
      .def_readwrite("shadowing_enabled", &NetworkConfig::shadowing_enabled)
      .def("validate", &NetworkConfig::validate);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("gamma", &TrainConfig::gamma)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("tau", &TrainConfig::tau)
      .def_readwrite("buffer_capacity", &TrainConfig::buffer_capacity)
      .def_readwrite("noise_sigma0", &TrainConfig::noise_sigma0)
      .def_readwrite("noise_sigma_min", &TrainConfig::noise_sigma_min)
      .def_readwrite("noise_decay", &TrainConfig::noise_decay)
      .def_readwrite("episodes", &TrainConfig::episodes)
      .def_readwrite("steps_per_episode", &TrainConfig::steps_per_episode)
      .def_readwrite("lambda_explain", &TrainConfig::lambda_explain)
      .def_readwrite("eval_interval", &TrainConfig::eval_interval)
      .def_readwrite("shapley_samples", &TrainConfig::shapley_samples)
      .def_readwrite("rollout_horizon", &TrainConfig::rollout_horizon)
      .def_readwrite("rollouts_per_coalition", &TrainConfig::rollouts_per_coalition)
      .def_readwrite("explain_states", &TrainConfig::explain_states)
      .def_readwrite("actor_lr", &TrainConfig::actor_lr)
      .def_readwrite("critic_lr", &TrainConfig::critic_lr)
      .def_readwrite("hidden1", &TrainConfig::hidden1)
      .def_readwrite("hidden2", &TrainConfig::hidden2)
      .def_readwrite("attention_enabled", &TrainConfig::attention_enabled)
      .def("validate", &TrainConfig::validate);

  py::class_<RelaxedAction>(m, "RelaxedAction")
      .def(py::init<>())
      .def_readwrite("n", &RelaxedAction::n)
      .def_readwrite("m", &RelaxedAction::m)
      .def_readwrite("q", &RelaxedAction::q)
      .def_readwrite("b", &RelaxedAction::b)
      .def("flat", &RelaxedAction::flat)
      .def_static("from_flat", &RelaxedAction::from_flat);

  py::class_<FeasibleAllocation>(m, "FeasibleAllocation")
      .def_readonly("n", &FeasibleAllocation::n)
      .def_readonly("m", &FeasibleAllocation::m)
      .def_readonly("assoc", &FeasibleAllocation::assoc)
      .def_readonly("prbs", &FeasibleAllocation::prbs);

  py::class_<StepOutcome>(m, "StepOutcome")
      .def_readonly("observation", &StepOutcome::observation)
      .def_readonly("reward", &StepOutcome::reward)
      .def_readonly("delay_s", &StepOutcome::delay_s)
      .def_readonly("rate_bps", &StepOutcome::rate_bps)
      .def_readonly("penalty_urllc", &StepOutcome::penalty_urllc)
      .def_readonly("penalty_embb", &StepOutcome::penalty_embb)
      .def_readonly("violated_urllc", &StepOutcome::violated_urllc)
      .def_readonly("violated_embb", &StepOutcome::violated_embb)
      .def_readonly("assoc", &StepOutcome::assoc)
      .def_readonly("prbs_used", &StepOutcome::prbs_used);

  py::class_<Environment>(m, "Environment")
      .def(py::init<const NetworkConfig&, std::uint64_t>(), py::arg("config"),
           py::arg("seed"))
      .def("reset", &Environment::reset)
      .def("step", &Environment::step)
      .def("observe", &Environment::observe)
      .def("obs_dim", py::overload_cast<>(&Environment::obs_dim, py::const_))
      .def_static("obs_dim_for",
                  py::overload_cast<const NetworkConfig&>(&Environment::obs_dim))
      .def_static("feature_names", &Environment::feature_names)
      .def("slot", &Environment::slot);

  m.def("channel_gain",
        [](double vx, double vy, double gx, double gy, double exponent) {
          return channel_gain({vx, vy}, {gx, gy}, exponent);
        },
        py::arg("vx"), py::arg("vy"), py::arg("gx"), py::arg("gy"),
        py::arg("exponent"));
  m.def("throughput", &throughput, py::arg("prbs"), py::arg("gain"),
        py::arg("interference_w"), py::arg("config"));
  m.def("delay", &delay, py::arg("demand_bits"), py::arg("rate_bps"),
        py::arg("config"));
  m.def("project_action", &project_action, py::arg("raw"), py::arg("config"));

  py::class_<ShapleyReport>(m, "ShapleyReport")
      .def_readonly("psi", &ShapleyReport::psi)
      .def_readonly("stderr_psi", &ShapleyReport::stderr_psi)
      .def_readonly("samples", &ShapleyReport::samples);

  m.def("shapley_exact",
        [](int d, const std::function<double(std::vector<int>)>& game) {
          return shapley_exact(d, [&](const Coalition& c) {
            std::vector<int> members;
            for (size_t i = 0; i < c.size(); ++i)
              if (c[i]) members.push_back(static_cast<int>(i));
            return game(members);
          });
        },
        py::arg("d"), py::arg("game"),
        "Exact Shapley values; `game` maps a member-index list to v(C)");
  m.def("shapley_mc",
        [](int d, const std::function<double(std::vector<int>)>& game,
           int samples, std::uint64_t seed) {
          Rng rng(seed);
          return shapley_mc(d,
                            [&](const Coalition& c) {
                              std::vector<int> members;
                              for (size_t i = 0; i < c.size(); ++i)
                                if (c[i]) members.push_back(static_cast<int>(i));
                              return game(members);
                            },
                            samples, rng);
        },
        py::arg("d"), py::arg("game"), py::arg("samples"), py::arg("seed"));
  m.def("normalize_importance", &normalize_importance);
  m.def("mask_state",
        [](const std::vector<double>& s, const std::vector<int>& members,
           const std::vector<double>& baseline) {
          return mask_state(
              s, coalition_from_indices(static_cast<int>(s.size()), members),
              baseline);
        },
        py::arg("state"), py::arg("members"), py::arg("baseline"));

  py::class_<EpisodeLog>(m, "EpisodeLog")
      .def_readonly("episode", &EpisodeLog::episode)
      .def_readonly("mean_reward", &EpisodeLog::mean_reward)
      .def_readonly("critic_loss", &EpisodeLog::critic_loss)
      .def_readonly("actor_loss", &EpisodeLog::actor_loss)
      .def_readonly("explain_loss", &EpisodeLog::explain_loss);

  py::class_<DdpgAgent>(m, "DdpgAgent")
      .def(py::init<const NetworkConfig&, const TrainConfig&, std::uint64_t>(),
           py::arg("network"), py::arg("train"), py::arg("init_seed"))
      .def("obs_dim", &DdpgAgent::obs_dim)
      .def("action_dim", &DdpgAgent::action_dim)
      .def("act",
           [](const DdpgAgent& a, const std::vector<double>& s) {
             Rng rng(0);
             return a.act(s, 0.0, rng);
           },
           py::arg("state"), "Noise-free action")
      .def("attention_weights",
           [](const DdpgAgent& a, const std::vector<double>& s) {
             return a.actor().attention_weights(s);
           })
      .def("to_json", &DdpgAgent::to_json)
      .def_static("from_json", &DdpgAgent::from_json);

  m.def("run_training",
        [](const NetworkConfig& nc, const TrainConfig& tc, DdpgAgent& agent,
           std::uint64_t seed) {
          return run_training(nc, tc, agent, seed).episodes;
        },
        py::arg("network"), py::arg("train"), py::arg("agent"),
        py::arg("master_seed"));

  py::class_<QosResult>(m, "QosResult")
      .def_readonly("urllc_opportunities", &QosResult::urllc_opportunities)
      .def_readonly("urllc_satisfied", &QosResult::urllc_satisfied)
      .def_readonly("embb_opportunities", &QosResult::embb_opportunities)
      .def_readonly("embb_satisfied", &QosResult::embb_satisfied)
      .def_readonly("urllc_pct", &QosResult::urllc_pct)
      .def_readonly("embb_pct", &QosResult::embb_pct);

  m.def("evaluate_random_policy",
        [](const NetworkConfig& nc, int episodes, int steps,
           std::uint64_t seed) {
          auto rng = std::make_shared<Rng>(stream_seed(seed, "random-policy"));
          ActionPolicy pol = [rng, nc](const std::vector<double>&) {
            return random_policy(*rng, nc.num_vehicles, nc.num_gnbs);
          };
          return qos_satisfaction(evaluate_policy(nc, pol, episodes, steps, seed));
        },
        py::arg("network"), py::arg("episodes"), py::arg("steps"),
        py::arg("seed"));
  m.def("evaluate_agent",
        [](const NetworkConfig& nc, const DdpgAgent& agent, int episodes,
           int steps, std::uint64_t seed) {
          const Policy p = agent.deterministic_policy();
          const int n = agent.num_vehicles();
          const int mm = agent.num_gnbs();
          ActionPolicy pol = [p, n, mm](const std::vector<double>& obs) {
            return RelaxedAction::from_flat(p(obs), n, mm);
          };
          return qos_satisfaction(evaluate_policy(nc, pol, episodes, steps, seed));
        },
        py::arg("network"), py::arg("agent"), py::arg("episodes"),
        py::arg("steps"), py::arg("seed"));
  m.def("pearson", &pearson);
  m.def("stream_seed",
        [](std::uint64_t master, const std::string& name) {
          return stream_seed(master, name);
        });
}
