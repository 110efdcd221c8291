#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vnet/config.hpp"
#include "vnet/env.hpp"
#include "vnet/nn.hpp"
#include "vnet/shapley.hpp"

namespace vnet {

struct Transition {
  std::vector<double> s;
  std::vector<double> a;
  double r = 0.0;
  std::vector<double> s2;
};

// FIFO ring of transitions; also tracks the running mean of stored states
// (the masking baseline for Shapley rollouts).
class ReplayBuffer {
 public:
  ReplayBuffer(int capacity, int obs_dim);

  void push(Transition t);
  size_t size() const { return data_.size(); }
  int capacity() const { return capacity_; }
  const Transition& at(size_t i) const { return data_[i]; }
  std::vector<size_t> sample_indices(int k, Rng& rng) const;

  // Running mean over every state ever pushed; zeros before warm-up.
  std::vector<double> state_mean() const;

 private:
  int capacity_;
  size_t next_ = 0;
  std::vector<Transition> data_;
  std::vector<double> mean_;
  size_t mean_count_ = 0;
};

// Actor with a linear-softmax attention layer feeding a dense body.
// With attention disabled, alpha is fixed uniform (plain DDPG baseline).
class AttentionActor {
 public:
  AttentionActor() = default;
  AttentionActor(int obs_dim, int action_dim, const TrainConfig& tc, Rng& rng);

  struct Eval {
    Batch alpha;
    Batch weighted;
    Batch action;
    ForwardCache att_cache;
    ForwardCache body_cache;
  };

  Eval forward(const Batch& states) const;
  std::vector<double> act_deterministic(const std::vector<double>& s) const;
  std::vector<double> attention_weights(const std::vector<double>& s) const;

  bool attention_enabled() const { return attention_enabled_; }
  void set_attention_enabled(bool enabled) { attention_enabled_ = enabled; }
  int obs_dim() const { return body_.input_dim(); }
  int action_dim() const { return body_.output_dim(); }
  DenseNet& attention() { return attention_; }
  const DenseNet& attention() const { return attention_; }
  DenseNet& body() { return body_; }
  const DenseNet& body() const { return body_; }

 private:
  DenseNet attention_;  // single d -> d softmax layer
  DenseNet body_;
  bool attention_enabled_ = true;
};

// Normalized Shapley targets cached for one supervision pass.
struct ExplainContext {
  Batch states;
  Batch psi_hat;
};

struct BatchLosses {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double explain_loss = 0.0;
};

struct ActorUpdate {
  NetGrads attention_grads;
  NetGrads body_grads;
  double actor_loss = 0.0;
  double explain_loss = 0.0;
};

class DdpgAgent {
 public:
  DdpgAgent() = default;
  DdpgAgent(const NetworkConfig& nc, const TrainConfig& tc,
            std::uint64_t init_seed);

  RelaxedAction act(const std::vector<double>& s, double noise_sigma,
                    Rng& rng) const;

  BatchLosses train_batch(const ReplayBuffer& buffer, Rng& replay_rng,
                          const ExplainContext* explain = nullptr);

  // L_DDPG actor gradients plus lambda * L_explain attention gradients on
  // an explicit batch; exposed so the loss-composition invariant is
  // directly testable.
  ActorUpdate compute_actor_update(const Batch& states,
                                   const ExplainContext* explain,
                                   double lambda) const;

  // Gradient of mean_s (1/d) * sum_i (alpha_hat - psi_hat)^2 w.r.t. the
  // attention parameters only; Shapley targets are constants.
  std::pair<NetGrads, double> explanation_gradients(const Batch& states,
                                                    const Batch& psi_hat) const;

  const AttentionActor& actor() const { return actor_; }
  AttentionActor& actor() { return actor_; }
  const DenseNet& critic() const { return critic_; }
  const TrainConfig& train_config() const { return tc_; }
  int obs_dim() const { return actor_.obs_dim(); }
  int action_dim() const { return actor_.action_dim(); }
  int num_vehicles() const { return n_; }
  int num_gnbs() const { return m_; }

  Policy deterministic_policy() const;

  std::string to_json() const;
  static DdpgAgent from_json(const std::string& text);

 private:
  TrainConfig tc_;
  int n_ = 0;
  int m_ = 0;
  AttentionActor actor_;
  DenseNet critic_;
  AttentionActor target_actor_;
  DenseNet target_critic_;
  AdamState opt_attention_;
  AdamState opt_body_;
  AdamState opt_critic_;
};

// Environment adapter for Shapley rollouts.
class EnvRollout : public RolloutSim {
 public:
  explicit EnvRollout(Environment env) : env_(std::move(env)) {}
  std::vector<double> observe() const override { return env_.observe(); }
  double step(const std::vector<double>& flat_action) override;
  std::unique_ptr<RolloutSim> clone() const override {
    return std::make_unique<EnvRollout>(env_);
  }
  void perturb(std::uint64_t seed) override { env_.reseed(seed); }

 private:
  Environment env_;
};

struct EpisodeLog {
  int episode = 0;
  double mean_reward = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double explain_loss = 0.0;
};

struct TrainResult {
  std::vector<EpisodeLog> episodes;
};

// Full training loop: act -> step -> store -> train, with Shapley-supervised
// attention updates in every eval_interval-th episode.
TrainResult run_training(const NetworkConfig& nc, const TrainConfig& tc,
                         DdpgAgent& agent, std::uint64_t master_seed,
                         const std::function<void(const EpisodeLog&)>& on_episode = {});

}  // namespace vnet
