#include "vnet/agent.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "json.hpp"

namespace vnet {

using nlohmann::json;

// --- replay buffer ---------------------------------------------------------

ReplayBuffer::ReplayBuffer(int capacity, int obs_dim)
    : capacity_(capacity), mean_(obs_dim, 0.0) {
  if (capacity < 1) throw std::invalid_argument("buffer capacity must be >= 1");
  data_.reserve(std::min(capacity, 4096));
}

void ReplayBuffer::push(Transition t) {
  ++mean_count_;
  for (size_t i = 0; i < mean_.size(); ++i)
    mean_[i] += (t.s[i] - mean_[i]) / static_cast<double>(mean_count_);
  if (data_.size() < static_cast<size_t>(capacity_)) {
    data_.push_back(std::move(t));
  } else {
    data_[next_] = std::move(t);
    next_ = (next_ + 1) % capacity_;
  }
}

std::vector<size_t> ReplayBuffer::sample_indices(int k, Rng& rng) const {
  if (static_cast<size_t>(k) > data_.size())
    throw std::invalid_argument("not enough transitions in buffer");
  std::uniform_int_distribution<size_t> dist(0, data_.size() - 1);
  std::vector<size_t> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = dist(rng);
  return idx;
}

std::vector<double> ReplayBuffer::state_mean() const { return mean_; }

// --- attention actor ---------------------------------------------------------

AttentionActor::AttentionActor(int obs_dim, int action_dim,
                               const TrainConfig& tc, Rng& rng)
    : attention_(DenseNet({obs_dim, obs_dim}, {Activation::softmax}, rng)),
      body_(DenseNet({obs_dim, tc.hidden1, tc.hidden2, action_dim},
                     {Activation::relu, Activation::relu, Activation::sigmoid},
                     rng)),
      attention_enabled_(tc.attention_enabled) {}

AttentionActor::Eval AttentionActor::forward(const Batch& states) const {
  Eval ev;
  const int d = body_.input_dim();
  if (attention_enabled_) {
    ev.alpha = attention_.forward(states, &ev.att_cache);
  } else {
    ev.alpha = Batch::zeros(states.rows, d);
    std::fill(ev.alpha.data.begin(), ev.alpha.data.end(), 1.0 / d);
  }
  // The body consumes d * (alpha (.) s): softmax weights average 1/d, so
  // without the rescale every body input would be ~100x smaller than the
  // observation and a uniform attention vector would not reduce to the
  // plain network. The constant is absorbable into the first body layer,
  // alpha itself is untouched.
  ev.weighted = states;
  for (size_t i = 0; i < ev.weighted.data.size(); ++i)
    ev.weighted.data[i] *= ev.alpha.data[i] * d;
  ev.action = body_.forward(ev.weighted, &ev.body_cache);
  return ev;
}

std::vector<double> AttentionActor::act_deterministic(
    const std::vector<double>& s) const {
  Batch b{1, static_cast<int>(s.size()), s};
  return forward(b).action.data;
}

std::vector<double> AttentionActor::attention_weights(
    const std::vector<double>& s) const {
  Batch b{1, static_cast<int>(s.size()), s};
  return forward(b).alpha.data;
}

// --- agent -------------------------------------------------------------------

namespace {

Batch concat_cols(const Batch& a, const Batch& b) {
  Batch out = Batch::zeros(a.rows, a.cols + b.cols);
  for (int r = 0; r < a.rows; ++r) {
    double* o = out.row(r);
    std::copy(a.row(r), a.row(r) + a.cols, o);
    std::copy(b.row(r), b.row(r) + b.cols, o + a.cols);
  }
  return out;
}

}  // namespace

DdpgAgent::DdpgAgent(const NetworkConfig& nc, const TrainConfig& tc,
                     std::uint64_t init_seed)
    : tc_(tc), n_(nc.num_vehicles), m_(nc.num_gnbs) {
  nc.validate();
  tc.validate();
  const int d = Environment::obs_dim(nc);
  const int adim = 2 * n_ * m_;
  Rng rng(init_seed);
  actor_ = AttentionActor(d, adim, tc, rng);
  critic_ = DenseNet({d + adim, tc.hidden1, tc.hidden2, 1},
                     {Activation::relu, Activation::relu, Activation::identity},
                     rng);
  target_actor_ = actor_;
  target_critic_ = critic_;
  opt_attention_ = AdamState::for_net(actor_.attention(), tc.actor_lr,
                                      tc.adam_beta1, tc.adam_beta2);
  opt_body_ = AdamState::for_net(actor_.body(), tc.actor_lr, tc.adam_beta1,
                                 tc.adam_beta2);
  opt_critic_ = AdamState::for_net(critic_, tc.critic_lr, tc.adam_beta1,
                                   tc.adam_beta2);
}

RelaxedAction DdpgAgent::act(const std::vector<double>& s, double noise_sigma,
                             Rng& rng) const {
  std::vector<double> a = actor_.act_deterministic(s);
  if (noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (double& v : a) v += noise(rng);
  }
  for (double& v : a) v = std::clamp(v, 0.0, 1.0);
  return RelaxedAction::from_flat(a, n_, m_);
}

std::pair<NetGrads, double> DdpgAgent::explanation_gradients(
    const Batch& states, const Batch& psi_hat) const {
  if (!actor_.attention_enabled())
    throw std::logic_error("explanation gradients need an attention layer");
  const int d = actor_.obs_dim();
  ForwardCache cache;
  const Batch alpha = actor_.attention().forward(states, &cache);
  constexpr double eps = 1e-12;
  const double scale = 1.0 / states.rows;

  Batch dalpha = Batch::zeros(states.rows, d);
  double loss = 0.0;
  for (int r = 0; r < states.rows; ++r) {
    const double* a = alpha.row(r);
    const double* p = psi_hat.row(r);
    double total = 0.0;
    for (int i = 0; i < d; ++i) total += std::fabs(a[i]);
    total += eps;  // alpha is strictly positive, |.| is the identity here
    double dot = 0.0;  // sum_i dL/dahat_i * alpha_i
    std::vector<double> dahat(d);
    for (int i = 0; i < d; ++i) {
      const double ahat = a[i] / total;
      const double e = ahat - p[i];
      loss += scale * e * e / d;
      dahat[i] = scale * 2.0 * e / d;
      dot += dahat[i] * a[i];
    }
    double* g = dalpha.row(r);
    for (int i = 0; i < d; ++i) g[i] = dahat[i] / total - dot / (total * total);
  }
  NetGrads grads = actor_.attention().backward(cache, dalpha);
  return {std::move(grads), loss};
}

ActorUpdate DdpgAgent::compute_actor_update(const Batch& states,
                                            const ExplainContext* explain,
                                            double lambda) const {
  const int d = actor_.obs_dim();
  const int adim = actor_.action_dim();
  const int rows = states.rows;

  AttentionActor::Eval fwd = actor_.forward(states);
  const Batch x = concat_cols(states, fwd.action);
  ForwardCache qcache;
  const Batch q = critic_.forward(x, &qcache);

  ActorUpdate up;
  double qsum = 0.0;
  for (double v : q.data) qsum += v;
  up.actor_loss = -qsum / rows;

  // Ascend Q: minimize -mean(Q).
  Batch dq = Batch::zeros(rows, 1);
  std::fill(dq.data.begin(), dq.data.end(), -1.0 / rows);
  const NetGrads cg = critic_.backward(qcache, dq);

  Batch da = Batch::zeros(rows, adim);
  for (int r = 0; r < rows; ++r)
    std::copy(cg.input_grad.row(r) + d, cg.input_grad.row(r) + d + adim,
              da.row(r));

  NetGrads bg = actor_.body().backward(fwd.body_cache, da);
  up.body_grads = std::move(bg);

  if (actor_.attention_enabled()) {
    Batch dalpha = up.body_grads.input_grad;
    for (size_t i = 0; i < dalpha.data.size(); ++i)
      dalpha.data[i] *= states.data[i] * d;
    up.attention_grads = actor_.attention().backward(fwd.att_cache, dalpha);
    if (explain != nullptr && lambda > 0.0 && explain->states.rows > 0) {
      auto [eg, eloss] = explanation_gradients(explain->states, explain->psi_hat);
      up.attention_grads.add_scaled(eg, lambda);
      up.explain_loss = eloss;
    }
  } else {
    up.attention_grads = actor_.attention().zero_grads();
  }
  return up;
}

BatchLosses DdpgAgent::train_batch(const ReplayBuffer& buffer, Rng& replay_rng,
                                   const ExplainContext* explain) {
  const int k = tc_.batch_size;
  if (buffer.size() < static_cast<size_t>(k))
    throw std::invalid_argument("buffer smaller than batch size");
  const std::vector<size_t> idx = buffer.sample_indices(k, replay_rng);

  const int d = actor_.obs_dim();
  const int adim = actor_.action_dim();
  Batch s = Batch::zeros(k, d);
  Batch a = Batch::zeros(k, adim);
  Batch s2 = Batch::zeros(k, d);
  std::vector<double> r(k);
  for (int i = 0; i < k; ++i) {
    const Transition& t = buffer.at(idx[i]);
    std::copy(t.s.begin(), t.s.end(), s.row(i));
    std::copy(t.a.begin(), t.a.end(), a.row(i));
    std::copy(t.s2.begin(), t.s2.end(), s2.row(i));
    r[i] = t.r;
  }

  // Critic: TD target from target networks.
  const Batch a2 = target_actor_.forward(s2).action;
  const Batch q2 = target_critic_.forward(concat_cols(s2, a2));
  ForwardCache qcache;
  const Batch q = critic_.forward(concat_cols(s, a), &qcache);

  BatchLosses losses;
  Batch dq = Batch::zeros(k, 1);
  for (int i = 0; i < k; ++i) {
    const double target = r[i] + tc_.gamma * q2.data[i];
    const double diff = q.data[i] - target;
    losses.critic_loss += diff * diff / k;
    dq.data[i] = 2.0 * diff / k;
  }
  NetGrads cg = critic_.backward(qcache, dq);
  adam_step(critic_, cg, opt_critic_);

  // Actor: DDPG term plus lambda-weighted explanation term.
  ActorUpdate up = compute_actor_update(s, explain, tc_.lambda_explain);
  losses.actor_loss = up.actor_loss;
  losses.explain_loss = up.explain_loss;
  adam_step(actor_.body(), up.body_grads, opt_body_);
  if (actor_.attention_enabled())
    adam_step(actor_.attention(), up.attention_grads, opt_attention_);

  soft_update(target_actor_.attention(), actor_.attention(), tc_.tau);
  soft_update(target_actor_.body(), actor_.body(), tc_.tau);
  soft_update(target_critic_, critic_, tc_.tau);
  return losses;
}

Policy DdpgAgent::deterministic_policy() const {
  AttentionActor snapshot = actor_;
  return [snapshot = std::move(snapshot)](const std::vector<double>& obs) {
    return snapshot.act_deterministic(obs);
  };
}

std::string DdpgAgent::to_json() const {
  json j;
  j["format"] = "vnet-agent-v1";
  j["num_vehicles"] = n_;
  j["num_gnbs"] = m_;
  j["train"] = json::parse(train_config_to_json(tc_));
  j["actor"] = {{"attention", json::parse(net_to_json(actor_.attention()))},
                {"body", json::parse(net_to_json(actor_.body()))}};
  j["critic"] = json::parse(net_to_json(critic_));
  j["target_actor"] = {
      {"attention", json::parse(net_to_json(target_actor_.attention()))},
      {"body", json::parse(net_to_json(target_actor_.body()))}};
  j["target_critic"] = json::parse(net_to_json(target_critic_));
  j["optim"] = {{"attention", json::parse(adam_to_json(opt_attention_))},
                {"body", json::parse(adam_to_json(opt_body_))},
                {"critic", json::parse(adam_to_json(opt_critic_))}};
  return j.dump();
}

DdpgAgent DdpgAgent::from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("format", "") != "vnet-agent-v1")
    throw std::invalid_argument("unrecognized checkpoint format");
  DdpgAgent agent;
  agent.tc_ = train_config_from_json(j.at("train").dump());
  agent.n_ = j.at("num_vehicles");
  agent.m_ = j.at("num_gnbs");
  agent.actor_ = AttentionActor();
  agent.actor_.set_attention_enabled(agent.tc_.attention_enabled);
  agent.target_actor_.set_attention_enabled(agent.tc_.attention_enabled);
  agent.actor_.attention() = net_from_json(j.at("actor").at("attention").dump());
  agent.actor_.body() = net_from_json(j.at("actor").at("body").dump());
  agent.target_actor_.attention() =
      net_from_json(j.at("target_actor").at("attention").dump());
  agent.target_actor_.body() = net_from_json(j.at("target_actor").at("body").dump());
  agent.critic_ = net_from_json(j.at("critic").dump());
  agent.target_critic_ = net_from_json(j.at("target_critic").dump());
  agent.opt_attention_ = adam_from_json(j.at("optim").at("attention").dump());
  agent.opt_body_ = adam_from_json(j.at("optim").at("body").dump());
  agent.opt_critic_ = adam_from_json(j.at("optim").at("critic").dump());
  return agent;
}

double EnvRollout::step(const std::vector<double>& flat_action) {
  const RelaxedAction a = RelaxedAction::from_flat(
      flat_action, env_.config().num_vehicles, env_.config().num_gnbs);
  return env_.step(a).reward;
}

// --- training loop -----------------------------------------------------------

TrainResult run_training(const NetworkConfig& nc, const TrainConfig& tc,
                         DdpgAgent& agent, std::uint64_t master_seed,
                         const std::function<void(const EpisodeLog&)>& on_episode) {
  nc.validate();
  tc.validate();
  const int d = Environment::obs_dim(nc);
  Rng noise_rng(stream_seed(master_seed, "noise"));
  Rng replay_rng(stream_seed(master_seed, "replay"));
  Rng shapley_pick_rng(stream_seed(master_seed, "shapley"));
  std::uint64_t shapley_counter = 0;

  ReplayBuffer buffer(tc.buffer_capacity, d);
  std::deque<Environment> recent_states;  // snapshots for Shapley rollouts
  constexpr size_t kRingCapacity = 256;

  TrainResult result;
  for (int e = 1; e <= tc.episodes; ++e) {
    Environment env(nc, stream_seed(master_seed, "env", e));
    const double sigma =
        std::max(tc.noise_sigma_min, tc.noise_sigma0 * std::pow(tc.noise_decay, e - 1));

    // Shapley supervision pass: targets are computed once per qualifying
    // episode and held fixed for its updates.
    ExplainContext ctx;
    bool has_ctx = false;
    if (tc.lambda_explain > 0.0 && tc.attention_enabled &&
        e % tc.eval_interval == 0 &&
        buffer.size() >= static_cast<size_t>(tc.batch_size) &&
        !recent_states.empty()) {
      const int count =
          std::min<int>(tc.explain_states, static_cast<int>(recent_states.size()));
      const std::vector<double> baseline = buffer.state_mean();
      const Policy policy = agent.deterministic_policy();
      const RolloutSpec spec{tc.rollout_horizon, tc.gamma, tc.rollouts_per_coalition};
      ctx.states = Batch::zeros(count, d);
      ctx.psi_hat = Batch::zeros(count, d);
      std::uniform_int_distribution<size_t> pick(0, recent_states.size() - 1);
      for (int si = 0; si < count; ++si) {
        const EnvRollout sim(recent_states[pick(shapley_pick_rng)]);
        const std::vector<double> obs = sim.observe();
        const ShapleyReport rep = shapley_for_state(
            sim, policy, baseline, tc.shapley_samples, spec,
            stream_seed(master_seed, "shapley-rollout", shapley_counter++));
        const std::vector<double> psi_hat = normalize_importance(rep.psi);
        std::copy(obs.begin(), obs.end(), ctx.states.row(si));
        std::copy(psi_hat.begin(), psi_hat.end(), ctx.psi_hat.row(si));
      }
      has_ctx = true;
    }

    std::vector<double> obs = env.observe();
    EpisodeLog log;
    log.episode = e;
    int updates = 0;
    for (int t = 0; t < tc.steps_per_episode; ++t) {
      if (recent_states.size() >= kRingCapacity) recent_states.pop_front();
      recent_states.push_back(env);

      const RelaxedAction action = agent.act(obs, sigma, noise_rng);
      StepOutcome out = env.step(action);
      log.mean_reward += out.reward;
      buffer.push({obs, action.flat(), out.reward, out.observation});
      obs = std::move(out.observation);

      if (buffer.size() >= static_cast<size_t>(tc.batch_size)) {
        const BatchLosses l =
            agent.train_batch(buffer, replay_rng, has_ctx ? &ctx : nullptr);
        log.critic_loss += l.critic_loss;
        log.actor_loss += l.actor_loss;
        log.explain_loss += l.explain_loss;
        ++updates;
      }
    }
    log.mean_reward /= tc.steps_per_episode;
    if (updates > 0) {
      log.critic_loss /= updates;
      log.actor_loss /= updates;
      log.explain_loss /= updates;
    }
    result.episodes.push_back(log);
    if (on_episode) on_episode(log);
  }
  return result;
}

}  // namespace vnet
