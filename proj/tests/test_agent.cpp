#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "vnet/agent.hpp"

using namespace vnet;

namespace {

NetworkConfig small_net_cfg() {
  NetworkConfig nc;
  nc.num_vehicles = 2;
  nc.num_gnbs = 2;
  return nc;
}

TrainConfig small_train_cfg() {
  TrainConfig tc;
  tc.hidden1 = 16;
  tc.hidden2 = 8;
  tc.batch_size = 8;
  tc.buffer_capacity = 512;
  return tc;
}

Batch random_states(int rows, int d, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Batch b = Batch::zeros(rows, d);
  for (double& v : b.data) v = u(rng);
  return b;
}

// Rows on the probability simplex, mimicking normalized Shapley targets.
Batch random_simplex(int rows, int d, Rng& rng) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  Batch b = Batch::zeros(rows, d);
  for (int r = 0; r < rows; ++r) {
    double total = 0.0;
    for (int i = 0; i < d; ++i) {
      b.row(r)[i] = u(rng);
      total += b.row(r)[i];
    }
    for (int i = 0; i < d; ++i) b.row(r)[i] /= total;
  }
  return b;
}

double max_abs_diff(const NetGrads& a, const NetGrads& b) {
  double worst = 0.0;
  for (size_t l = 0; l < a.layers.size(); ++l) {
    for (size_t k = 0; k < a.layers[l].dw.size(); ++k)
      worst = std::max(worst,
                       std::fabs(a.layers[l].dw[k] - b.layers[l].dw[k]));
    for (size_t k = 0; k < a.layers[l].db.size(); ++k)
      worst = std::max(worst,
                       std::fabs(a.layers[l].db[k] - b.layers[l].db[k]));
  }
  return worst;
}

}  // namespace

TEST_CASE("attention weights form a probability vector") {
  const NetworkConfig nc = small_net_cfg();
  const TrainConfig tc = small_train_cfg();
  DdpgAgent agent(nc, tc, 1);
  const int d = agent.obs_dim();
  CHECK(d == Environment::obs_dim(nc));

  Rng rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> s(d);
    for (double& v : s) v = u(rng);
    const std::vector<double> alpha = agent.actor().attention_weights(s);
    double total = 0.0;
    for (double a : alpha) {
      CHECK(a > 0.0);
      total += a;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("zeroed attention parameters give the uniform vector") {
  DdpgAgent agent(small_net_cfg(), small_train_cfg(), 3);
  Layer& att = agent.actor().attention().layers()[0];
  std::fill(att.w.begin(), att.w.end(), 0.0);
  std::fill(att.b.begin(), att.b.end(), 0.0);
  const int d = agent.obs_dim();
  const auto alpha = agent.actor().attention_weights(std::vector<double>(d, 0.7));
  for (double a : alpha) CHECK(a == doctest::Approx(1.0 / d).epsilon(1e-12));
}

TEST_CASE("zero state gives zero reweighted input") {
  DdpgAgent agent(small_net_cfg(), small_train_cfg(), 4);
  const int d = agent.obs_dim();
  Batch s = Batch::zeros(1, d);
  const auto ev = agent.actor().forward(s);
  for (double v : ev.weighted.data) CHECK(v == 0.0);
}

TEST_CASE("disabled attention fixes alpha to uniform") {
  TrainConfig tc = small_train_cfg();
  tc.attention_enabled = false;
  DdpgAgent agent(small_net_cfg(), tc, 5);
  const int d = agent.obs_dim();
  Rng rng(6);
  const Batch s = random_states(3, d, rng);
  const auto ev = agent.actor().forward(s);
  for (double a : ev.alpha.data) CHECK(a == doctest::Approx(1.0 / d));
}

TEST_CASE("actions stay in [0,1] under any noise scale") {
  DdpgAgent agent(small_net_cfg(), small_train_cfg(), 7);
  const int d = agent.obs_dim();
  Rng rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(d);
    for (double& v : s) v = u(rng);
    const RelaxedAction a = agent.act(s, 10.0, rng);
    for (double v : a.q) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    for (double v : a.b) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  // sigma = 0 is deterministic.
  const std::vector<double> s(d, 0.5);
  Rng r1(1), r2(2);
  CHECK(agent.act(s, 0.0, r1).flat() == agent.act(s, 0.0, r2).flat());
}

TEST_CASE("replay buffer is a FIFO ring with reproducible sampling") {
  ReplayBuffer buf(3, 2);
  for (int i = 0; i < 5; ++i)
    buf.push({{double(i), 0.0}, {0.0}, double(i), {0.0, 0.0}});
  CHECK(buf.size() == 3);
  // Entries 0 and 1 were evicted.
  double newest_sum = 0.0;
  for (size_t i = 0; i < buf.size(); ++i) newest_sum += buf.at(i).r;
  CHECK(newest_sum == doctest::Approx(2.0 + 3.0 + 4.0));

  Rng a(11), b(11);
  CHECK(buf.sample_indices(3, a) == buf.sample_indices(3, b));

  // Running mean covers everything ever pushed, even evicted entries.
  const auto mean = buf.state_mean();
  CHECK(mean[0] == doctest::Approx((0 + 1 + 2 + 3 + 4) / 5.0));

  ReplayBuffer empty(4, 2);
  CHECK(empty.state_mean() == std::vector<double>({0.0, 0.0}));
  Rng c(1);
  CHECK_THROWS_AS(empty.sample_indices(1, c), std::invalid_argument);
}

TEST_CASE("explanation loss arithmetic on hand-built targets") {
  DdpgAgent agent(small_net_cfg(), small_train_cfg(), 9);
  const int d = agent.obs_dim();
  Rng rng(10);
  const Batch s = random_states(2, d, rng);

  // Targets equal to the produced normalized alpha: loss must vanish.
  Batch psi = Batch::zeros(2, d);
  for (int r = 0; r < 2; ++r) {
    std::vector<double> srow(s.row(r), s.row(r) + d);
    const auto alpha = agent.actor().attention_weights(srow);
    const auto ahat = normalize_importance(alpha);
    std::copy(ahat.begin(), ahat.end(), psi.row(r));
  }
  const auto [g0, l0] = agent.explanation_gradients(s, psi);
  CHECK(l0 == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(max_abs_diff(g0, agent.actor().attention().zero_grads()) < 1e-12);
}

TEST_CASE("explanation gradients match finite differences") {
  NetworkConfig nc;
  nc.num_vehicles = 1;
  nc.num_gnbs = 1;
  TrainConfig tc = small_train_cfg();
  DdpgAgent agent(nc, tc, 12);
  const int d = agent.obs_dim();
  Rng rng(13);
  const Batch s = random_states(3, d, rng);
  const Batch psi = random_simplex(3, d, rng);

  const auto [grads, loss] = agent.explanation_gradients(s, psi);
  CHECK(loss > 0.0);

  Layer& att = agent.actor().attention().layers()[0];
  const double h = 1e-6;
  double worst = 0.0;
  auto fd_check = [&](double& theta, double analytic) {
    const double orig = theta;
    theta = orig + h;
    const double lp = agent.explanation_gradients(s, psi).second;
    theta = orig - h;
    const double lm = agent.explanation_gradients(s, psi).second;
    theta = orig;
    const double fd = (lp - lm) / (2 * h);
    worst = std::max(worst, std::fabs(fd - analytic) /
                                std::max(1.0, std::fabs(fd)));
  };
  // Spot-check a spread of parameters (full sweep is d^2 = 169 weights).
  for (size_t k = 0; k < att.w.size(); k += 7) fd_check(att.w[k], grads.layers[0].dw[k]);
  for (size_t k = 0; k < att.b.size(); ++k) fd_check(att.b[k], grads.layers[0].db[k]);
  CHECK(worst < 1e-5);
}

TEST_CASE("actor gradients through the critic match finite differences") {
  NetworkConfig nc;
  nc.num_vehicles = 1;
  nc.num_gnbs = 1;
  TrainConfig tc = small_train_cfg();
  DdpgAgent agent(nc, tc, 31);
  const int d = agent.obs_dim();
  Rng rng(32);
  const Batch s = random_states(4, d, rng);

  const ActorUpdate up = agent.compute_actor_update(s, nullptr, 0.0);
  const double h = 1e-6;
  double worst = 0.0;
  auto fd_check = [&](double& theta, double analytic) {
    const double orig = theta;
    theta = orig + h;
    const double lp = agent.compute_actor_update(s, nullptr, 0.0).actor_loss;
    theta = orig - h;
    const double lm = agent.compute_actor_update(s, nullptr, 0.0).actor_loss;
    theta = orig;
    const double fd = (lp - lm) / (2 * h);
    worst = std::max(worst, std::fabs(fd - analytic) /
                                std::max(1.0, std::fabs(fd)));
  };
  Layer& att = agent.actor().attention().layers()[0];
  for (size_t k = 0; k < att.w.size(); k += 11)
    fd_check(att.w[k], up.attention_grads.layers[0].dw[k]);
  for (size_t k = 0; k < att.b.size(); k += 3)
    fd_check(att.b[k], up.attention_grads.layers[0].db[k]);
  Layer& body0 = agent.actor().body().layers()[0];
  for (size_t k = 0; k < body0.w.size(); k += 37)
    fd_check(body0.w[k], up.body_grads.layers[0].dw[k]);
  CHECK(worst < 1e-5);
}

TEST_CASE("actor gradient composition: lambda scales the explanation term") {
  DdpgAgent agent(small_net_cfg(), small_train_cfg(), 14);
  const int d = agent.obs_dim();
  Rng rng(15);
  const Batch s = random_states(8, d, rng);

  ExplainContext ctx;
  ctx.states = random_states(4, d, rng);
  ctx.psi_hat = random_simplex(4, d, rng);

  const ActorUpdate plain = agent.compute_actor_update(s, nullptr, 0.0);
  const auto [eg, eloss] = agent.explanation_gradients(ctx.states, ctx.psi_hat);

  const double lambda = 0.37;
  const ActorUpdate combined = agent.compute_actor_update(s, &ctx, lambda);

  NetGrads expected = plain.attention_grads;
  expected.add_scaled(eg, lambda);
  CHECK(max_abs_diff(combined.attention_grads, expected) < 1e-12);
  CHECK(combined.explain_loss == doctest::Approx(eloss).epsilon(1e-12));
  // Body gradients are untouched by the explanation term.
  CHECK(max_abs_diff(combined.body_grads, plain.body_grads) < 1e-15);

  // lambda = 0 reduces exactly to the plain DDPG update.
  const ActorUpdate zero = agent.compute_actor_update(s, &ctx, 0.0);
  CHECK(max_abs_diff(zero.attention_grads, plain.attention_grads) < 1e-15);
  CHECK(zero.explain_loss == 0.0);
}

TEST_CASE("train_batch runs, updates parameters, and stays finite") {
  const NetworkConfig nc = small_net_cfg();
  TrainConfig tc = small_train_cfg();
  DdpgAgent agent(nc, tc, 16);
  const int d = agent.obs_dim();
  const int adim = agent.action_dim();

  ReplayBuffer buf(tc.buffer_capacity, d);
  Rng rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 64; ++i) {
    Transition t;
    t.s.resize(d);
    t.s2.resize(d);
    t.a.resize(adim);
    for (double& v : t.s) v = u(rng);
    for (double& v : t.s2) v = u(rng);
    for (double& v : t.a) v = u(rng);
    t.r = -u(rng);
    buf.push(std::move(t));
  }

  const std::vector<double> before = agent.actor().body().layers()[0].w;
  Rng replay(18);
  double first_loss = 0.0;
  for (int it = 0; it < 10; ++it) {
    const BatchLosses l = agent.train_batch(buf, replay);
    if (it == 0) first_loss = l.critic_loss;
    CHECK(std::isfinite(l.critic_loss));
    CHECK(std::isfinite(l.actor_loss));
    CHECK(l.explain_loss == 0.0);
  }
  CHECK(agent.actor().body().layers()[0].w != before);
  CHECK(first_loss >= 0.0);

  ReplayBuffer tiny(tc.buffer_capacity, d);
  CHECK_THROWS_AS(agent.train_batch(tiny, replay), std::invalid_argument);
}

TEST_CASE("training without enough transitions performs no updates") {
  NetworkConfig nc = small_net_cfg();
  TrainConfig tc = small_train_cfg();
  tc.episodes = 1;
  tc.steps_per_episode = 3;
  tc.batch_size = 64;
  DdpgAgent agent(nc, tc, 19);
  const std::vector<double> before = agent.actor().body().layers()[0].w;
  const TrainResult res = run_training(nc, tc, agent, 99);
  REQUIRE(res.episodes.size() == 1);
  CHECK(res.episodes[0].critic_loss == 0.0);
  CHECK(res.episodes[0].actor_loss == 0.0);
  CHECK(agent.actor().body().layers()[0].w == before);
  CHECK(std::isfinite(res.episodes[0].mean_reward));
}

TEST_CASE("training is reproducible end to end") {
  NetworkConfig nc = small_net_cfg();
  TrainConfig tc = small_train_cfg();
  tc.episodes = 4;
  tc.steps_per_episode = 10;
  tc.eval_interval = 2;
  tc.shapley_samples = 2;
  tc.rollout_horizon = 3;
  tc.rollouts_per_coalition = 1;
  tc.explain_states = 1;

  DdpgAgent a(nc, tc, 20);
  DdpgAgent b(nc, tc, 20);
  const TrainResult ra = run_training(nc, tc, a, 7);
  const TrainResult rb = run_training(nc, tc, b, 7);
  REQUIRE(ra.episodes.size() == rb.episodes.size());
  for (size_t e = 0; e < ra.episodes.size(); ++e) {
    CHECK(ra.episodes[e].mean_reward == rb.episodes[e].mean_reward);
    CHECK(ra.episodes[e].critic_loss == rb.episodes[e].critic_loss);
    CHECK(ra.episodes[e].explain_loss == rb.episodes[e].explain_loss);
  }
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("checkpoint round trip preserves behavior") {
  NetworkConfig nc = small_net_cfg();
  TrainConfig tc = small_train_cfg();
  DdpgAgent agent(nc, tc, 21);
  const std::string j = agent.to_json();
  DdpgAgent loaded = DdpgAgent::from_json(j);
  CHECK(loaded.to_json() == j);
  const int d = agent.obs_dim();
  const std::vector<double> s(d, 0.3);
  CHECK(agent.actor().act_deterministic(s) == loaded.actor().act_deterministic(s));
  CHECK(agent.actor().attention_weights(s) == loaded.actor().attention_weights(s));
  CHECK_THROWS_AS(DdpgAgent::from_json("{\"format\":\"bogus\"}"),
                  std::invalid_argument);
}
