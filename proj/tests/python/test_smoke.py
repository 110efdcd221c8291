import math

import pytest

try:
    import _core as core
except ImportError:  # installed package layout
    from vnetslice import _core as core


def test_environment_roundtrip():
    cfg = core.NetworkConfig()
    cfg.validate()
    env = core.Environment(cfg, seed=7)
    obs = env.observe()
    assert len(obs) == core.Environment.obs_dim_for(cfg) == 93
    assert all(0.0 <= v <= 1.0 for v in obs)

    nm = cfg.num_vehicles * cfg.num_gnbs
    act = core.RelaxedAction.from_flat([0.5] * (2 * nm), cfg.num_vehicles, cfg.num_gnbs)
    out = env.step(act)
    assert out.reward <= 0.0
    assert len(out.observation) == 93


def test_projection_matches_documented_examples():
    cfg = core.NetworkConfig()
    cfg.num_vehicles = 1
    a = core.RelaxedAction()
    a.n, a.m = 1, 3
    a.q = [0.2, 0.5, 0.3]
    a.b = [0.5, 0.5, 0.5]
    f = core.project_action(a, cfg)
    assert f.assoc == [1]


def test_channel_math():
    cfg = core.NetworkConfig()
    assert core.channel_gain(0, 0, 0, 100, 3.5) == pytest.approx(100 ** -3.5)
    r = core.throughput(273, 1e-7, 0.0, cfg)
    assert r == pytest.approx(3217083183.1008587)
    assert core.delay(3e5, 3.6e6, cfg) == pytest.approx(0.08483333333333333)


def test_shapley_additive_game():
    w = [1.0, 2.0, 3.0]
    rep = core.shapley_exact(3, lambda members: sum(w[i] for i in members))
    assert rep.psi == pytest.approx(w)

    mc = core.shapley_mc(3, lambda members: sum(w[i] for i in members), 200, seed=1)
    assert mc.psi == pytest.approx(w)  # additive games have zero variance
    assert core.normalize_importance([-1.0, 3.0]) == pytest.approx([0.25, 0.75])


def test_agent_attention_and_training():
    cfg = core.NetworkConfig()
    cfg.num_vehicles = 2
    cfg.num_gnbs = 2
    tc = core.TrainConfig()
    tc.hidden1, tc.hidden2 = 16, 8
    tc.episodes, tc.steps_per_episode = 2, 5
    tc.batch_size = 8
    agent = core.DdpgAgent(cfg, tc, init_seed=3)

    s = [0.5] * agent.obs_dim()
    alpha = agent.attention_weights(s)
    assert math.isclose(sum(alpha), 1.0, abs_tol=1e-9)
    assert min(alpha) > 0.0
    act = agent.act(s)
    assert all(0.0 <= v <= 1.0 for v in act.flat())

    logs = core.run_training(cfg, tc, agent, master_seed=11)
    assert len(logs) == 2
    assert all(math.isfinite(ep.mean_reward) for ep in logs)

    clone = core.DdpgAgent.from_json(agent.to_json())
    assert clone.act(s).flat() == agent.act(s).flat()


def test_qos_evaluation():
    cfg = core.NetworkConfig()
    q = core.evaluate_random_policy(cfg, episodes=3, steps=10, seed=5)
    assert q.urllc_satisfied <= q.urllc_opportunities
    assert q.embb_satisfied <= q.embb_opportunities
    assert core.pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
