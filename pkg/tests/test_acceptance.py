"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The heavyweight fixtures (full 20k dataset, fully trained quality tiers,
per-seed estimator stacks, desk-scale learning runs) are session-scoped and
shared across criteria.
"""

import filecmp
import os

import numpy as np
import pytest

from mbrollout import env
from mbrollout.data import generate_dataset, split_dataset
from mbrollout.env import EnvConfig
from mbrollout.learner import EvalConfig, bsf_nfq, nfq
from mbrollout.model import (DynamicsModel, predict_next, predict_reward,
                             train_dynamics, STATE_VARS)
from mbrollout.neural import AdamState, Mlp, TrainConfig, adam_step, mse_gradient, mse_loss
from mbrollout.rollout import (LinearBalancingPolicy, divergence_profile,
                               rollout_blind, rollout_informed, rollout_true,
                               value_mb, value_mb_batch)
from mbrollout.valuation import (SeedEstimates, evaluate_estimators, fit_mbro,
                                 fqe, value_mf, pearson)

CFG = EnvConfig()
GAMMA = 0.99
K_HORIZON = 1000
POLICY = LinearBalancingPolicy()


def _report(criterion: str, ok: bool, detail: str) -> None:
    print(f"\n[acceptance] {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{criterion}: {detail}"


@pytest.fixture(scope="session")
def full_dataset():
    return generate_dataset(20_000, seed=1, cfg=CFG)


@pytest.fixture(scope="session")
def full_split(full_dataset):
    return split_dataset(full_dataset, 0.7, seed=2)


@pytest.fixture(scope="session")
def full_tiers(full_dataset, full_split):
    cfg = TrainConfig(learning_rate=0.01, batch_size=100, patience_epochs=100,
                      max_epochs=300, checkpoint_epochs=(1, 10, 100), seed=10)
    return train_dynamics(full_dataset, full_split, cfg)


@pytest.fixture(scope="session")
def estimator_runs(full_dataset):
    """Three independently seeded stacks of (dynamics model, FQE, fitted MBRO)."""
    runs = []
    for seed in (0, 1, 2):
        split = split_dataset(full_dataset, 0.7, seed=2 + seed)
        dyn_cfg = TrainConfig(patience_epochs=100, max_epochs=300,
                              checkpoint_epochs=(1, 10, 100), seed=10 + 1000 * seed)
        tiers, _ = train_dynamics(full_dataset, split, dyn_cfg)
        m = tiers["best"]
        q = fqe(full_dataset, POLICY, GAMMA, 200,
                TrainConfig(seed=20 + 1000 * seed), CFG, epochs_per_iteration=2)
        targets = value_mb_batch(m, full_dataset.states[split.train], POLICY,
                                 GAMMA, K_HORIZON, terminate=True, cfg=CFG)
        fitted = fit_mbro(full_dataset.states[split.train], POLICY, targets,
                          TrainConfig(patience_epochs=50, max_epochs=300,
                                      seed=37 + 1000 * seed))
        runs.append(SeedEstimates(seed, m, q, fitted))
    return runs


def test_criterion_1_random_policy_episode_length():
    mean = env.mean_random_episode_length(10_000, seed=7, cfg=CFG)
    _report("1 random-policy episode length", 20.0 <= mean <= 25.0,
            f"mean={mean:.2f}, expected within [20, 25]")


def test_criterion_2_value_estimator_ordering(full_dataset, estimator_runs):
    rng = np.random.default_rng(99)
    idx = rng.choice(len(full_dataset), 100, replace=False)
    starts = np.concatenate([full_dataset.states[idx],
                             env.reset_batch(100, 100, CFG)])
    report = evaluate_estimators(starts, POLICY, estimator_runs, GAMMA,
                                 K_HORIZON, CFG, max_steps=5000)
    s = report.summary
    rmse_mbro = s["mbro"]["rmse_mean"]
    rmse_fit = s["fitted_mbro"]["rmse_mean"]
    rmse_fqe = s["fqe"]["rmse_mean"]
    corr_mbro = s["mbro"]["correlation_mean"]
    corr_fqe = s["fqe"]["correlation_mean"]
    ok = (rmse_mbro < rmse_fit < rmse_fqe and corr_mbro > 0.95 and corr_fqe < 0.9)
    _report("2 value-estimator ordering", ok,
            f"RMSE mbro={rmse_mbro:.2f} < fitted={rmse_fit:.2f} < fqe={rmse_fqe:.2f}; "
            f"corr mbro={corr_mbro:.4f} (>0.95), fqe={corr_fqe:.4f} (<0.9)")


def test_criterion_3_blind_vs_informed_divergence(full_tiers):
    tiers, _ = full_tiers
    best = tiers["best"]
    s0 = env.reset(778, CFG)
    true_traj = rollout_true(s0, POLICY, 200, CFG, terminate=False)
    scale = best.input_norm.std[:4]
    blind = rollout_blind(best, s0, true_traj.actions)
    informed = rollout_informed(best, s0, POLICY, 200, terminate=False)
    d_blind = divergence_profile(true_traj, blind, scale=scale)
    d_informed = divergence_profile(true_traj, informed, scale=scale)
    ratio = d_informed.mean() / d_blind.mean()
    growth = d_blind[50:101].mean() > d_blind[0:11].mean()
    ok = ratio < 0.25 and growth
    _report("3 blind vs informed divergence", ok,
            f"informed/blind mean ratio={ratio:.4f} (<0.25); "
            f"blind[50:100]={d_blind[50:101].mean():.3f} > blind[0:10]={d_blind[0:11].mean():.3f}")


def test_criterion_4_tier_error_monotonicity(full_tiers):
    _, report = full_tiers
    means = {tier: np.mean([report.tier_val_mse[tier][v] for v in STATE_VARS])
             for tier in ("epoch1", "epoch10", "best")}
    ok = means["epoch1"] > means["epoch10"] > means["best"]
    _report("4 model-quality monotonicity", ok,
            f"val MSE epoch1={means['epoch1']:.2e} > epoch10={means['epoch10']:.2e} "
            f"> best={means['best']:.2e}")


def test_criterion_5_learning_robustness(full_dataset, full_tiers):
    tiers, _ = full_tiers
    best = tiers["best"]
    ec = EvalConfig(n_episodes=100, max_steps=1000, gamma=GAMMA, seed=12345)
    bsf_ratios, nfq_ratios, min_perfect = [], [], []
    for seed in (20, 1020, 2020):
        rb = bsf_nfq(full_dataset, best, GAMMA, 20, 200, ec,
                     TrainConfig(seed=seed), CFG, epochs=300)
        bsf_ratios.append(rb.perfect_ratio)
        min_perfect.append(sum(r.perfect for r in rb.records))
    for seed in (20, 1020, 2020):
        rn = nfq(full_dataset, GAMMA, 100, ec, TrainConfig(seed=seed), CFG, epochs=300)
        nfq_ratios.append(rn.perfect_ratio)
    bsf_mean = float(np.mean(bsf_ratios))
    nfq_mean = float(np.mean(nfq_ratios))
    ok = bsf_mean > nfq_mean and all(n >= 1 for n in min_perfect)
    _report("5 learning robustness", ok,
            f"perfect ratio BSF-NFQ={bsf_mean:.3f} > NFQ={nfq_mean:.3f}; "
            f"perfect policies per BSF seed={min_perfect} (each >= 1)")


def test_criterion_6_numerical_substrate(full_tiers):
    # backprop vs central finite differences
    rng = np.random.default_rng(0)
    net = Mlp.init([4, 6, 3, 1], rng)
    x = rng.normal(size=(6, 4))
    y = rng.normal(size=(6, 1))
    gw, gb, _ = mse_gradient(net, x, y)
    h = 1e-6
    max_rel = 0.0
    for arr, grad in list(zip(net.weights, gw)) + list(zip(net.biases, gb)):
        flat, gflat = arr.ravel(), np.asarray(grad).ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = mse_loss(net, x, y)
            flat[i] = orig - h
            down = mse_loss(net, x, y)
            flat[i] = orig
            num = (up - down) / (2 * h)
            max_rel = max(max_rel, abs(gflat[i] - num) / max(abs(num), 1e-8))
    grad_ok = max_rel <= 1e-5

    # Adam first step closed form
    net2 = Mlp(weights=[np.array([[1.0, -2.0]])], biases=[np.array([0.5])])
    g = [np.array([[0.3, -0.7]])]
    state = AdamState.for_net(net2)
    adam_step(net2, g, [np.array([0.2])], state, learning_rate=0.01)
    adam_ok = np.allclose(
        net2.weights[0], np.array([[1.0, -2.0]]) - 0.01 * g[0] / (np.abs(g[0]) + 1e-8),
        atol=1e-12,
    ) and np.isclose(net2.biases[0][0], 0.5 - 0.01 * 0.2 / (0.2 + 1e-8), atol=1e-12)

    # value telescoping on a trained model
    tiers, _ = full_tiers
    m = tiers["best"]
    s0 = np.array([0.03, -0.02, 0.01, 0.04])
    a = POLICY.act(s0)
    s1 = predict_next(m, s0, a)
    r0 = predict_reward(m, s0, a, s1)
    lhs = value_mb(m, s0, POLICY, 0.97, 50, terminate=False)
    rhs = r0 + 0.97 * value_mb(m, s1, POLICY, 0.97, 49, terminate=False)
    telescope_ok = abs(lhs - rhs) <= 1e-9

    # geometric series under a constant-1 reward model
    const = DynamicsModel.zero_delta(reward_constant=1.0)
    v = value_mb(const, np.zeros(4), POLICY, 0.99, 1000, terminate=False)
    geom_ok = abs(v - (1 - 0.99**1000) / 0.01) <= 1e-9

    ok = grad_ok and adam_ok and telescope_ok and geom_ok
    _report("6 numerical substrate", ok,
            f"grad max rel err={max_rel:.2e} (<=1e-5); adam={adam_ok}; "
            f"telescoping diff={abs(lhs - rhs):.2e} (<=1e-9); "
            f"geometric diff={abs(v - (1 - 0.99**1000) / 0.01):.2e} (<=1e-9)")


def test_criterion_7_tabular_fqe_oracle():
    from test_valuation import ConstantPolicy, two_state_mdp_dataset

    gamma = 0.9
    v_a = 1.0 / (1.0 - gamma**2)  # analytic Bellman solution of the 2-cycle
    v_b = gamma * v_a
    d = two_state_mdp_dataset()
    pi = ConstantPolicy(0)
    q = fqe(d, pi, gamma, 400, TrainConfig(seed=22), CFG, epochs_per_iteration=10)
    got_a = value_mf(q, np.array([0.0, 0, 0, 0]), pi)
    got_b = value_mf(q, np.array([1.0, 0, 0, 0]), pi)
    err = max(abs(got_a - v_a) / v_a, abs(got_b - v_b) / v_b)
    _report("7 tabular FQE oracle", err <= 0.01,
            f"V(A)={got_a:.4f} vs {v_a:.4f}, V(B)={got_b:.4f} vs {v_b:.4f}, "
            f"max rel err={err:.4f} (<=0.01)")


def test_criterion_8_pipeline_determinism(tmp_path):
    from mbrollout.cli import main
    from mbrollout.config import ExperimentConfig, save_config

    cfg = ExperimentConfig()
    cfg.n_tuples = 400
    cfg.dynamics_train.max_epochs = 15
    cfg.dynamics_train.patience_epochs = 15
    cfg.q_train.max_epochs = 30
    cfg.q_train.patience_epochs = 10
    cfg.value.n_start_states = 10
    cfg.value.fqe_iterations = 3
    cfg.value.k_horizon = 20
    cfg.value.true_max_steps = 100
    cfg.value.seeds = (0, 1)
    cfg.learn.nfq_iterations = 2
    cfg.learn.bsf_iterations = 2
    cfg.learn.bsf_k_horizon = 10
    cfg.learn.fit_epochs = 2
    cfg.learn.seeds = (0, 1)
    cfg.policy_eval.n_episodes = 5
    cfg.policy_eval.max_steps = 50
    cfg.rollout_compare_steps = 30
    config_path = tmp_path / "cfg.ini"
    save_config(cfg, config_path)

    outs = [str(tmp_path / "a"), str(tmp_path / "b")]
    for out in outs:
        for argv in (
            ["generate"], ["train-models"], ["rollout-compare"],
            ["evaluate-values"], ["learn", "--algorithm", "nfq"],
            ["learn", "--algorithm", "bsf-nfq"], ["report"],
        ):
            rc = main(argv + ["--config", str(config_path), "--out", out])
            assert rc == 0, argv

    mismatches = []
    for root, _, files in os.walk(outs[0]):
        for name in files:
            a = os.path.join(root, name)
            rel = os.path.relpath(a, outs[0])
            b = os.path.join(outs[1], rel)
            if not (os.path.exists(b) and filecmp.cmp(a, b, shallow=False)):
                mismatches.append(rel)
    _report("8 pipeline determinism", mismatches == [],
            f"{len(mismatches)} differing files: {mismatches[:5]}")
