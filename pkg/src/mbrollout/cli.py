"""Command-line pipeline: generate, train-models, rollout-compare,
evaluate-values, learn, report."""

from __future__ import annotations

import argparse
import csv
import glob
import json
import os
import sys

import numpy as np

from . import config as config_mod
from . import data as data_mod
from . import learner as learner_mod
from . import model as model_mod
from . import rollout as rollout_mod
from . import valuation as valuation_mod
from .config import ExperimentConfig
from .model import QUALITY_TIERS
from .neural import TrainConfig
from .rollout import LinearBalancingPolicy


def _load_experiment(args) -> ExperimentConfig:
    if args.config:
        cfg = config_mod.load_config(args.config)
    else:
        cfg = config_mod.PRESETS[args.preset]()
    if args.seed_offset:
        cfg = cfg.with_seed_offset(args.seed_offset)
    return cfg


def _dataset_path(out: str) -> str:
    return os.path.join(out, "dataset.csv")


def cmd_generate(args) -> int:
    cfg = _load_experiment(args)
    os.makedirs(args.out, exist_ok=True)
    d = data_mod.generate_dataset(cfg.n_tuples, cfg.data_seed, cfg.env)
    data_mod.save_dataset(d, _dataset_path(args.out))
    cfg.env.save(os.path.join(args.out, "env_config.txt"))
    print(f"wrote {len(d)} tuples to {_dataset_path(args.out)}")
    return 0


def _load_dataset(args):
    return data_mod.load_dataset(_dataset_path(args.out))


def cmd_train_models(args) -> int:
    cfg = _load_experiment(args)
    d = _load_dataset(args)
    split = data_mod.split_dataset(d, cfg.split_ratio, cfg.split_seed)
    tiers, report = model_mod.train_dynamics(d, split, cfg.dynamics_train)

    models_dir = os.path.join(args.out, "models")
    for tier, m in tiers.items():
        model_mod.save_model(m, os.path.join(models_dir, tier))
    curves_dir = os.path.join(args.out, "learning_curves")
    os.makedirs(curves_dir, exist_ok=True)
    results = dict(report.sub_results)
    results["reward"] = report.reward_result
    for name, result in results.items():
        with open(os.path.join(curves_dir, f"{name}.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_loss", "val_loss"])
            for e, (tl, vl) in enumerate(zip(result.train_losses, result.val_losses), start=1):
                writer.writerow([e, repr(tl), repr(vl)])
    manifest = {
        "tiers": list(QUALITY_TIERS),
        "tier_val_mse": report.tier_val_mse,
        "seed": cfg.dynamics_train.seed,
    }
    with open(os.path.join(models_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote model bundles for tiers {', '.join(QUALITY_TIERS)} to {models_dir}")
    return 0


def cmd_rollout_compare(args) -> int:
    cfg = _load_experiment(args)
    pi = LinearBalancingPolicy()
    steps = cfg.rollout_compare_steps
    from .env import reset

    s0 = reset(cfg.data_seed + 777, cfg.env)
    true_traj = rollout_mod.rollout_true(s0, pi, steps, cfg.env, terminate=False)

    out_dir = os.path.join(args.out, "rollout_compare")
    os.makedirs(out_dir, exist_ok=True)
    for tier in QUALITY_TIERS:
        m = model_mod.load_model(os.path.join(args.out, "models", tier))
        scale = m.input_norm.std[:4]
        blind = rollout_mod.rollout_blind(m, s0, true_traj.actions)
        informed = rollout_mod.rollout_informed(m, s0, pi, steps, terminate=False)
        for mode, traj in (("blind", blind), ("informed", informed)):
            profile = rollout_mod.divergence_profile(true_traj, traj, scale=scale)
            path = os.path.join(out_dir, f"{tier}_{mode}.csv")
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["step", "divergence"])
                for k, v in enumerate(profile):
                    writer.writerow([k, repr(float(v))])
    print(f"wrote {len(QUALITY_TIERS) * 2} divergence profiles to {out_dir}")
    return 0


def _pick_start_states(d, n, seed, env_cfg) -> np.ndarray:
    """Half dataset states, half fresh environment resets."""
    rng = np.random.default_rng(seed)
    n_data = n // 2
    idx = rng.choice(len(d), size=n_data, replace=False)
    from .env import reset_batch

    fresh = reset_batch(n - n_data, seed + 1, env_cfg)
    return np.concatenate([d.states[idx], fresh], axis=0)


def cmd_evaluate_values(args) -> int:
    cfg = _load_experiment(args)
    d = _load_dataset(args)
    pi = LinearBalancingPolicy()
    vc = cfg.value
    starts = _pick_start_states(d, vc.n_start_states, cfg.data_seed + 99, cfg.env)

    runs = []
    for seed in vc.seeds:
        split = data_mod.split_dataset(d, cfg.split_ratio, cfg.split_seed + seed)
        dyn_cfg = _reseed(cfg.dynamics_train, cfg.dynamics_train.seed + 1000 * seed)
        tiers, _ = model_mod.train_dynamics(d, split, dyn_cfg)
        m = tiers["best"]

        q_cfg = _reseed(cfg.q_train, cfg.q_train.seed + 1000 * seed)
        q = valuation_mod.fqe(d, pi, vc.gamma, vc.fqe_iterations, q_cfg, cfg.env,
                              epochs_per_iteration=vc.fqe_epochs_per_iteration)
        v_targets = rollout_mod.value_mb_batch(m, d.states[split.train], pi, vc.gamma,
                                               vc.k_horizon, terminate=True, cfg=cfg.env)
        fitted = valuation_mod.fit_mbro(d.states[split.train], pi, v_targets,
                                        _reseed(cfg.q_train, q_cfg.seed + 17))
        runs.append(valuation_mod.SeedEstimates(seed, m, q, fitted))

    report = valuation_mod.evaluate_estimators(starts, pi, runs, vc.gamma, vc.k_horizon,
                                               cfg.env, max_steps=vc.true_max_steps)
    os.makedirs(args.out, exist_ok=True)
    report.save_csv(os.path.join(args.out, "value_estimates.csv"))
    report.save_summary(os.path.join(args.out, "value_summary.json"))
    print(json.dumps(report.summary, indent=2, sort_keys=True))
    return 0


def _reseed(tc: TrainConfig, seed: int) -> TrainConfig:
    return TrainConfig(learning_rate=tc.learning_rate, batch_size=tc.batch_size,
                       patience_epochs=tc.patience_epochs, max_epochs=tc.max_epochs,
                       checkpoint_epochs=tc.checkpoint_epochs, seed=seed)


def cmd_learn(args) -> int:
    cfg = _load_experiment(args)
    d = _load_dataset(args)
    lc = cfg.learn
    out_dir = os.path.join(args.out, args.algorithm)
    os.makedirs(out_dir, exist_ok=True)

    ratios = []
    for seed in lc.seeds:
        q_cfg = _reseed(cfg.q_train, cfg.q_train.seed + 1000 * seed)
        if args.algorithm == "nfq":
            run = learner_mod.nfq(d, cfg.value.gamma, lc.nfq_iterations, cfg.policy_eval,
                                  q_cfg, cfg.env, epochs=lc.fit_epochs)
        else:
            m = model_mod.load_model(os.path.join(args.out, "models", "best"))
            run = learner_mod.bsf_nfq(d, m, cfg.value.gamma, lc.bsf_iterations,
                                      lc.bsf_k_horizon, cfg.policy_eval, q_cfg,
                                      cfg.env, epochs=lc.fit_epochs)
        run.save_csv(os.path.join(out_dir, f"seed{seed}.csv"))
        ratios.append(run.perfect_ratio)

    ratios = np.array(ratios)
    stderr = float(ratios.std(ddof=1) / np.sqrt(len(ratios))) if len(ratios) > 1 else 0.0
    summary = {
        "algorithm": args.algorithm,
        "iterations": lc.nfq_iterations if args.algorithm == "nfq" else lc.bsf_iterations,
        "seeds": list(lc.seeds),
        "optimal_policy_ratio_mean": float(ratios.mean()),
        "optimal_policy_ratio_stderr": stderr,
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_report(args) -> int:
    collected = {}
    for path in sorted(glob.glob(os.path.join(args.out, "**", "*summary*.json"),
                                 recursive=True)):
        rel = os.path.relpath(path, args.out)
        with open(path) as fh:
            collected[rel] = json.load(fh)
    report_path = os.path.join(args.out, "report.json")
    with open(report_path, "w") as fh:
        json.dump(collected, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {report_path} ({len(collected)} summaries)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mbrollout",
        description="Offline cart-pole workbench: model rollouts vs. bootstrapped Q-values",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="experiment config file (INI)")
        p.add_argument("--preset", default="desk", choices=sorted(config_mod.PRESETS))
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed-offset", type=int, default=0, dest="seed_offset")

    for name, fn in (
        ("generate", cmd_generate),
        ("train-models", cmd_train_models),
        ("rollout-compare", cmd_rollout_compare),
        ("evaluate-values", cmd_evaluate_values),
        ("report", cmd_report),
    ):
        p = sub.add_parser(name)
        common(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("learn")
    common(p)
    p.add_argument("--algorithm", required=True, choices=["nfq", "bsf-nfq"])
    p.set_defaults(fn=cmd_learn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
