"""End-to-end experiment orchestration: runs, evaluations, reports.

A single config schema drives every stage; the desk profile shrinks
the step budget and seed count to something a laptop finishes in
minutes while the full profile keeps the complete budget.  Every output
table goes through metrics.write_csv, so reruns with the same seeds
are byte-identical; wall-clock timings live in separate yaml files
that make no such promise.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .configio import ConfigError, dump_yaml, from_dict
from .env import RewardMode
from .layout import LayoutConfig, LayoutPattern, make_layout
from .metrics import read_csv, write_csv
from .ppo import PpoConfig
from .predictor import (
    PredictorConfig,
    WindPredictor,
    evaluate_predictor,
    generate_dataset,
    train_predictor,
)
from .setups import SetupKind, build_team
from .training import (
    EpisodeRecord,
    TrainConfig,
    load_policy_value,
    run_episodes,
    save_policy_value,
    train,
)
from .wind import WindConfig

DEFAULT_SETUPS = [
    SetupKind.SINGLE_AGENT,
    SetupKind.MULTI_AGENT,
    SetupKind.BROADCASTING,
    SetupKind.BY_CHOICE,
]

CONVERGENCE_WINDOW = 5
CONVERGENCE_TOLERANCE = 0.05


@dataclass
class EvalConfig:
    episodes: int = 20
    seed: int = 9000

    def __post_init__(self) -> None:
        if self.episodes < 1:
            raise ConfigError("eval episodes must be >= 1")


@dataclass
class ScalingConfig:
    counts: list[int] = field(default_factory=lambda: [8, 16, 24])


@dataclass
class SweepConfig:
    neighbor_counts: list[int] = field(default_factory=lambda: [0, 1, 3, 4, 5])


@dataclass
class ExperimentConfig:
    """Everything one invocation needs; subcommands read their slice."""

    setup: SetupKind = SetupKind.MULTI_AGENT
    setups: list[SetupKind] = field(default_factory=lambda: list(DEFAULT_SETUPS))
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2])
    episode_length: int = 2000
    reward_mode: RewardMode = RewardMode.PER_SHARE
    neighbor_count: int = 4
    comm_cost: float = 0.0125
    predictor_path: str | None = None
    predictor_seed: int = 7
    layout: LayoutConfig = field(default_factory=LayoutConfig)
    wind: WindConfig = field(default_factory=WindConfig)
    ppo: PpoConfig = field(default_factory=PpoConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    predictor_train: PredictorConfig = field(default_factory=PredictorConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    scaling: ScalingConfig = field(default_factory=ScalingConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)

    def __post_init__(self) -> None:
        if self.episode_length < 1:
            raise ConfigError("episode_length must be >= 1")
        if self.comm_cost < 0:
            raise ConfigError("comm_cost must be >= 0")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        if not 0 <= self.neighbor_count < max(self.layout.turbine_count, 1):
            raise ConfigError(
                f"neighbor_count must be in [0, {self.layout.turbine_count - 1}]"
            )
        # the wind must be able to out-turn the turbines at peak speed,
        # otherwise tracking is trivial and anticipation has no value
        if self.wind.main_rotation_step_max <= self.wind.turbine_rotation_step:
            raise ConfigError(
                "main_rotation_step_max must exceed turbine_rotation_step"
            )


PROFILES: dict[str, dict] = {
    "desk": {
        "seeds": [0, 1, 2],
        "train": {"max_steps": 200_000, "num_parallel_envs": 9},
        "eval": {"episodes": 20},
    },
    "full": {
        "seeds": list(range(10)),
        "train": {"max_steps": 2_000_000, "num_parallel_envs": 9},
        "eval": {"episodes": 20},
    },
}


def merge_profile(data: dict, profile: str | None) -> dict:
    """Profile supplies defaults; explicit config keys win over it."""
    if profile is None:
        return data
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}, expected one of {sorted(PROFILES)}")
    merged = copy.deepcopy(PROFILES[profile])
    _deep_update(merged, data)
    return merged


def _deep_update(base: dict, override: dict) -> None:
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], value)
        else:
            base[key] = value


def experiment_from_dict(data: dict, profile: str | None = None) -> ExperimentConfig:
    return from_dict(ExperimentConfig, merge_profile(data, profile))


def detect_convergence(
    steps: list[int],
    rewards: list[float],
    window: int = CONVERGENCE_WINDOW,
    tolerance: float = CONVERGENCE_TOLERANCE,
) -> int:
    """First step whose reward moving average stays near the final one.

    The moving average (over up to `window` trailing summaries) at each
    index is compared to the final moving average; convergence is the
    earliest index from which every later average stays within
    `tolerance` of the final value, falling back to the last step when
    the curve never settles.
    """
    pairs = [(s, r) for s, r in zip(steps, rewards) if not np.isnan(r)]
    if not pairs:
        raise ValueError("no reward summaries to analyse")
    steps = [p[0] for p in pairs]
    rewards = [p[1] for p in pairs]
    averages = [float(np.mean(rewards[max(0, i - window + 1) : i + 1])) for i in range(len(rewards))]
    final = averages[-1]
    threshold = tolerance * max(abs(final), 1e-9)
    for i in range(len(averages)):
        if all(abs(a - final) <= threshold for a in averages[i:]):
            return steps[i]
    return steps[-1]


def _comm_setup(setup: SetupKind) -> bool:
    return setup in (SetupKind.BROADCASTING, SetupKind.BY_CHOICE)


def _load_predictor(config: ExperimentConfig, out_dir: Path) -> WindPredictor | None:
    path = config.predictor_path
    if path is None:
        default = out_dir / "predictor" / "predictor.nn"
        if default.exists():
            path = str(default)
    if path is None:
        return None
    return WindPredictor.load(path)


def _team_factory(
    config: ExperimentConfig,
    setup: SetupKind,
    layout,
    predictor: WindPredictor | None,
):
    if _comm_setup(setup) and predictor is None:
        raise ConfigError(f"{setup.value} needs a trained predictor (predictor_path)")

    def factory(rng: np.random.Generator):
        return build_team(
            setup,
            layout,
            config.wind,
            reward_mode=config.reward_mode,
            episode_length=config.episode_length,
            neighbor_count=config.neighbor_count,
            comm_cost=config.comm_cost,
            predictor=predictor,
            rng=rng,
        )

    return factory


SUMMARY_FIELDS = [
    "step",
    "episode_count",
    "mean_episode_reward",
    "mean_agent_return",
    "mean_agent_sends",
    "policy_loss",
    "value_loss",
    "entropy",
    "learning_rate",
    "update_count",
]

EPISODE_FIELDS = [
    "episode",
    "end_step",
    "reward",
    "efficiency_sum",
    "mean_agent_return",
    "sends_per_turbine",
    "alignment_mean",
]

EVAL_FIELDS = [
    "setup",
    "seed",
    "episode",
    "env_seed",
    "reward",
    "efficiency_sum",
    "cost_per_turbine",
    "sends_per_turbine",
    "alignment_mean",
]


def run_predictor_job(config: ExperimentConfig, out_dir: Path) -> Path:
    """Generate wind data, fit the predictor, save it with its report."""
    pdir = Path(out_dir) / "predictor"
    pdir.mkdir(parents=True, exist_ok=True)
    pcfg = config.predictor_train
    rng = np.random.default_rng(np.random.SeedSequence([config.predictor_seed, 1]))
    train_set = generate_dataset(config.layout, config.wind, pcfg, pcfg.train_episodes, rng)
    eval_rng = np.random.default_rng(np.random.SeedSequence([config.predictor_seed, 2]))
    eval_set = generate_dataset(config.layout, config.wind, pcfg, pcfg.eval_episodes, eval_rng)
    predictor = WindPredictor.build(pcfg, np.random.default_rng(np.random.SeedSequence([config.predictor_seed, 3])))
    losses = train_predictor(predictor, train_set, pcfg, np.random.default_rng(np.random.SeedSequence([config.predictor_seed, 4])))
    scores = evaluate_predictor(predictor, eval_set)
    path = pdir / "predictor.nn"
    predictor.save(
        path,
        {
            "wind": {
                "main_rotation_step_max": config.wind.main_rotation_step_max,
                "turbine_rotation_step": config.wind.turbine_rotation_step,
                "noise_scale": config.wind.noise_scale,
                "noise_amplitude": config.wind.noise_amplitude,
                "advection_speed": config.wind.advection_speed,
            },
            "dataset_hash": train_set.content_hash(),
            "train_samples": len(train_set),
            "final_train_loss": losses[-1],
            "model_error_deg": scores["model_error_deg"],
            "persistence_error_deg": scores["persistence_error_deg"],
        },
    )
    write_csv(
        pdir / "losses.csv",
        ["epoch", "mse"],
        [{"epoch": i, "mse": loss} for i, loss in enumerate(losses)],
    )
    return path


def _run_dir(out_dir: Path, setup: SetupKind, seed: int, turbine_count: int | None = None) -> Path:
    name = setup.value if turbine_count is None else f"{setup.value}_c{turbine_count}"
    return Path(out_dir) / name / f"seed_{seed}"


def _run_complete(run_dir: Path) -> bool:
    return (run_dir / "summaries.csv").exists() and (run_dir / "checkpoints" / "final.nn").exists()


def run_training(
    config: ExperimentConfig,
    out_dir: str | Path,
    setup: SetupKind | None = None,
    turbine_count: int | None = None,
    neighbor_count: int | None = None,
    reuse: bool = True,
) -> list[Path]:
    """Train config.seeds runs of one setup; returns the run directories.

    turbine_count/neighbor_count override the config for scaling and
    sweep variants.  Completed runs (summary + final checkpoint
    present) are left untouched when reuse is on.
    """
    out_dir = Path(out_dir)
    setup = SetupKind(setup or config.setup)
    cfg = copy.deepcopy(config)
    if turbine_count is not None:
        cfg.layout.turbine_count = turbine_count
    if neighbor_count is not None:
        cfg.neighbor_count = neighbor_count
    predictor = _load_predictor(cfg, out_dir) if _comm_setup(setup) else None
    dirs = []
    suffix = turbine_count if turbine_count != config.layout.turbine_count else None
    if neighbor_count is not None and neighbor_count != config.neighbor_count:
        suffix = f"k{neighbor_count}"
    for seed in cfg.seeds:
        run_dir = _run_dir(out_dir, setup, seed, suffix)
        dirs.append(run_dir)
        if reuse and _run_complete(run_dir):
            continue
        run_dir.mkdir(parents=True, exist_ok=True)
        layout = make_layout(cfg.layout, np.random.default_rng(np.random.SeedSequence([seed, 11])))
        factory = _team_factory(cfg, setup, layout, predictor)
        meta = {
            "setup": setup.value,
            "turbine_count": layout.turbine_count,
            "neighbor_count": cfg.neighbor_count if _comm_setup(setup) else 0,
            "comm_cost": cfg.comm_cost,
            "reward_mode": cfg.reward_mode.value,
            "episode_length": cfg.episode_length,
            "seed": seed,
            "predictor_hash": predictor.parameter_hash() if predictor else None,
        }
        result = train(
            factory,
            cfg.ppo,
            cfg.train,
            seed,
            checkpoint_dir=run_dir / "checkpoints",
            checkpoint_meta=meta,
        )
        write_csv(run_dir / "summaries.csv", SUMMARY_FIELDS, result.summaries)
        write_csv(run_dir / "episodes.csv", EPISODE_FIELDS, result.episodes)
        dump_yaml(
            {"wall_seconds": result.wall_seconds, "total_steps": result.total_steps},
            run_dir / "timing.yaml",
        )
        echo = copy.deepcopy(cfg)
        echo.setup = setup
        dump_yaml(echo, run_dir / "config.yaml")
    return dirs


def _train_job(config: ExperimentConfig, out_dir: str, setup_value: str, seed: int) -> None:
    cfg = copy.deepcopy(config)
    cfg.seeds = [seed]
    run_training(cfg, Path(out_dir), SetupKind(setup_value))


def train_parallel(
    config: ExperimentConfig, out_dir: str | Path, setup: SetupKind | None, jobs: int
) -> None:
    """Fan seeds out over worker processes; output files are identical
    to a serial run since every seed owns its directory."""
    setup = SetupKind(setup or config.setup)
    if jobs <= 1 or len(config.seeds) <= 1:
        run_training(config, out_dir, setup)
        return
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=min(jobs, len(config.seeds))) as pool:
        futures = [
            pool.submit(_train_job, config, str(out_dir), setup.value, seed)
            for seed in config.seeds
        ]
        for fut in futures:
            fut.result()


def convergence_rows(out_dir: Path, setups: list[SetupKind], seeds: list[int]) -> list[dict]:
    rows = []
    for setup in setups:
        for seed in seeds:
            run_dir = _run_dir(out_dir, setup, seed)
            data = read_csv(run_dir / "summaries.csv")
            steps = [int(r["step"]) for r in data]
            rewards = [float(r["mean_episode_reward"]) for r in data]
            step = detect_convergence(steps, rewards)
            timing = _read_yaml(run_dir / "timing.yaml")
            rows.append(
                {
                    "setup": setup.value,
                    "seed": seed,
                    "convergence_step": step,
                    "final_reward": float(np.mean([r for r in rewards if not np.isnan(r)][-CONVERGENCE_WINDOW:])),
                    "wall_seconds": float(timing.get("wall_seconds", float("nan"))),
                }
            )
    return rows


def _read_yaml(path: Path) -> dict:
    import yaml

    if not path.exists():
        return {}
    data = yaml.safe_load(path.read_text())
    return data if isinstance(data, dict) else {}


def eval_env_seed(base: int, count: int, episode: int) -> int:
    """Environment seed shared by inference, scaling and the stream server."""
    return int(np.random.SeedSequence([base, count, episode]).generate_state(1)[0])


def _records_to_rows(setup: SetupKind, seed: int, records: list[EpisodeRecord], extra: dict | None = None) -> list[dict]:
    rows = []
    for rec in records:
        row = {
            "setup": setup.value,
            "seed": seed,
            "episode": rec.episode,
            "env_seed": rec.env_seed,
            "reward": rec.reward,
            "efficiency_sum": rec.efficiency_sum,
            "cost_per_turbine": rec.cost_per_turbine,
            "sends_per_turbine": rec.sends_per_turbine,
            "alignment_mean": rec.alignment_mean,
        }
        row.update(extra or {})
        rows.append(row)
    return rows


def run_inference(
    config: ExperimentConfig, out_dir: str | Path, setups: list[SetupKind] | None = None
) -> Path:
    """Greedy evaluation of trained checkpoints on the training layout."""
    out_dir = Path(out_dir)
    setups = [SetupKind(s) for s in (setups or config.setups)]
    count = config.layout.turbine_count
    env_seeds = [eval_env_seed(config.eval.seed, count, ep) for ep in range(config.eval.episodes)]
    rows: list[dict] = []
    for setup in setups:
        predictor = _load_predictor(config, out_dir) if _comm_setup(setup) else None
        for seed in config.seeds:
            run_dir = _run_dir(out_dir, setup, seed)
            policy, _, _ = load_policy_value(run_dir / "checkpoints" / "final.nn")
            layout = make_layout(config.layout, np.random.default_rng(np.random.SeedSequence([seed, 11])))
            team = _team_factory(config, setup, layout, predictor)(np.random.default_rng(0))
            rows.extend(_records_to_rows(setup, seed, run_episodes(team, policy, env_seeds)))
    path = out_dir / "inference.csv"
    write_csv(path, EVAL_FIELDS, rows)
    write_csv(
        out_dir / "inference_aggregate.csv",
        ["setup", "mean_reward", "std_over_seeds", "mean_efficiency_sum", "mean_cost_per_turbine", "mean_sends_per_turbine", "seed_count", "episodes_per_seed"],
        aggregate_eval_rows(rows),
    )
    return path


def aggregate_eval_rows(rows: list[dict]) -> list[dict]:
    """Per-setup mean of per-seed means, std across seeds."""
    out = []
    setups = sorted({r["setup"] for r in rows}, key=_setup_order)
    for setup in setups:
        srows = [r for r in rows if r["setup"] == setup]
        seeds = sorted({r["seed"] for r in srows})
        seed_means = [float(np.mean([r["reward"] for r in srows if r["seed"] == s])) for s in seeds]
        out.append(
            {
                "setup": setup,
                "mean_reward": float(np.mean(seed_means)),
                "std_over_seeds": float(np.std(seed_means)),
                "mean_efficiency_sum": float(np.mean([r["efficiency_sum"] for r in srows])),
                "mean_cost_per_turbine": float(np.mean([r["cost_per_turbine"] for r in srows])),
                "mean_sends_per_turbine": float(np.mean([r["sends_per_turbine"] for r in srows])),
                "seed_count": len(seeds),
                "episodes_per_seed": len(srows) // max(len(seeds), 1),
            }
        )
    return out


def run_scaling(
    config: ExperimentConfig, out_dir: str | Path, setups: list[SetupKind] | None = None
) -> Path:
    """Evaluate every setup on random layouts of each farm size.

    Per-turbine policies transfer as-is; the single-agent policy is
    size-bound, so extra sizes are trained on demand first.
    """
    out_dir = Path(out_dir)
    setups = [SetupKind(s) for s in (setups or config.setups)]
    base_count = config.layout.turbine_count
    rows: list[dict] = []
    for setup in setups:
        predictor = _load_predictor(config, out_dir) if _comm_setup(setup) else None
        for count in config.scaling.counts:
            if setup is SetupKind.SINGLE_AGENT and count != base_count:
                run_training(config, out_dir, setup=setup, turbine_count=count)
            layout_cfg = LayoutConfig(pattern=LayoutPattern.RANDOM, turbine_count=count)
            eval_cfg = copy.deepcopy(config)
            eval_cfg.layout = layout_cfg
            for seed in config.seeds:
                ckpt_count = count if setup is SetupKind.SINGLE_AGENT and count != base_count else None
                run_dir = _run_dir(out_dir, setup, seed, ckpt_count)
                policy, _, _ = load_policy_value(run_dir / "checkpoints" / "final.nn")
                records = []
                for ep in range(config.eval.episodes):
                    layout = make_layout(
                        layout_cfg,
                        np.random.default_rng(np.random.SeedSequence([config.eval.seed, count, ep, 7])),
                    )
                    team = _team_factory(eval_cfg, setup, layout, predictor)(np.random.default_rng(0))
                    env_seed = eval_env_seed(config.eval.seed, count, ep)
                    recs = run_episodes(team, policy, [env_seed])
                    recs[0].episode = ep
                    records.extend(recs)
                rows.extend(_records_to_rows(setup, seed, records, {"turbine_count": count}))
    path = out_dir / "scaling.csv"
    write_csv(path, EVAL_FIELDS + ["turbine_count"], rows)
    write_csv(
        out_dir / "scaling_aggregate.csv",
        ["setup", "turbine_count", "mean_reward", "std_over_seeds", "relative_to_base"],
        aggregate_scaling_rows(rows),
    )
    return path


def aggregate_scaling_rows(rows: list[dict]) -> list[dict]:
    out = []
    setups = sorted({r["setup"] for r in rows}, key=_setup_order)
    for setup in setups:
        srows = [r for r in rows if r["setup"] == setup]
        counts = sorted({int(r["turbine_count"]) for r in srows})
        base_mean = None
        for count in counts:
            crows = [r for r in srows if int(r["turbine_count"]) == count]
            seeds = sorted({r["seed"] for r in crows})
            seed_means = [float(np.mean([r["reward"] for r in crows if r["seed"] == s])) for s in seeds]
            mean = float(np.mean(seed_means))
            if base_mean is None:
                base_mean = mean
            out.append(
                {
                    "setup": setup,
                    "turbine_count": count,
                    "mean_reward": mean,
                    "std_over_seeds": float(np.std(seed_means)),
                    "relative_to_base": mean / base_mean if base_mean else float("nan"),
                }
            )
    return out


def run_neighbor_sweep(config: ExperimentConfig, out_dir: str | Path) -> Path:
    """Train and evaluate a comm setup across neighbour counts."""
    out_dir = Path(out_dir)
    setup = SetupKind(config.setup)
    if not _comm_setup(setup):
        setup = SetupKind.BROADCASTING
    count = config.layout.turbine_count
    env_seeds = [eval_env_seed(config.eval.seed, count, ep) for ep in range(config.eval.episodes)]
    rows: list[dict] = []
    for k in config.sweep.neighbor_counts:
        run_training(config, out_dir, setup=setup, neighbor_count=k)
        cfg_k = copy.deepcopy(config)
        cfg_k.neighbor_count = k
        predictor = _load_predictor(config, out_dir)
        for seed in config.seeds:
            suffix = f"k{k}" if k != config.neighbor_count else None
            run_dir = _run_dir(out_dir, setup, seed, suffix)
            policy, _, _ = load_policy_value(run_dir / "checkpoints" / "final.nn")
            layout = make_layout(config.layout, np.random.default_rng(np.random.SeedSequence([seed, 11])))
            team = _team_factory(cfg_k, setup, layout, predictor)(np.random.default_rng(0))
            rows.extend(
                _records_to_rows(setup, seed, run_episodes(team, policy, env_seeds), {"neighbor_count": k})
            )
    path = out_dir / "sweep.csv"
    write_csv(path, EVAL_FIELDS + ["neighbor_count"], rows)
    return path


def run_suite(config: ExperimentConfig, out_dir: str | Path, include_sweep: bool = False) -> None:
    """Predictor, all setups, convergence, inference, scaling, report."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dump_yaml(config, out_dir / "config.yaml")
    needs_predictor = any(_comm_setup(s) for s in config.setups) or include_sweep
    if needs_predictor and config.predictor_path is None:
        if not (out_dir / "predictor" / "predictor.nn").exists():
            run_predictor_job(config, out_dir)
    for setup in config.setups:
        run_training(config, out_dir, setup=setup)
    write_csv(
        out_dir / "convergence.csv",
        ["setup", "seed", "convergence_step", "final_reward", "wall_seconds"],
        convergence_rows(out_dir, config.setups, config.seeds),
    )
    run_inference(config, out_dir)
    run_scaling(config, out_dir)
    if include_sweep:
        run_neighbor_sweep(config, out_dir)
    write_report(out_dir)


def _typed_eval_rows(path: Path) -> list[dict]:
    rows = []
    for r in read_csv(path):
        row = dict(r)
        row["seed"] = int(r["seed"])
        for key in ("reward", "efficiency_sum", "cost_per_turbine", "sends_per_turbine", "alignment_mean"):
            row[key] = float(r[key])
        if "turbine_count" in r:
            row["turbine_count"] = int(r["turbine_count"])
        rows.append(row)
    return rows


def refresh_derived(config: ExperimentConfig, out_dir: str | Path) -> None:
    """Recompute convergence and aggregate tables from raw run output."""
    out_dir = Path(out_dir)
    present = [
        s for s in config.setups if all(_run_complete(_run_dir(out_dir, s, seed)) for seed in config.seeds)
    ]
    if present:
        write_csv(
            out_dir / "convergence.csv",
            ["setup", "seed", "convergence_step", "final_reward", "wall_seconds"],
            convergence_rows(out_dir, present, config.seeds),
        )
    if (out_dir / "inference.csv").exists():
        write_csv(
            out_dir / "inference_aggregate.csv",
            ["setup", "mean_reward", "std_over_seeds", "mean_efficiency_sum", "mean_cost_per_turbine", "mean_sends_per_turbine", "seed_count", "episodes_per_seed"],
            aggregate_eval_rows(_typed_eval_rows(out_dir / "inference.csv")),
        )
    if (out_dir / "scaling.csv").exists():
        write_csv(
            out_dir / "scaling_aggregate.csv",
            ["setup", "turbine_count", "mean_reward", "std_over_seeds", "relative_to_base"],
            aggregate_scaling_rows(_typed_eval_rows(out_dir / "scaling.csv")),
        )


def write_report(out_dir: str | Path) -> Path:
    """Markdown digest of whatever result tables the directory holds."""
    out_dir = Path(out_dir)
    lines = ["# Wind farm experiment report", ""]

    conv = out_dir / "convergence.csv"
    if conv.exists():
        rows = read_csv(conv)
        lines += ["## Convergence (training steps until the reward settles)", ""]
        lines += ["| setup | mean step | per-seed steps |", "| --- | --- | --- |"]
        setups = sorted({r["setup"] for r in rows}, key=_setup_order)
        for setup in setups:
            srows = [r for r in rows if r["setup"] == setup]
            steps = [int(r["convergence_step"]) for r in srows]
            lines.append(f"| {setup} | {np.mean(steps):.0f} | {', '.join(str(s) for s in steps)} |")
        lines.append("")

    agg = out_dir / "inference_aggregate.csv"
    if agg.exists():
        rows = read_csv(agg)
        lines += ["## Inference (greedy policy, training farm size)", ""]
        lines += ["| setup | reward | std over seeds | messages/turbine |", "| --- | --- | --- | --- |"]
        for r in sorted(rows, key=lambda r: _setup_order(r["setup"])):
            lines.append(
                f"| {r['setup']} | {float(r['mean_reward']):.2f} | {float(r['std_over_seeds']):.2f} | {float(r['mean_sends_per_turbine']):.1f} |"
            )
        lines.append("")

    sagg = out_dir / "scaling_aggregate.csv"
    if sagg.exists():
        rows = read_csv(sagg)
        lines += ["## Scaling (random layouts)", ""]
        lines += ["| setup | turbines | reward | vs base size |", "| --- | --- | --- | --- |"]
        for r in sorted(rows, key=lambda r: (_setup_order(r["setup"]), int(r["turbine_count"]))):
            lines.append(
                f"| {r['setup']} | {r['turbine_count']} | {float(r['mean_reward']):.2f} | {float(r['relative_to_base']):.3f} |"
            )
        lines.append("")

    sweep = out_dir / "sweep.csv"
    if sweep.exists():
        rows = read_csv(sweep)
        lines += ["## Neighbour count sweep", ""]
        lines += ["| neighbours | reward |", "| --- | --- |"]
        ks = sorted({int(r["neighbor_count"]) for r in rows})
        for k in ks:
            krows = [float(r["reward"]) for r in rows if int(r["neighbor_count"]) == k]
            lines.append(f"| {k} | {np.mean(krows):.2f} |")
        lines.append("")

    path = out_dir / "report.md"
    path.write_text("\n".join(lines))
    return path


def _setup_order(setup: str) -> int:
    order = [s.value for s in DEFAULT_SETUPS]
    return order.index(setup) if setup in order else 99
