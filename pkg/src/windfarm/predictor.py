"""Learned short-horizon wind prediction from neighbour messages.

A small tanh MLP maps [pooled neighbour wind (2), own local wind (2)]
to the local wind direction `horizon` steps ahead.  It is trained
offline by plain mini-batch gradient descent on the squared error
against the future unit vector, then frozen; the farm runners only
ever call predict(), which renormalises the raw output.

Training data comes from the simulator itself with every turbine
broadcasting each step, so the feature distribution matches how the
net is used online (messages are one step stale when pooled).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .angles import angle_between_deg
from .comm import InboxSystem, Message, build_knn_graph, pool_inbox
from .configio import ConfigError
from .layout import LayoutConfig, make_layout
from .nn import FeedForward, load_arrays, load_sidecar, parameter_hash, save_arrays
from .wind import WindConfig, sample_local_wind, wind_init, wind_step

INPUT_DIM = 4
OUTPUT_DIM = 2


@dataclass
class PredictorConfig:
    horizon: int = 20  # steps ahead to predict
    neighbor_count: int = 4
    hidden_units: int = 32
    num_layers: int = 2
    learning_rate: float = 0.05
    batch_size: int = 256
    epochs: int = 30
    train_episodes: int = 8
    eval_episodes: int = 2
    episode_length: int = 2000

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.hidden_units < 1 or self.num_layers < 1:
            raise ConfigError("hidden_units and num_layers must be >= 1")
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ConfigError("learning_rate, batch_size and epochs must be positive")
        if self.train_episodes < 1 or self.eval_episodes < 1:
            raise ConfigError("need at least one train and one eval episode")


class WindPredictor:
    """Frozen wrapper around the trained net; predict() renormalises."""

    def __init__(self, net: FeedForward, horizon: int):
        self.net = net
        self.horizon = horizon

    @classmethod
    def build(cls, config: PredictorConfig, rng: np.random.Generator) -> "WindPredictor":
        sizes = [INPUT_DIM] + [config.hidden_units] * config.num_layers + [OUTPUT_DIM]
        return cls(FeedForward(sizes, "tanh", rng), config.horizon)

    def predict(self, pooled_wind: np.ndarray, local_wind: np.ndarray) -> np.ndarray:
        """Unit predictions, shape (m, 2), for stacked (m, 2) inputs."""
        x = np.concatenate(
            [np.atleast_2d(pooled_wind), np.atleast_2d(local_wind)], axis=1
        )
        raw = self.net.forward(x)
        norms = np.linalg.norm(raw, axis=-1, keepdims=True)
        # a degenerate zero output (untrained net edge case) maps to +x
        out = np.where(norms > 1e-12, raw / np.where(norms > 1e-12, norms, 1.0), [1.0, 0.0])
        return out

    def parameter_hash(self) -> str:
        return parameter_hash(self.net.parameters())

    def save(self, path: str | Path, metadata: dict | None = None) -> None:
        meta = {"kind": "wind_predictor", "horizon": self.horizon}
        meta.update(metadata or {})
        meta["param_hash"] = self.parameter_hash()
        save_arrays(path, self.net.parameters(), meta)

    @classmethod
    def load(cls, path: str | Path) -> "WindPredictor":
        meta = load_sidecar(path)
        if meta.get("kind") != "wind_predictor":
            raise ValueError(f"{path}: not a wind predictor checkpoint")
        arrays = load_arrays(path)
        sizes = [arrays[0].shape[0]] + [w.shape[1] for w in arrays[::2]]
        rng = np.random.default_rng(0)
        net = FeedForward(sizes, "tanh", rng)
        for p, a in zip(net.parameters(), arrays):
            if p.shape != a.shape:
                raise ValueError(f"{path}: checkpoint shape mismatch")
            p[...] = a
        return cls(net, int(meta.get("horizon", 0)))


@dataclass
class PredictorDataset:
    features: np.ndarray  # (m, 4): pooled wind then local wind
    targets: np.ndarray  # (m, 2): future local wind unit vectors

    def __len__(self) -> int:
        return len(self.features)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.features).tobytes())
        h.update(np.ascontiguousarray(self.targets).tobytes())
        return h.hexdigest()


def generate_dataset(
    layout_config: LayoutConfig,
    wind_config: WindConfig,
    config: PredictorConfig,
    episodes: int,
    rng: np.random.Generator,
) -> PredictorDataset:
    """Roll wind episodes with all-broadcast messaging and collect pairs."""
    features: list[np.ndarray] = []
    targets: list[np.ndarray] = []
    for _ in range(episodes):
        layout = make_layout(layout_config, rng)
        n = layout.turbine_count
        graph = build_knn_graph(layout.positions, min(config.neighbor_count, n - 1))
        inboxes = InboxSystem(n)
        wind = wind_init(wind_config, rng)
        winds_by_step = []
        pooled_by_step = []
        for step in range(config.episode_length + config.horizon):
            local = sample_local_wind(wind, layout.positions)
            pooled = np.stack(
                [pool_inbox(layout.positions[i], inboxes.read(i), layout.farm_width) for i in range(n)]
            )
            winds_by_step.append(local)
            pooled_by_step.append(pooled)
            for i in range(n):
                inboxes.deliver(
                    Message(layout.positions[i], local[i], step), graph.out_neighbors[i]
                )
            inboxes.flip()
            wind_step(wind)
        for t in range(config.episode_length):
            features.append(
                np.concatenate([pooled_by_step[t], winds_by_step[t]], axis=1)
            )
            targets.append(winds_by_step[t + config.horizon])
    return PredictorDataset(np.concatenate(features), np.concatenate(targets))


def train_predictor(
    predictor: WindPredictor,
    dataset: PredictorDataset,
    config: PredictorConfig,
    rng: np.random.Generator,
) -> list[float]:
    """Mini-batch gradient descent on MSE; returns per-epoch mean loss."""
    net = predictor.net
    params = net.parameters()
    losses = []
    m = len(dataset)
    for _ in range(config.epochs):
        order = rng.permutation(m)
        epoch_losses = []
        for start in range(0, m, config.batch_size):
            idx = order[start : start + config.batch_size]
            x, y = dataset.features[idx], dataset.targets[idx]
            pred, cache = net.forward_cached(x)
            err = pred - y
            epoch_losses.append(float(np.mean(err**2)))
            grads, _ = net.backward(cache, 2.0 * err / err.size)
            for p, g in zip(params, grads):
                p -= config.learning_rate * g
        losses.append(float(np.mean(epoch_losses)))
    return losses


def angular_error_deg(predicted: np.ndarray, actual: np.ndarray) -> float:
    """Mean unsigned angle in degrees between unit vector rows."""
    return float(np.mean(angle_between_deg(predicted, actual)))


def evaluate_predictor(predictor: WindPredictor, dataset: PredictorDataset) -> dict[str, float]:
    """Angular error of the net and of the keep-current-wind baseline."""
    pred = predictor.predict(dataset.features[:, :2], dataset.features[:, 2:])
    persistence = dataset.features[:, 2:]
    return {
        "model_error_deg": angular_error_deg(pred, dataset.targets),
        "persistence_error_deg": angular_error_deg(persistence, dataset.targets),
    }
