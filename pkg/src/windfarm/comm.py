"""Neighbourhood messaging between turbines.

Turbines are wired into a directed k-nearest-neighbour graph over
their positions.  A message carries the sender's position and local
wind measurement; it is deposited during step t and becomes readable
exactly at step t+1 through a double-buffered inbox, then is dropped
once read.  Readers reduce an inbox to a single distance-weighted mean
wind vector, so the policy input size is independent of fan-in.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np


class Message(NamedTuple):
    position: np.ndarray  # sender position, shape (2,)
    wind: np.ndarray  # sender's local wind unit vector, shape (2,)
    sent_at: int


@dataclass
class NeighborGraph:
    """Directed graph: node i sends to out_neighbors[i]."""

    positions: np.ndarray
    neighbor_count: int
    out_neighbors: list[np.ndarray]

    def edges(self) -> Iterator[tuple[int, int]]:
        for sender, receivers in enumerate(self.out_neighbors):
            for receiver in receivers:
                yield sender, int(receiver)


def build_knn_graph(positions, neighbor_count: int) -> NeighborGraph:
    """k nearest others by Euclidean distance, ties to the lower index.

    neighbor_count must lie in [0, n-1]; 0 yields an edgeless graph.
    """
    pos = np.asarray(positions, dtype=np.float64)
    n = len(pos)
    if not 0 <= neighbor_count < max(n, 1):
        raise ValueError(f"neighbor_count must be in [0, {n - 1}], got {neighbor_count}")
    out: list[np.ndarray] = []
    if neighbor_count == 0:
        return NeighborGraph(pos, 0, [np.empty(0, dtype=np.int64) for _ in range(n)])
    dists = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    np.fill_diagonal(dists, np.inf)
    for i in range(n):
        order = np.argsort(dists[i], kind="stable")
        out.append(np.sort(order[:neighbor_count]).astype(np.int64))
    return NeighborGraph(pos, neighbor_count, out)


class InboxSystem:
    """Double-buffered per-turbine inboxes.

    deliver() writes into the pending buffer; flip() promotes pending
    to readable at the step boundary (anything left unread from the
    previous step is discarded, so an inbox only ever holds messages
    sent exactly one step ago); read() hands out and clears an inbox.
    """

    def __init__(self, n: int):
        self._pending: list[list[Message]] = [[] for _ in range(n)]
        self._readable: list[list[Message]] = [[] for _ in range(n)]

    def deliver(self, message: Message, receivers: Sequence[int]) -> int:
        for r in receivers:
            self._pending[r].append(message)
        return len(receivers)

    def flip(self) -> None:
        self._readable = self._pending
        self._pending = [[] for _ in range(len(self._readable))]

    def read(self, i: int) -> list[Message]:
        msgs = self._readable[i]
        self._readable[i] = []
        return msgs

    def readable_counts(self) -> list[int]:
        return [len(m) for m in self._readable]

    def clear(self) -> None:
        n = len(self._pending)
        self._pending = [[] for _ in range(n)]
        self._readable = [[] for _ in range(n)]


def pool_inbox(receiver_position, messages: Sequence[Message], farm_width: float = 1.0) -> np.ndarray:
    """Distance-weighted mean of received wind vectors.

    Each message's wind is weighted by 1 - distance/farm_width, clamped
    to [0, 1], and the weighted vectors are averaged.  An empty inbox
    pools to the zero vector.  Since messages carry unit vectors, the
    result's norm never exceeds 1.
    """
    if not messages:
        return np.zeros(2)
    rp = np.asarray(receiver_position, dtype=np.float64)
    pos = np.stack([m.position for m in messages])
    winds = np.stack([m.wind for m in messages])
    weights = np.clip(1.0 - np.linalg.norm(pos - rp, axis=-1) / farm_width, 0.0, 1.0)
    return (weights[:, None] * winds).mean(axis=0)
