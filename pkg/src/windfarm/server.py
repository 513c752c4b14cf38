"""Websocket streaming of live greedy episodes.

The server steps a trained policy through episodes (same seed sequence
as inference, so a session without control input replays exactly what
the evaluation measured) and broadcasts one JSON frame per step,
coalesced to at most FRAME_RATE frames a second when the simulation
runs faster.  Clients send control messages that are applied strictly
between simulation steps:

    {"v": 1, "type": "control", "kind": "pause"}
    {"v": 1, "type": "control", "kind": "resume"}
    {"v": 1, "type": "control", "kind": "reset"}
    {"v": 1, "type": "control", "kind": "set_time_scale", "value": 2.0}
    {"v": 1, "type": "control", "kind": "set_wind_direction", "value": 270}
    {"v": 1, "type": "control", "kind": "release_wind"}

Frames look like

    {"v": 1, "type": "frame", "step": ..., "episode": ..., "main_angle": ...,
     "efficiency": ..., "cumulative_reward": ..., "time_scale": ..., "paused": ...,
     "wind_pinned": ..., "edges": [[sender, receiver], ...],
     "turbines": [{"index", "position", "orientation_angle", "wind_angle",
                   "contribution", "light", "inbox_size", "sent",
                   "predicted_angle"}, ...]}

Out-of-range or malformed controls get {"v":1,"type":"error","message":...}
and change nothing.
"""

from __future__ import annotations

import asyncio
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .angles import vector_angle
from .configio import ConfigError
from .layout import make_layout
from .ppo import greedy_actions
from .setups import CommTeam, SetupKind, build_team
from .training import load_policy_value
from .predictor import WindPredictor

log = logging.getLogger("windfarm.server")

PROTOCOL_VERSION = 1
DEFAULT_PORT = 8734
BASE_STEP_HZ = 10.0  # simulation steps per second at time scale 1
FRAME_RATE = 30.0  # broadcast ceiling, frames per second
TIME_SCALE_RANGE = (0.1, 100.0)


@dataclass
class _Controls:
    time_scale: float = 1.0
    paused: bool = False
    reset_requested: bool = False
    pinned_wind: float | None = None


class StreamSession:
    """One policy-driven simulation stream shared by all clients."""

    def __init__(self, team, policy, env_seeds: list[int]):
        self.team = team
        self.policy = policy
        self.env_seeds = env_seeds
        self.controls = _Controls()
        self.episode = 0
        self.cumulative_reward = 0.0
        self._edges = [[int(s), int(r)] for s, r in getattr(team, "graph", _NoGraph()).edges()]
        self._last_result = None
        self._final_frame = None
        self._obs = None
        self.reset_episode(0)

    def reset_episode(self, episode: int) -> None:
        self.episode = episode % len(self.env_seeds)
        seed = self.env_seeds[self.episode]
        self._obs = self.team.reset(int(seed))
        self.team.env.wind.pinned_angle = self.controls.pinned_wind
        self.cumulative_reward = 0.0
        self._last_result = None

    def apply_control(self, kind: str, value=None) -> None:
        c = self.controls
        if kind == "pause":
            c.paused = True
        elif kind == "resume":
            c.paused = False
        elif kind == "reset":
            c.reset_requested = True
        elif kind == "set_time_scale":
            scale = float(value)
            lo, hi = TIME_SCALE_RANGE
            if not lo <= scale <= hi:
                raise ValueError(f"time scale must be in [{lo}, {hi}]")
            c.time_scale = scale
        elif kind == "set_wind_direction":
            angle = float(value)
            if not 0.0 <= angle < 360.0:
                raise ValueError("wind direction must be in [0, 360)")
            c.pinned_wind = angle
            self.team.env.wind.pinned_angle = angle
        elif kind == "release_wind":
            c.pinned_wind = None
            self.team.env.wind.pinned_angle = None
        else:
            raise ValueError(f"unknown control kind {kind!r}")

    def step(self) -> None:
        """One simulation step; applies a queued reset first."""
        if self.controls.reset_requested:
            self.controls.reset_requested = False
            self.reset_episode(self.episode)
            return
        actions = greedy_actions(self.policy, self._obs)
        result = self.team.step(actions)
        cost = float(result.costs.sum()) / self.team.turbine_count
        self.cumulative_reward += result.efficiency - cost
        self._last_result = result
        if result.done:
            final = self.frame()
            self.reset_episode(self.episode + 1)
            self._last_result = None
            self._final_frame = final
        else:
            self._obs = result.observations

    def frame(self) -> dict:
        env = self.team.env
        result = self._last_result
        contributions = result.contributions if result is not None else np.zeros(env.turbine_count)
        sends = result.sends if result is not None else np.zeros(env.turbine_count, dtype=bool)
        alignments = result.alignments if result is not None else None
        inbox_sizes = getattr(self.team, "last_inbox_sizes", [0] * env.turbine_count)
        predictions = getattr(self.team, "last_predictions", None)
        wind_angles = vector_angle(env.local_winds)
        orientation = env.orientations
        turbines = []
        for i in range(env.turbine_count):
            a = float(alignments[i]) if alignments is not None else 0.0
            light = "green" if a >= 0.75 else ("yellow" if a > 0.5 else "red")
            turbines.append(
                {
                    "index": i,
                    "position": [float(env.positions[i][0]), float(env.positions[i][1])],
                    "orientation_angle": round(float(orientation[i]), 4),
                    "wind_angle": round(float(wind_angles[i]), 4),
                    "contribution": round(float(contributions[i]), 6),
                    "light": light,
                    "inbox_size": int(inbox_sizes[i]),
                    "sent": bool(sends[i]),
                    "predicted_angle": round(float(vector_angle(predictions[i])), 4)
                    if predictions is not None
                    else None,
                }
            )
        return {
            "v": PROTOCOL_VERSION,
            "type": "frame",
            "step": env.step_index,
            "episode": self.episode,
            "main_angle": round(float(env.wind.main_angle), 4),
            "efficiency": round(float(result.efficiency), 6) if result is not None else None,
            "cumulative_reward": round(self.cumulative_reward, 4),
            "time_scale": self.controls.time_scale,
            "paused": self.controls.paused,
            "wind_pinned": self.controls.pinned_wind is not None,
            "edges": self._edges,
            "turbines": turbines,
        }


class _NoGraph:
    def edges(self):
        return []


class StreamServer:
    def __init__(self, session: StreamSession, host: str = "127.0.0.1", port: int = DEFAULT_PORT):
        self.session = session
        self.host = host
        self.port = port
        self.clients: set = set()
        self._server = None
        self._loop_task = None

    async def start(self) -> None:
        import websockets

        self._server = await websockets.serve(self._handler, self.host, self.port)
        self.port = self._server.sockets[0].getsockname()[1]
        self._loop_task = asyncio.create_task(self._run())
        log.info("streaming on ws://%s:%d", self.host, self.port)

    async def stop(self) -> None:
        if self._loop_task:
            self._loop_task.cancel()
            try:
                await self._loop_task
            except asyncio.CancelledError:
                pass
        if self._server:
            self._server.close()
            await self._server.wait_closed()

    async def _handler(self, websocket) -> None:
        self.clients.add(websocket)
        try:
            await websocket.send(json.dumps(self.session.frame()))
            async for raw in websocket:
                await self._on_message(websocket, raw)
        except Exception:
            pass
        finally:
            self.clients.discard(websocket)

    async def _on_message(self, websocket, raw: str) -> None:
        try:
            msg = json.loads(raw)
            if not isinstance(msg, dict) or msg.get("type") != "control":
                raise ValueError("expected a control message")
            self.session.apply_control(msg.get("kind", ""), msg.get("value"))
        except (ValueError, TypeError, json.JSONDecodeError) as exc:
            await websocket.send(
                json.dumps({"v": PROTOCOL_VERSION, "type": "error", "message": str(exc)})
            )

    async def _broadcast(self, payload: str) -> None:
        dead = []
        for ws in self.clients:
            try:
                await ws.send(payload)
            except Exception:
                dead.append(ws)
        for ws in dead:
            self.clients.discard(ws)

    async def _run(self) -> None:
        next_step = time.monotonic()
        last_frame = 0.0
        while True:
            session = self.session
            if session.controls.paused and not session.controls.reset_requested:
                await asyncio.sleep(0.05)
                next_step = time.monotonic()
                continue
            session.step()
            final = getattr(session, "_final_frame", None)
            now = time.monotonic()
            if final is not None:
                await self._broadcast(json.dumps(final))
                session._final_frame = None
                last_frame = now
            elif now - last_frame >= 1.0 / FRAME_RATE:
                await self._broadcast(json.dumps(session.frame()))
                last_frame = now
            next_step += 1.0 / (BASE_STEP_HZ * session.controls.time_scale)
            delay = next_step - time.monotonic()
            if delay > 0:
                await asyncio.sleep(delay)
            else:
                next_step = time.monotonic()
                await asyncio.sleep(0)


def build_session(config, out_dir: str | Path, setup=None, checkpoint: Path | None = None) -> StreamSession:
    """Assemble a session from a config and a finished training directory."""
    setup = SetupKind(setup or config.setup)
    out_dir = Path(out_dir)
    if checkpoint is None:
        checkpoint = out_dir / setup.value / f"seed_{config.seeds[0]}" / "checkpoints" / "final.nn"
    if not Path(checkpoint).exists():
        raise ConfigError(f"no checkpoint at {checkpoint}; train first or pass --checkpoint")
    policy, _, _ = load_policy_value(checkpoint)
    predictor = None
    if setup in (SetupKind.BROADCASTING, SetupKind.BY_CHOICE):
        ppath = config.predictor_path or out_dir / "predictor" / "predictor.nn"
        if not Path(ppath).exists():
            raise ConfigError(f"no predictor at {ppath}; run gnn-train first")
        predictor = WindPredictor.load(ppath)
    layout = make_layout(config.layout, np.random.default_rng(np.random.SeedSequence([config.seeds[0], 11])))
    team = build_team(
        setup,
        layout,
        config.wind,
        reward_mode=config.reward_mode,
        episode_length=config.episode_length,
        neighbor_count=config.neighbor_count,
        comm_cost=config.comm_cost,
        predictor=predictor,
        rng=np.random.default_rng(0),
    )
    if policy.obs_dim != team.obs_dim:
        raise ConfigError(
            f"checkpoint expects {policy.obs_dim}-dim observations, team provides {team.obs_dim}"
        )
    from .experiments import eval_env_seed

    count = config.layout.turbine_count
    env_seeds = [eval_env_seed(config.eval.seed, count, ep) for ep in range(config.eval.episodes)]
    return StreamSession(team, policy, env_seeds)


def serve_forever(config, out_dir, setup=None, checkpoint=None, host="127.0.0.1", port=DEFAULT_PORT) -> None:
    session = build_session(config, out_dir, setup, checkpoint)

    async def _main() -> None:
        server = StreamServer(session, host, port)
        await server.start()
        try:
            await asyncio.Future()
        finally:
            await server.stop()

    asyncio.run(_main())
