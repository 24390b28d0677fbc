"""Exponential on/off application traffic and the seeded RNG streams behind it."""

from __future__ import annotations

import enum
import math
import zlib
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .scheduler import EventKind, Simulator


class RngStream:
    """Reproducible random stream keyed by ``(seed, stream_id)``.

    Different stream ids give statistically independent PCG64 streams
    (via ``SeedSequence`` spawn keys), so adding a consumer never perturbs
    the draws of another.
    """

    def __init__(self, seed: int, stream_id: int):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    @classmethod
    def for_purpose(cls, seed: int, purpose: str) -> "RngStream":
        return cls(seed, zlib.crc32(purpose.encode()))

    def uniform(self) -> float:
        """Draw from [0, 1)."""
        return float(self._gen.random())

    def uniform_open_closed(self) -> float:
        """Draw from (0, 1), redrawing the u=1 case that would give a zero-length sample."""
        while True:
            u = 1.0 - self._gen.random()
            if u < 1.0:
                return u


def exp_sample(rng: RngStream, mean: float) -> float:
    if mean <= 0:
        raise ValueError(f"exponential mean must be positive, got {mean!r}")
    return exp_from_uniform(rng.uniform_open_closed(), mean)


def exp_from_uniform(u: float, mean: float) -> float:
    return -mean * math.log(u)


@dataclass
class ExpOnOffConfig:
    packet_size: int = 210
    rate: float = 100_000.0
    burst_time: float = 0.002
    idle_time: float = 0.001
    start_at: float = 0.0
    stop_at: float = math.inf

    def __post_init__(self):
        if self.packet_size <= 0:
            raise ValueError("packet_size must be positive")
        if self.rate <= 0:
            raise ValueError("rate must be positive")
        if self.burst_time <= 0:
            raise ValueError("burst_time must be positive")
        if self.idle_time < 0:
            raise ValueError("idle_time must be non-negative")
        if not self.start_at < self.stop_at:
            raise ValueError("start_at must precede stop_at")

    @property
    def interval(self) -> float:
        """Spacing between emissions while ON."""
        return self.packet_size * 8 / self.rate

    @property
    def mean_rate(self) -> float:
        return self.rate * self.burst_time / (self.burst_time + self.idle_time)


class Phase(enum.Enum):
    ON = "On"
    OFF = "Off"
    STOPPED = "Stopped"


@dataclass
class EmitPacket:
    at: float


@dataclass
class FlipPhase:
    at: float


@dataclass
class Stop:
    at: float


@dataclass
class ExpOnOffState:
    """On/off source whose emission clock only advances during ON time.

    ``credit`` is the ON-time still owed before the next emission. It carries
    over OFF periods, so a short burst emits either nothing or the one packet
    that falls due inside it, and the long-run rate is exactly
    ``rate * burst / (burst + idle)``. The very first burst emits at its start.
    """

    config: ExpOnOffConfig
    on_rng: RngStream
    off_rng: RngStream
    phase: Phase = Phase.OFF
    phase_ends_at: float = 0.0
    next_emit_at: float = math.inf
    credit: float = 0.0
    packets_emitted: int = 0

    def begin(self, now: float) -> None:
        self._enter_on(now)

    def _enter_on(self, now: float) -> None:
        self.phase = Phase.ON
        self.phase_ends_at = now + exp_sample(self.on_rng, self.config.burst_time)
        self.next_emit_at = now + self.credit

    def _enter_off(self, now: float) -> None:
        self.phase = Phase.OFF
        # idle_time=0 degenerates to a constant-rate source
        dur = exp_sample(self.off_rng, self.config.idle_time) if self.config.idle_time > 0 else 0.0
        self.phase_ends_at = now + dur
        self.next_emit_at = math.inf

    def step(self, now: float):
        """Next action after ``now``: EmitPacket, FlipPhase or Stop."""
        if self.phase is Phase.STOPPED:
            return Stop(now)
        if self.phase is Phase.ON and self.next_emit_at <= self.phase_ends_at:
            at = self.next_emit_at
        else:
            at = self.phase_ends_at
            if at >= self.config.stop_at:
                return Stop(self.config.stop_at)
            return FlipPhase(at)
        if at >= self.config.stop_at:
            return Stop(self.config.stop_at)
        return EmitPacket(at)

    def emit(self, now: float) -> None:
        self.packets_emitted += 1
        self.credit = 0.0
        self.next_emit_at = now + self.config.interval

    def flip(self, now: float) -> None:
        if self.phase is Phase.ON:
            self.credit = self.next_emit_at - now
            self._enter_off(now)
        else:
            self._enter_on(now)

    def stop(self) -> None:
        self.phase = Phase.STOPPED
        self.next_emit_at = math.inf


@dataclass
class ExpOnOffApp:
    """Drives an :class:`ExpOnOffState` from the event loop.

    ``sink`` receives ``(nbytes, now)`` for every emitted packet; in a wired
    scenario that is the TCP agent's ``app_send``.
    """

    name: str
    state: ExpOnOffState
    sink: Callable[[int, float], None]
    sim: Optional[Simulator] = None
    emit_log: list = field(default_factory=list)
    bytes_sent: int = 0
    keep_log: bool = False

    def attach(self, sim: Simulator) -> None:
        self.sim = sim
        sim.schedule(self.state.config.start_at, EventKind.AGENT_START, self._start)

    def _start(self) -> None:
        self.state.begin(self.sim.now)
        self._advance()

    def _advance(self) -> None:
        action = self.state.step(self.sim.now)
        if isinstance(action, EmitPacket):
            self.sim.schedule(action.at, EventKind.APP_EMIT, self._on_emit)
        elif isinstance(action, FlipPhase):
            self.sim.schedule(action.at, EventKind.APP_STATE_FLIP, self._on_flip)
        elif math.isfinite(action.at):
            self.sim.schedule(action.at, EventKind.AGENT_STOP, self._on_stop)
        else:
            self.state.stop()

    def _on_emit(self) -> None:
        now = self.sim.now
        self.state.emit(now)
        size = self.state.config.packet_size
        self.bytes_sent += size
        if self.keep_log:
            self.emit_log.append(now)
        self.sink(size, now)
        self._advance()

    def _on_flip(self) -> None:
        self.state.flip(self.sim.now)
        self._advance()

    def _on_stop(self) -> None:
        self.state.stop()


def make_app(name: str, config: ExpOnOffConfig, seed: int, sink, keep_log: bool = False) -> ExpOnOffApp:
    state = ExpOnOffState(
        config,
        on_rng=RngStream.for_purpose(seed, f"app:{name}:on"),
        off_rng=RngStream.for_purpose(seed, f"app:{name}:off"),
    )
    return ExpOnOffApp(name, state, sink, keep_log=keep_log)
