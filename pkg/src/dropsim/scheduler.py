"""Deterministic discrete-event engine.

Events fire in ``(fire_at, seq)`` order, where ``seq`` is the insertion
counter, so simultaneous events run in the order they were scheduled.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass, field
from typing import Any, Callable, Optional


class SimulationError(RuntimeError):
    """Fatal contract violation inside a run (e.g. scheduling in the past)."""


class EventKind(enum.Enum):
    PACKET_ARRIVAL = "PacketArrival"
    LINK_TX_COMPLETE = "LinkTxComplete"
    APP_EMIT = "AppEmit"
    APP_STATE_FLIP = "AppStateFlip"
    TCP_TIMEOUT = "TcpTimeout"
    RECORD_TICK = "RecordTick"
    AGENT_START = "AgentStart"
    AGENT_STOP = "AgentStop"
    SIM_FINISH = "SimFinish"


@dataclass
class Event:
    fire_at: float
    seq: int
    kind: EventKind
    action: Optional[Callable[..., Any]] = None
    payload: tuple = ()
    cancelled: bool = field(default=False, compare=False)
    fired: bool = field(default=False, compare=False)

    def __lt__(self, other: "Event") -> bool:
        return (self.fire_at, self.seq) < (other.fire_at, other.seq)


@dataclass
class SimSummary:
    now: float
    events_executed: int


class Simulator:
    """Simulation clock plus a priority queue of pending events.

    Actions are called as ``action(*payload)``. Set ``keep_log`` to record
    ``(fire_at, seq, kind)`` for every executed event.
    """

    def __init__(self, keep_log: bool = False):
        self.now = 0.0
        self.events_executed = 0
        self._heap: list[Event] = []
        self._pending: dict[int, Event] = {}
        self._seq = 0
        self._stopped = False
        self.log: Optional[list[tuple[float, int, EventKind]]] = [] if keep_log else None

    def schedule(self, at: float, kind: EventKind, action=None, *payload) -> int:
        if at < self.now or at < 0:
            raise SimulationError(
                f"cannot schedule {kind.value} at t={at!r}: clock is at {self.now!r}"
            )
        ev = Event(float(at), self._seq, kind, action, payload)
        self._seq += 1
        heapq.heappush(self._heap, ev)
        self._pending[ev.seq] = ev
        return ev.seq

    def schedule_in(self, delay: float, kind: EventKind, action=None, *payload) -> int:
        return self.schedule(self.now + delay, kind, action, *payload)

    def cancel(self, event_id: int) -> bool:
        ev = self._pending.pop(event_id, None)
        if ev is None:
            return False
        ev.cancelled = True
        return True

    def is_pending(self, event_id: Optional[int]) -> bool:
        return event_id is not None and event_id in self._pending

    def stop(self) -> None:
        """Halt the loop after the currently executing event."""
        self._stopped = True

    def peek_time(self) -> Optional[float]:
        while self._heap and self._heap[0].cancelled:
            heapq.heappop(self._heap)
        return self._heap[0].fire_at if self._heap else None

    def run_until(self, t_end: float) -> SimSummary:
        if t_end < self.now:
            raise SimulationError(f"run_until({t_end!r}) is before now={self.now!r}")
        heap = self._heap
        while heap and not self._stopped:
            ev = heap[0]
            if ev.cancelled:
                heapq.heappop(heap)
                continue
            if ev.fire_at > t_end:
                break
            heapq.heappop(heap)
            del self._pending[ev.seq]
            self.now = ev.fire_at
            ev.fired = True
            self.events_executed += 1
            if self.log is not None:
                self.log.append((ev.fire_at, ev.seq, ev.kind))
            if ev.action is not None:
                ev.action(*ev.payload)
        self.now = t_end
        return SimSummary(self.now, self.events_executed)
