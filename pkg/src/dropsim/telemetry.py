"""Trace files, loss-monitor throughput sampling, plot data, and run reports.

Trace lines use the ns-2 wired layout::

    + 0.123456 0 3 tcp 210 ------- 1 0.0 4.0 3 7

event, time, from-node, to-node, type, size, flags, flow id, src.port,
dst.port, seq, uid. Ports are always 0.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional

from .netgraph import Link, Packet
from .scheduler import EventKind, Simulator

TRACE_FMT = "%c %.6f %d %d %s %d %s %d %d.%d %d.%d %d %d"
FLAGS = "-------"


def format_trace_line(event: str, now: float, src_node: int, dst_node: int, pkt: Packet) -> str:
    return TRACE_FMT % (event, now, src_node, dst_node, pkt.kind, pkt.size, FLAGS,
                        pkt.flow_id, pkt.src, 0, pkt.dst, 0, pkt.seq, pkt.uid)


class TraceWriter:
    """Buffered trace sink; lines are written in event-loop order."""

    def __init__(self, fh: Optional[IO[str]] = None):
        self.fh = fh
        self.lines_written = 0

    def emit(self, event: str, pkt: Packet, link: Link, now: float) -> str:
        line = format_trace_line(event, now, link.src, link.dst, pkt)
        if self.fh is not None:
            self.fh.write(line)
            self.fh.write("\n")
        self.lines_written += 1
        return line

    def flush(self) -> None:
        if self.fh is not None:
            self.fh.flush()


@dataclass
class TraceRecord:
    event: str
    time: float
    src_node: int
    dst_node: int
    pkt_type: str
    size: int
    flags: str
    flow_id: int
    src_addr: str
    dst_addr: str
    seq: int
    uid: int

    @property
    def src(self) -> int:
        return int(self.src_addr.split(".")[0])

    @property
    def dst(self) -> int:
        return int(self.dst_addr.split(".")[0])


def parse_trace_line(line: str) -> TraceRecord:
    f = line.split()
    if len(f) != 12:
        raise ValueError(f"malformed trace line: {line!r}")
    return TraceRecord(f[0], float(f[1]), int(f[2]), int(f[3]), f[4], int(f[5]), f[6],
                       int(f[7]), f[8], f[9], int(f[10]), int(f[11]))


def read_trace(path) -> list[TraceRecord]:
    with open(path) as fh:
        return [parse_trace_line(ln) for ln in fh if ln.strip()]


@dataclass
class ThroughputSample:
    flow_id: int
    t: float
    bits_per_second: float
    interval: float = 0.1


def record_tick(monitor, flow_id: int, now: float, interval: float) -> ThroughputSample:
    """Sample and reset a sink's per-interval byte counter."""
    if interval <= 0:
        raise ValueError("interval must be positive")
    sample = ThroughputSample(flow_id, now, monitor.bytes_received * 8 / interval, interval)
    monitor.bytes_received = 0
    return sample


class ThroughputRecorder:
    """Samples every monitored sink at ``k * interval`` for k = 1, 2, ..."""

    def __init__(self, sim: Simulator, interval: float, sinks: dict):
        if interval <= 0:
            raise ValueError("record interval must be positive")
        self.sim = sim
        self.interval = interval
        self.sinks = sinks
        self.samples: dict[int, list[ThroughputSample]] = {fid: [] for fid in sinks}
        self._k = 0

    def start(self) -> None:
        self._schedule_next()

    def _due(self) -> float:
        return (self._k + 1) * self.interval

    def _schedule_next(self) -> None:
        self.sim.schedule(self._due(), EventKind.RECORD_TICK, self._tick)

    def _take(self, now: float) -> None:
        self._k += 1
        for fid, sink in self.sinks.items():
            self.samples[fid].append(record_tick(sink, fid, now, self.interval))

    def _tick(self) -> None:
        self._take(self.sim.now)
        self._schedule_next()

    def finish(self, now: float) -> None:
        """Take a tick that falls due exactly at the finish instant."""
        while self._due() <= now:
            self._take(self._due())


def xgraph_lines(samples: Iterable[ThroughputSample], title: Optional[str] = None) -> list[str]:
    out = [f"TitleText: {title}"] if title else []
    out += ["%.3f %.6f" % (s.t, s.bits_per_second / 1e6) for s in samples]
    return out


def xgraph_write(samples: Iterable[ThroughputSample], path, title: Optional[str] = None) -> None:
    with open(path, "w") as fh:
        for line in xgraph_lines(samples, title):
            fh.write(line + "\n")


def read_xgraph(path) -> list[tuple[float, float]]:
    pts = []
    with open(path) as fh:
        for line in fh:
            if not line.strip() or line.startswith("TitleText"):
                continue
            t, v = line.split()
            pts.append((float(t), float(v)))
    return pts


FLOW_FIELDS = ("created", "received", "dropped", "buffered", "in_flight",
               "retransmitted", "bytes_received")


@dataclass
class FlowCounters:
    created: int = 0
    received: int = 0
    dropped: int = 0
    buffered: int = 0
    in_flight: int = 0
    retransmitted: int = 0
    bytes_received: int = 0

    def conserved(self) -> bool:
        return self.created == self.received + self.dropped + self.buffered + self.in_flight


@dataclass
class RunReport:
    """Per-flow packet accounting and per-node drops.

    Counters include both data packets and ACKs of a flow; ``bytes_received``
    and ``retransmitted`` concern data packets only. ``wall_time`` and
    ``events_executed`` are run metadata and are not rendered, so the
    rendered text can be recomputed from a trace alone.
    """

    flows: dict[int, FlowCounters] = field(default_factory=dict)
    node_drops: dict[int, int] = field(default_factory=dict)
    wall_time: float = 0.0
    events_executed: int = 0

    def flow(self, fid: int) -> FlowCounters:
        return self.flows.setdefault(fid, FlowCounters())

    @property
    def total_dropped(self) -> int:
        return sum(self.node_drops.values())

    def render(self) -> str:
        lines = []
        for fid in sorted(self.flows):
            c = self.flows[fid]
            for name in FLOW_FIELDS:
                lines.append(f"flow.{fid}.{name}: {getattr(c, name)}")
        for node in sorted(self.node_drops):
            lines.append(f"node.{node}.dropped: {self.node_drops[node]}")
        lines.append(f"total.dropped: {self.total_dropped}")
        return "\n".join(lines) + "\n"

    def counters_equal(self, other: "RunReport") -> bool:
        """Compare counters, treating flows absent from one side as all-zero."""
        fids = set(self.flows) | set(other.flows)
        zero = FlowCounters()
        same_flows = all(self.flows.get(f, zero) == other.flows.get(f, zero) for f in fids)
        nodes = set(self.node_drops) | set(other.node_drops)
        same_nodes = all(self.node_drops.get(n, 0) == other.node_drops.get(n, 0) for n in nodes)
        return same_flows and same_nodes


def parse_report(text: str) -> RunReport:
    rep = RunReport()
    for line in text.splitlines():
        if not line.strip():
            continue
        key, value = line.split(":", 1)
        parts = key.split(".")
        if parts[0] == "flow":
            setattr(rep.flow(int(parts[1])), parts[2], int(value))
        elif parts[0] == "node":
            rep.node_drops[int(parts[1])] = int(value)
    return rep


def report_from_trace(records: Iterable[TraceRecord]) -> RunReport:
    """Recompute a :class:`RunReport` from trace records alone."""
    rep = RunReport()
    last_event: dict[int, tuple[int, str]] = {}
    seen_seqs: dict[int, set] = {}
    for r in records:
        c = rep.flow(r.flow_id)
        if r.event == "+" and r.src_node == r.src:
            c.created += 1
            if r.pkt_type == "tcp":
                seqs = seen_seqs.setdefault(r.flow_id, set())
                if r.seq in seqs:
                    c.retransmitted += 1
                seqs.add(r.seq)
        elif r.event == "r" and r.dst_node == r.dst:
            c.received += 1
            if r.pkt_type == "tcp":
                c.bytes_received += r.size
        elif r.event == "d":
            c.dropped += 1
            rep.node_drops[r.src_node] = rep.node_drops.get(r.src_node, 0) + 1
        last_event[r.uid] = (r.flow_id, r.event if not (r.event == "r" and r.dst_node == r.dst) else "done")
    for fid, ev in last_event.values():
        if ev == "+":
            rep.flow(fid).buffered += 1
        elif ev in ("-", "r"):
            rep.flow(fid).in_flight += 1
    return rep


def write_text(path, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)
