"""Topology: nodes, simplex links, and per-link DropTail/RED queues."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from .scheduler import EventKind, Simulator
from .traffic import RngStream

TCP = "tcp"
ACK = "ack"

DROPTAIL = "droptail"
RED = "red"

QUEUED = "queued"
QUEUE_FULL = "queue_full"
RED_FORCED = "red_forced"
RED_EARLY = "red_early"


@dataclass
class Packet:
    uid: int
    flow_id: int
    src: int
    dst: int
    size: int
    seq: int
    kind: str = TCP
    sent_at: float = 0.0


@dataclass
class REDState:
    w_q: float = 0.002
    min_th: float = 5.0
    max_th: float = 15.0
    max_p: float = 0.1
    avg: float = 0.0
    count: int = 0
    idle_since: Optional[float] = 0.0
    # seconds to transmit a typical packet; scales idle-time decay of avg
    typical_tx_time: float = 0.00168

    def __post_init__(self):
        if not 0 < self.w_q <= 1:
            raise ValueError("w_q must lie in (0, 1]")
        if not 0 <= self.min_th < self.max_th:
            raise ValueError("need 0 <= min_th < max_th")
        if not 0 < self.max_p <= 1:
            raise ValueError("max_p must lie in (0, 1]")


@dataclass
class QueueState:
    discipline: str = DROPTAIL
    limit: int = 10
    buffer: deque = field(default_factory=deque)
    red: Optional[REDState] = None

    def __post_init__(self):
        if self.discipline == RED and self.red is None:
            self.red = REDState()
        if self.red is not None and self.red.max_th > self.limit:
            raise ValueError("RED max_th exceeds queue limit")


def droptail_admit(q: QueueState, pkt: Packet) -> bool:
    return len(q.buffer) < q.limit


def red_update_avg(red: REDState, qlen: int, now: float) -> float:
    """Fold one arrival into the EWMA of queue length.

    On arrival to an idle queue the average is first decayed as if
    ``m = idle / typical_tx_time`` empty-queue samples had been taken.
    """
    if qlen == 0 and red.idle_since is not None:
        m = (now - red.idle_since) / red.typical_tx_time
        red.avg *= (1.0 - red.w_q) ** m
        red.idle_since = None
    else:
        red.avg = (1.0 - red.w_q) * red.avg + red.w_q * qlen
    return red.avg


def red_probability(red: REDState, avg: float) -> tuple[float, float]:
    """Base and count-adjusted early-drop probabilities inside the band."""
    p_b = red.max_p * (avg - red.min_th) / (red.max_th - red.min_th)
    denom = 1.0 - red.count * p_b
    p_a = 1.0 if denom <= 0 else min(1.0, p_b / denom)
    return p_b, p_a


def red_decide(q: QueueState, pkt: Packet, now: float, rng: RngStream) -> str:
    red = q.red
    avg = red_update_avg(red, len(q.buffer), now)
    if len(q.buffer) >= q.limit:
        red.count = 0
        return QUEUE_FULL
    if avg < red.min_th:
        return QUEUED
    if avg >= red.max_th:
        red.count = 0
        return RED_FORCED
    _, p_a = red_probability(red, avg)
    if rng.uniform() < p_a:
        red.count = 0
        return RED_EARLY
    red.count += 1
    return QUEUED


def red_admit(q: QueueState, pkt: Packet, now: float, rng: RngStream) -> bool:
    return red_decide(q, pkt, now, rng) == QUEUED


def static_routes(nodes, edges) -> dict[tuple[int, int], int]:
    """Shortest-hop next-hop table ``(at, dst) -> next`` over directed edges.

    Ties go to the lowest-numbered neighbour so routes are deterministic.
    """
    preds: dict[int, list[int]] = {n: [] for n in nodes}
    for (a, b) in edges:
        preds[b].append(a)
    routes = {}
    for dst in sorted(nodes):
        frontier = [dst]
        seen = {dst}
        while frontier:
            nxt = []
            for node in frontier:
                for p in sorted(preds[node]):
                    if p not in seen:
                        seen.add(p)
                        routes[(p, dst)] = node
                        nxt.append(p)
            frontier = nxt
    return routes


def path_exists(routes, src: int, dst: int) -> bool:
    return src == dst or (src, dst) in routes


class Link:
    """Simplex link with a FIFO transmitter and propagation delay."""

    def __init__(self, src: int, dst: int, bandwidth: float, delay: float,
                 queue: Optional[QueueState] = None, rng: Optional[RngStream] = None):
        if bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if delay < 0:
            raise ValueError("delay must be non-negative")
        self.src = src
        self.dst = dst
        self.bandwidth = float(bandwidth)
        self.delay = float(delay)
        self.queue = queue if queue is not None else QueueState()
        self.rng = rng
        self.busy = False
        self.busy_until = 0.0
        # uid -> packet for packets being serialized or propagating
        self.in_flight: dict[int, Packet] = {}
        self.max_occupancy = 0

    def tx_time(self, size: int) -> float:
        return size * 8 / self.bandwidth

    def __repr__(self):
        return f"Link(n{self.src}->n{self.dst}, {self.bandwidth:g} b/s, {self.delay:g} s)"


class Network:
    """Nodes, links, static routes, and packet movement.

    Observers hook in through ``on_trace(event_char, pkt, link, now)``,
    ``on_deliver(pkt, now)`` (called at the packet's destination) and
    ``on_drop(pkt, link, reason, now)``.
    """

    def __init__(self, sim: Simulator):
        self.sim = sim
        self.nodes: set[int] = set()
        self.links: dict[tuple[int, int], Link] = {}
        self.routes: dict[tuple[int, int], int] = {}
        self._next_uid = 0
        self.on_trace: Optional[Callable] = None
        self.on_deliver: Optional[Callable] = None
        self.on_drop: Optional[Callable] = None

    def add_node(self, node: int) -> None:
        self.nodes.add(node)

    def add_link(self, link: Link) -> Link:
        for n in (link.src, link.dst):
            if n not in self.nodes:
                raise ValueError(f"unknown node n{n}")
        if (link.src, link.dst) in self.links:
            raise ValueError(f"duplicate link n{link.src}->n{link.dst}")
        self.links[(link.src, link.dst)] = link
        self.routes.clear()
        return link

    def next_hop(self, at: int, dst: int) -> Optional[int]:
        if not self.routes:
            self._compute_routes()
        return self.routes.get((at, dst))

    def has_path(self, src: int, dst: int) -> bool:
        if not self.routes:
            self._compute_routes()
        return path_exists(self.routes, src, dst)

    def _compute_routes(self) -> None:
        self.routes = static_routes(self.nodes, self.links)

    def new_packet(self, flow_id: int, src: int, dst: int, size: int, seq: int, kind: str) -> Packet:
        pkt = Packet(self._next_uid, flow_id, src, dst, size, seq, kind, self.sim.now)
        self._next_uid += 1
        return pkt

    @property
    def packets_created(self) -> int:
        return self._next_uid

    def send(self, pkt: Packet) -> str:
        """Inject a packet at its source node."""
        return self.forward(pkt, pkt.src)

    def forward(self, pkt: Packet, at: int) -> str:
        hop = self.next_hop(at, pkt.dst)
        if hop is None:
            raise ValueError(f"no route from n{at} to n{pkt.dst}")
        return self.enqueue(self.links[(at, hop)], pkt)

    def _trace(self, ev: str, pkt: Packet, link: Link) -> None:
        if self.on_trace is not None:
            self.on_trace(ev, pkt, link, self.sim.now)

    def enqueue(self, link: Link, pkt: Packet) -> str:
        now = self.sim.now
        q = link.queue
        self._trace("+", pkt, link)
        if q.discipline == RED:
            outcome = red_decide(q, pkt, now, link.rng)
        else:
            outcome = QUEUED if droptail_admit(q, pkt) else QUEUE_FULL
        if outcome != QUEUED:
            self._trace("d", pkt, link)
            if self.on_drop is not None:
                self.on_drop(pkt, link, outcome, now)
            return outcome
        q.buffer.append(pkt)
        link.max_occupancy = max(link.max_occupancy, len(q.buffer))
        if not link.busy:
            self.transmit_next(link)
        return QUEUED

    def transmit_next(self, link: Link) -> None:
        now = self.sim.now
        pkt = link.queue.buffer.popleft()
        self._trace("-", pkt, link)
        tx = link.tx_time(pkt.size)
        link.busy = True
        link.busy_until = now + tx
        link.in_flight[pkt.uid] = pkt
        self.sim.schedule(now + tx, EventKind.LINK_TX_COMPLETE, self._tx_complete, link)
        self.sim.schedule(now + tx + link.delay, EventKind.PACKET_ARRIVAL, self._arrive, link, pkt)

    def _tx_complete(self, link: Link) -> None:
        link.busy = False
        if link.queue.buffer:
            self.transmit_next(link)
        elif link.queue.red is not None:
            link.queue.red.idle_since = self.sim.now

    def _arrive(self, link: Link, pkt: Packet) -> None:
        del link.in_flight[pkt.uid]
        self._trace("r", pkt, link)
        if link.dst == pkt.dst:
            if self.on_deliver is not None:
                self.on_deliver(pkt, self.sim.now)
        else:
            self.forward(pkt, link.dst)

    def buffered(self):
        for link in self.links.values():
            yield from link.queue.buffer

    def in_flight(self):
        for link in self.links.values():
            yield from link.in_flight.values()
