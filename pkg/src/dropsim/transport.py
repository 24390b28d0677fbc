"""TCP Tahoe sender agent and cumulative-ACK sink.

Windows and sequence numbers count packets, not bytes. The sink keeps no
reordering buffer, so loss recovery is go-back-N: after a timeout or a
fast retransmit the sender rewinds ``next_seq`` to the oldest unacked
packet and resends from there under a one-packet window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .netgraph import ACK, TCP, Network, Packet
from .scheduler import EventKind, Simulator

ACK_SIZE = 40
INITIAL_CWND = 1.0
INITIAL_SSTHRESH = 64.0
INITIAL_RTO = 1.0
MIN_RTO = 0.2
MAX_RTO = 60.0
DEFAULT_RCV_WINDOW = 20
DUPACK_THRESHOLD = 3


@dataclass
class TcpConn:
    id: str
    src: int
    dst: int
    flow_id: int
    mss: int = 210
    cwnd: float = INITIAL_CWND
    ssthresh: float = INITIAL_SSTHRESH
    rcv_window: int = DEFAULT_RCV_WINDOW
    next_seq: int = 0
    highest_acked: int = 0
    max_sent: int = 0
    app_backlog: int = 0
    srtt: Optional[float] = None
    rttvar: Optional[float] = None
    rto: float = INITIAL_RTO
    timer: Optional[int] = None
    dup_acks: int = 0
    retransmit_count: int = 0
    packets_sent: int = 0
    timeouts: int = 0
    fast_retransmits: int = 0
    # no fast retransmit until the ACK point passes this sequence
    recover: int = -1
    # seq -> (first send time, was retransmitted); RTT samples skip retransmitted seqs
    send_times: dict = field(default_factory=dict)

    @property
    def in_flight(self) -> int:
        return self.next_seq - self.highest_acked

    @property
    def window(self) -> int:
        return math.floor(min(self.cwnd, self.rcv_window))


@dataclass
class TcpSink:
    id: str
    node: int
    flow_id: int
    expected_seq: int = 0
    bytes_received: int = 0
    total_bytes: int = 0
    total_packets: int = 0


def sink_on_packet(sink: TcpSink, pkt: Packet, net: Network) -> Packet:
    """Count the packet, advance on in-order arrival, and build the cumulative ACK."""
    sink.bytes_received += pkt.size
    sink.total_bytes += pkt.size
    sink.total_packets += 1
    if pkt.seq == sink.expected_seq:
        sink.expected_seq += 1
    return net.new_packet(pkt.flow_id, sink.node, pkt.src, ACK_SIZE, sink.expected_seq, ACK)


class TcpAgent:
    """Binds a :class:`TcpConn` to the event loop and the network."""

    def __init__(self, conn: TcpConn, sim: Simulator, net: Network, cwnd_log: Optional[list] = None):
        self.conn = conn
        self.sim = sim
        self.net = net
        self.cwnd_log = cwnd_log

    def app_send(self, nbytes: int, now: Optional[float] = None) -> None:
        if nbytes <= 0:
            raise ValueError("nbytes must be positive")
        self.conn.app_backlog += nbytes
        self.try_send()

    def try_send(self) -> int:
        c = self.conn
        sent = 0
        while c.in_flight < c.window:
            resend = c.next_seq < c.max_sent
            if not resend and c.app_backlog < c.mss:
                break
            self._emit(c.next_seq, resend)
            if not resend:
                c.app_backlog -= c.mss
            c.next_seq += 1
            c.max_sent = max(c.max_sent, c.next_seq)
            sent += 1
        if sent and not self.sim.is_pending(c.timer):
            self._restart_timer()
        return sent

    def _emit(self, seq: int, resend: bool) -> None:
        c = self.conn
        now = self.sim.now
        if resend:
            c.retransmit_count += 1
            first = c.send_times.get(seq)
            c.send_times[seq] = (first[0] if first else now, True)
        else:
            c.send_times[seq] = (now, False)
        c.packets_sent += 1
        pkt = self.net.new_packet(c.flow_id, c.src, c.dst, c.mss, seq, TCP)
        self.net.send(pkt)

    def on_ack(self, ack_seq: int) -> None:
        c = self.conn
        now = self.sim.now
        if ack_seq < c.highest_acked:
            return
        if ack_seq > c.highest_acked:
            self._rtt_sample(ack_seq - 1, now)
            for s in range(c.highest_acked, ack_seq):
                c.send_times.pop(s, None)
            c.highest_acked = ack_seq
            if c.next_seq < ack_seq:
                c.next_seq = ack_seq
            if c.cwnd < c.ssthresh:
                c.cwnd += 1.0
            else:
                c.cwnd += 1.0 / c.cwnd
            c.dup_acks = 0
            if self.cwnd_log is not None:
                self.cwnd_log.append((now, c.cwnd))
            self._restart_timer()
            self.try_send()
            return
        if c.max_sent == c.highest_acked:
            return
        c.dup_acks += 1
        if c.dup_acks == DUPACK_THRESHOLD and c.highest_acked > c.recover:
            c.fast_retransmits += 1
            self._loss_reset()
            self._restart_timer()
            self.try_send()

    def _loss_reset(self) -> None:
        c = self.conn
        c.ssthresh = max(c.in_flight / 2, 2.0)
        c.cwnd = 1.0
        c.recover = c.max_sent - 1
        c.next_seq = c.highest_acked

    def _rtt_sample(self, seq: int, now: float) -> None:
        c = self.conn
        entry = c.send_times.get(seq)
        if entry is None or entry[1]:
            return
        m = now - entry[0]
        if c.srtt is None:
            c.srtt = m
            c.rttvar = m / 2
        else:
            c.rttvar = 0.75 * c.rttvar + 0.25 * abs(c.srtt - m)
            c.srtt = 0.875 * c.srtt + 0.125 * m
        c.rto = min(max(c.srtt + 4 * c.rttvar, MIN_RTO), MAX_RTO)

    def _restart_timer(self) -> None:
        c = self.conn
        if c.timer is not None:
            self.sim.cancel(c.timer)
            c.timer = None
        if c.max_sent > c.highest_acked:
            c.timer = self.sim.schedule_in(c.rto, EventKind.TCP_TIMEOUT, self.on_timeout)

    def on_timeout(self) -> None:
        c = self.conn
        c.timer = None
        if c.max_sent == c.highest_acked:
            return
        c.timeouts += 1
        self._loss_reset()
        c.rto = min(2 * c.rto, MAX_RTO)
        self._restart_timer()
        self.try_send()
