import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FixedRng, two_node_net
from dropsim.netgraph import (
    QUEUE_FULL, QUEUED, RED, RED_EARLY, RED_FORCED, Link, Network, Packet, QueueState,
    REDState, droptail_admit, red_admit, red_decide, red_probability, red_update_avg,
    static_routes,
)
from dropsim.scheduler import EventKind, Simulator


def pkt(uid=0, size=210):
    return Packet(uid, 1, 0, 1, size, uid)


def filled(n, limit=10):
    q = QueueState(limit=limit)
    q.buffer.extend(pkt(i) for i in range(n))
    return q


def test_droptail_admit_examples():
    assert droptail_admit(filled(9), pkt()) is True
    assert droptail_admit(filled(10), pkt()) is False
    assert droptail_admit(filled(0, limit=0), pkt()) is False


def test_enqueue_droptail_queued_and_dropped():
    sim, net, fwd, _ = two_node_net()
    fwd.busy = True  # hold packets in the buffer
    fwd.queue.buffer.extend(pkt(100 + i) for i in range(3))
    assert net.enqueue(fwd, pkt(1)) == QUEUED
    fwd.queue.buffer.extend(pkt(200 + i) for i in range(6))
    assert len(fwd.queue.buffer) == 10
    assert net.enqueue(fwd, pkt(2)) == QUEUE_FULL
    assert len(fwd.queue.buffer) == 10


def test_red_regions():
    red = REDState(w_q=1.0)
    q = QueueState(RED, limit=30, red=red)
    q.buffer.extend(pkt(i) for i in range(3))
    red.idle_since = None
    assert red_admit(q, pkt(), 0.0, FixedRng()) is True  # avg=3 < min_th
    q.buffer.extend(pkt(i) for i in range(17))
    assert red_decide(q, pkt(), 0.0, FixedRng()) == RED_FORCED  # avg=20 >= max_th


def test_red_probability_hand_evaluated():
    # p_b = 0.1 * (10 - 5) / (15 - 5) = 0.05; count 0 -> p_a = p_b
    red = REDState(min_th=5, max_th=15, max_p=0.1, count=0)
    p_b, p_a = red_probability(red, 10.0)
    assert p_b == pytest.approx(0.05, rel=1e-15)
    assert p_a == pytest.approx(0.05, rel=1e-15)
    red.count = 4
    # 0.05 / (1 - 4 * 0.05) = 0.0625
    assert red_probability(red, 10.0)[1] == pytest.approx(0.0625, rel=1e-15)
    red.count = 20
    assert red_probability(red, 10.0)[1] == 1.0


@pytest.mark.parametrize("draw,expected", [(0.049, RED_EARLY), (0.05, QUEUED), (0.9, QUEUED)])
def test_red_band_decision_uses_draw(draw, expected):
    red = REDState(w_q=1.0, min_th=5, max_th=15, max_p=0.1)
    red.idle_since = None
    q = QueueState(RED, limit=30, red=red)
    q.buffer.extend(pkt(i) for i in range(10))
    assert red_decide(q, pkt(), 0.0, FixedRng(draw)) == expected
    assert red.count == (0 if expected == RED_EARLY else 1)


def test_red_idle_compensation():
    red = REDState(w_q=0.5, typical_tx_time=0.01)
    red.avg = 8.0
    red.idle_since = 1.0
    # 0.03 s idle = 3 typical transmissions -> avg * 0.5**3
    assert red_update_avg(red, 0, 1.03) == pytest.approx(1.0, rel=1e-12)
    assert red.idle_since is None
    assert red_update_avg(red, 4, 1.04) == pytest.approx(2.5, rel=1e-12)


def test_red_full_buffer_rejects_below_min_th():
    red = REDState(w_q=0.002, min_th=5, max_th=10)
    q = QueueState(RED, limit=10, red=red)
    q.buffer.extend(pkt(i) for i in range(10))
    assert red_decide(q, pkt(), 0.0, FixedRng()) == QUEUE_FULL


def test_red_parameter_validation():
    with pytest.raises(ValueError):
        REDState(w_q=0)
    with pytest.raises(ValueError):
        REDState(min_th=10, max_th=5)
    with pytest.raises(ValueError):
        QueueState(RED, limit=10, red=REDState(max_th=15))


@pytest.mark.parametrize("bw,delay,expected_tx", [(100_000, 0.0, 0.0168), (1_000_000, 0.010, 0.00168)])
def test_transmit_timing(bw, delay, expected_tx):
    sim, net, fwd, _ = two_node_net(bw=bw, delay=delay)
    events = []
    net.on_trace = lambda ev, p, link, now: events.append((ev, now))
    net.send(Packet(0, 1, 0, 1, 210, 0))
    sim.run_until(1.0)
    assert [e for e, _ in events] == ["+", "-", "r"]
    assert events[2][1] == pytest.approx(expected_tx + delay, abs=1e-15)
    assert fwd.busy_until == pytest.approx(expected_tx, abs=1e-15)


def test_fifo_serialization_back_to_back():
    sim, net, fwd, _ = two_node_net(bw=1e6, delay=0.01)
    deq = []
    net.on_trace = lambda ev, p, link, now: ev == "-" and deq.append(now)
    net.send(Packet(0, 1, 0, 1, 210, 0))
    net.send(Packet(1, 1, 0, 1, 210, 1))
    sim.run_until(1.0)
    assert deq[0] == 0.0
    assert deq[1] == pytest.approx(0.00168, abs=1e-15)


def test_routing_multi_hop():
    sim = Simulator()
    net = Network(sim)
    for n in range(5):
        net.add_node(n)
    for a in (0, 1, 2):
        net.add_link(Link(a, 3, 2e6, 0.01))
        net.add_link(Link(3, a, 2e6, 0.01))
    net.add_link(Link(3, 4, 1e6, 0.02))
    net.add_link(Link(4, 3, 1e6, 0.02))
    assert net.next_hop(0, 4) == 3
    assert net.next_hop(3, 4) == 4
    assert net.next_hop(4, 1) == 3
    assert net.has_path(2, 4) and net.has_path(4, 2)
    delivered = []
    net.on_deliver = lambda p, now: delivered.append((p.uid, now))
    net.send(net.new_packet(1, 0, 4, 210, 0, "tcp"))
    sim.run_until(1.0)
    assert delivered[0][1] == pytest.approx(210 * 8 / 2e6 + 0.01 + 210 * 8 / 1e6 + 0.02)


def test_static_routes_missing_path():
    routes = static_routes([0, 1, 2], [(0, 1)])
    assert routes == {(0, 1): 1}


def test_link_validation():
    with pytest.raises(ValueError):
        Link(0, 1, 0, 0.01)
    with pytest.raises(ValueError):
        Link(0, 1, 1e6, -1)


arrivals = st.lists(st.tuples(st.floats(0, 0.05), st.integers(40, 1500)), min_size=1, max_size=60)


@settings(max_examples=100, deadline=None)
@given(arrivals, st.integers(0, 8))
def test_buffer_bound_and_serialization_spacing(arr, limit):
    sim, net, fwd, _ = two_node_net(bw=1e6, delay=0.005, limit=limit)
    occupancy = []
    dequeues = []
    drops_when_full = []

    def on_trace(ev, p, link, now):
        if link is not fwd:
            return
        occupancy.append(len(link.queue.buffer))
        if ev == "-":
            dequeues.append((now, p.size))
        if ev == "+":
            drops_when_full.append(len(link.queue.buffer) >= limit)

    net.on_trace = on_trace
    created = []
    for t, size in sorted(arr):
        def inject(size=size):
            p = net.new_packet(1, 0, 1, size, 0, "tcp")
            created.append(p.uid)
            net.send(p)
        sim.schedule(t, EventKind.APP_EMIT, inject)
    dropped = []
    received = []
    net.on_drop = lambda p, link, reason, now: dropped.append(p.uid)
    net.on_deliver = lambda p, now: received.append(p.uid)
    sim.run_until(0.03)
    assert max(occupancy, default=0) <= limit
    for (t0, s0), (t1, _) in zip(dequeues, dequeues[1:]):
        assert t1 - t0 >= s0 * 8 / 1e6 - 1e-12
    # drop iff buffer exactly full at the enqueue instant
    assert sum(drops_when_full) == len(dropped)
    # conservation
    assert len(created) == len(received) + len(dropped) + len(list(net.buffered())) + len(list(net.in_flight()))
    assert math.isfinite(sim.now)
