"""Wire a :class:`Scenario` into a simulation, run it, and write its outputs."""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Optional

from .netgraph import ACK, RED, TCP, Link, Network, QueueState, REDState
from .scenario import Scenario
from .scheduler import EventKind, Simulator
from .telemetry import RunReport, ThroughputRecorder, TraceWriter, write_text, xgraph_write
from .traffic import ExpOnOffApp, RngStream, make_app
from .transport import TcpAgent, TcpConn, TcpSink, sink_on_packet


def plot_file_name(flow_id: int) -> str:
    return f"flow{flow_id}.tr.w"


@dataclass
class RunResult:
    report: RunReport
    samples: dict
    trace_path: Optional[Path] = None
    plot_paths: list = field(default_factory=list)
    report_path: Optional[Path] = None


class Experiment:
    """One run of a scenario: the simulator, network, agents and monitors."""

    def __init__(self, scenario: Scenario, seed: Optional[int] = None,
                 trace_fh: Optional[IO[str]] = None, keep_log: bool = False):
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else seed
        self.sim = Simulator(keep_log=keep_log)
        self.net = Network(self.sim)
        self.trace = TraceWriter(trace_fh)
        self.report = RunReport()
        self.agents: dict[int, TcpAgent] = {}
        self.sinks: dict[int, TcpSink] = {}
        self.apps: list[ExpOnOffApp] = []
        self.acks_created: dict[int, int] = {}
        self._build()

    def _build(self) -> None:
        sc = self.scenario
        mean_pkt = sc.apps[0].config.packet_size if sc.apps else 210
        for n in sc.nodes:
            self.net.add_node(n)
        for ln in sc.links:
            red = None
            if ln.queue == RED:
                red = REDState(w_q=ln.w_q, min_th=ln.min_th, max_th=ln.max_th, max_p=ln.max_p,
                               typical_tx_time=mean_pkt * 8 / ln.bandwidth)
            queue = QueueState(ln.queue, ln.limit, red=red)
            rng = RngStream.for_purpose(self.seed, f"red:{ln.src}-{ln.dst}") if red else None
            self.net.add_link(Link(ln.src, ln.dst, ln.bandwidth, ln.delay, queue, rng))
        for a in sc.agents:
            conn = TcpConn(a.name, a.src, a.dst, a.flow_id, mss=sc.mss_for(a.name), rcv_window=a.window)
            self.agents[a.flow_id] = TcpAgent(conn, self.sim, self.net)
            self.sinks[a.flow_id] = TcpSink(f"sink{a.flow_id}", a.dst, a.flow_id)
            self.report.flow(a.flow_id)
        for app in sc.apps:
            agent = self.agents[sc.agent(app.agent).flow_id]
            self.apps.append(make_app(app.name, app.config, self.seed, agent.app_send))

        self.net.on_trace = self.trace.emit
        self.net.on_deliver = self._deliver
        self.net.on_drop = self._drop
        driven = {sc.agent(app.agent).flow_id for app in sc.apps}
        # flows without an application carry no traffic and get an empty series
        self.recorder = ThroughputRecorder(
            self.sim, sc.record_interval, {f: s for f, s in self.sinks.items() if f in driven})

    def _deliver(self, pkt, now: float) -> None:
        c = self.report.flow(pkt.flow_id)
        c.received += 1
        if pkt.kind == TCP:
            ack = sink_on_packet(self.sinks[pkt.flow_id], pkt, self.net)
            self.acks_created[pkt.flow_id] = self.acks_created.get(pkt.flow_id, 0) + 1
            self.net.send(ack)
        elif pkt.kind == ACK:
            self.agents[pkt.flow_id].on_ack(pkt.seq)

    def _drop(self, pkt, link: Link, reason: str, now: float) -> None:
        self.report.flow(pkt.flow_id).dropped += 1
        self.report.node_drops[link.src] = self.report.node_drops.get(link.src, 0) + 1

    def _finish(self) -> None:
        self.recorder.finish(self.sim.now)
        self.sim.stop()

    def run(self) -> RunReport:
        t0 = time.perf_counter()
        self.sim.schedule(self.scenario.duration, EventKind.SIM_FINISH, self._finish)
        self.recorder.start()
        for app in self.apps:
            app.attach(self.sim)
        summary = self.sim.run_until(self.scenario.duration)
        self.trace.flush()
        self._tally()
        self.report.events_executed = summary.events_executed
        self.report.wall_time = time.perf_counter() - t0
        return self.report

    def _tally(self) -> None:
        rep = self.report
        for fid, agent in self.agents.items():
            c = rep.flow(fid)
            c.created = agent.conn.packets_sent + self.acks_created.get(fid, 0)
            c.retransmitted = agent.conn.retransmit_count
            c.bytes_received = self.sinks[fid].total_bytes
        for pkt in self.net.buffered():
            rep.flow(pkt.flow_id).buffered += 1
        for pkt in self.net.in_flight():
            rep.flow(pkt.flow_id).in_flight += 1

    @property
    def samples(self) -> dict:
        return {fid: self.recorder.samples.get(fid, []) for fid in sorted(self.sinks)}


def resolve_out_dir(out_dir=None) -> Path:
    if out_dir is None:
        out_dir = os.environ.get("DROPSIM_OUT") or "."
    return Path(out_dir)


def run_scenario(scenario: Scenario, seed: Optional[int] = None, out_dir=None) -> RunResult:
    """Run to completion and write the trace, per-flow plot data, and report.txt."""
    out = resolve_out_dir(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace_path = out / scenario.trace_path
    with open(trace_path, "w") as fh:
        exp = Experiment(scenario, seed=seed, trace_fh=fh)
        report = exp.run()
    plot_paths = []
    for fid in sorted(exp.samples):
        p = out / plot_file_name(fid)
        xgraph_write(exp.samples[fid], p, title=f"flow{fid}")
        plot_paths.append(p)
    report_path = out / "report.txt"
    write_text(report_path, report.render())
    return RunResult(report, exp.samples, trace_path, plot_paths, report_path)
