"""Line-oriented scenario files.

Each non-blank line is ``section key=value ...``; ``#`` starts a comment.
Sections: sim, node, link, agent, app, record, trace. Quantities accept
unit suffixes (``k``/``Mb`` for bits per second, ``ms``/``s`` for time);
bare numbers are base units.

Example::

    sim duration=5.0 seed=1
    node name=n0
    node name=n4
    link from=n0 to=n4 bw=1Mb delay=20ms queue=droptail limit=10
    link from=n4 to=n0 bw=1Mb delay=20ms queue=droptail limit=10
    agent name=tcp0 type=tcp src=n0 dst=n4 flow=1
    app type=expoo agent=tcp0 pktsize=210 burst=2ms idle=1ms rate=100k start=0.1 stop=4.5
    record interval=0.1
    trace path=out.tr
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional

from .netgraph import DROPTAIL, RED, path_exists, static_routes
from .traffic import ExpOnOffConfig


class ScenarioError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"{message} at line {line}" if line is not None else message)


RATE_UNITS = {"": 1.0, "k": 1e3, "kb": 1e3, "m": 1e6, "mb": 1e6, "g": 1e9, "gb": 1e9}
TIME_UNITS = {"": 1.0, "s": 1.0, "ms": 1e-3, "us": 1e-6}

_QUANTITY = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)([A-Za-z]*)$")
_NODE = re.compile(r"^n(\d+)$")


def parse_quantity(text: str, units: dict) -> float:
    m = _QUANTITY.match(text)
    if not m:
        raise ValueError(f"bad number {text!r}")
    suffix = m.group(2).lower()
    if suffix not in units:
        raise ValueError(f"unknown unit {m.group(2)!r} in {text!r}")
    return float(m.group(1)) * units[suffix]


def parse_rate(text: str) -> float:
    return parse_quantity(text, RATE_UNITS)


def parse_time(text: str) -> float:
    return parse_quantity(text, TIME_UNITS)


def node_index(name: str) -> int:
    m = _NODE.match(name)
    if not m:
        raise ValueError(f"node names look like n0, n1, ...; got {name!r}")
    return int(m.group(1))


@dataclass
class LinkSpec:
    src: int
    dst: int
    bandwidth: float
    delay: float
    queue: str = DROPTAIL
    limit: int = 10
    min_th: float = 5.0
    max_th: float = 15.0
    max_p: float = 0.1
    w_q: float = 0.002
    line: Optional[int] = field(default=None, compare=False)


@dataclass
class AgentSpec:
    name: str
    src: int
    dst: int
    flow_id: int
    window: int = 20
    line: Optional[int] = field(default=None, compare=False)


@dataclass
class AppSpec:
    name: str
    agent: str
    config: ExpOnOffConfig
    line: Optional[int] = field(default=None, compare=False)


@dataclass
class Scenario:
    duration: float = 5.0
    seed: int = 1
    nodes: list[int] = field(default_factory=list)
    links: list[LinkSpec] = field(default_factory=list)
    agents: list[AgentSpec] = field(default_factory=list)
    apps: list[AppSpec] = field(default_factory=list)
    record_interval: float = 0.1
    trace_path: str = "out.tr"

    def agent(self, name: str) -> AgentSpec:
        for a in self.agents:
            if a.name == name:
                return a
        raise KeyError(name)

    def mss_for(self, agent_name: str) -> int:
        for app in self.apps:
            if app.agent == agent_name:
                return app.config.packet_size
        return 210


SECTIONS = {
    "sim": {"duration", "seed"},
    "node": {"name"},
    "link": {"from", "to", "bw", "delay", "queue", "limit", "minth", "maxth", "maxp", "wq"},
    "agent": {"name", "type", "src", "dst", "flow", "window"},
    "app": {"name", "type", "agent", "pktsize", "burst", "idle", "rate", "start", "stop"},
    "record": {"interval"},
    "trace": {"path"},
}
REQUIRED = {
    "node": {"name"},
    "link": {"from", "to", "bw", "delay"},
    "agent": {"name", "src", "dst", "flow"},
    "app": {"agent", "rate"},
}


def _split(line: str, lineno: int) -> tuple[str, dict[str, str]]:
    words = line.split()
    section, kv = words[0], {}
    if section not in SECTIONS:
        raise ScenarioError(f"unknown section {section!r}", lineno)
    for w in words[1:]:
        if "=" not in w:
            raise ScenarioError(f"expected key=value, got {w!r}", lineno)
        k, v = w.split("=", 1)
        if k not in SECTIONS[section]:
            raise ScenarioError(f"unknown key {k!r} in {section}", lineno)
        if k in kv:
            raise ScenarioError(f"duplicate key {k!r}", lineno)
        kv[k] = v
    missing = REQUIRED.get(section, set()) - kv.keys()
    if missing:
        raise ScenarioError(f"{section} is missing {', '.join(sorted(missing))}", lineno)
    return section, kv


def parse_scenario(text: str) -> Scenario:
    sc = Scenario()
    declared: set[int] = set()

    def node_ref(name: str, lineno: int) -> int:
        try:
            idx = node_index(name)
        except ValueError:
            raise ScenarioError(f"unknown node {name}", lineno) from None
        if idx not in declared:
            raise ScenarioError(f"unknown node {name}", lineno)
        return idx

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        section, kv = _split(line, lineno)
        key = None
        try:
            if section == "sim":
                if "duration" in kv:
                    key = "duration"
                    sc.duration = parse_time(kv["duration"])
                if "seed" in kv:
                    key = "seed"
                    sc.seed = int(kv["seed"])
            elif section == "node":
                key = "name"
                idx = node_index(kv["name"])
                if idx in declared:
                    raise ScenarioError(f"duplicate node {kv['name']}", lineno)
                declared.add(idx)
                sc.nodes.append(idx)
            elif section == "link":
                src, dst = node_ref(kv["from"], lineno), node_ref(kv["to"], lineno)
                key = "bw"
                bw = parse_rate(kv["bw"])
                if bw <= 0:
                    raise ScenarioError("link bandwidth must be positive", lineno)
                key = "delay"
                delay = parse_time(kv["delay"])
                if delay < 0:
                    raise ScenarioError("link delay must be non-negative", lineno)
                key = "queue"
                queue = kv.get("queue", DROPTAIL).lower()
                if queue not in (DROPTAIL, RED):
                    raise ScenarioError(f"unknown queue discipline {kv['queue']!r}", lineno)
                link = LinkSpec(src, dst, bw, delay, queue, line=lineno)
                for k, attr, conv in (("limit", "limit", int), ("minth", "min_th", float),
                                      ("maxth", "max_th", float), ("maxp", "max_p", float),
                                      ("wq", "w_q", float)):
                    if k in kv:
                        key = k
                        setattr(link, attr, conv(kv[k]))
                if link.limit < 0:
                    raise ScenarioError("queue limit must be non-negative", lineno)
                if queue == RED and not (0 <= link.min_th < link.max_th <= link.limit
                                         and 0 < link.max_p <= 1 and 0 < link.w_q <= 1):
                    raise ScenarioError("RED parameters out of range", lineno)
                sc.links.append(link)
            elif section == "agent":
                if kv.get("type", "tcp") != "tcp":
                    raise ScenarioError(f"unsupported agent type {kv['type']!r}", lineno)
                if any(a.name == kv["name"] for a in sc.agents):
                    raise ScenarioError(f"duplicate agent {kv['name']}", lineno)
                src, dst = node_ref(kv["src"], lineno), node_ref(kv["dst"], lineno)
                key = "flow"
                flow = int(kv["flow"])
                if any(a.flow_id == flow for a in sc.agents):
                    raise ScenarioError(f"duplicate flow id {flow}", lineno)
                key = "window"
                window = int(kv.get("window", 20))
                if window < 1:
                    raise ScenarioError("window must be at least 1", lineno)
                sc.agents.append(AgentSpec(kv["name"], src, dst, flow, window, line=lineno))
            elif section == "app":
                if kv.get("type", "expoo") != "expoo":
                    raise ScenarioError(f"unsupported app type {kv['type']!r}", lineno)
                if not any(a.name == kv["agent"] for a in sc.agents):
                    raise ScenarioError(f"unknown agent {kv['agent']}", lineno)
                if any(a.agent == kv["agent"] for a in sc.apps):
                    raise ScenarioError(f"agent {kv['agent']} already has an app", lineno)
                key = "rate"
                rate = parse_rate(kv["rate"])
                if rate <= 0:
                    raise ScenarioError("rate must be positive", lineno)
                fields_ = {"rate": rate}
                for k, attr, conv in (("pktsize", "packet_size", int), ("burst", "burst_time", parse_time),
                                      ("idle", "idle_time", parse_time), ("start", "start_at", parse_time),
                                      ("stop", "stop_at", parse_time)):
                    if k in kv:
                        key = k
                        fields_[attr] = conv(kv[k])
                key = None
                try:
                    cfg = ExpOnOffConfig(**fields_)
                except ValueError as e:
                    raise ScenarioError(str(e), lineno) from None
                name = kv.get("name", f"exp{len(sc.apps)}")
                sc.apps.append(AppSpec(name, kv["agent"], cfg, line=lineno))
            elif section == "record":
                if "interval" in kv:
                    key = "interval"
                    sc.record_interval = parse_time(kv["interval"])
                    if sc.record_interval <= 0:
                        raise ScenarioError("record interval must be positive", lineno)
            elif section == "trace":
                if "path" in kv:
                    sc.trace_path = kv["path"]
        except ScenarioError:
            raise
        except ValueError as e:
            where = f" ({key})" if key else ""
            raise ScenarioError(f"{e}{where}", lineno) from None

    validate(sc)
    return sc


def validate(sc: Scenario) -> None:
    if sc.duration <= 0:
        raise ScenarioError("duration must be positive")
    seen = set()
    for ln in sc.links:
        if (ln.src, ln.dst) in seen:
            raise ScenarioError(f"duplicate link n{ln.src}->n{ln.dst}", ln.line)
        seen.add((ln.src, ln.dst))
    routes = static_routes(sc.nodes, seen)
    for a in sc.agents:
        if not path_exists(routes, a.src, a.dst):
            raise ScenarioError(f"no path n{a.src}->n{a.dst} for agent {a.name}", a.line)
        if not path_exists(routes, a.dst, a.src):
            raise ScenarioError(f"no reverse path n{a.dst}->n{a.src} for agent {a.name}", a.line)
    for app in sc.apps:
        stop = app.config.stop_at
        if math.isfinite(stop) and not sc.duration > stop:
            raise ScenarioError(f"duration must exceed stop time of app {app.name}", app.line)


def _num(x: float) -> str:
    return repr(float(x))


def render_scenario(sc: Scenario) -> str:
    """Canonical text form; ``parse_scenario(render_scenario(s)) == s``."""
    out = [f"sim duration={_num(sc.duration)} seed={sc.seed}"]
    out += [f"node name=n{n}" for n in sc.nodes]
    for ln in sc.links:
        s = (f"link from=n{ln.src} to=n{ln.dst} bw={_num(ln.bandwidth)} delay={_num(ln.delay)}"
             f" queue={ln.queue} limit={ln.limit}")
        if ln.queue == RED:
            s += f" minth={_num(ln.min_th)} maxth={_num(ln.max_th)} maxp={_num(ln.max_p)} wq={_num(ln.w_q)}"
        out.append(s)
    for a in sc.agents:
        out.append(f"agent name={a.name} type=tcp src=n{a.src} dst=n{a.dst} flow={a.flow_id} window={a.window}")
    for app in sc.apps:
        c = app.config
        out.append(f"app name={app.name} type=expoo agent={app.agent} pktsize={c.packet_size}"
                   f" burst={_num(c.burst_time)} idle={_num(c.idle_time)} rate={_num(c.rate)}"
                   f" start={_num(c.start_at)}")
        if math.isfinite(c.stop_at):
            out[-1] += f" stop={_num(c.stop_at)}"
    out.append(f"record interval={_num(sc.record_interval)}")
    out.append(f"trace path={sc.trace_path}")
    return "\n".join(out) + "\n"
