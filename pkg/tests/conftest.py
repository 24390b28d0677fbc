import pytest

from dropsim.cli import shipped_scenario
from dropsim.netgraph import Link, Network, QueueState
from dropsim.scenario import parse_scenario
from dropsim.scheduler import Simulator

ACCEPTANCE_LINES = []


class FixedRng:
    """Stand-in RngStream returning scripted uniform draws."""

    def __init__(self, *draws):
        self.draws = list(draws)

    def uniform(self):
        return self.draws.pop(0)


def two_node_net(bw=1e6, delay=0.01, limit=10, keep_log=False):
    sim = Simulator(keep_log=keep_log)
    net = Network(sim)
    net.add_node(0)
    net.add_node(1)
    fwd = net.add_link(Link(0, 1, bw, delay, QueueState(limit=limit)))
    rev = net.add_link(Link(1, 0, bw, delay, QueueState(limit=limit)))
    return sim, net, fwd, rev


@pytest.fixture
def drop_scenario():
    return parse_scenario(shipped_scenario("drop.scn"))


@pytest.fixture
def nodrop_scenario():
    return parse_scenario(shipped_scenario("nodrop.scn"))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
