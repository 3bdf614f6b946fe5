import networkx as nx
import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from nbspec import corpus
from nbspec.graph import Graph, two_core

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@st.composite
def connected_graphs(draw, min_n=2, max_n=9, max_extra=6):
    """Random spanning tree plus a few extra edges."""
    n = draw(st.integers(min_n, max_n))
    parents = [draw(st.integers(0, i - 1)) for i in range(1, n)]
    edges = {(p, i) for i, p in enumerate(parents, 1)}
    absent = [(u, v) for u in range(n) for v in range(u + 1, n) if (u, v) not in edges]
    if absent:
        extra = draw(st.lists(st.sampled_from(absent), max_size=max_extra, unique=True))
        edges |= set(extra)
    return Graph.from_edges(sorted(edges))


@st.composite
def trees(draw, min_n=2, max_n=12):
    return draw(connected_graphs(min_n=min_n, max_n=max_n, max_extra=0))


@st.composite
def md2_graphs(draw, min_n=3, max_n=10, multi_cycle=False):
    """2-cores of random connected graphs, optionally with at least two cycles."""
    g = draw(connected_graphs(min_n=min_n, max_n=max_n, max_extra=7))
    core = two_core(g)
    from hypothesis import assume

    assume(core is not None)
    c = core[0]
    if multi_cycle:
        assume(c.m > c.n)
    return c


def random_connected(rng, n, p):
    while True:
        h = nx.gnp_random_graph(n, p, seed=int(rng.integers(2**31)))
        if nx.is_connected(h):
            return Graph.from_edges(list(h.edges()))


@pytest.fixture(scope="session")
def graphs():
    return corpus.all_graphs()


@pytest.fixture(scope="session")
def karate():
    return corpus.load("karate")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
