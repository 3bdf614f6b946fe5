import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given

from nbspec import corpus
from nbspec.graph import (
    CycleGraphError,
    DisconnectedGraphError,
    DuplicateEdgeError,
    Graph,
    GraphError,
    ParseError,
    SelfLoopError,
    TooSmallGraphError,
    complete_bipartite_graph,
    complete_graph,
    cycle_basis,
    cycle_graph,
    is_bipartite,
    load_graph,
    nb_period,
    parse_edgelist,
    path_graph,
    read_graph,
    shell_decomposition,
    two_core,
)
from nbspec.nbmatrix import NBOperator

from .conftest import connected_graphs, md2_graphs


def to_nx(g):
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges)
    return h


class TestLoading:
    def test_single_edge(self):
        g = load_graph("0 1")
        assert (g.n, g.m) == (2, 1)
        assert g.oriented_edges == ((0, 1), (1, 0))

    def test_triangle_oriented_order(self):
        g = load_graph("0 1\n1 2\n0 2")
        assert g.oriented_edges == ((0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1))

    def test_comments_and_blank_lines(self):
        g = load_graph("# header\n\n0 1\n   \n# more\n1 2\n")
        assert g.edges == ((0, 1), (1, 2))

    @pytest.mark.parametrize(
        "text, exc",
        [
            ("0 1\n0 1", DuplicateEdgeError),
            ("0 1\n1 0", DuplicateEdgeError),
            ("0 0", SelfLoopError),
            ("0 1\n2 3", DisconnectedGraphError),
            ("", TooSmallGraphError),
            ("0 1 2", ParseError),
            ("0 x", ParseError),
        ],
    )
    def test_validation(self, text, exc):
        with pytest.raises(exc):
            load_graph(text)

    def test_all_errors_are_graph_errors(self):
        for exc in (SelfLoopError, DuplicateEdgeError, DisconnectedGraphError, ParseError):
            assert issubclass(exc, GraphError)
            assert issubclass(exc, ValueError)

    def test_labels_densified_in_order(self):
        g = load_graph("10 30\n30 20")
        assert g.labels == (10, 20, 30)
        assert g.edges == ((0, 2), (1, 2))

    def test_read_graph(self, tmp_path):
        p = tmp_path / "g.edges"
        p.write_text("0 1\n1 2\n2 0\n")
        assert read_graph(p) == cycle_graph(3)

    @given(connected_graphs())
    def test_edgelist_round_trip(self, g):
        assert load_graph(g.to_edgelist()) == g
        assert parse_edgelist(g.to_edgelist()) == list(g.edges)


class TestStructure:
    @given(connected_graphs())
    def test_oriented_edges_lexicographic(self, g):
        oe = list(g.oriented_edges)
        assert oe == sorted(oe)
        assert len(oe) == 2 * g.m
        assert all(g.edge_index[e] == i for i, e in enumerate(oe))

    @given(connected_graphs())
    def test_reverse_is_involution(self, g):
        rev = g.rev
        assert np.array_equal(rev[rev], np.arange(2 * g.m))
        assert np.array_equal(g.src[rev], g.dst)

    @given(connected_graphs())
    def test_degrees_match_networkx(self, g):
        h = to_nx(g)
        assert list(g.degrees) == [h.degree(u) for u in range(g.n)]

    def test_families(self):
        assert complete_graph(4).m == 6
        assert cycle_graph(5).is_cycle_graph
        assert path_graph(4).is_tree
        assert complete_bipartite_graph(3, 3).m == 9

    def test_with_node(self):
        g = cycle_graph(4).with_node([0, 2])
        assert g.n == 5 and g.adjacency[4] == (0, 2)
        with pytest.raises(GraphError):
            cycle_graph(4).with_node([7])
        with pytest.raises(GraphError):
            cycle_graph(4).with_node([])

    def test_subgraph_map(self):
        g = corpus.load("paw")
        sub, nodes = g.subgraph([1, 2, 3])
        assert nodes == (1, 2, 3)
        assert sub.is_cycle_graph


class TestShell:
    def test_p3(self):
        sh = shell_decomposition(path_graph(3))
        assert [sorted(layer.nodes) for layer in sh.layers] == [[0, 2], [1]]
        assert not sh.two_core_nodes
        assert two_core(path_graph(3)) is None

    def test_p2_single_layer(self):
        sh = shell_decomposition(path_graph(2))
        assert [sorted(layer.nodes) for layer in sh.layers] == [[0, 1]]

    def test_paw(self):
        sh = shell_decomposition(corpus.load("paw"))
        assert [sorted(layer.nodes) for layer in sh.layers] == [[0]]
        assert sh.two_core_nodes == {1, 2, 3}
        assert (sh.s1, sh.n1) == (1, 1)

    def test_karate(self, karate):
        sh = shell_decomposition(karate)
        assert (sh.s1, sh.n1) == (1, 1)
        assert len(sh.two_core_nodes) == 33

    def test_tree_layers(self):
        sh = shell_decomposition(corpus.load("tree-layers"))
        assert [sorted(layer.nodes) for layer in sh.layers] == [[0, 2, 4], [1, 3]]

    @given(connected_graphs())
    def test_two_core_matches_networkx(self, g):
        expected = set(nx.k_core(to_nx(g), 2).nodes)
        sh = shell_decomposition(g)
        assert set(sh.two_core_nodes) == expected
        assert sh.s1 == g.n - len(expected)
        assert sh.n1 == int(np.sum(g.degrees == 1))
        # every 1-shell edge is removed exactly once
        removed = [e for layer in sh.layers for e in layer.edges]
        assert len(removed) == len(set(removed))
        core_edges = [e for e in g.edges if set(e) <= expected]
        assert len(removed) + len(core_edges) == g.m

    @given(connected_graphs())
    def test_two_core_is_md2(self, g):
        core = two_core(g)
        if core is not None:
            assert core[0].is_md2


class TestCycles:
    def test_c4(self):
        cb = cycle_basis(cycle_graph(4))
        assert len(cb) == 1
        assert len(cb.fundamental_cycles[0]) == 4
        assert cb.parities == ("even",)

    def test_bowtie(self):
        cb = cycle_basis(corpus.load("bowtie"))
        assert sorted(len(c) for c in cb.fundamental_cycles) == [3, 3]
        assert cb.parities == ("odd", "odd")

    def test_k4(self):
        assert len(cycle_basis(complete_graph(4))) == 3

    @given(connected_graphs())
    def test_size_and_closure(self, g):
        cb = cycle_basis(g)
        assert len(cb) == g.m - g.n + 1
        for c in cb.fundamental_cycles:
            assert len(set(c)) == len(c) >= 3
            for a, b in zip(c, c[1:] + c[:1]):
                assert g.has_edge(a, b)

    @given(connected_graphs())
    def test_bfs_tree_spans(self, g):
        cb = cycle_basis(g)
        assert len(cb.spanning_tree) == g.n - 1


class TestBipartite:
    def test_small(self, karate):
        assert is_bipartite(cycle_graph(4))[0]
        assert not is_bipartite(cycle_graph(3))[0]
        assert not is_bipartite(karate)[0]

    @given(connected_graphs())
    def test_matches_networkx(self, g):
        ok, colors = is_bipartite(g)
        assert ok == nx.is_bipartite(to_nx(g))
        if ok:
            assert all(colors[u] != colors[v] for u, v in g.edges)


def trace_period(g, max_power=None):
    """gcd of the powers p with tr(B^p) > 0, i.e. closed NB-walk lengths."""
    B = NBOperator(g).dense.astype(object)
    M = B.copy()
    out = 0
    for p in range(1, (max_power or 4 * g.m) + 1):
        if np.trace(M) > 0:
            out = math.gcd(out, p)
        M = M.dot(B)
    return out


class TestPeriod:
    def test_k4(self):
        assert nb_period(complete_graph(4)) == 1

    def test_k33(self):
        assert nb_period(complete_bipartite_graph(3, 3)) == 2

    def test_bowtie_is_three(self):
        # every closed NB-walk on two triangles sharing a node has length 3k
        g = corpus.load("bowtie")
        assert nb_period(g) == 3 == trace_period(g)

    def test_cycle_graph_raises_with_period(self):
        with pytest.raises(CycleGraphError) as info:
            nb_period(corpus.load("paw"))
        assert info.value.period == 3

    def test_tree_raises(self):
        with pytest.raises(GraphError):
            nb_period(path_graph(4))

    @given(md2_graphs(max_n=8, multi_cycle=True))
    def test_matches_trace_oracle(self, g):
        assert nb_period(g) == trace_period(g)
