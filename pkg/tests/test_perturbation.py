import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from nbspec import corpus
from nbspec.graph import CycleGraphError, GraphError, complete_graph, cycle_graph, is_bipartite
from nbspec.linalg import LinAlgFailure, eigvals, match_multisets
from nbspec.nbmatrix import NBOperator, inverse
from nbspec.perturbation import (
    BipartiteHostError,
    Resolvent,
    attach_spectrum_zeros,
    determinant_identity_residual,
    find_lambda_c,
    gershgorin,
    gershgorin_trace,
    make_probe,
    nb_centrality,
    perron,
    sign_changes,
)

from .conftest import md2_graphs


class TestPerron:
    def test_k4_constant(self):
        p = perron(complete_graph(4))
        assert p.value == pytest.approx(2, abs=1e-10)
        assert np.allclose(p.right, p.right[0])
        assert p.residual <= 1e-10

    def test_bowtie_matches_dense(self):
        g = corpus.load("bowtie")
        w = eigvals(NBOperator(g).dense.astype(float))
        real = w[np.abs(w.imag) < 1e-9].real
        assert perron(g).value == pytest.approx(real.max(), abs=1e-8)

    def test_positive_and_binormal(self, karate):
        from nbspec.graph import two_core

        core, _ = two_core(karate)
        p = perron(core)
        assert (p.right > 0).all() and (p.left > 0).all()
        assert p.left @ p.right == pytest.approx(1)
        c = nb_centrality(core, p)
        assert c.shape == (core.n,) and (c > 0).all()

    def test_cycle_graph_rejected(self):
        with pytest.raises(CycleGraphError):
            perron(cycle_graph(5))

    def test_bipartite_rejected(self):
        with pytest.raises(BipartiteHostError):
            perron(corpus.load("k33"))

    def test_needs_md2(self):
        with pytest.raises(GraphError):
            perron(corpus.load("paw"))


class TestResolvent:
    def test_neumann_and_spectral_agree_with_solve(self):
        r = Resolvent(complete_graph(4))
        w = np.zeros(12)
        w[3] = 1
        for t in (2.5, -3.0, 1 + 2.5j):
            x = r.solve(t, w)
            assert np.allclose(r.neumann(t, w), x, atol=1e-10)
            assert np.allclose(r.spectral(t, w), x, atol=1e-10)

    def test_t_zero_is_the_inverse(self):
        g = corpus.load("bowtie")
        w = np.arange(12.0)
        assert np.allclose(Resolvent(g).solve(0, w), inverse(NBOperator(g)) @ w)

    def test_zero_vector(self):
        assert not Resolvent(complete_graph(4)).solve(3.0, np.zeros(12)).any()

    def test_near_eigenvalue_rejected(self):
        with pytest.raises(LinAlgFailure):
            Resolvent(complete_graph(4)).solve(2 + 1e-10, np.ones(12))


class TestY:
    def test_k4_negative(self):
        p = make_probe(complete_graph(4), [0, 1])
        for t in np.linspace(2.001, 40, 25):
            y = p.y(t)
            assert y.y < 0
            assert y.lower <= -y.y <= y.upper

    def test_decays(self):
        p = make_probe(complete_graph(4), [0, 1])
        ys = [p.y(t).y for t in (10.0, 100.0, 1000.0)]
        assert ys[0] < ys[1] < ys[2] < 0
        assert abs(ys[2]) < 1e-2

    def test_d_one(self):
        p = make_probe(complete_graph(4), [2])
        assert not p.blocks.X.any()
        assert p.y(5.0).y == 0
        assert find_lambda_c(p) == p.lam

    def test_domain(self):
        p = make_probe(complete_graph(4), [0, 1])
        with pytest.raises(ValueError):
            p.y(1.5)

    def test_detached_d_gives_only_zeros(self):
        p = make_probe(corpus.load("bowtie"), [1, 3])
        host = eigvals(NBOperator(p.host).dense.astype(float))
        w = attach_spectrum_zeros(p)
        assert match_multisets(w, np.concatenate([host, np.zeros(2 * p.d)]), 1e-8)[0]

    def test_matches_dense_eigenvalues(self):
        p = make_probe(corpus.load("bowtie"), [1, 2])
        t = p.lam + 0.3
        w = np.linalg.eigvals(p.yx_block(t))
        assert p.y(t).y == pytest.approx(w.real.min(), rel=1e-10)


class TestLambdaC:
    def test_k5(self):
        p = make_probe(complete_graph(4), [0, 1, 2, 3])
        assert p.lambda_c == pytest.approx(3, abs=1e-10)
        assert p.lambda_c_direct == pytest.approx(3, abs=1e-8)

    def test_bowtie(self):
        p = make_probe(corpus.load("bowtie"), [1, 2])
        assert p.lambda_c > p.lam
        assert abs(p.lambda_c - p.lambda_c_direct) <= 1e-6
        assert sign_changes(p, 3 * p.lambda_c) == 1

    def test_rejections(self):
        with pytest.raises(CycleGraphError):
            make_probe(cycle_graph(5), [0, 2])
        with pytest.raises(GraphError):
            make_probe(complete_graph(4), [])
        with pytest.raises(GraphError):
            make_probe(complete_graph(4), [9])

    @given(md2_graphs(max_n=10, multi_cycle=True), st.data())
    def test_random_probes(self, g, data):
        assume(not is_bipartite(g)[0])
        nbrs = data.draw(st.lists(st.integers(0, g.n - 1), min_size=2, max_size=g.n, unique=True))
        p = make_probe(g, nbrs)
        assert p.lambda_c > p.lam
        assert abs(p.lambda_c - p.lambda_c_direct) <= 1e-6
        assert p.alpha11 >= 0
        mu = np.linalg.eigvals(p.yx_block(p.lambda_c))
        assert np.min(np.abs(mu + p.lambda_c ** 2)) <= 1e-6
        assert sign_changes(p, 4 * p.lambda_c, samples=60) == 1

    def test_determinant_identity(self):
        p = make_probe(corpus.load("bowtie"), [1, 3])
        for t in (0.3 + 2.1j, -2.5, 3.7 + 0.2j):
            assert determinant_identity_residual(p, t) <= 1e-8


class TestGershgorin:
    def test_trace(self):
        p = make_probe(complete_graph(4), [0, 1])
        tr = gershgorin_trace(p)
        assert all(tr.y_in_union)
        assert tr.near_isolated
        assert tr.far_ok
        rows = list(tr.csv_rows())
        assert len(rows) == len(tr.disks) * 12
        assert rows[0][1] == 0

    def test_perron_disk_holds_y_near_lambda(self):
        p = make_probe(corpus.load("bowtie"), [1, 3])
        t = p.lam + 1e-5
        ds = gershgorin(p, t)
        y = p.y(t).y
        assert abs(y - ds.centers[0]) <= ds.radii[0]
        others = np.abs(y - ds.centers[1:]) <= ds.radii[1:]
        assert not others.any()

    def test_first_center_is_alpha11_over_gap(self):
        p = make_probe(complete_graph(4), [0, 1])
        t = p.lam + 0.5
        ds = gershgorin(p, t)
        assert ds.centers[0] == pytest.approx(p.alpha11 / (p.lam - t))
