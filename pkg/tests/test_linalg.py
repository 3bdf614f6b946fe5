import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nbspec import corpus
from nbspec.graph import complete_graph, cycle_graph
from nbspec.linalg import (
    Determinant,
    LinAlgFailure,
    cluster_eigenvalues,
    determinant,
    eig,
    eigvals,
    match_multisets,
    null_space,
    numerical_rank,
    relative_difference,
    solve,
)
from nbspec.nbmatrix import NBOperator

from .conftest import connected_graphs


def dense(g):
    return NBOperator(g).dense.astype(float)


class TestEig:
    def test_identity(self):
        e = eig(np.eye(4))
        assert np.allclose(e.eigenvalues, 1)

    def test_c5(self):
        e = eig(dense(cycle_graph(5)))
        roots = np.exp(2j * np.pi * np.arange(5) / 5)
        assert match_multisets(e.eigenvalues, np.repeat(roots, 2), 1e-8)[0]
        assert e.residuals.max() <= 1e-10

    def test_k4(self):
        w = eigvals(dense(complete_graph(4)))
        z = (-1 + 1j * math.sqrt(7)) / 2
        expected = [2, 1, 1, 1, -1, -1] + [z] * 3 + [z.conjugate()] * 3
        assert match_multisets(w, expected, 1e-6)[0]

    def test_sorted_by_modulus(self, karate):
        w = eigvals(dense(karate))
        mods = np.round(np.abs(w), 9)
        assert (np.diff(mods) <= 0).all()

    def test_left_vectors_binormal(self):
        e = eig(dense(complete_graph(4)), left=True)
        assert np.allclose(e.left @ e.right, np.eye(12), atol=1e-10)

    def test_size_cap(self):
        with pytest.raises(LinAlgFailure):
            eig(np.eye(5), max_dim=4)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            eig(np.ones((2, 3)))


class TestRank:
    def test_zero_matrix(self):
        r = numerical_rank(np.zeros((4, 4)))
        assert (r.rank, r.nullity) == (0, 4)

    def test_karate_plus_minus_one(self, karate):
        B = dense(karate)
        eye = np.eye(B.shape[0])
        assert numerical_rank(B - eye).nullity == 45
        assert numerical_rank(B + eye).nullity == 44

    def test_null_space_bound(self):
        B = dense(cycle_graph(4))
        basis, bound = null_space(B - np.eye(8), 2)
        assert basis.shape == (8, 2)
        assert np.allclose(basis.conj().T @ basis, np.eye(2))
        assert np.linalg.norm((B - np.eye(8)) @ basis) <= 1e-10 + 2 * bound

    @given(st.integers(1, 6), st.integers(0, 5), st.integers(0, 2**32 - 1))
    def test_rank_of_product(self, r, extra, seed):
        rng = np.random.default_rng(seed)
        n = r + extra
        A = rng.normal(size=(n, r)) @ rng.normal(size=(r, n))
        assert numerical_rank(A).rank == r


class TestSolveDet:
    def test_identity_solve(self):
        b = np.arange(4.0)
        assert np.allclose(solve(np.eye(4), b), b)

    def test_singular_solve(self):
        with pytest.raises(LinAlgFailure):
            solve(np.ones((3, 3)), np.ones(3))

    def test_c3_characteristic_value(self):
        B = dense(cycle_graph(3))
        d = determinant(B - 2 * np.eye(6))
        assert abs(d.value - 49) < 1e-10

    def test_singular_det(self):
        assert determinant(np.zeros((3, 3))).is_zero

    def test_no_overflow(self):
        d = determinant(10.0 * np.eye(400))
        assert d.exponent + math.log2(abs(d.mantissa)) == pytest.approx(400 * math.log2(10))

    @given(connected_graphs(max_n=8), st.integers(0, 2**32 - 1))
    def test_matches_eigenvalue_product(self, g, seed):
        rng = np.random.default_rng(seed)
        t = complex(rng.normal(), rng.normal())
        B = dense(g)
        w = eigvals(B)
        d = determinant(B - t * np.eye(B.shape[0]))
        prod = Determinant(1 + 0j, 0)
        for z in w - t:
            prod = prod * Determinant.of_scalar(z)
        assert relative_difference(d, prod) <= 1e-6

    def test_relative_difference(self):
        a = Determinant.of_scalar(3.0)
        assert relative_difference(a, a) == 0
        assert relative_difference(a, Determinant.of_scalar(0)) == 1


class TestClustering:
    def test_tight_pair(self):
        cl = cluster_eigenvalues([1.0, 1.0 + 1e-12], delta=1e-9)
        assert len(cl) == 1 and cl[0].count == 2

    def test_c5(self):
        cl = cluster_eigenvalues(eigvals(dense(cycle_graph(5))))
        assert sorted(c.count for c in cl) == [2] * 5

    def test_k4_outer(self):
        cl = cluster_eigenvalues(eigvals(dense(complete_graph(4))))
        z = (-1 + 1j * math.sqrt(7)) / 2
        (hit,) = [c for c in cl if abs(c.centroid - z) < 1e-6]
        assert hit.count == 3

    def test_chaining(self):
        cl = cluster_eigenvalues([0, 0.6, 1.2, 5], delta=0.7)
        assert sorted(c.count for c in cl) == [1, 3]

    @given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False), max_size=20))
    def test_partition(self, values):
        cl = cluster_eigenvalues(values)
        members = sorted(i for c in cl for i in c.members)
        assert members == list(range(len(values)))


class TestMatch:
    def test_permutation(self):
        assert match_multisets([1, 2, 3j], [3j, 1, 2], 1e-12) == (True, 0.0)

    def test_size_mismatch(self):
        assert not match_multisets([1], [1, 1], 1.0)[0]

    def test_total_distance_pairing(self):
        ok, worst = match_multisets([0, 1], [1.1, 0.1], 0.2)
        assert ok and worst == pytest.approx(0.1)


def test_corpus_eigen_residuals(graphs):
    for name, g in graphs.items():
        e = eig(dense(g))
        assert e.residuals.max() <= 1e-8, name
