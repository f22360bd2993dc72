import numpy as np
import pytest
from hypothesis import given
from scipy.linalg import null_space

from cutsync.errors import TrivialCycleSpace, UnsupportedNorm
from cutsync.graph import build_graph, complete_graph, path_graph, random_tree, ring_graph, star_graph
from cutsync.projection import (
    cutset_projection,
    effective_resistance_check,
    induced_norm,
    minimal_angle_check,
    parse_p,
)
from strategies import graph_and_vector, graphs


def ring_closed_form(n):
    # sign +1 where the canonical orientation agrees with the cycle 0 -> 1 -> ... -> n-1 -> 0
    g = ring_graph(n)
    s = np.array([1.0 if j == i + 1 else -1.0 for i, j, _ in g.edges])
    return np.eye(n) - np.outer(s, s) / n


def test_tree_is_identity():
    rng = np.random.default_rng(3)
    for n in range(2, 11):
        cp = cutset_projection(random_tree(n, rng))
        assert np.max(np.abs(cp.P - np.eye(n - 1))) < 1e-10
        assert cp.norm(np.inf) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n", range(3, 11))
def test_complete_closed_form(n):
    g = complete_graph(n)
    cp = cutset_projection(g)
    assert np.max(np.abs(cp.P - g.B.T @ g.B / n)) < 1e-10
    assert abs(cp.norm(np.inf) - 2 * (n - 1) / n) < 1e-12


@pytest.mark.parametrize("n", range(3, 11))
def test_ring_closed_form(n):
    cp = cutset_projection(ring_graph(n))
    assert np.max(np.abs(cp.P - ring_closed_form(n))) < 1e-10
    assert abs(cp.norm(np.inf) - 2 * (n - 1) / n) < 1e-12
    assert cp.norm(2) == pytest.approx(1.0, abs=1e-12)


def test_triangle_inf_norm():
    assert cutset_projection(complete_graph(3)).norm("inf") == pytest.approx(4 / 3, abs=1e-12)


def test_parse_p():
    assert parse_p("inf") == np.inf
    assert parse_p(2) == 2
    with pytest.raises(UnsupportedNorm):
        parse_p(3)


def test_induced_norm_examples():
    M = np.array([[1.0, -2.0], [3.0, 4.0]])
    assert induced_norm(M, 1) == 6.0
    assert induced_norm(M, np.inf) == 7.0
    assert induced_norm(M, 2) == pytest.approx(np.linalg.svd(M, compute_uv=False)[0])


@pytest.mark.parametrize("g, tol", [
    (path_graph(2), 1e-12),
    (complete_graph(4), 1e-9),
    (build_graph(6, [(0, 1, 1.3), (1, 2, 0.7), (2, 3, 2.1), (3, 4, 1.0), (4, 5, 0.6),
                     (0, 5, 1.9), (1, 4, 2.5), (0, 3, 0.8)]), 1e-9),
])
def test_effective_resistance_identity(g, tol):
    assert effective_resistance_check(g) < tol


def test_minimal_angle_examples():
    angle, dev = minimal_angle_check(ring_graph(6))
    assert angle == pytest.approx(np.pi / 2, abs=1e-9) and dev < 1e-9
    _, dev = minimal_angle_check(build_graph(3, [(0, 1, 1), (1, 2, 1), (0, 2, 10)]))
    assert dev < 1e-9
    with pytest.raises(TrivialCycleSpace):
        minimal_angle_check(star_graph(4))


@given(graphs(max_n=12))
def test_idempotent_with_spectrum(g):
    cp = cutset_projection(g)
    P = cp.P
    assert np.linalg.norm(P @ P - P, 2) < 1e-9
    ev = np.linalg.eigvals(P)
    assert np.sum(np.abs(ev) < 1e-6) == g.m - g.n + 1
    assert np.sum(np.abs(ev - 1) < 1e-6) == g.n - 1
    assert all(v >= 1 - 1e-12 for v in cp.norms.values())


@given(graphs(max_n=10, min_n=3))
def test_norms_orientation_invariant(g):
    base = cutset_projection(g)
    k = len(g.edges) // 2
    B = g.B.copy()
    B[:, k] *= -1
    Pf = B.T @ g.laplacian.Ldag @ (B * g.weights)
    for p in (1, 2, np.inf):
        assert induced_norm(Pf, p) == pytest.approx(base.norm(p), abs=1e-10)


@given(graph_and_vector(max_n=10))
def test_range_and_kernel_action(gv):
    g, u = gv
    P = cutset_projection(g).P
    y = g.B.T @ u
    assert np.allclose(P @ y, y, atol=1e-9)
    K = null_space(g.B * g.weights)
    if K.size:
        k = K @ np.random.default_rng(0).normal(size=K.shape[1])
        assert np.allclose(P @ k, 0, atol=1e-9)


@given(graphs(min_n=3, max_n=9))
def test_sine_of_minimal_angle(g):
    if g.is_tree:
        return
    _, dev = minimal_angle_check(g)
    assert dev < 1e-8
