import numpy as np
import pytest

from fermiwalk.walk import (WalkError, WalkSpec, build_cycle_walk,
                            build_regular_graph_walk, cycle_index,
                            cycle_star_vector, hadamard_coin, is_cyclic,
                            random_coin, rotation_coin)


def k4_coloring():
    # proper 3-edge-colouring of the complete graph on 4 vertices
    return {
        (0, 0): 1, (1, 0): 0, (2, 0): 3, (3, 0): 2,
        (0, 1): 2, (2, 1): 0, (1, 1): 3, (3, 1): 1,
        (0, 2): 3, (3, 2): 0, (1, 2): 2, (2, 2): 1,
    }


def test_identity_coins_transport_spin_up():
    n = 3
    W = build_cycle_walk(n, [np.eye(2)] * n)
    for nu in range(n):
        src = np.zeros(2 * n, dtype=complex)
        src[cycle_index(n, nu, +1)] = 1.0
        expected = np.zeros(2 * n, dtype=complex)
        expected[cycle_index(n, nu + 1, +1)] = 1.0
        assert np.allclose(W @ src, expected)


@pytest.mark.parametrize("n", [2, 3, 4, 6])
def test_cycle_walk_unitary(n):
    W = build_cycle_walk(n, [hadamard_coin()] * n)
    assert np.linalg.norm(W.conj().T @ W - np.eye(2 * n)) <= 1e-12
    assert np.linalg.norm(W @ W.conj().T - np.eye(2 * n)) <= 1e-12


def test_rotation_coin_matrix_element():
    # first step of the spin-up walker through the coin: amplitude cos(theta)
    W = build_cycle_walk(4, [rotation_coin(np.pi / 4)] * 4)
    src = np.zeros(8, dtype=complex)
    src[cycle_index(4, 0, +1)] = 1.0
    dst = np.zeros(8, dtype=complex)
    dst[cycle_index(4, 1, +1)] = 1.0
    assert np.vdot(dst, W @ src) == pytest.approx(np.cos(np.pi / 4))


def test_non_unitary_coin_names_the_culprit():
    coins = [np.eye(2)] * 4
    coins[2] = np.array([[1.0, 0.0], [0.0, 2.0]])
    with pytest.raises(WalkError, match="coin 2"):
        build_cycle_walk(4, coins)


def test_k4_identity_coins_hop_is_involutive():
    W1 = build_regular_graph_walk(4, 3, k4_coloring(), [np.eye(3)] * 4)
    assert np.allclose(W1 @ W1, np.eye(12))


def test_k4_with_fourier_coins_unitary():
    omega = np.exp(2j * np.pi / 3)
    fourier = np.array([[omega ** (j * k) for k in range(3)] for j in range(3)]) / np.sqrt(3)
    W = build_regular_graph_walk(4, 3, k4_coloring(), [fourier] * 4)
    assert np.linalg.norm(W.conj().T @ W - np.eye(12)) <= 1e-12


def test_coloring_with_fixed_point_rejected():
    coloring = k4_coloring()
    coloring[(0, 0)] = 0
    with pytest.raises(WalkError, match="fixed point"):
        build_regular_graph_walk(4, 3, coloring, [np.eye(3)] * 4)


def test_odd_vertex_count_rejected():
    with pytest.raises(WalkError, match="even"):
        build_regular_graph_walk(3, 2, {}, [np.eye(2)] * 3)


def test_identity_walk_is_never_cyclic():
    ok, rank = is_cyclic(np.eye(4), np.array([1.0, 0, 0, 0]))
    assert (ok, rank) == (False, 1)


def test_identity_coins_not_cyclic():
    n = 4
    W = build_cycle_walk(n, [np.eye(2)] * n)
    ok, rank = is_cyclic(W, cycle_star_vector(n))
    assert not ok and rank < 2 * n


def test_equal_coins_break_cyclicity_on_larger_cycles():
    # translation-invariant coins give each +-k momentum pair identical
    # eigenvalues, so the spectrum is degenerate and no vector is cyclic
    W = build_cycle_walk(4, [hadamard_coin()] * 4)
    evals = np.linalg.eigvals(W)
    gaps = np.abs(evals[:, None] - evals[None, :]) + np.eye(8)
    assert gaps.min() < 1e-12
    ok, rank = is_cyclic(W, cycle_star_vector(4))
    assert (ok, rank) == (False, 6)


def test_two_cycle_hadamard_is_cyclic():
    W = build_cycle_walk(2, [hadamard_coin()] * 2)
    assert is_cyclic(W, cycle_star_vector(2)) == (True, 4)


def test_distinct_rotation_coins_are_cyclic():
    thetas = [0.3, 0.8, 1.2, 0.5]
    W = build_cycle_walk(4, [rotation_coin(t) for t in thetas])
    assert is_cyclic(W, cycle_star_vector(4)) == (True, 8)


def test_cyclicity_invariant_under_phases():
    rng = np.random.default_rng(11)
    W = build_cycle_walk(4, [random_coin(2, rng) for _ in range(4)])
    psi = cycle_star_vector(4)
    ref = is_cyclic(W, psi)
    assert is_cyclic(np.exp(0.7j) * W, psi) == ref
    assert is_cyclic(W, np.exp(-1.3j) * psi) == ref


def test_homogeneous_walk_commutes_with_shift():
    n = 6
    W = build_cycle_walk(n, [rotation_coin(0.4)] * n)
    shift = np.zeros((n, n))
    for nu in range(n):
        shift[(nu + 1) % n, nu] = 1.0
    R = np.kron(shift, np.eye(2))
    assert np.linalg.norm(R @ W - W @ R) <= 1e-13


def test_random_coins_unitary_walks():
    rng = np.random.default_rng(0)
    for n in (2, 4, 6):
        W = build_cycle_walk(n, [random_coin(2, rng) for _ in range(n)])
        assert np.linalg.norm(W.conj().T @ W - np.eye(2 * n)) <= 1e-12


def test_walk_spec_roundtrip():
    spec = WalkSpec(kind="cycle", n=4, coins=[hadamard_coin()] * 4)
    W, psi = spec.build()
    assert W.shape == (8, 8)
    assert np.allclose(psi, cycle_star_vector(4))
    assert spec.dimension == 8

    raw = WalkSpec(kind="raw", matrix=np.eye(2), star_vector=np.array([0.0, 1.0]))
    W2, psi2 = raw.build()
    assert np.allclose(W2, np.eye(2)) and psi2[1] == 1.0

    with pytest.raises(WalkError, match="star_vector"):
        WalkSpec(kind="raw", matrix=np.eye(2)).build()
