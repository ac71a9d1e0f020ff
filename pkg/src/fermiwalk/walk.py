"""One-particle walk unitaries on finite graphs.

Two constructions are provided: the coined walk on a cycle of ``n`` vertices
(internal space C^2, spanned by the spin states ``e_{-1}, e_{+1}``) and the
coined walk on a class-1 regular graph (internal space C^r indexed by edge
colours).  Both are products ``W = W1 @ W2`` where the coin ``W2`` acts first
and the conditional hop ``W1`` second.

Basis convention (fixed so matrix dumps are reproducible): position-major,
internal-minor.  For cycles the flat index of ``delta_nu (x) e_tau`` is
``2*nu + (0 if tau == -1 else 1)``; for regular graphs it is ``r*nu + a``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "WalkError",
    "WalkSpec",
    "hadamard_coin",
    "rotation_coin",
    "random_coin",
    "build_cycle_walk",
    "build_regular_graph_walk",
    "cycle_index",
    "cycle_star_vector",
    "is_cyclic",
    "check_unitary",
]

UNITARITY_TOL = 1e-12


class WalkError(ValueError):
    """Invalid walk data (non-unitary coin, improper colouring, ...)."""


def hadamard_coin() -> np.ndarray:
    """The 2x2 Hadamard coin (1/sqrt2) [[1, 1], [-1, 1]]."""
    return np.array([[1.0, 1.0], [-1.0, 1.0]], dtype=complex) / np.sqrt(2.0)


def rotation_coin(theta: float) -> np.ndarray:
    """Real rotation coin [[cos t, -sin t], [sin t, cos t]] in the (e_-1, e_+1) basis."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def random_coin(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random ``dim x dim`` unitary (QR of a complex Ginibre matrix)."""
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def check_unitary(mat: np.ndarray, tol: float = UNITARITY_TOL, what: str = "matrix") -> None:
    """Raise :class:`WalkError` unless ``mat^* mat = 1`` within ``tol``."""
    mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise WalkError(f"{what} must be square, got shape {mat.shape}")
    dev = np.linalg.norm(mat.conj().T @ mat - np.eye(mat.shape[0]))
    if dev > tol:
        raise WalkError(f"{what} is not unitary: ||C*C - 1|| = {dev:.3e} > {tol:.1e}")


def cycle_index(n: int, nu: int, tau: int) -> int:
    """Flat index of ``delta_nu (x) e_tau`` on the cycle, tau in {-1, +1}."""
    if tau not in (-1, +1):
        raise WalkError(f"spin must be -1 or +1, got {tau}")
    return 2 * (nu % n) + (0 if tau == -1 else 1)


def cycle_star_vector(n: int, nu: int = 0, tau: int = -1) -> np.ndarray:
    """The distinguished unit vector ``delta_nu (x) e_tau`` (default ``delta_0 (x) e_{-1}``)."""
    psi = np.zeros(2 * n, dtype=complex)
    psi[cycle_index(n, nu, tau)] = 1.0
    return psi


def build_cycle_walk(n: int, coins) -> np.ndarray:
    """One-step unitary of the coined walk on a cycle of ``n`` vertices.

    ``W = W1 @ W2`` on C^n (x) C^2 where ``W2`` applies the coin ``coins[nu]``
    at vertex ``nu`` and ``W1`` moves spin -1 one vertex down and spin +1 one
    vertex up (indices mod ``n``).

    Parameters
    ----------
    n : int
        Number of vertices, ``n >= 2``.
    coins : sequence of (2, 2) arrays
        One unitary coin per vertex.

    Returns
    -------
    (2n, 2n) complex ndarray
    """
    if n < 2:
        raise WalkError(f"cycle needs n >= 2 vertices, got {n}")
    coins = [np.asarray(c, dtype=complex) for c in coins]
    if len(coins) != n:
        raise WalkError(f"expected {n} coins, got {len(coins)}")
    for nu, coin in enumerate(coins):
        if coin.shape != (2, 2):
            raise WalkError(f"coin {nu} must be 2x2, got shape {coin.shape}")
        check_unitary(coin, what=f"coin {nu}")

    d = 2 * n
    w2 = np.zeros((d, d), dtype=complex)
    for nu, coin in enumerate(coins):
        w2[2 * nu:2 * nu + 2, 2 * nu:2 * nu + 2] = coin
    w1 = np.zeros((d, d), dtype=complex)
    for nu in range(n):
        for tau in (-1, +1):
            w1[cycle_index(n, nu + tau, tau), cycle_index(n, nu, tau)] = 1.0
    return w1 @ w2


def build_regular_graph_walk(n: int, r: int, edge_coloring, coins) -> np.ndarray:
    """One-step unitary of the coined walk on a class-1 ``r``-regular graph.

    ``edge_coloring`` maps ``(nu, a)`` to the vertex at the other end of the
    colour-``a`` edge at ``nu``; for each colour this map must be an involution
    without fixed points (a perfect matching), which forces ``n`` to be even.

    Parameters
    ----------
    n, r : int
        Vertex count and degree.
    edge_coloring : mapping or callable
        ``edge_coloring[(nu, a)]`` or ``edge_coloring(nu, a)`` giving nu'.
    coins : sequence of (r, r) arrays
        One unitary coin per vertex.

    Returns
    -------
    (n*r, n*r) complex ndarray
    """
    if n % 2 != 0:
        raise WalkError(f"a proper {r}-edge-colouring forces n to be even, got n = {n}")
    if callable(edge_coloring):
        target = edge_coloring
    else:
        target = lambda nu, a: edge_coloring[(nu, a)]

    for a in range(r):
        for nu in range(n):
            nup = target(nu, a)
            if not 0 <= nup < n:
                raise WalkError(f"colour {a} at vertex {nu} points outside the graph: {nup}")
            if nup == nu:
                raise WalkError(f"colour {a} has a fixed point at vertex {nu}")
            if target(nup, a) != nu:
                raise WalkError(f"colour {a} is not an involution at vertex {nu}")

    coins = [np.asarray(c, dtype=complex) for c in coins]
    if len(coins) != n:
        raise WalkError(f"expected {n} coins, got {len(coins)}")
    for nu, coin in enumerate(coins):
        if coin.shape != (r, r):
            raise WalkError(f"coin {nu} must be {r}x{r}, got shape {coin.shape}")
        check_unitary(coin, what=f"coin {nu}")

    d = n * r
    w2 = np.zeros((d, d), dtype=complex)
    for nu, coin in enumerate(coins):
        w2[r * nu:r * nu + r, r * nu:r * nu + r] = coin
    w1 = np.zeros((d, d), dtype=complex)
    for nu in range(n):
        for a in range(r):
            w1[r * target(nu, a) + a, r * nu + a] = 1.0
    return w1 @ w2


def is_cyclic(W: np.ndarray, psi: np.ndarray, tol: float = 1e-10) -> tuple[bool, int]:
    """Test whether ``psi`` is cyclic for ``W`` by the rank of the Krylov matrix.

    Builds ``[psi, W psi, ..., W^{d-1} psi]`` and counts singular values above
    ``tol`` times the largest one.  Returns ``(rank == d, rank)``.
    """
    W = np.asarray(W, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    d = W.shape[0]
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > 1e-8:
        raise WalkError(f"psi must be a unit vector, got ||psi|| = {nrm:.6f}")
    krylov = np.empty((d, d), dtype=complex)
    vec = psi
    for k in range(d):
        krylov[:, k] = vec
        vec = W @ vec
    svals = np.linalg.svd(krylov, compute_uv=False)
    rank = int(np.count_nonzero(svals > tol * svals[0]))
    return rank == d, rank


@dataclass
class WalkSpec:
    """A declarative walk description, as read from an experiment config.

    ``kind`` is one of ``"cycle"``, ``"regular_graph"`` or ``"raw"``.  The
    star vector defaults to ``delta_0 (x) e_{-1}`` for cycles and to the first
    basis vector otherwise; an explicit ``star_vector`` overrides it.
    """

    kind: str
    n: int | None = None
    r: int | None = None
    coins: list = field(default_factory=list)
    edge_coloring: dict | None = None
    matrix: np.ndarray | None = None
    star_vector: np.ndarray | None = None

    def build(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(W, psi_star)``, validating unitarity and normalisation."""
        if self.kind == "cycle":
            W = build_cycle_walk(self.n, self.coins)
            psi = cycle_star_vector(self.n) if self.star_vector is None else np.asarray(self.star_vector, dtype=complex)
        elif self.kind == "regular_graph":
            W = build_regular_graph_walk(self.n, self.r, self.edge_coloring, self.coins)
            psi = np.zeros(self.n * self.r, dtype=complex)
            psi[0] = 1.0
            if self.star_vector is not None:
                psi = np.asarray(self.star_vector, dtype=complex)
        elif self.kind == "raw":
            W = np.asarray(self.matrix, dtype=complex)
            check_unitary(W, what="raw walk matrix")
            if self.star_vector is None:
                raise WalkError("raw walks need an explicit star_vector")
            psi = np.asarray(self.star_vector, dtype=complex)
        else:
            raise WalkError(f"unknown walk kind {self.kind!r}")
        if psi.shape != (W.shape[0],):
            raise WalkError(f"star vector has length {psi.shape}, expected {W.shape[0]}")
        nrm = np.linalg.norm(psi)
        if abs(nrm - 1.0) > 1e-10:
            raise WalkError(f"star vector must be normalised, got ||psi*|| = {nrm:.6f}")
        return W, psi

    @property
    def dimension(self) -> int:
        if self.kind == "cycle":
            return 2 * self.n
        if self.kind == "regular_graph":
            return self.n * self.r
        return self.matrix.shape[0]
