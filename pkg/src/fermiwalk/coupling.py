"""Sample-reservoir coupling: the contraction M, the joint step, the Moller block.

The exchange of particles between the sample state ``psi*`` and the reservoir
state ``delta_0 (x) v`` is governed by the rank-one map
``iota: psi -> delta_0 (x) v <psi*, psi>`` with projectors ``P = iota* iota``
(on the sample) and ``Q = iota iota*`` (on the reservoir).  The effective
one-particle sample map after one step is the contraction

    M = W (1 + (cos(alpha) - 1) P),

whose spectral radius drops below 1 exactly when ``psi*`` is cyclic for ``W``
and ``alpha`` is not a multiple of pi.  All asymptotic series downstream are
truncated through the certified bound ``||M^t|| <= C q^t``.

The joint one-particle space used by the simulators is a site window of the
reservoir followed by the sample; see :class:`Window` for the layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .environment import EnvironmentSpec
from .walk import check_unitary

__all__ = [
    "CouplingError",
    "CouplingSpec",
    "ContractionM",
    "Window",
    "build_contraction",
    "spectral_radius",
    "decay_certificate",
    "one_step_joint_operator",
    "moller_sample_block",
]

SIN_ALPHA_MIN = 1e-8


class CouplingError(ValueError):
    """Invalid coupling data or a violated spectral precondition."""


@dataclass
class CouplingSpec:
    """Coupling constant ``alpha``, reservoir unit vector ``v``, sample vector ``psi*``."""

    alpha: float
    v: np.ndarray
    psi_star: np.ndarray | None = None

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=complex).reshape(-1)
        nrm = np.linalg.norm(self.v)
        if abs(nrm - 1.0) > 1e-10:
            raise CouplingError(f"v must be a unit vector, got ||v|| = {nrm:.8f}")
        self.alpha = float(self.alpha)
        if self.psi_star is not None:
            self.psi_star = np.asarray(self.psi_star, dtype=complex).reshape(-1)
            if abs(np.linalg.norm(self.psi_star) - 1.0) > 1e-10:
                raise CouplingError("psi* must be a unit vector")

    def star(self) -> np.ndarray:
        if self.psi_star is None:
            raise CouplingError("this operation needs the sample star vector psi*")
        return self.psi_star

    @property
    def effectively_coupled(self) -> bool:
        """Whether ``|sin alpha|`` clears the threshold needed for asymptotics."""
        return abs(np.sin(self.alpha)) > SIN_ALPHA_MIN

    def require_coupled(self):
        if not self.effectively_coupled:
            raise CouplingError(
                f"alpha = {self.alpha} is numerically a multiple of pi "
                f"(|sin alpha| <= {SIN_ALPHA_MIN:g}); asymptotic formulas refused")

    def weights(self, env: EnvironmentSpec) -> np.ndarray:
        w = env.weights(self.v)
        if abs(w.sum() - 1.0) > 1e-12:
            raise CouplingError(f"sector weights sum to {w.sum()}, expected 1")
        return w


@dataclass
class ContractionM:
    """``M = W (1 + (cos alpha - 1) P)`` plus its decay certificate.

    The certificate ``(t0, C, q)`` guarantees ``||M^t|| <= C q^t`` for all
    ``t``; it is fitted on first use (the fit scans matrix powers up to
    ``4 d``) and cached, immutable afterwards.
    """

    matrix: np.ndarray
    W: np.ndarray
    psi_star: np.ndarray
    alpha: float
    spectral_radius: float = field(init=False)
    _certificate: tuple | None = field(init=False, default=None, repr=False)

    def __post_init__(self):
        self.spectral_radius = spectral_radius(self.matrix)

    def _fit(self) -> tuple:
        if self._certificate is None:
            self._certificate = decay_certificate(self.matrix, self.spectral_radius)
        return self._certificate

    @property
    def decay_C(self) -> float:
        return self._fit()[0]

    @property
    def decay_q(self) -> float:
        return self._fit()[1]

    @property
    def decay_t0(self) -> int:
        return self._fit()[2]

    def power_norm_bound(self, t: int) -> float:
        return self.decay_C * self.decay_q ** t

    def truncation_horizon(self, tol: float = 1e-12, cap: int = 200_000) -> int:
        """Smallest ``T`` with ``C q^T <= tol``."""
        if self.spectral_radius >= 1.0 - 1e-9:
            raise CouplingError(
                f"spr(M) = {self.spectral_radius:.6f} is too close to 1: series truncation "
                "impossible (is psi* cyclic and alpha not a multiple of pi?)")
        T = int(np.ceil((np.log(tol) - np.log(self.decay_C)) / np.log(self.decay_q)))
        return max(1, min(T, cap))

    def require_contractive(self):
        if self.spectral_radius >= 1.0 - 1e-12:
            raise CouplingError(
                f"spr(M) = {self.spectral_radius:.12f} is not < 1; asymptotic "
                "formulas need a cyclic psi* and alpha not a multiple of pi")


def build_contraction(W: np.ndarray, psi_star: np.ndarray, alpha: float) -> ContractionM:
    """Assemble ``M = W (1 + (cos alpha - 1) P)`` with ``P`` projecting on ``psi*``."""
    W = np.asarray(W, dtype=complex)
    psi_star = np.asarray(psi_star, dtype=complex).reshape(-1)
    check_unitary(W, what="walk unitary")
    if abs(np.linalg.norm(psi_star) - 1.0) > 1e-10:
        raise CouplingError("psi* must be a unit vector")
    P = np.outer(psi_star, psi_star.conj())
    M = W @ (np.eye(W.shape[0]) + (np.cos(alpha) - 1.0) * P)
    return ContractionM(M, W, psi_star, float(alpha))


def spectral_radius(M: np.ndarray) -> float:
    """Largest eigenvalue modulus, via a dense eigensolve."""
    return float(np.max(np.abs(np.linalg.eigvals(np.asarray(M, dtype=complex)))))


def decay_certificate(M: np.ndarray, spr: float | None = None,
                      margin: float = 1e-6) -> tuple[float, float, int]:
    """Fit ``(C, q, t0)`` with ``||M^t|| <= C q^t`` for all t, ``q = spr(M) + margin``.

    ``C`` is the maximum of ``||M^t|| / q^t`` over ``t <= t0 = 4 d``; beyond
    ``t0`` the geometric envelope dominates because ``q`` exceeds the spectral
    radius.
    """
    M = np.asarray(M, dtype=complex)
    if spr is None:
        spr = spectral_radius(M)
    q = spr + margin
    t0 = 4 * M.shape[0]
    C = 1.0
    power = np.eye(M.shape[0], dtype=complex)
    for t in range(1, t0 + 1):
        power = power @ M
        C = max(C, np.linalg.norm(power, 2) / q ** t)
    return float(C), float(q), t0


@dataclass(frozen=True)
class Window:
    """Reservoir site window ``a..b`` (inclusive) with ``m`` internal modes per site.

    Joint one-particle layout: reservoir modes first (site-major, internal
    standard basis), then the ``d`` sample modes.  Flat reservoir index of
    ``delta_k (x) e_j`` is ``(k - a) * m + j``.
    """

    a: int
    b: int
    m: int

    def __post_init__(self):
        if self.b < self.a:
            raise CouplingError(f"empty window [{self.a}, {self.b}]")

    @property
    def n_sites(self) -> int:
        return self.b - self.a + 1

    @property
    def env_dim(self) -> int:
        return self.n_sites * self.m

    def joint_dim(self, d: int) -> int:
        return self.env_dim + d

    def site_offset(self, k: int) -> int:
        if not self.a <= k <= self.b:
            raise CouplingError(f"site {k} outside window [{self.a}, {self.b}]")
        return (k - self.a) * self.m

    def env_vector(self, k: int, w: np.ndarray) -> np.ndarray:
        """Reservoir-space vector ``delta_k (x) w`` on the window."""
        out = np.zeros(self.env_dim, dtype=complex)
        off = self.site_offset(k)
        out[off:off + self.m] = np.asarray(w, dtype=complex)
        return out

    def joint_env_vector(self, k: int, w: np.ndarray, d: int) -> np.ndarray:
        out = np.zeros(self.joint_dim(d), dtype=complex)
        off = self.site_offset(k)
        out[off:off + self.m] = np.asarray(w, dtype=complex)
        return out

    def joint_sample_vector(self, psi: np.ndarray) -> np.ndarray:
        psi = np.asarray(psi, dtype=complex)
        out = np.zeros(self.env_dim + psi.shape[0], dtype=complex)
        out[self.env_dim:] = psi
        return out

    def require_zero_interior(self):
        if not self.a < 0 < self.b:
            raise CouplingError(
                f"window [{self.a}, {self.b}] must contain site 0 strictly in its interior")

    @classmethod
    def auto(cls, steps: int, max_degree: int, m: int, symmetric: bool = False) -> "Window":
        """Window sized so the truncation stays invisible for ``steps`` steps.

        The incoming vacuum front moves one site per step, so the right
        extent is ``steps + 2 L_max + 4``.  The left edge only absorbs
        outgoing radiation, which never acts back on the sample (the shift is
        one-way), so a short left margin suffices; ``symmetric=True`` recovers
        the centred window of total length ``2 steps + 4 L_max + 8``.
        """
        right = steps + 2 * max_degree + 4
        left = right if symmetric else max_degree + 2
        return cls(-left, right, m)


def shift_matrix(n_sites: int, periodic: bool) -> sp.csr_matrix:
    """The site shift ``delta_k -> delta_{k-1}`` on the window (wrap if periodic)."""
    rows = np.arange(n_sites - 1)
    cols = rows + 1
    data = np.ones(n_sites - 1)
    if periodic:
        rows = np.concatenate([rows, [n_sites - 1]])
        cols = np.concatenate([cols, [0]])
        data = np.ones(n_sites)
    return sp.csr_matrix((data, (rows, cols)), shape=(n_sites, n_sites))


def coupling_exponential(window: Window, env: EnvironmentSpec,
                         coupling: CouplingSpec, d: int,
                         sign: float = -1.0) -> sp.csr_matrix:
    """``exp(sign * i alpha (iota + iota*))`` on the joint window space.

    Computed in closed form on the invariant plane spanned by
    ``delta_0 (x) v`` and ``psi*`` (a cos/sin rotation); identity elsewhere.
    """
    window.require_zero_interior()
    alpha = coupling.alpha
    u = window.joint_env_vector(0, coupling.v, d)
    s = window.joint_sample_vector(coupling.star())
    N = window.joint_dim(d)
    rot = ((np.cos(alpha) - 1.0) * (np.outer(u, u.conj()) + np.outer(s, s.conj()))
           + sign * 1j * np.sin(alpha) * (np.outer(u, s.conj()) + np.outer(s, u.conj())))
    return sp.identity(N, format="csr", dtype=complex) + sp.csr_matrix(rot)


def one_step_joint_operator(window: Window, env: EnvironmentSpec, W: np.ndarray,
                            coupling: CouplingSpec,
                            boundary: str = "open") -> sp.csr_matrix:
    """One step of the coupled one-particle dynamics on the windowed joint space.

    ``T = (S_w (x) U  (+)  W) exp(-i alpha (iota + iota*))`` -- the coupling
    rotation acts first, then the free step.  With ``boundary="open"`` the
    shift drops the outgoing site and zero-fills the incoming one (an
    isometry away from the edges); ``"periodic"`` wraps the window, giving an
    exactly unitary step for oracle comparisons.
    """
    if boundary not in ("open", "periodic"):
        raise CouplingError(f"boundary must be 'open' or 'periodic', got {boundary!r}")
    W = np.asarray(W, dtype=complex)
    d = W.shape[0]
    S_w = shift_matrix(window.n_sites, periodic=(boundary == "periodic"))
    free = sp.block_diag(
        [sp.kron(S_w, sp.csr_matrix(env.U)), sp.csr_matrix(W)], format="csr")
    K = coupling_exponential(window, env, coupling, d)
    return (free @ K).tocsr()


def moller_sample_block(env: EnvironmentSpec, W: np.ndarray, coupling: CouplingSpec,
                        t_max: int | None = None,
                        tail_tol: float = 1e-12) -> tuple[np.ndarray, Window]:
    """Sample column of the one-particle Moller operator, on a finite window.

    Returns ``(A, window)`` where ``A`` maps C^d into the windowed reservoir
    space by

        A = i sin(alpha) sum_{t'=0}^{T} (S (x) U)^{t'+1} iota W* (M*)^{t'},

    truncated where the decay certificate puts the tail below ``tail_tol``.
    The block identity ``A* Sigma_w A = Delta`` holds for every initial sample
    symbol, since the sample block of the Moller column vanishes.
    """
    coupling.require_coupled()
    psi_star = coupling.star()
    contraction = build_contraction(W, psi_star, coupling.alpha)
    contraction.require_contractive()
    if t_max is None:
        t_max = contraction.truncation_horizon(tail_tol)
    window = Window(-(t_max + 1), 0, env.m)
    d = W.shape[0]
    A = np.zeros((window.env_dim, d), dtype=complex)
    # row vector <psi*, W* M*^{t'} .> accumulated by repeated right-multiplication
    row = psi_star.conj() @ W.conj().T
    Mstar = contraction.matrix.conj().T
    Uv = coupling.v
    for tp in range(t_max + 1):
        Uv = env.U @ Uv
        off = window.site_offset(-(tp + 1))
        A[off:off + env.m, :] += np.outer(Uv, row)
        row = row @ Mstar
    return 1j * np.sin(coupling.alpha) * A, window
