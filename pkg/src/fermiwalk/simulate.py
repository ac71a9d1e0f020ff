"""Dynamical simulators validating the closed-form asymptotics.

Three independent routes to the same expectations:

* :class:`CovarianceState` propagates the truncated joint one-particle symbol
  ``Sigma_{t+1} = T Sigma_t T*`` on a finite reservoir window (open boundary
  for relaxation runs, periodic for oracle comparisons);
* :func:`finite_time_pair_expectation` evaluates the explicit finite-time
  sums for pair expectations, with the reservoir brackets reduced to symbol
  coefficients;
* :class:`FockOracle` evolves the exact many-body state on the full
  ``2^modes`` occupation space of a small periodic window (same-species
  representation, Jordan-Wigner operators), for non-quadratic observables
  such as the full particle-number distribution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .coupling import CouplingError, CouplingSpec, Window, build_contraction
from .environment import EnvironmentSpec, build_truncated_symbol

__all__ = [
    "CovarianceState",
    "WindowLeakageError",
    "evolve_covariance",
    "finite_time_pair_expectation",
    "flux_finite_time",
    "FockOracle",
    "dense_fermion_ops",
    "sparse_fermion_ops",
    "gamma_dense",
]


class WindowLeakageError(RuntimeError):
    """Propagated disturbance reached the window boundary; enlarge the window."""


@dataclass
class CovarianceState:
    """Truncated joint one-particle symbol under ``Sigma -> T Sigma T*``.

    Layout: reservoir window block first (site-major), then the sample block.

    With open boundaries information moves strictly down-chain: the left edge
    only absorbs outgoing radiation (no back-action on the sample), while the
    right edge feeds in vacuum where the infinite reservoir would supply fresh
    correlated sites.  The run is therefore faithful exactly while the vacuum
    front stays outside the coupling region, which gives a hard step budget
    ``b - 2 L_max - 2``; in addition the two outermost right-edge sites are
    compared each step against the freely shifted reservoir (closed form) as
    a safety net.  Crossing either guard raises :class:`WindowLeakageError`.
    """

    window: Window
    env: EnvironmentSpec
    W: np.ndarray
    coupling: CouplingSpec
    boundary: str = "open"
    sample_symbol: np.ndarray | None = None
    leakage_tol: float = 1e-10
    sigma: np.ndarray = field(init=False)
    t: int = field(init=False, default=0)
    leakage: float = field(init=False, default=0.0)

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=complex)
        d = self.W.shape[0]
        if self.sample_symbol is None:
            xi = np.zeros((d, d), dtype=complex)
        else:
            xi = np.asarray(self.sample_symbol, dtype=complex)
            evals = np.linalg.eigvalsh(xi)
            if evals.min() < -1e-10 or evals.max() > 1.0 + 1e-10:
                raise CouplingError("sample symbol must satisfy 0 <= Xi <= 1")
        self.sample_symbol = xi
        sigma_env = build_truncated_symbol(self.env, (self.window.a, self.window.b))
        self.sigma = np.zeros((self.window.joint_dim(d),) * 2, dtype=complex)
        ne = self.window.env_dim
        self.sigma[:ne, :ne] = sigma_env
        self.sigma[ne:, ne:] = xi
        # coupling rotation K = 1 + Vc C Vc^H on span{delta_0 x v, psi*}
        alpha = self.coupling.alpha
        Vc = np.stack([self.window.joint_env_vector(0, self.coupling.v, d),
                       self.window.joint_sample_vector(self.coupling.star())], axis=1)
        C = np.array([[np.cos(alpha) - 1.0, -1j * np.sin(alpha)],
                      [-1j * np.sin(alpha), np.cos(alpha) - 1.0]])
        self._Vc = Vc
        self._VcC = Vc @ C

    @property
    def d(self) -> int:
        return self.W.shape[0]

    @property
    def step_budget(self) -> int:
        """Steps for which the truncated run reproduces the infinite model."""
        return self.window.b - 2 * self.env.max_degree - 2

    def _free_edge_rows(self) -> np.ndarray:
        """Closed-form rows of the freely evolved symbol at the right edge."""
        m = self.env.m
        win = self.window
        rows = np.zeros((2 * m, win.joint_dim(self.d)), dtype=complex)
        for j, k in enumerate((win.b - 1, win.b)):
            if k + self.t > win.b:
                continue
            for kp in range(win.a, win.b - self.t + 1):
                off = win.site_offset(kp)
                for wi in range(m):
                    for wj in range(m):
                        rows[j * m + wi, off + wj] = self.env.sigma_element(
                            k, np.eye(m)[wi], kp, np.eye(m)[wj])
        return rows

    def _free_left(self, X: np.ndarray) -> np.ndarray:
        """``(S_w (x) U  (+)  W) @ X`` acting on rows of a joint-space matrix."""
        ns, m, ne = self.window.n_sites, self.env.m, self.window.env_dim
        out = np.empty_like(X)
        if self.boundary == "periodic":
            src = np.roll(X[:ne], -m, axis=0)
            dst = out[:ne]
        else:
            src = X[m:ne]
            dst = out[:ne - m]
            out[ne - m:ne] = 0.0
        if m == 1:
            np.multiply(self.env.U[0, 0], src, out=dst)
        else:
            rows = src.shape[0] // m
            np.matmul(self.env.U, src.reshape(rows, m, -1),
                      out=dst.reshape(rows, m, -1))
        np.matmul(self.W, X[ne:], out=out[ne:])
        return out

    def _step_once(self):
        """One step ``Sigma -> T Sigma T*`` via the block structure of ``T``."""
        sigma = self.sigma
        # coupling rotation K Sigma K* = Sigma + [VC | Y + VC Z] [X ; VC^H]
        X = self._Vc.conj().T @ sigma
        Y = sigma @ self._Vc
        Z = self._Vc.conj().T @ Y
        VC = self._VcC
        left = np.concatenate([VC, Y + VC @ Z], axis=1)
        right = np.concatenate([X, VC.conj().T], axis=0)
        np.add(sigma, left @ right, out=sigma)
        # free conjugation, row side twice
        half = self._free_left(sigma)
        self.sigma = self._free_left(np.ascontiguousarray(half.conj().T)).conj().T
        self.t += 1

    def step(self, steps: int = 1, enforce_leakage: bool = True) -> "CovarianceState":
        """Advance ``steps`` steps, enforcing the truncation guards."""
        if self.boundary == "open" and enforce_leakage and self.t + steps > self.step_budget:
            raise WindowLeakageError(
                f"step budget exceeded: {self.t + steps} > {self.step_budget} faithful steps "
                f"on window [{self.window.a}, {self.window.b}]; enlarge the window")
        m = self.env.m
        edge = np.arange(self.window.env_dim - 2 * m, self.window.env_dim)
        for _ in range(steps):
            self._step_once()
        if self.boundary == "open":
            dev = np.abs(self.sigma[edge, :] - self._free_edge_rows()).max()
            self.leakage = max(self.leakage, float(dev))
            if enforce_leakage and self.leakage > self.leakage_tol:
                raise WindowLeakageError(
                    f"right-edge deviation {self.leakage:.3e} > {self.leakage_tol:.1e} at "
                    f"t = {self.t}; enlarge the window")
        return self

    def sample_block(self) -> np.ndarray:
        ne = self.window.env_dim
        return self.sigma[ne:, ne:].copy()

    def env_block(self) -> np.ndarray:
        ne = self.window.env_dim
        return self.sigma[:ne, :ne].copy()

    def pair_expectation(self, f: np.ndarray, g: np.ndarray) -> complex:
        """``<c*(f) c(g)> = <g, Sigma_t f>`` for joint-space vectors."""
        return complex(np.vdot(g, self.sigma @ f))

    def env_vector(self, site: int, w) -> np.ndarray:
        return self.window.joint_env_vector(site, w, self.d)

    def sample_vector(self, psi) -> np.ndarray:
        return self.window.joint_sample_vector(np.asarray(psi, dtype=complex))


def evolve_covariance(state: CovarianceState, steps: int) -> CovarianceState:
    """Functional wrapper around :meth:`CovarianceState.step`."""
    return state.step(steps)


def _sigma_bracket(env: EnvironmentSpec, comps1, comps2) -> complex:
    """``< phi_1, Sigma phi_2 >`` for finitely supported lattice vectors.

    Each vector is a list of ``(site, internal_vector)`` components.
    """
    total = 0.0 + 0.0j
    for k1, w1 in comps1:
        for k2, w2 in comps2:
            total += env.sigma_element(k1, w1, k2, w2)
    return total


def finite_time_pair_expectation(env: EnvironmentSpec, W: np.ndarray,
                                 coupling: CouplingSpec, kind: str,
                                 vec1, vec2, t: int,
                                 sample_symbol: np.ndarray | None = None) -> complex:
    """Finite-time pair expectation from the explicit evolution sums.

    ``kind`` selects the monomial:

    * ``"aa"``: ``tau^t(a*(vec1) a(vec2))`` with sample vectors;
    * ``"ba"``: ``tau^t(b*(vec1) a(vec2))`` with ``vec1`` a reservoir vector
      given as a list of ``(site, internal)`` components supported on
      non-negative sites;
    * ``"bb"``: ``tau^t(b*(vec1) b(vec2))``, both reservoir vectors, exactly
      ``<vec2, Sigma vec1>`` at every ``t``.

    The initial product state is the reservoir symbol times an even sample
    state with two-point symbol ``sample_symbol`` (defaults to zero, i.e. an
    empty sample); with that convention the sums are exact, with no residual
    error term.
    """
    alpha = coupling.alpha
    psi_star = coupling.star()
    contraction = build_contraction(W, psi_star, alpha)
    M = contraction.matrix

    if kind == "bb":
        for k, _ in list(vec1) + list(vec2):
            if k < 0:
                raise CouplingError("bb expectations need vectors supported on sites >= 0")
        return _sigma_bracket(env, vec2, vec1)

    # return amplitudes g(s) = <psi*, W* M*^{s-1} vec2> for s = 1..t
    g2 = np.empty(t, dtype=complex)
    row = psi_star.conj() @ W.conj().T
    Mstar = M.conj().T
    vec2 = np.asarray(vec2, dtype=complex)
    for s in range(t):
        g2[s] = row @ vec2
        row = row @ Mstar

    if kind == "ba":
        for k, _ in vec1:
            if k < 0:
                raise CouplingError("ba expectations need the reservoir vector in sites >= 0")
        # term t': conj(g(t')) < (S x U)^{t'} delta_0 x v, Sigma vec1 >; the
        # bracket vanishes once t' exceeds the coefficient support
        total = 0.0 + 0.0j
        Uv = coupling.v
        max_site = max(k for k, _ in vec1)
        for tp in range(1, min(t, env.max_degree + max_site) + 1):
            Uv = env.U @ Uv
            bracket = sum(env.sigma_element(-tp, Uv, k, w) for k, w in vec1)
            total += np.conj(g2[tp - 1]) * bracket
        return -1j * np.sin(alpha) * total

    if kind == "aa":
        vec1 = np.asarray(vec1, dtype=complex)
        g1 = np.empty(t, dtype=complex)
        row = psi_star.conj() @ W.conj().T
        for s in range(t):
            g1[s] = row @ vec1
            row = row @ Mstar
        xi_term = 0.0 + 0.0j
        Mt = np.linalg.matrix_power(Mstar, t)
        if sample_symbol is not None:
            xi_term = np.vdot(Mt @ vec2, np.asarray(sample_symbol, dtype=complex) @ (Mt @ vec1))
        L = env.max_degree
        series = 0.0 + 0.0j
        for sprime in range(1, t + 1):
            lo, hi = max(1, sprime - L), min(t, sprime + L)
            for tprime in range(lo, hi + 1):
                B = env.correlation_profile(coupling.v, sprime - tprime)
                if B != 0.0:
                    series += np.conj(g2[tprime - 1]) * g1[sprime - 1] * B
        return xi_term + np.sin(alpha) ** 2 * series

    raise CouplingError(f"unknown pair-expectation kind {kind!r}")


def flux_finite_time(state: CovarianceState, i: int) -> float:
    """Expectation of the flux observable into sector ``i`` on the current state.

    Evaluates all six quadratic terms of the flux observable (same-species
    operator ordering) as a quadratic form on the joint covariance.
    """
    env, coupling = state.env, state.coupling
    alpha = coupling.alpha
    w = coupling.weights(env)[i]
    pi_v = env.projector(i) @ coupling.v
    u_v = state.env_vector(0, coupling.v)
    u_pi = state.env_vector(0, pi_v)
    s = state.sample_vector(coupling.star())

    def S(f, g):
        return state.pair_expectation(f, g)

    ca, sa = np.cos(alpha), np.sin(alpha)
    value = ((ca - 1.0) ** 2 * w * S(u_v, u_v)
             + (ca - 1.0) * S(u_pi, u_v)
             + (ca - 1.0) * S(u_v, u_pi)
             + sa ** 2 * w * S(s, s)
             + 1j * sa * (ca - 1.0) * w * (S(s, u_v) - S(u_v, s))
             + 1j * sa * (S(s, u_pi) - S(u_pi, s)))
    return float(np.real(value))


# ---------------------------------------------------------------------------
# Jordan-Wigner machinery


def dense_fermion_ops(n_modes: int) -> list[np.ndarray]:
    """Dense annihilation operators ``c_0 .. c_{n-1}`` (mode 0 carries no string)."""
    if n_modes > 10:
        raise CouplingError(f"dense fermion ops capped at 10 modes, got {n_modes}")
    lower = np.array([[0.0, 1.0], [0.0, 0.0]])  # c = |0><1|
    zmat = np.diag([1.0, -1.0])
    eye = np.eye(2)
    ops = []
    for k in range(n_modes):
        factors = [zmat] * k + [lower] + [eye] * (n_modes - k - 1)
        op = factors[0]
        for f in factors[1:]:
            op = np.kron(op, f)
        ops.append(op.astype(complex))
    return ops


def sparse_fermion_ops(n_modes: int) -> list[sp.csr_matrix]:
    """Sparse annihilation operators on ``2^n_modes`` dimensions."""
    lower = sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
    zmat = sp.csr_matrix(np.diag([1.0, -1.0]))
    eye = sp.identity(2, format="csr")
    ops = []
    for k in range(n_modes):
        op = None
        for j in range(n_modes):
            factor = zmat if j < k else (lower if j == k else eye)
            op = factor if op is None else sp.kron(op, factor, format="csr")
        ops.append(op.astype(complex))
    return ops


def gamma_dense(V: np.ndarray) -> np.ndarray:
    """Second quantisation ``Gamma(V)`` of a unitary on few modes, as a dense matrix.

    ``Gamma(e^{ih}) = e^{i dGamma(h)}``; the quadratic generator conserves
    particle number, so the exponential is taken sector by sector.
    """
    V = np.asarray(V, dtype=complex)
    n = V.shape[0]
    if n > 10:
        raise CouplingError(f"second quantisation capped at 10 modes, got {n}")
    h = -1j * scipy.linalg.logm(V)
    h = 0.5 * (h + h.conj().T)
    ops = sparse_fermion_ops(n)
    dim = 2 ** n
    dgamma = sp.csr_matrix((dim, dim), dtype=complex)
    for j in range(n):
        cdag_j = ops[j].conj().T.tocsr()
        for k in range(n):
            if abs(h[j, k]) > 1e-300:
                dgamma = dgamma + h[j, k] * (cdag_j @ ops[k])
    counts = _popcount(np.arange(dim), n)
    out = np.zeros((dim, dim), dtype=complex)
    dgamma = dgamma.tocsc()
    for p in range(n + 1):
        idx = np.where(counts == p)[0]
        block = dgamma[np.ix_(idx, idx)].toarray()
        out[np.ix_(idx, idx)] = scipy.linalg.expm(1j * block)
    return out


# ---------------------------------------------------------------------------
# Exact many-body oracle


class FockOracle:
    """Exact many-body evolution on a small periodic window.

    Same-species representation: one fermion species on the joint one-particle
    space, with the interaction realised as the second quantisation of the
    one-particle rotation (Appendix-style).  Mode ordering puts the reservoir
    modes first -- sites reordered so the coupling site comes last, internal
    basis rotated so ``v`` is its last vector -- followed by the sample modes
    rotated so ``psi*`` comes first.  The coupling then acts on two adjacent
    modes and carries no Jordan-Wigner string.

    The initial state is the Gaussian density matrix of ``Sigma_w (+) Xi``,
    represented as a weighted ensemble of eigenmode Slater states (one per
    bitstring over the fractionally occupied modes).
    """

    MAX_MODES = 14

    def __init__(self, env: EnvironmentSpec, W: np.ndarray, coupling: CouplingSpec,
                 window: Window, sample_symbol: np.ndarray | None = None,
                 max_ensemble: int = 1024, verify: bool = True,
                 ensemble: tuple | None = None):
        W = np.asarray(W, dtype=complex)
        d = W.shape[0]
        m = env.m
        window.require_zero_interior()
        E = window.env_dim
        D = E + d
        if D > self.MAX_MODES:
            raise CouplingError(
                f"Fock oracle refuses {D} modes (window {window.n_sites} x {m} + {d} sample); "
                f"cap is {self.MAX_MODES}")
        self.env, self.W, self.coupling, self.window = env, W, coupling, window
        self.E, self.d, self.D = E, d, D
        self.t = 0

        # --- one-particle basis maps (canonical coords -> oracle modes) ---
        r_int = _complete_basis_last(coupling.v)             # internal basis, v last
        site_order = [k for k in range(window.a, window.b + 1) if k != 0] + [0]
        Q_E = np.zeros((E, E), dtype=complex)
        for pos, k in enumerate(site_order):
            off_can = window.site_offset(k)
            Q_E[off_can:off_can + m, pos * m:(pos + 1) * m] = r_int
        Q_S = _complete_basis_first(coupling.star())
        self.Q_E, self.Q_S = Q_E, Q_S

        S_circ_U = sp.kron(_circulant_shift(window.n_sites), sp.csr_matrix(env.U)).toarray()
        V_E = Q_E.conj().T @ S_circ_U @ Q_E
        V_S = Q_S.conj().T @ W @ Q_S
        self.G_E = gamma_dense(V_E)
        self.G_S = gamma_dense(V_S)
        alpha = coupling.alpha
        self.k4 = np.array([[1, 0, 0, 0],
                            [0, np.cos(alpha), -1j * np.sin(alpha), 0],
                            [0, -1j * np.sin(alpha), np.cos(alpha), 0],
                            [0, 0, 0, 1]], dtype=complex)

        self._c_ops = sparse_fermion_ops(D)
        if verify:
            self._verify_car()

        if ensemble is not None:
            # user-supplied mixture of pure many-body states (amplitudes over
            # the oracle's occupation basis), e.g. for evenness tests with
            # non-Gaussian states
            weights, columns = ensemble
            self.weights = np.asarray(weights, dtype=float)
            if abs(self.weights.sum() - 1.0) > 1e-12 or (self.weights < 0).any():
                raise CouplingError("ensemble weights must be a probability vector")
            self.states = np.asarray(columns, dtype=complex)
            if self.states.shape != (2 ** D, len(self.weights)):
                raise CouplingError(
                    f"ensemble states must be ({2 ** D}, {len(self.weights)})")
            return

        # --- initial Gaussian ensemble ---
        sigma_env = build_truncated_symbol(env, (window.a, window.b))
        sigma_env = Q_E.conj().T @ sigma_env @ Q_E
        if sample_symbol is None:
            sigma_s = np.zeros((d, d), dtype=complex)
        else:
            sigma_s = Q_S.conj().T @ np.asarray(sample_symbol, dtype=complex) @ Q_S
        lam_e, vec_e = np.linalg.eigh(sigma_env)
        lam_s, vec_s = np.linalg.eigh(sigma_s)
        lam = np.concatenate([lam_e, lam_s])
        modes = np.zeros((D, D), dtype=complex)
        modes[:E, :E] = vec_e
        modes[E:, E:] = vec_s
        if lam.min() < -1e-10 or lam.max() > 1.0 + 1e-10:
            raise CouplingError("initial joint symbol escapes [0, 1]")
        lam = np.clip(lam, 0.0, 1.0)
        frac = np.where((lam > 1e-12) & (lam < 1.0 - 1e-12))[0]
        filled = np.where(lam >= 1.0 - 1e-12)[0]
        if 2 ** len(frac) > max_ensemble:
            raise CouplingError(
                f"{len(frac)} fractional modes need 2^{len(frac)} ensemble states "
                f"( > {max_ensemble})")
        cdag_modes = {}
        for mode in set(filled) | set(frac):
            op = sum(modes[mu, mode] * self._c_ops[mu].conj().T for mu in range(D)
                     if abs(modes[mu, mode]) > 1e-15)
            cdag_modes[mode] = op.tocsr()
        weights = []
        columns = []
        for bits in range(2 ** len(frac)):
            occupied = list(filled)
            weight = 1.0
            for pos, mode in enumerate(frac):
                if (bits >> pos) & 1:
                    occupied.append(mode)
                    weight *= lam[mode]
                else:
                    weight *= 1.0 - lam[mode]
            columns.append(self._slater(cdag_modes, sorted(occupied)))
            weights.append(weight)
        self.states = np.stack(columns, axis=1)
        self.weights = np.array(weights)

    # -- construction helpers ------------------------------------------------

    def _slater(self, cdag_modes: dict, occupied) -> np.ndarray:
        vec = np.zeros(2 ** self.D, dtype=complex)
        vec[0] = 1.0
        for mode in occupied:
            vec = cdag_modes[mode] @ vec
        return vec

    def _verify_car(self, tol: float = 1e-12):
        rng = np.random.default_rng(7)
        pairs = [(i, j) for i in range(self.D) for j in range(self.D)]
        if self.D > 8:
            idx = rng.choice(len(pairs), size=40, replace=False)
            pairs = [pairs[k] for k in idx]
        eye = sp.identity(2 ** self.D, format="csr")
        for i, j in pairs:
            ci, cj = self._c_ops[i], self._c_ops[j]
            anti = ci @ cj.conj().T + cj.conj().T @ ci
            dev = (anti - eye) if i == j else anti
            if abs(dev).max() > tol:
                raise CouplingError(f"CAR violation at modes ({i}, {j})")
            dev_same = ci @ cj + cj @ ci
            if dev_same.nnz and abs(dev_same).max() > tol:
                raise CouplingError(f"same-type anticommutator violation at ({i}, {j})")

    # -- evolution -----------------------------------------------------------

    def step(self, steps: int = 1) -> "FockOracle":
        half_e = 2 ** (self.E - 1)
        half_s = 2 ** (self.d - 1)
        K = self.states.shape[1]
        arr = self.states
        for _ in range(steps):
            arr = arr.reshape(half_e, 4, half_s * K)
            arr = np.einsum("ab,xby->xay", self.k4, arr)
            arr = arr.reshape(2 ** self.E, 2 ** self.d, K)
            arr = np.einsum("st,etk->esk", self.G_S, arr)
            arr = np.tensordot(self.G_E, arr, axes=(1, 0))
            arr = arr.reshape(2 ** self.D, K)
            self.t += 1
        self.states = arr
        return self

    # -- observables ----------------------------------------------------------

    def _ensemble_expectation(self, values_per_state: np.ndarray) -> np.ndarray:
        return np.tensordot(self.weights, values_per_state, axes=(0, 0))

    def two_point_matrix(self) -> np.ndarray:
        """Joint covariance ``Sigma[g, f] = <c*(e_f) c(e_g)>`` in canonical coordinates."""
        D, K = self.D, self.states.shape[1]
        sigma_o = np.zeros((D, D), dtype=complex)
        for x in range(K):
            psi = self.states[:, x]
            cpsi = np.stack([self._c_ops[mu] @ psi for mu in range(D)], axis=1)
            gram = cpsi.conj().T @ cpsi          # gram[mu, nu] = <c_mu psi, c_nu psi>
            sigma_o += self.weights[x] * gram.T
        Q = np.zeros((D, D), dtype=complex)
        Q[:self.E, :self.E] = self.Q_E
        Q[self.E:, self.E:] = self.Q_S
        return Q @ sigma_o @ Q.conj().T

    def total_number(self) -> float:
        counts = _popcount(np.arange(2 ** self.D), self.D)
        dens = np.abs(self.states) ** 2
        return float(self.weights @ (counts @ dens))

    def sample_number_distribution(self) -> np.ndarray:
        """Exact law of the sample particle number, indexed 0..d."""
        probs = np.abs(self.states.reshape(2 ** self.E, 2 ** self.d, -1)) ** 2
        per_sample_config = probs.sum(axis=0)                 # (2^d, K)
        counts = _popcount(np.arange(2 ** self.d), self.d)
        pmf = np.zeros(self.d + 1)
        for p in range(self.d + 1):
            mask = counts == p
            pmf[p] = float(self.weights @ per_sample_config[mask, :].sum(axis=0))
        return pmf

    def sample_occupation_moments(self) -> tuple[np.ndarray, np.ndarray]:
        """First and second moments of the per-vertex number operators.

        Requires the star vector to be the first canonical sample mode (true
        for cycle walks), so vertex occupations are diagonal in the occupation
        basis.  Returns ``(<n_nu>, <n_nu n_up>)`` for spin-1/2 vertices.
        """
        if np.linalg.norm(self.Q_S - np.eye(self.d)) > 1e-12:
            raise CouplingError("vertex moments need psi* to be the first canonical mode")
        if self.d % 2 != 0:
            raise CouplingError("vertex moments need a spin-1/2 sample (even d)")
        n = self.d // 2
        configs = np.arange(2 ** self.d)
        vertex_counts = np.zeros((n, 2 ** self.d))
        for nu in range(n):
            up = (configs >> (self.d - 1 - 2 * nu)) & 1
            dn = (configs >> (self.d - 1 - (2 * nu + 1))) & 1
            vertex_counts[nu] = up + dn
        probs = np.abs(self.states.reshape(2 ** self.E, 2 ** self.d, -1)) ** 2
        per_config = np.tensordot(probs.sum(axis=0), self.weights, axes=(1, 0))
        first = vertex_counts @ per_config
        second = (vertex_counts[:, None, :] * vertex_counts[None, :, :]) @ per_config
        return first, second

    def odd_moment(self, f: np.ndarray) -> complex:
        """``<c*(f)>`` for a canonical joint vector ``f`` (zero for even states)."""
        Q = np.zeros((self.D, self.D), dtype=complex)
        Q[:self.E, :self.E] = self.Q_E
        Q[self.E:, self.E:] = self.Q_S
        f_o = Q.conj().T @ np.asarray(f, dtype=complex)
        cdag = sum(f_o[mu] * self._c_ops[mu].conj().T for mu in range(self.D))
        vals = np.einsum("ik,ik->k", self.states.conj(), cdag @ self.states)
        return complex(self.weights @ vals)


def _complete_basis_first(psi: np.ndarray) -> np.ndarray:
    """Unitary whose first column is exactly ``psi`` (Gram-Schmidt completion)."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    d = psi.shape[0]
    if np.array_equal(psi, np.eye(d, dtype=complex)[:, 0]):
        return np.eye(d, dtype=complex)
    cols = [psi / np.linalg.norm(psi)]
    for k in range(d):
        if len(cols) == d:
            break
        w = np.zeros(d, dtype=complex)
        w[k] = 1.0
        for c in cols:
            w = w - np.vdot(c, w) * c
        nrm = np.linalg.norm(w)
        if nrm > 1e-8:
            cols.append(w / nrm)
    return np.stack(cols, axis=1)


def _complete_basis_last(v: np.ndarray) -> np.ndarray:
    """Unitary whose last column is exactly ``v``."""
    return np.roll(_complete_basis_first(v), -1, axis=1)


def _circulant_shift(n: int) -> sp.csr_matrix:
    rows = np.arange(n)
    cols = (rows + 1) % n
    return sp.csr_matrix((np.ones(n), (rows, cols)), shape=(n, n))


def _popcount(values: np.ndarray, bits: int) -> np.ndarray:
    out = np.zeros_like(values)
    for b in range(bits):
        out = out + ((values >> b) & 1)
    return out
