"""Closed-form asymptotics of the sample state.

The large-time sample state is quasi-free with symbol

    Delta = sum_i ||pi_i v||^2  2 Re F_i(M*),     M = W (1 + (cos alpha - 1) P),

from which everything else follows: the particle number is Poisson binomial
with parameters the eigenvalues of Delta, ring walks have an explicit density
profile and negative inter-node correlations, and the steady particle fluxes
into the reservoir sectors have a finite closed form in the coefficients of
the ``F_i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coupling import ContractionM, CouplingError, CouplingSpec, build_contraction
from .environment import EnvironmentSpec, eval_series, hermitian_part

__all__ = [
    "AsymptoticState",
    "PoissonBinomial",
    "FluxResult",
    "asymptotic_symbol",
    "particle_number_distribution",
    "node_profile",
    "node_correlations",
    "ring_profile_closed_form",
    "flux_expectations",
    "small_alpha_flux_rate",
    "small_alpha_flux_rate_walk",
]


@dataclass
class AsymptoticState:
    """The limiting sample symbol ``Delta`` with its eigendecomposition."""

    delta: np.ndarray
    eigenvalues: np.ndarray
    contraction: ContractionM
    env: EnvironmentSpec
    weights: np.ndarray

    @property
    def dimension(self) -> int:
        return self.delta.shape[0]

    def validate(self, tol: float = 1e-10):
        dev_h = np.linalg.norm(self.delta - self.delta.conj().T)
        if dev_h > 1e-12:
            raise CouplingError(f"Delta is not Hermitian: deviation {dev_h:.3e}")
        lo, hi = self.eigenvalues.min(), self.eigenvalues.max()
        if lo < -tol or hi > 1.0 + tol:
            raise CouplingError(f"Delta spectrum [{lo:.3e}, {hi:.3e}] escapes [0, 1]")


def asymptotic_symbol(env: EnvironmentSpec, W: np.ndarray,
                      coupling: CouplingSpec) -> AsymptoticState:
    """``Delta = sum_i w_i 2 Re F_i(M*)`` with the sector weights ``w_i = ||pi_i v||^2``."""
    coupling.require_coupled()
    contraction = build_contraction(W, coupling.star(), coupling.alpha)
    contraction.require_contractive()
    w = coupling.weights(env)
    Mstar = contraction.matrix.conj().T
    d = W.shape[0]
    delta = np.zeros((d, d), dtype=complex)
    for i, f in enumerate(env.symbol_functions):
        if w[i] != 0.0:
            delta += w[i] * 2.0 * hermitian_part(eval_series(f, Mstar))
    delta = hermitian_part(delta)
    eigenvalues = np.linalg.eigvalsh(delta)
    state = AsymptoticState(delta, eigenvalues, contraction, env, w)
    state.validate()
    return state


@dataclass
class PoissonBinomial:
    """Law of a sum of independent Bernoulli variables with the given parameters."""

    parameters: np.ndarray
    pmf: np.ndarray

    @classmethod
    def from_parameters(cls, parameters) -> "PoissonBinomial":
        """Stable O(d^2) iterative convolution of the Bernoulli factors."""
        lam = np.clip(np.asarray(parameters, dtype=float), 0.0, 1.0)
        pmf = np.array([1.0])
        for p in lam:
            pmf = np.convolve(pmf, [1.0 - p, p])
        return cls(lam, pmf)

    def mean(self) -> float:
        return float(self.parameters.sum())

    def variance(self) -> float:
        return float((self.parameters * (1.0 - self.parameters)).sum())

    def pmf_mean(self) -> float:
        return float(np.arange(len(self.pmf)) @ self.pmf)

    def pmf_variance(self) -> float:
        k = np.arange(len(self.pmf))
        mu = self.pmf_mean()
        return float(((k - mu) ** 2) @ self.pmf)


def particle_number_distribution(state: AsymptoticState) -> PoissonBinomial:
    """Asymptotic law of the total particle number in the sample."""
    return PoissonBinomial.from_parameters(state.eigenvalues)


def node_profile(state: AsymptoticState, n: int | None = None) -> np.ndarray:
    """Particle density per ring vertex, ``p(nu) = sum_tau <e_{nu,tau}, Delta e_{nu,tau}>``.

    Only defined for spin-1/2 cycle walks (``d = 2n``); vertex 0 is the
    coupled site.
    """
    d = state.dimension
    if n is None:
        n = d // 2
    if d != 2 * n:
        raise CouplingError(f"node_profile needs a cycle walk with d = 2n, got d = {d}, n = {n}")
    diag = np.real(np.diag(state.delta))
    return diag[0::2] + diag[1::2]


def node_correlations(state: AsymptoticState, n: int | None = None) -> np.ndarray:
    """Limiting occupation covariances ``C(nu, up) = -sum_{taus} |Delta_{nu tau, up tau'}|^2``.

    Off-diagonal entries only (diagonal set to zero); they are non-positive
    for every valid symbol.
    """
    d = state.dimension
    if n is None:
        n = d // 2
    if d != 2 * n:
        raise CouplingError(f"node_correlations needs a cycle walk with d = 2n, got d = {d}")
    blocks = np.abs(state.delta.reshape(n, 2, n, 2)) ** 2
    corr = -blocks.sum(axis=(1, 3))
    np.fill_diagonal(corr, 0.0)
    return corr


def ring_profile_closed_form(thetas, alpha: float, F) -> np.ndarray:
    """Explicit profile for rotation coins and a symbol ending at the quadratic term.

    For coins ``[[cos t, -sin t], [sin t, cos t]]`` at angles ``thetas`` and a
    symbol function with coefficients ``(c0, c1, c2)`` the profile is

        p(nu) = 2 c0 - 2 Re c2 (sin t_{nu-1} sin t_nu + sin t_nu sin t_{nu+1})

    with the two products straddling the coupled vertex 0 each picking up a
    ``cos(alpha)`` factor.  The odd coefficient ``c1`` never enters.  Note
    ``2 Re c2 = Re F''(0)`` and ``2 c0 = 2 * (2 F(0))``: each vertex carries
    two spin modes of density ``c0``.
    """
    thetas = np.asarray(thetas, dtype=float)
    n = thetas.shape[0]
    if n < 3:
        raise CouplingError("the closed-form profile needs n >= 3 (distinct neighbour paths)")
    coeffs = F.coefficients if hasattr(F, "coefficients") else tuple(F)
    c0 = float(np.real(coeffs[0]))
    f2 = 2.0 * float(np.real(coeffs[2])) if len(coeffs) > 2 else 0.0
    s = np.sin(thetas)
    bond = s * np.roll(s, -1)          # bond[nu] = sin t_nu sin t_{nu+1}
    bond[0] *= np.cos(alpha)           # only the (0, 1) bond feels the coupling
    return 2.0 * c0 - f2 * (np.roll(bond, 1) + bond)


@dataclass
class FluxResult:
    """Limiting per-sector flux expectations and their small-coupling rates."""

    phi: np.ndarray
    weights: np.ndarray
    alpha: float
    rates: np.ndarray | None = None

    @property
    def total(self) -> float:
        return float(self.phi.sum())


def _mean_return_amplitudes(contraction: ContractionM, horizon: int) -> np.ndarray:
    """``m(t') = <psi*, M^{t'-1} W psi*>`` for ``t' = 1..horizon``."""
    psi = contraction.psi_star
    vec = contraction.W @ psi
    out = np.empty(horizon, dtype=complex)
    for t in range(horizon):
        out[t] = np.vdot(psi, vec)
        vec = contraction.matrix @ vec
    return out


def flux_expectations(env: EnvironmentSpec, W: np.ndarray, coupling: CouplingSpec,
                      with_rates: bool = True) -> FluxResult:
    """Closed-form limiting expectation of the flux into each reservoir sector.

    phi_i = (2 - 2 cos a) w_i (B(0) - c_i(0))
            + 2 sin^2 a  w_i  Re sum_{t'>=1} m(t') (conj B(t') - conj c_i(t'))

    where ``B(t') = sum_j w_j c_j(t')`` and ``m(t') = <psi*, M^{t'-1} W psi*>``.
    The sum is finite (coefficients have finite support), so no truncation
    error enters.
    """
    coupling.require_coupled()
    contraction = build_contraction(W, coupling.star(), coupling.alpha)
    contraction.require_contractive()
    w = coupling.weights(env)
    alpha = coupling.alpha
    L = env.max_degree
    mvals = _mean_return_amplitudes(contraction, L) if L > 0 else np.zeros(0, dtype=complex)

    def coeff(i, t):
        c = env.symbol_functions[i].coefficients
        return c[t] if t < len(c) else 0.0

    B = np.array([sum(w[j] * coeff(j, t) for j in range(env.m))
                  for t in range(L + 1)], dtype=complex)
    phi = np.zeros(env.m)
    for i in range(env.m):
        static = (2.0 - 2.0 * np.cos(alpha)) * w[i] * (B[0].real - coeff(i, 0).real)
        series = 0.0
        for t in range(1, L + 1):
            series += np.real(mvals[t - 1] * np.conj(B[t] - coeff(i, t)))
        phi[i] = static + 2.0 * np.sin(alpha) ** 2 * w[i] * series
    rates = small_alpha_flux_rate(env, w) if (with_rates and _weights_nondegenerate(w)) else None
    return FluxResult(phi, w, alpha, rates)


def _weights_nondegenerate(w: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.all(w > tol) and np.all(w < 1.0 - tol))


def small_alpha_flux_rate(env: EnvironmentSpec, weights: np.ndarray) -> np.ndarray:
    """Small-coupling flux rates ``r_i = lim phi_i / alpha^2``.

        r_i = w_i (1 - w_i) 2 Re ( sum_{j != i} w_j F_j(1) / (1 - w_i) - F_i(1) )

    Requires every weight strictly inside (0, 1) (``v != pi_i v``).  Exact
    when the walk leaves no return amplitude inside the coefficient support
    (in particular for constant ``F``); see ``flux_expectations`` for the
    finite-coupling form.
    """
    w = np.asarray(weights, dtype=float)
    if len(w) != env.m:
        raise CouplingError(f"expected {env.m} weights, got {len(w)}")
    if not _weights_nondegenerate(w):
        raise CouplingError(
            "small-coupling rates need v != pi_i v for every sector "
            f"(all weights strictly in (0,1)); got {w}")
    f1 = np.array([f.at_one() for f in env.symbol_functions])
    rates = np.empty(env.m)
    for i in range(env.m):
        other = sum(w[j] * f1[j] for j in range(env.m) if j != i) / (1.0 - w[i])
        rates[i] = w[i] * (1.0 - w[i]) * 2.0 * np.real(other - f1[i])
    return rates


def small_alpha_flux_rate_walk(env: EnvironmentSpec, W: np.ndarray,
                               coupling: CouplingSpec) -> np.ndarray:
    """Exact ``lim phi_i / alpha^2``, keeping the walk's return amplitudes.

    Taking ``alpha -> 0`` in the finite closed form of ``flux_expectations``
    leaves the factors ``u(t') = <psi*, W^{t'} psi*>`` in the series:

        r_i = w_i [ (B(0) - c_i(0))
                    + 2 Re sum_{t'>=1} u(t') (conj B(t') - conj c_i(t')) ].

    :func:`small_alpha_flux_rate` is the special case ``u(t') -> 1``, exact
    for constant symbol functions (an uncorrelated reservoir); for correlated
    reservoirs the limiting rate genuinely depends on the walk.
    """
    W = np.asarray(W, dtype=complex)
    psi = coupling.star()
    w = coupling.weights(env)
    if not _weights_nondegenerate(w):
        raise CouplingError("small-coupling rates need all weights strictly in (0, 1)")
    L = env.max_degree

    def coeff(i, t):
        c = env.symbol_functions[i].coefficients
        return c[t] if t < len(c) else 0.0

    B = np.array([sum(w[j] * coeff(j, t) for j in range(env.m))
                  for t in range(L + 1)], dtype=complex)
    u = np.empty(L, dtype=complex)
    vec = psi
    for t in range(L):
        vec = W @ vec
        u[t] = np.vdot(psi, vec)
    rates = np.empty(env.m)
    for i in range(env.m):
        series = sum(np.real(u[t - 1] * np.conj(B[t] - coeff(i, t)))
                     for t in range(1, L + 1))
        rates[i] = w[i] * ((B[0].real - coeff(i, 0).real) + 2.0 * series)
    return rates
