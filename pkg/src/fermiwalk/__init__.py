"""Ensembles of fermionic walkers coupled to a structured reservoir.

Closed-form asymptotic states, particle statistics and fluxes for coined
quantum walks exchanging fermions with a translation-invariant quasi-free
reservoir, together with independent dynamical simulators (covariance
propagation, finite-time sums, an exact many-body oracle) that cross-check
every formula, and disorder-averaged densities for large random rings.
"""

__version__ = "0.1.0"

from . import asymptotics, coupling, disorder, environment, simulate, walk  # noqa: F401
