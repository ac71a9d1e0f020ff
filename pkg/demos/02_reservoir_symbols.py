"""Reservoir symbols: admissibility, and two ways to evaluate F on a matrix.

The reservoir state is encoded by scalar functions F_i with finitely many
coefficients; on each internal sector the symbol acts by the circle density
g_i = 2 Re F_i, and admissibility is 0 <= g_i <= 1.  Evaluating F on a
contraction can go through the power series or through a resolvent contour
integral; both must agree to high accuracy.
"""

import numpy as np

from fermiwalk.environment import (EnvironmentSpec, SymbolFunction,
                                   build_truncated_symbol, eval_contour,
                                   eval_series, validate_symbol)

print("=== admissibility on the circle ===")
for coeffs, label in [((0.25 * 2,), "constant, density 1/2"),
                      ((0.5, 1.0), "order-1 coefficient too large"),
                      ((0.5, 0.0, 0.125), "gentle order-2 correlations")]:
    env = EnvironmentSpec(np.eye(1), [SymbolFunction(coeffs)])
    print(f"\n{label}:")
    print(validate_symbol(env))

print("\n=== series vs contour evaluation ===")
F = SymbolFunction((0.5, 0.0, 0.125))
rng = np.random.default_rng(0)
B = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
B *= 0.9 / np.linalg.norm(B, 2)
series = eval_series(F, B)
contour = eval_contour(F, B, radius=0.95, nodes=256)
print("||series - contour|| =", np.linalg.norm(series - contour))

print("\n=== a finite window of the lattice symbol ===")
U = np.diag([1.0, np.exp(0.7j)])
env2 = EnvironmentSpec(U, [SymbolFunction((0.5, 0.1, 0.05)), SymbolFunction((0.3,))])
sigma = build_truncated_symbol(env2, (0, 15))
evals = np.linalg.eigvalsh(sigma)
print("window spectrum within [0, 1]:", evals.min() >= -1e-12, evals.max() <= 1 + 1e-12)
print("extremes:", evals.min(), evals.max())
