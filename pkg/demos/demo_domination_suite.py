"""Comparison-inequality battery on random bundle operators.

Random rank-2 connections and Hermitian potentials against their scalar
floors: pointwise domination, the bilinear form version, spectral
bottoms, and the localized L^q smoothing bounds.
"""

import math

import numpy as np

from schrokato.domination import (
    check_diamagnetic_bottom,
    check_hsu_direction,
    check_kato_simon,
    check_lq_bounds,
    check_positivity,
)
from schrokato.lattice import PotentialField, assemble_operator, attach_gauge, random_connected_graph


def random_unitary(rng, size):
    z = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


rng = np.random.default_rng(21)
print("== 10 random (graph, gauge, V >= w) instances ==")
worst_ks, worst_diam = -math.inf, math.inf
for _ in range(10):
    n = int(rng.integers(4, 9))
    g = random_connected_graph(n, rng)
    bundle = attach_gauge(g, 2, "explicit",
                          unitaries={e: random_unitary(rng, 2) for e in g.edges})
    z = rng.standard_normal((n, 2, 2)) + 1j * rng.standard_normal((n, 2, 2))
    V = PotentialField(0.5 * (z + np.conj(np.swapaxes(z, 1, 2))))
    opV = assemble_operator(g, bundle, V)
    opw = assemble_operator(g, potential=PotentialField.scalar(V.min_eigenvalues().real))
    worst_ks = max(worst_ks, check_kato_simon(opV, opw, 1.0, 50, rng))
    worst_diam = min(worst_diam, check_diamagnetic_bottom(opV, opw))
print(f"worst Kato-Simon violation: {worst_ks:.2e}   (theory: <= 0)")
print(f"smallest diamagnetic margin: {worst_diam:.2e}   (theory: >= 0)")

print("\n== Hess-Schrader-Uhlenbrock direction on one instance ==")
res = check_hsu_direction(opV, opw, [0.1, 1.0, 10.0], 50, rng)
print(f"pointwise: {res['pointwise']:.2e}   bilinear: {res['bilinear']:.2e}")

print("\n== positivity improvement of a scalar semigroup ==")
g = random_connected_graph(9, rng)
op = assemble_operator(g, potential=PotentialField.scalar(rng.uniform(0, 1, 9)))
min_entry, gap, ground = check_positivity(op, 0.7)
print(f"min entry of e^-tH: {min_entry:.3e} > 0;  spectral gap {gap:.3e};"
      f"  ground state sign-definite: {bool(np.all(ground > 0))}")

print("\n== localized smoothing bounds ==")
free = assemble_operator(g)
U = list(range(4))
for pair in [(1, math.inf), (1, 2), (2, math.inf)]:
    print(f"(q1,q2) = {pair}: slack {check_lq_bounds(free, 0.7, U, *pair):.3e} (>= 0)")
