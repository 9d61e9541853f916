import math

import numpy as np
import pytest

from schrokato import geometry, kernels, lattice


@pytest.fixture(scope="session")
def spaces():
    return {
        "e1": geometry.ModelSpace.euclidean(1),
        "e2": geometry.ModelSpace.euclidean(2),
        "e3": geometry.ModelSpace.euclidean(3),
        "h2": geometry.ModelSpace.hyperbolic(2),
        "h3": geometry.ModelSpace.hyperbolic(3),
        "interval_pi": geometry.ModelSpace.interval(math.pi),
    }


@pytest.fixture(scope="session")
def kernel_bank(spaces):
    return {name: kernels.make_kernel(sp) for name, sp in spaces.items()}


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_unitary(rng, size):
    z = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_hermitian(rng, n, rank, scale=1.0):
    z = rng.standard_normal((n, rank, rank)) + 1j * rng.standard_normal((n, rank, rank))
    return scale * 0.5 * (z + np.conj(np.swapaxes(z, 1, 2)))


def random_bundle_instance(rng, n_max=8, rank=2, v_scale=1.0):
    """Random graph + unitary transports + Hermitian V, with the scalar floor w."""
    n = int(rng.integers(4, n_max + 1))
    graph = lattice.random_connected_graph(n, rng)
    unitaries = {e: random_unitary(rng, rank) for e in graph.edges}
    bundle = lattice.attach_gauge(graph, rank, "explicit", unitaries=unitaries)
    V = lattice.PotentialField(random_hermitian(rng, n, rank, v_scale))
    w = lattice.PotentialField.scalar(V.min_eigenvalues().real)
    opV = lattice.assemble_operator(graph, bundle, V)
    opw = lattice.assemble_operator(graph, potential=w)
    return graph, bundle, V, opV, opw
