"""
Seeded instance generators for benchmarks and tests.

All randomness comes from one 64-bit seed fed to the counter-based Philox
bit generator, so a (generator, d, k, m, seed) tuple always yields the same
instance.
"""
import numpy as np

from .exceptions import InvalidInstance
from .instances import InstanceFile


def make_rng(seed):
    return np.random.Generator(np.random.Philox(int(seed)))


def gaussian(d, k, m, seed):
    """m standard normal vectors in R^d."""
    return make_rng(seed).standard_normal((m, d))


def basis_copies(d, k, m=None, seed=None):
    """m // d copies of each standard basis vector (two copies when m is omitted)."""
    copies = 2 if m is None else max(1, m // d)
    return np.tile(np.eye(d), (copies, 1))


def clustered(d, k, m, seed, spread=0.1):
    """m vectors scattered around d random directions, assigned round robin."""
    rng = make_rng(seed)
    centers = rng.standard_normal((d, d))
    return centers[np.arange(m) % d] + spread * rng.standard_normal((m, d))


GENERATORS = {
    'gaussian': gaussian,
    'basis-copies': basis_copies,
    'clustered': clustered,
}


def generate(name, d, k, m=None, seed=0, objective=None):
    try:
        build = GENERATORS[name]
    except KeyError:
        raise InvalidInstance(f"Unknown generator {name!r}; choose from {', '.join(GENERATORS)}")
    if k < d:
        raise InvalidInstance(f"Budget k={k} is below the dimension d={d}")
    if m is None and name != 'basis-copies':
        raise InvalidInstance(f"Generator {name!r} needs the number of vectors m")
    vectors = build(d, k, m, seed)
    return InstanceFile(d=d, k=k, vectors=vectors, objective=objective)
