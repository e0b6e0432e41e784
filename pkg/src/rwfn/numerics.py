"""Dense array helpers and deterministic random sampling.

All randomness in the package flows through numpy's PCG64 generator seeded
from a single 64-bit integer, so a seed fully determines every random block
drawn anywhere. Normal draws use numpy's standard_normal (ziggurat);
independent child streams come from Generator.spawn (SeedSequence-based).
"""

from __future__ import annotations

import numpy as np

# Recorded in serialized model files so encoders are reconstructible from
# seed alone; any change to the sampling pipeline must bump this id.
PRNG_ID = "numpy-pcg64/standard_normal-ziggurat/v1"


def make_rng(seed: int) -> np.random.Generator:
    """Deterministic generator for a 64-bit seed."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def split_rng(rng: np.random.Generator, n: int) -> list[np.random.Generator]:
    """Derive n independent child streams from rng."""
    return rng.spawn(n)


def matvec(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Matrix-vector product with explicit shape validation."""
    m = np.asarray(m, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if m.ndim != 2 or v.ndim != 1:
        raise ValueError(f"matvec expects a 2-d matrix and 1-d vector, got {m.ndim}-d and {v.ndim}-d")
    if m.shape[1] != v.shape[0]:
        raise ValueError(f"dimension mismatch: matrix is {m.shape}, vector has length {v.shape[0]}")
    return m @ v


def sample_normal_matrix(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """rows x cols matrix of i.i.d. standard normal entries."""
    if rows < 1 or cols < 1:
        raise ValueError(f"matrix dims must be >= 1, got {rows}x{cols}")
    return rng.standard_normal((rows, cols))


def sample_uniform_vector(n: int, lo: float, hi: float, rng: np.random.Generator) -> np.ndarray:
    """Length-n vector of i.i.d. uniform entries in [lo, hi)."""
    if not lo < hi:
        raise ValueError(f"uniform bounds must satisfy lo < hi, got [{lo}, {hi})")
    if n < 1:
        raise ValueError(f"vector length must be >= 1, got {n}")
    return rng.uniform(lo, hi, size=n)


def sample_sparse_binary(in_dim: int, width: int, fan_in: int, rng: np.random.Generator) -> np.ndarray:
    """in_dim x width binary matrix; each column has exactly fan_in ones.

    Column indices are drawn without replacement, so no hidden unit sees
    the same input twice.
    """
    if not 1 <= fan_in < in_dim:
        raise ValueError(f"fan_in must satisfy 1 <= fan_in < in_dim, got fan_in={fan_in}, in_dim={in_dim}")
    if width < 1:
        raise ValueError(f"width must be >= 1, got {width}")
    # argpartition of a uniform draw = fan_in indices without replacement per column
    keys = rng.random((width, in_dim))
    picks = np.argpartition(keys, fan_in - 1, axis=1)[:, :fan_in]
    out = np.zeros((in_dim, width), dtype=np.float64)
    cols = np.repeat(np.arange(width), fan_in)
    out[picks.ravel(), cols] = 1.0
    return out
