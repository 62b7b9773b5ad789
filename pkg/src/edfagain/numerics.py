"""Numeric substrate: dB/mW conversions, seeded random streams, moving-average
smoothing, and dimension-checked dense matrix helpers.

Everything here is float64 and deterministic. Random streams are keyed by a
64-bit seed plus a label path, so independent subsystems (dataset generation,
weight init, shuffling) never share or interleave draws.
"""

from __future__ import annotations

import hashlib
from typing import Sequence

import numpy as np

__all__ = [
    "dbm_to_mw",
    "mw_to_dbm",
    "gaussian",
    "moving_average",
    "matmul",
    "add",
    "scale",
    "transpose",
    "RngStream",
    "subseed",
]


def dbm_to_mw(p):
    """Convert power in dBm to mW: 10^(p/10). Elementwise on arrays."""
    return 10.0 ** (np.asarray(p, dtype=float) / 10.0) if np.ndim(p) else 10.0 ** (float(p) / 10.0)


def mw_to_dbm(p):
    """Convert power in mW to dBm: 10*log10(p). Raises on non-positive input."""
    arr = np.asarray(p, dtype=float)
    if np.any(arr <= 0.0):
        raise ValueError("power must be > 0 mW to convert to dBm")
    out = 10.0 * np.log10(arr)
    return float(out) if np.ndim(p) == 0 else out


def gaussian(rng: "RngStream", mean: float, sigma: float) -> float:
    """One draw from N(mean, sigma^2). sigma = 0 returns mean exactly."""
    if sigma < 0.0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    return float(rng.normal(mean, sigma))


def moving_average(values, window: int) -> np.ndarray:
    """Centered moving average with shrinking (clamped) edge windows.

    window must be odd and within [1, len(values)]. Near the edges the window
    is clipped to valid indices and the mean taken over the shorter span, so
    the output has the same length as the input and band edges do not roll
    off toward zero.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D sequence, got shape {x.shape}")
    n = x.size
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    if window > n:
        raise ValueError(f"window {window} exceeds sequence length {n}")
    if window == 1:
        return x.copy()
    half = (window - 1) // 2
    csum = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half, n - 1) + 1
    return (csum[hi] - csum[lo]) / (hi - lo)


def matmul(a, b) -> np.ndarray:
    """Matrix product with an explicit inner-dimension check."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"inner dimensions disagree: {a.shape} @ {b.shape}")
    return a @ b


def add(a, b) -> np.ndarray:
    """Elementwise sum; shapes must match exactly (no broadcasting)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a + b


def scale(a, s: float) -> np.ndarray:
    """Multiply every entry by scalar s."""
    return np.asarray(a, dtype=float) * float(s)


def transpose(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"transpose expects a 2-D matrix, got shape {a.shape}")
    return a.T


def _key128(seed: int, labels: Sequence[str]) -> np.ndarray:
    # Length-prefixed encoding so ("a:b",) and ("a", "b") never collide.
    h = hashlib.sha256()
    h.update(int(seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little"))
    for label in labels:
        raw = str(label).encode("utf-8")
        h.update(len(raw).to_bytes(4, "little"))
        h.update(raw)
    return np.frombuffer(h.digest()[:16], dtype=np.uint64)


def subseed(seed: int, *labels) -> int:
    """Derive a stable 63-bit integer seed from (seed, labels)."""
    return int(_key128(seed, [str(l) for l in labels])[0] & 0x7FFFFFFFFFFFFFFF)


class RngStream:
    """Deterministic random stream named by a 64-bit seed and a label path.

    Backed by numpy's counter-based Philox generator keyed with
    SHA-256(seed, labels), so every (seed, labels) pair is an independent,
    reproducible stream with period far beyond 2^64. The generator choice is
    frozen: changing it would change every dataset byte downstream.

    A stream is single-owner mutable state; parallel workers must each derive
    their own child instead of sharing one.
    """

    def __init__(self, seed: int, labels: Sequence[str] = ()):
        self.seed = int(seed)
        self.labels = tuple(str(l) for l in labels)
        self._gen = np.random.Generator(np.random.Philox(key=_key128(self.seed, self.labels)))

    def child(self, *labels) -> "RngStream":
        """Independent stream for (seed, self.labels + labels). Pure: does not
        consume draws from self."""
        return RngStream(self.seed, self.labels + tuple(str(l) for l in labels))

    def normal(self, mean: float = 0.0, sigma: float = 1.0, size=None):
        if sigma < 0.0:
            raise ValueError(f"sigma must be >= 0, got {sigma}")
        return self._gen.normal(mean, sigma, size)

    def uniform(self, low: float, high: float, size=None):
        return self._gen.uniform(low, high, size)

    def integers(self, low: int, high=None, size=None):
        return self._gen.integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def pick(self, options):
        """Uniform choice from a sequence (by index, to keep the draw count
        independent of element type)."""
        return options[int(self._gen.integers(len(options)))]

    def __repr__(self):
        return f"RngStream(seed={self.seed}, labels={self.labels})"
