"""Reproducible Brownian increments on dyadic grids.

Every fine increment is addressable by ``(seed, channel, index)``: a Philox
counter-based stream keyed on ``(seed, channel)`` supplies one 64-bit word per
index, which is mapped to a standard normal by inverse CDF.  Coarser grids are
built by repeated pairwise summation, so coarsening is exactly transitive.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import ndtri

# Per-channel increment cap; 2**24 float64 values is 128 MiB.
MAX_INCREMENTS = 2**24

_WORDS_PER_BLOCK = 4  # Philox4x64 yields four 64-bit words per counter value
_MAGIC = b"WGRD"
_HEADER = struct.Struct("<4sIddIIQ")  # magic, version, t0, T, levels, M, seed
_VERSION = 1


class GridTooLarge(ValueError):
    pass


def _standard_normals(seed: int, channel: int, start: int, count: int) -> np.ndarray:
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, channel], dtype=np.uint64)
    bitgen = np.random.Philox(key=key)
    if start // _WORDS_PER_BLOCK:
        bitgen.advance(start // _WORDS_PER_BLOCK)
    skip = start % _WORDS_PER_BLOCK
    words = bitgen.random_raw(skip + count)[skip:]
    # 53-bit uniforms strictly inside (0, 1).
    u = ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)


def increment(seed: int, channel: int, index: int, levels: int, t0: float, T: float) -> float:
    """Single fine increment ``dW_channel`` number ``index`` (channels start at 1)."""
    h = (T - t0) / 2**levels
    return float(_standard_normals(seed, channel, index, 1)[0] * np.sqrt(h))


@dataclass(frozen=True, eq=False)
class WienerGrid:
    """Brownian increments for channels 1..M on ``2**levels`` uniform steps.

    Channel 0 is the deterministic clock ``W_0(t) = t`` and is never stored;
    ``dW`` returns it as the first column.
    """

    t0: float
    T: float
    levels: int
    M: int
    seed: int
    increments: np.ndarray = field(repr=False)  # shape (M, 2**levels)

    def __post_init__(self):
        if self.increments.shape != (self.M, 2**self.levels):
            raise ValueError(
                f"increments have shape {self.increments.shape}, expected {(self.M, 2**self.levels)}"
            )
        self.increments.setflags(write=False)

    @property
    def n_steps(self) -> int:
        return 2**self.levels

    @property
    def h(self) -> float:
        return (self.T - self.t0) / 2**self.levels

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.n_steps + 1)

    def dW(self) -> np.ndarray:
        """Increments including channel 0, shape ``(n_steps, M + 1)``."""
        out = np.empty((self.n_steps, self.M + 1))
        out[:, 0] = self.h
        out[:, 1:] = self.increments.T
        return out

    def W(self) -> np.ndarray:
        """Path values ``W_m(t_n) - W_m(t0)`` for channels 1..M, shape ``(M, n_steps + 1)``."""
        path = np.zeros((self.M, self.n_steps + 1))
        np.cumsum(self.increments, axis=1, out=path[:, 1:])
        return path

    def coarsen(self, target_level: int) -> WienerGrid:
        return coarsen(self, target_level)

    def __eq__(self, other):
        if not isinstance(other, WienerGrid):
            return NotImplemented
        return (
            (self.t0, self.T, self.levels, self.M, self.seed)
            == (other.t0, other.T, other.levels, other.M, other.seed)
            and np.array_equal(self.increments, other.increments)
        )


def generate(t0: float, T: float, levels: int, M: int, seed: int,
             max_increments: int = MAX_INCREMENTS) -> WienerGrid:
    if not T > t0:
        raise ValueError(f"need T > t0, got t0={t0}, T={T}")
    if levels < 0 or M < 0:
        raise ValueError("levels and M must be non-negative")
    n = 2**levels
    if n > max_increments:
        raise GridTooLarge(f"2**{levels} increments per channel exceeds the budget of {max_increments}")
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    scale = np.sqrt((T - t0) / n)
    inc = np.empty((M, n))
    for m in range(M):
        inc[m] = _standard_normals(seed, m + 1, 0, n) * scale
    return WienerGrid(float(t0), float(T), levels, M, seed, inc)


def coarsen(grid: WienerGrid, target_level: int) -> WienerGrid:
    if target_level > grid.levels or target_level < 0:
        raise ValueError(f"cannot coarsen level {grid.levels} grid to level {target_level}")
    inc = grid.increments
    for _ in range(grid.levels - target_level):
        inc = inc[:, 0::2] + inc[:, 1::2]
    if inc is grid.increments:
        return grid
    return WienerGrid(grid.t0, grid.T, target_level, grid.M, grid.seed, inc)


def dump(grid: WienerGrid, path) -> None:
    header = _HEADER.pack(_MAGIC, _VERSION, grid.t0, grid.T, grid.levels, grid.M, grid.seed)
    payload = np.ascontiguousarray(grid.increments, dtype="<f8").tobytes()
    Path(path).write_bytes(header + payload)


def load(path) -> WienerGrid:
    raw = Path(path).read_bytes()
    magic, version, t0, T, levels, M, seed = _HEADER.unpack_from(raw)
    if magic != _MAGIC or version != _VERSION:
        raise ValueError(f"{path}: not a Wiener grid file")
    inc = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    return WienerGrid(t0, T, levels, M, seed, inc.reshape(M, 2**levels))
