"""Split Stratonovich SDEs  dX = sum_m (A_m X + g_m(X)) o dW_m  with W_0(t) = t.

A problem keeps its linear parts ``A[m]`` and nonlinear maps ``g[m]`` apart so
the Lawson schemes can exponentiate the former.  ``resplit`` moves linear parts
into the nonlinear maps (drift-only or no splitting) without changing the
vector field.  The validators report, they never raise, so deliberately
"unsafe" configurations can still be run.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .linalg import DEFAULT_TOL, commutator

StateMap = Callable[[np.ndarray], np.ndarray]

DEFAULT_SAMPLES = 256
DEFAULT_BOX = 2.0


class ZeroMap:
    """g(x) = 0."""

    def __call__(self, x):
        return np.zeros_like(x)

    def __repr__(self):
        return "ZeroMap()"


class LinearMap:
    """x -> A x, used when a linear part is folded into the nonlinear term."""

    def __init__(self, A):
        self.A = np.asarray(A, dtype=float)

    def __call__(self, x):
        return self.A @ x


class MergedMap:
    """x -> A x + g(x)."""

    def __init__(self, A, g):
        self.A = np.asarray(A, dtype=float)
        self.g = g

    def __call__(self, x):
        return self.A @ x + self.g(x)


def is_zero_map(g) -> bool:
    return isinstance(g, ZeroMap)


class SplittingMode(enum.Enum):
    FULL = "full"
    DRIFT_ONLY = "drift-only"
    NONE = "none"


@dataclass(frozen=True)
class SplitSde:
    A: tuple[np.ndarray, ...]
    g: tuple[StateMap, ...]
    x0: np.ndarray
    t0: float = 0.0
    T: float = 1.0
    name: str = ""

    def __post_init__(self):
        A = tuple(np.array(a, dtype=float) for a in self.A)
        x0 = np.array(self.x0, dtype=float)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "g", tuple(self.g))
        object.__setattr__(self, "x0", x0)
        d = x0.shape[0]
        if len(A) != len(self.g) or not A:
            raise ValueError("need the same number (M + 1 >= 1) of linear parts and maps")
        for m, a in enumerate(A):
            if a.shape != (d, d):
                raise ValueError(f"A[{m}] has shape {a.shape}, expected {(d, d)}")
            a.setflags(write=False)
        x0.setflags(write=False)

    @property
    def d(self) -> int:
        return self.x0.shape[0]

    @property
    def M(self) -> int:
        return len(self.A) - 1

    def field(self, m: int, x) -> np.ndarray:
        """Full channel-m coefficient A_m x + g_m(x)."""
        return self.A[m] @ x + self.g[m](x)

    def with_initial(self, x0) -> SplitSde:
        return replace(self, x0=x0)


def _fold(p: SplitSde, channels: Sequence[int]) -> SplitSde:
    A = list(p.A)
    g = list(p.g)
    for m in channels:
        if not A[m].any():
            continue
        g[m] = LinearMap(A[m]) if is_zero_map(g[m]) else MergedMap(A[m], g[m])
        A[m] = np.zeros_like(A[m])
    return replace(p, A=tuple(A), g=tuple(g))


def resplit(p: SplitSde, mode: SplittingMode) -> SplitSde:
    if mode is SplittingMode.FULL:
        return p
    if mode is SplittingMode.DRIFT_ONLY:
        return _fold(p, range(1, p.M + 1))
    return _fold(p, range(p.M + 1))


@dataclass
class CommutativityReport:
    max_residual: float
    failing_pairs: list[tuple[int, int]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failing_pairs


def validate_commutativity(p: SplitSde, tol: float = DEFAULT_TOL) -> CommutativityReport:
    worst = 0.0
    failing = []
    for l, k in itertools.combinations(range(p.M + 1), 2):
        res = float(np.abs(commutator(p.A[l], p.A[k])).max(initial=0.0))
        worst = max(worst, res)
        if res > tol:
            failing.append((l, k))
    return CommutativityReport(worst, failing)


@dataclass
class AssumptionReport:
    """Largest violation of each named check; a check passes if it is <= tol."""

    violations: dict[str, float]
    tol: float

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.violations.values())

    def failed_checks(self) -> list[str]:
        return [k for k, v in self.violations.items() if v > self.tol]

    def lines(self) -> list[str]:
        return [
            f"{name}: max violation {v:.3e} {'ok' if v <= self.tol else 'FAIL'}"
            for name, v in self.violations.items()
        ]


def _sample_states(d: int, count: int, seed: int, box: float) -> np.ndarray:
    return np.random.default_rng(seed).uniform(-box, box, size=(count, d))


def validate_quadratic_assumptions(p: SplitSde, D, tol: float = DEFAULT_TOL,
                                   sample_count: int = DEFAULT_SAMPLES, seed: int = 0,
                                   box: float = DEFAULT_BOX) -> AssumptionReport:
    """Check skew-symmetry of A_m, [A_m, D] = 0, and x^T D g_m(x) = 0 on sampled states.

    The last check is probabilistic: it only sees ``sample_count`` states drawn
    uniformly from ``[-box, box]^d``.
    """
    D = np.asarray(D, dtype=float)
    if not np.array_equal(D, D.T):
        raise ValueError("D must be symmetric")
    skew = max(float(np.abs(a + a.T).max(initial=0.0)) for a in p.A)
    comm = max(float(np.abs(commutator(a, D)).max(initial=0.0)) for a in p.A)
    tangent = 0.0
    for x in _sample_states(p.d, sample_count, seed, box):
        for g in p.g:
            tangent = max(tangent, abs(float(x @ D @ g(x))))
    return AssumptionReport({"skew": skew, "commutes_with_D": comm, "tangential_g": tangent}, tol)


def validate_linear_assumptions(p: SplitSde, r, tol: float = DEFAULT_TOL,
                                sample_count: int = DEFAULT_SAMPLES, seed: int = 0,
                                box: float = DEFAULT_BOX) -> AssumptionReport:
    r = np.asarray(r, dtype=float)
    null = max(float(np.abs(r @ a).max(initial=0.0)) for a in p.A)
    orth = 0.0
    for x in _sample_states(p.d, sample_count, seed, box):
        for g in p.g:
            orth = max(orth, abs(float(r @ g(x))))
    return AssumptionReport({"r_in_left_null_space": null, "r_orthogonal_g": orth}, tol)


@dataclass(frozen=True)
class QuadraticInvariant:
    D: np.ndarray

    def __post_init__(self):
        D = np.array(self.D, dtype=float)
        if D.ndim != 2 or not np.array_equal(D, D.T):
            raise ValueError("quadratic invariant matrix must be symmetric")
        object.__setattr__(self, "D", D)

    def __call__(self, x) -> float:
        x = np.asarray(x)
        return float(x @ self.D @ x)

    def along(self, states: np.ndarray) -> np.ndarray:
        return np.einsum("ni,ij,nj->n", states, self.D, states)


@dataclass(frozen=True)
class LinearInvariant:
    r: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "r", np.array(self.r, dtype=float))

    def __call__(self, x) -> float:
        return float(self.r @ np.asarray(x))

    def along(self, states: np.ndarray) -> np.ndarray:
        return states @ self.r


InvariantSpec = QuadraticInvariant | LinearInvariant


def evaluate_invariant(spec: InvariantSpec, x) -> float:
    return spec(x)
