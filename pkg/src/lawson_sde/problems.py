"""Benchmark problems: nonlinear Kubo oscillator, stochastic rigid body, stochastic FPUT.

The nonlinear maps are small callable classes rather than closures so that a
problem can be pickled and shipped to worker processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import QuadraticInvariant, SplitSde, ZeroMap

# Planar rotation generator used by the Kubo oscillator.
S2 = np.array([[0.0, -1.0], [1.0, 0.0]])
# Rigid-body generator: rotation in the (X1, X2) plane.
S3 = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])


class SumPower:
    """U(x) = coef * (x1 + x2)**power."""

    def __init__(self, coef: float, power: int):
        self.coef = coef
        self.power = power

    def __call__(self, x) -> float:
        return self.coef * (x[0] + x[1]) ** self.power

    def __repr__(self):
        return f"SumPower({self.coef!r}, {self.power!r})"


class KuboNonlinearity:
    """g(x) = U(x) S x, tangent to circles for any scalar U."""

    def __init__(self, U):
        self.U = U

    def __call__(self, x):
        u = self.U(x)
        return np.array([-u * x[1], u * x[0]])


@dataclass(frozen=True)
class KuboParams:
    """Per-channel frequencies omega_m and scalar functions U_m (``None`` means zero)."""

    omegas: tuple[float, ...]
    U: tuple = ()
    x0: tuple[float, float] = (1.0, 0.0)
    t0: float = 0.0
    T: float = 1.0

    @property
    def M(self) -> int:
        return len(self.omegas) - 1

    @classmethod
    def example(cls, omega: float = 10.0, sigma: float = 10.0, **kw) -> KuboParams:
        """Two-noise setup with U_0 = (x1+x2)^5/5, U_1 = 0, U_2 = (x1+x2)^3/3."""
        return cls(
            omegas=(omega, sigma, 0.0),
            U=(SumPower(1 / 5, 5), None, SumPower(1 / 3, 3)),
            **kw,
        )

    @classmethod
    def linear(cls, omega: float = 10.0, sigma: float = 10.0, **kw) -> KuboParams:
        return cls(omegas=(omega, sigma), U=(None, None), **kw)


def build_kubo(params: KuboParams) -> SplitSde:
    U = params.U or (None,) * len(params.omegas)
    if len(U) != len(params.omegas):
        raise ValueError("need one U_m per frequency omega_m")
    A = [w * S2 for w in params.omegas]
    g = [ZeroMap() if u is None else KuboNonlinearity(u) for u in U]
    return SplitSde(A, g, params.x0, params.t0, params.T, name="kubo")


def kubo_invariant() -> QuadraticInvariant:
    return QuadraticInvariant(np.eye(2))


def kubo_linear_solution(params: KuboParams, W_end: np.ndarray, t_end: float) -> np.ndarray:
    """Exact state of the linear Kubo oscillator: rotation by sum_m omega_m W_m."""
    angle = params.omegas[0] * (t_end - params.t0) + float(np.dot(params.omegas[1:], W_end))
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]]) @ np.asarray(params.x0, dtype=float)


class EulerTerm:
    """Free rigid-body term: skew matrix built from X_k / I_k applied to X."""

    def __init__(self, inertia: tuple[float, float, float]):
        self.inertia = tuple(float(i) for i in inertia)

    def __call__(self, x):
        a1, a2, a3 = x[0] / self.inertia[0], x[1] / self.inertia[1], x[2] / self.inertia[2]
        return np.array([
            a3 * x[1] - a2 * x[2],
            -a3 * x[0] + a1 * x[2],
            a2 * x[0] - a1 * x[1],
        ])


@dataclass(frozen=True)
class RigidBodyParams:
    omega: float = 1.0
    sigma: float = 1.0
    inertia: tuple[float, float, float] = (2.0, 1.0, 2.0 / 3.0)
    x0: tuple[float, float, float] = field(default=(math.cos(1.1), 0.0, math.sin(1.1)))
    t0: float = 0.0
    T: float = 1.0


def build_rigid_body(params: RigidBodyParams) -> SplitSde:
    A = [params.omega * S3, params.sigma * S3]
    g = [EulerTerm(params.inertia), ZeroMap()]
    return SplitSde(A, g, params.x0, params.t0, params.T, name="rigid-body")


def rigid_body_invariant() -> QuadraticInvariant:
    return QuadraticInvariant(np.eye(3))


class FputForce:
    """Cubic soft-spring forces; components 7..12 act on the momenta.

    State order is (x_{0,1..3}, x_{1,1..3}, y_{0,1..3}, y_{1,1..3}).
    """

    def __call__(self, x):
        g1 = (x[0] - x[3]) ** 3
        g2 = (x[1] - x[4] - x[0] - x[3]) ** 3
        g3 = (x[2] - x[5] - x[1] - x[4]) ** 3
        g4 = (x[2] + x[5]) ** 3
        out = np.zeros(12)
        out[6] = -g1 + g2
        out[7] = -g2 + g3
        out[8] = -g4 - g3
        out[9] = g1 + g2
        out[10] = g2 + g3
        out[11] = -g4 + g3
        return out


@dataclass(frozen=True)
class FputParams:
    omega: float = 50.0
    sigma: float = 0.02
    x0: tuple[float, ...] | None = None
    t0: float = 0.0
    T: float = 1.0
    m: int = 3

    def __post_init__(self):
        if self.m != 3:
            raise ValueError("only the three-spring-pair system is supported")

    def initial_state(self) -> np.ndarray:
        if self.x0 is not None:
            return np.asarray(self.x0, dtype=float)
        return fput_default_initial(self.omega)


def fput_default_initial(omega: float) -> np.ndarray:
    """x_{0,1} = 1, y_{0,1} = 1, x_{1,1} = 1/omega, y_{1,1} = 1, rest zero."""
    x = np.zeros(12)
    x[0] = 1.0
    x[3] = 1.0 / omega
    x[6] = 1.0
    x[9] = 1.0
    return x


def fput_linear_part(omega: float) -> np.ndarray:
    A = np.zeros((12, 12))
    A[np.arange(6), np.arange(6, 12)] = 1.0
    A[np.arange(9, 12), np.arange(3, 6)] = -omega**2
    return A


def build_fput(params: FputParams) -> SplitSde:
    A0 = fput_linear_part(params.omega)
    return SplitSde(
        [A0, params.sigma * A0],
        [FputForce(), ZeroMap()],
        params.initial_state(),
        params.t0,
        params.T,
        name="fput",
    )


def oscillatory_energy(j: int, x, omega: float) -> float:
    """Energy 1/2 (y_{1,j}^2 + omega^2 x_{1,j}^2) of stiff spring j (1-based)."""
    if not 1 <= j <= 3:
        raise ValueError("spring index must be 1, 2 or 3")
    x = np.asarray(x)
    return 0.5 * (x[8 + j] ** 2 + omega**2 * x[2 + j] ** 2)


def oscillatory_energies(states: np.ndarray, omega: float) -> np.ndarray:
    """Stiff-spring energies for a batch of states; shape (..., 3)."""
    states = np.asarray(states)
    return 0.5 * (states[..., 9:12] ** 2 + omega**2 * states[..., 3:6] ** 2)


def fput_hamiltonian(x, omega: float) -> float:
    x = np.asarray(x, dtype=float)
    x0, x1, y0, y1 = x[0:3], x[3:6], x[6:9], x[9:12]
    kinetic = 0.5 * (np.sum(y0**2) + np.sum(y1**2))
    stiff = 0.5 * omega**2 * np.sum(x1**2)
    ends = 0.25 * ((x0[0] - x1[0]) ** 4 + (x0[2] + x1[2]) ** 4)
    inner = 0.25 * sum((x0[i + 1] - x1[i + 1] - x0[i] - x1[i]) ** 4 for i in range(2))
    return float(kinetic + stiff + ends + inner)


PROBLEMS = ("kubo", "rigid-body", "fput")
