"""One-step integrators for split Stratonovich SDEs.

With ``dL = sum_m A_m dW_m`` and ``E = exp(dL)`` the Lawson steps are

    trapezoidal:  Y1 = E Y0 + (E G(Y0) + G(Y1)) / 2
    midpoint:     Y1 = E Y0 + E^{1/2} G((E^{1/2} Y0 + E^{-1/2} Y1) / 2)

where ``G(x) = sum_m g_m(x) dW_m``.  With every ``A_m = 0`` they collapse onto
the plain trapezoidal and implicit midpoint rules; the code keeps the
arithmetic in the same order so that the collapse is exact to the bit.

Implicit equations are solved by a fixed-point iteration.  The default
``"chord"`` solver preconditions the iteration with a finite-difference
Jacobian taken once per step (simplified Newton); ``"picard"`` is the plain,
optionally damped, iteration.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .brownian import WienerGrid
from .linalg import expm
from .model import SplitSde, SplittingMode, is_zero_map, resplit, validate_commutativity

_FD_EPS = np.sqrt(np.finfo(float).eps)
# Chord iterations retake the Jacobian when one step shrinks the residual by less than this.
_REFRESH_RATIO = 0.1


class Scheme(str, enum.Enum):
    MIDPOINT = "Midpoint"
    TRAPEZOIDAL = "Trapezoidal"
    TDSL = "TDSL"
    TFSL = "TFSL"
    MDSL = "MDSL"
    MFSL = "MFSL"
    EXP_EULER_FWD = "ExpEulerFwd"
    EXP_EULER_BWD = "ExpEulerBwd"

    @classmethod
    def parse(cls, name: str | Scheme) -> Scheme:
        if isinstance(name, Scheme):
            return name
        for s in cls:
            if s.value.lower() == name.lower():
                return s
        raise ValueError(f"unknown scheme {name!r}; choose from {[s.value for s in cls]}")


class NonConvergence(RuntimeError):
    def __init__(self, iterations: int, residual: float, step: int | None = None):
        self.iterations = iterations
        self.residual = residual
        self.step = step
        where = "" if step is None else f" at step {step}"
        super().__init__(
            f"implicit solve failed{where}: residual {residual:.3e} after {iterations} iterations"
        )


@dataclass(frozen=True)
class StepperConfig:
    scheme: Scheme = Scheme.MFSL
    fp_tol: float = 1e-12
    fp_max_iters: int = 100
    solver: str = "chord"
    damping: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if not self.fp_tol > 0:
            raise ValueError("fp_tol must be positive")
        if self.fp_max_iters < 1:
            raise ValueError("fp_max_iters must be at least 1")
        if self.solver not in ("chord", "picard"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n_steps + 1, d)
    iterations: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def solve_fixed_point(phi, z0: np.ndarray, cfg: StepperConfig) -> tuple[np.ndarray, int]:
    """Solve ``z = phi(z)`` until the max-norm residual drops to ``cfg.fp_tol``.

    Returns the solution after one final update from the accepted iterate, and
    the number of iterations used.  A diverging iteration surfaces as
    ``NonConvergence`` rather than as floating-point warnings.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        return _fixed_point(phi, z0, cfg)


def _fixed_point(phi, z, cfg):
    fz = phi(z)
    r = fz - z
    res = np.abs(r).max()
    jinv = None
    it = 0
    while res > cfg.fp_tol:
        if it >= cfg.fp_max_iters or not np.isfinite(res):
            raise NonConvergence(it, float(res))
        if cfg.solver == "chord":
            if jinv is None:
                try:
                    jinv = _chord_inverse(phi, z, fz)
                except np.linalg.LinAlgError:
                    raise NonConvergence(it, float(res)) from None
            z = z + jinv @ r
        else:
            z = z + cfg.damping * r
        fz = phi(z)
        r = fz - z
        prev, res = res, np.abs(r).max()
        if res > _REFRESH_RATIO * prev:
            jinv = None  # slow contraction: retake the Jacobian at the new iterate
        it += 1
    if jinv is not None:
        return z + jinv @ r, it
    if cfg.solver == "chord" and it:
        return z + _chord_inverse(phi, z, fz) @ r, it
    if cfg.damping != 1.0:
        return z + cfg.damping * r, it
    return fz, it


def _chord_inverse(phi, z, fz) -> np.ndarray:
    d = z.shape[0]
    jac = np.eye(d)
    for j in range(d):
        dz = _FD_EPS * max(1.0, abs(z[j]))
        zp = z.copy()
        zp[j] += dz
        jac[:, j] -= (phi(zp) - fz) / dz
    return np.linalg.inv(jac)


def _noise_sum(p: SplitSde, x: np.ndarray, dW: np.ndarray, with_linear: bool) -> np.ndarray:
    """sum_m g_m(x) dW_m, or sum_m (A_m x + g_m(x)) dW_m when ``with_linear``."""
    acc = np.zeros_like(x)
    for m, g in enumerate(p.g):
        if with_linear and p.A[m].any():
            term = p.A[m] @ x if is_zero_map(g) else p.A[m] @ x + g(x)
        elif is_zero_map(g):
            continue
        else:
            term = g(x)
        acc = acc + term * dW[m]
    return acc


def _linear_exponent(p: SplitSde, dW: np.ndarray) -> np.ndarray:
    dL = p.A[0] * dW[0]
    for m in range(1, p.M + 1):
        dL = dL + p.A[m] * dW[m]
    return dL


def step_midpoint(p: SplitSde, y: np.ndarray, dW, cfg: StepperConfig) -> np.ndarray:
    """Implicit midpoint rule on the full field A_m x + g_m(x)."""
    return _step_midpoint(p, y, np.asarray(dW, dtype=float), cfg)[0]


def _step_midpoint(p, y, dW, cfg):
    def phi(z):
        return y + _noise_sum(p, (y + z) / 2, dW, True)

    return solve_fixed_point(phi, y, cfg)


def step_trapezoidal(p: SplitSde, y: np.ndarray, dW, cfg: StepperConfig) -> np.ndarray:
    """Implicit trapezoidal rule on the full field A_m x + g_m(x)."""
    return _step_trapezoidal(p, y, np.asarray(dW, dtype=float), cfg)[0]


def _step_trapezoidal(p, y, dW, cfg):
    f0 = _noise_sum(p, y, dW, True)

    def phi(z):
        return y + (f0 + _noise_sum(p, z, dW, True)) / 2

    return solve_fixed_point(phi, y, cfg)


def step_lawson_trapezoidal(p: SplitSde, y: np.ndarray, dW, cfg: StepperConfig) -> np.ndarray:
    return _step_lawson_trapezoidal(p, y, np.asarray(dW, dtype=float), cfg)[0]


def _step_lawson_trapezoidal(p, y, dW, cfg):
    E = expm(_linear_exponent(p, dW))
    ey = E @ y
    eg0 = E @ _noise_sum(p, y, dW, False)

    def phi(z):
        return ey + (eg0 + _noise_sum(p, z, dW, False)) / 2

    return solve_fixed_point(phi, ey, cfg)


def step_lawson_midpoint(p: SplitSde, y: np.ndarray, dW, cfg: StepperConfig) -> np.ndarray:
    return _step_lawson_midpoint(p, y, np.asarray(dW, dtype=float), cfg)[0]


def _step_lawson_midpoint(p, y, dW, cfg):
    dL = _linear_exponent(p, dW)
    half = expm(dL / 2)
    back = expm(-dL / 2)
    ey = (half @ half) @ y
    hy = half @ y

    def phi(z):
        return ey + half @ _noise_sum(p, (hy + back @ z) / 2, dW, False)

    return solve_fixed_point(phi, ey, cfg)


def step_exp_euler_fwd(p: SplitSde, y: np.ndarray, dW, cfg: StepperConfig | None = None) -> np.ndarray:
    """Explicit exponential Euler: exp(dL) (y + G(y))."""
    dW = np.asarray(dW, dtype=float)
    E = expm(_linear_exponent(p, dW))
    return E @ y + E @ _noise_sum(p, y, dW, False)


def step_exp_euler_bwd(p: SplitSde, y: np.ndarray, dW, cfg: StepperConfig) -> np.ndarray:
    """Implicit exponential Euler: z = exp(dL) y + G(z)."""
    return _step_exp_euler_bwd(p, y, np.asarray(dW, dtype=float), cfg)[0]


def _step_exp_euler_bwd(p, y, dW, cfg):
    ey = expm(_linear_exponent(p, dW)) @ y

    def phi(z):
        return ey + _noise_sum(p, z, dW, False)

    return solve_fixed_point(phi, ey, cfg)


def _step_exp_euler_fwd(p, y, dW, cfg):
    return step_exp_euler_fwd(p, y, dW), 0


# scheme -> (splitting applied before stepping, stepper returning (state, iterations))
_SCHEMES = {
    Scheme.MIDPOINT: (SplittingMode.NONE, _step_midpoint),
    Scheme.TRAPEZOIDAL: (SplittingMode.NONE, _step_trapezoidal),
    Scheme.TDSL: (SplittingMode.DRIFT_ONLY, _step_lawson_trapezoidal),
    Scheme.TFSL: (SplittingMode.FULL, _step_lawson_trapezoidal),
    Scheme.MDSL: (SplittingMode.DRIFT_ONLY, _step_lawson_midpoint),
    Scheme.MFSL: (SplittingMode.FULL, _step_lawson_midpoint),
    Scheme.EXP_EULER_FWD: (SplittingMode.FULL, _step_exp_euler_fwd),
    Scheme.EXP_EULER_BWD: (SplittingMode.FULL, _step_exp_euler_bwd),
}

LAWSON_SCHEMES = (Scheme.TDSL, Scheme.TFSL, Scheme.MDSL, Scheme.MFSL)
COMPARED_SCHEMES = (Scheme.TDSL, Scheme.TFSL, Scheme.MDSL, Scheme.MFSL, Scheme.MIDPOINT)


def splitting_for(scheme: Scheme | str) -> SplittingMode:
    return _SCHEMES[Scheme.parse(scheme)][0]


def prepare(p: SplitSde, scheme: Scheme | str) -> SplitSde:
    """Problem as seen by ``scheme`` (linear parts moved per its splitting)."""
    return resplit(p, splitting_for(scheme))


def integrate(p: SplitSde, grid: WienerGrid, level: int, cfg: StepperConfig,
              n_steps: int | None = None, check_commutativity: bool = True) -> Trajectory:
    """Run ``cfg.scheme`` over the level-``level`` coarsening of ``grid``.

    ``n_steps`` stops early (used when a padded dyadic grid outlasts the run).
    ``NonConvergence`` propagates with its ``step`` attribute set.
    """
    if level > grid.levels:
        raise ValueError(f"level {level} is finer than the grid (level {grid.levels})")
    if grid.M != p.M:
        raise ValueError(f"grid has {grid.M} noise channels, problem has {p.M}")
    mode, stepper = _SCHEMES[cfg.scheme]
    q = resplit(p, mode)
    if check_commutativity and not validate_commutativity(q).passed:
        raise ValueError("linear parts do not commute; Lawson exponential is not exact")
    coarse = grid.coarsen(level)
    dW = coarse.dW()
    n = coarse.n_steps if n_steps is None else n_steps
    if n > coarse.n_steps:
        raise ValueError(f"requested {n} steps, grid has {coarse.n_steps}")
    states = np.empty((n + 1, p.d))
    iters = np.zeros(n, dtype=int)
    states[0] = y = q.x0
    for k in range(n):
        try:
            y, iters[k] = stepper(q, y, dW[k], cfg)
        except NonConvergence as exc:
            raise NonConvergence(exc.iterations, exc.residual, k) from None
        states[k + 1] = y
    return Trajectory(coarse.t0 + coarse.h * np.arange(n + 1), states, iters)
