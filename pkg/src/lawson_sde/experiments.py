"""Experiment drivers: strong convergence, invariant drift, invariant-deviation
order and FPUT oscillatory energies.

Every driver follows the common-path discipline: path ``i`` gets one fine
Wiener grid keyed on ``(seed, i)`` and every (scheme, step size) cell consumes
coarsenings of it.  Paths may be farmed out to worker processes; results are
folded in path-index order, so output never depends on scheduling.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from pathlib import Path
from typing import Sequence

import numpy as np

from . import brownian
from .model import InvariantSpec, SplitSde
from .problems import FputParams, build_fput, oscillatory_energies
from .schemes import NonConvergence, Scheme, StepperConfig, integrate

Z95 = 1.959963984540054


def path_seed(seed: int, path: int) -> int:
    """Independent 64-bit key for path ``path`` of a run seeded with ``seed``."""
    ss = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, path])
    return int(ss.generate_state(1, np.uint64)[0])


def summarize_ci(samples) -> tuple[float, float]:
    """Mean and 95% normal-approximation half-width (sample std, ddof=1)."""
    x = np.asarray(samples, dtype=float)
    x = x[np.isfinite(x)]
    if x.size == 0:
        return math.nan, math.nan
    mean = float(x.mean())
    if x.size == 1:
        return mean, math.nan
    return mean, float(Z95 * x.std(ddof=1) / math.sqrt(x.size))


def fit_slope(hs, values) -> float:
    """Least-squares slope of log2(values) against log2(hs), ignoring bad cells."""
    hs = np.asarray(hs, dtype=float)
    values = np.asarray(values, dtype=float)
    ok = np.isfinite(values) & (values > 0)
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log2(hs[ok]), np.log2(values[ok]), 1)[0])


def _map_paths(fn, n_paths: int, workers: int):
    if workers <= 1 or n_paths <= 1:
        return [fn(i) for i in range(n_paths)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_paths)))


def _g17(x: float) -> str:
    return f"{x:.17g}"


# ---------------------------------------------------------------------------
# strong convergence


@dataclass
class ConvergenceReport:
    schemes: list[Scheme]
    levels: list[int]
    hs: np.ndarray
    errors: np.ndarray  # (n_schemes, n_levels, paths); nan where the solve failed
    ref_failures: int = 0

    @property
    def failures(self) -> np.ndarray:
        return np.isnan(self.errors).sum(axis=2)

    def mean_ci(self, s: int, j: int) -> tuple[float, float]:
        return summarize_ci(self.errors[s, j])

    def mean_errors(self) -> np.ndarray:
        out = np.empty(self.errors.shape[:2])
        for s in range(out.shape[0]):
            for j in range(out.shape[1]):
                out[s, j] = self.mean_ci(s, j)[0]
        return out

    def slopes(self) -> dict[str, float]:
        means = self.mean_errors()
        fails = self.failures
        out = {}
        for s, scheme in enumerate(self.schemes):
            vals = np.where(fails[s] > 0, np.nan, means[s])
            out[scheme.value] = fit_slope(self.hs, vals)
        return out

    def write_csv(self, path) -> None:
        header = ["h"]
        for s in self.schemes:
            header += [f"e{s.value}", f"ci{s.value}"]
        header.append("flags")
        fails = self.failures
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for j, h in enumerate(self.hs):
                row = [_g17(h)]
                for s in range(len(self.schemes)):
                    mean, ci = self.mean_ci(s, j)
                    row += [_g17(mean), _g17(ci)]
                flags = [f"{sc.value}:{fails[s, j]}" for s, sc in enumerate(self.schemes) if fails[s, j]]
                row.append(";".join(flags))
                w.writerow(row)


def _convergence_path(i, p, schemes, levels, ref_level, ref_cfg, cfgs, seed):
    grid = brownian.generate(p.t0, p.T, ref_level, p.M, path_seed(seed, i))
    errs = np.full((len(schemes), len(levels)), np.nan)
    try:
        ref = integrate(p, grid, ref_level, ref_cfg).final
    except NonConvergence:
        return errs, True
    for s, cfg in enumerate(cfgs):
        for j, level in enumerate(levels):
            try:
                y = integrate(p, grid, level, cfg).final
            except NonConvergence:
                continue
            errs[s, j] = np.linalg.norm(y - ref)
    return errs, False


def run_convergence(p: SplitSde, schemes: Sequence, levels: Sequence[int], ref_level: int,
                    paths: int, seed: int, ref_scheme=Scheme.MFSL, fp_tol: float = 1e-12,
                    fp_max_iters: int = 100, workers: int = 1) -> ConvergenceReport:
    schemes = [Scheme.parse(s) for s in schemes]
    levels = sorted(levels)
    if ref_level <= max(levels):
        raise ValueError("reference level must be finer than every tested level")
    cfgs = [StepperConfig(s, fp_tol, fp_max_iters) for s in schemes]
    ref_cfg = StepperConfig(ref_scheme, fp_tol, fp_max_iters)
    fn = partial(_convergence_path, p=p, schemes=schemes, levels=levels, ref_level=ref_level,
                 ref_cfg=ref_cfg, cfgs=cfgs, seed=seed)
    results = _map_paths(fn, paths, workers)
    errors = np.stack([r[0] for r in results], axis=2)
    hs = np.array([(p.T - p.t0) / 2**lv for lv in levels])
    return ConvergenceReport(schemes, list(levels), hs, errors, sum(r[1] for r in results))


# ---------------------------------------------------------------------------
# long-time invariant traces


@dataclass
class SchemeTrace:
    times: np.ndarray
    states: np.ndarray
    invariant: np.ndarray
    failed_at: int | None = None

    @property
    def max_deviation(self) -> float:
        return float(np.abs(self.invariant - self.invariant[0]).max())


@dataclass
class DriftTrace:
    times: np.ndarray
    traces: dict[str, SchemeTrace]

    def write_csv(self, path) -> None:
        names = list(self.traces)
        d = next(iter(self.traces.values())).states.shape[1]
        header = ["t"] + [f"{s}{k + 1}" for s in names for k in range(d)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for n, t in enumerate(self.times):
                row = [_g17(t)]
                for s in names:
                    st = self.traces[s].states
                    row += [_g17(v) for v in st[n]] if n < len(st) else ["nan"] * d
                w.writerow(row)


def _trace_until_failure(p, grid, level, cfg, invariant, n_steps) -> SchemeTrace:
    """Integrate, keeping the partial trajectory if the implicit solve fails."""
    try:
        tr = integrate(p, grid, level, cfg, n_steps=n_steps)
        return SchemeTrace(tr.times, tr.states, invariant.along(tr.states))
    except NonConvergence as exc:
        tr = integrate(p, grid, level, cfg, n_steps=exc.step)
        return SchemeTrace(tr.times, tr.states, invariant.along(tr.states), exc.step)


def run_drift_trace(p: SplitSde, schemes: Sequence, level: int, seed: int,
                    invariant: InvariantSpec, T: float | None = None,
                    fp_tol: float = 1e-12, fp_max_iters: int = 100) -> DriftTrace:
    """One shared path, step size ``h = 2**-level`` on ``[p.t0, T]``.

    Unlike the convergence drivers, ``level`` fixes the step size in time units
    so long horizons keep the same h; the Wiener grid is padded to a dyadic span.
    A scheme whose implicit solve fails keeps the trajectory up to the failure.
    """
    T = p.T if T is None else T
    p = replace(p, T=T)
    grid, grid_level, n = padded_grid(p, 2.0**-level, path_seed(seed, 0))
    traces = {}
    for s in schemes:
        cfg = StepperConfig(s, fp_tol, fp_max_iters)
        traces[cfg.scheme.value] = _trace_until_failure(p, grid, grid_level, cfg, invariant, n)
    return DriftTrace(grid.times[: n + 1], traces)


# ---------------------------------------------------------------------------
# invariant deviation order


def predicted_trapezoidal_drift(p: SplitSde, states: np.ndarray, h: float, D) -> np.ndarray:
    """Closed-form I(Y_n) - I(Y_0) of the trapezoidal full Lawson scheme.

    Valid when every diffusion term is linear (g_m = 0 for m >= 1):
    -(1/4) (g0(Y_n)^T D g0(Y_n) - g0(Y_0)^T D g0(Y_0)) h^2.
    """
    D = np.asarray(D, dtype=float)
    q = np.array([g @ D @ g for g in map(p.g[0], states)])
    return -0.25 * (q - q[0]) * h * h


@dataclass
class InvariantOrderReport:
    scheme: Scheme
    levels: list[int]
    hs: np.ndarray
    deviations: np.ndarray  # (n_levels, paths), max_n |I(Y_n) - I(Y_0)|

    @property
    def mean_deviation(self) -> np.ndarray:
        return np.array([summarize_ci(row)[0] for row in self.deviations])

    @property
    def slope(self) -> float:
        return fit_slope(self.hs, self.mean_deviation)

    def write_csv(self, path) -> None:
        name = self.scheme.value
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["h", f"e{name}", f"ci{name}", "flags"])
            for j, h in enumerate(self.hs):
                mean, ci = summarize_ci(self.deviations[j])
                fails = int(np.isnan(self.deviations[j]).sum())
                w.writerow([_g17(h), _g17(mean), _g17(ci), f"{name}:{fails}" if fails else ""])


def _invariant_path(i, p, levels, cfg, seed, invariant):
    grid = brownian.generate(p.t0, p.T, max(levels), p.M, path_seed(seed, i))
    out = np.full(len(levels), np.nan)
    for j, level in enumerate(levels):
        try:
            tr = integrate(p, grid, level, cfg)
        except NonConvergence:
            continue
        vals = invariant.along(tr.states)
        out[j] = np.abs(vals - vals[0]).max()
    return out


def fit_invariant_order(p: SplitSde, scheme, levels: Sequence[int], paths: int, seed: int,
                        invariant: InvariantSpec, fp_tol: float = 1e-12,
                        fp_max_iters: int = 100, workers: int = 1) -> InvariantOrderReport:
    levels = sorted(levels)
    cfg = StepperConfig(scheme, fp_tol, fp_max_iters)
    fn = partial(_invariant_path, p=p, levels=levels, cfg=cfg, seed=seed, invariant=invariant)
    devs = np.stack(_map_paths(fn, paths, workers), axis=1)
    hs = np.array([(p.T - p.t0) / 2**lv for lv in levels])
    return InvariantOrderReport(cfg.scheme, levels, hs, devs)


# ---------------------------------------------------------------------------
# FPUT oscillatory energies


def _energy_columns(states: np.ndarray, omega: float) -> np.ndarray:
    e = oscillatory_energies(states, omega)
    return np.column_stack([e, e.sum(axis=1)])  # I1, I2, I3, I


@dataclass
class EnergyReport:
    times: np.ndarray
    means: dict[str, np.ndarray]  # (n + 1, 4): I1, I2, I3, I
    variances: dict[str, np.ndarray]
    errors: dict[str, np.ndarray]  # running max |E(I) - E(I_ref)|
    ref_name: str
    used_paths: dict[str, int] = field(default_factory=dict)

    def write_csv(self, directory) -> list[Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        for name in self.means:
            path = directory / f"{name}.csv"
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["t", "I1", "I2", "I3", "I", "vI1", "vI2", "vI3", "vI"])
                for n, t in enumerate(self.times):
                    w.writerow([_g17(t)] + [_g17(v) for v in self.means[name][n]]
                               + [_g17(v) for v in self.variances[name][n]])
            written.append(path)
        for name, err in self.errors.items():
            path = directory / f"e{name}.csv"
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["t", "I1", "I2", "I3", "I"])
                for n, t in enumerate(self.times):
                    w.writerow([_g17(t)] + [_g17(v) for v in err[n]])
            written.append(path)
        return written


def padded_levels(h: float, span: float) -> tuple[int, int]:
    """(level, n) with ``n = span / h`` steps inside a dyadic grid of ``2**level >= n`` steps."""
    n = round(span / h)
    if n < 1 or not math.isclose(n * h, span, rel_tol=1e-12):
        raise ValueError(f"interval length {span} is not a multiple of h={h}")
    return max(0, math.ceil(math.log2(n))), n


def padded_grid(p: SplitSde, h: float, seed: int, extra_levels: int = 0):
    """Wiener grid over ``[p.t0, p.t0 + h 2**level]`` covering ``[p.t0, p.T]`` with step h.

    Returns ``(grid, level, n)``: integrate at ``level`` for ``n`` steps.  The
    grid itself is ``extra_levels`` finer so a reference run can share it.
    """
    level, n = padded_levels(h, p.T - p.t0)
    grid = brownian.generate(p.t0, p.t0 + h * 2**level, level + extra_levels, p.M, seed)
    return grid, level, n


def fput_grid_levels(h: float, T: float, ref_factor: int) -> tuple[int, int, int]:
    """(coarse level, reference level, coarse step count) for a padded dyadic grid."""
    r = round(math.log2(ref_factor))
    if ref_factor < 1 or 2**r != ref_factor:
        raise ValueError("reference factor must be a power of two")
    level, n = padded_levels(h, T)
    return level, level + r, n


def _fput_path(i, p, omega, h, n, level, ref_level, ref_factor, cfgs, ref_cfg, seed):
    grid, _, _ = padded_grid(p, h, path_seed(seed, i), ref_level - level)
    try:
        ref = integrate(p, grid, ref_level, ref_cfg, n_steps=n * ref_factor)
    except NonConvergence:
        return None, [None] * len(cfgs)
    ref_e = _energy_columns(ref.states[::ref_factor], omega)
    out = []
    for cfg in cfgs:
        try:
            tr = integrate(p, grid, level, cfg, n_steps=n)
            out.append(_energy_columns(tr.states, omega))
        except NonConvergence:
            out.append(None)
    return ref_e, out


def run_fput_energies(params: FputParams, schemes: Sequence, h: float, T: float, paths: int,
                      seed: int, ref_scheme=Scheme.MIDPOINT, ref_factor: int = 16,
                      fp_tol: float = 1e-12, fp_max_iters: int = 100,
                      workers: int = 1) -> EnergyReport:
    """Mean stiff-spring energies and cumulative weak errors against a finer reference.

    The Wiener grid spans ``h * 2**level >= T`` so that both ``h`` and
    ``h / ref_factor`` are dyadic refinements of it; integration stops at ``T``.
    Paths whose reference solve fails are dropped for every scheme.
    """
    p = build_fput(replace(params, T=T))
    level, ref_level, n = fput_grid_levels(h, T - p.t0, ref_factor)
    cfgs = [StepperConfig(s, fp_tol, fp_max_iters) for s in schemes]
    ref_cfg = StepperConfig(ref_scheme, fp_tol, fp_max_iters)
    fn = partial(_fput_path, p=p, omega=params.omega, h=h, n=n, level=level, ref_level=ref_level,
                 ref_factor=ref_factor, cfgs=cfgs, ref_cfg=ref_cfg, seed=seed)
    results = [r for r in _map_paths(fn, paths, workers) if r[0] is not None]
    if not results:
        raise RuntimeError("reference solve failed on every path")
    ref_name = f"{ref_cfg.scheme.value}Ref"
    ref_stack = np.stack([r[0] for r in results])
    means = {ref_name: ref_stack.mean(axis=0)}
    variances = {ref_name: _variance(ref_stack)}
    used = {ref_name: len(results)}
    errors = {}
    for s, cfg in enumerate(cfgs):
        name = cfg.scheme.value
        ok = [r[1][s] for r in results if r[1][s] is not None]
        used[name] = len(ok)
        if not ok:
            continue
        stack = np.stack(ok)
        means[name] = stack.mean(axis=0)
        variances[name] = _variance(stack)
        errors[name] = np.maximum.accumulate(np.abs(means[name] - means[ref_name]), axis=0)
    times = p.t0 + h * np.arange(n + 1)
    return EnergyReport(times, means, variances, errors, ref_name, used)


def _variance(stack: np.ndarray) -> np.ndarray:
    if stack.shape[0] < 2:
        return np.zeros(stack.shape[1:])
    return stack.var(axis=0, ddof=1)
