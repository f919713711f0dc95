"""Command-line front end.

    lawson-sde converge --problem rigid-body --omega 1 --sigma 1 --schemes all \\
        --levels 4..9 --ref-level 12 --paths 20 --seed 7 -o conv.csv
    lawson-sde drift --problem kubo --omega 10 --sigma 10 --schemes MFSL,TDSL --level 5 --T 50
    lawson-sde invariant-order --problem rigid-body --omega 10 --sigma 0.3 --schemes TFSL
    lawson-sde fput --schemes TFSL,Midpoint --T 20 --paths 10 -o fput_out/
    lawson-sde validate --problem kubo

``--config FILE`` reads flat ``key=value`` lines named like the long flags;
explicit flags win over file values.  ``--save-config FILE`` writes the
effective configuration back out in the same format.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import experiments
from .model import QuadraticInvariant, validate_commutativity, validate_quadratic_assumptions
from .problems import (
    FputParams,
    KuboParams,
    RigidBodyParams,
    build_fput,
    build_kubo,
    build_rigid_body,
)
from .schemes import COMPARED_SCHEMES, NonConvergence, Scheme

SUBCOMMANDS = ("converge", "drift", "invariant-order", "fput", "validate")

_DEFAULT_PARAMS = {
    "kubo": (10.0, 10.0),
    "rigid-body": (1.0, 1.0),
    "fput": (50.0, 0.02),
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    problem: str | None = None
    omega: float | None = None
    sigma: float | None = None
    linear: bool = False
    x0: str | None = None
    schemes: str = "all"
    levels: str = "4..9"
    level: int = 5
    ref_level: int = 12
    ref_scheme: str | None = None  # MFSL for converge, Midpoint for fput
    h: float = 1 / 64
    ref_factor: int = 16
    T: float | None = None
    paths: int = 20
    seed: int = 0
    fp_tol: float = 1e-12
    fp_max_iters: int = 100
    tol: float = 1e-12
    output: str | None = None
    threads: int | None = None

    def dumps(self) -> str:
        lines = []
        for k, v in asdict(self).items():
            if v is None:
                continue
            lines.append(f"{k.replace('_', '-')}={v!r}" if isinstance(v, float) else f"{k.replace('_', '-')}={v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> dict:
        """Parse ``key=value`` text into typed field values (unknown keys rejected)."""
        types = {f.name: f.type for f in fields(cls)}
        out = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"bad config line: {raw!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            name = key.replace("-", "_")
            if name not in types:
                raise ConfigError(f"unknown config key {key!r}")
            out[name] = _coerce(types[name], value)
        return out


def _coerce(type_name: str, value: str):
    if "bool" in type_name:
        return value.lower() in ("1", "true", "yes", "on")
    if "int" in type_name:
        return int(value)
    if "float" in type_name:
        return float(value)
    return value


def parse_levels(text: str) -> list[int]:
    text = text.strip()
    if ".." in text:
        lo, hi = (int(s) for s in text.split("..", 1))
        if hi < lo:
            raise ConfigError(f"empty level range {text!r}")
        return list(range(lo, hi + 1))
    return sorted(int(s) for s in text.split(","))


def parse_schemes(text: str) -> list[Scheme]:
    if text.strip().lower() == "all":
        return list(COMPARED_SCHEMES)
    try:
        return [Scheme.parse(s.strip()) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_state(text: str | None) -> tuple[float, ...] | None:
    if text is None:
        return None
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"bad initial state {text!r}") from None


def build_problem(cfg: RunConfig):
    """SplitSde plus the quadratic form monitored for it."""
    if cfg.problem not in _DEFAULT_PARAMS:
        raise ConfigError(f"unknown problem {cfg.problem!r}")
    omega_d, sigma_d = _DEFAULT_PARAMS[cfg.problem]
    omega = omega_d if cfg.omega is None else cfg.omega
    sigma = sigma_d if cfg.sigma is None else cfg.sigma
    T = 1.0 if cfg.T is None else cfg.T
    x0 = parse_state(cfg.x0)
    extra = {} if x0 is None else {"x0": x0}
    if cfg.problem == "kubo":
        make = KuboParams.linear if cfg.linear else KuboParams.example
        return build_kubo(make(omega, sigma, T=T, **extra)), QuadraticInvariant(np.eye(2))
    if cfg.problem == "rigid-body":
        return build_rigid_body(RigidBodyParams(omega, sigma, T=T, **extra)), QuadraticInvariant(np.eye(3))
    # Total stiff-spring energy as a quadratic form (monitored, not conserved).
    D = np.zeros((12, 12))
    D[3:6, 3:6] = 0.5 * omega**2 * np.eye(3)
    D[9:12, 9:12] = 0.5 * np.eye(3)
    return build_fput(FputParams(omega, sigma, x0=x0, T=T)), QuadraticInvariant(D)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lawson-sde", description="Stochastic Lawson integrators")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="flat key=value file with flag defaults")
    parser.add_argument("--save-config", help="write the effective configuration here")
    parser.add_argument("--problem", choices=tuple(_DEFAULT_PARAMS))
    parser.add_argument("--omega", type=float)
    parser.add_argument("--sigma", type=float)
    parser.add_argument("--linear", action="store_true", default=None,
                        help="kubo only: drop the nonlinear terms")
    parser.add_argument("--x0", help="comma-separated initial state (default per problem)")
    parser.add_argument("--schemes", help="comma list or 'all' (TDSL,TFSL,MDSL,MFSL,Midpoint)")
    parser.add_argument("--levels", help="e.g. 4..9 or 4,6,8")
    parser.add_argument("--level", type=int)
    parser.add_argument("--ref-level", type=int)
    parser.add_argument("--ref-scheme")
    parser.add_argument("--h", type=float, help="fput: dyadic step size")
    parser.add_argument("--ref-factor", type=int)
    parser.add_argument("--T", type=float)
    parser.add_argument("--paths", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--fp-tol", type=float)
    parser.add_argument("--fp-max-iters", type=int)
    parser.add_argument("--tol", type=float, help="validate: assumption tolerance")
    parser.add_argument("-o", "--output")
    parser.add_argument("--threads", type=int)
    return parser


def resolve_config(argv) -> RunConfig:
    args = make_parser().parse_args(argv)
    values = {}
    if args.config:
        with open(args.config) as fh:
            values.update(RunConfig.loads(fh.read()))
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    cfg = RunConfig(**values)
    if args.save_config:
        with open(args.save_config, "w") as fh:
            fh.write(cfg.dumps())
    return cfg


def _workers(cfg: RunConfig) -> int:
    return cfg.threads if cfg.threads is not None else (os.cpu_count() or 1)


def _check_writable(path: str, is_dir: bool = False) -> None:
    target = path if is_dir else (os.path.dirname(os.path.abspath(path)) or ".")
    if is_dir:
        os.makedirs(target, exist_ok=True)
    if not os.access(target, os.W_OK):
        raise ConfigError(f"cannot write to {path}")


def _fmt_map(d: dict) -> str:
    return " ".join(f"{k}={v:.3f}" for k, v in d.items())


def cmd_converge(cfg: RunConfig, out) -> int:
    p, _ = build_problem(cfg)
    levels = parse_levels(cfg.levels)
    if cfg.ref_level <= max(levels):
        raise ConfigError("--ref-level must exceed every tested level")
    output = cfg.output or "convergence.csv"
    _check_writable(output)
    report = experiments.run_convergence(
        p, parse_schemes(cfg.schemes), levels, cfg.ref_level, cfg.paths, cfg.seed,
        ref_scheme=Scheme.parse(cfg.ref_scheme or "MFSL"), fp_tol=cfg.fp_tol,
        fp_max_iters=cfg.fp_max_iters, workers=_workers(cfg),
    )
    report.write_csv(output)
    fails = int(report.failures.sum())
    print(f"slopes: {_fmt_map(report.slopes())} failed_cells={fails} -> {output}", file=out)
    return 0


def cmd_drift(cfg: RunConfig, out) -> int:
    p, inv = build_problem(cfg)
    output = cfg.output or "drift.csv"
    _check_writable(output)
    trace = experiments.run_drift_trace(
        p, parse_schemes(cfg.schemes), cfg.level, cfg.seed, inv,
        fp_tol=cfg.fp_tol, fp_max_iters=cfg.fp_max_iters,
    )
    trace.write_csv(output)
    parts = []
    for name, tr in trace.traces.items():
        note = "" if tr.failed_at is None else f"(solver failed at step {tr.failed_at})"
        parts.append(f"{name}={tr.max_deviation:.3e}{note}")
    print(f"max |I-I0|: {' '.join(parts)} -> {output}", file=out)
    return 0


def cmd_invariant_order(cfg: RunConfig, out) -> int:
    p, inv = build_problem(cfg)
    output = cfg.output or "invariant_order.csv"
    _check_writable(output)
    slopes = {}
    reports = []
    for scheme in parse_schemes(cfg.schemes):
        rep = experiments.fit_invariant_order(
            p, scheme, parse_levels(cfg.levels), cfg.paths, cfg.seed, inv,
            fp_tol=cfg.fp_tol, fp_max_iters=cfg.fp_max_iters, workers=_workers(cfg),
        )
        reports.append(rep)
        slopes[scheme.value] = rep.slope
    if len(reports) == 1:
        reports[0].write_csv(output)
    else:
        base, ext = os.path.splitext(output)
        for rep in reports:
            rep.write_csv(f"{base}_{rep.scheme.value}{ext or '.csv'}")
    print(f"invariant deviation slopes: {_fmt_map(slopes)} -> {output}", file=out)
    return 0


def cmd_fput(cfg: RunConfig, out) -> int:
    if cfg.problem != "fput":
        raise ConfigError("the fput subcommand only runs the fput problem")
    omega_d, sigma_d = _DEFAULT_PARAMS["fput"]
    omega = omega_d if cfg.omega is None else cfg.omega
    sigma = sigma_d if cfg.sigma is None else cfg.sigma
    params = FputParams(omega, sigma, x0=parse_state(cfg.x0))
    T = 20.0 if cfg.T is None else cfg.T
    output = cfg.output or "fput_out"
    _check_writable(output, is_dir=True)
    report = experiments.run_fput_energies(
        params, parse_schemes(cfg.schemes), cfg.h, T, cfg.paths, cfg.seed,
        ref_scheme=Scheme.parse(cfg.ref_scheme or "Midpoint"), ref_factor=cfg.ref_factor,
        fp_tol=cfg.fp_tol, fp_max_iters=cfg.fp_max_iters, workers=_workers(cfg),
    )
    report.write_csv(output)
    final = {k: float(v[-1, 3]) for k, v in report.errors.items()}
    print(f"Err_n(I1+I2+I3) at T={T}: {' '.join(f'{k}={v:.4e}' for k, v in final.items())} -> {output}",
          file=out)
    return 0


def cmd_validate(cfg: RunConfig, out) -> int:
    p, _ = build_problem(cfg)
    comm = validate_commutativity(p, cfg.tol)
    ok = comm.passed
    print(f"{p.name}: commutativity max residual {comm.max_residual:.3e} "
          f"{'ok' if comm.passed else 'FAIL ' + str(comm.failing_pairs)}", file=out)
    if cfg.problem in ("kubo", "rigid-body"):
        rep = validate_quadratic_assumptions(p, np.eye(p.d), cfg.tol, seed=cfg.seed)
        for line in rep.lines():
            print(f"{p.name}: {line}", file=out)
        ok = ok and rep.passed
    else:
        print(f"{p.name}: linear parts are not skew-symmetric; no quadratic invariant is checked", file=out)
    print("all checks passed" if ok else "some checks failed", file=out)
    return 0 if ok else 1


_COMMANDS = {
    "converge": cmd_converge,
    "drift": cmd_drift,
    "invariant-order": cmd_invariant_order,
    "fput": cmd_fput,
    "validate": cmd_validate,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        cfg = resolve_config(argv)
        if cfg.problem is None:
            cfg.problem = "fput" if cfg.subcommand == "fput" else "rigid-body"
        return _COMMANDS[cfg.subcommand](cfg, out)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NonConvergence, RuntimeError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
