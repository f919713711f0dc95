"""Strong convergence sweeps on the stochastic rigid body.

Writes one CSV per (omega, sigma) panel.  Defaults are desk scale; the full
sweep is ``--paths 50 --levels 2..11``.
"""

import argparse
import os
import time

from lawson_sde.cli import parse_levels
from lawson_sde.experiments import run_convergence
from lawson_sde.problems import RigidBodyParams, build_rigid_body
from lawson_sde.schemes import COMPARED_SCHEMES

PANELS = [(1.0, 1.0), (10.0, 10.0), (10.0, 0.3), (0.0, 0.3)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", default="4..9")
    ap.add_argument("--ref-level", type=int, default=12)
    ap.add_argument("--paths", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out", default="results/convergence")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    for omega, sigma in PANELS:
        start = time.time()
        p = build_rigid_body(RigidBodyParams(omega, sigma))
        rep = run_convergence(p, COMPARED_SCHEMES, parse_levels(args.levels), args.ref_level,
                              args.paths, args.seed, workers=args.workers)
        path = os.path.join(args.out, f"rigid_w{omega:g}_s{sigma:g}.csv")
        rep.write_csv(path)
        slopes = " ".join(f"{k}={v:.2f}" for k, v in rep.slopes().items())
        print(f"omega={omega:g} sigma={sigma:g}: {slopes}  ({time.time() - start:.0f}s) -> {path}")


if __name__ == "__main__":
    main()
