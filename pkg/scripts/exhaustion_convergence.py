"""Dirichlet kernels on growing balls of Z and Z^2, compared with the Bessel closed form.

On Z with unit weights, p_t(0, y) = e^{-2t} I_y(2t); on Z^2 the kernel is the
product of two such factors. The script prints p_k for each radius k and the
gap to the closed form.

    python scripts/exhaustion_convergence.py --t 1,3 --radius 25
"""

from __future__ import annotations

import argparse
import math
from dataclasses import dataclass

from scipy.special import ive

from cdforge import ExhaustionPlan, exhaustion_kernel, generate


@dataclass
class ExhaustionConfig:
    times: tuple[float, ...] = (0.5, 1.0, 3.0)
    radius: int = 25
    dim: int = 1
    offset: int = 0
    tol: float = 1e-12


def closed_form(t: float, dim: int, offset: int) -> float:
    # ive(v, x) = e^{-x} I_v(x)
    return float(ive(offset, 2 * t) * ive(0, 2 * t) ** (dim - 1))


def run(cfg: ExhaustionConfig) -> None:
    host = generate("lattice_ball", dim=cfg.dim, radius=cfg.radius)
    origin = ",".join(["0"] * cfg.dim)
    target = ",".join([str(cfg.offset)] + ["0"] * (cfg.dim - 1))
    r0 = max(2, abs(cfg.offset) + 1)
    plan = ExhaustionPlan(origin, range(r0, cfg.radius))
    for t in cfg.times:
        exact = closed_form(t, cfg.dim, cfg.offset)
        kv, diag = exhaustion_kernel(host, plan, t, origin, target, tol=cfg.tol)
        print(f"t = {t:g}: limit {exact:.15f}, converged={diag['converged']}, monotone={diag['monotone']}")
        for r, v in zip(diag["radii"], diag["values"]):
            print(f"   k = {r:>3}  p_k = {v:.15f}  gap = {exact - v:.3e}")
        if not math.isclose(kv.value, exact, abs_tol=1e-6):
            print("   (host radius too small for this t)")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--t", default="0.5,1,3")
    ap.add_argument("--radius", type=int, default=25)
    ap.add_argument("--dim", type=int, default=1)
    ap.add_argument("--offset", type=int, default=0)
    args = ap.parse_args()
    cfg = ExhaustionConfig(tuple(float(v) for v in args.t.split(",")), args.radius, args.dim, args.offset)
    run(cfg)


if __name__ == "__main__":
    main()
