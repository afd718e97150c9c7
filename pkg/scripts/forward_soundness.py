"""Margins of the semigroup inequalities on random graphs at the certified curvature.

For each random graph the global CD(n, .) constant is computed exactly, then
the four gradient and variance bounds are evaluated for random positive
fields. A second pass pushes kappa above the constant to show the bounds can
break there (not guaranteed for every field).

    python scripts/forward_soundness.py --graphs 20 --fields 10 --dim 3
"""

from __future__ import annotations

import argparse
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from cdforge import global_cd_bound, random_graph, verify_thm31


@dataclass
class SoundnessConfig:
    graphs: int = 20
    vertices: tuple[int, int] = (3, 16)
    fields: int = 10
    dim: float = math.inf
    times: tuple[float, ...] = (0.05, 0.1, 0.25, 0.5, 1.0, 2.0)
    overshoot: float = 0.5
    seed: int = 0


def run(cfg: SoundnessConfig) -> None:
    rng = np.random.default_rng(cfg.seed)
    at_bound: dict[str, float] = defaultdict(lambda: math.inf)
    beyond: dict[str, float] = defaultdict(lambda: math.inf)
    for k in range(cfg.graphs):
        g = random_graph(int(rng.integers(*cfg.vertices)), seed=cfg.seed * 1000 + k)
        kappa = global_cd_bound(g, cfg.dim)
        for _ in range(cfg.fields):
            f = rng.uniform(0.2, 3.0, len(g))
            for r in verify_thm31(g, f, cfg.dim, kappa, cfg.times):
                at_bound[r.item] = min(at_bound[r.item], r.margin)
            for r in verify_thm31(g, f, cfg.dim, kappa + cfg.overshoot, cfg.times):
                beyond[r.item] = min(beyond[r.item], r.margin)
    print(f"{'item':<8}{'min margin at kappa':>22}{f'at kappa + {cfg.overshoot:g}':>22}")
    for item in sorted(at_bound):
        print(f"{item:<8}{at_bound[item]:>22.3e}{beyond[item]:>22.3e}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--graphs", type=int, default=20)
    ap.add_argument("--fields", type=int, default=10)
    ap.add_argument("--dim", default="inf")
    ap.add_argument("--overshoot", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    dim = math.inf if args.dim == "inf" else float(args.dim)
    run(SoundnessConfig(graphs=args.graphs, fields=args.fields, dim=dim, overshoot=args.overshoot,
                        seed=args.seed))


if __name__ == "__main__":
    main()
