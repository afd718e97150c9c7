"""Tabulate exact CD constants and searched CDE' constants over a set of graphs.

    python scripts/curvature_survey.py --dims 2,4,inf --seeds 3
"""

from __future__ import annotations

import argparse
import math
from dataclasses import dataclass, field

import numpy as np

from cdforge import INF, cd_max_k, cde_search_k, generate


@dataclass
class SurveyConfig:
    dims: list[float] = field(default_factory=lambda: [2.0, 4.0, INF])
    seeds: int = 3
    starts: int = 16
    graphs: dict[str, dict] = field(default_factory=lambda: {
        "P2": {"family": "path", "n": 2},
        "P5": {"family": "path", "n": 5},
        "K3": {"family": "complete", "n": 3},
        "K5": {"family": "complete", "n": 5},
        "S4": {"family": "star", "n": 4},
        "C5": {"family": "cycle", "n": 5},
        "C6": {"family": "cycle", "n": 6},
        "Q3": {"family": "hypercube", "dim": 3},
        "Z2": {"family": "lattice_ball", "dim": 2, "radius": 3},
    })


def survey(cfg: SurveyConfig) -> list[dict]:
    rows = []
    for name, params in cfg.graphs.items():
        params = dict(params)
        g = generate(params.pop("family"), **params)
        for n in cfg.dims:
            cd = [cd_max_k(g, x, n).k_max for x in g.ids]
            cde = np.array([[cde_search_k(g, x, n, starts=cfg.starts, seed=s).k_max for x in g.ids]
                            for s in range(cfg.seeds)])
            rows.append({
                "graph": name, "n": n,
                "cd_min": min(cd), "cd_max": max(cd),
                "cde_min": float(cde[0].min()),
                "cde_spread": float(np.max(cde.max(axis=0) - cde.min(axis=0))),
            })
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--dims", default="2,4,inf")
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--starts", type=int, default=16)
    args = ap.parse_args()
    dims = [math.inf if d.strip().lower() == "inf" else float(d) for d in args.dims.split(",")]
    cfg = SurveyConfig(dims=dims, seeds=args.seeds, starts=args.starts)
    print(f"{'graph':<6}{'n':>6}{'CD min':>12}{'CD max':>12}{'CDE min':>14}{'seed spread':>14}")
    for r in survey(cfg):
        print(f"{r['graph']:<6}{r['n']:>6g}{r['cd_min']:>12.6f}{r['cd_max']:>12.6f}"
              f"{r['cde_min']:>14.6f}{r['cde_spread']:>14.2e}")


if __name__ == "__main__":
    main()
