"""How far the order-(n+1) bound sits below the trace bound for shared subgraph sets.

Draws random graphs and random subgraph sets, solves all three formulations
and reports the gaps.  Both gaps should be nonnegative up to solver noise,
and the scaled/unscaled gap should vanish.
"""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass

import numpy as np

from esh import graphs
from esh.hierarchy import compare_formulations
from esh.stable_sets import alpha_bruteforce


@dataclass
class Config:
    trials: int = 100
    n_min: int = 8
    n_max: int = 16
    max_order: int = 5
    max_subsets: int = 40
    seed: int = 0


def run(cfg: Config):
    rng = np.random.default_rng(cfg.seed)
    for trial in range(cfg.trials):
        n = int(rng.integers(cfg.n_min, cfg.n_max + 1))
        g = graphs.erdos_renyi(n, float(rng.uniform(0.2, 0.7)), int(rng.integers(2**31)))
        subs = [tuple(sorted(int(v) + 1 for v in
                             rng.choice(n, int(rng.integers(2, cfg.max_order + 1)), replace=False)))
                for _ in range(int(rng.integers(1, cfg.max_subsets + 1)))]
        c = compare_formulations(g, subs)
        yield dict(trial=trial, name=g.name, n=n, m=g.m, subsets=len(subs),
                   alpha=alpha_bruteforce(g), esh=f"{c.esh:.8f}", cesh=f"{c.cesh:.8f}",
                   sesh=f"{c.sesh:.8f}", cesh_minus_esh=f"{c.cesh - c.esh:.2e}",
                   sesh_minus_cesh=f"{c.sesh - c.cesh:.2e}", ok=c.ok)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    for name, default in vars(Config()).items():
        ap.add_argument(f"--{name.replace('_', '-')}", type=type(default), default=default)
    ap.add_argument("--out")
    args = vars(ap.parse_args())
    out = args.pop("out")
    fh = open(out, "w", newline="") if out else sys.stdout
    writer = None
    for row in run(Config(**args)):
        if writer is None:
            writer = csv.DictWriter(fh, fieldnames=list(row))
            writer.writeheader()
        writer.writerow(row)
        fh.flush()


if __name__ == "__main__":
    main()
