"""Every level of both hierarchies on small graphs, next to theta and alpha."""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass

from esh import graphs
from esh.hierarchy import CESH, ESH, compute_level, theta
from esh.stable_sets import alpha_bruteforce


@dataclass
class Config:
    specs: tuple[str, ...] = ("cycle:5", "cycle:7", "complement:cycle:7", "er:10:0.5:11")


def _graph(spec: str):
    if spec.startswith("complement:"):
        return graphs.complement(_graph(spec.split(":", 1)[1]))
    kind, *args = spec.split(":")
    if kind == "cycle":
        return graphs.cycle_graph(int(args[0]))
    if kind == "er":
        return graphs.erdos_renyi(int(args[0]), float(args[1]), int(args[2]))
    raise ValueError(spec)


def run(cfg: Config):
    for spec in cfg.specs:
        g = _graph(spec)
        a, th = alpha_bruteforce(g), theta(g).bound
        for f in (ESH, CESH):
            for k in range(g.n + 1):
                r = compute_level(g, f, k)
                yield dict(graph=g.name, n=g.n, alpha=a, theta=f"{th:.6f}", formulation=f, k=k,
                           escs=r.num_escs, bound=f"{r.bound:.6f}", floor=r.floor,
                           seconds=f"{r.seconds:.2f}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("specs", nargs="*", default=list(Config.specs))
    args = ap.parse_args()
    w = None
    for row in run(Config(tuple(args.specs))):
        if w is None:
            w = csv.DictWriter(sys.stdout, fieldnames=list(row))
            w.writeheader()
        w.writerow(row)
        sys.stdout.flush()


if __name__ == "__main__":
    main()
