"""Facet counts of the squared stable set polytope of edgeless graphs."""
from __future__ import annotations

import argparse
import csv
import sys
import time
from dataclasses import dataclass

from esh.polytopes import facets_stab2_empty


@dataclass
class Config:
    k_max: int = 5
    out: str | None = None


def run(cfg: Config) -> list[dict]:
    rows = []
    for k in range(2, cfg.k_max + 1):
        t0 = time.perf_counter()
        fs = facets_stab2_empty(k, allow_long=k > 5)
        rows.append(dict(k=k, vertices=2**k, dim=k * (k + 1) // 2, facets=len(fs),
                         homogeneous=sum(q.homogeneous for q in fs.inequalities),
                         seconds=round(time.perf_counter() - t0, 3)))
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k-max", type=int, default=5, help="6 takes hours")
    ap.add_argument("--out")
    cfg = Config(**vars(ap.parse_args()))
    rows = run(cfg)
    fh = open(cfg.out, "w", newline="") if cfg.out else sys.stdout
    w = csv.DictWriter(fh, fieldnames=list(rows[0]))
    w.writeheader()
    w.writerows(rows)


if __name__ == "__main__":
    main()
