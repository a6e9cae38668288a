#!/usr/bin/env python3
"""Probe whether the minimal-gradient density of a fixed function changes
with the exponent p on small hop-bounded families.

The solver exposes the density itself, so pointwise differences between
exponents are directly observable.  Output is a report, not a claim.

Usage: python3 scripts/p_dependence_probe.py [--seed 0]
"""

import argparse
import random
import sys

from modcalc import connecting_family, grid_space, lp_norm, n_gradient, path_space


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = random.Random(args.seed)

    cases = []
    s = path_space(4)
    cases.append(("path4/ramp", s, {v: s.distance("0", v) for v in s.vertices}))
    g = grid_space(3, 3)
    cases.append(("grid3/random", g, {v: rng.uniform(0, 2) for v in g.vertices}))

    exponents = (1.5, 2.0, 3.0)
    for name, space, f in cases:
        fam = connecting_family(space, space.vertices, space.vertices, 3)
        rhos = {}
        for p in exponents:
            rhos[p] = n_gradient(space, f, fam, p, 1e-8).rho
        print(f"== {name}")
        for i, p1 in enumerate(exponents):
            for p2 in exponents[i + 1 :]:
                diff = {
                    v: rhos[p1][v] - rhos[p2][v] for v in space.vertices
                }
                sup = max(abs(x) for x in diff.values())
                l2 = lp_norm(space, diff, 2.0)
                print(
                    f"  rho(p={p1}) vs rho(p={p2}): sup diff {sup:.6f}, "
                    f"weighted l2 diff {l2:.6f}"
                )
    return 0


if __name__ == "__main__":
    sys.exit(main())
