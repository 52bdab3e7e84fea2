#!/usr/bin/env python3
"""Generate frozen LP fixtures for the simplex test suite.

Instances are solved with scipy.linprog (HiGHS) and the optimal objective is
recorded, so the C++ solver is checked against an independent implementation.
Run from the repo root:

    python3 scripts/gen_lp_fixtures.py > tests/oracles/lp_fixtures.json
"""
import json
import random
import sys

import numpy as np
from scipy.optimize import linprog

INF = 1e30  # sentinel for +/- infinity in the JSON file


def solve(n, c, lo, hi, rows):
    """rows: list of (coeffs, rlo, rhi). Returns (status, objective)."""
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for a, rlo, rhi in rows:
        if rlo == rhi:
            A_eq.append(a)
            b_eq.append(rlo)
        else:
            if rhi < INF:
                A_ub.append(a)
                b_ub.append(rhi)
            if rlo > -INF:
                A_ub.append([-x for x in a])
                b_ub.append(-rlo)
    bounds = [(None if l <= -INF else l, None if h >= INF else h)
              for l, h in zip(lo, hi)]
    res = linprog(c,
                  A_ub=np.array(A_ub) if A_ub else None,
                  b_ub=np.array(b_ub) if b_ub else None,
                  A_eq=np.array(A_eq) if A_eq else None,
                  b_eq=np.array(b_eq) if b_eq else None,
                  bounds=bounds, method="highs")
    if res.status == 0:
        return "optimal", float(res.fun)
    if res.status == 2:
        return "infeasible", 0.0
    if res.status == 3:
        return "unbounded", 0.0
    raise RuntimeError(f"unexpected scipy status {res.status}: {res.message}")


def random_instance(rng):
    n = rng.randint(2, 12)
    m = rng.randint(1, 10)
    c = [round(rng.uniform(-10, 10), 4) for _ in range(n)]
    lo, hi = [], []
    for _ in range(n):
        kind = rng.random()
        if kind < 0.75:
            a = round(rng.uniform(-20, 5), 4)
            b = a + round(rng.uniform(0.1, 30), 4)
            lo.append(a)
            hi.append(b)
        elif kind < 0.9:
            lo.append(round(rng.uniform(-10, 5), 4))
            hi.append(INF)
        else:
            lo.append(-INF)
            hi.append(round(rng.uniform(0, 10), 4))
    # Anchor row bounds around a point inside the box so that most
    # instances stay feasible.
    ref = [rng.uniform(max(l, -25), min(h, 25)) for l, h in zip(lo, hi)]
    rows = []
    for _ in range(m):
        a = [round(rng.uniform(-5, 5), 4) if rng.random() < 0.8 else 0.0
             for _ in range(n)]
        if all(x == 0.0 for x in a):
            a[rng.randrange(n)] = 1.0
        anchor = sum(x * y for x, y in zip(a, ref))
        kind = rng.random()
        if kind < 0.3:
            mid = round(anchor, 4)
            rows.append((a, mid, mid))                      # equality
        elif kind < 0.65:
            rows.append((a, -INF, round(anchor + rng.uniform(0, 10), 4)))
        elif kind < 0.85:
            rows.append((a, round(anchor - rng.uniform(0, 10), 4), INF))
        else:
            l = round(anchor - rng.uniform(0, 12), 4)
            rows.append((a, l, l + round(rng.uniform(0.5, 25), 4)))
    return n, c, lo, hi, rows


def dispatch_like(rng):
    """Mini economic-dispatch shape: gens + loads, one balance row, a few
    transfer-limit rows with unit-scale coefficients."""
    ng = rng.randint(2, 6)
    nd = rng.randint(1, 4)
    n = ng + nd
    cap = [round(rng.uniform(50, 400), 2) for _ in range(ng)]
    dem = [round(rng.uniform(40, 300), 2) for _ in range(nd)]
    cost = [round(rng.uniform(5, 45), 3) for _ in range(ng)]
    shed = 1000.0
    c = cost + [-shed] * nd
    lo = [0.0] * n
    hi = cap + dem
    balance = [1.0] * ng + [-1.0] * nd
    rows = [(balance, 0.0, 0.0)]
    for _ in range(rng.randint(0, 4)):
        a = [round(rng.uniform(-1, 1), 4) for _ in range(n)]
        lim = round(rng.uniform(30, 250), 2)
        rows.append((a, -lim, lim))
    return n, c, lo, hi, rows


def main():
    rng = random.Random(112358)
    fixtures = []

    # Hand-built corner cases.
    hand = [
        # Simple box minimum, no rows.
        dict(n=2, c=[1.0, -2.0], lo=[0.0, 0.0], hi=[4.0, 7.0], rows=[]),
        # Equality-constrained transfer.
        dict(n=2, c=[3.0, 1.0], lo=[0.0, 0.0], hi=[10.0, 10.0],
             rows=[([1.0, 1.0], 6.0, 6.0)]),
        # Infeasible: equality out of reach of the box.
        dict(n=2, c=[1.0, 1.0], lo=[0.0, 0.0], hi=[1.0, 1.0],
             rows=[([1.0, 1.0], 5.0, 5.0)]),
        # Unbounded below.
        dict(n=2, c=[-1.0, 0.0], lo=[0.0, 0.0], hi=[INF, 1.0], rows=[]),
        # Degenerate vertex.
        dict(n=3, c=[-1.0, -1.0, 0.0], lo=[0.0] * 3, hi=[1.0] * 3,
             rows=[([1.0, 1.0, 0.0], -INF, 1.0),
                   ([1.0, 0.0, 1.0], -INF, 1.0),
                   ([0.0, 1.0, 1.0], -INF, 1.0)]),
    ]
    for spec in hand:
        rows = [tuple(r) if isinstance(r, tuple) else (r[0], r[1], r[2])
                for r in spec["rows"]]
        status, obj = solve(spec["n"], spec["c"], spec["lo"], spec["hi"], rows)
        fixtures.append(dict(n=spec["n"], c=spec["c"], lo=spec["lo"],
                             hi=spec["hi"],
                             rows=[dict(a=a, lo=l, hi=h) for a, l, h in rows],
                             status=status, objective=obj))

    for _ in range(40):
        n, c, lo, hi, rows = random_instance(rng)
        status, obj = solve(n, c, lo, hi, rows)
        fixtures.append(dict(n=n, c=c, lo=lo, hi=hi,
                             rows=[dict(a=a, lo=l, hi=h) for a, l, h in rows],
                             status=status, objective=obj))

    for _ in range(15):
        n, c, lo, hi, rows = dispatch_like(rng)
        status, obj = solve(n, c, lo, hi, rows)
        fixtures.append(dict(n=n, c=c, lo=lo, hi=hi,
                             rows=[dict(a=a, lo=l, hi=h) for a, l, h in rows],
                             status=status, objective=obj))

    json.dump(dict(inf=INF, fixtures=fixtures), sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
