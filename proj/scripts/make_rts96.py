#!/usr/bin/env python3
"""Emit data/rts96.m: the three-area RTS-96 test system.

Single-area tables follow the published 24-bus reliability test system
(buses, loads, units, branch impedances, ratings, permanent outage rates).
The three-area system replicates them with 100/200/300 bus-id offsets and
adds bus 325 and the six inter-area ties. Marginal costs come from the
published heat rates and fuel prices, rounded to the usual merit order.
"""

import os

# bus -> load MW (2850 MW per area)
LOADS = {1: 108, 2: 97, 3: 180, 4: 74, 5: 71, 6: 136, 7: 125, 8: 171,
         9: 175, 10: 195, 13: 265, 14: 194, 15: 317, 16: 100, 18: 333,
         19: 181, 20: 128}

GEN_BUSES = {1, 2, 7, 13, 15, 16, 18, 21, 22, 23}

# (bus, count, unit MW, marginal cost $/MWh)
UNITS = [
    (1, 2, 20, 43.5), (1, 2, 76, 14.4),
    (2, 2, 20, 43.5), (2, 2, 76, 14.4),
    (7, 3, 100, 23.0),
    (13, 3, 197, 22.08),
    (15, 5, 12, 27.6), (15, 1, 155, 11.64),
    (16, 1, 155, 11.64),
    (18, 1, 400, 6.0),
    (21, 1, 400, 6.0),
    (22, 6, 50, 0.001),
    (23, 2, 155, 11.64), (23, 1, 350, 11.4),
]

# (from, to, r, x, b, rateA, rateB, rateC, lambda/yr)
BRANCHES = [
    (1, 2, 0.0026, 0.0139, 0.4611, 175, 250, 200, 0.24),
    (1, 3, 0.0546, 0.2112, 0.0572, 175, 208, 220, 0.51),
    (1, 5, 0.0218, 0.0845, 0.0229, 175, 208, 220, 0.33),
    (2, 4, 0.0328, 0.1267, 0.0343, 175, 208, 220, 0.39),
    (2, 6, 0.0497, 0.1920, 0.0520, 175, 208, 220, 0.48),
    (3, 9, 0.0308, 0.1190, 0.0322, 175, 208, 220, 0.38),
    (3, 24, 0.0023, 0.0839, 0.0000, 400, 510, 600, 0.02),
    (4, 9, 0.0268, 0.1037, 0.0281, 175, 208, 220, 0.36),
    (5, 10, 0.0228, 0.0883, 0.0239, 175, 208, 220, 0.34),
    (6, 10, 0.0139, 0.0605, 2.4590, 175, 193, 200, 0.33),
    (7, 8, 0.0159, 0.0614, 0.0166, 175, 208, 220, 0.30),
    (8, 9, 0.0427, 0.1651, 0.0447, 175, 208, 220, 0.44),
    (8, 10, 0.0427, 0.1651, 0.0447, 175, 208, 220, 0.44),
    (9, 11, 0.0023, 0.0839, 0.0000, 400, 510, 600, 0.02),
    (9, 12, 0.0023, 0.0839, 0.0000, 400, 510, 600, 0.02),
    (10, 11, 0.0023, 0.0839, 0.0000, 400, 510, 600, 0.02),
    (10, 12, 0.0023, 0.0839, 0.0000, 400, 510, 600, 0.02),
    (11, 13, 0.0061, 0.0476, 0.0999, 500, 600, 625, 0.40),
    (11, 14, 0.0054, 0.0418, 0.0879, 500, 600, 625, 0.39),
    (12, 13, 0.0061, 0.0476, 0.0999, 500, 600, 625, 0.40),
    (12, 23, 0.0124, 0.0966, 0.2030, 500, 600, 625, 0.52),
    (13, 23, 0.0111, 0.0865, 0.1818, 500, 600, 625, 0.49),
    (14, 16, 0.0050, 0.0389, 0.0818, 500, 600, 625, 0.38),
    (15, 16, 0.0022, 0.0173, 0.0364, 500, 600, 625, 0.33),
    (15, 21, 0.0063, 0.0490, 0.1030, 500, 600, 625, 0.41),
    (15, 21, 0.0063, 0.0490, 0.1030, 500, 600, 625, 0.41),
    (15, 24, 0.0067, 0.0519, 0.1091, 500, 600, 625, 0.41),
    (16, 17, 0.0033, 0.0259, 0.0545, 500, 600, 625, 0.35),
    (16, 19, 0.0030, 0.0231, 0.0485, 500, 600, 625, 0.34),
    (17, 18, 0.0018, 0.0144, 0.0303, 500, 600, 625, 0.32),
    (17, 22, 0.0135, 0.1053, 0.2212, 500, 600, 625, 0.54),
    (18, 21, 0.0033, 0.0259, 0.0545, 500, 600, 625, 0.35),
    (18, 21, 0.0033, 0.0259, 0.0545, 500, 600, 625, 0.35),
    (19, 20, 0.0051, 0.0396, 0.1072, 500, 600, 625, 0.38),
    (19, 20, 0.0051, 0.0396, 0.1072, 500, 600, 625, 0.38),
    (20, 23, 0.0028, 0.0216, 0.0455, 500, 600, 625, 0.34),
    (20, 23, 0.0028, 0.0216, 0.0455, 500, 600, 625, 0.34),
    (21, 22, 0.0087, 0.0678, 0.1424, 500, 600, 625, 0.45),
]

# Inter-area ties; impedances from per-mile values of same-voltage lines,
# outage rates from the RTS distance-proportional rule.
TIES = [
    (107, 203, 0.0420, 0.1610, 0.0437, 175, 208, 220, 0.39),
    (113, 215, 0.0096, 0.0750, 0.1576, 500, 600, 625, 0.40),
    (123, 217, 0.0096, 0.0750, 0.1576, 500, 600, 625, 0.40),
    (318, 223, 0.0096, 0.0750, 0.1576, 500, 600, 625, 0.40),
    (323, 325, 0.0022, 0.0173, 0.0364, 500, 600, 625, 0.33),
    (325, 121, 0.0124, 0.0965, 0.2030, 500, 600, 625, 0.52),
]


def main():
    buses = []
    for area in (1, 2, 3):
        for n in range(1, 25):
            bid = 100 * area + n
            btype = 3 if bid == 113 else (2 if n in GEN_BUSES else 1)
            kv = 138 if n <= 10 else 230
            buses.append((bid, btype, LOADS.get(n, 0), area, kv))
    buses.append((325, 1, 0, 3, 230))

    gens = []
    for area in (1, 2, 3):
        for bus, count, size, cost in UNITS:
            for _ in range(count):
                gens.append((100 * area + bus, size, cost))

    branches = []
    for area in (1, 2, 3):
        for f, t, r, x, b, ra, rb, rc, lam in BRANCHES:
            branches.append((100 * area + f, 100 * area + t, r, x, b, ra, rb, rc, lam))
    branches.extend(TIES)

    assert len(buses) == 73 and len(branches) == 120 and len(gens) == 96
    assert sum(b[2] for b in buses) == 8550
    assert sum(g[1] for g in gens) == 10215

    out = []
    out.append("function mpc = rts96")
    out.append("% Three-area reliability test system: 73 buses, 120 branches,")
    out.append("% 8550 MW peak load, 10215 MW generation capacity.")
    out.append("mpc.version = '2';")
    out.append("mpc.baseMVA = 100;")
    out.append("")
    out.append("%% bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin")
    out.append("mpc.bus = [")
    for bid, btype, pd, area, kv in buses:
        out.append(f"\t{bid}\t{btype}\t{pd}\t0\t0\t0\t{area}\t1\t0\t{kv}\t1\t1.05\t0.95;")
    out.append("];")
    out.append("")
    out.append("%% bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin")
    out.append("mpc.gen = [")
    for bus, pmax, _ in gens:
        out.append(f"\t{bus}\t0\t0\t0\t0\t1\t100\t1\t{pmax}\t0;")
    out.append("];")
    out.append("")
    out.append("%% fbus tbus r x b rateA rateB rateC ratio angle status")
    out.append("mpc.branch = [")
    for f, t, r, x, b, ra, rb, rc, _ in branches:
        out.append(f"\t{f}\t{t}\t{r}\t{x}\t{b}\t{ra}\t{rb}\t{rc}\t0\t0\t1;")
    out.append("];")
    out.append("")
    out.append("%% model startup shutdown n c1 c0")
    out.append("mpc.gencost = [")
    for _, _, cost in gens:
        out.append(f"\t2\t0\t0\t2\t{cost}\t0;")
    out.append("];")
    out.append("")
    out.append("%% branch_index lambda (permanent outages/year)")
    out.append("mpc.branch_reliability = [")
    for i, br in enumerate(branches, 1):
        out.append(f"\t{i}\t{br[8]};")
    out.append("];")
    out.append("")

    dest = os.path.join(os.path.dirname(__file__), "..", "data", "rts96.m")
    os.makedirs(os.path.dirname(dest), exist_ok=True)
    with open(dest, "w") as fh:
        fh.write("\n".join(out))
    print(f"wrote {os.path.normpath(dest)}: {len(buses)} buses, "
          f"{len(branches)} branches, {len(gens)} units")


if __name__ == "__main__":
    main()
