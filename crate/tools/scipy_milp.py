#!/usr/bin/env python3
"""Solve an MPS file with scipy's HiGHS interface and write a bebsched solution file.

Usage: scipy_milp.py MODEL.mps SOLUTION.sol [TIME_LIMIT_S]

Use as a solver template:
    bebsched solve scenario.json --via "python3 tools/scipy_milp.py {mps} {sol}" --out plan.sol
"""

import sys

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import coo_matrix


def read_mps(path):
    rows, senses, objective_row = [], {}, None
    cols, col_index, integer = [], {}, []
    entries, cost, rhs, ranges = [], {}, {}, {}
    lower, upper = {}, {}
    offset = 0.0
    section, in_int = None, False
    with open(path) as f:
        for raw in f:
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("*"):
                continue
            if not line[0].isspace():
                section = line.split()[0]
                continue
            tok = line.split()
            if section == "ROWS":
                sense, name = tok
                if sense == "N":
                    objective_row = objective_row or name
                else:
                    senses[name] = sense
                    rows.append(name)
            elif section == "COLUMNS":
                if len(tok) >= 3 and tok[1] == "'MARKER'":
                    in_int = tok[2] == "'INTORG'"
                    continue
                name = tok[0]
                if name not in col_index:
                    col_index[name] = len(cols)
                    cols.append(name)
                    integer.append(in_int)
                for r, v in zip(tok[1::2], tok[2::2]):
                    if r == objective_row:
                        cost[name] = float(v)
                    elif r in senses:
                        entries.append((r, name, float(v)))
            elif section in ("RHS", "RANGES"):
                pairs = tok[1:] if len(tok) % 2 == 1 else tok
                for r, v in zip(pairs[0::2], pairs[1::2]):
                    if r == objective_row:
                        offset = -float(v)
                    elif section == "RHS":
                        rhs[r] = float(v)
                    else:
                        ranges[r] = float(v)
            elif section == "BOUNDS":
                kind, name = tok[0], tok[2]
                value = float(tok[3]) if len(tok) > 3 else None
                if kind in ("UP", "UI"):
                    upper[name] = value
                elif kind in ("LO", "LI"):
                    lower[name] = value
                elif kind == "FX":
                    lower[name] = upper[name] = value
                elif kind == "FR":
                    lower[name], upper[name] = -np.inf, np.inf
                elif kind == "MI":
                    lower[name] = -np.inf
                elif kind == "PL":
                    upper[name] = np.inf
                elif kind == "BV":
                    lower[name], upper[name] = 0.0, 1.0

    n, m = len(cols), len(rows)
    row_index = {r: k for k, r in enumerate(rows)}
    a = coo_matrix(
        ([v for _, _, v in entries], ([row_index[r] for r, _, _ in entries], [col_index[c] for _, c, _ in entries])),
        shape=(m, n),
    )
    lo, hi = np.full(m, -np.inf), np.full(m, np.inf)
    for r, k in row_index.items():
        b = rhs.get(r, 0.0)
        s = senses[r]
        if s == "E":
            lo[k] = hi[k] = b
            if r in ranges:
                (lo if ranges[r] < 0 else hi)[k] = b + ranges[r]
        elif s == "L":
            hi[k] = b
            if r in ranges:
                lo[k] = b - abs(ranges[r])
        else:
            lo[k] = b
            if r in ranges:
                hi[k] = b + abs(ranges[r])
    c = np.array([cost.get(name, 0.0) for name in cols])
    lb = np.array([lower.get(name, 0.0) for name in cols])
    ub = np.array([upper.get(name, 1.0 if integer[k] and name not in lower else np.inf) for k, name in enumerate(cols)])
    return cols, c, offset, a.tocsr(), lo, hi, lb, ub, np.array(integer, dtype=int)


def main():
    if len(sys.argv) < 3:
        sys.exit(__doc__)
    mps, sol = sys.argv[1], sys.argv[2]
    limit = float(sys.argv[3]) if len(sys.argv) > 3 else 60.0
    cols, c, offset, a, lo, hi, lb, ub, integrality = read_mps(mps)
    constraints = [LinearConstraint(a, lo, hi)] if a.shape[0] else []
    res = milp(c, constraints=constraints, bounds=Bounds(lb, ub), integrality=integrality,
               options={"time_limit": limit, "mip_rel_gap": 0.0})
    with open(sol, "w") as out:
        if res.x is None:
            status = "infeasible" if res.status == 2 else "time-limit"
            out.write(f"# status: {status}\n")
            return
        out.write("# status: {}\n".format("optimal" if res.status == 0 else "feasible"))
        out.write(f"# objective: {float(res.fun) + offset!r}\n")
        for name, value in zip(cols, res.x):
            out.write(f"{name} {float(value)!r}\n")


if __name__ == "__main__":
    main()
