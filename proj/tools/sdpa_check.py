#!/usr/bin/env python3
"""Solve a sparse SDPA file with cvxpy and print the optimal objective.

    sdpa_check.py FILE [--expect VALUE | --at-least VALUE] [--tol TOL]

The primal form is min c'x s.t. sum_i F_i x_i - F_0 >= 0 blockwise. A
leading comment carrying zero=Z pairs the first 2Z diagonal entries of the
diagonal block into equalities; without it every entry is an inequality.
"""

import argparse
import re
import sys

import cvxpy as cp
import numpy as np
import scipy.sparse as sp


def read_sdpa(path):
    zero = 0
    numbers = []
    entries = []
    with open(path) as f:
        lines = f.read().splitlines()
    body = []
    for line in lines:
        if line.startswith('"') or line.startswith("*"):
            m = re.search(r"zero=(\d+)", line)
            if m:
                zero = int(m.group(1))
            continue
        body.append(line)
    header = []
    k = 0
    while len(header) < 3 and k < len(body):
        vals = re.sub(r"[,(){}]", " ", body[k]).split()
        k += 1
        if vals:
            header.append(vals)
    m = int(header[0][0])
    nblocks = int(header[1][0])
    blocks = [int(float(v)) for v in header[2][:nblocks]]
    while len(numbers) < m:
        numbers += [float(v) for v in re.sub(r"[,(){}]", " ", body[k]).split()]
        k += 1
    c = np.array(numbers[:m])
    for line in body[k:]:
        vals = line.split()
        if len(vals) >= 5:
            entries.append((int(vals[0]), int(vals[1]), int(vals[2]), int(vals[3]), float(vals[4])))
    return c, blocks, entries, zero


def build(c, blocks, entries, zero):
    m = len(c)
    x = cp.Variable(m)
    cons = []
    for b, size in enumerate(blocks, start=1):
        dim = abs(size)
        rows, cols, vals = [], [], []
        f0 = np.zeros(dim * dim)
        for mat, blk, i, j, v in entries:
            if blk != b:
                continue
            for (a, bb) in {(i, j), (j, i)}:
                idx = (a - 1) * dim + (bb - 1)
                if mat == 0:
                    f0[idx] = v
                else:
                    rows.append(idx)
                    cols.append(mat - 1)
                    vals.append(v)
        F = sp.csr_matrix((vals, (rows, cols)), shape=(dim * dim, m))
        if size < 0:
            diag = np.arange(dim) * (dim + 1)
            expr = F[diag, :] @ x - f0[diag]
            paired = min(2 * zero, dim)
            if paired:
                cons.append(expr[0:paired:2] == 0)
            if paired < dim:
                cons.append(expr[paired:] >= 0)
        else:
            mat = cp.reshape(F @ x - f0, (dim, dim), order="C")
            cons.append((mat + mat.T) / 2 >> 0)
    return cp.Problem(cp.Minimize(c @ x), cons)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("file")
    ap.add_argument("--expect", type=float)
    ap.add_argument("--at-least", type=float)
    ap.add_argument("--tol", type=float, default=1e-6)
    args = ap.parse_args()
    prob = build(*read_sdpa(args.file))
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        print(f"status {prob.status}")
        return 1
    print(f"objective {prob.value:.12g}")
    if args.expect is not None:
        diff = abs(prob.value - args.expect)
        print(f"expected {args.expect:.12g} difference {diff:.3g} tolerance {args.tol:.3g}")
        return 0 if diff <= args.tol else 1
    if args.at_least is not None:
        print(f"lower bound {args.at_least:.12g} tolerance {args.tol:.3g}")
        return 0 if prob.value >= args.at_least - args.tol else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
