"""Independent brute-force solvers used as ground truth in differential
tests.  These deliberately share no search logic with the real solvers:
plain enumeration and a textbook dynamic program over full row residuals.
"""

from __future__ import annotations

import itertools
import math

from .errors import ResourceCapError
from .model import IpInstance, Solution

INF = math.inf


def brute_force_ip(inst: IpInstance, cell_cap: int = 10**6,
                   want_all: bool = False):
    """Exhaustive optimum of an instance, or None when infeasible.

    Returns the lexicographically smallest optimum; with want_all=True
    returns (solution, [all optimal points]) for the proximity and
    sensitivity verifiers.
    """
    if inst.box_volume() > cell_cap:
        raise ResourceCapError(
            f"box volume {inst.box_volume()} exceeds cap {cell_cap}")
    best_val = None
    best_points: list[tuple[int, ...]] = []
    ranges = [range(lo, hi + 1) for lo, hi in zip(inst.l, inst.u)]
    for x in itertools.product(*ranges):
        ok = True
        for bi, row in zip(inst.b, inst.A.row_support):
            s = 0
            for c, v in row:
                s += v * x[c]
            if s != bi:
                ok = False
                break
        if not ok:
            continue
        val = inst.f.value(x)
        if best_val is None or val < best_val:
            best_val = val
            best_points = [x]
        elif val == best_val:
            best_points.append(x)
    if best_val is None:
        return (None, []) if want_all else None
    best_points.sort()
    sol = Solution(best_points[0], best_val)
    return (sol, best_points) if want_all else sol


def enumerate_l1_ball(n: int, rho: int):
    """All integer vectors with l1 norm at most rho, in (norm, lex) order."""
    def rec(i, budget, prefix):
        if i == n:
            yield tuple(prefix)
            return
        for v in range(-budget, budget + 1):
            prefix.append(v)
            yield from rec(i + 1, budget - abs(v), prefix)
            prefix.pop()

    vecs = list(rec(0, rho, []))
    vecs.sort(key=lambda h: (sum(abs(v) for v in h), h))
    return vecs


def brute_force_l1ip(inst: IpInstance, x, rho: int, cell_cap: int = 10**7):
    """Exact minimizer h of f(x+h) with A h = 0, bounds on x+h, ||h||_1 <= rho.

    Ties: smallest value, then smallest ||h||_1, then lexicographically
    smallest h.  Enumeration order realizes the tie-break directly.
    """
    n = inst.n
    count = 0
    best = None
    best_val = None
    best_norm = None
    for h in enumerate_l1_ball(n, rho):
        count += 1
        if count > cell_cap:
            raise ResourceCapError("l1 ball enumeration exceeds cap")
        y = tuple(a + b for a, b in zip(x, h))
        if any(not (lo <= v <= hi) for v, lo, hi in zip(y, inst.l, inst.u)):
            continue
        if any(s != 0 for s in inst.A.apply(h)):
            continue
        val = inst.f.value(y)
        norm = sum(abs(v) for v in h)
        if best_val is None or val < best_val:
            best, best_val, best_norm = h, val, norm
    if best is None:
        return None
    return Solution(best, best_val)


def naive_dp_l1ip(inst: IpInstance, x, rho: int, cell_cap: int = 10**7):
    """Textbook column-by-column DP over full m-dimensional residuals.

    Returns {(residual tuple over all m rows, eta): exact cost} for the
    cheapest h supported on all columns with A h = residual, bounds on
    x + h, and ||h||_1 = eta.  This indexes complete row residuals, in
    contrast to the tree's treedepth projection, which makes it an
    independent oracle for the tree's query table.
    """
    n, m = inst.n, inst.m
    amax = inst.A.inf_norm
    if n and ((2 * rho * amax + 1) ** m) * n > cell_cap:
        raise ResourceCapError("naive dp table exceeds cap")
    zero = (0,) * m
    table = {(zero, 0): 0}
    for j in range(n):
        term = inst.f.terms[j]
        xj = x[j]
        lo = max(inst.l[j] - xj, -rho)
        hi = min(inst.u[j] - xj, rho)
        col = inst.A.column(j)
        nxt: dict = {}
        for (res, eta), cost in table.items():
            for hj in range(lo, hi + 1):
                eta2 = eta + abs(hj)
                if eta2 > rho:
                    continue
                res2 = list(res)
                for r, v in col:
                    res2[r] += v * hj
                key = (tuple(res2), eta2)
                add = cost + term.value_at(xj + hj) - term.value_at(xj)
                prev = nxt.get(key)
                if prev is None or add < prev:
                    nxt[key] = add
        table = nxt
    # report costs as f(x + h), matching the tree's absolute convention
    fx = inst.f.value(x)
    return {key: fx + c for key, c in table.items()}
