"""Primal-treedepth solver: the scaling driver instantiated with a
branching subsolver over a td-decomposition of the primal graph.

Variables are fixed in root-to-leaf order; once a root path prefix is
fixed the child subtrees share no constraint row and are solved as
independent subproblems.  A constraint row is checked as soon as its
deepest variable (in decomposition order) is assigned, pruning eagerly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InfeasibleError, ResourceCapError, ValidationError
from .graver import graver_basis
from .model import IpInstance, Solution, center_at, check_feasible, extend_phase_one
from .objective import convex_argmin
from .scaling import ScalingConfig, scaling_solve
from .structure import (
    TdDecomposition,
    compute_td,
    primal_graph,
    split_instance,
    validate_td,
)

INF = math.inf


@dataclass
class PrimalConfig:
    rho: int | None = None
    skip_prefix: bool = False
    graver_norm_cap: int = 60
    audit: bool = False
    stats: dict = field(default_factory=dict)


def solve_primal(inst: IpInstance, td: TdDecomposition | None = None,
                 cfg: PrimalConfig | None = None, start=None) -> Solution:
    """Exact optimum, or InfeasibleError.  Splits disconnected primal
    graphs into independent pieces; finds a start by the slack extension
    when none is given."""
    cfg = cfg or PrimalConfig()
    pieces = split_instance(inst, "primal")
    if len(pieces) == 1 and pieces[0][0] is not None and pieces[0][1] == tuple(range(inst.n)) \
            and pieces[0][2] == tuple(range(inst.m)):
        sol = _solve_connected(inst, td, cfg, start)
        return sol
    x = [0] * inst.n
    total = 0
    for sub, cols, rows in pieces:
        if sub is None:
            raise InfeasibleError("a zero row has a nonzero right-hand side")
        sub_start = tuple(start[c] for c in cols) if start is not None else None
        sol = _solve_connected(sub, None, PrimalConfig(
            rho=cfg.rho, skip_prefix=cfg.skip_prefix,
            graver_norm_cap=cfg.graver_norm_cap, audit=cfg.audit), sub_start)
        for c, v in zip(cols, sol.x):
            x[c] = v
        total += sol.value
    return Solution(x, total)


def _solve_connected(inst, td, cfg, start):
    if inst.m == 0:
        x = tuple(convex_argmin(t, lo, hi)
                  for t, lo, hi in zip(inst.f.terms, inst.l, inst.u))
        return Solution(x, inst.f.value(x))
    graph = primal_graph(inst.A)
    if td is None:
        td = compute_td(graph)
    elif not validate_td(graph, td):
        raise ValidationError("supplied decomposition is invalid for the primal graph")
    if start is None:
        start = _phase_one_start(inst, cfg)
    elif not check_feasible(inst, start):
        raise InfeasibleError("supplied start is not feasible")
    rho = cfg.rho
    if rho is None:
        basis = graver_basis(inst.A, norm_cap=cfg.graver_norm_cap)
        rho = max(basis.norm("inf"), 1)
    scfg = ScalingConfig(rho=rho, skip_prefix=cfg.skip_prefix)
    counters = {"branch_nodes": 0, "subsolves": 0}

    def subsolver(sub: IpInstance) -> Solution:
        counters["subsolves"] += 1
        sol = branch_solve(sub, td, counters=counters)
        if sol is None:
            raise InfeasibleError("branch subsolver found no point (driver bug)")
        return sol

    sol = scaling_solve(inst, start, scfg, subsolver)
    cfg.stats.update(counters)
    cfg.stats["scaling"] = scfg.stats
    cfg.stats["rho"] = rho
    if cfg.audit:
        from .oracle import brute_force_l1ip
        step = brute_force_l1ip(inst, sol.x, rho)
        if step is not None and step.value < sol.value:
            raise AssertionError("audit found an improving step; solver bug")
    return sol


def _phase_one_start(inst, cfg):
    """Feasible point via the slack extension, solved by this same solver."""
    v = tuple(min(max(0, lo), hi) for lo, hi in zip(inst.l, inst.u))
    centered = center_at(inst, v)
    ext, ext_start = extend_phase_one(centered)
    sol = solve_primal(ext, None, PrimalConfig(
        rho=cfg.rho, graver_norm_cap=cfg.graver_norm_cap), start=ext_start.x)
    if sol.value != 0:
        raise InfeasibleError("phase-one optimum is positive: instance infeasible")
    return tuple(xi + vi for xi, vi in zip(sol.x[:inst.n], v))


def branch_solve(inst: IpInstance, td: TdDecomposition,
                 counters: dict | None = None,
                 node_cap: int = 10**8) -> Solution | None:
    """Exact optimum of a small-box instance by depth-first search guided
    by the primal decomposition; None when infeasible.

    Rows are checked at the decomposition-deepest column of their
    support; sibling subtrees after a fixed prefix are independent and
    their minima add up.
    """
    n = inst.n
    if td.n != n:
        raise ValidationError("decomposition size mismatch")
    counters = counters if counters is not None else {"branch_nodes": 0}
    depth = td.depth
    rows_at = [[] for _ in range(n)]
    for r, support in enumerate(inst.A.row_support):
        if not support:
            if inst.b[r] != 0:
                return None
            continue
        deepest = max((c for c, _ in support), key=lambda c: depth[c])
        rows_at[deepest].append(r)
    x = [0] * n
    budget = [node_cap]

    def solve_subtree(v):
        """Min over assignments of the subtree rooted at v, x holds the
        fixed root-path prefix.  Returns (value, assignment dict) or None."""
        best_val = None
        best_assign = None
        for xv in range(inst.l[v], inst.u[v] + 1):
            budget[0] -= 1
            if budget[0] < 0:
                raise ResourceCapError("branch_solve node budget exhausted")
            counters["branch_nodes"] = counters.get("branch_nodes", 0) + 1
            x[v] = xv
            ok = True
            for r in rows_at[v]:
                s = 0
                for c, coef in inst.A.row_support[r]:
                    s += coef * x[c]
                if s != inst.b[r]:
                    ok = False
                    break
            if not ok:
                continue
            val = inst.f.terms[v].value_at(xv)
            assign = {v: xv}
            feasible = True
            for child in td.children[v]:
                r = solve_subtree(child)
                if r is None:
                    feasible = False
                    break
                val += r[0]
                assign.update(r[1])
            if not feasible:
                continue
            if best_val is None or val < best_val:
                best_val = val
                best_assign = assign
        return None if best_val is None else (best_val, best_assign)

    res = solve_subtree(td.root)
    if res is None:
        return None
    val, assign = res
    out = [assign[i] for i in range(n)]
    return Solution(out, val)
