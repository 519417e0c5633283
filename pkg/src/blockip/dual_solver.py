"""Dual-treedepth solver: scaling phases with per-variable descaling steps
driven by the convolution tree.

Each phase refines the lattice by a factor of two.  The phase works on
the auxiliary 3n-variable encoding, where refining one variable changes
only its low-bit bounds from (0,0) to (-1,+1); the nearby optimum is then
a kernel step of l1 norm at most 2*g1(abar), which the convolution tree
returns in one query.  Recentering after a step touches only the step's
support, so each phase costs n queries plus sparse updates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .convtree import ConvolutionTree
from .errors import InfeasibleError, ResourceCapError, ValidationError
from .graver import graver_basis
from .model import IpInstance, Solution, center_at, check_feasible, extend_phase_one
from .objective import convex_argmin
from .scaling import ceil_div, floor_div, phase_count
from .sensitivity import aux_instance, build_abar, decode
from .structure import (
    TdDecomposition,
    compute_td,
    dual_graph,
    lift_decomposition,
    split_instance,
    validate_td,
)

INF = math.inf


@dataclass
class DualConfig:
    rho: int | None = None
    graver_norm_cap: int = 60
    cell_cap: int = 10**8
    audit: bool = False
    stats: dict = field(default_factory=dict)


def solve_dual(inst: IpInstance, td: TdDecomposition | None = None,
               cfg: DualConfig | None = None, start=None) -> Solution:
    """Exact optimum, or InfeasibleError.  Splits disconnected dual graphs
    into independent pieces; finds a start by the slack extension when
    none is given."""
    cfg = cfg or DualConfig()
    pieces = split_instance(inst, "dual")
    if len(pieces) == 1 and pieces[0][0] is not None \
            and pieces[0][1] == tuple(range(inst.n)) \
            and pieces[0][2] == tuple(range(inst.m)):
        return _solve_connected(inst, td, cfg, start)
    x = [0] * inst.n
    total = 0
    for sub, cols, rows in pieces:
        if sub is None:
            raise InfeasibleError("a zero row has a nonzero right-hand side")
        sub_start = tuple(start[c] for c in cols) if start is not None else None
        sol = _solve_connected(sub, None, DualConfig(
            rho=cfg.rho, graver_norm_cap=cfg.graver_norm_cap,
            cell_cap=cfg.cell_cap, audit=cfg.audit), sub_start)
        for c, v in zip(cols, sol.x):
            x[c] = v
        total += sol.value
    return Solution(x, total)


def _solve_connected(inst: IpInstance, td, cfg: DualConfig, start):
    n, m = inst.n, inst.m
    if m == 0:
        # pure box problem (zero columns split off): coordinatewise minima
        if n == 0:
            return Solution((), 0)
        x = tuple(convex_argmin(t, lo, hi)
                  for t, lo, hi in zip(inst.f.terms, inst.l, inst.u))
        return Solution(x, inst.f.value(x))
    graph = dual_graph(inst.A)
    if td is None:
        td = compute_td(graph)
    elif not validate_td(graph, td):
        raise ValidationError("supplied decomposition is invalid for the dual graph")
    if start is None:
        start = _phase_one_start(inst, td, cfg)
    elif not check_feasible(inst, start):
        raise InfeasibleError("supplied start is not feasible")

    abar = build_abar(inst.A)
    td_bar = lift_decomposition(td, inst.A)
    rho = cfg.rho
    g1_abar = None
    if rho is None:
        try:
            g1_abar = graver_basis(abar, norm_cap=cfg.graver_norm_cap).norm(1)
        except ResourceCapError as exc:
            raise ResourceCapError(
                "graver basis of the auxiliary matrix is too large; "
                "supply rho explicitly") from exc
        rho = 2 * g1_abar

    cur = list(start)
    norm_c = max((max(abs(lo - v), abs(hi - v))
                  for lo, hi, v in zip(inst.l, inst.u, cur)), default=0)
    beta = phase_count(norm_c)
    stats = {"phases": beta, "rho": rho, "g1_abar": g1_abar,
             "steps": 0, "per_phase": []}
    tree = None
    for k in range(beta, 0, -1):
        s = 1 << (k - 1)
        lv = tuple(ceil_div(lo - c, s) for lo, c in zip(inst.l, cur))
        uv = tuple(floor_div(hi - c, s) for hi, c in zip(inst.u, cur))
        fv = inst.f.shift(cur).scale(s)
        view = IpInstance(inst.A, (0,) * m, lv, uv, fv)
        aux = aux_instance(view, range(n))
        if tree is None:
            tree = ConvolutionTree(abar, td_bar, rho, aux.l, aux.u, aux.f,
                                   cell_cap=cfg.cell_cap)
        else:
            tree.reinit(aux.l, aux.u, aux.f)
        before = dict(tree.stats)
        z = [0] * (3 * n)
        auxl = list(aux.l)
        auxu = list(aux.u)
        terms = aux.f.terms
        for j in range(n):
            # refine coordinate j: open its low bit from (0,0) to (-1,+1)
            if z[j] != 0:
                raise AssertionError("low bit moved before being opened")
            auxl[j], auxu[j] = -1, 1
            tree.update(j, -1, 1, terms[j])
            step = tree.query().best_kernel_step()
            stats["steps"] += 1
            if step.entries:
                items = []
                for i, hv in step.entries:
                    z[i] += hv
                    items.append((i, auxl[i] - z[i], auxu[i] - z[i],
                                  terms[i].shift(z[i])))
                tree.sigma_update(items)
        y = decode(z, frozenset(), n)
        if any(r != 0 for r in inst.A.apply(y)):
            raise AssertionError("phase result left the kernel; solver bug")
        for i in range(n):
            cur[i] += s * y[i]
        after = tree.stats
        stats["per_phase"].append({
            "k": k,
            "queries": after["queries"] - before["queries"],
            "updates": after["updates"] - before["updates"],
            "sigma_updates": after["sigma_updates"] - before["sigma_updates"],
            "node_recomputes": after["node_recomputes"] - before["node_recomputes"],
        })
    if not check_feasible(inst, cur):
        raise AssertionError("descaling lost feasibility; solver bug")
    value = inst.f.value(cur)
    if cfg.audit:
        from .oracle import brute_force_l1ip
        step = brute_force_l1ip(inst, tuple(cur), rho)
        if step is not None and step.value < value:
            raise AssertionError("audit found an improving step; solver bug")
        stats["audit"] = "ok"
    if tree is not None:
        stats["tree"] = dict(tree.stats)
        stats["tree_cells"] = tree.total_cells
    cfg.stats.update(stats)
    return Solution(cur, value)


def _phase_one_start(inst, td, cfg):
    """Feasible point via the slack extension, solved by this same solver.

    The extended matrix (A I) has the same dual graph as A, so the given
    decomposition carries over; recursion depth is one because the
    extension ships its own feasible start."""
    v = tuple(min(max(0, lo), hi) for lo, hi in zip(inst.l, inst.u))
    centered = center_at(inst, v)
    ext, ext_start = extend_phase_one(centered)
    sol = solve_dual(ext, td, DualConfig(
        rho=cfg.rho, graver_norm_cap=cfg.graver_norm_cap,
        cell_cap=cfg.cell_cap), start=ext_start.x)
    if sol.value != 0:
        raise InfeasibleError("phase-one optimum is positive: instance infeasible")
    return tuple(xi + vi for xi, vi in zip(sol.x[:inst.n], v))
