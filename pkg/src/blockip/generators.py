"""Seeded generators for n-fold, tree-fold and 2-stage instances.

Matrices follow the usual block zero patterns; every emitted instance
carries a matching td decomposition (dual for n-fold/tree-fold, primal
for 2-stage) that validates by construction, and a feasible point used
for the right-hand side.
"""

from __future__ import annotations

import random

from .errors import ValidationError
from .graver import graver_basis
from .model import IntMatrix, IpInstance
from .objective import LinearTerm, PwlTerm, QuadraticTerm, SeparableObjective
from .sensitivity import build_abar
from .structure import TdDecomposition


def random_objective(rng: random.Random, n: int,
                     kinds=("linear", "quadratic", "pwl")) -> SeparableObjective:
    terms = []
    for _ in range(n):
        kind = rng.choice(kinds)
        if kind == "linear":
            terms.append(LinearTerm(rng.randint(-5, 5)))
        elif kind == "quadratic":
            terms.append(QuadraticTerm(rng.randint(0, 3), rng.randint(-4, 4)))
        else:
            xs = sorted(rng.sample(range(-10, 11), 3))
            y0 = rng.randint(-5, 5)
            s1 = rng.randint(-4, 4)
            s2 = rng.randint(s1, 5)
            ys = [y0, y0 + s1 * (xs[1] - xs[0])]
            ys.append(ys[1] + s2 * (xs[2] - xs[1]))
            terms.append(PwlTerm(list(zip(xs, ys))))
    return SeparableObjective(terms)


def _random_bounds(rng, n, lo_min, width_max):
    l = [rng.randint(lo_min, 0) for _ in range(n)]
    u = [l[i] + rng.randint(0, width_max) for i in range(n)]
    return l, u


def gen_nfold(seed: int, blocks: int = 3, block_cols: int = 2,
              block_rows: int = 1, coupling_rows: int = 1, amax: int = 1,
              lo_min: int = -8, width_max: int = 8, kinds=("linear", "quadratic", "pwl")):
    """n-fold instance: coupling rows over all columns, diagonal blocks.

    Returns (instance, td_dual, feasible_point).
    """
    if min(blocks, block_cols, block_rows, coupling_rows) < 1:
        raise ValidationError("n-fold parameters must be positive")
    rng = random.Random(seed)
    n = blocks * block_cols
    m = coupling_rows + blocks * block_rows
    ents = []
    for r in range(coupling_rows):
        for c in range(n):
            v = rng.randint(-amax, amax)
            if c % block_cols == 0 and v == 0:
                v = rng.choice((-1, 1))  # keep every block coupled
            if v:
                ents.append((r, c, v))
    for bid in range(blocks):
        for rr in range(block_rows):
            r = coupling_rows + bid * block_rows + rr
            placed = False
            for cc in range(block_cols):
                v = rng.randint(-amax, amax)
                if v:
                    ents.append((r, bid * block_cols + cc, v))
                    placed = True
            if not placed:
                ents.append((r, bid * block_cols + rng.randrange(block_cols), 1))
    A = IntMatrix(m, n, ents)
    parent = [r - 1 for r in range(coupling_rows)]
    for bid in range(blocks):
        for rr in range(block_rows):
            parent.append(coupling_rows - 1 if rr == 0
                          else coupling_rows + bid * block_rows + rr - 1)
    td = TdDecomposition(parent)
    l, u = _random_bounds(rng, n, lo_min, width_max)
    f = random_objective(rng, n, kinds)
    xhat = tuple(rng.randint(l[i], u[i]) for i in range(n))
    inst = IpInstance(A, A.apply(xhat), l, u, f)
    return inst, td, xhat


def gen_treefold(seed: int, top_rows: int = 1, mid_blocks: int = 2,
                 mid_rows: int = 1, leaf_blocks: int = 2, leaf_cols: int = 2,
                 amax: int = 1, lo_min: int = -8, width_max: int = 8,
                 kinds=("linear", "quadratic", "pwl")):
    """Tree-fold instance with three row layers (top / mid / leaf blocks).

    Column groups belong to leaf blocks; a leaf block's rows are its own
    row, its mid block's rows, and the top rows.  Returns
    (instance, td_dual, feasible_point).
    """
    rng = random.Random(seed)
    n = mid_blocks * leaf_blocks * leaf_cols
    m = top_rows + mid_blocks * (mid_rows + leaf_blocks)
    ents = []
    parent = [r - 1 for r in range(top_rows)]
    row = top_rows
    col = 0
    for mb in range(mid_blocks):
        mid_start = row
        for rr in range(mid_rows):
            parent.append(top_rows - 1 if rr == 0 else row - 1)
            row += 1
        leaf_rows = []
        for lb in range(leaf_blocks):
            parent.append(mid_start + mid_rows - 1)
            leaf_rows.append(row)
            row += 1
        for lb in range(leaf_blocks):
            for cc in range(leaf_cols):
                c = col
                col += 1
                for r in range(top_rows):
                    v = rng.randint(-amax, amax)
                    if cc == 0 and lb == 0 and v == 0:
                        v = 1
                    if v:
                        ents.append((r, c, v))
                for rr in range(mid_rows):
                    v = rng.randint(-amax, amax)
                    if cc == 0 and v == 0:
                        v = 1
                    if v:
                        ents.append((mid_start + rr, c, v))
                v = rng.randint(-amax, amax)
                if v == 0:
                    v = 1
                ents.append((leaf_rows[lb], c, v))
    A = IntMatrix(m, n, ents)
    td = TdDecomposition(parent)
    l, u = _random_bounds(rng, n, lo_min, width_max)
    f = random_objective(rng, n, kinds)
    xhat = tuple(rng.randint(l[i], u[i]) for i in range(n))
    inst = IpInstance(A, A.apply(xhat), l, u, f)
    return inst, td, xhat


def gen_twostage(seed: int, blocks: int = 3, first_cols: int = 1,
                 block_cols: int = 2, block_rows: int = 1, amax: int = 1,
                 lo_min: int = -8, width_max: int = 8,
                 kinds=("linear", "quadratic", "pwl")):
    """2-stage instance: shared first-stage columns plus per-block columns.

    Returns (instance, td_primal, feasible_point).
    """
    rng = random.Random(seed)
    n = first_cols + blocks * block_cols
    m = blocks * block_rows
    ents = []
    for bid in range(blocks):
        for rr in range(block_rows):
            r = bid * block_rows + rr
            for c in range(first_cols):
                v = rng.randint(-amax, amax)
                if c == 0 and v == 0:
                    v = rng.choice((-1, 1))
                if v:
                    ents.append((r, c, v))
            placed = False
            for cc in range(block_cols):
                v = rng.randint(-amax, amax)
                if v:
                    ents.append((r, first_cols + bid * block_cols + cc, v))
                    placed = True
            if not placed:
                ents.append((r, first_cols + bid * block_cols
                             + rng.randrange(block_cols), 1))
    A = IntMatrix(m, n, ents)
    parent = [c - 1 for c in range(first_cols)]
    for bid in range(blocks):
        for cc in range(block_cols):
            parent.append(first_cols - 1 if cc == 0
                          else first_cols + bid * block_cols + cc - 1)
    td = TdDecomposition(parent)
    l, u = _random_bounds(rng, n, lo_min, width_max)
    f = random_objective(rng, n, kinds)
    xhat = tuple(rng.randint(l[i], u[i]) for i in range(n))
    inst = IpInstance(A, A.apply(xhat), l, u, f)
    return inst, td, xhat


def gen_dual_family(seed: int, index: int, rho_cap: int = 6,
                    volume_cap: int = 300_000, max_tries: int = 60):
    """One small n-fold or tree-fold instance suitable for exact
    differential testing: the auxiliary Graver norm is capped so the dual
    solver's rho = 2 g1(abar) stays at most rho_cap, and the box volume
    stays brute-forceable.  Deterministic in (seed, index)."""
    rng = random.Random((seed, index))
    for _ in range(max_tries):
        sub_seed = rng.randrange(2**30)
        if rng.random() < 0.7:
            blocks = rng.randint(2, 4)
            bcols = rng.randint(1, 3)
            inst, td, xhat = gen_nfold(
                sub_seed, blocks, bcols, block_rows=1, coupling_rows=1,
                amax=rng.choice((1, 1, 2)), lo_min=-8,
                width_max=_width_for(blocks * bcols, volume_cap))
        else:
            inst, td, xhat = gen_treefold(
                sub_seed, top_rows=1, mid_blocks=2, mid_rows=1,
                leaf_blocks=rng.randint(1, 2), leaf_cols=rng.randint(1, 2),
                amax=1, lo_min=-8,
                width_max=_width_for(8, volume_cap))
        if inst.n > 12 or inst.m > 5:
            continue
        if inst.box_volume() > volume_cap:
            continue
        try:
            g1 = graver_basis(build_abar(inst.A), norm_cap=rho_cap,
                              l1_cap=rho_cap // 2).norm(1)
        except Exception:
            continue
        if 2 * g1 > rho_cap:
            continue
        return inst, td, xhat
    raise ValidationError(f"no acceptable instance after {max_tries} tries "
                          f"(seed={seed}, index={index})")


def gen_primal_family(seed: int, index: int, volume_cap: int = 300_000,
                      max_tries: int = 60):
    """One small 2-stage instance with a brute-forceable box and a modest
    Graver norm for the primal solver's rho = g_inf(A)."""
    rng = random.Random((seed, index, "primal"))
    for _ in range(max_tries):
        sub_seed = rng.randrange(2**30)
        blocks = rng.randint(2, 4)
        bcols = rng.randint(1, 2)
        fcols = rng.randint(1, 2)
        inst, td, xhat = gen_twostage(
            sub_seed, blocks, fcols, bcols, block_rows=1,
            amax=rng.choice((1, 1, 2)), lo_min=-8,
            width_max=_width_for(fcols + blocks * bcols, volume_cap))
        if inst.n > 12 or inst.m > 5:
            continue
        if inst.box_volume() > volume_cap:
            continue
        try:
            ginf = graver_basis(inst.A, norm_cap=8).norm("inf")
        except Exception:
            continue
        if ginf > 4:
            continue
        return inst, td, xhat
    raise ValidationError(f"no acceptable instance after {max_tries} tries "
                          f"(seed={seed}, index={index})")


def _width_for(n: int, volume_cap: int) -> int:
    """Largest uniform box width keeping (w+1)^n under the volume cap."""
    w = 1
    while (w + 2) ** n <= volume_cap and w < 8:
        w += 1
    return w
