"""Graver bases: conformal order, completion-based computation, conformal
decomposition, and the norm parameters the solvers consume.
"""

from __future__ import annotations

import heapq
import itertools

from .errors import ResourceCapError, ValidationError
from .model import IntMatrix


def is_conformal(x, y) -> bool:
    """x conformal to y: same orthant and |x_i| <= |y_i| componentwise."""
    if len(x) != len(y):
        raise ValidationError("conformal comparison needs equal lengths")
    return all(xi * yi >= 0 and abs(xi) <= abs(yi) for xi, yi in zip(x, y))


def kernel_lattice_basis(A: IntMatrix) -> list[tuple[int, ...]]:
    """A lattice basis of ker_Z(A) via column-style Hermite reduction.

    Column operations on A are mirrored on an identity matrix U; the
    columns of U below the zero columns of the reduced A generate the
    integer kernel (not merely a full-rank sublattice).
    """
    m, n = A.rows, A.cols
    work = [list(col) for col in zip(*A.dense())] if m else [[] for _ in range(n)]
    # work[j] is column j (length m); U starts as identity
    U = [[1 if i == j else 0 for i in range(n)] for j in range(n)]

    def col_add(dst, src, mult):
        wd, ws = work[dst], work[src]
        for i in range(m):
            wd[i] += mult * ws[i]
        ud, us = U[dst], U[src]
        for i in range(n):
            ud[i] += mult * us[i]

    def col_swap(a, b):
        work[a], work[b] = work[b], work[a]
        U[a], U[b] = U[b], U[a]

    row = 0
    lead = 0
    while row < m and lead < n:
        # euclidean elimination within row `row` over columns lead..n-1
        while True:
            nz = [j for j in range(lead, n) if work[j][row] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda j: abs(work[j][row]))
            col_swap(lead, piv)
            done = True
            for j in range(lead + 1, n):
                q = work[j][row] // work[lead][row]
                if q:
                    col_add(j, lead, -q)
                if work[j][row] != 0:
                    done = False
            if done:
                break
        if any(work[j][row] != 0 for j in range(lead, n)):
            lead += 1
        row += 1
    return [tuple(U[j]) for j in range(lead, n)]


class GraverBasis:
    """The set of conformally minimal nonzero integer kernel vectors."""

    __slots__ = ("matrix", "elements")

    def __init__(self, matrix: IntMatrix, elements):
        self.matrix = matrix
        self.elements = frozenset(tuple(e) for e in elements)

    def norm(self, p) -> int:
        """g_p: the maximum l_p norm over elements (0 when empty)."""
        if not self.elements:
            return 0
        if p == 1:
            return max(sum(abs(v) for v in g) for g in self.elements)
        if p in ("inf", float("inf")):
            return max(max(abs(v) for v in g) for g in self.elements)
        raise ValidationError(f"unsupported norm {p!r}")

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(sorted(self.elements))

    def __repr__(self):
        return f"GraverBasis(|G|={len(self.elements)})"


def g_norm(basis: GraverBasis, p) -> int:
    return basis.norm(p)


def _reduce(h, pool_by_sign):
    """Conformal normal form: subtract pool elements g with g conformal to h."""
    h = list(h)
    n = len(h)
    changed = True
    while changed and any(h):
        changed = False
        for g in pool_by_sign:
            ok = True
            for i in range(n):
                gi = g[i]
                if gi and (h[i] * gi < 0 or abs(gi) > abs(h[i])):
                    ok = False
                    break
            if ok:
                for i in range(n):
                    h[i] -= g[i]
                changed = True
                if not any(h):
                    break
    return tuple(h)


def graver_basis(A: IntMatrix, norm_cap: int = 100,
                 l1_cap: int | None = None) -> GraverBasis:
    """Exact Graver basis by Pottier-style completion.

    Start from a lattice basis of the integer kernel together with its
    negations, close under pairwise sums reduced to conformal normal
    form, and finally keep the conformally minimal elements.  Elements
    whose l_inf norm would exceed norm_cap (or l1 norm l1_cap, when set)
    abort the computation; callers that merely probe whether g_1 is small
    pass a tight l1_cap to fail fast.
    """
    if A.cols == 0:
        return GraverBasis(A, [])
    basis = kernel_lattice_basis(A)
    if not basis:
        return GraverBasis(A, [])

    def cap_check(v):
        if max(abs(c) for c in v) > norm_cap:
            raise ResourceCapError(
                f"graver completion exceeded the l_inf cap {norm_cap}")
        if l1_cap is not None and sum(abs(c) for c in v) > l1_cap:
            raise ResourceCapError(
                f"graver completion exceeded the l1 cap {l1_cap}")

    pool: list[tuple[int, ...]] = []
    pool_set: set[tuple[int, ...]] = set()
    queue: list[tuple[int, tuple[int, ...]]] = []
    seeds = set()

    def push(v):
        if any(v) and v not in pool_set:
            heapq.heappush(queue, (sum(abs(c) for c in v), v))

    for v in basis:
        seeds.add(v)
        seeds.add(tuple(-c for c in v))
        push(v)
        push(tuple(-c for c in v))

    while queue:
        _, h = heapq.heappop(queue)
        if h in pool_set:
            continue
        h = _reduce(h, pool)
        if not any(h):
            continue
        if h not in seeds:
            # seed vectors may be large before reduction kicks in; derived
            # growth past the caps signals a basis too big for the caller
            cap_check(h)
        pool.append(h)
        pool_set.add(h)
        neg = tuple(-c for c in h)
        if neg not in pool_set:
            pool.append(neg)
            pool_set.add(neg)
        for g in list(pool):
            s = tuple(a + b for a, b in zip(h, g))
            push(s)
            s2 = tuple(a + b for a, b in zip(neg, g))
            push(s2)

    # minimality sieve: keep h iff no other pool element is conformal to it
    elements = []
    for h in pool:
        minimal = True
        for g in pool:
            if g != h and any(g) and is_conformal(g, h):
                minimal = False
                break
        if minimal:
            elements.append(h)
    for h in elements:
        cap_check(h)
    return GraverBasis(A, elements)


def graver_basis_brute(A: IntMatrix, box: int, volume_cap: int = 10**7) -> GraverBasis:
    """Independent oracle: enumerate kernel vectors in [-box, box]^n and
    filter the conformally minimal ones.  Exact whenever the true basis
    fits in the box (downward closure makes the filter safe)."""
    n = A.cols
    if (2 * box + 1) ** n > volume_cap:
        raise ResourceCapError("brute-force graver box too large")
    kernel = []
    for v in itertools.product(range(-box, box + 1), repeat=n):
        if any(v) and all(s == 0 for s in A.apply(v)):
            kernel.append(v)
    elements = []
    for h in kernel:
        if not any(g != h and is_conformal(g, h) for g in kernel):
            elements.append(h)
    return GraverBasis(A, elements)


def conformal_decompose(A: IntMatrix, x, basis: GraverBasis | None = None):
    """Write a kernel vector as sum of positive multiples of basis elements
    conformal to it.

    Greedy: repeatedly subtract the largest applicable multiple of a
    conformally maximal applicable element (ties broken lexicographically).
    Returns a list of (element, multiplicity) pairs.
    """
    x = tuple(int(v) for v in x)
    if any(s != 0 for s in A.apply(x)):
        raise ValidationError("conformal decomposition needs a kernel vector")
    if basis is None:
        basis = graver_basis(A)
    out = []
    rest = list(x)
    while any(rest):
        applicable = [g for g in basis.elements if _fits(g, rest)]
        if not applicable:
            raise ValidationError(
                "kernel vector not decomposable over the supplied basis")
        maximal = [g for g in applicable
                   if not any(h != g and _fits(g, h) for h in applicable)]
        g = min(maximal)
        lam = min(abs(r) // abs(c) for r, c in zip(rest, g) if c)
        for i, c in enumerate(g):
            rest[i] -= lam * c
        out.append((g, lam))
    return out


def _fits(g, rest) -> bool:
    return all(gi * ri >= 0 and abs(gi) <= abs(ri) for gi, ri in zip(g, rest))
