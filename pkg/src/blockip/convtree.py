"""Dynamic (min,+)-convolution tree over a dual td-decomposition.

The tree represents an l1-bounded kernel-step problem: for a matrix A,
state bounds l,u and separable convex objective f, it answers, for every
residual r on the prefix rows and every budget eta <= rho, the cheapest
integer g with A g = (r, 0), l <= g <= u and ||g||_1 = eta.  Updates to a
single coordinate's state only recompute the tables on one leaf-to-root
path.

Layout: columns are permuted into nested dual-block order and joined by
balanced full binary trees, one join tree per block level.  Each node
keeps a cost table over its residual domain; a node's open rows are the
rows whose support crosses the node's column span (top-level prefix rows
stay open everywhere they appear).  Rows falling entirely inside a span
are closed there and forced to zero by the convolution.

Tables come in two flavors chosen per node by domain size: small domains
use dense lists plus a precompiled pair program (the hot path for tiny
residual sets such as the sorting reduction); large domains store only
finite entries in dicts keyed by (eta, residual) and convolve finite x
finite.  Both paths break cost ties identically: the first pair in
(left cell, right cell) ascending order wins.
"""

from __future__ import annotations

import math

from .errors import ResourceCapError, ValidationError
from .model import IntMatrix
from .objective import SeparableObjective
from .structure import DualBlockStructure, TdDecomposition, block_structure

INF = math.inf

_PROG_PAIR_LIMIT = 30_000
_DENSE_MAX_CELLS = 700


def _mixed_radix(bounds):
    """Enumerate residual tuples with coordinates in [-b, b] per bound."""
    if not bounds:
        yield ()
        return
    cur = [-b for b in bounds]
    n = len(bounds)
    while True:
        yield tuple(cur)
        i = n - 1
        while i >= 0:
            cur[i] += 1
            if cur[i] <= bounds[i]:
                break
            cur[i] = -bounds[i]
            i -= 1
        if i < 0:
            return


class _Domain:
    """Residual index set of one node: open rows with per-eta ranges.

    Cells are laid out eta-major; within one eta the residual tuple is a
    mixed-radix index with per-row half-width bound(eta).  A pruned
    domain bounds row t by caps[t]*eta (nothing with ||g||_1 = eta can
    exceed it); the root domain is unpruned so that it equals the full
    query interface R x [0, rho].
    """

    __slots__ = ("rows", "caps", "rho", "pruned", "eta_offset", "eta_bounds",
                 "eta_strides", "ncells", "_meta")

    def __init__(self, rows, caps, rho, amax, pruned=True):
        self.rows = tuple(rows)
        self.caps = tuple(caps)
        self.rho = rho
        self.pruned = pruned
        offs, bounds, strides = [], [], []
        total = 0
        for eta in range(rho + 1):
            if pruned:
                bnd = tuple(c * eta for c in self.caps)
            else:
                bnd = tuple(amax * rho for _ in self.caps)
            st = []
            width = 1
            for b in reversed(bnd):
                st.append(width)
                width *= 2 * b + 1
            st.reverse()
            offs.append(total)
            bounds.append(bnd)
            strides.append(tuple(st))
            total += width
        self.eta_offset = tuple(offs)
        self.eta_bounds = tuple(bounds)
        self.eta_strides = tuple(strides)
        self.ncells = total
        self._meta = None

    def index(self, eta, rvec):
        """Flat cell index, or -1 when rvec is outside this eta's bounds."""
        bnd = self.eta_bounds[eta]
        st = self.eta_strides[eta]
        idx = self.eta_offset[eta]
        for v, b, s in zip(rvec, bnd, st):
            if v < -b or v > b:
                return -1
            idx += (v + b) * s
        return idx

    def in_bounds(self, eta, rvec) -> bool:
        for v, b in zip(rvec, self.eta_bounds[eta]):
            if v < -b or v > b:
                return False
        return True

    def meta(self):
        """cell index -> (eta, residual tuple); only for dense domains."""
        if self._meta is None:
            out = []
            for eta in range(self.rho + 1):
                out.extend((eta, rv) for rv in _mixed_radix(self.eta_bounds[eta]))
            self._meta = out
        return self._meta

    def keys(self):
        """Iterate (eta, rvec) in cell order without caching."""
        for eta in range(self.rho + 1):
            for rv in _mixed_radix(self.eta_bounds[eta]):
                yield (eta, rv)

    def signature(self):
        return (self.caps, self.rho, self.pruned)


class _Node:
    __slots__ = ("lo", "hi", "left", "right", "parent", "col", "domain",
                 "dense", "costs", "wl", "wr", "table", "prog", "align",
                 "leaf_open_coeffs", "leaf_closed_coeffs", "version",
                 "depth", "counts", "caps")

    def __init__(self):
        self.lo = self.hi = 0
        self.left = self.right = self.parent = None
        self.col = -1
        self.domain = None
        self.dense = True
        self.costs = self.wl = self.wr = None
        self.table = None  # sparse: {(eta, rvec): (cost, wl, wr)}
        self.prog = None
        self.align = None
        self.leaf_open_coeffs = ()
        self.leaf_closed_coeffs = ()
        self.version = 0
        self.depth = 0
        self.counts = None
        self.caps = None

    def is_leaf(self):
        return self.left is None

    def cost_of(self, cell):
        if self.dense:
            return self.costs[cell]
        ent = self.table.get(cell)
        return INF if ent is None else ent[0]

    def finite_items(self):
        """Sorted (cell, eta, rvec, cost) over finite entries."""
        if self.dense:
            meta = self.domain.meta()
            return [(idx, meta[idx][0], meta[idx][1], c)
                    for idx, c in enumerate(self.costs) if c is not INF]
        return [(key, key[0], key[1], ent[0])
                for key, ent in sorted(self.table.items())]


class TreeStep:
    """One kernel step: sparse entries, exact cost, and its l1 norm."""

    __slots__ = ("cost", "eta", "entries")

    def __init__(self, cost, eta, entries):
        self.cost = cost
        self.eta = eta
        self.entries = tuple(sorted(entries))

    def dense(self, n):
        out = [0] * n
        for c, v in self.entries:
            out[c] = v
        return tuple(out)

    def __repr__(self):
        return f"TreeStep(cost={self.cost}, eta={self.eta}, entries={self.entries})"


class SolutionSequence:
    """Query result: per (r, eta) in R x [0, rho], cost and lazy vectors.

    Valid until the next update on the owning tree.
    """

    def __init__(self, tree):
        self._tree = tree
        self._version = tree._global_version
        self.prefix_rows = tree.prefix_rows
        self.rho = tree.rho
        self.residual_bound = tree.residual_bound

    def _check(self):
        if self._version != self._tree._global_version:
            raise ValidationError("solution sequence invalidated by an update")

    def _cell(self, rvec, eta):
        root = self._tree._root
        rvec = tuple(rvec)
        if not root.domain.in_bounds(eta, rvec):
            return None
        return root.domain.index(eta, rvec) if root.dense else (eta, rvec)

    def cost(self, rvec, eta):
        self._check()
        cell = self._cell(rvec, eta)
        return INF if cell is None else self._tree._root.cost_of(cell)

    def vector(self, rvec, eta):
        """Sparse entries [(col, value), ...] or None when infeasible."""
        self._check()
        cell = self._cell(rvec, eta)
        if cell is None or self._tree._root.cost_of(cell) is INF:
            return None
        return sorted(self._tree._reconstruct(self._tree._root, cell))

    def items(self):
        """Iterate ((rvec, eta), cost) over the whole interface domain."""
        self._check()
        root = self._tree._root
        if root.dense:
            meta = root.domain.meta()
            for idx, cost in enumerate(root.costs):
                eta, rvec = meta[idx]
                yield (rvec, eta), cost
        else:
            table = root.table
            for key in root.domain.keys():
                ent = table.get(key)
                yield (key[1], key[0]), (INF if ent is None else ent[0])

    def best_kernel_step(self) -> TreeStep:
        """Minimum-cost entry over {(0, eta)}: the l1-IP step (r = 0).

        Ties prefer the smallest eta; within one cell the witness chain
        is deterministic.
        """
        self._check()
        tree = self._tree
        root = tree._root
        best_cell = None
        best_cost = INF
        best_eta = 0
        for eta, cell in enumerate(tree._root_zero_cells):
            c = root.cost_of(cell)
            if c < best_cost:
                best_cost = c
                best_cell = cell
                best_eta = eta
        if best_cell is None:
            raise ValidationError("no feasible kernel step, not even zero")
        entries = tree._reconstruct(root, best_cell)
        return TreeStep(best_cost, best_eta, entries)


class ConvolutionTree:
    """See module docstring.  Exclusively owned by one caller at a time."""

    def __init__(self, A: IntMatrix, td: TdDecomposition, rho: int,
                 l, u, f: SeparableObjective, cell_cap: int = 10**8):
        if rho < 0:
            raise ValidationError("rho must be non-negative")
        if len(l) != A.cols or len(u) != A.cols or f.arity != A.cols:
            raise ValidationError("state dimensions must match the column count")
        self.A = A
        self.td = td
        self.rho = rho
        self.amax = A.inf_norm
        self.residual_bound = self.amax * rho
        struct = block_structure(A, td)  # validates td against G_D(A)
        self.structure = struct
        self.prefix_rows = struct.prefix_rows
        self.height_exponent = 2 * td.height + 1  # table-size exponent H
        self.stats = {"inits": 0, "updates": 0, "sigma_updates": 0,
                      "queries": 0, "node_recomputes": 0, "leaf_recomputes": 0}
        self._global_version = 0
        self._prog_cache = {}
        self._domain_cache = {}
        self._build(struct, cell_cap)
        self._lt = list(l)
        self._ut = list(u)
        self._ft = list(f.terms)
        self._validate_state()
        self._full_recompute()
        self.stats["inits"] += 1

    # -- public operations ---------------------------------------------------

    @property
    def state(self):
        return tuple(self._lt), tuple(self._ut), SeparableObjective(self._ft)

    def reinit(self, l, u, f: SeparableObjective):
        """Reset the whole state and recompute every table (a fresh Init)."""
        if len(l) != self.A.cols or len(u) != self.A.cols or f.arity != self.A.cols:
            raise ValidationError("state dimensions must match the column count")
        self._lt = list(l)
        self._ut = list(u)
        self._ft = list(f.terms)
        self._validate_state()
        self._global_version += 1
        self._full_recompute()
        self.stats["inits"] += 1

    def update(self, i: int, l_i: int, u_i: int, f_i):
        """Replace coordinate i's bounds and objective term; recompute the
        leaf-to-root path only."""
        self._set_coord(i, l_i, u_i, f_i)
        self._global_version += 1
        self.stats["updates"] += 1
        leaf = self._leaf_of_col[i]
        self._recompute_leaf(leaf)
        node = leaf.parent
        while node is not None:
            self._recompute_internal(node)
            node = node.parent

    def sigma_update(self, items):
        """Batch of (i, l_i, u_i, f_i), equivalent to single updates applied
        in increasing index order; shared path segments recompute once."""
        items = sorted(items, key=lambda t: t[0])
        self.stats["sigma_updates"] += 1
        if not items:
            return
        self._global_version += 1
        self.stats["updates"] += len(items)
        dirty = {}
        for i, l_i, u_i, f_i in items:
            self._set_coord(i, l_i, u_i, f_i)
            leaf = self._leaf_of_col[i]
            self._recompute_leaf(leaf)
            if leaf.parent is not None:
                dirty[id(leaf.parent)] = leaf.parent
        while dirty:
            node = max(dirty.values(), key=lambda nd: nd.depth)
            del dirty[id(node)]
            self._recompute_internal(node)
            if node.parent is not None:
                dirty[id(node.parent)] = node.parent

    def query(self) -> SolutionSequence:
        self.stats["queries"] += 1
        return SolutionSequence(self)

    # -- construction ----------------------------------------------------------

    def _build(self, struct: DualBlockStructure, cell_cap: int):
        A = self.A
        leaves: list[_Node] = []

        def join_balanced(parts):
            if len(parts) == 1:
                return parts[0]
            mid = (len(parts) + 1) // 2
            left = join_balanced(parts[:mid])
            right = join_balanced(parts[mid:])
            nd = _Node()
            nd.left, nd.right = left, right
            nd.lo, nd.hi = left.lo, right.hi
            left.parent = right.parent = nd
            return nd

        def build_level(s: DualBlockStructure):
            if s.is_leaf_level():
                parts = []
                for c in s.col_order:
                    nd = _Node()
                    nd.col = c
                    nd.lo = len(leaves)
                    nd.hi = nd.lo + 1
                    leaves.append(nd)
                    parts.append(nd)
            else:
                parts = [build_level(ch) for ch in s.children]
            return join_balanced(parts)

        root = build_level(struct)
        self._root = root
        self._leaves = leaves
        self._leaf_of_col = {nd.col: nd for nd in leaves}

        row_total: dict[int, int] = {}
        for nd in leaves:
            for r, _ in A.col_support[nd.col]:
                row_total[r] = row_total.get(r, 0) + 1
        prefix = set(self.prefix_rows)
        depth_of = self.td.depth

        order: list[_Node] = []
        stack = [(root, 0)]
        while stack:
            nd, d = stack.pop()
            nd.depth = d
            order.append(nd)
            if not nd.is_leaf():
                stack.append((nd.left, d + 1))
                stack.append((nd.right, d + 1))
        order.reverse()  # children before parents
        self._topo = order

        total_cells = 0
        for nd in order:
            if nd.is_leaf():
                nd.counts = {r: 1 for r, _ in A.col_support[nd.col]}
                nd.caps = {r: abs(v) for r, v in A.col_support[nd.col]}
            else:
                counts = dict(nd.left.counts)
                caps = dict(nd.left.caps)
                for r, cnt in nd.right.counts.items():
                    counts[r] = counts.get(r, 0) + cnt
                for r, cp in nd.right.caps.items():
                    caps[r] = max(caps.get(r, 0), cp)
                nd.counts = counts
                nd.caps = caps
            if nd is root:
                rows = sorted(prefix, key=lambda r: (depth_of[r], r))
                nd.domain = self._domain(rows, [self.amax] * len(rows),
                                         pruned=False)
            else:
                rows = sorted(
                    (r for r, cnt in nd.counts.items()
                     if cnt < row_total[r] or r in prefix),
                    key=lambda r: (depth_of[r], r))
                nd.domain = self._domain(rows, [nd.caps[r] for r in rows],
                                         pruned=True)
            nd.dense = nd.domain.ncells <= _DENSE_MAX_CELLS
            if nd.dense:
                total_cells += nd.domain.ncells
            else:
                total_cells += min(nd.domain.ncells, 4 * _DENSE_MAX_CELLS)
            if total_cells > cell_cap:
                raise ResourceCapError(
                    f"convolution tree exceeds the cell cap {cell_cap} "
                    f"(rho={self.rho}, |A|_inf={self.amax})")
            if nd.is_leaf():
                open_set = set(nd.domain.rows)
                nd.leaf_open_coeffs = tuple(
                    A.at(r, nd.col) for r in nd.domain.rows)
                nd.leaf_closed_coeffs = tuple(
                    v for r, v in A.col_support[nd.col] if r not in open_set)
        self.total_cells = total_cells

        for nd in order:
            nd.counts = nd.caps = None
            if not nd.is_leaf():
                self._prepare_alignment(nd)
        zero = (0,) * len(root.domain.rows)
        self._root_zero_cells = [
            root.domain.index(eta, zero) if root.dense else (eta, zero)
            for eta in range(self.rho + 1)]

    def _domain(self, rows, caps, pruned):
        key = (tuple(rows), tuple(caps), pruned)
        dom = self._domain_cache.get(key)
        if dom is None:
            dom = _Domain(rows, caps, self.rho, self.amax, pruned)
            self._domain_cache[key] = dom
        return dom

    def _prepare_alignment(self, node: _Node):
        """Row alignment between a node and its children, plus the static
        pair program when all three tables are dense and small."""
        v, w = node.left, node.right
        vpos = {r: i for i, r in enumerate(v.domain.rows)}
        wpos = {r: i for i, r in enumerate(w.domain.rows)}
        upos = {r: i for i, r in enumerate(node.domain.rows)}
        out_map = tuple((vpos.get(r, -1), wpos.get(r, -1))
                        for r in node.domain.rows)
        cancel = tuple((vpos[r], wpos[r]) for r in v.domain.rows
                       if r in wpos and r not in upos)
        v_zero = tuple(vpos[r] for r in v.domain.rows
                       if r not in wpos and r not in upos)
        w_zero = tuple(wpos[r] for r in w.domain.rows
                       if r not in vpos and r not in upos)
        node.align = (out_map, cancel, v_zero, w_zero)
        if node.dense and v.dense and w.dense:
            node.prog = self._program(node)

    def _program(self, node: _Node):
        """Static (out, left, right) triple list, cached by shape; None when
        the pair count estimate is too large (sparse path instead)."""
        v, w, u = node.left.domain, node.right.domain, node.domain
        key = (v.signature(), w.signature(), u.signature(), node.align)
        if key in self._prog_cache:
            return self._prog_cache[key]
        rho = self.rho

        def layer_sizes(dom):
            sizes = []
            for eta in range(rho + 1):
                width = 1
                for b in dom.eta_bounds[eta]:
                    width *= 2 * b + 1
                sizes.append(width)
            return sizes

        vs, ws = layer_sizes(v), layer_sizes(w)
        est = sum(vs[ev] * ws[ew]
                  for ev in range(rho + 1) for ew in range(rho + 1 - ev))
        if est > _PROG_PAIR_LIMIT:
            self._prog_cache[key] = None
            return None
        v_by_eta = [[] for _ in range(rho + 1)]
        for idx, (eta, rv) in enumerate(v.meta()):
            v_by_eta[eta].append((idx, rv))
        w_by_eta = [[] for _ in range(rho + 1)]
        for idx, (eta, rw) in enumerate(w.meta()):
            w_by_eta[eta].append((idx, rw))
        out_map, cancel, v_zero, w_zero = node.align
        prog = []
        for ev in range(rho + 1):
            for ew in range(rho + 1 - ev):
                eu = ev + ew
                for iv, rv in v_by_eta[ev]:
                    if any(rv[p] for p in v_zero):
                        continue
                    for iw, rw in w_by_eta[ew]:
                        if any(rw[p] for p in w_zero):
                            continue
                        if any(rv[pv] + rw[pw] for pv, pw in cancel):
                            continue
                        ru = tuple(
                            (rv[pv] if pv >= 0 else 0) + (rw[pw] if pw >= 0 else 0)
                            for pv, pw in out_map)
                        k = u.index(eu, ru)
                        if k >= 0:
                            prog.append((k, iv, iw))
        prog.sort()
        self._prog_cache[key] = prog
        return prog

    # -- state and recomputation ----------------------------------------------

    def _validate_state(self):
        for i, (lo, hi) in enumerate(zip(self._lt, self._ut)):
            if lo > hi:
                raise ValidationError(f"state bounds crossed at coordinate {i}")

    def _set_coord(self, i, l_i, u_i, f_i):
        if not 0 <= i < self.A.cols:
            raise ValidationError(f"coordinate {i} out of range")
        if l_i > u_i:
            raise ValidationError(f"state bounds crossed at coordinate {i}")
        self._lt[i] = l_i
        self._ut[i] = u_i
        self._ft[i] = f_i

    def _full_recompute(self):
        for nd in self._topo:
            if nd.is_leaf():
                self._recompute_leaf(nd)
            else:
                self._recompute_internal(nd)

    def _recompute_leaf(self, node: _Node):
        self.stats["leaf_recomputes"] += 1
        node.version += 1
        dom = node.domain
        col = node.col
        lo, hi = self._lt[col], self._ut[col]
        term = self._ft[col]
        coeffs = node.leaf_open_coeffs
        candidates = []
        if lo <= 0 <= hi:
            candidates.append(0)
        if not any(node.leaf_closed_coeffs):
            for eta in range(1, self.rho + 1):
                if lo <= -eta <= hi:
                    candidates.append(-eta)
                if lo <= eta <= hi:
                    candidates.append(eta)
        if node.dense:
            costs = [INF] * dom.ncells
            wl = node.wl if node.wl is not None else [0] * dom.ncells
            for g in candidates:
                idx = dom.index(abs(g), tuple(a * g for a in coeffs))
                if idx < 0:
                    continue
                c = term.value_at(g)
                if c < costs[idx]:
                    costs[idx] = c
                    wl[idx] = g
            node.costs = costs
            node.wl = wl
        else:
            table = {}
            for g in candidates:
                eta = abs(g)
                rvec = tuple(a * g for a in coeffs)
                if not dom.in_bounds(eta, rvec):
                    continue
                key = (eta, rvec)
                c = term.value_at(g)
                prev = table.get(key)
                if prev is None or c < prev[0]:
                    table[key] = (c, g, None)
            node.table = table

    def _recompute_internal(self, node: _Node):
        self.stats["node_recomputes"] += 1
        node.version += 1
        if node.prog is not None:
            av = node.left.costs
            bv = node.right.costs
            costs = [INF] * node.domain.ncells
            wl = [0] * node.domain.ncells
            wr = [0] * node.domain.ncells
            for k, i, j in node.prog:
                c = av[i] + bv[j]
                if c < costs[k]:
                    costs[k] = c
                    wl[k] = i
                    wr[k] = j
            node.costs = costs
            node.wl = wl
            node.wr = wr
            return
        self._mixed_convolve(node)

    def _mixed_convolve(self, node: _Node):
        """Finite x finite convolution; children and output may be dense
        or sparse.  Iteration order (left cell asc, right cell asc) makes
        tie-breaking match the program path exactly."""
        rho = self.rho
        dom = node.domain
        out_map, cancel, v_zero, w_zero = node.align
        v_fin = [[] for _ in range(rho + 1)]
        for cell, eta, rv, c in node.left.finite_items():
            if not any(rv[p] for p in v_zero):
                v_fin[eta].append((cell, rv, c))
        w_fin = [[] for _ in range(rho + 1)]
        for cell, eta, rw, c in node.right.finite_items():
            if not any(rw[p] for p in w_zero):
                w_fin[eta].append((cell, rw, c))
        dense = node.dense
        if dense:
            costs = [INF] * dom.ncells
            wl = [0] * dom.ncells
            wr = [0] * dom.ncells
            index = dom.index
        else:
            table = {}
            in_bounds = dom.in_bounds
        for ev in range(rho + 1):
            lv = v_fin[ev]
            if not lv:
                continue
            for ew in range(rho + 1 - ev):
                lw = w_fin[ew]
                if not lw:
                    continue
                eu = ev + ew
                for iv, rv, cv_ in lv:
                    for iw, rw, cw_ in lw:
                        ok = True
                        for pv, pw in cancel:
                            if rv[pv] + rw[pw]:
                                ok = False
                                break
                        if not ok:
                            continue
                        ru = tuple(
                            (rv[pv] if pv >= 0 else 0) + (rw[pw] if pw >= 0 else 0)
                            for pv, pw in out_map)
                        c = cv_ + cw_
                        if dense:
                            k = index(eu, ru)
                            if k < 0:
                                continue
                            if c < costs[k]:
                                costs[k] = c
                                wl[k] = iv
                                wr[k] = iw
                        else:
                            if not in_bounds(eu, ru):
                                continue
                            key = (eu, ru)
                            prev = table.get(key)
                            if prev is None or c < prev[0]:
                                table[key] = (c, iv, iw)
        if dense:
            node.costs = costs
            node.wl = wl
            node.wr = wr
        else:
            node.table = table

    # -- retrieval --------------------------------------------------------------

    def _reconstruct(self, node: _Node, cell):
        entries = []
        stack = [(node, cell)]
        while stack:
            nd, ci = stack.pop()
            if nd.dense:
                if nd.is_leaf():
                    g = nd.wl[ci]
                    if g:
                        entries.append((nd.col, g))
                else:
                    stack.append((nd.left, nd.wl[ci]))
                    stack.append((nd.right, nd.wr[ci]))
            else:
                ent = nd.table[ci]
                if nd.is_leaf():
                    if ent[1]:
                        entries.append((nd.col, ent[1]))
                else:
                    stack.append((nd.left, ent[1]))
                    stack.append((nd.right, ent[2]))
        return entries
