"""Primal/dual graphs of a matrix, td-decompositions, topological height,
level heights, dual block structure, and the lifted decomposition for the
3n-column auxiliary matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ResourceCapError, ValidationError
from .model import IntMatrix


class Graph:
    """Simple undirected graph with sorted adjacency lists."""

    __slots__ = ("n", "adj")

    def __init__(self, n: int, edges):
        self.n = n
        adj = [set() for _ in range(n)]
        for a, b in edges:
            if not (0 <= a < n and 0 <= b < n):
                raise ValidationError(f"edge ({a},{b}) outside vertex range")
            if a != b:
                adj[a].add(b)
                adj[b].add(a)
        self.adj = tuple(tuple(sorted(s)) for s in adj)

    def edges(self):
        return [(a, b) for a in range(self.n) for b in self.adj[a] if a < b]

    def components(self) -> list[list[int]]:
        seen = [False] * self.n
        comps = []
        for s in range(self.n):
            if seen[s]:
                continue
            stack, comp = [s], []
            seen[s] = True
            while stack:
                v = stack.pop()
                comp.append(v)
                for w in self.adj[v]:
                    if not seen[w]:
                        seen[w] = True
                        stack.append(w)
            comps.append(sorted(comp))
        return comps

    def is_connected(self) -> bool:
        return self.n <= 1 or len(self.components()) == 1

    def subgraph(self, vertices) -> tuple["Graph", list[int]]:
        """Induced subgraph plus the vertex relabelling (new -> old)."""
        old = sorted(vertices)
        idx = {v: i for i, v in enumerate(old)}
        edges = [(idx[a], idx[b]) for a in old for b in self.adj[a]
                 if b in idx and a < b]
        return Graph(len(old), edges), old


def primal_graph(A: IntMatrix) -> Graph:
    """Columns as vertices; an edge when two columns share a nonzero row."""
    edges = set()
    for support in A.row_support:
        cols = [c for c, _ in support]
        for i in range(len(cols)):
            for j in range(i + 1, len(cols)):
                edges.add((cols[i], cols[j]))
    return Graph(A.cols, edges)


def dual_graph(A: IntMatrix) -> Graph:
    """Rows as vertices; an edge when two rows share a nonzero column."""
    edges = set()
    for support in A.col_support:
        rows = [r for r, _ in support]
        for i in range(len(rows)):
            for j in range(i + 1, len(rows)):
                edges.add((rows[i], rows[j]))
    return Graph(A.rows, edges)


class TdDecomposition:
    """A rooted tree over [n] given by a parent array (root has parent -1).

    Caches height, topological height (ttd), level heights, depths and
    ancestor chains.  Valid for a graph G when every edge of G joins a
    vertex with one of its ancestors.
    """

    __slots__ = ("parent", "root", "children", "depth", "height", "ttd",
                 "level_heights", "_order")

    def __init__(self, parent):
        parent = tuple(int(p) for p in parent)
        n = len(parent)
        roots = [v for v, p in enumerate(parent) if p == -1]
        if len(roots) != 1:
            raise ValidationError(
                f"decomposition must have exactly one root, found {len(roots)}")
        children = [[] for _ in range(n)]
        for v, p in enumerate(parent):
            if p != -1:
                if not (0 <= p < n):
                    raise ValidationError(f"parent of {v} out of range: {p}")
                children[p].append(v)
        # depth-first order also detects cycles / unreachable vertices
        depth = [-1] * n
        root = roots[0]
        depth[root] = 1
        order = [root]
        stack = [root]
        while stack:
            v = stack.pop()
            for c in children[v]:
                if depth[c] != -1:
                    raise ValidationError("parent array contains a cycle")
                depth[c] = depth[v] + 1
                order.append(c)
                stack.append(c)
        if len(order) != n:
            raise ValidationError("parent array is not a single connected tree")
        self.parent = parent
        self.root = root
        self.children = tuple(tuple(c) for c in children)
        self.depth = tuple(depth)
        self._order = tuple(order)
        self.height = max(depth)
        self.ttd, self.level_heights = _topology(self)

    @property
    def n(self) -> int:
        return len(self.parent)

    def ancestors(self, v: int) -> list[int]:
        """Strict ancestors of v, nearest first."""
        out = []
        p = self.parent[v]
        while p != -1:
            out.append(p)
            p = self.parent[p]
        return out

    def is_ancestor(self, a: int, v: int) -> bool:
        while v != -1:
            if v == a:
                return True
            v = self.parent[v]
        return False

    def leaves(self) -> list[int]:
        return [v for v in range(self.n) if not self.children[v]]

    def first_nondegenerate(self) -> int:
        """The vertex where the root path first branches or bottoms out."""
        v = self.root
        while len(self.children[v]) == 1:
            v = self.children[v][0]
        return v

    def root_path_to(self, v: int) -> list[int]:
        """Vertices from the root down to v inclusive."""
        path = [v] + self.ancestors(v)
        path.reverse()
        return path

    def __repr__(self):
        return f"TdDecomposition(n={self.n}, height={self.height}, ttd={self.ttd})"


def _topology(td: TdDecomposition):
    """Topological height and level heights k_1..k_ttd.

    A vertex is non-degenerate when it is a leaf or has >= 2 children.
    Along each root-leaf path, k_1 counts vertices down to the first
    non-degenerate vertex inclusive, and k_i the extra vertices down to
    the i-th one; level heights are the maxima over paths.
    """
    ks: list[int] = []
    stack = [(td.root, 1, 0)]  # vertex, vertices since previous nondeg, index
    ttd = 0
    while stack:
        v, count, idx = stack.pop()
        nondeg = len(td.children[v]) != 1
        if nondeg:
            idx += 1
            if idx > len(ks):
                ks.append(0)
            ks[idx - 1] = max(ks[idx - 1], count)
            ttd = max(ttd, idx)
            count = 0
        for c in td.children[v]:
            stack.append((c, count + 1, idx))
    return ttd, tuple(ks)


def analyze(td: TdDecomposition) -> tuple[int, int, tuple[int, ...]]:
    """(height, topological height, level heights)."""
    return td.height, td.ttd, td.level_heights


def validate_td(graph: Graph, td: TdDecomposition) -> bool:
    """True iff every edge of the graph joins a vertex and an ancestor."""
    if graph.n != td.n:
        return False
    for a, b in graph.edges():
        if not (td.is_ancestor(a, b) or td.is_ancestor(b, a)):
            return False
    return True


def compute_td(graph: Graph, height_cap: int = 25) -> TdDecomposition:
    """Minimum-height td-decomposition by exact memoized search.

    Only intended for small graphs (the solvers expect decompositions to
    be supplied for anything serious).  Deterministic: root choices are
    explored in vertex order and the first optimum found is kept.
    """
    if graph.n == 0:
        raise ValidationError("empty graph has no decomposition")
    if not graph.is_connected():
        raise ValidationError("compute_td requires a connected graph; "
                              "split the instance by components first")
    if graph.n > 25:
        raise ResourceCapError(
            f"compute_td is exact and limited to 25 vertices, got {graph.n}")

    memo: dict[frozenset, tuple[int, int, tuple]] = {}

    def best(vertices: frozenset):
        """Exact optimum (height, root, child_results) for a connected set."""
        if len(vertices) == 1:
            (v,) = vertices
            return (1, v, ())
        cached = memo.get(vertices)
        if cached is not None:
            return cached
        floor = _height_floor(len(vertices))
        result = None
        for v in sorted(vertices):
            comps = _components_within(graph, vertices - {v})
            sub = tuple(best(frozenset(comp)) for comp in comps)
            h = 1 + max(r[0] for r in sub)
            if result is None or h < result[0]:
                result = (h, v, sub)
                if h == floor:
                    break
        memo[vertices] = result
        return result

    res = best(frozenset(range(graph.n)))
    if res[0] > height_cap:
        raise ResourceCapError(
            f"minimum decomposition height {res[0]} exceeds cap {height_cap}")
    parent = [-1] * graph.n

    def emit(node, par):
        _, v, sub = node
        parent[v] = par
        for child in sub:
            emit(child, v)

    emit(res, -1)
    return TdDecomposition(parent)


def _height_floor(k: int) -> int:
    """Treedepth of any connected k-vertex graph is at least ceil(log2(k+1))."""
    return k.bit_length()


def _components_within(graph: Graph, vertices: frozenset) -> list[list[int]]:
    seen = set()
    comps = []
    for s in vertices:
        if s in seen:
            continue
        stack, comp = [s], []
        seen.add(s)
        while stack:
            v = stack.pop()
            comp.append(v)
            for w in graph.adj[v]:
                if w in vertices and w not in seen:
                    seen.add(w)
                    stack.append(w)
        comps.append(comp)
    return comps


@dataclass(frozen=True)
class DualBlockStructure:
    """Recursive dual block layout of A along a td-decomposition.

    prefix_rows: the rows on the root path down to the first branching
    vertex; they couple all blocks at this level.  At the bottom level
    (no children) the columns of the node are the single-column blocks.
    row_order / col_order list the rows and columns of this submatrix in
    block layout order (prefix rows first, then each child in turn).
    """

    prefix_rows: tuple[int, ...]
    col_order: tuple[int, ...]
    row_order: tuple[int, ...]
    children: tuple["DualBlockStructure", ...]

    @property
    def k1(self) -> int:
        return len(self.prefix_rows)

    def is_leaf_level(self) -> bool:
        return not self.children


def block_structure(A: IntMatrix, td: TdDecomposition) -> DualBlockStructure:
    """Decompose A along a td-decomposition of its dual graph.

    The recorded row/column orders form the permutation that lays A out in
    the nested block shape; reassembling along them reproduces A exactly.
    """
    if td.n != A.rows:
        raise ValidationError("decomposition must cover all rows")
    if not validate_td(dual_graph(A), td):
        raise ValidationError("not a valid td-decomposition of the dual graph")
    return _block_rec(A, td, td.root, tuple(range(A.cols)))


def _block_rec(A: IntMatrix, td: TdDecomposition, top: int,
               cols: tuple[int, ...]) -> DualBlockStructure:
    # walk the degenerate chain from `top` to the first branching vertex
    path = [top]
    v = top
    while len(td.children[v]) == 1:
        v = td.children[v][0]
        path.append(v)
    kids = td.children[v]
    if not kids:
        # bottom level: the whole remaining subtree is the path itself
        return DualBlockStructure(tuple(path), tuple(cols), tuple(path), ())
    subtree_of = {}
    for idx, r in enumerate(kids):
        stack = [r]
        while stack:
            w = stack.pop()
            subtree_of[w] = idx
            stack.extend(td.children[w])
    groups: list[list[int]] = [[] for _ in kids]
    for c in cols:
        owner = None
        for r, _ in A.col_support[c]:
            o = subtree_of.get(r)
            if o is None:
                # a path row of this level or an enclosing level's prefix
                continue
            if owner is None:
                owner = o
            elif owner != o:
                raise ValidationError(
                    f"column {c} spans two sibling subtrees; decomposition invalid")
        groups[owner if owner is not None else 0].append(c)
    children = tuple(
        _block_rec(A, td, r, tuple(group)) for r, group in zip(kids, groups))
    col_order = tuple(c for ch in children for c in ch.col_order)
    row_order = tuple(path) + tuple(r for ch in children for r in ch.row_order)
    return DualBlockStructure(tuple(path), col_order, row_order, children)


def split_instance(inst, side: str):
    """Split an instance along connected components of its primal or dual
    graph into independent subinstances.

    Returns a list of (sub_instance, col_ids, row_ids); stitching the
    per-component solutions back by col_ids solves the original.  Rows
    with empty support require b_i = 0 (checked by the caller when
    assembling results, since such an instance is infeasible otherwise).
    Columns with empty support become singleton subinstances with no rows.
    """
    from .model import IpInstance  # local import to avoid a cycle
    from .objective import SeparableObjective

    A = inst.A
    if side == "dual":
        graph = dual_graph(A)
        comps = graph.components() if A.rows else []
        col_groups: list[list[int]] = [[] for _ in comps]
        comp_of_row = {}
        for ci, comp in enumerate(comps):
            for r in comp:
                comp_of_row[r] = ci
        lone_cols = []
        for c in range(A.cols):
            sup = A.col_support[c]
            if sup:
                col_groups[comp_of_row[sup[0][0]]].append(c)
            else:
                lone_cols.append(c)
        pieces = [(comp, cols) for comp, cols in zip(comps, col_groups)]
    elif side == "primal":
        graph = primal_graph(A)
        comps = graph.components() if A.cols else []
        row_groups: list[list[int]] = [[] for _ in comps]
        comp_of_col = {}
        for ci, comp in enumerate(comps):
            for c in comp:
                comp_of_col[c] = ci
        used_rows = set()
        for r in range(A.rows):
            sup = A.row_support[r]
            if sup:
                row_groups[comp_of_col[sup[0][0]]].append(r)
                used_rows.add(r)
        pieces = [(rows, comp) for rows, comp in zip(row_groups, comps)]
        lone_cols = []
    else:
        raise ValidationError(f"unknown split side {side!r}")

    out = []
    for rows, cols in pieces:
        row_idx = {r: i for i, r in enumerate(rows)}
        col_idx = {c: i for i, c in enumerate(cols)}
        ents = [(row_idx[r], col_idx[c], v) for r, c, v in A.entries
                if r in row_idx and c in col_idx]
        sub = IpInstance(
            IntMatrix(len(rows), len(cols), ents),
            tuple(inst.b[r] for r in rows),
            tuple(inst.l[c] for c in cols),
            tuple(inst.u[c] for c in cols),
            SeparableObjective(inst.f.terms[c] for c in cols),
        )
        out.append((sub, tuple(cols), tuple(rows)))
    for c in lone_cols:
        sub = IpInstance(
            IntMatrix(0, 1, []), (), (inst.l[c],), (inst.u[c],),
            SeparableObjective([inst.f.terms[c]]))
        out.append((sub, (c,), ()))
    # rows not covered by any piece have empty support: they are infeasible
    # unless their right-hand side is zero (then they can be dropped)
    covered = {r for _, _, rows in out for r in rows}
    for r in range(A.rows):
        if r not in covered and inst.b[r] != 0:
            out.append((None, (), (r,)))
    return out


def lift_decomposition(td: TdDecomposition, A: IntMatrix) -> TdDecomposition:
    """Extend a decomposition of G_D(A) to one of G_D(abar).

    The auxiliary matrix gains one row per column of A (rows m..m+n-1);
    the new row for column i hangs as a leaf below the deepest leaf of
    the root-leaf path covering column i's support.  Height and ttd grow
    by at most one.
    """
    if td.n != A.rows:
        raise ValidationError("decomposition must cover all rows of A")
    m, n = A.rows, A.cols
    # deepest leaf in the subtree of each vertex, computed bottom-up
    depth = td.depth
    deep_leaf = list(range(td.n))
    for v in sorted(range(td.n), key=lambda w: -depth[w]):
        if td.children[v]:
            deep_leaf[v] = max((deep_leaf[c] for c in td.children[v]),
                               key=lambda x: depth[x])
    parent = list(td.parent) + [0] * n
    for i in range(n):
        support = [r for r, _ in A.col_support[i]]
        if support:
            deepest = max(support, key=lambda r: depth[r])
            anchor = deep_leaf[deepest]
        else:
            anchor = deep_leaf[td.root]
        parent[m + i] = anchor
    return TdDecomposition(parent)
