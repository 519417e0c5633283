"""Core problem representation: matrices, instances, solutions, centering,
the slack-variable feasibility extension, and the instance JSON format.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction

from .errors import InfeasibleError, ValidationError
from .objective import (
    LinearTerm,
    PwlTerm,
    QuadraticTerm,
    Rational,
    SeparableObjective,
    evaluate,
    zero_objective,
)

INF = math.inf


class IntMatrix:
    """Sparse integer matrix stored as (row, col, value) triplets.

    Zero values are dropped and duplicate positions rejected.  Row and
    column supports are precomputed; instances are immutable.
    """

    __slots__ = ("rows", "cols", "entries", "row_support", "col_support",
                 "_by_pos", "inf_norm")

    def __init__(self, rows: int, cols: int, entries):
        self.rows = rows
        self.cols = cols
        seen = {}
        for r, c, v in entries:
            if not (0 <= r < rows and 0 <= c < cols):
                raise ValidationError(f"entry ({r},{c}) outside {rows}x{cols}")
            if (r, c) in seen:
                raise ValidationError(f"duplicate entry at ({r},{c})")
            if v != 0:
                seen[(r, c)] = int(v)
        self._by_pos = seen
        self.entries = tuple(sorted((r, c, v) for (r, c), v in seen.items()))
        row_support = [[] for _ in range(rows)]
        col_support = [[] for _ in range(cols)]
        for r, c, v in self.entries:
            row_support[r].append((c, v))
            col_support[c].append((r, v))
        self.row_support = tuple(tuple(s) for s in row_support)
        self.col_support = tuple(tuple(s) for s in col_support)
        self.inf_norm = max((abs(v) for _, _, v in self.entries), default=0)

    def at(self, r: int, c: int) -> int:
        return self._by_pos.get((r, c), 0)

    def apply(self, x) -> tuple[int, ...]:
        """Matrix-vector product A x."""
        if len(x) != self.cols:
            raise ValidationError("vector length does not match column count")
        out = [0] * self.rows
        for r, c, v in self.entries:
            out[r] += v * x[c]
        return tuple(out)

    def column(self, c: int) -> tuple[tuple[int, int], ...]:
        """Sparse column c as ((row, value), ...)."""
        return self.col_support[c]

    def dense(self) -> list[list[int]]:
        out = [[0] * self.cols for _ in range(self.rows)]
        for r, c, v in self.entries:
            out[r][c] = v
        return out

    @classmethod
    def from_dense(cls, rows) -> "IntMatrix":
        m = len(rows)
        n = len(rows[0]) if m else 0
        ents = [(r, c, v) for r, row in enumerate(rows) for c, v in enumerate(row) if v]
        return cls(m, n, ents)

    def __eq__(self, other):
        return (isinstance(other, IntMatrix)
                and (self.rows, self.cols) == (other.rows, other.cols)
                and self.entries == other.entries)

    def __hash__(self):
        return hash((self.rows, self.cols, self.entries))

    def __repr__(self):
        return f"IntMatrix({self.rows}x{self.cols}, nnz={len(self.entries)})"


class IpInstance:
    """min f(x) s.t. A x = b, l <= x <= u, x integer."""

    __slots__ = ("A", "b", "l", "u", "f")

    def __init__(self, A: IntMatrix, b, l, u, f: SeparableObjective):
        if len(b) != A.rows:
            raise ValidationError(f"b has length {len(b)}, expected {A.rows}")
        if len(l) != A.cols or len(u) != A.cols:
            raise ValidationError("bound vectors must have one entry per column")
        if f.arity != A.cols:
            raise ValidationError("objective arity must equal the column count")
        for i, (lo, hi) in enumerate(zip(l, u)):
            if lo == -INF or hi == INF or lo == INF or hi == -INF:
                raise ValidationError(
                    f"bounds must be finite (coordinate {i}); "
                    "infinite sentinels are only accepted in raw input")
            if lo > hi:
                raise ValidationError(f"l[{i}] = {lo} > u[{i}] = {hi}")
        self.A = A
        self.b = tuple(int(v) for v in b)
        self.l = tuple(int(v) for v in l)
        self.u = tuple(int(v) for v in u)
        self.f = f

    @property
    def n(self) -> int:
        return self.A.cols

    @property
    def m(self) -> int:
        return self.A.rows

    def bounds_inf_norm(self) -> int:
        return max((max(abs(lo), abs(hi)) for lo, hi in zip(self.l, self.u)), default=0)

    def box_volume(self) -> int:
        vol = 1
        for lo, hi in zip(self.l, self.u):
            vol *= hi - lo + 1
        return vol

    def __eq__(self, other):
        return (isinstance(other, IpInstance)
                and self.A == other.A and self.b == other.b
                and self.l == other.l and self.u == other.u
                and _objective_signature(self.f) == _objective_signature(other.f))

    def __repr__(self):
        return f"IpInstance(m={self.m}, n={self.n})"


class Solution:
    """A point with its exact objective value."""

    __slots__ = ("x", "value")

    def __init__(self, x, value: Rational):
        self.x = tuple(int(v) for v in x)
        self.value = value

    @classmethod
    def of(cls, inst: IpInstance, x) -> "Solution":
        return cls(x, evaluate(inst.f, x))

    def __eq__(self, other):
        return isinstance(other, Solution) and (self.x, self.value) == (other.x, other.value)

    def __repr__(self):
        return f"Solution(x={self.x}, value={self.value})"


def _objective_signature(f: SeparableObjective):
    """Structural signature used for instance equality in round-trip tests."""
    sig = []
    for t in f.terms:
        if isinstance(t, LinearTerm):
            sig.append(("lin", t.w, t.c))
        elif isinstance(t, QuadraticTerm):
            sig.append(("quad", t.a, t.b, t.c))
        elif isinstance(t, PwlTerm):
            sig.append(("pwl", t.xs, t.ys))
        else:
            sig.append(("opaque", id(t)))
    return tuple(sig)


def check_feasible(inst: IpInstance, x) -> bool:
    """True iff A x = b and l <= x <= u."""
    if len(x) != inst.n:
        return False
    if any(not (lo <= v <= hi) for v, lo, hi in zip(x, inst.l, inst.u)):
        return False
    return inst.A.apply(x) == inst.b


def center_at(inst: IpInstance, v) -> IpInstance:
    """Translate the instance so that v becomes the origin.

    The result is (A, b - Av, l - v, u - v, f(. + v)); translating any of
    its solutions by +v gives a solution of the input with equal value.
    """
    if len(v) != inst.n:
        raise ValidationError("center vector length mismatch")
    Av = inst.A.apply(v)
    return IpInstance(
        inst.A,
        tuple(bi - ai for bi, ai in zip(inst.b, Av)),
        tuple(lo - vi for lo, vi in zip(inst.l, v)),
        tuple(hi - vi for hi, vi in zip(inst.u, v)),
        inst.f.shift(v),
    )


def extend_phase_one(inst: IpInstance) -> tuple[IpInstance, Solution]:
    """Slack-variable extension whose optimum value is 0 iff inst is feasible.

    Requires 0 within the bounds (center first if it is not).  Returns the
    extended instance over (A I) with objective sum_i sign(b_i) * s_i and
    the feasible starting point (0, b).
    """
    if any(not (lo <= 0 <= hi) for lo, hi in zip(inst.l, inst.u)):
        raise ValidationError("phase-one extension requires 0 within the bounds")
    m, n = inst.m, inst.n
    ents = list(inst.A.entries)
    for i in range(m):
        ents.append((i, n + i, 1))
    A_ext = IntMatrix(m, n + m, ents)
    w = [0] * n + [_sign(bi) for bi in inst.b]
    l_ext = inst.l + tuple(min(0, bi) for bi in inst.b)
    u_ext = inst.u + tuple(max(0, bi) for bi in inst.b)
    f_ext = SeparableObjective(LinearTerm(wi) for wi in w)
    ext = IpInstance(A_ext, inst.b, l_ext, u_ext, f_ext)
    start = Solution.of(ext, (0,) * n + inst.b)
    return ext, start


def _sign(v: int) -> int:
    return (v > 0) - (v < 0)


# ---------------------------------------------------------------------------
# Instance JSON format
#
# {"m":…, "n":…, "A":[[r,c,v],…], "b":[…], "l":[…], "u":[…],
#  "objective":[{"kind":"linear","w":…}|{"kind":"quadratic","a":…,"b":…}
#               |{"kind":"pwl","points":[[x,y_num,y_den],…]}, …],
#  "td_dual":{"parent":[…]}?, "td_primal":{"parent":[…]}?}
# ---------------------------------------------------------------------------

def _bound_from_json(v, name):
    if v is None or v in ("inf", "-inf", "+inf"):
        raise ValidationError(
            f"{name} contains an infinite bound; the solvers require finite bounds")
    return int(v)


def _term_from_json(d) -> LinearTerm | QuadraticTerm | PwlTerm:
    kind = d.get("kind")
    if kind == "linear":
        return LinearTerm(int(d["w"]))
    if kind == "quadratic":
        return QuadraticTerm(int(d["a"]), int(d["b"]))
    if kind == "pwl":
        pts = [(int(x), Fraction(int(num), int(den))) for x, num, den in d["points"]]
        return PwlTerm(pts)
    raise ValidationError(f"unknown objective kind {kind!r}")


def _term_to_json(t) -> dict:
    if isinstance(t, LinearTerm) and t.c == 0:
        return {"kind": "linear", "w": t.w}
    if isinstance(t, QuadraticTerm) and t.c == 0:
        return {"kind": "quadratic", "a": t.a, "b": t.b}
    if isinstance(t, PwlTerm):
        pts = []
        for x, y in zip(t.xs, t.ys):
            q = Fraction(y)
            pts.append([x, q.numerator, q.denominator])
        return {"kind": "pwl", "points": pts}
    raise ValidationError(f"term {t!r} has no JSON form")


def instance_from_json(doc: dict):
    """Parse the instance document; returns (IpInstance, td_dual, td_primal).

    The td fields are raw parent arrays (or None); structure.TdDecomposition
    turns them into decompositions.
    """
    try:
        m, n = int(doc["m"]), int(doc["n"])
        A = IntMatrix(m, n, [(int(r), int(c), int(v)) for r, c, v in doc["A"]])
        b = [int(v) for v in doc["b"]]
        l = [_bound_from_json(v, "l") for v in doc["l"]]
        u = [_bound_from_json(v, "u") for v in doc["u"]]
        f = SeparableObjective(_term_from_json(d) for d in doc["objective"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed instance document: {exc}") from exc
    inst = IpInstance(A, b, l, u, f)
    td_dual = doc.get("td_dual", {}).get("parent") if doc.get("td_dual") else None
    td_primal = doc.get("td_primal", {}).get("parent") if doc.get("td_primal") else None
    return inst, td_dual, td_primal


def instance_to_json(inst: IpInstance, td_dual=None, td_primal=None) -> dict:
    doc = {
        "m": inst.m,
        "n": inst.n,
        "A": [[r, c, v] for r, c, v in inst.A.entries],
        "b": list(inst.b),
        "l": list(inst.l),
        "u": list(inst.u),
        "objective": [_term_to_json(t) for t in inst.f.terms],
    }
    if td_dual is not None:
        doc["td_dual"] = {"parent": list(td_dual)}
    if td_primal is not None:
        doc["td_primal"] = {"parent": list(td_primal)}
    return doc


def load_instance(path):
    with open(path) as fh:
        return instance_from_json(json.load(fh))


def dump_instance(path, inst, td_dual=None, td_primal=None):
    with open(path, "w") as fh:
        json.dump(instance_to_json(inst, td_dual, td_primal), fh)
        fh.write("\n")


def value_as_pair(v: Rational) -> list[int]:
    """Exact rational as [numerator, denominator] in lowest terms."""
    q = Fraction(v)
    return [q.numerator, q.denominator]
