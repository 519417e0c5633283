"""The 3n-column auxiliary encoding that turns per-variable descaling into
a 2-unit bound change, plus the empirical sensitivity verifiers.

For a matrix A (m x n) the auxiliary matrix is

    abar = ( A  2A   0 )
           ( I  2I  -I )

over variable groups (low bit, coarse part, reassembled value).  Toggling
one coordinate between the coarse grid and the refined grid changes only
its low-bit bounds between (0,0) and (-1,+1).
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError
from .model import IntMatrix, IpInstance
from .objective import LinearTerm, SeparableObjective
from .scaling import ceil_div, floor_div


def build_abar(A: IntMatrix) -> IntMatrix:
    """Exact block assembly of ((A 2A 0), (I 2I -I))."""
    m, n = A.rows, A.cols
    ents = []
    for r, c, v in A.entries:
        ents.append((r, c, v))
        ents.append((r, n + c, 2 * v))
    for i in range(n):
        ents.append((m + i, i, 1))
        ents.append((m + i, n + i, 2))
        ents.append((m + i, 2 * n + i, -1))
    return IntMatrix(m + n, 3 * n, ents)


def i_scaled(inst: IpInstance, I) -> IpInstance:
    """The instance with coordinates in I still on the doubled grid.

    For i in I: bounds halved (ceil/floor), objective f_i(2x), column
    doubled; other coordinates unchanged.  Requires b = 0.
    """
    if any(inst.b):
        raise ValidationError("I-scaled instances are defined for b = 0")
    I = set(I)
    n = inst.n
    ents = [(r, c, 2 * v if c in I else v) for r, c, v in inst.A.entries]
    A = IntMatrix(inst.m, n, ents)
    l = tuple(ceil_div(lo, 2) if i in I else lo for i, lo in enumerate(inst.l))
    u = tuple(floor_div(hi, 2) if i in I else hi for i, hi in enumerate(inst.u))
    terms = [t.scale(2) if i in I else t for i, t in enumerate(inst.f.terms)]
    return IpInstance(A, inst.b, l, u, SeparableObjective(terms))


@dataclass(frozen=True)
class AuxInstance:
    """aux-I encoding: 3n variables, matrix abar, objective on the last group."""

    abar: IntMatrix
    I: frozenset
    l: tuple
    u: tuple
    f: SeparableObjective

    def to_ip(self) -> IpInstance:
        return IpInstance(self.abar, (0,) * self.abar.rows, self.l, self.u, self.f)


def aux_instance(inst: IpInstance, I) -> AuxInstance:
    """Auxiliary instance whose optima correspond to the I-scaled optima.

    Bounds: value group copies [l, u]; coarse group gets the halved
    bounds; low bits are fixed to 0 inside I and range in [-1, 1] outside.
    The objective applies f only to the value group.
    """
    if any(inst.b):
        raise ValidationError("the auxiliary instance is defined for b = 0")
    I = frozenset(I)
    n = inst.n
    if any(not 0 <= i < n for i in I):
        raise ValidationError("I contains out-of-range coordinates")
    abar = build_abar(inst.A)
    l = [0] * (3 * n)
    u = [0] * (3 * n)
    for j in range(n):
        if j in I:
            l[j] = u[j] = 0
        else:
            l[j], u[j] = -1, 1
        l[n + j] = ceil_div(inst.l[j], 2)
        u[n + j] = floor_div(inst.u[j], 2)
        l[2 * n + j] = inst.l[j]
        u[2 * n + j] = inst.u[j]
    terms = [LinearTerm(0) for _ in range(2 * n)] + list(inst.f.terms)
    return AuxInstance(abar, I, tuple(l), tuple(u), SeparableObjective(terms))


def encode(x, I, n: int) -> tuple:
    """Map an I-scaled solution to the auxiliary variables.

    For i in I: (0, x_i, 2 x_i); otherwise the value splits into low bit
    z_i = x_i - 2*round_toward_zero_half(x_i) in {-1, 0, 1} and coarse
    part, with z_{2n+i} = z_i + 2 z_{n+i} always.
    """
    if len(x) != n:
        raise ValidationError("encode expects a length-n vector")
    I = set(I)
    z = [0] * (3 * n)
    for i, v in enumerate(x):
        if i in I:
            z[n + i] = v
            z[i] = 0
        else:
            half = v // 2 if v >= 0 else ceil_div(v, 2)
            z[n + i] = half
            z[i] = v - 2 * half
        z[2 * n + i] = z[i] + 2 * z[n + i]
    return tuple(z)


def decode(z, I, n: int) -> tuple:
    """Inverse of encode on its image."""
    if len(z) != 3 * n:
        raise ValidationError("decode expects a length-3n vector")
    I = set(I)
    return tuple(z[n + i] if i in I else z[i] + 2 * z[n + i] for i in range(n))


def verify_sensitivity(inst: IpInstance, I, J, deltas, brute,
                       g1_a: int, g1_abar: int, cell_cap: int = 10**6) -> dict:
    """Empirical check of the two sensitivity bounds on one instance.

    (a) optima of the I-scaled and J-scaled instances lie within
        2 |I xor J| g1(abar) of each other in l1 (both directions);
    (b) for each delta, perturbing l (and separately u) by delta moves
        some optimum by at most ||delta||_1 g1(A).
    Requires exhaustively enumerable optimum sets.
    """
    report = {"scaled_checks": 0, "bound_checks": 0, "violations": 0,
              "max_scaled_ratio": 0.0, "max_bound_ratio": 0.0}
    I, J = frozenset(I), frozenset(J)
    inst_i = i_scaled(inst, I)
    inst_j = i_scaled(inst, J)
    _, opts_i = brute(inst_i, cell_cap, want_all=True)
    _, opts_j = brute(inst_j, cell_cap, want_all=True)
    if opts_i and opts_j:
        bound = 2 * len(I ^ J) * g1_abar
        d = max(_directed_hausdorff_l1(opts_i, opts_j),
                _directed_hausdorff_l1(opts_j, opts_i))
        report["scaled_checks"] += 1
        if d > bound:
            report["violations"] += 1
        if bound > 0:
            report["max_scaled_ratio"] = max(report["max_scaled_ratio"], d / bound)
        elif d > 0:
            report["violations"] += 1
    _, opts0 = brute(inst, cell_cap, want_all=True)
    for delta in deltas:
        norm = sum(abs(v) for v in delta)
        bound = norm * g1_a
        for which in ("l", "u"):
            if which == "l":
                l2 = tuple(a + d for a, d in zip(inst.l, delta))
                u2 = inst.u
            else:
                l2 = inst.l
                u2 = tuple(a + d for a, d in zip(inst.u, delta))
            if any(a > b for a, b in zip(l2, u2)):
                continue
            pert = IpInstance(inst.A, inst.b, l2, u2, inst.f)
            _, opts_p = brute(pert, cell_cap, want_all=True)
            if not opts0 or not opts_p:
                continue
            d = _directed_hausdorff_l1(opts0, opts_p)
            report["bound_checks"] += 1
            if d > bound:
                report["violations"] += 1
            if bound > 0:
                report["max_bound_ratio"] = max(report["max_bound_ratio"], d / bound)
            elif d > 0:
                report["violations"] += 1
    return report


def _directed_hausdorff_l1(xs, ys) -> int:
    worst = 0
    for x in xs:
        best = None
        for y in ys:
            d = sum(abs(a - b) for a, b in zip(x, y))
            if best is None or d < best:
                best = d
        worst = max(worst, best)
    return worst
