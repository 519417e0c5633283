"""Scaled instances and the iterative scaling driver.

The driver walks scale factors 2^(beta-1), ..., 2, 1.  At each phase it
views the problem on the coarser lattice relative to the current center,
restricts the box around the previous optimum by the proximity radius
3*rho, and hands the subinstance to an exact subsolver.  A certification
loop widens the restriction whenever the phase optimum lands close to an
artificial box edge, so the final answer is exact even if the supplied
rho underestimates the true proximity bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InfeasibleError, ValidationError
from .model import IpInstance, Solution, check_feasible
from .objective import SeparableObjective


def ceil_div(a: int, s: int) -> int:
    return -((-a) // s)


def floor_div(a: int, s: int) -> int:
    return a // s


def scale_instance(inst: IpInstance, s: int) -> IpInstance:
    """The instance restricted to the lattice s*Z^n, in shrunken-box view.

    Bounds become ceil(l/s) <= x' <= floor(u/s) and the objective
    f'(x') = f(s*x'); the matrix is unchanged.  Requires b = 0 so that
    x = s*x' is a value-preserving bijection onto the lattice solutions.
    """
    if s < 1:
        raise ValidationError("scale factor must be at least 1")
    if any(inst.b):
        raise ValidationError("scale_instance requires b = 0 (center first)")
    if s == 1:
        return inst
    return IpInstance(
        inst.A,
        inst.b,
        tuple(ceil_div(lo, s) for lo in inst.l),
        tuple(floor_div(hi, s) for hi in inst.u),
        inst.f.scale(s),
    )


@dataclass
class ScalingConfig:
    """rho bounds the conformal proximity of A; the driver trusts it for
    the box radius and uses it as the certification margin."""

    rho: int
    skip_prefix: bool = False
    certify: bool = True
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.rho < 1:
            raise ValidationError("rho must be at least 1")


def phase_count(bound_norm: int) -> int:
    """ceil(log2 ||l,u||_inf) + 1 phases; 0 when the box is a point."""
    if bound_norm <= 0:
        return 0
    return max(bound_norm - 1, 0).bit_length() + 1 if bound_norm > 1 else 1


def scaling_solve(inst: IpInstance, x0, cfg: ScalingConfig, subsolver) -> Solution:
    """Exact optimum via beta scaling phases around a feasible start.

    subsolver(sub: IpInstance) must return an exact optimum Solution of
    the given (small-box, b = 0) instance; 0 is always feasible for it.
    """
    x0 = tuple(int(v) for v in x0)
    if not check_feasible(inst, x0):
        raise InfeasibleError("scaling_solve needs a feasible starting point")
    cur = list(x0)
    norm_c = max((max(abs(lo - v), abs(hi - v))
                  for lo, hi, v in zip(inst.l, inst.u, cur)), default=0)
    beta = phase_count(norm_c)
    k_start = beta
    if cfg.skip_prefix and beta > 1:
        # the first ceil(log2 rho) coarse phases have boxes within rho already
        skip = max(cfg.rho - 1, 0).bit_length()
        k_start = max(1, beta - skip)
    phases = []
    for k in range(k_start, 0, -1):
        s = 1 << (k - 1)
        lv = [ceil_div(lo - c, s) for lo, c in zip(inst.l, cur)]
        uv = [floor_div(hi - c, s) for hi, c in zip(inst.u, cur)]
        first_phase = k == k_start
        unrestricted = first_phase and cfg.skip_prefix
        radius = None if unrestricted else 3 * cfg.rho
        y, enlargements = _solve_phase(inst, cur, s, lv, uv, radius, cfg, subsolver)
        for i, yi in enumerate(y):
            cur[i] += s * yi
        phases.append({"k": k, "s": s, "enlargements": enlargements})
    cfg.stats["phases"] = phases
    cfg.stats["phase_count"] = beta
    cfg.stats["executed_phases"] = len(phases)
    value = inst.f.value(cur)
    assert check_feasible(inst, cur)
    return Solution(cur, value)


def _solve_phase(inst, cur, s, lv, uv, radius, cfg, subsolver):
    """One phase: solve the s-view instance near 0, certifying the cut."""
    fv = inst.f.shift(cur).scale(s)
    enlargements = 0
    full = max((max(abs(a), abs(b)) for a, b in zip(lv, uv)), default=0)
    while True:
        if radius is None or radius >= full:
            lo = lv
            hi = uv
            cut = False
        else:
            lo = [max(a, -radius) for a in lv]
            hi = [min(b, radius) for b in uv]
            cut = True
        sub = IpInstance(inst.A, (0,) * inst.m, lo, hi, fv)
        if any(a > 0 or b < 0 for a, b in zip(lo, hi)):
            raise AssertionError("phase subinstance lost feasibility of 0")
        y = subsolver(sub)
        if y is None:
            raise InfeasibleError("phase subinstance unexpectedly infeasible")
        if not cut or not cfg.certify:
            return y.x, enlargements
        # certified global when the optimum stays rho away from every
        # artificial edge (a kernel improvement step could otherwise hide
        # just outside the cut)
        margin = cfg.rho
        safe = True
        for yi, a, b, la, ub in zip(y.x, lo, hi, lv, uv):
            if a != la and yi - a < margin:
                safe = False
            if b != ub and b - yi < margin:
                safe = False
        if safe:
            return y.x, enlargements
        radius *= 2
        enlargements += 1


def verify_scaling_proximity(inst: IpInstance, s: int, rho_hat: int,
                             objectives, brute, cell_cap: int = 10**6) -> dict:
    """Empirical check of the scaling proximity bound.

    For each sampled objective, enumerates all optima of the instance and
    of its s-scaled view and asserts the two-sided bound: every optimum
    of one side has an optimum of the other within (s+1)*rho_hat in the
    l_inf norm.  Returns a report with the worst observed distance and
    ratio.  `brute` is the exhaustive solver (oracle.brute_force_ip).
    """
    if any(inst.b):
        raise ValidationError("proximity verification requires b = 0")
    report = {"s": s, "rho_hat": rho_hat, "bound": (s + 1) * rho_hat,
              "samples": 0, "max_distance": 0, "max_ratio": 0.0,
              "violations": 0}
    for f in objectives:
        base = IpInstance(inst.A, inst.b, inst.l, inst.u, f)
        scaled = scale_instance(base, s)
        _, opts = brute(base, cell_cap, want_all=True)
        _, opts_s_view = brute(scaled, cell_cap, want_all=True)
        if not opts or not opts_s_view:
            continue
        opts_s = [tuple(s * v for v in y) for y in opts_s_view]
        d = max(_directed_hausdorff_inf(opts, opts_s),
                _directed_hausdorff_inf(opts_s, opts))
        report["samples"] += 1
        report["max_distance"] = max(report["max_distance"], d)
        if rho_hat > 0:
            report["max_ratio"] = max(report["max_ratio"],
                                      d / ((s + 1) * rho_hat))
        if d > (s + 1) * rho_hat:
            report["violations"] += 1
    return report


def _directed_hausdorff_inf(xs, ys) -> int:
    worst = 0
    for x in xs:
        best = None
        for y in ys:
            d = max((abs(a - b) for a, b in zip(x, y)), default=0)
            if best is None or d < best:
                best = d
        worst = max(worst, best)
    return worst
