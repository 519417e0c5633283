"""Separable convex objectives with exact rational evaluation.

Every term evaluates exactly at integer points (int or Fraction, never
float), so comparisons between objective values are always decisive.
Terms are immutable; transformed views (shift by a vector, scale the
argument) return new terms.
"""

from __future__ import annotations

import bisect
from fractions import Fraction

from .errors import ValidationError

Rational = int | Fraction


def _norm(q: Rational) -> Rational:
    """Collapse integral Fractions back to int so repr/JSON stay tidy."""
    if isinstance(q, Fraction) and q.denominator == 1:
        return q.numerator
    return q


class Term:
    """One univariate convex term f_i.  Subclasses stay exact and convex."""

    def value_at(self, x: int) -> Rational:
        raise NotImplementedError

    def compose(self, mult: int, off: int) -> "Term":
        """Return the term g(x) = f(mult*x + off); convex for mult >= 1."""
        raise NotImplementedError

    def shift(self, v: int) -> "Term":
        """Return g(x) = f(x + v)."""
        return self.compose(1, v)

    def scale(self, s: int) -> "Term":
        """Return g(x) = f(s*x)."""
        return self.compose(s, 0)


class LinearTerm(Term):
    """w*x + c."""

    __slots__ = ("w", "c")

    def __init__(self, w: int, c: Rational = 0):
        self.w = w
        self.c = _norm(c)

    def value_at(self, x: int) -> Rational:
        return self.w * x + self.c

    def compose(self, mult: int, off: int) -> "LinearTerm":
        return LinearTerm(self.w * mult, self.w * off + self.c)

    def __repr__(self):
        return f"LinearTerm({self.w}, {self.c})"

    def __eq__(self, other):
        return isinstance(other, LinearTerm) and (self.w, self.c) == (other.w, other.c)


class QuadraticTerm(Term):
    """a*x^2 + b*x + c with a >= 0."""

    __slots__ = ("a", "b", "c")

    def __init__(self, a: int, b: int, c: Rational = 0):
        if a < 0:
            raise ValidationError(f"quadratic term needs a >= 0, got a={a}")
        self.a = a
        self.b = b
        self.c = _norm(c)

    def value_at(self, x: int) -> Rational:
        return self.a * x * x + self.b * x + self.c

    def compose(self, mult: int, off: int) -> "QuadraticTerm":
        a, b, c = self.a, self.b, self.c
        return QuadraticTerm(
            a * mult * mult,
            2 * a * mult * off + b * mult,
            a * off * off + b * off + c,
        )

    def __repr__(self):
        return f"QuadraticTerm({self.a}, {self.b}, {self.c})"

    def __eq__(self, other):
        return isinstance(other, QuadraticTerm) and (self.a, self.b, self.c) == (
            other.a, other.b, other.c)


class PwlTerm(Term):
    """Piecewise-linear convex term from breakpoints (int x, rational y).

    Between breakpoints the value is the exact linear interpolation;
    outside the breakpoint range the boundary slope is extended (a single
    breakpoint extends as a constant), which keeps the term convex and
    total over Z.
    """

    __slots__ = ("xs", "ys")

    def __init__(self, points):
        pts = sorted((int(x), Fraction(y)) for x, y in points)
        if not pts:
            raise ValidationError("pwl term needs at least one breakpoint")
        xs = tuple(p[0] for p in pts)
        ys = tuple(p[1] for p in pts)
        if len(set(xs)) != len(xs):
            raise ValidationError("pwl breakpoints must have distinct x")
        slopes = [
            (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]) for i in range(len(xs) - 1)
        ]
        for s0, s1 in zip(slopes, slopes[1:]):
            if s0 > s1:
                raise ValidationError("pwl slopes must be non-decreasing (convexity)")
        self.xs = xs
        self.ys = ys

    def value_at(self, x: int) -> Rational:
        xs, ys = self.xs, self.ys
        if len(xs) == 1:
            return _norm(ys[0])
        i = bisect.bisect_right(xs, x) - 1
        if i < 0:
            i = 0
        elif i >= len(xs) - 1:
            i = len(xs) - 2
        x0, x1 = xs[i], xs[i + 1]
        y0, y1 = ys[i], ys[i + 1]
        return _norm(y0 + (y1 - y0) * (x - x0) / (x1 - x0))

    def compose(self, mult: int, off: int) -> Term:
        if mult == 1:
            return PwlTerm([(x - off, y) for x, y in zip(self.xs, self.ys)])
        return ComposedTerm(self, mult, off)

    def __repr__(self):
        return f"PwlTerm({list(zip(self.xs, self.ys))!r})"

    def __eq__(self, other):
        return isinstance(other, PwlTerm) and (self.xs, self.ys) == (other.xs, other.ys)


class ComposedTerm(Term):
    """f(mult*x + off) for a base term f; used where no closed form exists."""

    __slots__ = ("base", "mult", "off")

    def __init__(self, base: Term, mult: int, off: int):
        if mult < 1:
            raise ValidationError("argument scaling must be positive")
        self.base = base
        self.mult = mult
        self.off = off

    def value_at(self, x: int) -> Rational:
        return self.base.value_at(self.mult * x + self.off)

    def compose(self, mult: int, off: int) -> "ComposedTerm":
        return ComposedTerm(self.base, self.mult * mult, self.mult * off + self.off)

    def __repr__(self):
        return f"ComposedTerm({self.base!r}, {self.mult}, {self.off})"


class AffinePenaltyTerm(Term):
    """A base term replaced by affine rays beyond thresholds.

    For x > hi_k the value is base(hi_k) + hi_m*(x - hi_k); symmetrically
    below lo_k.  Slopes must dominate the base's boundary slopes so the
    result stays convex.
    """

    __slots__ = ("base", "lo", "hi")

    def __init__(self, base: Term, lo: tuple[int, Rational] | None = None,
                 hi: tuple[int, Rational] | None = None):
        if hi is not None:
            k, m = hi
            if m < base.value_at(k) - base.value_at(k - 1):
                raise ValidationError("upper penalty slope below base slope at threshold")
        if lo is not None:
            k, m = lo
            if m > base.value_at(k + 1) - base.value_at(k):
                raise ValidationError("lower penalty slope above base slope at threshold")
        if lo is not None and hi is not None and lo[0] > hi[0]:
            raise ValidationError("penalty thresholds out of order")
        self.base = base
        self.lo = lo
        self.hi = hi

    def value_at(self, x: int) -> Rational:
        if self.hi is not None and x > self.hi[0]:
            k, m = self.hi
            return _norm(self.base.value_at(k) + m * (x - k))
        if self.lo is not None and x < self.lo[0]:
            k, m = self.lo
            return _norm(self.base.value_at(k) + m * (x - k))
        return self.base.value_at(x)

    def compose(self, mult: int, off: int) -> Term:
        return ComposedTerm(self, mult, off)

    def __repr__(self):
        return f"AffinePenaltyTerm({self.base!r}, lo={self.lo}, hi={self.hi})"


class SeparableObjective:
    """f(x) = sum_i f_i(x_i), one convex term per coordinate."""

    __slots__ = ("terms",)

    def __init__(self, terms):
        self.terms = tuple(terms)

    @property
    def arity(self) -> int:
        return len(self.terms)

    def value(self, x) -> Rational:
        if len(x) != len(self.terms):
            raise ValidationError(
                f"objective arity {len(self.terms)} but point has length {len(x)}")
        return _norm(sum(t.value_at(v) for t, v in zip(self.terms, x)))

    def shift(self, v) -> "SeparableObjective":
        """The objective g(x) = f(x + v)."""
        if len(v) != len(self.terms):
            raise ValidationError("shift vector length mismatch")
        return SeparableObjective(t.shift(d) for t, d in zip(self.terms, v))

    def scale(self, s: int) -> "SeparableObjective":
        """The objective g(x) = f(s*x)."""
        return SeparableObjective(t.scale(s) for t in self.terms)

    def __getitem__(self, i: int) -> Term:
        return self.terms[i]

    def __repr__(self):
        return f"SeparableObjective({list(self.terms)!r})"


def zero_objective(n: int) -> SeparableObjective:
    return SeparableObjective(LinearTerm(0) for _ in range(n))


def linear_objective(weights) -> SeparableObjective:
    return SeparableObjective(LinearTerm(w) for w in weights)


def evaluate(f: SeparableObjective, x) -> Rational:
    """Exact objective value at an integer point."""
    return f.value(x)


def convex_argmin(term: Term, lo: int, hi: int) -> int:
    """Integer minimizer of a convex term on [lo, hi] by binary search on
    forward differences (exact comparisons, log(hi-lo) evaluations)."""
    if lo > hi:
        raise ValidationError("empty interval")
    while lo < hi:
        mid = (lo + hi) // 2
        if term.value_at(mid) <= term.value_at(mid + 1):
            hi = mid
        else:
            lo = mid + 1
    return lo
