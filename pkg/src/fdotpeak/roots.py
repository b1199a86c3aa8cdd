"""Scalar root finding and maximisation used by the peak-time solvers."""
from __future__ import annotations

import math

from .errors import NoConvergence, RootNotBracketed

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def safeguarded_newton(f, df, lo, hi, x0=None, rtol=1e-12, maxiter=100):
    """Newton iteration kept inside a sign-changing bracket ``[lo, hi]``.

    Whenever a Newton step would leave the current bracket (or the derivative
    vanishes) a bisection step is taken instead. Iteration stops when the step
    is below ``rtol * |x|`` or ``f(x) == 0``.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise RootNotBracketed(f"f({lo:.6g})={flo:.3g} and f({hi:.6g})={fhi:.3g} share a sign")
    # orient so that f(lo) < 0 < f(hi)
    if flo > 0:
        lo, hi = hi, lo

    x = 0.5 * (lo + hi) if x0 is None or not (min(lo, hi) < x0 < max(lo, hi)) else x0
    for _ in range(maxiter):
        fx = f(x)
        if fx == 0.0:
            return x
        if fx < 0:
            lo = x
        else:
            hi = x
        dfx = df(x)
        step = fx / dfx if dfx != 0 else math.inf
        x_new = x - step
        if not (min(lo, hi) < x_new < max(lo, hi)) or not math.isfinite(x_new):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= rtol * abs(x_new) or abs(hi - lo) <= rtol * abs(x_new):
            return _polish(f, df, x_new, lo, hi)
        x = x_new
    raise NoConvergence(f"no convergence after {maxiter} iterations (x={x:.12g})")


def _polish(f, df, x, lo, hi):
    # a single extra Newton step; the stopping test above is on the step size,
    # so the residual can still be one step away from its floor
    fx = f(x)
    dfx = df(x)
    if fx == 0.0 or dfx == 0.0:
        return x
    y = x - fx / dfx
    if min(lo, hi) <= y <= max(lo, hi) and abs(f(y)) < abs(fx):
        return y
    return x


def expand_bracket_up(f, lo, start, factor=2.0, limit=60):
    """Return ``hi >= start`` with ``f(hi)`` of opposite sign to ``f(lo)``."""
    flo = f(lo)
    hi = start
    for _ in range(limit):
        if (f(hi) > 0) != (flo > 0):
            return hi
        hi = lo + (hi - lo) * factor
    raise RootNotBracketed(f"no sign change found above {lo:.6g}")


def golden_max(f, a, b, xtol=0.1, maxiter=200):
    """Golden-section search for the maximiser of a unimodal ``f`` on ``[a, b]``.

    Returns ``(x, f(x))``.
    """
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(maxiter):
        if abs(b - a) <= xtol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    else:
        raise NoConvergence("golden-section search did not reach tolerance")
    x = 0.5 * (a + b)
    return x, f(x)
