"""Approximate peak times from the asymptotic temporal profile.

Two regimes are covered:

* short lifetime: the root of ``P(t) = 0`` (the peak of the zero-lifetime
  profile) and its lifetime-corrected version ``P = ell (P' + P^2)``;
* long lifetime: the root of the transcendental balance between the
  profile and its exponentially weighted running integral, solved in log form.

Each regime also has a closed-form expansion in the distance parameter.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import enum
import math

from .errors import ValidityError
from .physics import PhysicalParams, SdPair, Target, k_rate, lambda_param
from .roots import expand_bracket_up, safeguarded_newton

__all__ = [
    "PeakMethod",
    "PeakTimeEstimate",
    "PeakEquationContext",
    "LargeEllValidity",
    "P",
    "dP",
    "solve_P_root",
    "approx_peak_small_ell",
    "asymptotic_peak_small_ell",
    "large_ell_validity",
    "approx_peak_large_ell",
    "asymptotic_peak_large_ell",
    "large_ell_log_residual",
    "predicted_peak",
]

_SQRT_PI = math.sqrt(math.pi)


class PeakMethod(str, enum.Enum):
    NUMERIC = "numeric"
    SMALL_ELL_ROOT = "small_ell_root"
    LARGE_ELL_ROOT = "large_ell_root"
    ASYMPTOTIC_SMALL = "asymptotic_small"
    ASYMPTOTIC_LARGE = "asymptotic_large"


@dataclass(frozen=True)
class PeakTimeEstimate:
    t_peak: float
    method: PeakMethod
    residual: float | None = None
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.t_peak > 0:
            raise ValueError(f"peak time must be positive, got {self.t_peak}")

    def __float__(self):
        return float(self.t_peak)


@dataclass(frozen=True)
class PeakEquationContext:
    """Arguments shared by all peak-time equations."""

    k: float
    lam: float
    xc3: float
    params: PhysicalParams

    def __post_init__(self):
        if not (self.k > 0 and self.lam > 0 and self.xc3 > 0):
            raise ValueError("k, lambda and target depth must all be positive")

    @classmethod
    def from_geometry(cls, pair: SdPair, target: Target, params: PhysicalParams):
        return cls(k_rate(params), lambda_param(pair, target, params), target.depth, params)

    @property
    def ell(self) -> float:
        return self.params.ell

    @property
    def g(self) -> float:
        # beta * v * D, the boundary-loss rate that appears in every equation
        return self.params.beta * self.params.vD

    @property
    def kappa(self) -> float:
        """Effective rate ``k - 1/ell`` of the long-lifetime regime (-inf for ell=0)."""
        if self.ell == 0:
            return -math.inf
        return self.k - 1.0 / self.ell


# -- short lifetime -----------------------------------------------------------


def P(t, ctx: PeakEquationContext):
    """Log-derivative of the asymptotic profile."""
    g = ctx.g
    return -ctx.k - 1.5 / t + ctx.lam**2 / t**2 - 2.0 * g / (ctx.xc3 + g * t)


def dP(t, ctx: PeakEquationContext):
    g = ctx.g
    return 1.5 / t**2 - 2.0 * ctx.lam**2 / t**3 + 2.0 * g * g / (ctx.xc3 + g * t) ** 2


def _d2P(t, ctx):
    g = ctx.g
    return -3.0 / t**3 + 6.0 * ctx.lam**2 / t**4 - 4.0 * g**3 / (ctx.xc3 + g * t) ** 3


def _zero_beta_root(ctx):
    # positive root of k t^2 + 1.5 t - lam^2, rationalised to avoid cancellation
    lam2 = ctx.lam**2
    return 2.0 * lam2 / (math.sqrt(4.0 * ctx.k * lam2 + 2.25) + 1.5)


def solve_P_root(ctx: PeakEquationContext) -> float:
    """Unique positive root of ``P``; the peak of the zero-lifetime profile."""
    t_tilde = _zero_beta_root(ctx)
    if ctx.g == 0 or P(t_tilde, ctx) >= 0:
        # the second case: boundary term below rounding, t_tilde is already the root
        return t_tilde
    # the boundary term is negative, so P(t_tilde) < 0 and the root lies below
    f = lambda t: -P(t, ctx)  # noqa: E731  increasing through the root
    df = lambda t: -dP(t, ctx)  # noqa: E731
    lo = 0.5 * t_tilde
    while P(lo, ctx) <= 0:
        lo *= 0.5
    return safeguarded_newton(f, df, lo, t_tilde, x0=t_tilde)


def _small_ell_equation(t, ctx):
    p = P(t, ctx)
    return p - ctx.ell * (dP(t, ctx) + p * p)


def _small_ell_derivative(t, ctx):
    p = P(t, ctx)
    dp = dP(t, ctx)
    return dp - ctx.ell * (_d2P(t, ctx) + 2.0 * p * dp)


def approx_peak_small_ell(ctx: PeakEquationContext) -> PeakTimeEstimate:
    """Lifetime-corrected approximate peak for short lifetimes.

    Solves ``P = ell (P' + P^2)``. The equation can have a spurious root
    below the zero-lifetime peak ``t0``; the returned root is the unique one
    above ``t0`` (the left side is positive at ``t0`` and tends to
    ``-k(1 + ell k)`` at infinity).
    """
    t0 = solve_P_root(ctx)
    ell = ctx.ell
    flags = {"ell_small_vs_t0": ell <= 0.25 * t0}
    if ell == 0:
        return PeakTimeEstimate(t0, PeakMethod.SMALL_ELL_ROOT, abs(P(t0, ctx)) / ctx.k, flags)
    f = lambda t: _small_ell_equation(t, ctx)  # noqa: E731
    df = lambda t: _small_ell_derivative(t, ctx)  # noqa: E731
    hi = expand_bracket_up(f, t0, t0 + ell)
    t = safeguarded_newton(f, df, t0, hi, x0=min(t0 + ell, hi))
    return PeakTimeEstimate(t, PeakMethod.SMALL_ELL_ROOT, abs(f(t)) / ctx.k, flags)


def asymptotic_peak_small_ell(ctx: PeakEquationContext) -> PeakTimeEstimate:
    k = ctx.k
    sk = math.sqrt(k)
    boundary = sk / (sk + ctx.params.beta * math.sqrt(ctx.params.vD))
    t = ctx.lam / sk - 1.75 / k + boundary / k + ctx.ell
    return PeakTimeEstimate(t, PeakMethod.ASYMPTOTIC_SMALL)


# -- long lifetime ------------------------------------------------------------


@dataclass(frozen=True)
class LargeEllValidity:
    ell_exceeds_inverse_k: bool
    ell_exceeds_threshold: bool
    threshold: float

    def __bool__(self):
        return self.ell_exceeds_inverse_k and self.ell_exceeds_threshold


def large_ell_validity(ctx: PeakEquationContext) -> LargeEllValidity:
    """Check ``ell > 1/k`` and ``ell > sqrt(pi) (k - 1/ell)^(-3/4) lam^(1/2)``."""
    ell = ctx.ell
    a = bool(ell > 0 and ell > 1.0 / ctx.k)
    if not a:
        return LargeEllValidity(False, False, math.inf)
    threshold = _SQRT_PI * ctx.kappa ** (-0.75) * math.sqrt(ctx.lam)
    return LargeEllValidity(True, bool(ell > threshold), float(threshold))


def _log_lhs(t, ctx):
    s = math.sqrt(ctx.kappa)
    return -((s * t - ctx.lam) ** 2) / t


def _log_rhs(t, ctx):
    g, z, lam = ctx.g, ctx.xc3, ctx.lam
    t_star = lam / math.sqrt(ctx.kappa)
    return (
        0.5 * math.log(math.pi)
        - math.log(ctx.ell)
        - math.log(lam)
        + 1.5 * math.log(t)
        + 2.0 * math.log((z + g * t) / (z + g * t_star))
    )


def large_ell_log_residual(t, ctx: PeakEquationContext) -> float:
    """``log(lhs) - log(rhs)`` of the long-lifetime peak equation."""
    return _log_lhs(t, ctx) - _log_rhs(t, ctx)


def _large_ell_derivative(t, ctx):
    g = ctx.g
    return -ctx.kappa + ctx.lam**2 / t**2 - 1.5 / t - 2.0 * g / (ctx.xc3 + g * t)


def approx_peak_large_ell(ctx: PeakEquationContext) -> PeakTimeEstimate:
    """Root of the long-lifetime peak equation, restricted to ``t > lam/sqrt(k - 1/ell)``.

    On that half-line the log residual is strictly decreasing, positive at
    the left end under the validity conditions and tends to ``-inf``, so the
    root is unique.
    """
    validity = large_ell_validity(ctx)
    if not validity:
        raise ValidityError(
            f"long-lifetime peak equation invalid for ell={ctx.ell}: "
            f"ell > 1/k is {validity.ell_exceeds_inverse_k}, "
            f"ell > {validity.threshold:.6g} is {validity.ell_exceeds_threshold}"
        )
    t_star = ctx.lam / math.sqrt(ctx.kappa)
    f = lambda t: large_ell_log_residual(t, ctx)  # noqa: E731
    df = lambda t: _large_ell_derivative(t, ctx)  # noqa: E731
    x0 = asymptotic_peak_large_ell(ctx).t_peak
    hi = expand_bracket_up(f, t_star, max(x0, t_star * 1.01) * 1.5)
    t = safeguarded_newton(f, df, t_star, hi, x0=x0)
    return PeakTimeEstimate(
        t,
        PeakMethod.LARGE_ELL_ROOT,
        abs(f(t)),
        {"above_domain_start": t > t_star, "domain_start": t_star},
    )


def _alpha_lambda(ctx):
    kappa = ctx.kappa
    if not kappa > 0:
        raise ValidityError(f"k - 1/ell = {kappa:.6g} must be positive")
    arg = _SQRT_PI / ctx.ell * kappa ** (-0.75) * math.sqrt(ctx.lam)
    if arg > 1.0 + 1e-12:
        raise ValidityError(f"log argument {arg:.6g} exceeds 1 (lifetime too short)")
    return math.sqrt(max(-math.log(arg), 0.0))


def asymptotic_peak_large_ell(ctx: PeakEquationContext) -> PeakTimeEstimate:
    alpha = _alpha_lambda(ctx)
    kappa = ctx.kappa
    t = kappa**-0.5 * ctx.lam + kappa**-0.75 * alpha * math.sqrt(ctx.lam)
    return PeakTimeEstimate(t, PeakMethod.ASYMPTOTIC_LARGE, flags={"alpha": alpha})


def predicted_peak(ctx: PeakEquationContext) -> float:
    """Cheap peak estimate used to size search grids."""
    t = asymptotic_peak_small_ell(ctx).t_peak
    if large_ell_validity(ctx):
        t = max(t, asymptotic_peak_large_ell(ctx).t_peak)
    return max(t, solve_P_root(ctx))
