"""Temporal response of a point fluorophore in the half-space diffusion model.

The zero-lifetime response ``u_m`` is a time convolution of two half-space
Robin Green's functions (source -> target, target -> detector). Near both
ends of ``[0, t]`` the integrand behaves like ``s^(-3/2) exp(-a/s)``; the
substitutions ``s = t sigma^2`` on the left half and ``t - s = t tau^2`` on
the right half turn it into a smooth, flat-ended function of the new
variable.

Two evaluation paths share that substitution:

* :meth:`ForwardModel.um` - adaptive Gauss-Kronrod (QUADPACK), one time at a
  time, to a requested relative tolerance;
* :meth:`ForwardModel.um_grid` - fixed Gauss-Legendre rule, vectorised over
  many times; used to build curves and to search for the peak.

The finite-lifetime response ``U_m`` is the convolution of ``u_m`` with
``exp(-t/ell)/ell``, integrated panel by panel with Gauss-Legendre nodes and
the recursion ``U(b) = exp(-(b-a)/ell) U(a) + int_a^b ...``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math
import warnings

import numpy as np
from scipy import integrate, special

from .errors import PeakNotBracketed, QuadratureError
from .peaktime import PeakEquationContext, PeakMethod, PeakTimeEstimate, predicted_peak
from .physics import PhysicalParams, SdPair, Target
from .roots import golden_max

__all__ = [
    "khat",
    "ForwardModel",
    "GridSpec",
    "ResponseCurve",
    "um_zero_lifetime",
    "Um_lifetime",
    "um_asymptotic",
    "response_curve",
    "peak_time_numeric",
]

_HALF = math.sqrt(0.5)


def khat(xc3, t, params: PhysicalParams):
    """Boundary correction factor of the Robin half-space Green's function.

    ``1 - beta sqrt(pi vD t) erfcx((xc3 + 2 beta vD t) / sqrt(4 vD t))``.
    Uses the scaled complementary error function directly; ``exp(xi^2)`` is
    never formed. Values lie in ``(0, 1]``.
    """
    t = np.asarray(t, dtype=float)
    beta = params.beta
    if beta == 0:
        return np.ones_like(t) if t.ndim else 1.0
    kap = params.vD
    xi = (xc3 + 2.0 * beta * kap * t) / np.sqrt(4.0 * kap * t)
    out = 1.0 - beta * np.sqrt(np.pi * kap * t) * special.erfcx(xi)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class GridSpec:
    """Search grid for the numeric peak.

    ``t_max=None`` means five times the asymptotic prediction. Panels are
    refined automatically so that none is wider than half the lifetime.
    """

    t_max: float | None = None
    n_panels: int = 256
    nodes_per_panel: int = 8
    xtol: float = 0.1
    max_panels: int = 20000


@dataclass(frozen=True)
class ResponseCurve:
    times: np.ndarray
    values: np.ndarray  # U_m (equal to u_m when ell == 0)
    u_m: np.ndarray
    u_m_asymptotic: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("times", "values", "u_m", "u_m_asymptotic"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


class ForwardModel:
    """Response functions for one (pair, target, params) configuration.

    Instances are cheap and hold no mutable state beyond precomputed
    constants, so they can be shared between threads.
    """

    def __init__(self, pair: SdPair, target: Target, params: PhysicalParams, n_nodes: int = 64):
        self.pair = pair
        self.target = target
        self.params = params
        a = pair.x_d - target.x_c
        b = pair.x_s - target.x_c
        self._a2 = float(a @ a)
        self._b2 = float(b @ b)
        self._z = target.depth
        p = params
        self._prefactor = p.c_strength / (16.0 * math.pi**3 * p.D**2 * p.v)
        nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
        # Gauss-Legendre on [0, 1/sqrt(2)]
        self._sig = 0.5 * _HALF * (nodes + 1.0)
        self._wsig = 0.5 * _HALF * weights
        self.ctx = PeakEquationContext.from_geometry(pair, target, params)

    # -- zero lifetime --------------------------------------------------------

    def _log_half(self, t, sig, near_sq, far_sq):
        """Log of the substituted integrand on one half of ``[0, t]``.

        ``near_sq`` is the squared leg attached to the end being flattened.
        Works elementwise on broadcastable arrays.
        """
        kap = self.params.vD
        s_near = t * sig * sig
        s_far = t - s_near
        out = (
            math.log(2.0)
            - 2.0 * np.log(t)
            - 2.0 * np.log(sig)
            - 1.5 * np.log1p(-sig * sig)
            - near_sq / (4.0 * kap * s_near)
            - far_sq / (4.0 * kap * s_far)
        )
        if self.params.beta != 0:
            out = out + np.log(khat(self._z, s_near, self.params)) + np.log(khat(self._z, s_far, self.params))
        return out

    def _integrand(self, sig, t, near_sq, far_sq):
        if sig <= 0.0:
            return 0.0
        return math.exp(self._log_half(t, sig, near_sq, far_sq))

    def um(self, t: float, rtol: float = 1e-8) -> float:
        """Zero-lifetime response by adaptive Gauss-Kronrod quadrature."""
        t = float(t)
        if t <= 0:
            return 0.0
        total = 0.0
        # left half flattens the source leg (s -> 0), right half the detector leg
        for near, far in ((self._b2, self._a2), (self._a2, self._b2)):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                val, err = integrate.quad(
                    self._integrand, 0.0, _HALF, args=(t, near, far),
                    epsabs=0.0, epsrel=rtol, limit=200,
                )
            if err > max(rtol * abs(val), 1e-300) * 10:
                raise QuadratureError(
                    f"adaptive quadrature did not converge at t={t:.6g}: "
                    f"estimate {val:.6g} +- {err:.3g}"
                )
            total += val
        return self._prefactor * math.exp(-self.params.k * t) * total

    def um_grid(self, times) -> np.ndarray:
        """Zero-lifetime response at many times with a fixed Gauss-Legendre rule."""
        t = np.asarray(times, dtype=float)
        flat = t.reshape(-1)
        out = np.zeros_like(flat)
        pos = flat > 0
        if np.any(pos):
            tt = flat[pos][:, None]
            sig = self._sig[None, :]
            total = np.zeros(tt.shape[0])
            for near, far in ((self._b2, self._a2), (self._a2, self._b2)):
                total += np.exp(self._log_half(tt, sig, near, far)) @ self._wsig
            out[pos] = self._prefactor * np.exp(-self.params.k * flat[pos]) * total
        return out.reshape(t.shape)

    def um_asymptotic(self, t):
        """Large-distance asymptotic profile of ``u_m``."""
        t = np.asarray(t, dtype=float)
        p = self.params
        a, b, z = math.sqrt(self._a2), math.sqrt(self._b2), self._z
        c0 = p.c_strength / (8.0 * math.pi**2.5 * math.sqrt(p.v) * p.D**1.5) * (1.0 / a + 1.0 / b)
        lam2 = self.ctx.lam**2
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            val = (
                c0 * np.exp(-p.k * t - lam2 / t) * t**-1.5
                * (z / (z + p.beta * p.vD * t)) ** 2
            )
        val = np.where(t > 0, val, 0.0)
        return val if val.ndim else float(val)

    # -- finite lifetime ------------------------------------------------------

    def _panel_edges(self, a, b, n_min=1, n_max=20000):
        ell = self.params.ell
        n = n_min
        if ell > 0:
            # below ~1 ps the substitution in _conv_increments resolves the kernel
            n = max(n, math.ceil((b - a) / (0.5 * max(ell, 1.0))))
        n = min(n, n_max)
        return np.linspace(a, b, n + 1)

    def _conv_increments(self, edges, m=8):
        """Per-panel ``int ell^-1 exp(-(e_{i+1}-s)/ell) u(s) ds`` for consecutive edges.

        With ``q = 1 - exp(-(b-s)/ell)`` the kernel becomes ``dq`` exactly, so
        the Gauss-Legendre rule only has to resolve ``u`` whatever the lifetime.
        """
        ell = self.params.ell
        x, w = np.polynomial.legendre.leggauss(m)
        lo, hi = edges[:-1, None], edges[1:, None]
        with np.errstate(over="ignore"):
            q_max = -np.expm1(-(hi - lo) / ell)
        q = 0.5 * q_max * (x[None, :] + 1.0)
        s = np.maximum(hi + ell * np.log1p(-q), lo)
        u = self.um_grid(s)
        return (u * 0.5 * q_max) @ w

    def _conv_cumulative(self, edges, m=8):
        """``U`` at every edge, starting from ``U(edges[0]) = 0``."""
        inc = self._conv_increments(edges, m)
        with np.errstate(over="ignore"):
            decay = np.exp(-np.diff(edges) / self.params.ell)
        out = np.zeros(len(edges))
        for i in range(len(inc)):
            out[i + 1] = decay[i] * out[i] + inc[i]
        return out

    def Um(self, t: float) -> float:
        """Finite-lifetime response at time ``t`` (``u_m`` itself when ``ell == 0``)."""
        t = float(t)
        if t <= 0:
            return 0.0
        if self.params.ell == 0:
            return self.um(t)
        edges = self._panel_edges(0.0, t, n_min=128)
        return float(self._conv_cumulative(edges)[-1])

    def _Um_from(self, t0, U0, t):
        # continue the convolution from a known value U(t0) = U0
        if t == t0:
            return U0
        edges = self._panel_edges(t0, t, n_min=2)
        return float(math.exp(-(t - t0) / self.params.ell) * U0 + self._conv_cumulative(edges)[-1])

    def curve(self, times) -> ResponseCurve:
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or times[0] != 0 or np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing and start at 0")
        u = self.um_grid(times)
        if self.params.ell == 0:
            U = u.copy()
        else:
            U = np.zeros_like(times)
            for i in range(len(times) - 1):
                U[i + 1] = self._Um_from(times[i], U[i], times[i + 1])
        return ResponseCurve(
            times, U, u, self.um_asymptotic(times),
            meta={"pair": self.pair, "target": self.target, "params": self.params},
        )

    # -- peak -----------------------------------------------------------------

    def peak(self, grid: GridSpec | None = None) -> PeakTimeEstimate:
        """Maximiser of ``U_m``: coarse grid argmax then golden-section refinement."""
        grid = grid or GridSpec()
        t_max = grid.t_max if grid.t_max is not None else 5.0 * predicted_peak(self.ctx)
        edges = self._panel_edges(0.0, t_max, n_min=grid.n_panels, n_max=grid.max_panels)
        ell = self.params.ell
        if ell == 0:
            values = self.um_grid(edges)
        else:
            values = self._conv_cumulative(edges, grid.nodes_per_panel)
        i = int(np.argmax(values))
        if i == 0 or i == len(edges) - 1:
            raise PeakNotBracketed(
                f"grid maximum at t={edges[i]:.6g} is on the boundary of [0, {t_max:.6g}]"
            )
        lo, hi = edges[i - 1], edges[i + 1]
        if ell == 0:
            f = lambda t: float(self.um_grid(t))  # noqa: E731
        else:
            U_lo = values[i - 1]
            f = lambda t: self._Um_from(lo, U_lo, t)  # noqa: E731
        t, val = golden_max(f, lo, hi, xtol=grid.xtol)
        flags = {
            "bracket": (float(lo), float(hi)),
            "unimodal": bool(val >= values[i - 1] and val >= values[i + 1]),
            "t_max": float(t_max),
            "value": val,
        }
        return PeakTimeEstimate(float(t), PeakMethod.NUMERIC, None, flags)


def um_zero_lifetime(t, pair: SdPair, target: Target, params: PhysicalParams, rtol=1e-8):
    return ForwardModel(pair, target, params).um(t, rtol=rtol)


def Um_lifetime(t, pair: SdPair, target: Target, params: PhysicalParams):
    return ForwardModel(pair, target, params).Um(t)


def um_asymptotic(t, pair: SdPair, target: Target, params: PhysicalParams):
    return ForwardModel(pair, target, params).um_asymptotic(t)


def response_curve(pair, target, params, t_max, n_points=2048) -> ResponseCurve:
    return ForwardModel(pair, target, params).curve(np.linspace(0.0, t_max, n_points))


def peak_time_numeric(pair, target, params, grid: GridSpec | None = None) -> PeakTimeEstimate:
    return ForwardModel(pair, target, params).peak(grid)
