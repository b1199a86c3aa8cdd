"""Medium constants, boundary geometry and the scalar quantities derived from them.

Units are mm and ps throughout. The boundary is the plane ``z = 0`` and the
medium is the half-space ``z > 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import GeometryError

__all__ = [
    "PhysicalParams",
    "SdPair",
    "Target",
    "SdGeometry",
    "as_point",
    "k_rate",
    "lambda_param",
    "radius_from_lambda",
    "sd_geometry",
]


def as_point(x, name="point"):
    """Validate and return a read-only float 3-vector."""
    arr = np.array(x, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have 3 components, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PhysicalParams:
    """Optical constants of the medium and the fluorophore.

    The defaults are the typical biological-tissue values used for all the
    reference experiments.
    """

    v: float = 0.219  # mm/ps
    D: float = 1.0 / 3.0  # mm
    mu_a: float = 0.1  # 1/mm
    beta: float = 0.5493  # 1/mm
    ell: float = 0.0  # ps
    c_strength: float = 1.0

    def __post_init__(self):
        for name in ("v", "D", "mu_a", "beta", "ell", "c_strength"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for name in ("v", "D", "mu_a", "c_strength"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be finite and > 0, got {val!r}")
        for name in ("beta", "ell"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {val!r}")

    @property
    def vD(self) -> float:
        return self.v * self.D

    @property
    def k(self) -> float:
        return self.v * self.mu_a

    def replace(self, **changes) -> "PhysicalParams":
        from dataclasses import replace

        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "v": self.v,
            "D": self.D,
            "mu_a": self.mu_a,
            "beta": self.beta,
            "ell": self.ell,
            "c_strength": self.c_strength,
        }


@dataclass(frozen=True)
class SdPair:
    """A source point and a detector point on the boundary plane."""

    x_s: np.ndarray
    x_d: np.ndarray

    def __post_init__(self):
        xs = as_point(self.x_s, "x_s")
        xd = as_point(self.x_d, "x_d")
        if xs[2] != 0.0 or xd[2] != 0.0:
            raise GeometryError("source and detector must lie on the plane z = 0")
        if np.array_equal(xs, xd):
            raise GeometryError("source and detector must be distinct")
        object.__setattr__(self, "x_s", xs)
        object.__setattr__(self, "x_d", xd)

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.x_s + self.x_d)

    @property
    def half_separation_sq(self) -> float:
        d = self.x_d - self.x_s
        return float(d @ d) / 4.0

    def translated(self, shift) -> "SdPair":
        shift = np.asarray(shift, dtype=float)
        if shift.shape == (2,):
            shift = np.append(shift, 0.0)
        return SdPair(self.x_s + shift, self.x_d + shift)

    def __eq__(self, other):
        if not isinstance(other, SdPair):
            return NotImplemented
        return np.array_equal(self.x_s, other.x_s) and np.array_equal(self.x_d, other.x_d)

    def __hash__(self):
        return hash((tuple(self.x_s), tuple(self.x_d)))

    def __repr__(self):
        return f"SdPair(x_s={self.x_s.tolist()}, x_d={self.x_d.tolist()})"


@dataclass(frozen=True)
class Target:
    """Point fluorophore location, strictly inside the half-space."""

    x_c: np.ndarray

    def __post_init__(self):
        xc = as_point(self.x_c, "x_c")
        if not xc[2] > 0:
            raise GeometryError(f"target depth must be > 0, got {xc[2]}")
        object.__setattr__(self, "x_c", xc)

    @property
    def depth(self) -> float:
        return float(self.x_c[2])

    def __eq__(self, other):
        if not isinstance(other, Target):
            return NotImplemented
        return np.array_equal(self.x_c, other.x_c)

    def __hash__(self):
        return hash(tuple(self.x_c))

    def __repr__(self):
        return f"Target(x_c={self.x_c.tolist()})"


@dataclass(frozen=True)
class SdGeometry:
    k: float
    lam: float
    midpoint: np.ndarray
    half_separation_sq: float
    # | |x_d-x_c|^2 - |x_s-x_c|^2 |, the asymmetry of the two legs; reported only
    leg_asymmetry: float = field(default=0.0)


def k_rate(params: PhysicalParams) -> float:
    """Absorption decay rate ``v * mu_a`` in 1/ps."""
    return params.v * params.mu_a


def _legs_sq(pair: SdPair, target: Target):
    a = pair.x_d - target.x_c
    b = pair.x_s - target.x_c
    return float(a @ a), float(b @ b)


def lambda_param(pair: SdPair, target: Target, params: PhysicalParams) -> float:
    """Distance parameter ``sqrt((|x_d-x_c|^2 + |x_s-x_c|^2) / (2 v D))``."""
    a2, b2 = _legs_sq(pair, target)
    return math.sqrt((a2 + b2) / (2.0 * params.vD))


def radius_from_lambda(lam: float, pair: SdPair, params: PhysicalParams) -> float:
    """Radius of the sphere about the pair midpoint on which the target lies.

    Raises GeometryError when ``vD lam^2`` is smaller than the squared half
    separation of the pair (no real sphere).
    """
    r2 = params.vD * lam * lam - pair.half_separation_sq
    if -1e-12 * pair.half_separation_sq <= r2 < 0:
        r2 = 0.0  # rounding at the boundary of the domain
    if r2 < 0:
        raise GeometryError(
            f"vD*lambda^2 = {params.vD * lam * lam:.6g} is below the squared half "
            f"separation {pair.half_separation_sq:.6g}; peak time inconsistent with pair"
        )
    return math.sqrt(r2)


def sd_geometry(pair: SdPair, target: Target, params: PhysicalParams) -> SdGeometry:
    a2, b2 = _legs_sq(pair, target)
    return SdGeometry(
        k=k_rate(params),
        lam=math.sqrt((a2 + b2) / (2.0 * params.vD)),
        midpoint=pair.midpoint,
        half_separation_sq=pair.half_separation_sq,
        leg_asymmetry=abs(a2 - b2),
    )
