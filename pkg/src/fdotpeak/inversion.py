"""Direct target reconstruction from three peak-time measurements.

Each peak time is turned into a distance parameter, then into the radius of
a sphere centred on the pair midpoint. The initial pair gives ``r``; the
pair is then translated by ``r`` along two perpendicular in-plane directions
``theta1`` and ``theta2`` and measured again, giving ``r1`` and ``r2``. The
target is the apex of the tetrahedron with base ``O`` (initial midpoint),
``A = O + r e(theta1)``, ``B = O + r e(theta2)`` and edges
``|OC| = r``, ``|AC| = r1``, ``|BC| = r2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import enum
import math
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateTetrahedron, FDOTError, GeometryError, NonPositiveLambda, ValidityError
from .forward import GridSpec, peak_time_numeric
from .physics import PhysicalParams, SdPair, Target, as_point, radius_from_lambda

__all__ = [
    "Branch",
    "NoiseSpec",
    "MeasurementSet",
    "ReconstructionResult",
    "alpha_tilde",
    "large_branch_applies",
    "select_branch",
    "lambda_from_peak",
    "place_sd_pairs",
    "reconstruct_target",
    "noise_rng",
    "add_noise",
    "rel_err",
    "invert",
]

_SQRT_PI = math.sqrt(math.pi)


class Branch(str, enum.Enum):
    SMALL = "small"
    LARGE = "large"
    AUTO = "auto"


@dataclass(frozen=True)
class NoiseSpec:
    """Multiplicative peak-time jitter ``(1 + delta_hat (2u - 1))``."""

    delta_hat: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.delta_hat) and self.delta_hat >= 0):
            raise ValueError(f"delta_hat must be >= 0, got {self.delta_hat}")


@dataclass(frozen=True)
class MeasurementSet:
    pairs: tuple
    peak_times: tuple
    branches: tuple
    theta1: float
    theta2: float

    def __post_init__(self):
        if len(self.pairs) != 3 or len(self.peak_times) != 3:
            raise ValueError("exactly three pairs and three peak times are required")
        if any(not t > 0 for t in self.peak_times):
            raise ValueError("peak times must be positive")
        _check_perpendicular(self.theta1, self.theta2)


@dataclass(frozen=True)
class ReconstructionResult:
    radii: tuple
    x: float
    y: float
    target_estimate: np.ndarray
    rel_err: float | None = None
    measurements: MeasurementSet | None = None
    diagnostics: dict = field(default_factory=dict)


def _check_perpendicular(theta1, theta2):
    d = math.remainder(theta2 - theta1, 2.0 * math.pi)
    if abs(abs(d) - 0.5 * math.pi) > 1e-9:
        raise ValueError(f"theta2 - theta1 must be +-pi/2 (mod 2pi), got {theta2 - theta1}")


def _kappa(params):
    if params.ell == 0:
        return -math.inf
    return params.k - 1.0 / params.ell


def _alpha_tilde_arg(t, params):
    kappa = _kappa(params)
    if not kappa > 0:
        raise ValidityError(f"k - 1/ell must be positive for the long-lifetime branch (ell={params.ell})")
    return _SQRT_PI / params.ell * kappa**-0.5 * math.sqrt(t)


def alpha_tilde(t: float, params: PhysicalParams) -> float:
    """``sqrt(-log(sqrt(pi)/ell (k - 1/ell)^(-1/2) t^(1/2)))``."""
    arg = _alpha_tilde_arg(t, params)
    if arg > 1.0 + 1e-12:
        raise ValidityError(f"long-lifetime branch invalid at t={t:.6g}: log argument {arg:.6g} > 1")
    return math.sqrt(max(-math.log(arg), 0.0))


def large_branch_applies(t: float, params: PhysicalParams) -> bool:
    """Case split of the distance expansion: ``ell > sqrt(pi) (k-1/ell)^(-1/2) t^(1/2)``."""
    if not _kappa(params) > 0:
        return False
    return _alpha_tilde_arg(t, params) < 1.0


def select_branch(t: float, params: PhysicalParams, policy=Branch.AUTO) -> Branch:
    policy = Branch(policy)
    if policy is Branch.AUTO:
        return Branch.LARGE if large_branch_applies(t, params) else Branch.SMALL
    return policy


def lambda_from_peak(t: float, params: PhysicalParams, branch=Branch.AUTO) -> float:
    """Distance parameter recovered from a peak time."""
    if not t > 0:
        raise ValueError(f"peak time must be positive, got {t}")
    branch = select_branch(t, params, branch)
    k = params.k
    sk = math.sqrt(k)
    if branch is Branch.SMALL:
        lam = sk * t + 1.75 / sk - 1.0 / (sk + params.beta * math.sqrt(params.vD)) - params.ell * sk
    else:
        a = alpha_tilde(t, params)
        kappa = _kappa(params)
        lam = math.sqrt(kappa) * t - a * math.sqrt(t) + 0.5 * a * a / math.sqrt(kappa)
    if not lam > 0:
        raise NonPositiveLambda(f"peak time {t:.6g} ps too short: lambda = {lam:.6g}")
    return lam


def place_sd_pairs(initial: SdPair, r: float, theta1=0.0, theta2=0.5 * math.pi):
    """Initial pair and its two rigid in-plane translations by ``r`` along theta1, theta2."""
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    s1 = r * np.array([math.cos(theta1), math.sin(theta1), 0.0])
    s2 = r * np.array([math.cos(theta2), math.sin(theta2), 0.0])
    return initial, initial.translated(s1), initial.translated(s2)


def reconstruct_target(r, r1, r2, theta1=0.0, theta2=0.5 * math.pi, initial_midpoint=(0.0, 0.0, 0.0)):
    """Apex of the tetrahedron with edges ``r, r1, r2`` from ``O, A, B``.

    Raises DegenerateTetrahedron when ``r1^2 + r2^2 - (r1^4 + r2^4)/(4r^2) - r^2``
    is negative; no clamping is done.
    """
    if not (r > 0 and r1 > 0 and r2 > 0):
        raise ValueError("radii must be positive")
    _check_perpendicular(theta1, theta2)
    mid = as_point(initial_midpoint, "initial_midpoint")
    disc = r1 * r1 + r2 * r2 - (r1**4 + r2**4) / (4.0 * r * r) - r * r
    if disc < 0:
        raise DegenerateTetrahedron(
            f"radii ({r:.6g}, {r1:.6g}, {r2:.6g}) admit no real apex "
            f"(discriminant {disc:.6g}); re-measure",
            disc,
        )
    x = (2.0 * r * r - r1 * r1) / (2.0 * r)
    y = (2.0 * r * r - r2 * r2) / (2.0 * r)
    c3 = math.sqrt(disc)
    e1 = np.array([math.cos(theta1), math.sin(theta1), 0.0])
    e2 = np.array([math.cos(theta2), math.sin(theta2), 0.0])
    est = mid + x * e1 + y * e2 + np.array([0.0, 0.0, c3])
    est.setflags(write=False)
    return ReconstructionResult(
        radii=(r, r1, r2), x=x, y=y, target_estimate=est,
        diagnostics={"discriminant": disc},
    )


def noise_rng(seed: int) -> np.random.Generator:
    """PCG64 generator; bit-for-bit reproducible across platforms for a given seed."""
    return np.random.Generator(np.random.PCG64(seed))


def add_noise(t_peak: float, spec: NoiseSpec, rng: np.random.Generator) -> float:
    if spec.delta_hat == 0:
        return t_peak
    u = rng.random()
    return (1.0 + spec.delta_hat * (2.0 * u - 1.0)) * t_peak


def rel_err(truth, estimate) -> float:
    xc = truth.x_c if isinstance(truth, Target) else as_point(truth, "truth")
    est = as_point(estimate, "estimate")
    norm = float(np.linalg.norm(xc))
    if norm == 0:
        raise ValueError("relative error undefined for a target at the origin")
    return float(np.linalg.norm(xc - est)) / norm


_STAGES = ("initial", "theta1", "theta2")


def invert(
    initial: SdPair,
    params: PhysicalParams,
    target: Target | None = None,
    peak_times: Sequence[float] | None = None,
    measure: Callable[[SdPair], float] | None = None,
    theta1: float = 0.0,
    theta2: float = 0.5 * math.pi,
    noise: NoiseSpec | None = None,
    branch=Branch.AUTO,
    grid: GridSpec | None = None,
) -> ReconstructionResult:
    """Run the three-measurement reconstruction.

    Exactly one data source is used:

    * ``target`` (simulation): each pair is measured with the numeric peak of
      the forward model;
    * ``peak_times``: three externally measured peak times, in pair order
      (the caller must have placed pairs 2 and 3 with :func:`place_sd_pairs`);
    * ``measure``: a callable ``pair -> peak time`` queried stage by stage.

    Noise, if any, is applied to every measured peak time. Errors are re-raised
    with the failing stage attached.
    """
    sources = sum(x is not None for x in (target, peak_times, measure))
    if sources != 1:
        raise ValueError("give exactly one of target, peak_times or measure")
    _check_perpendicular(theta1, theta2)
    noise = noise or NoiseSpec()
    rng = noise_rng(noise.seed)

    if target is not None:
        def measure(pair):
            return peak_time_numeric(pair, target, params, grid).t_peak
    elif peak_times is not None:
        supplied = list(peak_times)
        if len(supplied) != 3:
            raise ValueError("three peak times are required")

    times, branches, radii, pairs = [], [], [], [initial]
    for i, stage in enumerate(_STAGES):
        try:
            if i == 1:
                pairs = list(place_sd_pairs(initial, radii[0], theta1, theta2))
            pair = pairs[i]
            t = supplied[i] if peak_times is not None else measure(pair)
            t = add_noise(float(t), noise, rng)
            b = select_branch(t, params, branch)
            lam = lambda_from_peak(t, params, b)
            r = radius_from_lambda(lam, pair, params)
            if i == 0 and r == 0:
                raise GeometryError("initial radius is zero; cannot place the other pairs")
        except FDOTError as exc:
            raise exc.with_stage(stage)
        times.append(t)
        branches.append(b)
        radii.append(r)

    try:
        res = reconstruct_target(*radii, theta1, theta2, initial.midpoint)
    except FDOTError as exc:
        raise exc.with_stage("reconstruct")
    meas = MeasurementSet(tuple(pairs), tuple(times), tuple(branches), theta1, theta2)
    err = rel_err(target, res.target_estimate) if target is not None else None
    diag = dict(res.diagnostics)
    diag["branches"] = tuple(b.value for b in branches)
    return ReconstructionResult(res.radii, res.x, res.y, res.target_estimate, err, meas, diag)
