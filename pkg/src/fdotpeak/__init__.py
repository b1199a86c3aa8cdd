"""Peak-time forward model and direct point-target reconstruction for
time-domain fluorescence diffuse optical tomography in a half-space."""

from .errors import (
    DegenerateTetrahedron,
    FDOTError,
    GeometryError,
    NoConvergence,
    NonPositiveLambda,
    PeakNotBracketed,
    QuadratureError,
    RootNotBracketed,
    ValidityError,
)
from .forward import ForwardModel, GridSpec, ResponseCurve, peak_time_numeric
from .inversion import Branch, NoiseSpec, ReconstructionResult, invert
from .peaktime import PeakEquationContext, PeakMethod, PeakTimeEstimate
from .physics import PhysicalParams, SdPair, Target

__version__ = "0.1.0"
