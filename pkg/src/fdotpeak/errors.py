"""Exception hierarchy shared by all modules."""


class FDOTError(Exception):
    """Base class. ``stage`` names the pipeline step that failed, if known."""

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage

    def with_stage(self, stage):
        self.stage = stage
        return self

    def __str__(self):
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class GeometryError(FDOTError, ValueError):
    pass


class ValidityError(FDOTError, ValueError):
    pass


class NonPositiveLambda(ValidityError):
    pass


class DegenerateTetrahedron(FDOTError, ValueError):
    def __init__(self, message, discriminant, stage=None):
        super().__init__(message, stage)
        self.discriminant = discriminant


class QuadratureError(FDOTError, ArithmeticError):
    pass


class PeakNotBracketed(FDOTError, RuntimeError):
    pass


class RootNotBracketed(FDOTError, RuntimeError):
    pass


class NoConvergence(FDOTError, RuntimeError):
    pass
