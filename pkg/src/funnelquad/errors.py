"""Exception types shared across the package."""


class FunnelquadError(Exception):
    """Base class for every error raised by this package."""


class FunnelViolation(FunnelquadError):
    """A normalized error reached the funnel boundary (|xi| >= 1).

    ``report`` is attached by the simulator in halt mode and holds the
    partial run up to the violating step.
    """

    def __init__(self, channel=None, t=None, xi=None, stage=None, report=None):
        self.channel = channel
        self.t = t
        self.xi = xi
        self.stage = stage
        self.report = report
        where = f" on channel {channel}" if channel is not None else ""
        when = f" at t={t:.6g}" if t is not None else ""
        loop = f" (stage {stage})" if stage is not None else ""
        val = f": xi={xi:.6g}" if xi is not None else ""
        super().__init__(f"funnel violation{where}{when}{loop}{val}")


class SingularityError(FunnelquadError):
    """An Euler-angle map degenerated (cosine or determinant below threshold)."""

    def __init__(self, message="singular attitude", t=None, report=None):
        self.t = t
        self.report = report
        super().__init__(message)


class InversionError(FunnelquadError):
    """A tilt vector lies outside the image of the admissible angle domain."""


class ThrustDegenerate(FunnelquadError):
    """The collective thrust is too small to divide by in the tilt reference."""

    def __init__(self, F_z, t=None, report=None):
        self.F_z = F_z
        self.t = t
        self.report = report
        when = f" at t={t:.6g}" if t is not None else ""
        super().__init__(f"degenerate thrust F_z={F_z:.6g}{when}")


class InitialComplianceError(FunnelquadError):
    """One or more channels start on or outside their funnel."""

    def __init__(self, violations):
        # violations: list of (channel, xi0)
        self.violations = list(violations)
        self.channels = [ch for ch, _ in self.violations]
        body = ", ".join(f"{ch} (xi0={xi:.6g})" for ch, xi in self.violations)
        super().__init__(f"initial funnel compliance fails on: {body}")


class NonFiniteStateError(FunnelquadError):
    """The integrated state became NaN or infinite."""

    def __init__(self, t, report=None):
        self.t = t
        self.report = report
        super().__init__(f"non-finite state at t={t:.6g}")


class ConfigError(FunnelquadError, ValueError):
    """Invalid scenario configuration."""
