"""Exception hierarchy; the CLI maps these onto exit codes."""


class ShadowProjError(Exception):
    pass


class InputError(ShadowProjError, ValueError):
    """Malformed or out-of-range input. Carries the offending file/field."""

    def __init__(self, message, file=None, field=None):
        self.message = message
        self.file = file
        self.field = field
        where = ", ".join(
            f"{k}={v!r}" for k, v in (("file", file), ("field", field)) if v is not None
        )
        super().__init__(f"{message} ({where})" if where else message)


class SizeError(InputError):
    """Problem exceeds a configured support or variable cap."""


class SolverError(ShadowProjError, RuntimeError):
    pass


class ExperimentError(ShadowProjError):
    """Experiment inputs are degenerate (e.g. every distance is zero)."""


class BoundViolation(ShadowProjError, AssertionError):
    """A mathematical inequality that must hold was observed to fail."""
