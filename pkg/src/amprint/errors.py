"""Exception hierarchy. Everything raised on purpose derives from AmprintError
so the CLI can map domain failures to exit code 1."""


class AmprintError(Exception):
    pass


class MeshError(AmprintError):
    pass


class MeshFormatError(MeshError):
    """File could not be parsed in the declared format."""


class DegenerateMeshError(MeshError):
    """Empty mesh, or every triangle degenerate."""


class MeshNotClosedError(MeshError):
    """Operation requires a watertight mesh."""


class SliceError(AmprintError):
    """Non-manifold cross-section while rasterizing a layer."""


class RegistrationError(AmprintError):
    """Degenerate geometry (e.g. collinear correspondences) during alignment."""


class TrainingError(AmprintError):
    """Training aborted (NaN loss, empty split, bad shapes)."""


class ScoringError(AmprintError):
    pass


class UnsupportedCharacteristicError(ScoringError):
    """The technology's critical-value table has no entry for this kind."""

    def __init__(self, kind, technology):
        self.kind = kind
        self.technology = technology
        super().__init__(
            f"characteristic {kind!r} has no critical value for technology {technology!r}"
        )


class FitConvergenceError(ScoringError):
    """Bracketed search did not converge; carries the bracket for diagnosis."""

    def __init__(self, message, bracket):
        self.bracket = bracket
        super().__init__(f"{message} (bracket: [{bracket[0]:g}, {bracket[1]:g}])")


class ConfigError(ScoringError):
    """Invalid printability configuration; message names the offending field."""
