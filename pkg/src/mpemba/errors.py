"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: validation failures exit 2, resource
limits exit 3, numerical failures exit 4.
"""


class MpembaError(Exception):
    """Base class for all package errors."""


class ValidationError(MpembaError):
    """Bad input: malformed config, out-of-range parameters, shape mismatch."""


class ResourceError(MpembaError):
    """A requested computation exceeds a configured memory or size cap."""


class NumericalError(MpembaError):
    """A numerical procedure failed to meet its contract."""


class DefectiveSpectrumError(NumericalError):
    """Biorthonormalization failed; the generator is (near-)defective."""


class DegenerateSteadyStateError(NumericalError):
    """The zero eigenvalue has multiplicity > 1; no unique steady state."""
