"""
Error types shared by every service
Each error carries the exit code the CLI returns for it
"""


class PolaritonError(Exception):
    """Base error for the polariton toolkit"""
    exit_code = 1


class ValidationError(PolaritonError):
    """Input violates a domain invariant (bad value, bad key, bad file)"""
    exit_code = 2


class ConfigError(ValidationError):
    """Invalid RunConfig file"""


class DatasetError(ValidationError):
    """Malformed or under-determined peak dataset"""


class NumericalError(PolaritonError):
    """A numerical routine failed to produce a trustworthy answer"""
    exit_code = 3


class HopfieldError(NumericalError):
    """Eigensolver failure or degenerate polariton branches"""


class DispersionError(NumericalError):
    """No valid branch energy (negative discriminant, evanescent angle, unreachable target)"""


class TransferMatrixError(NumericalError):
    """Singular or non-finite characteristic-matrix result"""


class CalibrationError(NumericalError):
    """Oscillator strength root not bracketed"""


class FitError(NumericalError):
    """Every fit restart failed to evaluate"""
