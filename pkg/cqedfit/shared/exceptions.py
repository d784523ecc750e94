__all__ = (
    "ConfigurationError",
    "ConvergenceError",
    "CqedFitError",
    "DegenerateDecompositionError",
    "InputFormatError",
    "InputNotFoundError",
    "NoCrossingError",
    "NoDoubletError",
    "ParameterDomainError",
    "PreconditionError",
)


class CqedFitError(Exception):
    code = "internal_error"


class ConfigurationError(CqedFitError):
    code = "config_error"


class InputNotFoundError(CqedFitError):
    code = "input_not_found"


class InputFormatError(CqedFitError):
    code = "input_format"


class ParameterDomainError(CqedFitError, ValueError):
    code = "domain_error"


class PreconditionError(CqedFitError, ValueError):
    code = "precondition_failed"


class DegenerateDecompositionError(CqedFitError):
    code = "degenerate_decomposition"


class NoDoubletError(CqedFitError):
    code = "no_doublet_structure"


class NoCrossingError(CqedFitError):
    code = "no_crossing"

    def __init__(self, message: str = "", *, min_gap: float | None = None):
        super().__init__(message)
        self.min_gap = min_gap


class ConvergenceError(CqedFitError):
    code = "non_convergence"

    def __init__(self, message: str = "", *, last_iterate: float | None = None):
        super().__init__(message)
        self.last_iterate = last_iterate
