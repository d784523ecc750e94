from .engine import FitResult, Parameter, minimize_ssr

__all__ = ("FitResult", "Parameter", "minimize_ssr")
