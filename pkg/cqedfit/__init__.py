from importlib import import_module
from typing import Any

_FITTING_MODULE = ".fitting"

_EXPORTS: dict[str, tuple[str, str]] = {
    "ArtifactStore": (".store.records", "ArtifactStore"),
    "CavityParams": (".model.quantities", "CavityParams"),
    "Config": (".shared.config", "Config"),
    "ConfigKeys": (".shared.config_keys", "ConfigKeys"),
    "CouplingSetup": (".fitting.coupling", "CouplingSetup"),
    "CrossingResult": (".fitting.crossing", "CrossingResult"),
    "DecayModelParams": (".model.dynamics", "DecayModelParams"),
    "EmitterParams": (".model.quantities", "EmitterParams"),
    "FitResult": (_FITTING_MODULE, "FitResult"),
    "GCurve": (".fitting.coupling", "GCurve"),
    "GridSpec": (".model.lineshape", "GridSpec"),
    "IrfKernel": (".model.dynamics", "IrfKernel"),
    "LinewidthTable": (".fitting.spectra", "LinewidthTable"),
    "Parameter": (_FITTING_MODULE, "Parameter"),
    "PipelineRunner": (".app.main", "PipelineRunner"),
    "SampledCurve": (".model.lineshape", "SampledCurve"),
    "SubsystemParams": (".model.quantities", "SubsystemParams"),
    "SweepRuntime": (".shared.runtime", "SweepRuntime"),
    "minimize_ssr": (_FITTING_MODULE, "minimize_ssr"),
    "run_verify": (".oracle.verify", "run_verify"),
}

__all__ = list(_EXPORTS)


def __getattr__(name: str) -> Any:
    try:
        module_name, attr_name = _EXPORTS[name]
    except KeyError:
        raise AttributeError(name) from None
    value = getattr(import_module(module_name, __name__), attr_name)
    globals()[name] = value
    return value


def __dir__() -> list[str]:
    return sorted(set(globals()) | set(_EXPORTS))
