"""Cross-checks of the closed-form model against the independent oracles.

Each registered check draws its parameters from a seeded generator and
returns (closed form, reference) pairs. ``run_verify`` scales every closed
form by ``1 + perturbation`` before comparing, which lets tests confirm that
a wrong formula is caught.
"""

import math
from collections.abc import Callable, Iterable
from dataclasses import dataclass
from typing import Any

import numpy as np
from loguru import logger

from ..model.dynamics import (
    DecayModelParams,
    coupling_rate_R,
    decay_detuning_averaged,
    effective_rate_large_modulation,
    effective_single_exponential,
    efficiency_beta_delta,
)
from ..model.envelope import marginal_exact
from ..model.lineshape import GridSpec, gaussian_nodes, voigt_eval
from ..model.quantities import (
    CavityParams,
    EmitterParams,
    SubsystemParams,
    energy_to_rate,
    rate_to_energy,
)
from ..model.spectrum import effective_energies, spectrum_density, spectrum_normalization
from ..shared.exceptions import ParameterDomainError
from ..shared.utils import get_system_info
from .exponentials import oracle_best_single_exponential
from .quadrature import (
    QuadratureSpec,
    gauss_hermite_nodes,
    precise_eigenfrequencies,
    quad_adaptive,
)

__all__ = ("CheckOutcome", "available_checks", "register_check", "run_verify")

Pair = tuple[complex, complex]

_SPEC = QuadratureSpec(abs_tol=1e-300, rel_tol=1e-12, max_subdivisions=6000)


@dataclass(frozen=True, slots=True)
class CheckOutcome:
    name: str
    passed: bool
    worst_rel_error: float
    tolerance: float
    value: float
    reference: float
    draws: int

    def to_json(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "worst_rel_error": self.worst_rel_error,
            "tolerance": self.tolerance,
            "value": self.value,
            "reference": self.reference,
            "draws": self.draws,
        }


@dataclass(frozen=True, slots=True)
class _Check:
    name: str
    tolerance: float
    run: Callable[[np.random.Generator], list[Pair]]


_CHECKS: dict[str, _Check] = {}


def register_check(name: str, tolerance: float):
    def decorator(fn: Callable[[np.random.Generator], list[Pair]]):
        if name in _CHECKS:
            raise ValueError(f"check {name!r} already registered")
        _CHECKS[name] = _Check(name, tolerance, fn)
        return fn

    return decorator


def available_checks() -> tuple[str, ...]:
    return tuple(_CHECKS)


def _line_integral(f, centres: Iterable[float], width: float) -> float:
    """∫ f over the real line, split around the features at ``centres``."""
    centres = sorted(centres)
    lo, hi = centres[0] - width, centres[-1] + width
    parts = (
        quad_adaptive(f, -math.inf, lo, _SPEC),
        quad_adaptive(f, lo, hi, _SPEC, points=tuple(centres)),
        quad_adaptive(f, hi, math.inf, _SPEC),
    )
    if not all(part.certified for part in parts):
        logger.warning(f"Oracle quadrature not certified (error {sum(p.error for p in parts):.3g})")
    return math.fsum(part.value for part in parts)


def _draw_subsystem(rng: np.random.Generator, *, min_gamma_star: float = 0.0) -> SubsystemParams:
    return SubsystemParams(
        omega_x=float(rng.uniform(-300.0, 300.0)),
        omega_a=0.0,
        gamma=float(rng.uniform(0.5, 5.0)),
        gamma_star=float(rng.uniform(min_gamma_star, 400.0)),
        kappa=float(rng.uniform(50.0, 400.0)),
        g=float(np.exp(rng.uniform(math.log(1.0), math.log(400.0)))),
    )


def _eigenfrequencies(p: SubsystemParams) -> tuple[complex, complex]:
    """Complex eigenfrequencies in ns⁻¹ of the coupled emitter–cavity pair."""
    return precise_eigenfrequencies(
        complex(energy_to_rate(p.omega_x), (p.gamma + p.gamma_star) / 2),
        complex(energy_to_rate(p.omega_a), p.kappa / 2),
        p.g,
    )


@register_check("spectrum_normalization", tolerance=1e-8)
def _check_normalization(rng: np.random.Generator) -> list[Pair]:
    pairs = []
    for _ in range(50):
        p = _draw_subsystem(rng)
        l1, l2 = _eigenfrequencies(p)

        def integrand(nu, l1=l1, l2=l2):
            return 1.0 / (np.abs(nu - l1) ** 2 * np.abs(nu - l2) ** 2)

        width = 50.0 * (p.gamma_all + 2 * p.g)
        reference = _line_integral(integrand, (l1.real, l2.real), width)
        pairs.append((spectrum_normalization(p), reference))
    return pairs


@register_check("effective_frequencies", tolerance=1e-10)
def _check_effective_frequencies(rng: np.random.Generator) -> list[Pair]:
    pairs = []
    for _ in range(50):
        p = _draw_subsystem(rng)
        energies = effective_energies(p)
        reference = [complex(rate_to_energy(v)) for v in _eigenfrequencies(p)]
        for value in (energies.omega_x_tilde, energies.omega_a_tilde):
            pairs.append((value, min(reference, key=lambda r, v=value: abs(r - v))))
    return pairs


@register_check("envelope_marginal", tolerance=1e-6)
def _check_marginal(rng: np.random.Generator) -> list[Pair]:
    pairs = []
    for _ in range(10):
        p = _draw_subsystem(rng, min_gamma_star=5.0)
        decomposition = marginal_exact(p)
        half_width = rate_to_energy(p.gamma_all + 2 * p.g) / 2
        for omega in (p.omega_x, p.omega_x + half_width, p.omega_x - 3 * half_width):

            def integrand(omega_a, p=p, omega=omega):
                return np.array(
                    [
                        spectrum_density(
                            SubsystemParams(p.omega_x, float(wa), p.gamma, p.gamma_star, p.kappa, p.g),
                            omega,
                        )
                        for wa in omega_a
                    ]
                )

            reference = _line_integral(integrand, (omega, p.omega_x), 100 * half_width)
            pairs.append((decomposition.evaluate(omega), reference))
    return pairs


@register_check("gauss_hermite_rule", tolerance=1e-12)
def _check_gauss_hermite(rng: np.random.Generator) -> list[Pair]:
    nodes, weights = gauss_hermite_nodes(5)
    pairs: list[Pair] = [(105 * math.sqrt(math.pi) / 16, float(weights @ nodes**8))]
    for order in range(1, 42, 2):
        pairs.append((math.sqrt(math.pi), float(np.sum(gauss_hermite_nodes(order)[1]))))
    # The model's Gaussian averaging against the eigenproblem rule: E[cos X], X ~ N(0, 1/2).
    model_nodes, model_weights = gaussian_nodes(0.0, 1 / math.sqrt(2), 0.0)
    nodes, weights = gauss_hermite_nodes(41)
    pairs.append(
        (float(model_weights @ np.cos(model_nodes)), float(weights @ np.cos(nodes)) / math.sqrt(math.pi))
    )
    return pairs


@register_check("voigt_profile", tolerance=1e-6)
def _check_voigt(rng: np.random.Generator) -> list[Pair]:
    pairs = []
    sigmas = rng.uniform(5.0, 300.0, size=5)
    widths = sigmas * rng.uniform(0.1, 4.0, size=5)
    for gamma_w, sigma in ((225.0, 70.0), *zip(widths, sigmas, strict=True)):
        gamma_w, sigma = float(gamma_w), float(sigma)
        for x in (0.0, gamma_w, 3 * (gamma_w + sigma)):

            def integrand(u, x=x, gamma_w=gamma_w, sigma=sigma):
                lorentz = (gamma_w / (2 * math.pi)) / ((x - u) ** 2 + (gamma_w / 2) ** 2)
                gauss = np.exp(-0.5 * (u / sigma) ** 2) / (math.sqrt(2 * math.pi) * sigma)
                return lorentz * gauss

            reference = _line_integral(integrand, (0.0, x), 20 * (gamma_w + sigma))
            pairs.append((voigt_eval(x, gamma_w, sigma), reference))
    return pairs


@register_check("effective_single_exponential", tolerance=1e-2)
def _check_effective_exponential(rng: np.random.Generator) -> list[Pair]:
    pairs = []
    for _ in range(25):
        base = float(rng.uniform(0.5, 20.0))
        rates = base * np.array([1.0, float(rng.uniform(1.05, 5.0))])
        amplitudes = rng.uniform(0.1, 1.0, size=2)
        c_eff, gamma_eff = effective_single_exponential(amplitudes, rates)
        c_ref, gamma_ref = oracle_best_single_exponential(amplitudes, rates)
        pairs += [(gamma_eff, gamma_ref), (c_eff, c_ref)]
    return pairs


def _decay_draw(rng: np.random.Generator) -> DecayModelParams:
    emitter = EmitterParams(
        omega_x_bar=0.0,
        delta=float(rng.uniform(200.0, 900.0)),
        gamma=float(rng.uniform(1.0, 3.0)),
        gamma_star_1=float(rng.uniform(20.0, 200.0)),
        gamma_star_2=float(rng.uniform(20.0, 200.0)),
        sigma_sd=float(rng.uniform(20.0, 120.0)),
        a1=1.0,
        a2=float(rng.uniform(0.5, 1.5)),
    )
    cavity = CavityParams(
        omega_a_bar=float(rng.uniform(-100.0, 100.0)),
        kappa=float(rng.uniform(100.0, 300.0)),
        sigma_vib=float(rng.uniform(0.0, 60.0)),
    )
    return DecayModelParams(emitter, cavity, g=float(rng.uniform(10.0, 80.0)))


@register_check("detuning_average_fubini", tolerance=1e-4)
def _check_fubini(rng: np.random.Generator) -> list[Pair]:
    pairs = []
    for _ in range(3):
        params = _decay_draw(rng)
        e, c = params.emitter, params.cavity
        grid = GridSpec.spanning(-0.1, 40.0 / e.gamma, 0.004)
        value = decay_detuning_averaged(params, grid, binned=True).riemann_sum()
        mean = e.omega_x_bar - c.omega_a_bar
        sigma = math.hypot(e.sigma_sd, c.sigma_vib)

        def integrand(delta, params=params, mean=mean, sigma=sigma):
            weight = np.exp(-0.5 * ((delta - mean) / sigma) ** 2) / (math.sqrt(2 * math.pi) * sigma)
            yield_ = sum(
                params.emitter.amplitude(line) * efficiency_beta_delta(line, delta, params)
                for line in (1, 2)
            )
            return weight * yield_

        centres = (mean, -e.line_offset(1), -e.line_offset(2))
        reference = _line_integral(integrand, centres, 12 * sigma)
        pairs.append((value, reference))
    return pairs


@register_check("large_modulation_rate", tolerance=1e-2)
def _check_large_modulation(rng: np.random.Generator) -> list[Pair]:
    pairs = []
    for _ in range(5):
        kappa = float(rng.uniform(100.0, 300.0))
        gamma_star = float(rng.uniform(kappa, 3 * kappa))
        g = float(rng.uniform(10.0, 80.0))
        emitter = EmitterParams(0.0, 0.0, kappa / 100, gamma_star, gamma_star)
        params = DecayModelParams(emitter, CavityParams(0.0, kappa), g)
        width = 20 * rate_to_energy(kappa + gamma_star)

        def first(delta, params=params):
            return coupling_rate_R(1, delta, params)

        def second(delta, params=params):
            return coupling_rate_R(1, delta, params) ** 2

        reference = _line_integral(second, (0.0,), width) / _line_integral(first, (0.0,), width)
        p = emitter.subsystem(1, g, kappa)
        pairs.append((effective_rate_large_modulation(p), reference))
    return pairs


def _rel_error(value: complex, reference: complex) -> float:
    scale = abs(reference)
    if scale == 0:
        return abs(value)
    return abs(value - reference) / scale


def run_verify(
    names: Iterable[str] | None = None, *, seed: int = 0, perturbation: float = 0.0
) -> dict[str, Any]:
    """Run the named checks (all by default) and build the pass/fail report."""
    selected = list(names) if names is not None else list(_CHECKS)
    unknown = [n for n in selected if n not in _CHECKS]
    if unknown:
        raise ParameterDomainError(f"unknown checks: {', '.join(unknown)}")
    registry = list(_CHECKS)
    outcomes = []
    for name in selected:
        check = _CHECKS[name]
        # Draws depend on the check, not on which others were selected.
        rng = np.random.default_rng((seed, registry.index(name)))
        pairs = [(v * (1.0 + perturbation), r) for v, r in check.run(rng)]
        errors = [_rel_error(v, r) for v, r in pairs]
        worst = int(np.argmax(errors))
        outcome = CheckOutcome(
            name=name,
            passed=bool(errors[worst] <= check.tolerance),
            worst_rel_error=float(errors[worst]),
            tolerance=check.tolerance,
            value=float(abs(pairs[worst][0])),
            reference=float(abs(pairs[worst][1])),
            draws=len(pairs),
        )
        level = "INFO" if outcome.passed else "WARNING"
        logger.log(level, f"Check {name}: worst relative error {outcome.worst_rel_error:.3g}")
        outcomes.append(outcome)
    system = {k: v for k, v in get_system_info().items() if k != "process_id"}
    return {
        "passed": all(o.passed for o in outcomes),
        "seed": seed,
        "perturbation": perturbation,
        "checks": [o.to_json() for o in outcomes],
        "system": system,
    }
