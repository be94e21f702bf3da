"""Model constants of the single-mode spin-boson problem and the quantities
that follow from the Lang-Firsov (polaron) transformation.

Units: hbar = 1 and, by convention, omega = 1 sets the energy scale, so times
are measured in units of 1/omega.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

INFINITE = math.inf
"""Inverse temperature of the zero-temperature (vacuum) bath."""

DEFAULT_MARKOV_THRESHOLD = 0.1


class DomainError(ValueError):
    """Input outside the domain of an operation."""


class UnsupportedTemperatureError(DomainError):
    """A dynamics engine was asked to run with a finite-temperature bath."""


@dataclass(frozen=True)
class ModelParams:
    """Bare constants of ``H = J sx + omega a^dag a + g omega sz (a + a^dag)``.

    Construction never raises so that invalid inputs can still be reported by
    :func:`validate`; engines call :meth:`require_valid` instead.
    """

    J: float = 0.1
    omega: float = 1.0
    g: float = 1.0
    beta: float = INFINITE

    @property
    def zero_temperature(self) -> bool:
        return math.isinf(self.beta) and self.beta > 0

    @property
    def x(self) -> float:
        """Series argument ``4 g^2 omega^2`` of the decoherence kernels."""
        return 4.0 * self.g**2 * self.omega**2

    @property
    def j_tilde(self) -> float:
        return self.J * math.exp(-2.0 * self.g**2)

    def require_valid(self) -> "ModelParams":
        report = validate(self)
        if not report.ok:
            raise DomainError("; ".join(report.errors))
        return self

    def require_zero_temperature(self) -> "ModelParams":
        self.require_valid()
        if not self.zero_temperature:
            raise UnsupportedTemperatureError(
                f"dynamics are only defined at zero temperature (beta=inf), got beta={self.beta!r}")
        return self

    def replace(self, **changes) -> "ModelParams":
        kw = dict(J=self.J, omega=self.omega, g=self.g, beta=self.beta)
        kw.update(changes)
        return ModelParams(**kw)


@dataclass(frozen=True)
class PolaronParams:
    J_tilde: float
    effective_coupling: float
    bare_coupling: float


@dataclass(frozen=True)
class TimescaleReport:
    tau_B: float
    tau_R: float
    markovian_ratio: float


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()
    markovian_ratio: float = math.nan

    @property
    def ok(self) -> bool:
        return not self.errors


def polaron_transform(params: ModelParams) -> PolaronParams:
    """Renormalized tunneling ``J~ = J exp(-2 g^2)`` and its ratio to omega."""
    jt = params.J * math.exp(-2.0 * params.g**2)
    return PolaronParams(J_tilde=jt, effective_coupling=jt / params.omega,
                         bare_coupling=params.g * params.omega)


def timescales(params: ModelParams) -> TimescaleReport:
    """Bath correlation time ``1/omega`` against relaxation time ``1/J~``.

    Markovian behaviour needs ``tau_R >> tau_B``, i.e. a small ratio.
    """
    pol = polaron_transform(params)
    tau_r = INFINITE if pol.J_tilde == 0.0 else 1.0 / pol.J_tilde
    return TimescaleReport(tau_B=1.0 / params.omega, tau_R=tau_r,
                           markovian_ratio=pol.effective_coupling)


def validate(params: ModelParams,
             threshold: float = DEFAULT_MARKOV_THRESHOLD) -> ValidationReport:
    errors = []
    warnings = []
    values = {"J": params.J, "omega": params.omega, "g": params.g}
    for name, value in values.items():
        if not math.isfinite(value):
            errors.append(f"{name} must be finite")
    if not params.omega > 0:
        errors.append("omega must be positive")
    if params.g < 0:
        errors.append("g must be nonnegative")
    if params.J < 0:
        errors.append("J must be nonnegative")
    if math.isnan(params.beta) or params.beta <= 0:
        errors.append("beta must be positive (or inf for zero temperature)")
    if errors:
        return ValidationReport(errors=tuple(errors))

    ratio = polaron_transform(params).effective_coupling
    if ratio >= threshold:
        warnings.append(
            f"anti-adiabatic condition violated: J~/omega = {ratio:.4g} >= {threshold:g}")
    return ValidationReport(warnings=tuple(warnings), markovian_ratio=ratio)
