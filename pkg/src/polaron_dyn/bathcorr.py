"""Bath correlation functions of the displaced-oscillator operators.

In the polaron frame the qubit couples to ``F = exp(2 g w b^dag) exp(-2 g w b) - 1``.
For a thermal single mode all two-time averages reduce to closed exponential
forms; the Laguerre series they come from is kept here only as a check.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .model import DomainError, ModelParams


class CorrelatorKind(enum.Enum):
    NORMAL = "normal"        # <F^dag(t) F(tau)> = <F(t) F^dag(tau)>
    ANOMALOUS = "anomalous"  # <F^dag(t) F^dag(tau)> = <F(t) F(tau)>


@dataclass(frozen=True)
class CorrelatorValue:
    value: complex | np.ndarray
    kind: CorrelatorKind


@dataclass(frozen=True)
class BoseOccupation:
    n0: float


def laguerre(n: int, x):
    """Laguerre polynomial ``L_n(x)`` by the three-term recurrence.

    Works elementwise on arrays.
    """
    if n < 0:
        raise DomainError("Laguerre degree must be nonnegative")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = 1.0 - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 - x) * cur - k * prev) / (k + 1)
    return cur if cur.ndim else float(cur)


def bose_occupation(beta: float, omega: float) -> BoseOccupation:
    """Mean occupation ``z / (1 - z)`` with ``z = exp(-beta omega)``.

    This equals ``1 / (exp(beta omega) - 1)`` and vanishes for ``beta = inf``.
    """
    if math.isnan(beta) or beta <= 0:
        raise DomainError(f"beta must be positive or inf, got {beta!r}")
    if math.isinf(beta):
        return BoseOccupation(0.0)
    return BoseOccupation(1.0 / math.expm1(beta * omega))


def generating_function_residual(z: float, x2: float, tol: float = 1e-14) -> float:
    """``|(1 - z) sum_n z^n L_n(x2) - exp(x2 z / (z - 1))|``.

    The series is summed until the tail bound ``exp(x2 / 2) z^(N+1)``
    (from ``|L_n(x)| <= exp(x/2)`` for ``x >= 0``) drops below ``tol``.
    """
    if not 0.0 <= z < 1.0:
        raise DomainError(f"z must lie in [0, 1), got {z!r}")
    if x2 < 0:
        raise DomainError("x2 must be nonnegative")
    rhs = math.exp(x2 * z / (z - 1.0))
    if z == 0.0:
        return abs(1.0 - rhs)
    n_terms = int(math.ceil((math.log(tol) - x2 / 2.0) / math.log(z)))
    terms = []
    prev, cur = 1.0, 1.0 - x2
    zn = 1.0
    terms.append(1.0)
    for k in range(1, n_terms + 1):
        zn *= z
        terms.append(zn * cur)
        prev, cur = cur, ((2 * k + 1 - x2) * cur - k * prev) / (k + 1)
    lhs = (1.0 - z) * math.fsum(terms)
    return abs(lhs - rhs)


def correlator(kind: CorrelatorKind | str, dt, params: ModelParams) -> CorrelatorValue:
    """Thermal two-time average of the polaron bath operators at lag ``dt``.

    ``dt`` may be a scalar or an array. With ``x = 4 g^2 w^2`` and the Bose
    occupation ``N0``::

        NORMAL:    exp(x e^{-i w dt}) exp(-2 N0 x (1 - cos w dt)) - 2 exp(-N0 x) + 1
        ANOMALOUS: exp(-x e^{-i w dt}) exp(-2 N0 x (1 + cos w dt)) - 2 exp(-N0 x) + 1
    """
    kind = CorrelatorKind(kind) if isinstance(kind, str) else kind
    params.require_valid()
    n0 = bose_occupation(params.beta, params.omega).n0
    x = params.x
    phase = np.asarray(dt, dtype=float) * params.omega
    rot = np.exp(-1j * phase)
    if kind is CorrelatorKind.NORMAL:
        sign, cos_sign = 1.0, -1.0
    else:
        sign, cos_sign = -1.0, 1.0
    if n0 == 0.0:
        # expm1 keeps the vacuum branch accurate at small x
        value = np.expm1(sign * x * rot)
    else:
        value = (np.exp(sign * x * rot) * np.exp(-2.0 * n0 * x * (1.0 + cos_sign * np.cos(phase)))
                 - 2.0 * np.exp(-n0 * x) + 1.0)
    if np.ndim(value) == 0:
        value = complex(value)
    return CorrelatorValue(value=value, kind=kind)
