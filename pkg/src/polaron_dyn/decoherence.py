"""Time-dependent kernels and decoherence exponents of the polaron-frame qubit.

With ``x = 4 g^2 w^2`` and ``c_n = x^n / n!`` the zero-temperature kernels are::

    beta_pm(t) = 2 J~^2 sum_n (+-1)^n c_n sin(n w t) / (n w)
    Gamma(t)   = 4 J~^2 sum_n c_n (1 - cos n w t) / (n w)^2

and ``Gamma_odd`` / ``Gamma_even`` restrict the last sum to odd / even n. All
series are entire in ``x``; they are truncated adaptively from the
coefficient envelope and summed in ascending order with compensation.
"""
from __future__ import annotations

import enum
import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import DomainError, ModelParams

DEFAULT_TOL = 1e-12
DEFAULT_N_MAX_CAP = 512
X_OVERFLOW = 700.0


class SeriesOverflowError(OverflowError):
    """The series argument is too large for double-precision coefficients."""


class Parity(enum.Enum):
    ODD = "odd"
    EVEN = "even"
    ALL = "all"


def _parity(p) -> Parity:
    return p if isinstance(p, Parity) else Parity(str(p).lower())


@dataclass(frozen=True)
class SeriesParams:
    x: float
    j_tilde_sq: float
    omega: float
    tol: float = DEFAULT_TOL
    n_max_cap: int = DEFAULT_N_MAX_CAP

    @classmethod
    def from_model(cls, params: ModelParams, tol: float = DEFAULT_TOL,
                   n_max_cap: int = DEFAULT_N_MAX_CAP) -> "SeriesParams":
        return cls(x=params.x, j_tilde_sq=params.j_tilde**2, omega=params.omega,
                   tol=tol, n_max_cap=n_max_cap)


@dataclass(frozen=True)
class _Series:
    n: np.ndarray          # 1..N
    weight: np.ndarray     # J~^2 x^n / n!
    truncation_n: int
    capped: bool


@functools.lru_cache(maxsize=256)
def _series_cached(J: float, omega: float, g: float, tol: float, cap: int) -> _Series:
    x = 4.0 * g * g * omega * omega
    if x > X_OVERFLOW:
        raise SeriesOverflowError(
            f"series argument x = 4 g^2 w^2 = {x:.4g} exceeds {X_OVERFLOW:g}; "
            "coefficients would overflow, a log-space evaluation is required")
    if x == 0.0 or J == 0.0:
        empty = np.zeros(0)
        return _Series(n=empty, weight=empty, truncation_n=0, capped=False)

    n = np.arange(1, cap + 1, dtype=float)
    log_c = n * math.log(x) - np.array([math.lgamma(k + 1.0) for k in n])
    c = np.exp(log_c)
    # tail bound after N terms: c_{N+1} / (1 - x / (N + 2)) once N + 2 > x
    partial = np.cumsum(c)
    truncation_n, capped = cap, True
    for idx in range(cap - 1):
        big_n = idx + 1
        if big_n + 2 <= x:
            continue
        tail = c[idx + 1] / (1.0 - x / (big_n + 2))
        if tail <= tol * partial[idx] and c[idx + 1] <= tol * partial[idx]:
            truncation_n, capped = big_n, False
            break
    if capped:
        warnings.warn(f"series truncation hit the cap n_max_cap={cap} at x={x:.4g}",
                      RuntimeWarning, stacklevel=3)
    n = n[:truncation_n]
    log_jt2 = 2.0 * math.log(J) - 4.0 * g * g
    weight = np.exp(log_jt2 + log_c[:truncation_n])
    return _Series(n=n, weight=weight, truncation_n=truncation_n, capped=capped)


def _series(params: ModelParams, tol: float = DEFAULT_TOL,
            n_max_cap: int = DEFAULT_N_MAX_CAP) -> _Series:
    params.require_zero_temperature()
    return _series_cached(float(params.J), float(params.omega), float(params.g),
                          float(tol), int(n_max_cap))


def truncation_order(params: ModelParams, tol: float = DEFAULT_TOL,
                     n_max_cap: int = DEFAULT_N_MAX_CAP) -> tuple[int, bool]:
    """Number of series terms kept and whether the cap was hit."""
    s = _series(params, tol, n_max_cap)
    return s.truncation_n, s.capped


def compensated_sum(rows) -> np.ndarray:
    """Neumaier summation over the leading axis, in the given order."""
    rows = np.asarray(rows)
    total = np.zeros(rows.shape[1:], dtype=rows.dtype)
    comp = np.zeros_like(total)
    for row in rows:
        t = total + row
        comp += np.where(np.abs(total) >= np.abs(row), (total - t) + row, (row - t) + total)
        total = t
    return total + comp


def _sum_terms(coef: np.ndarray, n: np.ndarray, t, func):
    """``sum_n coef_n func(n w t)`` for scalar or array ``t``."""
    t_arr = np.asarray(t, dtype=float)
    if coef.size == 0:
        out = np.zeros_like(t_arr)
        return float(out) if out.ndim == 0 else out
    if t_arr.ndim == 0:
        return math.fsum(coef * func(n * float(t_arr)))
    flat = t_arr.ravel()
    rows = coef[:, None] * func(np.outer(n, flat))
    return compensated_sum(rows).reshape(t_arr.shape)


def _one_minus_cos(phase):
    return 2.0 * np.sin(0.5 * phase) ** 2


def _mask(n: np.ndarray, parity: Parity) -> np.ndarray:
    if parity is Parity.ODD:
        return (n % 2) == 1
    if parity is Parity.EVEN:
        return (n % 2) == 0
    return np.ones(n.shape, dtype=bool)


def beta_kernel(sign, t, params: ModelParams, tol: float = DEFAULT_TOL):
    """Kernel ``beta_+`` (``sign=+1``) or ``beta_-`` (``sign=-1``) at times ``t``."""
    s = _series(params, tol)
    sgn = 1.0 if sign in (+1, "+", "plus") else -1.0 if sign in (-1, "-", "minus") else None
    if sgn is None:
        raise DomainError(f"sign must be '+' or '-', got {sign!r}")
    w = params.omega
    coef = 2.0 * s.weight * (sgn ** s.n) / (s.n * w)
    return _sum_terms(coef, s.n * w, t, np.sin)


def gamma_parity(parity, t, params: ModelParams, tol: float = DEFAULT_TOL):
    """Parity-restricted decoherence exponent; ``parity='all'`` gives Gamma(t)."""
    parity = _parity(parity)
    s = _series(params, tol)
    w = params.omega
    m = _mask(s.n, parity)
    coef = 4.0 * s.weight[m] / (s.n[m] * w) ** 2
    return _sum_terms(coef, s.n[m] * w, t, _one_minus_cos)


def gamma(t, params: ModelParams, tol: float = DEFAULT_TOL):
    return gamma_parity(Parity.ALL, t, params, tol)


def gamma_rate(parity, t, params: ModelParams, tol: float = DEFAULT_TOL):
    """Time derivative of :func:`gamma_parity`.

    Equals ``2 beta_+`` for all terms, ``beta_+ - beta_-`` for odd and
    ``beta_+ + beta_-`` for even.
    """
    parity = _parity(parity)
    s = _series(params, tol)
    w = params.omega
    m = _mask(s.n, parity)
    coef = 4.0 * s.weight[m] / (s.n[m] * w)
    return _sum_terms(coef, s.n[m] * w, t, np.sin)


def gamma_longtime(parity, params: ModelParams, tol: float = DEFAULT_TOL) -> float:
    """Abel-regularized limit ``4 J~^2 sum_parity c_n / (n w)^2``.

    This is the period average of the corresponding exponent.
    """
    parity = _parity(parity)
    s = _series(params, tol)
    m = _mask(s.n, parity)
    return math.fsum(4.0 * s.weight[m] / (s.n[m] * params.omega) ** 2)


def gamma_longtime_asymptotic(parity, params: ModelParams) -> float:
    """Large-coupling form of :func:`gamma_longtime`.

    Each parity tends to ``J^2 / (8 g^4 w^6)``; their sum (``'all'``) to
    ``J^2 / (4 g^4 w^6)``.
    """
    params.require_valid()
    p = str(parity.value if isinstance(parity, Parity) else parity).lower()
    if params.g == 0.0:
        raise DomainError("asymptotic long-time exponent is singular at g = 0")
    base = params.J**2 / (8.0 * params.g**4 * params.omega**6)
    if p in ("odd", "even", "odd_even"):
        return base
    if p == "all":
        return 2.0 * base
    raise DomainError(f"unknown parity {parity!r}")


@dataclass(frozen=True)
class DecoherenceProfile:
    grid: np.ndarray
    gamma: np.ndarray
    gamma_odd: np.ndarray
    gamma_even: np.ndarray
    beta_plus: np.ndarray
    beta_minus: np.ndarray
    truncation_n: int
    capped: bool = False


def decoherence_profile(grid, params: ModelParams, tol: float = DEFAULT_TOL) -> DecoherenceProfile:
    grid = np.asarray(grid, dtype=float)
    n, capped = truncation_order(params, tol)
    return DecoherenceProfile(
        grid=grid,
        gamma=gamma(grid, params, tol),
        gamma_odd=gamma_parity(Parity.ODD, grid, params, tol),
        gamma_even=gamma_parity(Parity.EVEN, grid, params, tol),
        beta_plus=beta_kernel(+1, grid, params, tol),
        beta_minus=beta_kernel(-1, grid, params, tol),
        truncation_n=n,
        capped=capped,
    )
