"""l1-norm coherence and the coherence-backflow measure of non-Markovianity.

``N = max_phi  integral over {Delta > 0} of Delta(t) dt`` with
``Delta = d C_l1 / dt``. The initial states are ``rho01(0) = exp(i phi) / 2``
with equal populations; the map is linear in ``rho01(0)``, so the maximal
magnitude 1/2 is where the maximum sits.
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from . import decoherence as deco
from .model import DomainError, ModelParams
from .propagate import (DEFAULT_KAPPA, DEFAULT_PLUS_PARITY, Engine, QubitState,
                        _check_grid, evolve)

DEFAULT_N_PHASES = 64
ROOT_XTOL = 1e-10
THREADS_ENV = "POLARON_DYN_THREADS"


@dataclass(frozen=True)
class CoherenceSeries:
    grid: np.ndarray
    c: np.ndarray
    delta: np.ndarray


@dataclass(frozen=True)
class NonMarkovResult:
    n_value: float
    intervals: list[tuple[float, float]]
    optimal_phase: float
    horizon: float
    phases: np.ndarray = field(default_factory=lambda: np.zeros(0))
    per_phase: np.ndarray = field(default_factory=lambda: np.zeros(0))


def coherence_l1(rho) -> float:
    """Sum of magnitudes of the off-diagonal elements."""
    if isinstance(rho, QubitState):
        return abs(rho.rho01) + abs(rho.rho10)
    m = np.asarray(rho)
    off = ~np.eye(m.shape[-1], dtype=bool)
    return float(np.abs(m[off]).sum())


class _ClosedFormCoherence:
    """Coherence of the closed-form map and its exact time derivative.

    For ``rho01(0) = (a + i b) / 2`` the evolved coherence is
    ``C = sqrt(a^2 E_p^2 + b^2 E_m^2)`` with ``E = exp(-kappa Gamma_parity)``.
    """

    def __init__(self, params: ModelParams, kappa=DEFAULT_KAPPA, plus_parity=DEFAULT_PLUS_PARITY):
        params.require_zero_temperature()
        self.params = params
        self.kappa = kappa
        self.plus = deco.Parity(plus_parity)
        self.minus = deco.Parity.EVEN if self.plus is deco.Parity.ODD else deco.Parity.ODD

    def channels(self, t):
        p, k = self.params, self.kappa
        gp = deco.gamma_parity(self.plus, t, p)
        gm = deco.gamma_parity(self.minus, t, p)
        rp = deco.gamma_rate(self.plus, t, p)
        rm = deco.gamma_rate(self.minus, t, p)
        return np.exp(-2.0 * k * gp), np.exp(-2.0 * k * gm), rp, rm

    def c_and_delta(self, t, a, b, chan=None):
        ep2, em2, rp, rm = self.channels(t) if chan is None else chan
        c2 = a * a * ep2 + b * b * em2
        c = np.sqrt(c2)
        with np.errstate(invalid="ignore", divide="ignore"):
            delta = np.where(c > 0, -self.kappa * (a * a * ep2 * rp + b * b * em2 * rm) / c, 0.0)
        return c, delta


def _fd_derivative(grid: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Fourth-order centered differences on a uniform grid, second-order at the ends."""
    if grid.size < 5:
        return np.gradient(c, grid, edge_order=1 if grid.size < 3 else 2)
    h = np.diff(grid)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0.0):
        return np.gradient(c, grid, edge_order=2)
    h = h[0]
    d = np.gradient(c, h, edge_order=2)
    d[2:-2] = (-c[4:] + 8.0 * c[3:-1] - 8.0 * c[1:-3] + c[:-4]) / (12.0 * h)
    return d


def coherence_trajectory(rho0, grid, params: ModelParams, engine=Engine.CLOSED_FORM,
                         **engine_kw) -> CoherenceSeries:
    """Coherence of the evolved state and its time derivative.

    Closed form: exact derivative via the Gamma-rate series. Other engines:
    finite differences of the sampled coherence.
    """
    engine = Engine(engine) if not isinstance(engine, Engine) else engine
    if engine is Engine.NAIVE_MARKOV:
        raise DomainError("coherence_trajectory supports the closed, ode and exact engines")
    grid = _check_grid(grid)
    traj = evolve(engine, rho0, grid, params, **engine_kw)
    c = 2.0 * np.abs(traj.rho01)
    if engine is Engine.CLOSED_FORM:
        r01 = traj.rho[0, 0, 1]
        cf = _ClosedFormCoherence(params, engine_kw.get("kappa", DEFAULT_KAPPA),
                                  engine_kw.get("plus_parity", DEFAULT_PLUS_PARITY))
        _, delta = cf.c_and_delta(grid, 2.0 * r01.real, 2.0 * r01.imag)
    else:
        delta = _fd_derivative(grid, c)
    return CoherenceSeries(grid=grid, c=c, delta=delta)


def _positive_intervals(t: np.ndarray, delta: np.ndarray, root):
    """Maximal intervals where ``delta > 0``; ``root(lo, hi)`` refines a sign change."""
    pos = delta > 0
    intervals = []
    i = 0
    n = t.size
    while i < n:
        if not pos[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and pos[j + 1]:
            j += 1
        start = t[0] if i == 0 else root(t[i - 1], t[i])
        end = t[-1] if j == n - 1 else root(t[j], t[j + 1])
        if end > start:
            intervals.append((float(start), float(end)))
        i = j + 1
    return intervals


def default_points(params: ModelParams, horizon: float) -> int:
    """Grid size resolving the highest retained harmonic at every phase."""
    n_terms, _ = deco.truncation_order(params)
    periods = max(horizon * params.omega / (2.0 * math.pi), 1.0)
    return int(math.ceil(periods * max(4096, 64 * n_terms))) + 1


def _check_horizon(horizon: float, omega: float):
    if not horizon > 0:
        raise DomainError("horizon must be positive")
    ratio = horizon * omega / math.pi
    if abs(ratio - round(ratio)) > 1e-9:
        warnings.warn(f"horizon {horizon:g} is not a multiple of pi/omega; "
                      "backflow intervals may be clipped", RuntimeWarning, stacklevel=3)


def _phase_grid(phase_grid) -> np.ndarray:
    if phase_grid is None:
        phase_grid = DEFAULT_N_PHASES
    if np.isscalar(phase_grid):
        n = int(phase_grid)
        if n < 1:
            raise DomainError("phase grid must be nonempty")
        return 2.0 * np.pi * np.arange(n) / n
    phases = np.asarray(phase_grid, dtype=float)
    if phases.size == 0:
        raise DomainError("phase grid must be nonempty")
    return phases


def nonmarkovianity(params: ModelParams, horizon: float | None = None, phase_grid=None,
                    engine=Engine.CLOSED_FORM, n_points: int | None = None,
                    **engine_kw) -> NonMarkovResult:
    """Backflow measure maximized over the initial phase.

    Positive-derivative intervals are bracketed on a uniform grid. For the
    closed form, interval ends of the optimal phase are then refined by
    bracketed root finding on the exact derivative to ``1e-10``, and the
    backflow is the sum of ``C(end) - C(start)`` over intervals.
    """
    params.require_zero_temperature()
    engine = Engine(engine) if not isinstance(engine, Engine) else engine
    horizon = 2.0 * math.pi / params.omega if horizon is None else float(horizon)
    _check_horizon(horizon, params.omega)
    phases = _phase_grid(phase_grid)

    if engine is Engine.NAIVE_MARKOV:
        return NonMarkovResult(0.0, [], float(phases[0]), horizon, phases, np.zeros(phases.size))

    n_points = default_points(params, horizon) if n_points is None else int(n_points)
    t = np.linspace(0.0, horizon, n_points)

    if engine is Engine.CLOSED_FORM:
        cf = _ClosedFormCoherence(params, engine_kw.get("kappa", DEFAULT_KAPPA),
                                  engine_kw.get("plus_parity", DEFAULT_PLUS_PARITY))
        chan = cf.channels(t)
        curves = []
        for phi in phases:
            a, b = math.cos(phi), math.sin(phi)
            curves.append(cf.c_and_delta(t, a, b, chan))
    else:
        curves = _numeric_curves(params, t, phases, engine, engine_kw)

    per_phase = np.empty(phases.size)
    coarse = []
    for k, (c, delta) in enumerate(curves):
        spline = CubicSpline(t, c)

        def lin_root(lo, hi, _d=delta, _t=t):
            i = np.searchsorted(_t, lo)
            d0, d1 = _d[i], _d[i + 1]
            return lo + (hi - lo) * d0 / (d0 - d1) if d0 != d1 else lo

        ivs = _positive_intervals(t, delta, lin_root)
        coarse.append(ivs)
        per_phase[k] = math.fsum(float(spline(e) - spline(s)) for s, e in ivs)

    best = int(np.argmax(per_phase))
    phi = float(phases[best])
    intervals = coarse[best]
    n_value = float(per_phase[best])

    if engine is Engine.CLOSED_FORM:
        a, b = math.cos(phi), math.sin(phi)

        def delta_at(s):
            return float(cf.c_and_delta(s, a, b)[1])

        def c_at(s):
            return float(cf.c_and_delta(s, a, b)[0])

        def refine(lo, hi):
            dlo, dhi = delta_at(lo), delta_at(hi)
            if dlo == 0.0:
                return lo
            if dhi == 0.0 or dlo * dhi > 0:
                return hi
            return brentq(delta_at, lo, hi, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps)

        intervals = _positive_intervals(t, curves[best][1], refine)
        n_value = math.fsum(c_at(e) - c_at(s) for s, e in intervals)
        per_phase[best] = n_value

    return NonMarkovResult(n_value=max(n_value, 0.0), intervals=intervals, optimal_phase=phi,
                           horizon=horizon, phases=phases, per_phase=per_phase)


def _numeric_curves(params, t, phases, engine, engine_kw):
    """Coherence curves for every phase from three trajectories, using linearity."""
    mixed = evolve(engine, QubitState.maximally_mixed(), t, params, **engine_kw).rho01
    re = evolve(engine, QubitState.coherent(0.0), t, params, **engine_kw).rho01 - mixed
    im = evolve(engine, QubitState.coherent(0.5 * math.pi), t, params, **engine_kw).rho01 - mixed
    curves = []
    for phi in phases:
        c = 2.0 * np.abs(mixed + math.cos(phi) * re + math.sin(phi) * im)
        curves.append((c, _fd_derivative(t, c)))
    return curves


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise DomainError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    return min(8, os.cpu_count() or 1)


def nonmarkov_sweep(g_values, base: ModelParams, horizon: float | None = None, phase_grid=None,
                    engine=Engine.CLOSED_FORM, threads: int | None = None,
                    **engine_kw) -> list[NonMarkovResult]:
    """Evaluate :func:`nonmarkovianity` for each coupling; results keep the input order."""
    g_values = [float(g) for g in g_values]
    threads = thread_count() if threads is None else max(1, int(threads))

    def one(g):
        return nonmarkovianity(base.replace(g=g), horizon=horizon, phase_grid=phase_grid,
                               engine=engine, **engine_kw)

    if threads == 1 or len(g_values) < 2:
        return [one(g) for g in g_values]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, g_values))
