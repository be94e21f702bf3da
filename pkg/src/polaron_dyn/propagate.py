"""Reduced qubit dynamics in the polaron frame.

Three engines live here:

* ``evolve_closed_form`` - the exponent map built from the Gamma series,
* ``evolve_tcl_ode`` - adaptive Runge-Kutta integration of the second-order
  time-convolutionless master equation,
* ``evolve_naive_markov`` - the constant map obtained when the memory integral
  is extended to infinity.

Exact diagonalization (``Engine.EXACT_DIAG``) is provided by :mod:`.oracle`
and reachable through :func:`evolve`.

States use the basis ``{|0>, |1>}`` with ``sz|0> = |0>`` and ``s+ = |0><1|``.
Unless ``include_hs`` is set, states are in the interaction picture with
respect to ``H_S = J~ sx``.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import decoherence as deco
from .model import DomainError, ModelParams

TRACE_TOL = 1e-12
HERMITIAN_TOL = 1e-12
POSITIVITY_FLAG = -1e-6

DEFAULT_KAPPA = 1
DEFAULT_PLUS_PARITY = "odd"
DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-10


class Engine(enum.Enum):
    CLOSED_FORM = "closed"
    TCL_ODE = "ode"
    NAIVE_MARKOV = "naive"
    EXACT_DIAG = "exact"


class IntegrationError(ArithmeticError):
    """The adaptive integrator could not advance past ``time``."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (at t = {time:.17g})")
        self.time = time


@dataclass(frozen=True)
class QubitState:
    rho00: complex
    rho01: complex
    rho10: complex
    rho11: complex

    def __post_init__(self):
        if abs(self.rho10 - np.conj(self.rho01)) > HERMITIAN_TOL:
            raise DomainError("state is not Hermitian: rho10 != conj(rho01)")
        if abs(np.imag(self.rho00)) > HERMITIAN_TOL or abs(np.imag(self.rho11)) > HERMITIAN_TOL:
            raise DomainError("populations must be real")
        if abs(self.rho00 + self.rho11 - 1.0) > TRACE_TOL:
            raise DomainError("state must have unit trace")

    @classmethod
    def from_matrix(cls, m) -> "QubitState":
        m = np.asarray(m, dtype=complex)
        if m.shape != (2, 2):
            raise DomainError(f"expected a 2x2 matrix, got shape {m.shape}")
        return cls(complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1]))

    @classmethod
    def ground(cls) -> "QubitState":
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def excited(cls) -> "QubitState":
        return cls(0.0, 0.0, 0.0, 1.0)

    @classmethod
    def maximally_mixed(cls) -> "QubitState":
        return cls(0.5, 0.0, 0.0, 0.5)

    @classmethod
    def plus(cls) -> "QubitState":
        return cls(0.5, 0.5, 0.5, 0.5)

    @classmethod
    def coherent(cls, phi: float, magnitude: float = 0.5, p0: float = 0.5) -> "QubitState":
        """Equal-weight state with ``rho01 = magnitude * exp(i phi)``."""
        r = magnitude * complex(math.cos(phi), math.sin(phi))
        return cls(p0, r, r.conjugate(), 1.0 - p0)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.rho00, self.rho01], [self.rho10, self.rho11]], dtype=complex)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])


@dataclass(frozen=True)
class Trajectory:
    grid: np.ndarray
    rho: np.ndarray  # shape (len(grid), 2, 2)
    engine: Engine
    params: ModelParams
    info: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.grid)

    @property
    def states(self) -> list[QubitState]:
        return [QubitState.from_matrix(m) for m in self.rho]

    @property
    def rho00(self) -> np.ndarray:
        return self.rho[:, 0, 0].real

    @property
    def rho11(self) -> np.ndarray:
        return self.rho[:, 1, 1].real

    @property
    def rho01(self) -> np.ndarray:
        return self.rho[:, 0, 1]

    def min_eigenvalues(self) -> np.ndarray:
        return min_eigenvalues(self.rho)


def min_eigenvalues(rho: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of each Hermitian 2x2 matrix in a stack."""
    tr = (rho[:, 0, 0].real + rho[:, 1, 1].real)
    half_diff = 0.5 * (rho[:, 0, 0].real - rho[:, 1, 1].real)
    return 0.5 * tr - np.hypot(half_diff, np.abs(rho[:, 0, 1]))


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("time grid must be a nonempty 1-d sequence")
    if grid[0] != 0.0:
        raise DomainError("time grid must start at 0")
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise DomainError("time grid must be strictly increasing")
    return grid


def _as_state(rho0) -> QubitState:
    return rho0 if isinstance(rho0, QubitState) else QubitState.from_matrix(rho0)


def _finish(grid, rho, rho0: QubitState, engine, params, info) -> Trajectory:
    rho[0] = rho0.matrix
    lam = min_eigenvalues(rho)
    info = dict(info)
    info["min_eigenvalue"] = float(lam.min())
    if lam.min() < POSITIVITY_FLAG:
        info["positivity_violated"] = True
        warnings.warn(f"{engine.value} trajectory leaves the positive cone "
                      f"(min eigenvalue {lam.min():.3g})", RuntimeWarning, stacklevel=3)
    return Trajectory(grid=grid, rho=rho, engine=engine, params=params, info=info)


def closed_form_factors(grid, params: ModelParams, kappa: float = DEFAULT_KAPPA,
                        plus_parity: str = DEFAULT_PLUS_PARITY):
    """Decay factors ``(E_pop, E_plus, E_minus)`` of the closed-form map.

    ``rho00 - rho11`` decays by ``E_pop = exp(-kappa Gamma)``; the symmetric
    coherence ``rho01 + rho10`` by ``exp(-kappa Gamma_p)`` and the
    antisymmetric one by ``exp(-kappa Gamma_q)`` where ``p = plus_parity``
    and ``q`` is the other parity.
    """
    plus = deco.Parity(plus_parity)
    if plus is deco.Parity.ALL:
        raise DomainError("plus_parity must be 'odd' or 'even'")
    minus = deco.Parity.EVEN if plus is deco.Parity.ODD else deco.Parity.ODD
    g_plus = deco.gamma_parity(plus, grid, params)
    g_minus = deco.gamma_parity(minus, grid, params)
    e_pop = np.exp(-kappa * deco.gamma(grid, params))
    return e_pop, np.exp(-kappa * g_plus), np.exp(-kappa * g_minus)


def evolve_closed_form(rho0, grid, params: ModelParams, kappa: float = DEFAULT_KAPPA,
                       plus_parity: str = DEFAULT_PLUS_PARITY) -> Trajectory:
    """Closed-form reduced dynamics on ``grid``.

    Populations relax towards 1/2 as ``exp(-kappa Gamma(t))``; the real and
    imaginary parts of ``rho01`` decay with the exponents of the two parity
    channels. The trace is preserved by construction.
    """
    params.require_zero_temperature()
    if kappa not in (1, 2):
        raise DomainError(f"kappa must be 1 or 2, got {kappa!r}")
    grid = _check_grid(grid)
    rho0 = _as_state(rho0)
    e_pop, e_plus, e_minus = closed_form_factors(grid, params, kappa, plus_parity)

    tr = rho0.rho00.real + rho0.rho11.real
    diff0 = rho0.rho00.real - rho0.rho11.real
    diff = diff0 * e_pop
    re01 = rho0.rho01.real * e_plus
    im01 = rho0.rho01.imag * e_minus

    rho = np.empty((grid.size, 2, 2), dtype=complex)
    rho[:, 0, 0] = 0.5 * (tr + diff)
    rho[:, 1, 1] = 0.5 * (tr - diff)
    rho[:, 0, 1] = re01 + 1j * im01
    rho[:, 1, 0] = re01 - 1j * im01
    info = {"kappa": kappa, "plus_parity": str(plus_parity)}
    return _finish(grid, rho, rho0, Engine.CLOSED_FORM, params, info)


def _kernel_pair(params: ModelParams):
    """Scalar callables for ``beta_+(t)`` and ``beta_-(t)`` sharing one sine evaluation."""
    s = deco._series(params)
    w = params.omega
    if s.n.size == 0:
        return lambda t: (0.0, 0.0)
    freq = s.n * w
    a = 2.0 * s.weight / freq
    a_alt = a * (-1.0) ** s.n

    def kernels(t):
        sn = np.sin(freq * t)
        return math.fsum(a * sn), math.fsum(a_alt * sn)

    return kernels


def tcl_generator(t: float, params: ModelParams, include_hs: bool = False,
                  kernels=None) -> np.ndarray:
    """Real 4x4 generator acting on ``(rho00, rho11, Re rho01, Im rho01)``.

    It is the component form of::

        d rho/dt = beta_-(t) [s+ rho s+ + s- rho s-]
                 + beta_+(t) [s+ rho s- + s- rho s+ - rho]  (- i [J~ sx, rho])

    obtained from the second-order double commutator with the vacuum
    correlators, where ``beta_+`` collects the normal and ``beta_-`` the
    anomalous correlator.
    """
    if kernels is None:
        kernels = _kernel_pair(params)
    bp, bm = kernels(t)
    a = np.array([
        [-bp, bp, 0.0, 0.0],
        [bp, -bp, 0.0, 0.0],
        [0.0, 0.0, -bp + bm, 0.0],
        [0.0, 0.0, 0.0, -bp - bm],
    ])
    if include_hs:
        jt = params.j_tilde
        a[0, 3] -= 2.0 * jt
        a[1, 3] += 2.0 * jt
        a[3, 0] += jt
        a[3, 1] -= jt
    return a


def evolve_tcl_ode(rho0, grid, params: ModelParams, step_control=(DEFAULT_RTOL, DEFAULT_ATOL),
                   include_hs: bool = False, method: str = "DOP853") -> Trajectory:
    """Integrate the time-local master equation with an embedded Runge-Kutta pair.

    ``step_control`` is ``(rtol, atol)``. The 4x4 propagator of the linear
    system is integrated from the identity and then applied to ``rho0``, so
    the step sequence does not depend on the initial state and the map is
    linear in ``rho0`` to rounding. Output lands on the ``grid`` times.
    """
    params.require_zero_temperature()
    grid = _check_grid(grid)
    rho0 = _as_state(rho0)
    rtol, atol = step_control
    y0 = np.array([rho0.rho00.real, rho0.rho11.real, rho0.rho01.real, rho0.rho01.imag])

    if grid.size == 1:
        ys = y0[:, None]
    else:
        kernels = _kernel_pair(params)

        def rhs(t, y):
            gen = tcl_generator(t, params, include_hs, kernels)
            return (gen @ y.reshape(4, 4)).ravel()

        sol = solve_ivp(rhs, (grid[0], grid[-1]), np.eye(4).ravel(), method=method, t_eval=grid,
                        rtol=rtol, atol=atol)
        if sol.status != 0:
            t_fail = float(sol.t[-1]) if sol.t.size else float(grid[0])
            raise IntegrationError(f"master-equation integration failed: {sol.message}", t_fail)
        phi = sol.y.T.reshape(-1, 4, 4)
        ys = (phi @ y0).T

    rho = np.empty((grid.size, 2, 2), dtype=complex)
    rho[:, 0, 0] = ys[0]
    rho[:, 1, 1] = ys[1]
    rho[:, 0, 1] = ys[2] + 1j * ys[3]
    rho[:, 1, 0] = ys[2] - 1j * ys[3]
    info = {"rtol": rtol, "atol": atol, "include_hs": include_hs, "method": method}
    return _finish(grid, rho, rho0, Engine.TCL_ODE, params, info)


def evolve_naive_markov(rho0, grid, params: ModelParams | None = None) -> Trajectory:
    """Constant trajectory: the infinite-memory limit produces no decoherence."""
    grid = _check_grid(grid)
    rho0 = _as_state(rho0)
    rho = np.broadcast_to(rho0.matrix, (grid.size, 2, 2)).copy()
    return _finish(grid, rho, rho0, Engine.NAIVE_MARKOV, params or ModelParams(), {})


def evolve(engine, rho0, grid, params: ModelParams, **kw) -> Trajectory:
    """Dispatch to one of the engines by name or :class:`Engine` member."""
    engine = Engine(engine) if not isinstance(engine, Engine) else engine
    if engine is Engine.CLOSED_FORM:
        return evolve_closed_form(rho0, grid, params, **kw)
    if engine is Engine.TCL_ODE:
        return evolve_tcl_ode(rho0, grid, params, **kw)
    if engine is Engine.NAIVE_MARKOV:
        return evolve_naive_markov(rho0, grid, params)
    from .oracle import evolve_exact
    return evolve_exact(rho0, grid, params, **kw)


def population_difference(traj: Trajectory) -> np.ndarray:
    """``P_D(t) = (rho00 - rho11)(t) / (rho00 - rho11)(0)``."""
    diff = traj.rho00 - traj.rho11
    if abs(diff[0]) < 1e-14:
        raise DomainError("P_D undefined: rho00(0) - rho11(0) = 0 cannot normalize")
    out = diff / diff[0]
    out[0] = 1.0
    return out
