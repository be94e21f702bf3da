"""Exact qubit + single-mode dynamics on a truncated Fock space.

Basis ordering is qubit-major, ``|q> (x) |n>`` with ``n = 0..n_max``, so every
operator is ``kron(qubit_op, boson_op)``.

The displacement factors ``exp(+-2 g w b^dag)`` and ``exp(+-2 g w b)`` are
matrix exponentials of the truncated ladder operators. Their products have
exactly the matrix elements of the untruncated operators between kept levels,
so the polaron Hamiltonian is a plain projection, like the lab one.

The polaron Hamiltonian here uses the displacement ``2 g w`` together
with ``J~ = J exp(-2 g^2)``; it is unitarily equivalent to the lab Hamiltonian
for ``omega = 1``, the energy unit used throughout.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh, expm

from .bathcorr import CorrelatorKind
from .model import DomainError, ModelParams
from .propagate import Engine, QubitState, Trajectory, _as_state, _check_grid, _finish

DEFAULT_N_MAX = 40
DEFAULT_LEAKAGE_CUTOFF = 1e-8

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()
ID2 = np.eye(2, dtype=complex)


class TruncationError(ArithmeticError):
    """The Fock cutoff is too small for the requested evolution."""


@dataclass(frozen=True)
class FockOperator:
    matrix: np.ndarray
    n_max: int
    frame: str = ""

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def hermiticity_residual(self) -> float:
        return float(np.abs(self.matrix - self.matrix.conj().T).max())


@dataclass(frozen=True)
class ReducedTrajectory(Trajectory):
    n_max: int = DEFAULT_N_MAX
    leakage: float = 0.0


def _check_n_max(n_max: int):
    if int(n_max) != n_max or n_max < 1:
        raise DomainError(f"n_max must be an integer >= 1, got {n_max!r}")


def annihilation(n_max: int) -> np.ndarray:
    _check_n_max(n_max)
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1).astype(complex)


def bath_operator(params: ModelParams, n_max: int) -> np.ndarray:
    """``F = exp(2 g w b^dag) exp(-2 g w b) - 1`` on the kept levels."""
    b = annihilation(n_max)
    alpha = 2.0 * params.g * params.omega
    return expm(alpha * b.conj().T) @ expm(-alpha * b) - np.eye(n_max + 1)


def build_lab_hamiltonian(params: ModelParams, n_max: int) -> FockOperator:
    """``J sx + w a^dag a + g w sz (a + a^dag)``."""
    params.require_valid()
    b = annihilation(n_max)
    num = b.conj().T @ b
    ib = np.eye(n_max + 1)
    h = (params.J * np.kron(SIGMA_X, ib) + params.omega * np.kron(ID2, num)
         + params.g * params.omega * np.kron(SIGMA_Z, b + b.conj().T))
    return FockOperator(matrix=h, n_max=n_max, frame="lab")


def build_polaron_hamiltonian(params: ModelParams, n_max: int,
                              include_shift: bool = True) -> FockOperator:
    """``J~ sx + w a^dag a + J~ [s- F^dag + s+ F]``.

    With ``include_shift`` the constant polaron energy ``-g^2 w`` is added, so
    the spectrum coincides with the lab Hamiltonian's rather than being offset.
    """
    params.require_valid()
    b = annihilation(n_max)
    num = b.conj().T @ b
    ib = np.eye(n_max + 1)
    f = bath_operator(params, n_max)
    jt = params.j_tilde
    h = (jt * np.kron(SIGMA_X, ib) + params.omega * np.kron(ID2, num)
         + jt * (np.kron(SIGMA_MINUS, f.conj().T) + np.kron(SIGMA_PLUS, f)))
    if include_shift:
        h = h - params.g**2 * params.omega * np.eye(h.shape[0])
    # symmetrize away rounding from the exponential products
    h = 0.5 * (h + h.conj().T)
    return FockOperator(matrix=h, n_max=n_max, frame="polaron")


@functools.lru_cache(maxsize=32)
def _eig_cached(frame: str, J: float, omega: float, g: float, n_max: int):
    p = ModelParams(J=J, omega=omega, g=g)
    builder = build_lab_hamiltonian if frame == "lab" else build_polaron_hamiltonian
    h = builder(p, n_max)
    energies, vectors = eigh(h.matrix)
    energies.setflags(write=False)
    vectors.setflags(write=False)
    return energies, vectors


def _eig(h: FockOperator | None, params: ModelParams, n_max: int, frame: str):
    if h is None:
        return _eig_cached(frame, float(params.J), float(params.omega), float(params.g), int(n_max))
    return eigh(h.matrix)


def _pure_components(rho0: QubitState, n_max: int):
    """Eigen-decompose the initial ``rho_S (x) |0><0|`` into weighted kets."""
    lam, vecs = np.linalg.eigh(rho0.matrix)
    vac = np.zeros(n_max + 1)
    vac[0] = 1.0
    keep = lam > 0
    kets = np.stack([np.kron(vecs[:, k], vac) for k in np.flatnonzero(keep)], axis=1)
    return lam[keep], kets


def evolve_exact(rho0, grid, params: ModelParams, n_max: int = DEFAULT_N_MAX,
                 hamiltonian: FockOperator | None = None, frame: str = "polaron",
                 picture: str = "schrodinger",
                 leakage_cutoff: float = DEFAULT_LEAKAGE_CUTOFF) -> ReducedTrajectory:
    """Unitary evolution of ``rho_S(0) (x) |0_ph><0_ph|`` followed by a partial trace.

    ``picture='interaction'`` removes the ``J~ sx`` rotation from the reduced
    polaron-frame state so it can be compared with the default master-equation
    output. Raises :class:`TruncationError` when the population of the two
    highest Fock levels exceeds ``leakage_cutoff``.
    """
    params.require_zero_temperature()
    _check_n_max(n_max)
    if frame not in ("polaron", "lab"):
        raise DomainError(f"frame must be 'polaron' or 'lab', got {frame!r}")
    if picture not in ("schrodinger", "interaction"):
        raise DomainError(f"picture must be 'schrodinger' or 'interaction', got {picture!r}")
    if picture == "interaction" and frame != "polaron":
        raise DomainError("the interaction picture is defined for the polaron frame only")
    if hamiltonian is not None:
        n_max = hamiltonian.n_max
        frame = hamiltonian.frame or frame
    grid = _check_grid(grid)
    rho0 = _as_state(rho0)

    energies, vectors = _eig(hamiltonian, params, n_max, frame)
    weights, kets = _pure_components(rho0, n_max)
    coeffs = vectors.conj().T @ kets                           # (dim, k)
    phases = np.exp(-1j * np.outer(grid, energies))            # (T, dim)
    psi = np.einsum("ij,tj,jk->tik", vectors, phases, coeffs)  # (T, dim, k)
    psi = psi.reshape(grid.size, 2, n_max + 1, -1)

    rho = np.einsum("k,tank,tbnk->tab", weights, psi, psi.conj())
    top = psi[:, :, -2:, :] if n_max >= 1 else psi
    leak_t = np.einsum("k,tank->t", weights, np.abs(top) ** 2)
    worst = int(np.argmax(leak_t))
    if leak_t[worst] > leakage_cutoff:
        raise TruncationError(
            f"Fock truncation n_max={n_max} insufficient: population {leak_t[worst]:.3g} "
            f"in the top two levels at t = {grid[worst]:.6g} exceeds {leakage_cutoff:g}")

    if picture == "interaction":
        jt = params.j_tilde
        c, s = np.cos(jt * grid), np.sin(jt * grid)
        # U = exp(+i J~ sx t)
        u = (c[:, None, None] * ID2 + 1j * s[:, None, None] * SIGMA_X)
        rho = u @ rho @ np.conj(np.transpose(u, (0, 2, 1)))

    info = {"n_max": n_max, "frame": frame, "picture": picture}
    base = _finish(grid, rho, rho0, Engine.EXACT_DIAG, params, info)
    return ReducedTrajectory(grid=base.grid, rho=base.rho, engine=base.engine,
                             params=params, info=base.info, n_max=n_max,
                             leakage=float(leak_t.max()))


def evolve_total(rho0, times, hamiltonian: FockOperator) -> np.ndarray:
    """Full density matrices ``U(t) rho_S (x) |0><0| U(t)^dag`` (small systems only)."""
    rho0 = _as_state(rho0)
    n = hamiltonian.n_max + 1
    vac = np.zeros((n, n))
    vac[0, 0] = 1.0
    total0 = np.kron(rho0.matrix, vac)
    energies, vectors = eigh(hamiltonian.matrix)
    out = []
    for t in np.atleast_1d(times):
        u = (vectors * np.exp(-1j * energies * t)) @ vectors.conj().T
        out.append(u @ total0 @ u.conj().T)
    return np.array(out)


def partial_trace_boson(total: np.ndarray, n_max: int) -> np.ndarray:
    r = total.reshape(2, n_max + 1, 2, n_max + 1)
    return np.einsum("anbn->ab", r)


def lang_firsov_residual(params: ModelParams, n_max: int, k: int = 6) -> float:
    """Largest gap between the lowest ``k`` lab and polaron eigenvalues."""
    _check_n_max(n_max)
    dim = 2 * (n_max + 1)
    if k < 1 or k > dim // 2:
        raise DomainError(f"k must lie in [1, {dim // 2}], got {k}")
    lab = _eig_cached("lab", float(params.J), float(params.omega), float(params.g), int(n_max))[0]
    pol = _eig_cached("polaron", float(params.J), float(params.omega), float(params.g), int(n_max))[0]
    return float(np.abs(lab[:k] - pol[:k]).max())


def fock_correlator(kind, dt, params: ModelParams, n_max: int = DEFAULT_N_MAX) -> complex:
    """Bath average of ``F^dag(dt) F(0)`` (normal) or ``F^dag(dt) F^dag(0)``
    (anomalous) built from truncated matrices.

    Uses the thermal state ``exp(-beta w n)`` on the kept levels; for
    ``beta = inf`` this is the vacuum.
    """
    kind = CorrelatorKind(kind) if isinstance(kind, str) else kind
    params.require_valid()
    f = bath_operator(params, n_max)
    fd = f.conj().T
    levels = np.arange(n_max + 1)
    rot = np.exp(1j * params.omega * levels * dt)
    fd_t = rot[:, None] * fd * rot.conj()[None, :]   # exp(i H_B t) F^dag exp(-i H_B t)
    right = f if kind is CorrelatorKind.NORMAL else fd
    if math.isinf(params.beta):
        weights = np.zeros(n_max + 1)
        weights[0] = 1.0
    else:
        weights = np.exp(-params.beta * params.omega * levels)
        weights /= weights.sum()
    return complex(np.sum(weights * np.diag(fd_t @ right)))
