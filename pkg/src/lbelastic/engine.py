"""Collide-stream core of the elasticity scheme.

All field arrays are ``(component, nx, ny)``. A single node is just the
degenerate case ``(component,)``; the same functions serve both.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numba
import numpy as np

from .lattice import (CX, CY, M10, M01, M11, M12, M21, MD, MS, Q, Grid,
                      MomentVector, PopulationField, moments_to_populations,
                      populations_to_moments)
from .material import RelaxationSet

log = logging.getLogger(__name__)

RESIDUAL_FLOOR = 1e-30


class InstabilityError(RuntimeError):
    """Non-finite populations appeared during time stepping."""

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"non-finite populations detected at step {step}")


class NonUniformInitializationWarning(UserWarning):
    """Equilibrium initialisation of a non-constant displacement is only first-order consistent."""


@dataclass
class ForcingField:
    """Per-node lattice forcing ``(gx, gy)``, constant in pseudo-time."""

    gx: np.ndarray
    gy: np.ndarray

    @classmethod
    def zeros(cls, grid: Grid) -> "ForcingField":
        return cls(np.zeros(grid.shape), np.zeros(grid.shape))

    def as_array(self) -> np.ndarray:
        return np.stack([self.gx, self.gy])

    def is_zero(self) -> bool:
        return not (np.any(self.gx) or np.any(self.gy))


def forcing_from_body_load(b_x, b_y, eps: float, L: float = 1.0, U: float = 1.0) -> ForcingField:
    """Uncorrected forcing ``eps**2 * (L/U) * b``."""
    s = eps * eps * L / U
    return ForcingField(s * np.asarray(b_x, dtype=float), s * np.asarray(b_y, dtype=float))


def equilibrium_moments(bm10, bm01, theta: float) -> MomentVector:
    """Equilibrium moments built from the bared first-order moments."""
    bm10 = np.asarray(bm10, dtype=float)
    bm01 = np.asarray(bm01, dtype=float)
    z = np.zeros(np.broadcast(bm10, bm01).shape)
    return MomentVector(bm10 + z, bm01 + z, z, z, z, theta * bm10 + z, theta * bm01 + z, z)


def collide(f, g, rs: RelaxationSet):
    """Collision in moment space with half-step forcing.

    ``f`` has shape ``(8, ...)`` and ``g`` shape ``(2, ...)``. Returns the
    post-collision populations and the bared moments as an ``(8, ...)`` array.
    """
    m = populations_to_moments(f)
    g = np.asarray(g, dtype=float)
    half_gx, half_gy = 0.5 * g[0], 0.5 * g[1]

    bared = np.empty_like(m)
    bared[M10] = m[M10] + half_gx
    bared[M01] = m[M01] + half_gy

    meq = np.zeros_like(m)
    meq[M12] = rs.theta * bared[M10]
    meq[M21] = rs.theta * bared[M01]

    w = rs.rates()[2:].reshape((-1,) + (1,) * (m.ndim - 1))
    m_star = np.empty_like(m)
    m_star[2:] = w * meq[2:] + (1.0 - w) * m[2:]
    bared[2:] = 0.5 * w * meq[2:] + (1.0 - 0.5 * w) * m[2:]
    m_star[M10] = bared[M10] + half_gx
    m_star[M01] = bared[M01] + half_gy

    return moments_to_populations(m_star), bared


def collide_node(f, g, rs: RelaxationSet):
    """Single-node collision returning ``(f_star, bared MomentVector)``."""
    f_star, bared = collide(np.asarray(f, dtype=float), np.asarray(g, dtype=float), rs)
    return f_star, MomentVector.from_array(bared)


def stream(f_star: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """Periodic push streaming: population ``q`` moves by ``(cx[q], cy[q])``."""
    if out is None:
        out = np.empty_like(f_star)
    for q in range(Q):
        out[q] = np.roll(f_star[q], (CX[q], CY[q]), axis=(0, 1))
    return out


@numba.njit(cache=True)
def _collide_stream_kernel(f, f_next, g, w, theta, bared):
    # Moment transform and its inverse written out for the D2Q8 ordering of
    # lattice.VELOCITIES; checked against the numpy path in the tests.
    nx = f.shape[1]
    ny = f.shape[2]
    w11, ws, wd, w12, w21, w22 = w[2], w[3], w[4], w[5], w[6], w[7]
    for i in range(nx):
        ip = i + 1 if i + 1 < nx else 0
        im = i - 1 if i > 0 else nx - 1
        for j in range(ny):
            jp = j + 1 if j + 1 < ny else 0
            jm = j - 1 if j > 0 else ny - 1
            f1 = f[0, i, j]
            f2 = f[1, i, j]
            f3 = f[2, i, j]
            f4 = f[3, i, j]
            f5 = f[4, i, j]
            f6 = f[5, i, j]
            f7 = f[6, i, j]
            f8 = f[7, i, j]
            m10 = f1 - f3 + f5 - f6 - f7 + f8
            m01 = f2 - f4 + f5 + f6 - f7 - f8
            m11 = f5 - f6 + f7 - f8
            m_s = f1 + f2 + f3 + f4 + 2.0 * (f5 + f6 + f7 + f8)
            m_d = f1 - f2 + f3 - f4
            m12 = f5 - f6 - f7 + f8
            m21 = f5 + f6 - f7 - f8
            m22 = f5 + f6 + f7 + f8

            hx = 0.5 * g[0, i, j]
            hy = 0.5 * g[1, i, j]
            b10 = m10 + hx
            b01 = m01 + hy
            e12 = theta * b10
            e21 = theta * b01

            bared[0, i, j] = b10
            bared[1, i, j] = b01
            bared[2, i, j] = (1.0 - 0.5 * w11) * m11
            bared[3, i, j] = (1.0 - 0.5 * ws) * m_s
            bared[4, i, j] = (1.0 - 0.5 * wd) * m_d
            bared[5, i, j] = 0.5 * w12 * e12 + (1.0 - 0.5 * w12) * m12
            bared[6, i, j] = 0.5 * w21 * e21 + (1.0 - 0.5 * w21) * m21
            bared[7, i, j] = (1.0 - 0.5 * w22) * m22

            s10 = b10 + hx
            s01 = b01 + hy
            s11 = (1.0 - w11) * m11
            s_s = (1.0 - ws) * m_s
            s_d = (1.0 - wd) * m_d
            s12 = w12 * e12 + (1.0 - w12) * m12
            s21 = w21 * e21 + (1.0 - w21) * m21
            s22 = (1.0 - w22) * m22

            q = 0.25 * (s_s + s_d)
            r = 0.25 * (s_s - s_d)
            f_next[0, ip, j] = 0.5 * (s10 - s12 - s22) + q
            f_next[1, i, jp] = 0.5 * (s01 - s21 - s22) + r
            f_next[2, im, j] = 0.5 * (-s10 + s12 - s22) + q
            f_next[3, i, jm] = 0.5 * (-s01 + s21 - s22) + r
            f_next[4, ip, jp] = 0.25 * (s11 + s12 + s21 + s22)
            f_next[5, im, jp] = 0.25 * (-s11 - s12 + s21 + s22)
            f_next[6, im, jm] = 0.25 * (s11 - s12 - s21 + s22)
            f_next[7, ip, jm] = 0.25 * (-s11 + s12 - s21 + s22)


def initialize_equilibrium(grid: Grid, u0, theta: float = 1.0 / 3.0) -> PopulationField:
    """Populations at equilibrium for the initial displacement ``u0``.

    ``u0`` may be a pair of constants, an array ``(2, nx, ny)`` or a callable
    ``u0(x, y) -> (ux, uy)``.
    """
    if callable(u0):
        x, y = grid.coordinates()
        ux, uy = u0(x, y)
    else:
        ux, uy = u0[0], u0[1]
    ux = np.broadcast_to(np.asarray(ux, dtype=float), grid.shape)
    uy = np.broadcast_to(np.asarray(uy, dtype=float), grid.shape)
    if np.ptp(ux) > 0 or np.ptp(uy) > 0:
        warnings.warn(
            "initial displacement is not constant; equilibrium initialisation is "
            "then only first-order consistent",
            NonUniformInitializationWarning,
            stacklevel=2,
        )
    meq = equilibrium_moments(ux, uy, theta).as_array()
    return PopulationField(grid, moments_to_populations(meq))


@dataclass
class SolutionFields:
    """Dimensionless displacement and stress at the nodes."""

    ux: np.ndarray
    uy: np.ndarray
    sxx: np.ndarray
    syy: np.ndarray
    sxy: np.ndarray

    @property
    def u(self) -> np.ndarray:
        return np.stack([self.ux, self.uy])

    @property
    def sigma(self) -> np.ndarray:
        return np.stack([self.sxx, self.syy, self.sxy])

    def physical(self, U: float = 1.0, L: float = 1.0, T: float = 1.0,
                 kappa: float = 1.0) -> "SolutionFields":
        """Physical-unit view: ``u = U u~`` and ``sigma = (L/T) U kappa sigma~``."""
        s = L / T * U * kappa
        return SolutionFields(U * self.ux, U * self.uy, s * self.sxx, s * self.syy, s * self.sxy)


def extract_fields(bared, eps: float) -> SolutionFields:
    """Displacement and Cauchy stress from the bared moments."""
    b = bared.as_array() if isinstance(bared, MomentVector) else np.asarray(bared)
    inv = 1.0 / eps
    return SolutionFields(
        ux=b[M10].copy(),
        uy=b[M01].copy(),
        sxx=-0.5 * inv * (b[MS] + b[MD]),
        syy=-0.5 * inv * (b[MS] - b[MD]),
        sxy=-inv * b[M11],
    )


def _l2(grid: Grid, v: np.ndarray) -> float:
    return float(np.sqrt(grid.dx**2 * np.sum(v * v)))


@dataclass
class RunResult:
    fields: SolutionFields
    steps: int
    converged: bool
    residual_history: list[tuple[int, float]] = field(default_factory=list)
    monitor_history: list[tuple] = field(default_factory=list)
    population: PopulationField | None = field(default=None, repr=False)


class Simulation:
    """Time stepper holding the population buffers, forcing and relaxation set."""

    def __init__(self, grid: Grid, rs: RelaxationSet, forcing: ForcingField | None = None,
                 u0=(0.0, 0.0), population: PopulationField | None = None,
                 kernel: str = "fused"):
        if kernel not in ("fused", "numpy"):
            raise ValueError(f"unknown kernel {kernel!r}")
        self.kernel = kernel
        self.grid = grid
        self.rs = rs
        self.forcing = forcing if forcing is not None else ForcingField.zeros(grid)
        self._g = self.forcing.as_array()
        if population is None:
            population = initialize_equilibrium(grid, u0, rs.theta)
        self.pop = population
        self.step_count = 0
        self.bared = None
        self._w = rs.rates()
        self._bared_buf = np.empty((Q,) + grid.shape)

    def step(self):
        """One collision and streaming sweep; keeps the bared moments of this collision."""
        if self.kernel == "fused":
            _collide_stream_kernel(self.pop.f, self.pop.f_next, self._g, self._w,
                                   self.rs.theta, self._bared_buf)
            self.bared = self._bared_buf
        else:
            f_star, self.bared = collide(self.pop.f, self._g, self.rs)
            stream(f_star, out=self.pop.f_next)
        self.pop.swap()
        self.step_count += 1

    def fields(self) -> SolutionFields:
        if self.bared is None:
            # before the first collision: bared moments of a collision we do not apply
            _, bared = collide(self.pop.f, self._g, self.rs)
            return extract_fields(bared, self.grid.dx)
        return extract_fields(self.bared, self.grid.dx)


def run_to_steady_state(sim: Simulation, tol: float = 1e-9, max_steps: int = 10**7,
                        t_final: float | None = None, check_interval: int = 100,
                        residual_interval: int = 1, record_interval: int = 1,
                        monitor: Callable[[int, SolutionFields], tuple] | None = None,
                        monitor_interval: int = 100) -> RunResult:
    """Iterate until the pseudo-time residual drops below ``tol``.

    If ``t_final`` is given the run instead takes exactly ``round(t_final / eps**2)``
    steps (fixed-horizon mode). The residual is evaluated every ``residual_interval``
    steps and stored every ``record_interval`` steps. The residual is
    ``||u^{n+1} - u^n|| / (dt * max(||u^n||, floor))`` with ``dt = eps**2``.
    Raises :class:`InstabilityError` when populations become non-finite.
    """
    grid = sim.grid
    dt = grid.dx**2
    fixed = t_final is not None
    n_steps = int(round(t_final / dt)) if fixed else max_steps
    residuals: list[tuple[int, float]] = []
    monitored: list[tuple] = []
    converged = False
    # displacement before the first collision, without the half forcing
    u_prev = populations_to_moments(sim.pop.f)[:2]

    for n in range(1, n_steps + 1):
        sim.step()
        u = sim.bared[:2]
        if n % residual_interval == 0 or n == n_steps:
            with np.errstate(over="ignore", invalid="ignore"):
                res = _l2(grid, u - u_prev) / (dt * max(_l2(grid, u_prev), RESIDUAL_FLOOR))
            if not np.isfinite(res):
                raise InstabilityError(n)
            converged = not fixed and res < tol
            if n % record_interval == 0 or n == n_steps or converged:
                residuals.append((n, res))
        if monitor is not None and (n % monitor_interval == 0 or n == n_steps or converged):
            monitored.append((n,) + tuple(monitor(n, sim.fields())))
        if n % check_interval == 0 and not sim.pop.is_finite():
            raise InstabilityError(n)
        if converged:
            break
        if (n + 1) % residual_interval == 0 or n + 1 == n_steps:
            u_prev = u.copy()

    if not sim.pop.is_finite():
        raise InstabilityError(sim.step_count)
    if fixed:
        converged = True
    elif not converged:
        log.warning("no convergence within %d steps (last residual %s)", n_steps,
                    residuals[-1][1] if residuals else "n/a")
    return RunResult(sim.fields(), sim.step_count, converged, residuals, monitored, sim.pop)
