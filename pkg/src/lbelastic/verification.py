"""Manufactured solutions, grid norms and convergence studies."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import hermite
from scipy.special import erf

from .analysis import error_constants_for, forcing_correction, fourth_order_relaxation_times
from .engine import (ForcingField, InstabilityError, Simulation, SolutionFields,
                     forcing_from_body_load, run_to_steady_state)
from .lattice import Grid
from .material import MaterialParams, compute_relaxation_set

log = logging.getLogger(__name__)

VARIANTS = ("standard", "corrected", "fourth-order")


# 1D building blocks: f(n, x) returns the n-th derivative.

def _const(c=1.0):
    def f(n, x):
        x = np.asarray(x, dtype=float)
        return np.full_like(x, c if n == 0 else 0.0)
    return f


def _cos(k):
    def f(n, x):
        return k**n * np.cos(k * np.asarray(x, dtype=float) + n * np.pi / 2)
    return f


def _sin(k):
    def f(n, x):
        return k**n * np.sin(k * np.asarray(x, dtype=float) + n * np.pi / 2)
    return f


def _gauss(sigma, centre=0.5):
    # d^n/dx^n exp(-s^2) = (-1)^n H_n(s) exp(-s^2), s = (x - c) / sigma
    def f(n, x):
        s = (np.asarray(x, dtype=float) - centre) / sigma
        coef = np.zeros(n + 1)
        coef[n] = 1.0
        return (-1.0 / sigma) ** n * hermite.hermval(s, coef) * np.exp(-s * s)
    return f


Term = tuple  # (amplitude, fx, fy)


@dataclass
class ManufacturedCase:
    """Exact displacement as a sum of separable terms ``A fx(x) fy(y)`` per component.

    All derivatives are closed forms. ``periodic`` is False for solutions that
    are only approximately periodic on the unit cell.
    """

    name: str
    terms_x: list = field(default_factory=list)
    terms_y: list = field(default_factory=list)
    periodic: bool = True

    def derivative(self, comp: int, a: int, b: int, x, y) -> np.ndarray:
        """``d^a/dx^a d^b/dy^b`` of displacement component ``comp``."""
        terms = self.terms_x if comp == 0 else self.terms_y
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for A, fx, fy in terms:
            out = out + A * fx(a, x) * fy(b, y)
        return out

    def displacement(self, x, y) -> np.ndarray:
        return np.stack([self.derivative(0, 0, 0, x, y), self.derivative(1, 0, 0, x, y)])

    def stress(self, x, y, mat: MaterialParams) -> np.ndarray:
        """Exact ``(sxx, syy, sxy)`` of the isotropic 2D law."""
        exx = self.derivative(0, 1, 0, x, y)
        eyy = self.derivative(1, 0, 1, x, y)
        exy = 0.5 * (self.derivative(0, 0, 1, x, y) + self.derivative(1, 1, 0, x, y))
        lam, mu = mat.lambda_tilde, mat.mu_tilde
        tr = exx + eyy
        return np.stack([lam * tr + 2 * mu * exx, lam * tr + 2 * mu * eyy, 2 * mu * exy])

    def _load_derivative(self, mu, K, a, b, x, y):
        d = lambda c, p, q: self.derivative(c, p + a, q + b, x, y)  # noqa: E731
        bx = -mu * (d(0, 2, 0) + d(0, 0, 2)) - K * (d(0, 2, 0) + d(1, 1, 1))
        by = -mu * (d(1, 2, 0) + d(1, 0, 2)) - K * (d(0, 1, 1) + d(1, 0, 2))
        return bx, by

    def body_load(self, x, y, mu, K) -> np.ndarray:
        """``b = -mu lap(u) - K grad(div u)``."""
        return np.stack(self._load_derivative(mu, K, 0, 0, x, y))

    def body_load_second_derivatives(self, x, y, mu, K) -> dict:
        bxx = self._load_derivative(mu, K, 2, 0, x, y)
        bxy = self._load_derivative(mu, K, 1, 1, x, y)
        byy = self._load_derivative(mu, K, 0, 2, x, y)
        return {"gx_xx": bxx[0], "gx_xy": bxy[0], "gx_yy": byy[0],
                "gy_xx": bxx[1], "gy_xy": bxy[1], "gy_yy": byy[1]}

    def navier_cauchy_residual(self, x, y, mu, K) -> np.ndarray:
        """``mu lap(u) + K grad(div u) + b``, zero for a consistent load."""
        b = self.body_load(x, y, mu, K)
        d = lambda c, p, q: self.derivative(c, p, q, x, y)  # noqa: E731
        rx = mu * (d(0, 2, 0) + d(0, 0, 2)) + K * (d(0, 2, 0) + d(1, 1, 1)) + b[0]
        ry = mu * (d(1, 2, 0) + d(1, 0, 2)) + K * (d(0, 1, 1) + d(1, 0, 2)) + b[1]
        return np.stack([rx, ry])

    def boundary_mismatch(self, n: int = 256) -> float:
        """Largest jump of the displacement and its gradient across the unit-cell edges."""
        s = np.linspace(0.0, 1.0, n)
        worst = 0.0
        for comp in (0, 1):
            for a, b in ((0, 0), (1, 0), (0, 1)):
                jx = self.derivative(comp, a, b, 1.0, s) - self.derivative(comp, a, b, 0.0, s)
                jy = self.derivative(comp, a, b, s, 1.0) - self.derivative(comp, a, b, s, 0.0)
                worst = max(worst, float(np.max(np.abs(jx))), float(np.max(np.abs(jy))))
        return worst


TRIG_AMPLITUDES = (9e-4, 7e-4)
GAUSS_AMPLITUDE = 1e-3
GAUSS_SIGMAS = tuple(n ** -0.5 for n in (120, 123, 118, 125))


def trig_case() -> ManufacturedCase:
    a, b = TRIG_AMPLITUDES
    k = 2 * np.pi
    return ManufacturedCase("trig", [(a, _cos(k), _sin(k))], [(b, _sin(k), _cos(k))])


def separable_case() -> ManufacturedCase:
    a, b = TRIG_AMPLITUDES
    k = 2 * np.pi
    one = _const()
    return ManufacturedCase(
        "separable",
        [(a, _cos(k), one), (a, one, _sin(k))],
        [(b, _sin(k), one), (b, one, _cos(k))],
    )


def gaussian_offset(amplitude, s1, s2) -> float:
    """Unit-cell mean of ``amplitude * exp(-(x-1/2)^2/s1^2) exp(-(y-1/2)^2/s2^2)``."""
    return amplitude * math.pi * s1 * s2 * float(erf(1 / (2 * s1))) * float(erf(1 / (2 * s2)))


def gaussian_case() -> ManufacturedCase:
    s1, s2, s3, s4 = GAUSS_SIGMAS
    A = GAUSS_AMPLITUDE
    one = _const()
    return ManufacturedCase(
        "gaussian",
        [(A, _gauss(s1), _gauss(s2)), (-gaussian_offset(A, s1, s2), one, one)],
        [(A, _gauss(s3), _gauss(s4)), (-gaussian_offset(A, s3, s4), one, one)],
        periodic=False,
    )


def builtin_cases() -> list[ManufacturedCase]:
    return [trig_case(), separable_case(), gaussian_case()]


def get_case(name: str) -> ManufacturedCase:
    for c in builtin_cases():
        if c.name == name:
            return c
    raise KeyError(f"unknown case {name!r}; choose from trig, separable, gaussian")


def body_load(case: ManufacturedCase, mu, K) -> Callable:
    """Closure ``(x, y) -> b`` of the steady body load."""
    return lambda x, y: case.body_load(x, y, mu, K)


def grid_norms(error, dx) -> tuple[float, float]:
    """``(L2, Linf)`` of a vector field ``(ncomp, ...)``.

    ``L2 = (dx^2 sum |e|_2^2)^(1/2)`` and ``Linf = max |e|_inf``.
    """
    e = np.asarray(error, dtype=float)
    if e.size == 0:
        return 0.0, 0.0
    return float(np.sqrt(dx * dx * np.sum(e * e))), float(np.max(np.abs(e)))


def fit_slope(eps, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(eps)`` over all points."""
    slope, _ = np.polyfit(np.log(np.asarray(eps, float)), np.log(np.asarray(errors, float)), 1)
    return float(slope)


def default_horizon(mat: MaterialParams, decay: float = 1e-10, wavenumber=2 * np.pi) -> float:
    """Pseudo-time after which the slowest (shear) mode has decayed by ``decay``."""
    return float(np.log(1.0 / decay) / (mat.mu_tilde * wavenumber**2))


@dataclass
class ErrorRecord:
    eps: float
    l2_u: float
    linf_u: float
    l2_sigma: float
    linf_sigma: float
    steps: int


@dataclass
class ConvergenceResult:
    case: str
    variant: str
    records: list[ErrorRecord]

    COLUMNS = ("l2_u", "linf_u", "l2_sigma", "linf_sigma")

    @property
    def eps(self) -> np.ndarray:
        return np.array([r.eps for r in self.records])

    def column(self, name) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def slopes(self) -> dict:
        return {c: fit_slope(self.eps, self.column(c)) for c in self.COLUMNS}


def relative_errors(fields: SolutionFields, case: ManufacturedCase, grid: Grid,
                    mat: MaterialParams, U: float = 1.0):
    """Relative errors ``(l2_u, linf_u, l2_sigma, linf_sigma)`` normalised by the exact L2 norms."""
    x, y = grid.coordinates()
    u_ex = case.displacement(x, y) / U
    s_ex = case.stress(x, y, mat) / U
    l2u, liu = grid_norms(fields.u - u_ex, grid.dx)
    l2s, lis = grid_norms(fields.sigma - s_ex, grid.dx)
    nu_ = grid_norms(u_ex, grid.dx)[0]
    ns_ = grid_norms(s_ex, grid.dx)[0]
    return l2u / nu_, liu / nu_, l2s / ns_, lis / ns_


def setup_run(case: ManufacturedCase, mat: MaterialParams, eps: float,
              variant: str = "standard", theta: float = 1.0 / 3.0, L: float = 1.0,
              U: float = 1.0, tau_12: float = 0.5, tau_22: float = 0.5, kernel: str = "fused",
              form: str = "consistent", correction_sign: int = 1):
    """Simulation for one manufactured-solution run on the unit cell.

    ``form`` selects the closed forms behind the forcing correction and the
    fourth-order rates (see :func:`lbelastic.analysis.error_constants`).
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; choose from {VARIANTS}")
    n = int(round(1.0 / eps))
    if not math.isclose(n * eps, 1.0, rel_tol=1e-12):
        raise ValueError(f"1/eps must be an integer, got eps={eps}")
    grid = Grid.unit_square(n)
    rs = compute_relaxation_set(mat.E_tilde, mat.nu, theta, tau_12=tau_12, tau_22=tau_22)
    if variant == "fourth-order":
        t12, t22 = fourth_order_relaxation_times(theta, rs.tau_11, rs.tau_s, rs.tau_d, form=form)
        rs = rs.with_higher_order(tau_12=t12, tau_22=t22)
    x, y = grid.coordinates()
    mu, K = mat.mu_tilde, mat.K_tilde
    # the manufactured displacement is U * u~, so the dimensionless load scales with 1/U
    b = case.body_load(x, y, mu, K) / U
    if variant == "standard":
        forcing = forcing_from_body_load(b[0], b[1], grid.dx, L=L, U=1.0)
    else:
        ec = error_constants_for(rs, mat.E_tilde, mat.nu, form=form)
        d2 = {k: L * v / U for k, v in case.body_load_second_derivatives(x, y, mu, K).items()}
        forcing = forcing_correction(L * b[0], L * b[1], ec, grid.dx, d2, sign=correction_sign)
    return Simulation(grid, rs, forcing, kernel=kernel)


def run_case(case: ManufacturedCase, mat: MaterialParams, eps: float, variant="standard",
             t_final: float | None = None, theta: float = 1.0 / 3.0, U: float = 1.0, **kw):
    """One fixed-horizon run; returns ``(ErrorRecord, RunResult)``."""
    sim = setup_run(case, mat, eps, variant, theta, U=U, **kw)
    t_final = default_horizon(mat) if t_final is None else t_final
    res = run_to_steady_state(sim, t_final=t_final, residual_interval=max(1, int(0.1 / eps**2)))
    errs = relative_errors(res.fields, case, sim.grid, mat, U=U)
    return ErrorRecord(eps, *errs, steps=res.steps), res


class StudyAborted(RuntimeError):
    def __init__(self, eps, cause):
        self.eps = eps
        super().__init__(f"run at eps={eps} became unstable: {cause}")


def convergence_study(case: ManufacturedCase, mat: MaterialParams, variant: str = "standard",
                      eps_list: Sequence[float] = (1 / 20, 1 / 40, 1 / 60, 1 / 80, 1 / 100),
                      t_final: float | None = None, theta: float = 1.0 / 3.0,
                      **kw) -> ConvergenceResult:
    """Relative errors at a common pseudo-time horizon for decreasing ``eps``."""
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 3:
        raise ValueError("a convergence study needs at least three resolutions")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps list must be strictly decreasing")
    t_final = default_horizon(mat) if t_final is None else t_final
    records = []
    for eps in eps_list:
        try:
            rec, _ = run_case(case, mat, eps, variant, t_final, theta, **kw)
        except InstabilityError as exc:
            raise StudyAborted(eps, exc) from exc
        log.info("eps=%g steps=%d errors=%s", eps, rec.steps, rec)
        records.append(rec)
    return ConvergenceResult(case.name, variant, records)
