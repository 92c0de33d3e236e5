"""Leading-order error constants, error estimates and parameter tuning."""
from __future__ import annotations

import logging
from dataclasses import astuple, dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .engine import ForcingField
from .material import (InvalidParameterError, RelaxationSet, check_rate_bounds,
                       compute_relaxation_set)

log = logging.getLogger(__name__)


class SingularConfigurationError(InvalidParameterError):
    """Fourth-order relaxation times are undefined for this parameter set."""


@dataclass(frozen=True)
class ErrorConstants:
    C1: float
    C2: float
    C3: float
    C4: float
    C5: float
    D1: float
    D2: float
    D3: float

    @property
    def C(self) -> np.ndarray:
        return np.array([self.C1, self.C2, self.C3, self.C4, self.C5])

    @property
    def D(self) -> np.ndarray:
        return np.array([self.D1, self.D2, self.D3])

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self))


def _check(E, nu, theta):
    if not (np.isfinite(E) and E >= 0):
        raise InvalidParameterError(f"E_tilde must be non-negative, got {E!r}")
    if not (-1.0 < nu < 1.0):
        raise InvalidParameterError(f"nu must lie in (-1, 1), got {nu!r}")
    if not (0.0 < theta < 1.0):
        raise InvalidParameterError(f"theta must lie in (0, 1), got {theta!r}")


FORMS = ("literal", "consistent")


def error_constants(E, nu, theta=1.0 / 3.0, tau_12=0.5, tau_21=0.5, tau_22=0.5,
                    form: str = "literal") -> ErrorConstants:
    """Coefficients C1..C5, D1..D3 of the fourth-order error source.

    ``form="literal"`` evaluates the reference closed forms term by term.
    ``form="consistent"`` changes three denominators so that the constants
    agree with a Fourier analysis of the discrete scheme: the E^3 term of C2
    gains a factor theta, and the E terms of D1 and D2 carry (1 - nu^2)
    instead of its square.

    ``E = 0`` is accepted to expose the limit of the polynomials in ``E``.
    """
    _check(E, nu, theta)
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}, got {form!r}")
    fixed = form == "consistent"
    t, n = theta, nu
    t12, t21, t22 = tau_12, tau_21, tau_22
    a = 1.0 - t * t          # 1 - theta^2
    b = 1.0 - n * n          # 1 - nu^2
    E2, E3 = E * E, E**3

    C1 = ((n * n - 2 * t * n + 1) / (a * b**3) * E3
          + t * (n - t) * t12 / (a * b**2) * E2
          + (-1 + t * t + 12 * t * (t - n) * t12 * t22) / (12 * a * b) * E)

    C2 = ((1 - n)**3 + 4 * t * (n**3 - n**2 + 3 * n + 1)
          + t**2 * (5 * n**3 - 15 * n**2 - n - 5)) / (8 * (t if fixed else 1.0) * a * b**3) * E3
    C2 += ((2 * t * ((1 - n) * n + t**2 * (1 + n) - t * (1 + n**2)) * t12
            + (1 - t) * (1 - n) * (1 + 2 * t - n - t**2 * (1 + n)) * t21)
           / (-4 * t * a * b**2) * E2)
    C2 += ((2 * t**2 - 3 * t + 1) * (1 + 3 * t * (1 - n) - 5 * n)
           + 24 * t * (t - n) * t12 * t22) / (24 * a * b) * E

    C3 = ((1 - n)**2 * (3 + n) + 4 * t * (-n**3 + 3 * n**2 + n + 1)
          - t**2 * (5 * n**3 - 3 * n**2 + 7 * n + 7)) / (8 * t * a * b**3) * E3
    C3 += ((-2 * (1 - t) * t * (n - 2 * t - 1) * (1 - n) * t12
            - ((1 + t) * (1 - n)**2 + t**3 * (1 + n)**2 + t**2 * (n**2 - 2 * n - 3)) * t21)
           / (4 * t * a * b**2) * E2)
    C3 += (((1 - t) * (1 - n - t * (1 + n) - 2 * t**2 * (2 + n))
            - 4 * a * (1 - n) * t12 * t22
            + 4 * (t**2 * (1 + n) + n - 2 * t - 1) * t21 * t22) / (8 * a * b) * E)
    C3 += t * t22 / 4

    C4 = (16 * t * n + (1 - n)**2 * (3 + n)
          - t**2 * (n**3 + 9 * n**2 - 5 * n + 11)) / (8 * t * a * b**3) * E3
    C4 += ((a * (1 - n) * (t * n + n + t - 1) * t12
            - 2 * t * (t**2 * (1 + n) + n - 2 * t - 1) * t21) / (4 * t * a * b**2) * E2)
    C4 += ((a * (2 * (2 - n) - 3 * t * (5 + n)) - 12 * a * (1 - n) * t12 * t22
            + 12 * (t**2 * (1 + n) + n - 2 * t - 1) * t21 * t22) / (24 * a * b) * E)
    C4 += t * t22 / 4

    C5 = (E3 / (8 * t * (1 + n)**3) - (1 - t) * t12 / (4 * t * (1 + n)**2) * E2
          - (3 * t - 2) / (24 * (1 + n)) * E)

    bd = b if fixed else b**2
    D1 = ((n * n - 2 * t * n + 1) / (a * b**2) * E2
          + t * (n - t) * t12 / (a * bd) * E - 0.25)
    D2 = (((1 - n)**2 + 8 * t * n - t**2 * (5 * n**2 - 2 * n + 5)) / (4 * t * a * b**2) * E2
          - (t**2 * (1 + n) + n - 2 * t - 1) * t21 / (2 * a * bd) * E - t / 2)
    D3 = E2 / (4 * t * (1 + n)**2) + t12 / (2 * (1 + n)) * E - t / 4

    return ErrorConstants(*(float(v) for v in (C1, C2, C3, C4, C5, D1, D2, D3)))


def error_constants_for(rs: RelaxationSet, E, nu, form: str = "literal") -> ErrorConstants:
    return error_constants(E, nu, rs.theta, rs.tau_12, rs.tau_21, rs.tau_22, form=form)


def error_estimates(ec: ErrorConstants) -> tuple[float, float]:
    """Root-sum-square estimates ``(R1, R2)``; R2 also includes the D constants."""
    c2 = float(np.sum(ec.C**2))
    d2 = float(np.sum(ec.D**2))
    return float(np.sqrt(c2)), float(np.sqrt(c2 + d2))


@dataclass(frozen=True)
class TuningResult:
    """``stable_rates`` checks the rate bounds, ``spectrally_stable`` the wave-vector scan."""

    E_tilde: float
    estimate: float
    stable_rates: bool
    spectrally_stable: bool


def tune_E_tilde(nu, theta=1.0 / 3.0, objective="R1", E_range=(1e-3, 10.0),
                 n_grid=400, form: str = "literal") -> TuningResult:
    """E_tilde minimising R1 or R2: log-grid search, then bounded refinement."""
    if objective not in ("R1", "R2"):
        raise ValueError(f"objective must be 'R1' or 'R2', got {objective!r}")
    lo, hi = map(float, E_range)
    if not (0 < lo <= hi and np.isfinite(hi)):
        raise InvalidParameterError(f"empty or invalid search range {E_range!r}")
    idx = 0 if objective == "R1" else 1

    def f(E):
        return error_estimates(error_constants(E, nu, theta, form=form))[idx]

    if lo == hi:
        best = lo
    else:
        grid = np.geomspace(lo, hi, n_grid)
        vals = np.array([f(E) for E in grid])
        k = int(np.argmin(vals))
        a = np.log(grid[max(k - 1, 0)])
        b = np.log(grid[min(k + 1, n_grid - 1)])
        res = minimize_scalar(lambda s: f(np.exp(s)), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-10})
        best = float(np.exp(res.x)) if res.fun <= vals[k] else float(grid[k])
    from .stability import is_stable

    rs = compute_relaxation_set(best, nu, theta)
    return TuningResult(best, f(best), check_rate_bounds(rs), is_stable(best, nu, theta))


def forcing_correction(g2x, g2y, ec: ErrorConstants, eps, d2=None, sign: int = 1) -> ForcingField:
    """Lattice forcing with the eps**4 compensation of the body-load error.

    ``g2x, g2y`` is the leading forcing coefficient ``(L/U) b``; ``d2`` maps the
    names ``gx_xx, gx_xy, gx_yy, gy_xx, gy_xy, gy_yy`` to its analytic second
    derivatives. Without ``d2`` the uncorrected forcing is returned.

    ``sign=+1`` adds ``eps**4 (D1 gx_xx + D2 gy_xy + D3 gx_yy)``, which is the
    direction that cancels the body-load part of the discrete error. ``sign=-1``
    subtracts it instead.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    g2x = np.asarray(g2x, dtype=float)
    g2y = np.asarray(g2y, dtype=float)
    e2 = eps * eps
    if d2 is None:
        log.warning("no body-load derivatives available; forcing left uncorrected")
        return ForcingField(e2 * g2x, e2 * g2y)
    e4 = sign * e2 * e2
    gx = e2 * g2x + e4 * (ec.D1 * d2["gx_xx"] + ec.D2 * d2["gy_xy"] + ec.D3 * d2["gx_yy"])
    gy = e2 * g2y + e4 * (ec.D3 * d2["gy_xx"] + ec.D2 * d2["gx_xy"] + ec.D1 * d2["gy_yy"])
    return ForcingField(np.asarray(gx, dtype=float), np.asarray(gy, dtype=float))


def fourth_order_relaxation_times(theta, tau_11, tau_s, tau_d,
                                  form: str = "literal") -> tuple[float, float]:
    """Third- and fourth-order relaxation times ``(tau_12, tau_22)`` meant to cancel C1 and C5.

    ``tau_12`` zeroes C5 in both forms. ``form="literal"`` takes ``tau_22``
    from its reference closed form; ``form="consistent"`` instead solves
    ``C1 = 0`` (C1 is linear in ``tau_22``).
    """
    if not (0.0 < theta < 1.0):
        raise InvalidParameterError(f"theta must lie in (0, 1), got {theta!r}")
    if not tau_11 > 0:
        raise InvalidParameterError(f"tau_11 must be positive, got {tau_11!r}")
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}, got {form!r}")
    t = theta
    p = 2 - 3 * t + 12 * t * tau_11**2
    tau_12 = p / (12 * (1 - t) * tau_11)
    if form == "consistent":
        # tau_11 = mu/theta and tau_s = 2K/(1+theta) fix the moduli
        s = tau_s
        lin = 2 * tau_11 * t + s * t - s
        if abs(lin) <= 1e-12 * max(abs(2 * tau_11 * t), abs(s)):
            raise SingularConfigurationError("C1 does not depend on tau_22 here")
        tau_22 = -((2 * tau_11 * t + s * t + s)
                   * (24 * tau_11**2 * t**2 - 12 * tau_11 * tau_12 * t**2
                      - 6 * tau_12 * s * t**2 + 6 * tau_12 * s * t
                      - 6 * s**2 * t**2 + 6 * s**2 + t - 1) / (12 * tau_12 * t * lin))
        return float(tau_12), float(tau_22)
    if abs(tau_s - tau_d) <= 1e-12 * max(tau_s, tau_d):
        raise SingularConfigurationError("tau_s equals tau_d; tau_22 is undefined")
    dsd = tau_s - tau_d
    tau_22 = (((1 - t) * tau_d + (1 + t) * tau_s)
              * (t * (2 - 3 * t) * dsd - 12 * t**2 * tau_11**2 * dsd
                 + 2 * tau_11 * (1 - t - 6 * (1 - t)**2 * tau_d**2 - 6 * (1 - t**2) * tau_s**2))
              / (2 * t * p * dsd))
    return float(tau_12), float(tau_22)


def fourth_order_relaxation_set(E_tilde, nu, theta=1.0 / 3.0, form: str = "literal") -> RelaxationSet:
    rs = compute_relaxation_set(E_tilde, nu, theta)
    t12, t22 = fourth_order_relaxation_times(theta, rs.tau_11, rs.tau_s, rs.tau_d, form=form)
    return rs.with_higher_order(tau_12=t12, tau_22=t22)
