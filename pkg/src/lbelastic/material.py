"""Material parameters, diffusive scaling and relaxation times."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


class InvalidParameterError(ValueError):
    """A material or discretization parameter lies outside its admissible range."""


def _positive(name, value):
    if not (np.isfinite(value) and value > 0):
        raise InvalidParameterError(f"{name} must be positive and finite, got {value!r}")


def dimensionless_youngs(E: float, kappa: float, dx: float, dt: float) -> float:
    """Dimensionless Young's modulus ``dt * E / (kappa * dx**2)``."""
    for name, v in (("E", E), ("kappa", kappa), ("dx", dx), ("dt", dt)):
        _positive(name, v)
    return dt / (kappa * dx * dx) * E


def tau_from_omega(omega):
    return 1.0 / np.asarray(omega, dtype=float) - 0.5


def omega_from_tau(tau):
    return 1.0 / (np.asarray(tau, dtype=float) + 0.5)


@dataclass(frozen=True)
class MaterialParams:
    """Isotropic 2D material in dimensionless form.

    The physical modulus ``E`` and damping ``kappa`` are optional and only
    carried along for unit conversion of output fields.
    """

    E_tilde: float
    nu: float
    E: float | None = None
    kappa: float | None = None

    def __post_init__(self):
        _positive("E_tilde", self.E_tilde)
        if not (np.isfinite(self.nu) and -1.0 < self.nu < 1.0):
            raise InvalidParameterError(f"nu must lie in the open interval (-1, 1), got {self.nu!r}")

    @classmethod
    def from_physical(cls, E, nu, kappa, dx, dt) -> "MaterialParams":
        return cls(dimensionless_youngs(E, kappa, dx, dt), nu, E=E, kappa=kappa)

    @property
    def mu_tilde(self) -> float:
        return self.E_tilde / (2.0 * (1.0 + self.nu))

    @property
    def K_tilde(self) -> float:
        return self.E_tilde / (2.0 * (1.0 - self.nu))

    @property
    def lambda_tilde(self) -> float:
        return self.E_tilde * self.nu / (1.0 - self.nu**2)


@dataclass(frozen=True)
class Discretization:
    """Reference scales and the diffusively scaled physical steps.

    ``dx_phys = L * eps`` and ``dt_phys = T * eps**2``.
    """

    L: float
    T: float
    eps: float
    U: float = 1.0

    def __post_init__(self):
        for name in ("L", "T", "eps", "U"):
            _positive(name, getattr(self, name))

    @property
    def dx_phys(self) -> float:
        return self.L * self.eps

    @property
    def dt_phys(self) -> float:
        return self.T * self.eps**2

    @property
    def stress_scale(self) -> float:
        """Factor ``L / T * U`` such that ``sigma / kappa = stress_scale * sigma_tilde``."""
        return self.L / self.T * self.U


@dataclass(frozen=True)
class RelaxationSet:
    theta: float
    tau_11: float
    tau_s: float
    tau_d: float
    tau_12: float = 0.5
    tau_21: float = 0.5
    tau_22: float = 0.5

    @property
    def omega_11(self):
        return float(omega_from_tau(self.tau_11))

    @property
    def omega_s(self):
        return float(omega_from_tau(self.tau_s))

    @property
    def omega_d(self):
        return float(omega_from_tau(self.tau_d))

    @property
    def omega_12(self):
        return float(omega_from_tau(self.tau_12))

    @property
    def omega_21(self):
        return float(omega_from_tau(self.tau_21))

    @property
    def omega_22(self):
        return float(omega_from_tau(self.tau_22))

    def rates(self) -> np.ndarray:
        """Relaxation rates in moment order; the first-order moments get zero."""
        return np.array([0.0, 0.0, self.omega_11, self.omega_s, self.omega_d,
                         self.omega_12, self.omega_21, self.omega_22])

    def with_higher_order(self, tau_12=None, tau_22=None, tau_21=None) -> "RelaxationSet":
        """Copy with new third/fourth-order relaxation times (``tau_21`` follows ``tau_12``)."""
        kw = {}
        if tau_12 is not None:
            kw["tau_12"] = tau_12
            kw["tau_21"] = tau_12 if tau_21 is None else tau_21
        elif tau_21 is not None:
            kw["tau_21"] = tau_21
        if tau_22 is not None:
            kw["tau_22"] = tau_22
        return replace(self, **kw)


def compute_relaxation_set(E_tilde: float, nu: float, theta: float = 1.0 / 3.0,
                           tau_12: float = 0.5, tau_22: float = 0.5,
                           tau_21: float | None = None) -> RelaxationSet:
    """Relaxation times reproducing the moduli of ``(E_tilde, nu)``.

    ``theta * tau_11 = mu``, ``(1 - theta) tau_d / 2 = mu``, ``(1 + theta) tau_s / 2 = K``.
    """
    mat = MaterialParams(E_tilde, nu)
    if not (0.0 < theta < 1.0):
        raise InvalidParameterError(f"theta must lie in (0, 1), got {theta!r}")
    mu, K = mat.mu_tilde, mat.K_tilde
    return RelaxationSet(
        theta=theta,
        tau_11=mu / theta,
        tau_s=2.0 * K / (1.0 + theta),
        tau_d=2.0 * mu / (1.0 - theta),
        tau_12=tau_12,
        tau_21=tau_12 if tau_21 is None else tau_21,
        tau_22=tau_22,
    )


def check_rate_bounds(rs: RelaxationSet) -> bool:
    """True iff every relaxation rate lies in [0, 2]."""
    w = rs.rates()[2:]
    return bool(np.all(np.isfinite(w)) and np.all(w >= 0.0) and np.all(w <= 2.0))
