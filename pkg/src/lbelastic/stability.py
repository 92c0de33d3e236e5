"""Von Neumann stability of the linearised collide-stream map."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import CX, CY, M, M_INV, M12, M21, Q, raw_moment_row
from .material import RelaxationSet, compute_relaxation_set

RHO_TOL = 1e-9


def equilibrium_matrix(theta: float, mode: str = "collision") -> np.ndarray:
    """Linear map from populations to equilibrium moments.

    ``mode="literal"`` uses the theta-scaled third-order rows
    ``[0 0 0 0 1 -1 -1 1]`` and its transpose pattern. ``mode="collision"``
    builds the rows from ``m12_eq = theta * m10`` and ``m21_eq = theta * m01``.
    The first-order rows are conserved in both modes. ``"collision"`` is the
    linearisation of the collision the engine actually performs.
    """
    meq = np.zeros((Q, Q))
    meq[0] = raw_moment_row(1, 0)
    meq[1] = raw_moment_row(0, 1)
    if mode == "literal":
        meq[M12] = theta * raw_moment_row(1, 2)
        meq[M21] = theta * raw_moment_row(2, 1)
    elif mode == "collision":
        meq[M12] = theta * raw_moment_row(1, 0)
        meq[M21] = theta * raw_moment_row(0, 1)
    else:
        raise ValueError(f"unknown equilibrium mode {mode!r}")
    return meq


@dataclass(frozen=True)
class OperatorMatrices:
    M: np.ndarray
    M_inv: np.ndarray
    M_eq: np.ndarray
    Lam: np.ndarray

    @classmethod
    def from_rates(cls, rs: RelaxationSet, mode: str = "collision") -> "OperatorMatrices":
        return cls(M, M_INV, equilibrium_matrix(rs.theta, mode), np.diag(rs.rates()))

    def collision(self) -> np.ndarray:
        """``A = M^-1 Lam M_eq + M^-1 (I - Lam) M``."""
        return self.M_inv @ self.Lam @ self.M_eq + self.M_inv @ (np.eye(Q) - self.Lam) @ self.M


def build_amplification(k, rs: RelaxationSet, mode: str = "collision",
                        ops: OperatorMatrices | None = None) -> np.ndarray:
    ops = ops or OperatorMatrices.from_rates(rs, mode)
    kx, ky = k
    phase = np.exp(-1j * (kx * CX + ky * CY))
    return phase[:, None] * ops.collision()


def spectral_radius(L) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(np.asarray(L)))))


def wave_vectors(n_k: int = 50, n_phi: int = 5) -> np.ndarray:
    if n_k < 2 or n_phi < 1:
        raise ValueError("need n_k >= 2 and n_phi >= 1")
    kh = np.linspace(0.0, np.pi, n_k)
    phi = np.linspace(0.0, np.pi / 4, n_phi) if n_phi > 1 else np.zeros(1)
    K, P = np.meshgrid(kh, phi, indexing="ij")
    return np.stack([(K * np.cos(P)).ravel(), (K * np.sin(P)).ravel()], axis=1)


def scan_wave_vectors(rs: RelaxationSet, n_k: int = 50, n_phi: int = 5,
                      mode: str = "collision") -> float:
    """Worst spectral radius over the sampled wave vectors."""
    A = OperatorMatrices.from_rates(rs, mode).collision()
    ks = wave_vectors(n_k, n_phi)
    phase = np.exp(-1j * (ks[:, 0:1] * CX + ks[:, 1:2] * CY))  # (nk, 8)
    Ls = phase[:, :, None] * A[None]
    return float(np.max(np.abs(np.linalg.eigvals(Ls))))


@dataclass(frozen=True)
class StabilityMap:
    nu: np.ndarray
    E_tilde: np.ndarray
    worst_rho: np.ndarray  # shape (len(nu), len(E_tilde))
    tol: float = RHO_TOL

    @property
    def stable(self) -> np.ndarray:
        return self.worst_rho <= 1.0 + self.tol

    def rows(self):
        for a, nu in enumerate(self.nu):
            for b, E in enumerate(self.E_tilde):
                yield float(nu), float(E), float(self.worst_rho[a, b]), bool(self.stable[a, b])


def is_stable(E_tilde, nu, theta=1.0 / 3.0, n_k=50, n_phi=5, mode="collision", tol=RHO_TOL) -> bool:
    rs = compute_relaxation_set(E_tilde, nu, theta)
    return scan_wave_vectors(rs, n_k, n_phi, mode) <= 1.0 + tol


def stability_map(nu_values, E_values, theta=1.0 / 3.0, n_k=50, n_phi=5,
                  mode="collision", tol=RHO_TOL) -> StabilityMap:
    nu_values = np.asarray(nu_values, dtype=float)
    E_values = np.asarray(E_values, dtype=float)
    rho = np.empty((nu_values.size, E_values.size))
    for a, nu in enumerate(nu_values):
        for b, E in enumerate(E_values):
            rs = compute_relaxation_set(E, nu, theta)
            rho[a, b] = scan_wave_vectors(rs, n_k, n_phi, mode)
    return StabilityMap(nu_values, E_values, rho, tol)
