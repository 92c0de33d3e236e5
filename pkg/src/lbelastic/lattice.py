"""D2Q8 velocity set, periodic grid and the population <-> moment transforms.

Populations are stored structure-of-arrays: a field has shape ``(8, nx, ny)``
and index ``q`` runs over the velocities in the order of ``VELOCITIES``.
Moments use the collision ordering ``(m10, m01, m11, ms, md, m12, m21, m22)``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

Q = 8

#: lattice velocities (i, j), rest velocity removed
VELOCITIES = np.array(
    [(1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1)],
    dtype=int,
)
CX = VELOCITIES[:, 0]
CY = VELOCITIES[:, 1]

#: index of the velocity pointing the other way
OPPOSITE = np.array([2, 3, 0, 1, 6, 7, 4, 5])

MOMENT_NAMES = ("m10", "m01", "m11", "ms", "md", "m12", "m21", "m22")
M10, M01, M11, MS, MD, M12, M21, M22 = range(8)


def raw_moment_row(a: int, b: int) -> np.ndarray:
    """Row vector of the raw moment sum_{ij} i^a j^b f_ij."""
    return (CX**a) * (CY**b)


def _build_moment_matrix() -> np.ndarray:
    m20 = raw_moment_row(2, 0)
    m02 = raw_moment_row(0, 2)
    rows = [
        raw_moment_row(1, 0),
        raw_moment_row(0, 1),
        raw_moment_row(1, 1),
        m20 + m02,
        m20 - m02,
        raw_moment_row(1, 2),
        raw_moment_row(2, 1),
        raw_moment_row(2, 2),
    ]
    return np.array(rows, dtype=int)


def _exact_inverse(a: np.ndarray) -> list[list[Fraction]]:
    # Gauss-Jordan over the rationals; the moment matrix is small and integer.
    n = a.shape[0]
    aug = [[Fraction(int(v)) for v in row] + [Fraction(int(i == k)) for k in range(n)]
           for i, row in enumerate(a)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [v / p for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                fac = aug[r][col]
                aug[r] = [vr - fac * vc for vr, vc in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


M_INT = _build_moment_matrix()
M_INV_EXACT = _exact_inverse(M_INT)
M = M_INT.astype(float)
M_INV = np.array([[float(v) for v in row] for row in M_INV_EXACT])

if not np.array_equal(M @ M_INV, np.eye(Q)):
    raise RuntimeError("moment matrix inverse failed verification")


class MomentVector(NamedTuple):
    m10: float | np.ndarray
    m01: float | np.ndarray
    m11: float | np.ndarray
    ms: float | np.ndarray
    md: float | np.ndarray
    m12: float | np.ndarray
    m21: float | np.ndarray
    m22: float | np.ndarray

    @classmethod
    def from_array(cls, m) -> "MomentVector":
        m = np.asarray(m)
        return cls(*(m[k] for k in range(Q)))

    def as_array(self) -> np.ndarray:
        return np.stack([np.asarray(v, dtype=float) for v in self])

    @property
    def m20(self):
        return 0.5 * (self.ms + self.md)

    @property
    def m02(self):
        return 0.5 * (self.ms - self.md)


def populations_to_moments(f) -> np.ndarray:
    """Moments of ``f`` along axis 0 (``f`` may be ``(8,)`` or ``(8, ...)``)."""
    f = np.asarray(f, dtype=float)
    return np.tensordot(M, f, axes=(1, 0))


def moments_to_populations(m) -> np.ndarray:
    """Inverse of :func:`populations_to_moments`."""
    if isinstance(m, MomentVector):
        m = m.as_array()
    m = np.asarray(m, dtype=float)
    return np.tensordot(M_INV, m, axes=(1, 0))


@dataclass(frozen=True)
class Grid:
    """Periodic ``nx`` by ``ny`` lattice with dimensionless spacing ``dx``.

    Nodes sit at cell centres, ``((i + 1/2) dx, (j + 1/2) dx)``, so the domain
    is ``[0, nx*dx] x [0, ny*dx]`` without duplicated boundary nodes.
    """

    nx: int
    ny: int
    dx: float

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid needs at least one node per axis")
        if not self.dx > 0:
            raise ValueError("grid spacing must be positive")

    @classmethod
    def unit_square(cls, n: int) -> "Grid":
        return cls(n, n, 1.0 / n)

    @property
    def lengths(self) -> tuple[float, float]:
        return self.nx * self.dx, self.ny * self.dx

    @property
    def shape(self) -> tuple[int, int]:
        return self.nx, self.ny

    def node_position(self, i, j):
        return (np.asarray(i) + 0.5) * self.dx, (np.asarray(j) + 0.5) * self.dx

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinate arrays of shape ``(nx, ny)`` (``indexing='ij'``)."""
        i = np.arange(self.nx)
        j = np.arange(self.ny)
        return np.meshgrid((i + 0.5) * self.dx, (j + 0.5) * self.dx, indexing="ij")


@dataclass
class PopulationField:
    """Double-buffered population storage, shape ``(8, nx, ny)`` per buffer."""

    grid: Grid
    f: np.ndarray = field(default=None)
    f_next: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        shape = (Q,) + self.grid.shape
        if self.f is None:
            self.f = np.zeros(shape)
        else:
            self.f = np.array(self.f, dtype=float)
            if self.f.shape != shape:
                raise ValueError(f"population array must have shape {shape}, got {self.f.shape}")
        if self.f_next is None:
            self.f_next = np.empty(shape)

    def swap(self):
        self.f, self.f_next = self.f_next, self.f

    def moments(self) -> np.ndarray:
        return populations_to_moments(self.f)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.f).all())


def _rows(grid: Grid, data: np.ndarray):
    x, y = grid.coordinates()
    for j in range(grid.ny):
        for i in range(grid.nx):
            yield [i, j, repr(float(x[i, j])), repr(float(y[i, j]))] + [
                repr(float(v)) for v in data[:, i, j]
            ]


def write_field_csv(path, grid: Grid, data: np.ndarray, columns, header_lines=()):
    """Write per-node data ``(ncol, nx, ny)`` as CSV, rows ordered j-major then i.

    ``header_lines`` are emitted first as ``#`` comments.
    """
    data = np.asarray(data)
    if data.shape[0] != len(columns):
        raise ValueError("column count does not match data")
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["i", "j", "x", "y", *columns])
        w.writerows(_rows(grid, data))


def dump_populations(path, pop: PopulationField, header_lines=()):
    write_field_csv(path, pop.grid, pop.f, [f"f{k}" for k in range(1, Q + 1)], header_lines)


def dump_moments(path, pop: PopulationField, header_lines=()):
    write_field_csv(path, pop.grid, pop.moments(), list(MOMENT_NAMES), header_lines)
