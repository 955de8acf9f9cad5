"""Lattice geometry: rational orientations, stencils and the lattice symbol.

A front oriented along a rational direction sees the two-dimensional lattice
as a one-dimensional *effective* lattice.  Everything downstream works on that
effective lattice, so this module turns an integer direction pair plus a
stencil into integer index offsets and weights.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import gcd, sqrt
from typing import Literal

import numpy as np

from .errors import NonCommensurate, ZeroDirection

LatticeKind = Literal["square", "hex"]
KINDS = ("square", "hex")

COMMENSURATE_TOL = 1e-12


@dataclass(frozen=True)
class Orientation:
    """Reduced integer direction (m1, m2) on a given lattice."""

    m1: int
    m2: int
    kind: str = "square"

    @property
    def norm2(self) -> int:
        """m1^2 + m2^2 (square) or m1^2 + m1 m2 + m2^2 (hex)."""
        if self.kind == "square":
            return self.m1 * self.m1 + self.m2 * self.m2
        return self.m1 * self.m1 + self.m1 * self.m2 + self.m2 * self.m2

    @property
    def cos_psi(self) -> float:
        if self.kind == "square":
            return self.m1 / sqrt(self.norm2)
        return (sqrt(3.0) / 2.0) * self.m1 / sqrt(self.norm2)

    @property
    def sin_psi(self) -> float:
        if self.kind == "square":
            return self.m2 / sqrt(self.norm2)
        return 0.5 * (self.m1 + 2 * self.m2) / sqrt(self.norm2)

    @property
    def spacing(self) -> float:
        if self.kind == "square":
            return 1.0 / sqrt(self.norm2)
        return (sqrt(3.0) / 2.0) / sqrt(self.norm2)

    @property
    def kappa1(self) -> float:
        """Smallest positive real eigenvalue, 2*pi / spacing."""
        return 2.0 * np.pi / self.spacing

    @property
    def is_symmetry_axis(self) -> bool:
        """True on the square lattice's axes and diagonals (psi = k*pi/4)."""
        if self.kind != "square":
            return False
        a, b = abs(self.m1), abs(self.m2)
        return a == 0 or b == 0 or a == b

    def label(self) -> str:
        return f"{self.m1},{self.m2}"


def make_orientation(m1: int, m2: int, kind: str = "square") -> Orientation:
    if kind not in KINDS:
        raise ValueError(f"unknown lattice kind {kind!r}; expected one of {KINDS}")
    m1, m2 = int(m1), int(m2)
    if m1 == 0 and m2 == 0:
        raise ZeroDirection("orientation (0, 0) has no direction")
    g = gcd(abs(m1), abs(m2))
    return Orientation(m1 // g, m2 // g, kind)


@dataclass(frozen=True)
class Stencil:
    """Difference operator as weighted planar offsets plus a centre weight."""

    kind: str
    offsets: tuple[tuple[float, float, float], ...]  # (dx, dy, weight)
    center_weight: float

    @property
    def dx(self) -> np.ndarray:
        return np.array([o[0] for o in self.offsets])

    @property
    def dy(self) -> np.ndarray:
        return np.array([o[1] for o in self.offsets])

    @property
    def weights(self) -> np.ndarray:
        return np.array([o[2] for o in self.offsets])

    def apply_2d(self, field, x: float, y: float) -> float:
        """Apply the stencil to a callable field(x, y) at one lattice point."""
        total = self.center_weight * field(x, y)
        for dx, dy, w in self.offsets:
            total += w * field(x + dx, y + dy)
        return total


_S3 = sqrt(3.0) / 2.0

_SQUARE = Stencil(
    "square",
    ((1.0, 0.0, 1.0), (-1.0, 0.0, 1.0), (0.0, 1.0, 1.0), (0.0, -1.0, 1.0)),
    -4.0,
)
_HEX = Stencil(
    "hex",
    (
        (1.0, 0.0, 2.0 / 3.0),
        (-1.0, 0.0, 2.0 / 3.0),
        (0.5, _S3, 2.0 / 3.0),
        (-0.5, -_S3, 2.0 / 3.0),
        (0.5, -_S3, 2.0 / 3.0),
        (-0.5, _S3, 2.0 / 3.0),
    ),
    -4.0,
)


def stencil(kind: str) -> Stencil:
    if kind == "square":
        return _SQUARE
    if kind == "hex":
        return _HEX
    raise ValueError(f"unknown lattice kind {kind!r}; expected one of {KINDS}")


def projections(st: Stencil, o: Orientation) -> list[tuple[float, int]]:
    """Project each stencil offset onto the front normal.

    Returns ``(delta, index_offset)`` per offset, where ``delta`` is the
    projected distance and ``index_offset`` its multiple of the effective
    lattice spacing.
    """
    if st.kind != o.kind:
        raise ValueError(f"stencil is {st.kind} but orientation is {o.kind}")
    out = []
    h = o.spacing
    for dx, dy, _w in st.offsets:
        delta = dx * o.cos_psi + dy * o.sin_psi
        idx = int(round(delta / h))
        if abs(delta - idx * h) > COMMENSURATE_TOL:
            raise NonCommensurate(
                f"offset ({dx}, {dy}) projects to {delta!r}, not a multiple of {h!r}"
            )
        out.append((delta, idx))
    return out


def effective_operator(st: Stencil, o: Orientation) -> tuple[np.ndarray, np.ndarray, float]:
    """Collapse the stencil to integer offsets on the effective lattice.

    Offsets that project to the same index are merged, so the result is
    ``(index_offsets, weights, centre)`` with zero offsets folded into the
    centre weight.
    """
    acc: dict[int, float] = {}
    center = st.center_weight
    for (_delta, idx), w in zip(projections(st, o), st.weights):
        if idx == 0:
            center += w
        else:
            acc[idx] = acc.get(idx, 0.0) + w
    keys = np.array(sorted(acc), dtype=int)
    return keys, np.array([acc[k] for k in keys]), center


def _deltas(st: Stencil, o: Orientation) -> np.ndarray:
    return st.dx * o.cos_psi + st.dy * o.sin_psi


def symbol(st: Stencil, o: Orientation, kappa):
    """Lattice symbol sum_i w_i exp(i kappa delta_i) + centre weight.

    Accepts scalar or array ``kappa``; its zeros are the eigenvalues.
    """
    kappa = np.asarray(kappa, dtype=complex)
    d = _deltas(st, o)
    w = st.weights
    phase = np.exp(1j * np.multiply.outer(kappa, d))
    out = phase @ w + st.center_weight
    return out[()] if out.ndim == 0 else out


def symbol_derivative(st: Stencil, o: Orientation, kappa):
    """d(symbol)/d(kappa) in closed form."""
    kappa = np.asarray(kappa, dtype=complex)
    d = _deltas(st, o)
    phase = np.exp(1j * np.multiply.outer(kappa, d))
    out = phase @ (1j * d * st.weights)
    return out[()] if out.ndim == 0 else out
