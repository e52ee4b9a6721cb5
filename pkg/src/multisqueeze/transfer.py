"""Transfer matrices of piecewise-constant layers, scattering and bound states.

Units are hbar^2/2m = 1, so a layer of strength V at energy E has wavenumber
``q = sqrt(E - V)``.  A layer matrix maps (psi, psi') at the left edge to the
right edge; the structure matrix is the ordered product with the last layer
leftmost.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import NonPositiveWidth, SingularMatching

SERIES_THRESHOLD = 1e-8


@dataclass(frozen=True)
class TransferMatrix:
    m11: complex
    m12: complex
    m21: complex
    m22: complex

    @classmethod
    def identity(cls) -> "TransferMatrix":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def delta(cls, alpha: float) -> "TransferMatrix":
        """Connection matrix of a delta potential of strength alpha."""
        return cls(1.0, 0.0, alpha, 1.0)

    @classmethod
    def resonant(cls, theta: float, alpha: float = 0.0) -> "TransferMatrix":
        return cls(theta, 0.0, alpha, 1.0 / theta)

    @classmethod
    def from_array(cls, a) -> "TransferMatrix":
        a = np.asarray(a)
        return cls(a[0, 0].item(), a[0, 1].item(), a[1, 0].item(), a[1, 1].item())

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        return TransferMatrix(
            self.m11 * other.m11 + self.m12 * other.m21,
            self.m11 * other.m12 + self.m12 * other.m22,
            self.m21 * other.m11 + self.m22 * other.m21,
            self.m21 * other.m12 + self.m22 * other.m22,
        )

    def det(self):
        return self.m11 * self.m22 - self.m12 * self.m21

    def det_scale(self) -> float:
        """Magnitude the determinant is computed against (for relative checks)."""
        return abs(self.m11 * self.m22) + abs(self.m12 * self.m21)

    def as_array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]])

    def entries(self) -> tuple:
        return (self.m11, self.m12, self.m21, self.m22)

    @property
    def is_real(self) -> bool:
        return all(isinstance(x, (int, float)) or abs(complex(x).imag) == 0 for x in self.entries())


def wavenumber(E, V) -> complex:
    """sqrt(E - V) on the branch with non-negative imaginary part."""
    q = cmath.sqrt(complex(E - V))
    if q.imag < 0:  # only reachable for complex input
        q = -q
    return q


def _real_layer(x: float, l: float) -> tuple[float, float, float]:
    """cos(ql), sin(ql)/q and -q sin(ql) for real x = (E - V) * l**2."""
    if abs(x) < SERIES_THRESHOLD:
        c = 1.0 - x / 2.0 + x * x / 24.0 - x**3 / 720.0
        sinc = 1.0 - x / 6.0 + x * x / 120.0 - x**3 / 5040.0
        return c, l * sinc, -(x / l) * sinc
    if x > 0:
        ql = math.sqrt(x)
        q = ql / l
        s = math.sin(ql)
        return math.cos(ql), s / q, -q * s
    kl = math.sqrt(-x)
    k = kl / l
    sh = math.sinh(kl)
    return math.cosh(kl), sh / k, k * sh


def layer_matrix(E, V, l) -> TransferMatrix:
    """Transfer matrix of one constant-strength layer of width l."""
    if not l > 0:
        raise NonPositiveWidth(f"layer width must be positive, got {l}")
    if isinstance(E, complex) or isinstance(V, complex):
        q = wavenumber(E, V)
        x = (q * l) ** 2
        if abs(x) < SERIES_THRESHOLD:
            c = 1 - x / 2 + x * x / 24 - x**3 / 720
            sinc = 1 - x / 6 + x * x / 120 - x**3 / 5040
            return TransferMatrix(c, l * sinc, -(x / l) * sinc, c)
        ql = q * l
        c, s = cmath.cos(ql), cmath.sin(ql)
        return TransferMatrix(c, s / q, -q * s, c)
    E, V, l = float(E), float(V), float(l)
    c, v, dv = _real_layer((E - V) * l * l, l)
    return TransferMatrix(c, v, dv, c)


def full_matrix(values: Iterable[tuple[float, float]], E) -> TransferMatrix:
    """Product of layer matrices for (V_i, l_i), first layer applied first."""
    total = TransferMatrix.identity()
    for V, l in values:
        total = layer_matrix(E, V, l) @ total
    return total


def scattering(m: TransferMatrix, k: float) -> tuple[complex, complex]:
    """Transmission and reflection amplitudes for incidence from the left.

    Left of the structure ``psi = exp(ikx) + r exp(-ikx)``, right of it
    ``psi = t exp(ik(x - x_N))``.
    """
    if not k > 0:
        raise ValueError(f"scattering needs k > 0, got {k}")
    ik = 1j * k
    den = ik * (m.m11 + m.m22) + k * k * m.m12 - m.m21
    scale = abs(k * (m.m11 + m.m22)) + abs(k * k * m.m12) + abs(m.m21)
    if den == 0 or abs(den) <= 1e-15 * scale:
        raise SingularMatching(f"matching denominator vanishes at k={k}")
    t = 2 * ik / den
    r = 2 * (ik * m.m22 + k * k * m.m12) / den - 1
    return t, r


def transmission(m: TransferMatrix, k: float) -> float:
    t, _ = scattering(m, k)
    return abs(t) ** 2


def bound_residual(m: TransferMatrix, kappa: float) -> float:
    """Left side of the bound-state condition for decay rate kappa."""
    val = m.m11 + m.m22 + kappa * m.m12 + m.m21 / kappa
    return complex(val).real


def _bisect(f, lo, hi, flo, xtol):
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bound_states(
    matrix_of_kappa: Callable[[float], TransferMatrix],
    bracket: tuple[float, float],
    n_scan: int = 512,
    xtol: float = 1e-12,
) -> list[float]:
    """Decay rates kappa > 0 of bound states inside ``bracket``.

    The residual is scanned at ``n_scan`` uniform points and every sign change
    refined by bisection.
    """
    lo, hi = bracket
    if not 0 < lo < hi:
        raise ValueError(f"bracket must satisfy 0 < lo < hi, got {bracket}")

    def f(kappa):
        return bound_residual(matrix_of_kappa(kappa), kappa)

    grid = np.linspace(lo, hi, n_scan)
    vals = [f(x) for x in grid]
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0:
            roots.append(float(a))
        elif fa * fb < 0:
            roots.append(_bisect(f, float(a), float(b), fa, xtol))
    if vals[-1] == 0:
        roots.append(float(grid[-1]))
    return roots


def structure_bound_matrix(values: Sequence[tuple[float, float]]) -> Callable[[float], TransferMatrix]:
    """kappa -> transfer matrix of a finite structure at E = -kappa**2."""
    values = list(values)
    return lambda kappa: full_matrix(values, -kappa * kappa)


def constant_matrix(m: TransferMatrix) -> Callable[[float], TransferMatrix]:
    return lambda kappa: m
