"""Cosine-product times dyad-series form of the structure matrix entries.

Every entry of the N-layer product factorizes as ``prod_n cos(q_n l_n)``
times a signed sum of products of dyads ``D_ij = (q_i/q_j) t_i t_j`` with
``t_i = tan(q_i l_i)``.  Index tuples run over all strictly increasing
combinations, so each group of the sum has a binomial number of terms and
every entry carries 2**(N-1) monomials in total.

All arrays in ``TrigData`` carry the layer index on axis 0; extra trailing
axes evaluate many parameter draws at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Iterator

import numpy as np

from .errors import CosineZero, TooManyLayers, ZeroWavenumber

MAX_LAYERS = 20
COSINE_FLOOR = 1e-12  # below this tan(q l) is not meaningfully finite
ELEMENTS = ("11", "12", "21", "22")


@dataclass(frozen=True)
class TrigData:
    q: np.ndarray
    l: np.ndarray
    c: np.ndarray
    t: np.ndarray

    @classmethod
    def from_layers(cls, values, E) -> "TrigData":
        """From (V_i, l_i) pairs; V, l may be arrays of matching shape."""
        V = np.asarray([v for v, _ in values], dtype=complex)
        l = np.asarray([w for _, w in values], dtype=float)
        q = np.sqrt(np.asarray(E, dtype=complex) - V)
        q = np.where(q.imag < 0, -q, q)
        return cls.from_phases(q, l)

    @classmethod
    def from_phases(cls, q, l) -> "TrigData":
        q = np.asarray(q, dtype=complex)
        l = np.broadcast_to(np.asarray(l, dtype=float), q.shape)
        if q.shape[0] > MAX_LAYERS:
            raise TooManyLayers(f"{q.shape[0]} layers; the series is capped at {MAX_LAYERS}")
        if np.any(np.abs(q) == 0):
            raise ZeroWavenumber("a layer has q = 0; use the transfer module for this point")
        c = np.cos(q * l)
        if np.any(np.abs(c) < COSINE_FLOOR):
            raise CosineZero("cos(q l) vanishes for a layer; tan is undefined")
        return cls(q, l, c, np.tan(q * l))

    @property
    def n(self) -> int:
        return self.q.shape[0]


def _check(i: int, j: int, trig: TrigData):
    for k in (i, j):
        if not 1 <= k <= trig.n:
            raise IndexError(f"layer label {k} outside 1..{trig.n}")
    if np.any(trig.q[j - 1] == 0):
        raise ZeroWavenumber(f"q_{j} = 0")


def dyad(i: int, j: int, trig: TrigData):
    """(q_i / q_j) t_i t_j for 1-based labels."""
    _check(i, j, trig)
    q, t = trig.q, trig.t
    return q[i - 1] / q[j - 1] * t[i - 1] * t[j - 1]


def triad(i: int, j: int, k: int, trig: TrigData):
    """dyad(i, j) * q_k t_k."""
    if not i < j < k:
        raise ValueError(f"triad labels must increase, got {(i, j, k)}")
    return dyad(i, j, trig) * trig.q[k - 1] * trig.t[k - 1]


def index_tuples(n_layers: int, size: int) -> Iterator[tuple[int, ...]]:
    """Strictly increasing 1-based label tuples of the given length."""
    return combinations(range(1, n_layers + 1), size)


def _group_sizes(n_layers: int, element: str) -> list[int]:
    if element in ("11", "22"):
        return list(range(0, n_layers + 1, 2))
    if element in ("12", "21"):
        return list(range(1, n_layers + 1, 2))
    raise ValueError(f"element must be one of {ELEMENTS}, got {element!r}")


def _monomial(idx: tuple[int, ...], element: str, trig: TrigData):
    """Product for one label tuple, without its sign."""
    q, t = trig.q, trig.t
    term = np.ones(q.shape[1:], dtype=complex)
    pairs = len(idx) // 2
    for a in range(pairs):
        i, j = idx[2 * a], idx[2 * a + 1]
        if element in ("11", "21"):
            term = term * (q[i - 1] / q[j - 1])
        else:
            term = term * (q[j - 1] / q[i - 1])
        term = term * t[i - 1] * t[j - 1]
    if len(idx) % 2:
        k = idx[-1] - 1
        term = term * (q[k] * t[k] if element == "21" else t[k] / q[k])
    return term


def q_series(element: str, trig: TrigData):
    """The correction series of one entry.

    For the diagonal entries this is the sum over n >= 1 dyad products; for the
    off-diagonal entries it excludes the leading single-index sum.
    """
    total = np.zeros(trig.q.shape[1:], dtype=complex)
    for size in _group_sizes(trig.n, element):
        n = size // 2
        if n == 0:
            continue
        group = sum(_monomial(idx, element, trig) for idx in index_tuples(trig.n, size))
        total = total + (-1) ** n * group
    return total


def element_via_series(element: str, trig: TrigData):
    prod_c = np.prod(trig.c, axis=0)
    q, t = trig.q, trig.t
    if element == "11":
        body = 1 + q_series("11", trig)
    elif element == "22":
        body = 1 + q_series("22", trig)
    elif element == "12":
        body = np.sum(t / q, axis=0) + q_series("12", trig)
    elif element == "21":
        body = -np.sum(q * t, axis=0) - q_series("21", trig)
    else:
        raise ValueError(f"element must be one of {ELEMENTS}, got {element!r}")
    return prod_c * body


def series_matrix(trig: TrigData) -> np.ndarray:
    """All four entries, shape (2, 2, ...)."""
    return np.array(
        [
            [element_via_series("11", trig), element_via_series("12", trig)],
            [element_via_series("21", trig), element_via_series("22", trig)],
        ]
    )


def group_counts(n_layers: int, element: str) -> list[int]:
    """Number of monomials in each group, found by enumerating the tuples."""
    if n_layers < 1:
        raise ValueError("need at least one layer")
    return [sum(1 for _ in index_tuples(n_layers, size)) for size in _group_sizes(n_layers, element)]


def binomial_counts(n_layers: int, element: str) -> list[int]:
    return [comb(n_layers, size) for size in _group_sizes(n_layers, element)]


def term_count(n_layers: int, element: str) -> int:
    return sum(group_counts(n_layers, element))
