"""Squeezing a structure along a path and reading off the limit.

``limit_matrix`` samples the structure matrix on a decreasing eps schedule,
decides per entry whether it stays bounded, and extrapolates the bounded ones
with one Richardson step at an empirically fitted order.  ``limit_parameters``
gives the closed-form limits (phase s, tau, width ratios chi, adjoint
couplings eta) that the resonance equations are written in.
"""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ClassMismatch, NumericalOverflow, ScheduleTooShort, Unclassifiable
from .model import (
    PathSpec,
    StrengthClass,
    StructureSpec,
    classify_structure,
    compare,
    limit_phase,
)
from .transfer import TransferMatrix, full_matrix

DIVERGENCE_FLOOR = 1e12
FIT_POINTS = 4
DIVERGENT_SLOPE = -0.1
DIVERGENT_R2 = 0.99
MIN_ORDER = 0.2
ELEMENTS = ("11", "12", "21", "22")


def default_schedule(start: float = 1e-1, stop: float = 1e-6, n: int = 13) -> list[float]:
    return list(np.logspace(math.log10(start), math.log10(stop), n))


def realize(structure: StructureSpec, path: PathSpec, eps: float) -> list[tuple[float, float]]:
    """(V_i, l_i) of every layer at one point of the path."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if len(path.exponents) != len(structure):
        raise ValueError("path and structure differ in length")
    out = []
    for layer, e in zip(structure.layers, path.exponents):
        l = float(layer.w) * eps ** float(e)
        out.append((layer.strength(l), l))
    return out


@dataclass(frozen=True)
class EntryFit:
    """Behaviour of one matrix entry over the tail of the schedule.

    ``exponent`` is the fitted power of eps in |entry|; ``order`` the fitted
    power in the successive differences (bounded entries only).
    """

    element: str
    status: str  # "bounded", "divergent" or "undetermined"
    exponent: float
    r2: float
    value: complex = math.nan
    error: float = math.inf
    order: float | None = None


@dataclass(frozen=True)
class LimitEstimate:
    E: float
    eps: tuple[float, ...]
    traces: tuple[TransferMatrix, ...]
    fits: dict[str, EntryFit]
    order: float | None
    truncated: bool = False

    @property
    def matrix(self) -> TransferMatrix:
        return TransferMatrix(*(self.fits[k].value for k in ELEMENTS))

    @property
    def errors(self) -> dict[str, float]:
        return {k: self.fits[k].error for k in ELEMENTS}

    def status(self, element: str) -> str:
        return self.fits[element].status

    def trace(self, element: str) -> list[complex]:
        idx = ELEMENTS.index(element)
        return [m.entries()[idx] for m in self.traces]


def _line_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Slope and R^2 of a least-squares line."""
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return float(slope), r2


def _safe_log(values) -> np.ndarray:
    return np.log(np.maximum(np.abs(np.asarray(values, dtype=complex)), 1e-300))


def _richardson(f: np.ndarray, eps: np.ndarray, order: float, n: int) -> complex:
    """Limit from points n-1, n assuming f = f0 + C eps**order."""
    r = eps[n] / eps[n - 1]
    return f[n] - (f[n - 1] - f[n]) / (r ** (-order) - 1.0)


def _fit_entry(element: str, values: Sequence[complex], eps: Sequence[float]) -> EntryFit:
    f = np.asarray(values[-FIT_POINTS:], dtype=complex)
    e = np.asarray(eps[-FIT_POINTS:], dtype=float)
    loge = np.log(e)
    slope, r2 = _line_fit(loge, _safe_log(f))
    if slope < DIVERGENT_SLOPE:
        status = "divergent" if r2 > DIVERGENT_R2 else "undetermined"
        return EntryFit(element, status, slope, r2)

    d = np.diff(f)
    scale = max(1.0, float(np.max(np.abs(f))))
    noise = 1e-13 * scale
    last = complex(f[-1])
    if float(np.max(np.abs(d))) <= noise:
        return EntryFit(element, "bounded", slope, r2, last, float(np.max(np.abs(d))) + noise, None)

    order, order_r2 = _line_fit(loge[1:], _safe_log(d))
    if order < MIN_ORDER or order_r2 < 0.9:
        # differences do not follow a power law: report the last value plainly
        return EntryFit(element, "bounded", slope, r2, last, float(np.max(np.abs(d[-2:]))), order)
    f0 = _richardson(f, e, order, FIT_POINTS - 1)
    f0_prev = _richardson(f, e, order, FIT_POINTS - 2)
    err = abs(f0 - f0_prev) + 1e-15 * scale
    return EntryFit(element, "bounded", slope, r2, complex(f0), float(err), order)


def _matrix_overflows(m: TransferMatrix) -> bool:
    return any(not cmath.isfinite(complex(x)) or abs(x) > DIVERGENCE_FLOOR for x in m.entries())


def limit_matrix(
    structure: StructureSpec,
    path: PathSpec,
    E: float = 1.0,
    schedule: Sequence[float] | None = None,
    workers: int = 1,
) -> LimitEstimate:
    """Estimate the eps -> 0 structure matrix at energy E."""
    eps = list(default_schedule() if schedule is None else schedule)
    if len(eps) < FIT_POINTS:
        raise ScheduleTooShort(f"need at least {FIT_POINTS} schedule points, got {len(eps)}")
    if any(not x > 0 for x in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("schedule must be positive and strictly decreasing")

    def at(x):
        return full_matrix(realize(structure, path, x), E)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            mats = list(pool.map(at, eps))
    else:
        mats = [at(x) for x in eps]

    kept = len(mats)
    for n, m in enumerate(mats):
        if _matrix_overflows(m):
            kept = n
            break
    truncated = kept < len(mats)
    eps_kept, mats = tuple(eps[:kept]), tuple(mats[:kept])
    if kept < FIT_POINTS:
        raise NumericalOverflow(
            f"entries exceed {DIVERGENCE_FLOOR:g} after {kept} schedule points",
            partial={"eps": eps_kept, "traces": mats},
        )

    fits = {}
    for idx, name in enumerate(ELEMENTS):
        fits[name] = _fit_entry(name, [m.entries()[idx] for m in mats], eps_kept)

    bounded = [ELEMENTS.index(k) for k in ELEMENTS if fits[k].status == "bounded"]
    order = None
    if bounded:
        tail = np.array([[m.entries()[i] for i in bounded] for m in mats[-FIT_POINTS:]])
        norms = np.max(np.abs(np.diff(tail, axis=0)), axis=1)
        if np.all(norms > 0):
            order, _ = _line_fit(np.log(eps_kept[-FIT_POINTS + 1 :]), np.log(norms))
    return LimitEstimate(E, eps_kept, mats, fits, order, truncated)


# -- classification -----------------------------------------------------------


@dataclass(frozen=True)
class PointInteractionClass:
    kind: str  # "delta", "dirichlet", "resonant" or "trivial"
    theta: float | None = None
    alpha: float | None = None

    @classmethod
    def delta(cls, alpha):
        return cls("delta", 1.0, alpha)

    @classmethod
    def dirichlet(cls):
        return cls("dirichlet")

    @classmethod
    def resonant(cls, theta, alpha):
        return cls("resonant", theta, alpha)

    @classmethod
    def trivial(cls):
        return cls("trivial", 1.0, 0.0)

    def __str__(self):
        if self.kind == "delta":
            return f"delta(alpha={self.alpha:.10g})"
        if self.kind == "resonant":
            return f"resonant(theta={self.theta:.10g}, alpha={self.alpha:.10g})"
        return self.kind


def _real(x) -> float:
    return complex(x).real


def classify_limit(estimate: LimitEstimate) -> PointInteractionClass:
    fits = estimate.fits
    diag = {k: fits[k].status for k in ELEMENTS}
    if diag["11"] != "bounded" or diag["22"] != "bounded":
        raise Unclassifiable("a diagonal entry does not stay bounded; the path is not admissible", diag)
    if diag["21"] == "divergent":
        return PointInteractionClass.dirichlet()
    if "undetermined" in diag.values() or diag["12"] != "bounded":
        raise Unclassifiable("entry behaviour is undetermined over the schedule tail", diag)

    def close(element, target):
        f = fits[element]
        return abs(f.value - target) <= max(1e-6, 10 * f.error)

    if not close("12", 0.0):
        raise Unclassifiable("off-diagonal entry 12 does not vanish", diag)
    theta, alpha = _real(fits["11"].value), _real(fits["21"].value)
    if close("11", 1.0) and close("22", 1.0):
        if close("21", 0.0):
            return PointInteractionClass.trivial()
        return PointInteractionClass.delta(alpha)
    return PointInteractionClass.resonant(theta, alpha)


# -- closed-form limit parameters ---------------------------------------------


def _exact(*xs) -> bool:
    return all(isinstance(x, (int, Fraction)) for x in xs)


def _ratio(a, b):
    return Fraction(a) / Fraction(b) if _exact(a, b) else float(a) / float(b)


@dataclass(frozen=True)
class LimitParameters:
    """Closed-form squeezing limits for one structure, path and sigma.

    Labels are 1-based.  Infinite limits are returned as signed ``inf``.
    """

    structure: StructureSpec
    path: PathSpec
    sigma: float = 1
    classes: tuple[StrengthClass, ...] = field(init=False)

    def __post_init__(self):
        if len(self.path.exponents) != len(self.structure):
            raise ValueError("path and structure differ in length")
        if self.sigma < 1:
            raise ValueError("sigma must be >= 1")
        object.__setattr__(self, "classes", tuple(classify_structure(self.structure)))

    def cls(self, i: int) -> StrengthClass:
        self.structure.layer(i)
        return self.classes[i - 1]

    def s(self, i: int) -> complex:
        """Limit of q_i l_i: zero unless the layer is in the prime set."""
        c = self.cls(i)
        return limit_phase(self.structure.layer(i).g) if c.is_prime else 0j

    def tau(self, i: int) -> complex:
        s = self.s(i)
        return s * cmath.tan(s)

    def ratio(self, i: int) -> complex:
        """tau_i / s_i**2, which is 1 for layers outside the prime set."""
        s = self.s(i)
        if s == 0:
            return 1.0 + 0j
        return cmath.tan(s) / s

    def alpha(self, i: int) -> float:
        c = self.cls(i)
        if not c.is_regular:
            raise ClassMismatch(f"layer {i} is not in the regular set; V l has no finite limit")
        return c.alpha

    def chi(self, i: int, j: int, sigma=None) -> float:
        """Limit of l_i**(1/sigma) / l_j."""
        sigma = self.sigma if sigma is None else sigma
        ei, ej = self.path.exponent(i), self.path.exponent(j)
        wi, wj = self.structure.layer(i).w, self.structure.layer(j).w
        order = compare(_ratio(ei, sigma), ej)
        if order > 0:
            return 0.0
        if order < 0:
            return math.inf
        return float(wi) ** (1.0 / float(sigma)) / float(wj)

    def eta(self, i: int, j: int, sigma=None) -> float:
        """Limit of q_i**2 l_i l_j**(1/sigma) (E drops out)."""
        sigma = self.sigma if sigma is None else sigma
        c = self.cls(i)
        if c.is_prime:
            raise ClassMismatch(f"layer {i} is in the prime set; eta needs V_i outside it")
        if c.is_regular:
            return 0.0
        layer, lj = self.structure.layer(i), self.structure.layer(j)
        ei, ej = self.path.exponent(i), self.path.exponent(j)
        p = layer.p
        if _exact(p, ei, ej, sigma):
            x = (1 - p) * ei + Fraction(ej) / Fraction(sigma)
        else:
            x = (1 - float(p)) * float(ei) + float(ej) / float(sigma)
        order = compare(x, 0)
        g = float(layer.g)
        if order > 0:
            return 0.0
        if order < 0:
            return -math.copysign(math.inf, g)
        return -g * float(layer.w) ** (1 - float(p)) * float(lj.w) ** (1.0 / float(sigma))

    def coupling(self, i: int, j: int, sigma=None) -> complex:
        """The combined coefficient A^sigma_ij of layer i seen from multiplier j."""
        sigma = self.sigma if sigma is None else sigma
        c = self.cls(i)
        if c.is_regular:
            return 0j
        if c.is_adjoint:
            return complex(self.eta(i, j, sigma))
        if i == j:
            if compare(sigma, 1) != 0:
                raise ClassMismatch(f"layer {i} is prime; A_ii exists only at sigma = 1")
            return self.tau(i)
        return self.chi(j, i, sigma) * self.tau(i)


def limit_parameters(structure: StructureSpec, path: PathSpec, sigma=1) -> LimitParameters:
    return LimitParameters(structure, path, sigma)
