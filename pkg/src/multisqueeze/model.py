"""Layer data, squeezing paths and the strength / pencil classification.

Every strength is an exact power law ``V(l) = g * l**(-p)`` and every path an
exact power law ``l(eps) = w * eps**e``, so all defining limits reduce to the
sign of an exponent.  Exponents given as ``int`` or ``Fraction`` are compared
exactly; floats are compared with a relative tolerance of 1e-12.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational, Real

from .errors import ExponentOutOfRange

EXPONENT_RTOL = 1e-12

Number = Real  # int, float or Fraction


def _is_exact(*values) -> bool:
    return all(isinstance(v, Rational) for v in values)


def compare(a: Number, b: Number) -> int:
    """Three-way comparison of exponents, exact for rationals."""
    if _is_exact(a, b):
        return (a > b) - (a < b)
    a, b = float(a), float(b)
    if abs(a - b) <= EXPONENT_RTOL * max(1.0, abs(a), abs(b)):
        return 0
    return 1 if a > b else -1


def _as_number(x):
    if isinstance(x, str):
        return Fraction(x)
    return x


@dataclass(frozen=True)
class Layer:
    """One layer: strength ``g * l**(-p)`` and width scale ``w``."""

    g: Number
    p: Number = 0
    w: Number = 1

    def __post_init__(self):
        for name in ("g", "p", "w"):
            object.__setattr__(self, name, _as_number(getattr(self, name)))
        if not math.isfinite(float(self.g)):
            raise ValueError(f"strength coefficient must be finite, got {self.g}")
        if self.p < 0:
            raise ValueError(f"strength exponent must be >= 0, got {self.p}")
        if not self.w > 0:
            raise ValueError(f"width scale must be positive, got {self.w}")

    def strength(self, l: float) -> float:
        return float(self.g) * float(l) ** (-float(self.p))


@dataclass(frozen=True)
class StructureSpec:
    layers: tuple[Layer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("a structure needs at least one layer")
        object.__setattr__(self, "layers", layers)

    @classmethod
    def of(cls, *layers) -> "StructureSpec":
        """Build from Layer objects or (g, p, w) tuples."""
        return cls(tuple(l if isinstance(l, Layer) else Layer(*l) for l in layers))

    def __len__(self):
        return len(self.layers)

    def layer(self, i: int) -> Layer:
        """Layer by 1-based label."""
        _check_label(i, len(self.layers))
        return self.layers[i - 1]


@dataclass(frozen=True)
class PathSpec:
    """Widths ``l_i(eps) = w_i * eps**e_i``; the ``w_i`` come from the layers."""

    exponents: tuple[Number, ...]

    def __post_init__(self):
        exps = tuple(_as_number(e) for e in self.exponents)
        if not exps:
            raise ValueError("a path needs at least one exponent")
        if any(not e > 0 for e in exps):
            raise ValueError(f"path exponents must be positive, got {exps}")
        object.__setattr__(self, "exponents", exps)

    @classmethod
    def linear(cls, n: int) -> "PathSpec":
        return cls((1,) * n)

    def exponent(self, i: int) -> Number:
        _check_label(i, len(self.exponents))
        return self.exponents[i - 1]


def _check_label(i: int, n: int):
    if not 1 <= i <= n:
        raise IndexError(f"layer label {i} outside 1..{n}")


class StrengthKind(enum.Enum):
    REGULAR = "G0"  # V*l -> alpha, delta-like
    ADJOINT = "G-G0"  # V*l -> inf but |V|^(1/2)*l -> 0
    PRIME = "G'"  # |V|^(1/2)*l -> c > 0
    SIGMA = "G^sigma"  # |V|*l^(1+1/sigma) -> c > 0, a subset of ADJOINT


@dataclass(frozen=True)
class StrengthClass:
    """Membership of one strength function in the regular/adjoint/prime sets.

    ``alpha`` is set for REGULAR, ``s`` (the limit of q*l) for PRIME, and
    ``sigma``/``c`` for SIGMA.  ``root_limit`` is the raw limit of
    ``|V|**0.5 * l``.
    """

    kind: StrengthKind
    alpha: float = 0.0
    s: complex = 0j
    sigma: float | None = None
    c: float | None = None
    root_limit: float = 0.0

    @classmethod
    def regular(cls, alpha=0.0):
        return cls(StrengthKind.REGULAR, alpha=alpha)

    @classmethod
    def adjoint(cls):
        return cls(StrengthKind.ADJOINT)

    @classmethod
    def prime(cls, s):
        s = complex(s)
        return cls(StrengthKind.PRIME, s=s, root_limit=abs(s))

    @classmethod
    def sigma_set(cls, sigma, c=1.0):
        return cls(StrengthKind.SIGMA, sigma=sigma, c=c)

    @property
    def is_regular(self) -> bool:
        return self.kind is StrengthKind.REGULAR

    @property
    def is_prime(self) -> bool:
        return self.kind is StrengthKind.PRIME

    @property
    def is_adjoint(self) -> bool:
        """True for every member of G minus G0, including the sigma subsets."""
        return self.kind in (StrengthKind.ADJOINT, StrengthKind.SIGMA)

    @property
    def short(self) -> str:
        return {"G0": "G0", "G-G0": "G", "G'": "G'", "G^sigma": "Gs"}[self.kind.value]


def limit_phase(g) -> complex:
    """Limit of q*l for a p = 2 layer, branch Im >= 0 (imaginary for barriers)."""
    return cmath.sqrt(complex(-float(g)))


def classify_strength(layer: Layer) -> StrengthClass:
    g, p = layer.g, layer.p
    if g == 0 or compare(p, 1) < 0:
        return StrengthClass.regular(0.0)
    if compare(p, 1) == 0:
        return StrengthClass.regular(float(g))
    if compare(p, 2) < 0:
        sigma = 1 / (p - 1) if _is_exact(p) else 1.0 / (float(p) - 1.0)
        return StrengthClass.sigma_set(sigma, abs(float(g)))
    if compare(p, 2) == 0:
        return StrengthClass.prime(limit_phase(g))
    raise ExponentOutOfRange(
        f"strength exponent p={p} > 2: |V|^(1/2) l diverges, layer phase is unbounded"
    )


def classify_structure(structure: StructureSpec) -> list[StrengthClass]:
    return [classify_strength(layer) for layer in structure.layers]


class Region(enum.Enum):
    P = "P"
    L1 = "L1"
    L2 = "L2"
    S = "S"
    INVALID = "invalid"


def classify_region(mu: Number, nu: Number) -> Region:
    """Locate (mu, nu) of the two-layer power-law family on the triangle."""
    mu, nu = _as_number(mu), _as_number(nu)
    if compare(1 - mu + nu, 0) <= 0:
        return Region.INVALID
    if compare(mu, 2) == 0:
        if compare(nu, 2) == 0:
            return Region.P
        if compare(nu, 2) > 0:
            return Region.L2
        return Region.INVALID
    if compare(mu, 1) > 0 and compare(mu, 2) < 0:
        edge = compare(nu, 2 * (mu - 1))
        if edge == 0:
            return Region.L1
        if edge > 0:
            return Region.S
    return Region.INVALID


def region_exponents(mu: Number, nu: Number) -> tuple[Number, Number]:
    """Strength exponents (p_i, p_j) of the pair ``l_i**-mu``, ``l_j**(-nu/(1-mu+nu))``."""
    mu, nu = _as_number(mu), _as_number(nu)
    return mu, nu / (1 - mu + nu)


# -- pencils ---------------------------------------------------------------


class PencilKind(enum.Enum):
    VANISHING = "Gamma"  # l_i/l_j -> 0
    LINEAR = "Gamma'"  # l_i/l_j -> c > 0, symmetric
    POWER = "Gamma^s"  # l_i**(1/sigma)/l_j -> c > 0
    ADJOINT_VANISHING = "Gamma_V"  # |V_i| l_i l_j -> 0
    ADJOINT = "Gamma'_V"  # |V_i| l_i l_j -> c > 0
    ADJOINT_POWER = "Gamma^s_V"  # |V_i| l_i l_j**(1/sigma) -> c > 0


@dataclass(frozen=True)
class PencilTag:
    kind: PencilKind
    i: int
    j: int
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind is PencilKind.LINEAR and self.i > self.j:
            i, j = self.j, self.i
            object.__setattr__(self, "i", i)
            object.__setattr__(self, "j", j)
        has_sigma = self.kind in (PencilKind.POWER, PencilKind.ADJOINT_POWER)
        object.__setattr__(self, "sigma", float(self.sigma) if has_sigma else 1.0)

    def __str__(self):
        sig = ""
        if self.kind in (PencilKind.POWER, PencilKind.ADJOINT_POWER):
            sig = f"(sigma={self.sigma:g})"
        if self.kind.value.endswith("_V"):
            return f"{self.kind.value[:-2]}_V{self.i},{self.j}{sig}"
        return f"{self.kind.value}_{self.i},{self.j}{sig}"


def _adjoint_exponent(layer: Layer, e_i, e_j, sigma) -> Number:
    """Exponent of eps in |V_i| l_i l_j**(1/sigma) along the path."""
    p = layer.p
    if _is_exact(p, e_i, e_j, sigma):
        return (1 - p) * e_i + Fraction(e_j) / Fraction(sigma)
    return (1 - float(p)) * float(e_i) + float(e_j) / float(sigma)


def pencil_membership(
    structure: StructureSpec, path: PathSpec, i: int, j: int, sigma: Number = 1
) -> set[PencilTag]:
    """All pencil tags the (l_i, l_j) projection of the path belongs to.

    Both orientations of the pair are evaluated, so the result is the same
    set for (i, j) and (j, i).
    """
    n = len(structure)
    if len(path.exponents) != n:
        raise ValueError("path and structure differ in length")
    _check_label(i, n)
    _check_label(j, n)
    if i == j:
        raise IndexError("pencils are defined on faces with i != j")
    if sigma < 1:
        raise ValueError("sigma must be >= 1")
    tags: set[PencilTag] = set()
    for a, b in ((i, j), (j, i)):
        ea, eb = path.exponent(a), path.exponent(b)
        order = compare(ea, eb)
        if order > 0:
            tags.add(PencilTag(PencilKind.VANISHING, a, b))
        elif order == 0:
            tags.add(PencilTag(PencilKind.LINEAR, a, b))
        power = compare(ea, sigma * eb)
        if power == 0:
            tags.add(PencilTag(PencilKind.POWER, a, b, sigma))
        cls = classify_strength(structure.layer(a))
        if cls.is_adjoint and order > 0:
            x1 = compare(_adjoint_exponent(structure.layer(a), ea, eb, 1), 0)
            if x1 > 0:
                tags.add(PencilTag(PencilKind.ADJOINT_VANISHING, a, b))
            elif x1 == 0:
                tags.add(PencilTag(PencilKind.ADJOINT, a, b))
            if compare(_adjoint_exponent(structure.layer(a), ea, eb, sigma), 0) == 0:
                tags.add(PencilTag(PencilKind.ADJOINT_POWER, a, b, sigma))
    return tags


# -- admissibility on faces -------------------------------------------------


@dataclass(frozen=True)
class FaceReport:
    i: int
    j: int
    classes: tuple[str, str]
    row: int
    requirement: str
    passed: bool


@dataclass(frozen=True)
class AdmissibilityReport:
    faces: tuple[FaceReport, ...]

    @property
    def admissible(self) -> bool:
        return all(f.passed for f in self.faces)

    def failed(self) -> list[FaceReport]:
        return [f for f in self.faces if not f.passed]


def _bar_vanishing(ea, eb) -> bool:
    """l_a/l_b -> c >= 0."""
    return compare(ea, eb) >= 0


def _bar_adjoint(layer_a: Layer, ea, eb) -> bool:
    """l_a/l_b -> 0 and |V_a| l_a l_b -> c >= 0."""
    return compare(ea, eb) > 0 and compare(_adjoint_exponent(layer_a, ea, eb, 1), 0) >= 0


def _face_rule(ci: StrengthClass, cj: StrengthClass):
    """(row, requirement text, predicate) for one ordered face i < j."""

    def kind(c):
        return "prime" if c.is_prime else ("adjoint" if c.is_adjoint else "regular")

    table = {
        ("prime", "prime"): (1, "Gamma'_ij", lambda li, lj, ei, ej: compare(ei, ej) == 0),
        ("adjoint", "prime"): (
            2, "bar Gamma_Vi,j or Gamma'_ij",
            lambda li, lj, ei, ej: compare(ei, ej) == 0 or _bar_adjoint(li, ei, ej),
        ),
        ("regular", "prime"): (3, "bar Gamma_ij", lambda li, lj, ei, ej: _bar_vanishing(ei, ej)),
        ("prime", "adjoint"): (
            4, "bar Gamma_Vj,i or Gamma'_ji",
            lambda li, lj, ei, ej: compare(ei, ej) == 0 or _bar_adjoint(lj, ej, ei),
        ),
        ("prime", "regular"): (5, "bar Gamma_ji", lambda li, lj, ei, ej: _bar_vanishing(ej, ei)),
        ("adjoint", "adjoint"): (
            6, "bar Gamma_Vi,j or bar Gamma_Vj,i or Gamma'_ij",
            lambda li, lj, ei, ej: compare(ei, ej) == 0
            or _bar_adjoint(li, ei, ej)
            or _bar_adjoint(lj, ej, ei),
        ),
        ("regular", "adjoint"): (
            7, "bar Gamma_Vj,i or bar Gamma_ij",
            lambda li, lj, ei, ej: _bar_adjoint(lj, ej, ei) or _bar_vanishing(ei, ej),
        ),
        ("adjoint", "regular"): (
            8, "bar Gamma_Vi,j or bar Gamma_ji",
            lambda li, lj, ei, ej: _bar_adjoint(li, ei, ej) or _bar_vanishing(ej, ei),
        ),
        ("regular", "regular"): (9, "any path", lambda li, lj, ei, ej: True),
    }
    return table[(kind(ci), kind(cj))]


def check_squeeze_admissibility(structure: StructureSpec, path: PathSpec) -> AdmissibilityReport:
    """Check, face by face, that the diagonal entries stay finite along the path."""
    n = len(structure)
    if len(path.exponents) != n:
        raise ValueError("path and structure differ in length")
    classes = classify_structure(structure)
    faces = []
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            ci, cj = classes[i - 1], classes[j - 1]
            row, text, ok = _face_rule(ci, cj)
            passed = ok(structure.layer(i), structure.layer(j), path.exponent(i), path.exponent(j))
            faces.append(FaceReport(i, j, (ci.short, cj.short), row, text, bool(passed)))
    return AdmissibilityReport(tuple(faces))
