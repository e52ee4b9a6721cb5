"""Resonance equations: building, evaluating and solving them.

The divergent part of the 21 entry is a sum of single-layer terms ``q_a t_a``
minus chains ``(q_a t_a)(t_b/q_b)(q_c t_c)...`` (the triads and their longer
relatives).  Multiplying by a width (``l_m`` on linear paths, ``l_m**(1/sigma)``
on power paths) and squeezing turns every term into a product of finite limit
parameters.  ``build_equation`` does that bookkeeping symbolically, so the
result can be compared term by term and evaluated for any parameter values.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import InadmissibleConfiguration, UnboundSymbol
from .model import PathSpec, PencilKind, PencilTag, StrengthClass, StructureSpec, compare
from .squeeze import LimitParameters, classify_limit, limit_matrix

POLE_FLANK = 1e6


@dataclass(frozen=True, order=True)
class Symbol:
    """One limit parameter.

    kind is ``tau`` (layer i), ``ratio`` (tau_i / s_i**2, layer i), ``chi``
    (limit of l_i**(1/sigma) / l_j) or ``eta`` (limit of q_i**2 l_i l_j**(1/sigma)).
    """

    kind: str
    i: int
    j: int = 0
    sigma: float = 1.0

    def __str__(self):
        if self.kind in ("tau", "ratio"):
            return f"{self.kind}_{self.i}"
        sig = "" if self.sigma == 1 else f"^{self.sigma:g}"
        return f"{self.kind}{sig}_{self.i},{self.j}"


def tau(i):
    return Symbol("tau", i)


def ratio(i):
    return Symbol("ratio", i)


def chi(i, j, sigma=1.0):
    return Symbol("chi", i, j, float(sigma))


def eta(i, j, sigma=1.0):
    return Symbol("eta", i, j, float(sigma))


@dataclass(frozen=True)
class Monomial:
    sign: int
    factors: tuple[Symbol, ...]

    @classmethod
    def of(cls, *factors: Symbol, sign: int = 1) -> "Monomial":
        return cls(sign, tuple(sorted(factors)))

    def __str__(self):
        body = "*".join(str(f) for f in self.factors) or "1"
        return ("-" if self.sign < 0 else "") + body


@dataclass(frozen=True)
class ResonanceEquation:
    """``sum(left) = sum(right)`` with the paths it is valid on."""

    left: tuple[Monomial, ...]
    right: tuple[Monomial, ...]
    multiplier: int
    sigma: float
    sigma_range: str  # "{1}", "(1,inf)" or "[2,inf)"
    pencils: frozenset[PencilTag]
    family: str
    classes: tuple[str, ...] = field(default=())

    @property
    def symbols(self) -> set[Symbol]:
        return {f for m in self.left + self.right for f in m.factors}

    def terms(self) -> tuple[frozenset, frozenset]:
        """Order-free form for structural comparison."""
        key = lambda m: (m.sign, m.factors)
        return frozenset(map(key, self.left)), frozenset(map(key, self.right))

    def __str__(self):
        def side(ms):
            return " + ".join(str(m) for m in ms).replace("+ -", "- ") or "0"

        return f"{side(self.left)} = {side(self.right)}"


# -- building -----------------------------------------------------------------


def _kind(c: StrengthClass) -> str:
    return "prime" if c.is_prime else ("adjoint" if c.is_adjoint else "regular")


class _Builder:
    def __init__(self, classes, sigma, m):
        self.classes = classes
        self.sigma = float(sigma)
        self.m = m
        self.pencils: set[PencilTag] = set()

    def kind(self, i):
        return _kind(self.classes[i - 1])

    def coupling(self, x: int, y: int, power: bool) -> list[Symbol] | None:
        """Factors of lim (q_x t_x) * l_y**(1/s), s = sigma if power else 1.

        Returns None when the limit is identically zero.
        """
        sig = self.sigma if power else 1.0
        k = self.kind(x)
        if k == "regular":
            return None
        if k == "adjoint":
            if x != y:
                kind = PencilKind.ADJOINT_POWER if power else PencilKind.ADJOINT
                self.pencils.add(PencilTag(kind, x, y, sig))
            return [eta(x, y, sig)]
        if x == y:
            return [tau(x)]
        kind = PencilKind.POWER if power else PencilKind.LINEAR
        a, b = (y, x) if power else (x, y)
        self.pencils.add(PencilTag(kind, a, b, sig))
        return [chi(y, x, sig), tau(x)]


def _reject(message, rule):
    raise InadmissibleConfiguration(message, rule)


def build_equation(classes: Sequence[StrengthClass], sigma=1, multiplier: int | None = None) -> ResonanceEquation:
    """Resonance equation for the given strength classes and multiplier layer.

    ``multiplier`` is a 1-based label.  When omitted, the first layer that can
    serve as one is used.
    """
    classes = tuple(classes)
    n = len(classes)
    if n < 1:
        raise ValueError("need at least one layer")
    if sigma < 1:
        raise ValueError("sigma must be >= 1")
    kinds = [_kind(c) for c in classes]
    singular = [i for i, k in enumerate(kinds, 1) if k != "regular"]
    if not singular:
        _reject("every layer is regular; nothing diverges", "a singular strength is required")
    linear = compare(sigma, 1) == 0

    if linear:
        internal = [i for i in singular if singular[0] < i < singular[-1] and kinds[i - 1] == "adjoint"]
        if internal:
            _reject(
                f"internal layer(s) {internal} are adjoint; no path puts all divergent terms at one rate",
                "on linear paths every internal singular strength must be prime or regular",
            )
        allowed = [i for i in range(1, n + 1) if kinds[i - 1] != "adjoint"]
    else:
        if "adjoint" not in kinds:
            _reject(
                "no adjoint strength: power-path multipliers leave the prime terms divergent",
                "on power paths at least one strength must be adjoint",
            )
        allowed = [
            i
            for i in range(1, n + 1)
            if kinds[i - 1] == "regular"
            or (classes[i - 1].kind.name == "SIGMA" and compare(classes[i - 1].sigma, sigma) == 0)
        ]
    if multiplier is None:
        if not allowed:
            _reject("no layer can serve as multiplier", "multiplier class")
        m = allowed[0]
    else:
        m = multiplier
        if not 1 <= m <= n:
            raise IndexError(f"multiplier {m} outside 1..{n}")
        if m not in allowed:
            need = "prime or regular" if linear else f"regular or in the sigma={float(sigma):g} subset"
            _reject(f"layer {m} ({classes[m - 1].short}) cannot be the multiplier", f"multiplier must be {need}")

    b = _Builder(classes, sigma, m)
    left = []
    for a in range(1, n + 1):
        factors = b.coupling(a, m, not linear)
        if factors is not None:
            left.append(Monomial.of(*factors))

    right = []
    dropped = False
    for size in range(3, n + 1, 2):
        pairs = (size - 1) // 2
        for idx in combinations(range(1, n + 1), size):
            heads = [idx[2 * p] for p in range(pairs)] + [idx[-1]]
            mids = [idx[2 * p + 1] for p in range(pairs)]
            if any(kinds[h - 1] == "regular" for h in heads):
                continue
            if not linear and any(kinds[x - 1] != "prime" for x in mids):
                dropped = True
                continue
            lengths = _place_lengths(heads, mids, m, linear, kinds)
            factors = []
            for h, (y, power) in zip(heads, lengths):
                factors += b.coupling(h, y, power)
            factors += [ratio(x) for x in mids if kinds[x - 1] == "prime"]
            right.append(Monomial.of(*factors, sign=(-1) ** (pairs + 1)))

    if linear:
        sigma_range = "{1}"
    elif dropped:
        if sigma < 2:
            _reject(
                f"sigma={float(sigma):g} in (1,2) with a non-prime chain middle layer",
                "chains with non-prime middle strength are only described for sigma >= 2",
            )
        sigma_range = "[2,inf)"
    else:
        sigma_range = "(1,inf)"
    family = ("linear-path" if linear else "power-path") + f", N={n}, multiplier {m}"
    return ResonanceEquation(
        tuple(left),
        tuple(right),
        m,
        float(sigma),
        sigma_range,
        frozenset(b.pencils),
        family,
        tuple(c.short for c in classes),
    )


def _place_lengths(heads, mids, m, linear, kinds):
    """Which width multiplies each (q t) factor of a chain.

    Each middle layer contributes its own width; the multiplier width goes to
    one head and the middle widths shift around it.
    """
    count = len(heads)
    if m in heads:
        slot = heads.index(m)
    elif linear:
        slot = count - 1
    elif kinds[heads[-1] - 1] == "adjoint" and kinds[heads[0] - 1] == "prime":
        slot = 0
    else:
        slot = count - 1
    out = []
    for p in range(count):
        if p < slot:
            out.append((mids[p], False))
        elif p == slot:
            out.append((m, not linear))
        else:
            out.append((mids[p - 1], False))
    return out


def equation_family(classes, sigma=1, multipliers=None) -> list[ResonanceEquation]:
    """One equation per admissible multiplier."""
    n = len(classes)
    labels = multipliers or range(1, n + 1)
    out = []
    for m in labels:
        try:
            out.append(build_equation(classes, sigma, m))
        except InadmissibleConfiguration:
            if multipliers:
                raise
    return out


# -- evaluation -----------------------------------------------------------------

Values = Mapping[str, complex]


def _value(sym: Symbol, params: LimitParameters | None, free: Values):
    key = str(sym)
    if key in free:
        return complex(free[key])
    if sym.kind in ("tau", "ratio"):
        s_key = f"s{sym.i}"
        if s_key in free:
            s = complex(free[s_key])
            if sym.kind == "tau":
                return s * cmath.tan(s)
            return cmath.tan(s) / s if s != 0 else 1.0
    if params is None:
        raise UnboundSymbol(key)
    if sym.kind == "tau":
        return params.tau(sym.i)
    if sym.kind == "ratio":
        return params.ratio(sym.i)
    if sym.kind == "chi":
        return complex(params.chi(sym.i, sym.j, sym.sigma))
    return complex(params.eta(sym.i, sym.j, sym.sigma))


def _side(monomials, params, free):
    total = 0j
    for mono in monomials:
        term = complex(mono.sign)
        for f in mono.factors:
            term *= _value(f, params, free)
        total += term
    return total


def residual(eq: ResonanceEquation, params: LimitParameters | None = None, free: Values | None = None) -> float:
    """Left side minus right side.

    ``free`` overrides parameters by symbol name (``"chi_2,1"``) or fixes a
    layer phase via ``"s<i>"``, from which tau and the tau/s**2 ratio follow.
    """
    free = free or {}
    return (_side(eq.left, params, free) - _side(eq.right, params, free)).real


def _bisect(f, lo, hi, flo, xtol):
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if fm == 0:
            return mid, mid, mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi), lo, hi


def find_roots(f: Callable[[float], float], bracket, n_scan: int = 1024, max_roots: int | None = None) -> list[float]:
    """Sign-change roots of a scalar function, skipping poles."""
    lo, hi = map(float, bracket)
    if not lo < hi:
        raise ValueError(f"empty bracket {bracket}")
    grid = np.linspace(lo, hi, n_scan)
    vals = [f(x) for x in grid]
    roots = []
    for k, (a, c, fa, fc) in enumerate(zip(grid[:-1], grid[1:], vals[:-1], vals[1:])):
        if fa == 0 and k > 0:
            roots.append(float(a))
        elif fa * fc < 0 and math.isfinite(fa) and math.isfinite(fc):
            # refine to machine precision; the limit squeeze needs it
            x, left, right = _bisect(f, float(a), float(c), fa, 0.0)
            if min(abs(f(left)), abs(f(right))) > POLE_FLANK:
                continue
            roots.append(x)
        if max_roots is not None and len(roots) >= max_roots:
            break
    return roots


def solve(
    eq: ResonanceEquation,
    free_symbol: str | Callable[[float], Values],
    bracket,
    params: LimitParameters | Callable[[float], LimitParameters] | None = None,
    fixed: Values | None = None,
    n_scan: int = 1024,
    max_roots: int | None = None,
) -> list[float]:
    """Roots in one free variable x.

    ``free_symbol`` is either a key understood by ``residual`` (set to x) or a
    function mapping x to a dict of such keys.  ``params`` may also depend on x.
    """
    fixed = dict(fixed or {})
    at = params if callable(params) else (lambda x: params)
    if callable(free_symbol):
        def f(x):
            return residual(eq, at(x), {**fixed, **free_symbol(x)})
    else:
        def f(x):
            return residual(eq, at(x), {**fixed, free_symbol: x})
    return find_roots(f, bracket, n_scan, max_roots)


def verify_equivalence(
    equations: Sequence[ResonanceEquation],
    free_symbol,
    bracket,
    params: LimitParameters | None = None,
    fixed: Values | None = None,
    tol: float = 1e-8,
) -> bool:
    """True when all equations have the same roots in the bracket."""
    root_sets = [solve(eq, free_symbol, bracket, params, fixed) for eq in equations]
    first = root_sets[0]
    for other in root_sets[1:]:
        if len(other) != len(first):
            return False
        if any(abs(a - b) > tol for a, b in zip(first, other)):
            return False
    return True


# -- checking against the squeeze ---------------------------------------------------


def scaled_structure(base: StructureSpec, free_layers: Sequence[int]) -> Callable[[float], StructureSpec]:
    """x -> base with g_i multiplied by x**2 for the listed layers.

    For prime layers this scales the phase s_i by x.
    """
    free = set(free_layers)

    def make(x):
        layers = []
        for i, layer in enumerate(base.layers, 1):
            if i in free:
                layer = type(layer)(float(layer.g) * x * x, layer.p, layer.w)
            layers.append(layer)
        return StructureSpec(tuple(layers))

    return make


def scaled_phases(base: StructureSpec, free_layers: Sequence[int]) -> Callable[[float], dict]:
    """x -> {"s<i>": s_i(x)} matching ``scaled_structure``."""

    def make(x):
        out = {}
        for i in free_layers:
            layer = base.layer(i)
            if compare(layer.p, 2) == 0:
                out[f"s{i}"] = cmath.sqrt(-float(layer.g)) * x
        return out

    return make


@dataclass(frozen=True)
class CrossCheck:
    root: float
    offset: float
    at_root: str
    below: str
    above: str

    @property
    def passed(self) -> bool:
        return self.at_root == "resonant" and self.below == "dirichlet" and self.above == "dirichlet"


def _verdict(structure, path, E, schedule) -> str:
    try:
        return classify_limit(limit_matrix(structure, path, E, schedule)).kind
    except Exception as exc:  # report, do not abort the sweep
        return f"error: {type(exc).__name__}"


def cross_validate(
    eq: ResonanceEquation,
    root: float,
    structure_template: Callable[[float], StructureSpec],
    path: PathSpec,
    E: float = 1.0,
    offset: float = 0.1,
    schedule=None,
) -> CrossCheck:
    """Squeeze the structure at the root and at root +- offset."""
    return CrossCheck(
        root,
        offset,
        _verdict(structure_template(root), path, E, schedule),
        _verdict(structure_template(root - offset), path, E, schedule),
        _verdict(structure_template(root + offset), path, E, schedule),
    )
