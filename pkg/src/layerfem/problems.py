"""Catalog of singularly perturbed two-point boundary value problems.

Every entry carries a manufactured exact solution u = S + (boundary layer
terms), so that discretization errors can be measured against a closed form.
The right hand side f is produced by applying the strong operator to u, and
boundary data (Dirichlet values, slopes, moments, fluxes) is read off u as
well.

Catalog ids and strong operators on (0, 1):

    CD2          -eps u'' - b u' + c u = f     u'(0), u(1) given; layer a=1 at 0
    RD2          -eps^2 u'' + c u = f          u'(0), u'(1) given; a=1 both ends
    CD4-HINGED   eps u'''' + b u''' + L2 u     u, u'' given at ends; a=2 at 0
    CD4-XWEAK    same operator                 hinged data; a=3 at 0
    CD4-CLAMPED  same operator                 u, u' given at ends; a=1 at 0
    RD4-HINGED   eps^2 u'''' + L2 u            hinged data; a=2 both ends
    RD4-CLAMPED  same operator                 clamped data; a=1 both ends
    MIX4         eps^2 u'''' - (b u')' + d u   clamped data; a=1 both ends
    MIX4-HINGED  same operator                 hinged data; a=2 both ends

with L2 u = -(p u')' + q u' + r u.  A layer term with amplitude exponent a
on the left is the function eps^a * exp(-x/eps); its k-th derivative at the
boundary has magnitude exactly eps^(a-k).  Defaults: b = c = d = 2, p = 1,
q = 0, r = 1 and S(x) = cos(pi x / 2).

Problems are regular perturbations of non-degenerate reduced operators, so
eps is capped at EPS_MAX = 0.1; larger values are rejected rather than
silently computed in a regime the error model says nothing about.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

EPS_MAX = 0.1
DELTA_DEFAULT = 0.25   # required margin in d - b''/2 > delta for MIX4 entries
_VALIDATION_POINTS = 1001


class CatalogError(ValueError):
    """Unknown catalog id."""


class ProblemError(ValueError):
    """Rejected problem data: eps out of range or coefficient validation."""


@dataclass(frozen=True)
class LayerTerm:
    """Boundary layer component eps^a * exp(-x/eps) (or mirrored at x=1)."""

    amplitude_exponent: float
    side: str  # 'left' or 'right'

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ProblemError(f"layer side must be 'left' or 'right', got {self.side!r}")

    def eval(self, x, j: int, eps: float):
        """j-th derivative of the layer term at x (vectorized)."""
        x = np.asarray(x, dtype=float)
        a = self.amplitude_exponent
        if self.side == "left":
            sign = -1.0 if j % 2 else 1.0
            return sign * eps ** (a - j) * np.exp(-x / eps)
        return eps ** (a - j) * np.exp(-(1.0 - x) / eps)


@dataclass(frozen=True)
class Coefficient:
    """Scalar coefficient with the two derivatives validation/assembly need."""

    f: Callable
    df: Callable
    ddf: Callable
    constant: bool

    @classmethod
    def make(cls, value) -> "Coefficient":
        if isinstance(value, Coefficient):
            return value
        if np.isscalar(value):
            v = float(value)
            zero = lambda x: np.zeros(np.shape(x), dtype=float)  # noqa: E731
            return cls(lambda x, v=v: np.full(np.shape(x), v, dtype=float), zero, zero, True)
        if isinstance(value, tuple) and len(value) == 3:
            f, df, ddf = value
            return cls(f, df, ddf, False)
        raise ProblemError(
            "coefficient override must be a number or a (f, f', f'') triple of callables"
        )

    def __call__(self, x):
        return self.f(x)


def default_smooth(x, j: int):
    """j-th derivative of S(x) = cos(pi x / 2)."""
    x = np.asarray(x, dtype=float)
    w = 0.5 * math.pi
    return w ** j * np.cos(w * x + 0.5 * math.pi * j)


def zero_smooth(x, j: int):
    return np.zeros(np.shape(x), dtype=float)


@dataclass(frozen=True)
class ExactSolution:
    """Manufactured solution: smooth part plus decaying layer terms."""

    smooth: Callable   # smooth(x, j) -> j-th derivative
    layers: tuple
    eps: float

    def __call__(self, x, j: int = 0):
        val = np.asarray(self.smooth(x, j), dtype=float)
        for term in self.layers:
            val = val + term.eval(x, j, self.eps)
        return val


# Per-id structure: operator order, mixed flag, eps power in the leading term,
# which coefficients appear, boundary condition kind at (left, right),
# default layer terms, validation conditions, default norm preset.
_CATALOG = {
    "CD2": dict(order=2, mixed=False, m=1, coeffs=("b", "c"),
                bc=("neumann", "dirichlet"), layers=((1, "left"),),
                checks=("b>1",), norm="CD2_ENERGY"),
    "RD2": dict(order=2, mixed=False, m=2, coeffs=("c",),
                bc=("neumann", "neumann"), layers=((1, "left"), (1, "right")),
                checks=("c>1",), norm="RD2_ENERGY"),
    "CD4-HINGED": dict(order=4, mixed=False, m=1, coeffs=("b", "p", "q", "r"),
                       bc=("hinged", "hinged"), layers=((2, "left"),),
                       checks=("b>1", "p>0"), norm="CD4_ENERGY"),
    "CD4-XWEAK": dict(order=4, mixed=False, m=1, coeffs=("b", "p", "q", "r"),
                      bc=("hinged", "hinged"), layers=((3, "left"),),
                      checks=("b>1", "p>0"), norm="CD4_ENERGY"),
    "CD4-CLAMPED": dict(order=4, mixed=False, m=1, coeffs=("b", "p", "q", "r"),
                        bc=("clamped", "clamped"), layers=((1, "left"),),
                        checks=("b>1", "p>0"), norm="CD4_ENERGY"),
    "RD4-HINGED": dict(order=4, mixed=False, m=2, coeffs=("p", "q", "r"),
                       bc=("hinged", "hinged"), layers=((2, "left"), (2, "right")),
                       checks=("p>0",), norm="RD4_ENERGY"),
    "RD4-CLAMPED": dict(order=4, mixed=False, m=2, coeffs=("p", "q", "r"),
                        bc=("clamped", "clamped"), layers=((1, "left"), (1, "right")),
                        checks=("p>0",), norm="RD4_ENERGY"),
    "MIX4": dict(order=4, mixed=True, m=2, coeffs=("b", "d"),
                 bc=("clamped", "clamped"), layers=((1, "left"), (1, "right")),
                 checks=("d-b''/2>delta",), norm="MIXED"),
    "MIX4-HINGED": dict(order=4, mixed=True, m=2, coeffs=("b", "d"),
                        bc=("hinged", "hinged"), layers=((2, "left"), (2, "right")),
                        checks=("d-b''/2>delta",), norm="MIXED"),
}

_DEFAULT_COEFFS = {"b": 2.0, "c": 2.0, "d": 2.0, "p": 1.0, "q": 0.0, "r": 1.0}

# Recommended mesh pairings per id: family plus transition exponent rule.
# Exponent rules are functions of the polynomial degree k where they depend
# on it; None means the family needs no exponent.
RECOMMENDED = {
    "CD2": dict(family=lambda k: "uniform" if k == 1 else "two-region",
                tau_exp=lambda k: None if k == 1 else (k - 1) / k),
    "RD2": dict(family=lambda k: "uniform" if k == 1 else "two-region",
                tau_exp=lambda k: None if k == 1 else (k - 1) / k),
    "CD4-HINGED": dict(family=lambda k: "two-region", tau_exp=lambda k: 0.5),
    "CD4-XWEAK": dict(family=lambda k: "uniform", tau_exp=lambda k: None),
    "CD4-CLAMPED": dict(family=lambda k: "shishkin", tau_exp=lambda k: None),
    "RD4-HINGED": dict(family=lambda k: "two-region", tau_exp=lambda k: 0.5),
    "RD4-CLAMPED": dict(family=lambda k: "two-region", tau_exp=lambda k: 0.75),
    "MIX4": dict(family=lambda k: "two-region", tau_exp=lambda k: 1.0 - 1.0 / (2 * k)),
    "MIX4-HINGED": dict(family=lambda k: "uniform" if k == 1 else "two-region",
                        tau_exp=lambda k: None if k == 1 else 1.0 - 3.0 / (2 * k)),
}


@dataclass(frozen=True)
class Problem:
    """One catalog problem instance at a fixed eps."""

    id: str
    order: int          # 2 or 4
    mixed: bool         # True for the two-field entries
    eps: float
    eps_power: int      # power of eps on the leading weak-form term
    coeffs: dict        # name -> Coefficient
    bc: tuple           # boundary kind at (left, right)
    exact: ExactSolution
    delta: float = DELTA_DEFAULT

    @property
    def layers(self):
        return self.exact.layers

    @property
    def norm_preset(self) -> str:
        return _CATALOG[self.id]["norm"]

    def u(self, x, j: int = 0):
        """Exact solution derivative of order j (j <= 4)."""
        return self.exact(x, j)

    def w_exact(self, x, j: int = 0):
        """Exact auxiliary field w = eps * u'' of the two-field formulation."""
        return self.eps * self.exact(x, j + 2)

    def rhs(self, x):
        return manufacture_rhs(self, x)


def catalog_ids():
    return tuple(_CATALOG)


def make_problem(id: str, eps: float, overrides: dict | None = None,
                 delta: float = DELTA_DEFAULT) -> Problem:
    """Build a catalog problem, validating eps and the coefficient conditions.

    overrides may replace coefficients (number or (f, f', f'') triple),
    'smooth' (callable(x, j), or 0 for none) and 'layers' (sequence of
    LayerTerm or (amplitude_exponent, side) pairs; empty removes the layers).
    """
    if id not in _CATALOG:
        raise CatalogError(f"unknown problem id {id!r}; known ids: {', '.join(_CATALOG)}")
    if not (0.0 < eps <= EPS_MAX):
        raise ProblemError(f"eps must lie in (0, {EPS_MAX}], got {eps!r}")
    entry = _CATALOG[id]
    overrides = dict(overrides or {})

    delta = float(overrides.pop("delta", delta))
    smooth = overrides.pop("smooth", default_smooth)
    if smooth is None or (np.isscalar(smooth) and smooth == 0):
        smooth = zero_smooth

    if "layers" in overrides:
        raw = overrides.pop("layers")
        layers = tuple(t if isinstance(t, LayerTerm) else LayerTerm(*t) for t in raw)
    else:
        layers = tuple(LayerTerm(a, side) for a, side in entry["layers"])

    coeffs = {}
    for name in entry["coeffs"]:
        coeffs[name] = Coefficient.make(overrides.pop(name, _DEFAULT_COEFFS[name]))
    if overrides:
        raise ProblemError(f"unknown overrides for {id}: {', '.join(sorted(overrides))}")

    p = Problem(id=id, order=entry["order"], mixed=entry["mixed"], eps=float(eps),
                eps_power=entry["m"], coeffs=coeffs, bc=entry["bc"],
                exact=ExactSolution(smooth, layers, float(eps)), delta=delta)
    violations = validate(p)
    if violations:
        raise ProblemError(f"{id} coefficient validation failed: " + "; ".join(violations))
    return p


def validate(p: Problem) -> list:
    """Check the coercivity conditions on a 1001-point grid.

    Returns a list of human-readable violation messages, one per condition,
    each naming the first offending x.
    """
    x = np.linspace(0.0, 1.0, _VALIDATION_POINTS)
    out = []
    for cond in _CATALOG[p.id]["checks"]:
        if cond == "b>1":
            vals = p.coeffs["b"](x) - 1.0
        elif cond == "c>1":
            vals = p.coeffs["c"](x) - 1.0
        elif cond == "p>0":
            vals = p.coeffs["p"](x)
        elif cond == "d-b''/2>delta":
            vals = p.coeffs["d"](x) - 0.5 * p.coeffs["b"].ddf(x) - p.delta
        else:  # pragma: no cover - catalog is static
            raise AssertionError(cond)
        bad = np.nonzero(~(vals > 0.0))[0]
        if bad.size:
            i = bad[0]
            out.append(f"{cond} fails at x={x[i]:g} (margin={vals[i]:g})")
    return out


def exact_eval(p: Problem, x, j: int = 0):
    """Exact solution derivative of order j at x."""
    if not 0 <= j <= 4:
        raise ValueError(f"derivative order must be 0..4, got {j}")
    return p.exact(x, j)


def manufacture_rhs(p: Problem, x):
    """Apply the strong operator of p to its exact solution."""
    x = np.asarray(x, dtype=float)
    u = p.exact
    epsm = p.eps ** p.eps_power
    if p.order == 2:
        f = -epsm * u(x, 2) + p.coeffs["c"](x) * u(x, 0)
        if "b" in p.coeffs:
            f = f - p.coeffs["b"](x) * u(x, 1)
        return f
    if p.mixed:
        b, d = p.coeffs["b"], p.coeffs["d"]
        # divergence form: -(b u')' = -b u'' - b' u'
        return (epsm * u(x, 4) - b(x) * u(x, 2) - b.df(x) * u(x, 1)
                + d(x) * u(x, 0))
    pc, q, r = p.coeffs["p"], p.coeffs["q"], p.coeffs["r"]
    f = epsm * u(x, 4) - pc(x) * u(x, 2) - pc.df(x) * u(x, 1) \
        + q(x) * u(x, 1) + r(x) * u(x, 0)
    if "b" in p.coeffs:
        f = f + p.coeffs["b"](x) * u(x, 3)
    return f
