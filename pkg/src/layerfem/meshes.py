"""Mesh families on [0,1] for layer-adapted finite element runs.

Four generators:

    uniform_mesh(n)                      equispaced, n elements
    two_region_mesh(eps, H, tau_exp, alpha, sides)
                                         fine step ~ alpha*H*eps^tau_exp on
                                         [0, tau], tau = eps^tau_exp; coarse
                                         step <= H on the remainder
    shishkin_mesh(eps, H, tau0, sides)   tau = min(tau0*eps*ln(1/H), 1/4),
                                         ceil(1/H) fine intervals per side
    graded_tail_mesh(eps, H, tau_exp, alpha)
                                         two-region fine part, then the tail
                                         grows geometrically x -> (1+H)x

The transition point tau is always an exact mesh node: the fine interval
count is rounded up and the fine step shrunk accordingly, and each region is
built with its own linspace.  Layer-adapted meshes cap tau at 1/4 per
refined side so a two-sided mesh keeps a coarse middle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problems import EPS_MAX

_MIN_ELEMENT = 1e-15


class MeshError(ValueError):
    """Rejected mesh parameters."""


@dataclass(frozen=True)
class Mesh:
    """Immutable 1D mesh: strictly increasing nodes from 0 to 1 plus metadata."""

    nodes: np.ndarray
    family: str
    H: float
    tau_left: float | None = None
    tau_right: float | None = None
    h: float | None = None
    alpha: float | None = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 2:
            raise MeshError("mesh needs at least two nodes")
        if nodes[0] != 0.0 or nodes[-1] != 1.0:
            raise MeshError("mesh must span exactly [0, 1]")
        lengths = np.diff(nodes)
        if not np.all(lengths > _MIN_ELEMENT):
            raise MeshError("mesh nodes must be strictly increasing with elements > 1e-15")

    @property
    def n_elements(self) -> int:
        return self.nodes.size - 1

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.nodes)

    def dump(self) -> str:
        """CSV node listing with a meta comment line."""
        meta = [f"family={self.family}"]
        if self.tau_left is not None:
            meta.append(f"tau={self.tau_left:.17g}")
        if self.tau_right is not None:
            meta.append(f"tau_right={self.tau_right:.17g}")
        if self.h is not None:
            meta.append(f"h={self.h:.17g}")
        meta.append(f"H={self.H:.17g}")
        lines = ["# meta: " + ",".join(meta), "index,x"]
        lines += [f"{i},{x:.17g}" for i, x in enumerate(self.nodes)]
        return "\n".join(lines) + "\n"


def _parse_sides(sides) -> tuple:
    if isinstance(sides, str):
        if sides == "both":
            return ("left", "right")
        if sides in ("left", "right"):
            return (sides,)
        raise MeshError(f"sides must be 'left', 'right' or 'both', got {sides!r}")
    out = tuple(sides)
    if not out or any(s not in ("left", "right") for s in out) or len(set(out)) != len(out):
        raise MeshError(f"sides must name 'left' and/or 'right' once each, got {sides!r}")
    return out


def uniform_mesh(n: int) -> Mesh:
    """n equal elements."""
    if n < 1:
        raise MeshError(f"element count must be >= 1, got {n}")
    return Mesh(np.linspace(0.0, 1.0, n + 1), family="uniform", H=1.0 / n)


def _layered_nodes(tau_left, nf_left, tau_right, nf_right, H):
    """Assemble piecewise-linspace nodes for fine/coarse/fine regions."""
    pieces = []
    left_edge = 0.0
    if tau_left:
        pieces.append(np.linspace(0.0, tau_left, nf_left + 1))
        left_edge = tau_left
    right_edge = 1.0 - tau_right if tau_right else 1.0
    span = right_edge - left_edge
    n_c = max(1, math.ceil(span / H - 1e-12))
    coarse = np.linspace(left_edge, right_edge, n_c + 1)
    pieces.append(coarse if not pieces else coarse[1:])
    if tau_right:
        pieces.append(np.linspace(right_edge, 1.0, nf_right + 1)[1:])
    return np.concatenate(pieces)


def _two_region_nodes(family, H, tau, alpha, sides, n_f):
    sides = _parse_sides(sides)
    if tau > 0.25:
        raise MeshError(
            f"transition point tau={tau:g} exceeds 1/4; eps too large for a "
            f"layer-adapted mesh, use a uniform mesh instead"
        )
    tau_l = tau if "left" in sides else 0.0
    tau_r = tau if "right" in sides else 0.0
    nodes = _layered_nodes(tau_l, n_f, tau_r, n_f, H)
    return Mesh(nodes, family=family, H=H,
                tau_left=tau_l or None, tau_right=tau_r or None,
                h=tau / n_f, alpha=alpha)


def two_region_mesh(eps: float, H: float, tau_exp: float, alpha: float = 1.0,
                    sides="left") -> Mesh:
    """Fine mesh of step ~ alpha*H*eps^tau_exp on [0, eps^tau_exp], coarse beyond.

    The fine interval count is ceil(1/(alpha*H)) so the fine region ends at
    tau exactly; with alpha=1 that is ceil(1/H) intervals of width tau*H
    (up to the ceiling adjustment).
    """
    if not (0.0 < eps <= EPS_MAX):
        raise MeshError(f"eps must lie in (0, {EPS_MAX}], got {eps!r}")
    if not (0.0 < H <= 0.25):
        raise MeshError(f"H must lie in (0, 1/4], got {H!r}")
    if alpha <= 0.0:
        raise MeshError(f"alpha must be positive, got {alpha!r}")
    tau = eps ** tau_exp
    n_f = math.ceil(1.0 / (alpha * H) - 1e-12)
    return _two_region_nodes("two-region", H, tau, alpha, sides, n_f)


def shishkin_mesh(eps: float, H: float, tau0: float = 2.0, sides="left") -> Mesh:
    """Two-region layout with tau = min(tau0*eps*ln(1/H), 1/4), ceil(1/H) fine intervals."""
    if not (0.0 < eps <= EPS_MAX):
        raise MeshError(f"eps must lie in (0, {EPS_MAX}], got {eps!r}")
    if not (0.0 < H < 1.0):
        raise MeshError(f"H must lie in (0, 1), got {H!r}")
    if tau0 <= 0.0:
        raise MeshError(f"tau0 must be positive, got {tau0!r}")
    tau = min(tau0 * eps * math.log(1.0 / H), 0.25)
    n_f = math.ceil(1.0 / H - 1e-12)
    return _two_region_nodes("shishkin", H, tau, None, sides, n_f)


def graded_tail_mesh(eps: float, H: float, tau_exp: float, alpha: float = 1.0) -> Mesh:
    """Two-region fine part on the left, then geometric tail x_{m+1} = (1+H)x_m.

    The last node is clamped to 1; if clamping leaves a final interval
    shorter than 1e-3*H*(previous length), it is merged with its
    predecessor.
    """
    fine = two_region_mesh(eps, H, tau_exp, alpha, sides="left")
    tau = fine.tau_left
    nodes = list(fine.nodes[fine.nodes <= tau * (1.0 + 1e-12)])
    x = tau
    while x < 1.0:
        x *= 1.0 + H
        nodes.append(min(x, 1.0))
    if len(nodes) >= 3 and nodes[-1] - nodes[-2] < 1e-3 * H * (nodes[-2] - nodes[-3]):
        del nodes[-2]
    return Mesh(np.asarray(nodes), family="graded", H=H,
                tau_left=tau, h=fine.h, alpha=alpha)


_FAMILIES = ("uniform", "two-region", "shishkin", "graded")


def make_mesh(family: str, H: float, eps: float | None = None,
              tau_exp: float | None = None, alpha: float = 1.0,
              tau0: float = 2.0, sides="left") -> Mesh:
    """Dispatch on family name; uniform needs only H, the rest need eps."""
    if family == "uniform":
        return uniform_mesh(math.ceil(1.0 / H - 1e-12))
    if family not in _FAMILIES:
        raise MeshError(f"unknown mesh family {family!r}; known: {', '.join(_FAMILIES)}")
    if eps is None:
        raise MeshError(f"mesh family {family!r} requires eps")
    if family == "shishkin":
        return shishkin_mesh(eps, H, tau0, sides)
    if tau_exp is None:
        raise MeshError(f"mesh family {family!r} requires tau_exp")
    if family == "two-region":
        return two_region_mesh(eps, H, tau_exp, alpha, sides)
    return graded_tail_mesh(eps, H, tau_exp, alpha)
