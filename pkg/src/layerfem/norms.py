"""Error seminorms and the composite eps-weighted norms of the study.

Seminorms |e|_j = (int (e^(j))^2)^(1/2) are integrated element by element
with the layer-seeded adaptive rule from the quadrature module, so a layer
sitting inside one coarse element is still resolved to the requested
tolerance.  Composite norms are weighted sums of seminorms, except the
two-field norm which combines root-sum-square.

Preset names are part of the CLI/CSV interface:

    CD2_ENERGY   eps^(1/2) |.|_1 + |.|_0
    RD2_ENERGY   eps       |.|_1 + |.|_0
    BALANCED     eps^(1/2) |.|_1 + |.|_0
    CD4_ENERGY   eps^(1/2) |.|_2 + |.|_1
    RD4_ENERGY   eps       |.|_2 + |.|_1
    MIXED        (|e_u|_1^2 + ||e_w||_0^2)^(1/2)

For MIXED the seminorm orders index fields, not derivatives of one field:
order 1 is the H1 seminorm of the primal error, order 0 the L2 norm of the
auxiliary error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import adaptive_batch, layer_seeds

DEFAULT_TOL = 1e-3
_ABS_FLOOR = 1e-28  # absolute floor for squared integrands near rounding level


@dataclass(frozen=True)
class NormSpec:
    """terms: ((seminorm order j, eps exponent a), ...); combine 'sum' or 'rss'."""

    name: str
    terms: tuple
    combine: str = "sum"


NORM_PRESETS = {
    "CD2_ENERGY": NormSpec("CD2_ENERGY", ((1, 0.5), (0, 0.0))),
    "RD2_ENERGY": NormSpec("RD2_ENERGY", ((1, 1.0), (0, 0.0))),
    "BALANCED": NormSpec("BALANCED", ((1, 0.5), (0, 0.0))),
    "CD4_ENERGY": NormSpec("CD4_ENERGY", ((2, 0.5), (1, 0.0))),
    "RD4_ENERGY": NormSpec("RD4_ENERGY", ((2, 1.0), (1, 0.0))),
    "MIXED": NormSpec("MIXED", ((1, 0.0), (0, 0.0)), combine="rss"),
}


def get_norm_spec(preset) -> NormSpec:
    if isinstance(preset, NormSpec):
        return preset
    try:
        return NORM_PRESETS[preset]
    except KeyError:
        raise ValueError(
            f"unknown norm preset {preset!r}; known: {', '.join(NORM_PRESETS)}"
        ) from None


def seminorm_error(exact, df, j: int = 0, tol: float = DEFAULT_TOL,
                   anchors=(), eps: float | None = None, mesh=None):
    """|exact - df|_j with adaptive per-element quadrature; returns (value, flagged).

    Either argument may be None (measures the other alone).  exact follows
    the evaluator protocol f(x, j); df is a DiscreteFunction or any f(x, j).
    mesh defaults to df's mesh; without one the domain is a single interval.
    """
    if mesh is None and df is not None and hasattr(df, "space"):
        mesh = df.space.mesh
    edges = mesh.nodes if mesh is not None else np.array([0.0, 1.0])
    # j >= 2 on short elements cancels catastrophically in double precision;
    # DiscreteFunction evaluation offers an 80-bit contraction for that case
    precise = j >= 2 and df is not None and hasattr(df, "space")

    def squared_error(x):
        v = np.zeros(np.shape(x))
        if exact is not None:
            v = v + np.asarray(exact(x, j), dtype=float)
        if df is not None:
            dv = df(x, j, precise=True) if precise else df(x, j)
            v = v - np.asarray(dv, dtype=float)
        return v * v

    seed_all = eps is not None and len(tuple(anchors)) > 0
    jobs = [(squared_error, a, b,
             layer_seeds(anchors, eps, a, b) if seed_all else ())
            for a, b in zip(edges[:-1], edges[1:])]
    values, flagged = adaptive_batch(jobs, tol=tol, scale="sum",
                                     atol_floor=_ABS_FLOOR)
    return math.sqrt(sum(max(v, 0.0) for v in values)), flagged


def seminorm(exact, df, j: int = 0, **kw) -> float:
    """seminorm_error without the flag, for callers that know the integrand is tame."""
    return seminorm_error(exact, df, j, **kw)[0]


def weighted_norm(values: dict, spec, eps: float) -> float:
    """Combine per-order seminorms into the preset's composite norm."""
    spec = get_norm_spec(spec)
    parts = []
    for j, a in spec.terms:
        if j not in values:
            raise ValueError(f"{spec.name} needs seminorm order {j}, not provided")
        parts.append(eps ** a * values[j])
    if spec.combine == "rss":
        return math.sqrt(sum(p * p for p in parts))
    return sum(parts)


def norm_error(sol, preset=None, tol: float = DEFAULT_TOL):
    """Composite-norm error of a DiscreteSolution against its exact solution.

    Returns (total, per-order values dict, flagged).  For the two-field
    method order 1 measures the primal field and order 0 the auxiliary one.
    """
    p = sol.problem
    spec = get_norm_spec(preset if preset is not None else p.norm_preset)
    anchors = tuple(0.0 if t.side == "left" else 1.0 for t in p.layers)
    values = {}
    flagged = False
    for j, _ in spec.terms:
        if p.mixed:
            exact = (lambda x, jj: p.exact(x, jj)) if j >= 1 else \
                    (lambda x, jj: p.w_exact(x, jj))
            target = sol.u if j >= 1 else sol.w
            order = j if j >= 1 else 0
        else:
            exact, target, order = p.exact, sol.u, j
        values[j], hit = seminorm_error(exact, target, order, tol=tol,
                                        anchors=anchors, eps=p.eps)
        flagged |= hit
    return weighted_norm(values, spec, p.eps), values, flagged


def solver_noise(sol, preset=None, tol: float = DEFAULT_TOL) -> float:
    """Size of the solver's rounding-noise estimate in the given norm.

    The noise fields are a concrete coefficient perturbation (the
    dither-probe solution difference), and measuring them in the same
    composite norm as the error makes the two directly comparable: noise
    well under the error means the measured value stands, noise at or
    above it means the cell's error is a rounding artifact.  Returns inf
    when the solution carries no estimate (the probe failed to factor),
    which is the untrustworthy case, not the clean one.  Noise fields are
    piecewise polynomials, so the quadrature converges immediately.
    """
    if sol.noise_u is None:
        return math.inf
    p = sol.problem
    spec = get_norm_spec(preset if preset is not None else p.norm_preset)
    values = {}
    for j, _ in spec.terms:
        if p.mixed:
            target = sol.noise_u if j >= 1 else sol.noise_w
            order = j if j >= 1 else 0
        else:
            target, order = sol.noise_u, j
        values[j], _ = seminorm_error(None, target, order, tol=tol)
    return weighted_norm(values, spec, p.eps)
