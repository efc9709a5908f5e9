"""Interpolation and projection operators onto the discrete spaces.

Three operators:

    nodal_interpolant    matches values at Pk nodes (value and slope at the
                         mesh nodes for Hermite3)
    moment_interpolant   Pk, k >= 2: matches both element endpoints and the
                         k-1 weighted moments int (x - x_left)^l (f - pi f) = 0
                         for l = 0..k-2, which makes the gradient of the
                         interpolation error orthogonal to every discrete
                         gradient
    l2_project           global mass-matrix projection, unconstrained

The moment exponent range l = 0..k-2 is what the gradient-orthogonality
property requires: integrating ((f - pi f)', chi') by parts per element
kills the boundary bracket through endpoint matching and leaves chi'', a
polynomial of degree k-2, which the moments annihilate.  Starting the range
at l = 1 instead would leave the l = 0 component and break orthogonality.

Right-hand sides involving f use the layer-seeded adaptive rule (tolerance
1e-12) so layer content inside a single coarse element is integrated
accurately.
"""
from __future__ import annotations

import numpy as np

from .banded import BandedMatrix
from .quadrature import adaptive_batch, gauss_rule, layer_seeds
from .spaces import DiscreteFunction, FESpace

MOMENT_TOL = 1e-12


def _as_evaluator(f):
    """Accept f(x) or f(x, j); return an f(x, j) callable."""
    try:
        f(np.array([0.5]), 0)
        return f
    except TypeError:
        return lambda x, j=0: f(x)


def nodal_interpolant(f, space: FESpace) -> DiscreteFunction:
    """Match f at the space's nodal points (value and slope for Hermite3)."""
    f = _as_evaluator(f)
    if space.family == "Pk":
        coeffs = np.asarray(f(space.node_coords, 0), dtype=float)
    else:
        nodes = space.mesh.nodes
        coeffs = np.empty(space.dof_count)
        coeffs[0::2] = f(nodes, 0)
        coeffs[1::2] = f(nodes, 1)
    return DiscreteFunction(space, coeffs)


def _reference_moment_matrix(space: FESpace) -> np.ndarray:
    """Rows l=0..k-2: int_0^1 t^l ref_i(t) dt."""
    k = space.k
    tq, wq = gauss_rule(8)
    ref = space.ref_basis(tq, 0)
    powers = tq[None, :] ** np.arange(k - 1)[:, None]
    return np.einsum("lq,q,qi->li", powers, wq, ref)


def moment_interpolant(f, space: FESpace, anchors=(), eps: float | None = None,
                       tol: float = MOMENT_TOL) -> DiscreteFunction:
    """Endpoint-and-moment matching interpolant; Pk with k >= 2 only."""
    if space.family != "Pk" or space.k < 2:
        raise ValueError("moment interpolant needs a Pk space with k >= 2")
    f = _as_evaluator(f)
    k = space.k
    # constant local system: endpoint rows bracket the k-1 moment rows
    A = np.zeros((k + 1, k + 1))
    A[0, 0] = 1.0
    A[-1, -1] = 1.0
    A[1:-1, :] = _reference_moment_matrix(space)
    Ainv = np.linalg.inv(A)

    nodes = space.mesh.nodes
    seed_all = eps is not None and len(tuple(anchors)) > 0
    jobs = []
    for e in range(space.n_elements):
        a, b = nodes[e], nodes[e + 1]
        L = b - a
        seeds = layer_seeds(anchors, eps, a, b) if seed_all else ()
        for l in range(k - 1):
            def g(x, a=a, L=L, l=l):
                return ((x - a) / L) ** l * np.asarray(f(x, 0), dtype=float) / L
            jobs.append((g, a, b, seeds))
    moments, _ = adaptive_batch(jobs, tol=tol, scale="max")

    coeffs = np.zeros(space.dof_count)
    for e in range(space.n_elements):
        rhs = np.empty(k + 1)
        rhs[0] = float(f(nodes[e], 0))
        rhs[-1] = float(f(nodes[e + 1], 0))
        rhs[1:-1] = moments[e * (k - 1):(e + 1) * (k - 1)]  # int_0^1 t^l pi f dt
        coeffs[space.dof_table[e]] = Ainv @ rhs
    return DiscreteFunction(space, coeffs)


def l2_project(f, space: FESpace, anchors=(), eps: float | None = None,
               tol: float = MOMENT_TOL) -> DiscreteFunction:
    """Solve (pi f, chi) = (f, chi) for all chi; no boundary constraints."""
    f = _as_evaluator(f)
    band = space.k if space.family == "Pk" else 3
    mass = BandedMatrix(space.dof_count, band, band)
    tq, wq = gauss_rule(space.k + 2 if space.family == "Pk" else 6)
    Ls = space.mesh.lengths
    ref = space.ref_basis(tq, 0)
    scales = space.dof_scales(Ls, 0)
    blocks = np.einsum("q,e,qi,ei,qj,ej->eij", wq, Ls, ref, scales, ref, scales,
                       optimize=True)
    rows = np.broadcast_to(space.dof_table[:, :, None], blocks.shape)
    cols = np.broadcast_to(space.dof_table[:, None, :], blocks.shape)
    mass.add(rows, cols, blocks)

    load = np.zeros(space.dof_count)
    nodes = space.mesh.nodes
    seed_all = eps is not None and len(tuple(anchors)) > 0
    jobs = []
    targets = []
    for e in range(space.n_elements):
        a, b = nodes[e], nodes[e + 1]
        L = b - a
        seeds = layer_seeds(anchors, eps, a, b) if seed_all else ()
        scale = space.dof_scale(L, 0)
        for i, dof in enumerate(space.element_dofs(e)):
            def g(x, a=a, L=L, i=i, s=scale[i]):
                return np.asarray(f(x, 0), dtype=float) \
                    * space.ref_basis((x - a) / L, 0)[:, i] * s
            jobs.append((g, a, b, seeds))
            targets.append(dof)
    values, _ = adaptive_batch(jobs, tol=tol, scale="max")
    np.add.at(load, targets, values)
    return DiscreteFunction(space, mass.solve(load))


def interpolate(problem, space: FESpace, kind: str) -> DiscreteFunction:
    """Interpolate the problem's exact solution; layer anchors seed quadrature.

    kind 'moment' falls back to nodal interpolation for k = 1, where the
    moment operator is not defined and the nodal one plays its role.
    """
    anchors = tuple(0.0 if t.side == "left" else 1.0 for t in problem.layers)
    f = problem.exact
    if kind == "nodal":
        return nodal_interpolant(f, space)
    if kind == "moment":
        if space.family == "Pk" and space.k == 1:
            return nodal_interpolant(f, space)
        return moment_interpolant(f, space, anchors, problem.eps)
    if kind == "l2":
        return l2_project(f, space, anchors, problem.eps)
    raise ValueError(f"unknown interpolant kind {kind!r}; known: nodal, moment, l2")
