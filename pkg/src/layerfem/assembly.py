"""Galerkin assembly and direct solution of the catalog's weak forms.

Three formulations:

    order 2   eps^m (u', v') - (b u', v) + (c u, v) = (f, v)        on Pk
    order 4   eps^m (u'', v'') - (b u'', v') - (b' u'', v)
              + (p u', v') + (q u', v) + (r u, v) = (f, v)          on Hermite3
    mixed     eps (u', phi') + (w, phi) = eps [u' phi] at the ends  both fields Pk
              (b u', psi') + (d u, psi) - eps (w', psi') = (f, psi)

Element matrices use fixed Gauss rules (order k+2 for the Pk forms, 6 for
Hermite3).  Load integrals carry layer content that a fixed rule cannot see
on coarse elements, so they use the layer-seeded adaptive rule at tolerance
1e-12.  Natural boundary data (Neumann slopes, hinged moments, the mixed
form's end slopes) is read from the exact solution, which keeps manufactured
inhomogeneous cases exact.

Essential constraints are eliminated symmetrically: the constrained column
is folded into the load, then row and column are zeroed and the diagonal set
to one.  The pre-constraint matrix is retained on the LinearSystem for
structure tests.

The mixed system interleaves the two fields (u_i -> 2i, w_i -> 2i+1, with
the second equation tested on u rows) to keep the bandwidth at 2k+1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .banded import BandedMatrix, SingularSystemError
from .problems import Problem
from .quadrature import adaptive_batch, gauss_rule, layer_seeds
from .spaces import DiscreteFunction, FESpace, make_space

LOAD_TOL = 1e-12
DITHER_ULPS = 4.0   # entry dither amplitude for the solution-noise probe


class AssemblyError(ValueError):
    """Formulation and space do not match."""


@dataclass
class LinearSystem:
    """Banded system plus the metadata needed to interpret its solution."""

    matrix: BandedMatrix            # after constraint elimination
    rhs: np.ndarray
    raw: BandedMatrix               # pre-constraint copy (structure tests)
    spaces: tuple
    mixed: bool
    load_flagged: bool              # adaptive load quadrature hit its cap

    def solve(self):
        """Return (coefficients, relative max-norm residual, noise vector).

        The solve itself is one factorization plus mixed-precision
        iterative refinement: residuals form in 80-bit off the unfactored
        band and resolve through the same factors, and corrections are
        applied while they keep contracting.

        The noise vector estimates how much of the solution is rounding
        artifact.  Refinement cannot see it: it converges to the solution
        of the band as stored, which on systems whose entries span more
        decades than the mantissa differs materially from the system that
        exact arithmetic would have produced.  So the system is solved a
        second time with every stored entry dithered by a few ulps, and
        the difference of the two solutions is returned.  Elementwise
        dither is pessimistic (real rounding is coherent across identical
        element blocks and acts like a smooth coefficient change), so the
        vector is an upper-bound-flavored estimate; None means the
        dithered system failed to factor at all.
        """
        x = self._refined(self.matrix, self.rhs)
        rng = np.random.default_rng(0)
        rel = DITHER_ULPS * np.finfo(float).eps
        try:
            m2 = self.matrix.perturbed(rel, rng)
            rhs2 = self.rhs * (1.0 + rel * rng.uniform(-1.0, 1.0, self.rhs.shape))
            noise = self._refined(m2, rhs2) - x
        except SingularSystemError:
            noise = None
        r = self.matrix.residual(x, self.rhs).astype(float)
        scale = np.max(np.abs(self.rhs))
        res = float(np.max(np.abs(r)) / (scale if scale > 0.0 else 1.0))
        return x, res, noise

    @staticmethod
    def _refined(matrix, rhs):
        m = matrix.copy()
        x = m.solve(rhs)
        floor = 10.0 * np.finfo(float).eps * max(float(np.max(np.abs(x))), 1e-300)
        prev = math.inf
        for _ in range(8):
            d = m.solve(matrix.residual(x, rhs))
            nd = float(np.max(np.abs(d)))
            if nd <= floor or nd > 0.3 * prev:
                break
            x = x + d
            prev = nd
        return x


def _layer_anchors(p: Problem):
    return tuple(0.0 if t.side == "left" else 1.0 for t in p.layers)


def _form_blocks(space: FESpace, terms, n_gauss: int) -> np.ndarray:
    """Sum of integral terms as per-element dense blocks.

    terms: iterable of (values, test_j, trial_j) where values has shape
    (n_elements, n_gauss) and already contains the coefficient (with sign)
    at the mapped quadrature points.
    """
    tq, wq = gauss_rule(n_gauss)
    Ls = space.mesh.lengths
    blocks = np.zeros((space.n_elements, space.n_local, space.n_local))
    for vals, ja, jb in terms:
        Ra, Rb = space.ref_basis(tq, ja), space.ref_basis(tq, jb)
        Sa, Sb = space.dof_scales(Ls, ja), space.dof_scales(Ls, jb)
        blocks += np.einsum("eq,q,e,qi,ei,qj,ej->eij",
                            vals, wq, Ls, Ra, Sa, Rb, Sb, optimize=True)
    return blocks


def _scatter(mat: BandedMatrix, rows_table, cols_table, blocks):
    rows = np.broadcast_to(rows_table[:, :, None], blocks.shape)
    cols = np.broadcast_to(cols_table[:, None, :], blocks.shape)
    mat.add(rows, cols, blocks)


def _quad_points(space: FESpace, n_gauss: int):
    tq, _ = gauss_rule(n_gauss)
    return space.mesh.nodes[:-1][:, None] + space.mesh.lengths[:, None] * tq[None, :]


def _adaptive_loads(space: FESpace, f, anchors, eps: float, row_of=None, size=None):
    """(f, v) for every shape function, layer-aware; returns (load, hit_cap)."""
    load = np.zeros(size if size is not None else space.dof_count)
    nodes = space.mesh.nodes
    jobs = []
    targets = []
    for e in range(space.n_elements):
        a, b = nodes[e], nodes[e + 1]
        L = b - a
        seeds = layer_seeds(anchors, eps, a, b)
        scale = space.dof_scale(L, 0)
        for i, dof in enumerate(space.element_dofs(e)):
            def g(x, a=a, L=L, i=i, s=scale[i]):
                return f(x) * space.ref_basis((x - a) / L, 0)[:, i] * s
            jobs.append((g, a, b, seeds))
            targets.append(dof if row_of is None else row_of(dof))
    # right-anchored layers evaluate through 1-x, quantized at eps_mach, so
    # their integrands cannot beat eps_mach/eps relative noise
    noise = np.finfo(float).eps / eps if 1.0 in tuple(anchors) else 0.0
    values, flagged = adaptive_batch(jobs, tol=LOAD_TOL, scale="max",
                                     noise_rel=noise)
    np.add.at(load, targets, values)
    return load, flagged


def _apply_constraints(mat: BandedMatrix, load: np.ndarray, constraints):
    for dof, val in constraints:
        rows, vals = mat.column(dof)
        load[rows] -= vals * val
    for dof, val in constraints:
        mat.set_row_identity(dof)
        mat.zero_column(dof)
        load[dof] = val


def assemble_order2(p: Problem, s: FESpace) -> LinearSystem:
    if p.order != 2 or s.family != "Pk":
        raise AssemblyError("order-2 forms need an order-2 problem on a Pk space")
    n_gauss = s.k + 2
    X = _quad_points(s, n_gauss)
    epsm = p.eps ** p.eps_power
    terms = [(np.full(X.shape, epsm), 1, 1),
             (p.coeffs["c"](X), 0, 0)]
    if "b" in p.coeffs:
        terms.append((-p.coeffs["b"](X), 0, 1))   # test value against trial slope
    mat = BandedMatrix(s.dof_count, s.k, s.k)
    _scatter(mat, s.dof_table, s.dof_table, _form_blocks(s, terms, n_gauss))

    load, flagged = _adaptive_loads(s, p.rhs, _layer_anchors(p), p.eps)
    for side, kind in zip(("left", "right"), p.bc):
        if kind == "neumann":
            x, dof, sign = (0.0, 0, -1.0) if side == "left" else (1.0, s.dof_count - 1, 1.0)
            load[dof] += sign * epsm * float(p.exact(x, 1))

    raw = mat.copy()
    _apply_constraints(mat, load, s.constraints)
    return LinearSystem(mat, load, raw, (s,), False, flagged)


def assemble_order4(p: Problem, s: FESpace) -> LinearSystem:
    if p.order != 4 or p.mixed or s.family != "Hermite3":
        raise AssemblyError("order-4 forms need a non-mixed order-4 problem on Hermite3")
    n_gauss = 6
    X = _quad_points(s, n_gauss)
    epsm = p.eps ** p.eps_power
    pc, q, r = p.coeffs["p"], p.coeffs["q"], p.coeffs["r"]
    terms = [(np.full(X.shape, epsm), 2, 2),
             (pc(X), 1, 1),
             (q(X), 0, 1),
             (r(X), 0, 0)]
    if "b" in p.coeffs:
        terms.append((-p.coeffs["b"](X), 1, 2))   # -(b u'', v')
        terms.append((-p.coeffs["b"].df(X), 0, 2))  # -(b' u'', v)
    mat = BandedMatrix(s.dof_count, 3, 3)
    _scatter(mat, s.dof_table, s.dof_table, _form_blocks(s, terms, n_gauss))

    load, flagged = _adaptive_loads(s, p.rhs, _layer_anchors(p), p.eps)
    for side, kind in zip(("left", "right"), p.bc):
        if kind == "hinged":
            if side == "left":
                load[1] -= epsm * float(p.exact(0.0, 2))
            else:
                load[s.dof_count - 1] += epsm * float(p.exact(1.0, 2))

    raw = mat.copy()
    _apply_constraints(mat, load, s.constraints)
    return LinearSystem(mat, load, raw, (s,), False, flagged)


def assemble_mixed(p: Problem, s_u: FESpace, s_w: FESpace) -> LinearSystem:
    if not p.mixed:
        raise AssemblyError("mixed form needs a two-field catalog problem")
    if s_u.family != "Pk" or s_w.family != "Pk":
        raise AssemblyError("both mixed-method fields use Pk spaces")
    if s_u.k != s_w.k or s_u.mesh is not s_w.mesh and \
            not np.array_equal(s_u.mesh.nodes, s_w.mesh.nodes):
        raise AssemblyError("mixed-method fields need the same mesh and degree")
    k = s_u.k
    n_gauss = k + 2
    X = _quad_points(s_u, n_gauss)
    eps = p.eps
    b, d = p.coeffs["b"], p.coeffs["d"]
    ndof = s_u.dof_count
    mat = BandedMatrix(2 * ndof, 2 * k + 1, 2 * k + 1)
    urows = 2 * s_u.dof_table        # second equation, tested on u basis
    wrows = urows + 1                # first equation, tested on w basis
    ucols, wcols = urows, wrows
    _scatter(mat, urows, ucols, _form_blocks(s_u, [(b(X), 1, 1), (d(X), 0, 0)], n_gauss))
    _scatter(mat, urows, wcols, _form_blocks(s_u, [(np.full(X.shape, -eps), 1, 1)], n_gauss))
    _scatter(mat, wrows, ucols, _form_blocks(s_u, [(np.full(X.shape, eps), 1, 1)], n_gauss))
    _scatter(mat, wrows, wcols, _form_blocks(s_u, [(np.ones(X.shape), 0, 0)], n_gauss))

    load, flagged = _adaptive_loads(s_u, p.rhs, _layer_anchors(p), eps,
                                    row_of=lambda i: 2 * i, size=2 * ndof)
    # first equation's natural end-slope data: eps (u'(1) phi(1) - u'(0) phi(0))
    load[1] -= eps * float(p.exact(0.0, 1))
    load[2 * (ndof - 1) + 1] += eps * float(p.exact(1.0, 1))

    raw = mat.copy()
    constraints = tuple((2 * dof, val) for dof, val in s_u.constraints)
    _apply_constraints(mat, load, constraints)
    return LinearSystem(mat, load, raw, (s_u, s_w), True, flagged)


def assemble(p: Problem, spaces) -> LinearSystem:
    """Dispatch to the formulation matching the problem."""
    if p.mixed:
        return assemble_mixed(p, *spaces)
    if p.order == 2:
        return assemble_order2(p, spaces[0])
    return assemble_order4(p, spaces[0])


@dataclass
class DiscreteSolution:
    """Solved case: discrete field(s), solver residual, honesty data.

    noise_u / noise_w hold the solver's rounding-noise estimate (the
    dither-probe solution difference) mapped onto the solution spaces, so
    its size can be measured in whatever norm the solution itself is
    judged in.  None means no estimate exists, which callers should treat
    as untrustworthy rather than clean.
    """

    problem: Problem
    u: DiscreteFunction
    w: DiscreteFunction | None
    residual: float
    load_flagged: bool
    noise_u: DiscreteFunction | None = None
    noise_w: DiscreteFunction | None = None

    @property
    def dofs(self) -> int:
        n = self.u.space.dof_count
        return n + (self.w.space.dof_count if self.w is not None else 0)


def build_spaces(p: Problem, mesh, k: int = 1) -> tuple:
    """The space tuple the problem's formulation requires."""
    if p.order == 2:
        return (make_space(mesh, "Pk", k, bc=p.bc, data=p.exact),)
    if p.mixed:
        s_u = make_space(mesh, "Pk", k, bc=("dirichlet", "dirichlet"), data=p.exact)
        return (s_u, make_space(mesh, "Pk", k))
    return (make_space(mesh, "Hermite3", 3, bc=p.bc, data=p.exact),)


def solve_problem(p: Problem, mesh, k: int = 1) -> DiscreteSolution:
    """Assemble and solve p on the mesh; k is the Pk degree where it applies."""
    spaces = build_spaces(p, mesh, k)
    system = assemble(p, spaces)
    x, residual, noise = system.solve()
    nu = nw = None
    if p.mixed:
        u = DiscreteFunction(spaces[0], x[0::2])
        w = DiscreteFunction(spaces[1], x[1::2])
        if noise is not None:
            nu = DiscreteFunction(spaces[0], noise[0::2])
            nw = DiscreteFunction(spaces[1], noise[1::2])
    else:
        u, w = DiscreteFunction(spaces[0], x), None
        if noise is not None:
            nu = DiscreteFunction(spaces[0], noise)
    return DiscreteSolution(p, u, w, residual, system.load_flagged, nu, nw)
