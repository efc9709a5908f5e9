"""Finite element spaces over a Mesh: C0 Lagrange P_k and C1 cubic Hermite.

DOF conventions (fixed so golden files are reproducible):

    Pk        k*(#elements)+1 DOFs; element e owns globals e*k .. e*k+k,
              local nodes equispaced left to right (vertex, interior, vertex),
              shared vertices owned by the left element.
    Hermite3  2*(#nodes) DOFs, node-major (value, slope) pairs; element e
              owns globals 2e .. 2e+3.  Slope shape functions carry a factor
              of the element length so coefficients are physical slopes.

Evaluation uses the right-limit convention at element boundaries (left limit
at x=1).  Derivatives above the local polynomial degree evaluate to zero
inside elements.

Essential constraints follow the boundary descriptor: 'dirichlet' pins the
end value, 'clamped' pins value and slope, 'hinged' pins the value only
(the moment is natural), 'neumann' pins nothing.  Prescribed values are read
from the problem's exact solution so inhomogeneous manufactured data works
unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .meshes import Mesh


class SpaceError(ValueError):
    """Unsupported family/degree combination or bad evaluation request."""


def _lagrange_monomials(k: int) -> np.ndarray:
    """Columns are monomial coefficients of the k+1 nodal basis polynomials."""
    t = np.arange(k + 1) / k
    vander = t[:, None] ** np.arange(k + 1)[None, :]
    return np.linalg.inv(vander)  # row m of column i: coefficient of t^m

# reference cubic Hermite basis (value0, slope0, value1, slope1), monomial rows
_HERMITE_MONO = np.array([
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [-3.0, -2.0, 3.0, -1.0],
    [2.0, 1.0, -2.0, 1.0],
])


def _eval_monomials(mono: np.ndarray, t: np.ndarray, j: int,
                    dtype=float) -> np.ndarray:
    """Rows: points, columns: basis functions; j-th derivative w.r.t. t."""
    deg = mono.shape[0] - 1
    t = np.atleast_1d(np.asarray(t)).astype(dtype)
    mono = np.asarray(mono, dtype=dtype)
    out = np.zeros((t.size, mono.shape[1]), dtype=dtype)
    for m in range(j, deg + 1):
        fall = 1.0
        for i in range(j):
            fall *= m - i
        out += fall * t[:, None] ** (m - j) * mono[m][None, :]
    return out


@dataclass(frozen=True)
class FESpace:
    """Base space: DOF layout plus reference-basis evaluation."""

    mesh: Mesh
    family: str
    k: int
    dof_count: int
    constraints: tuple = field(default=())  # ((dof, value), ...)

    @property
    def n_elements(self) -> int:
        return self.mesh.n_elements

    @property
    def constrained_dofs(self) -> np.ndarray:
        return np.asarray([c[0] for c in self.constraints], dtype=int)

    def element_dofs(self, e) -> np.ndarray:
        raise NotImplementedError

    def ref_basis(self, t, j: int, dtype=float) -> np.ndarray:
        raise NotImplementedError

    def dof_scale(self, length, j: int) -> np.ndarray:
        """Per-DOF factor turning reference t-derivatives into x-derivatives."""
        raise NotImplementedError

    def local_basis(self, e: int, t, j: int = 0) -> np.ndarray:
        """Physical j-th derivatives of element e's shape functions at ref t."""
        L = self.mesh.lengths[e]
        return self.ref_basis(t, j) * self.dof_scale(L, j)[None, :]

    def locate(self, x) -> np.ndarray:
        """Element index per point, right-limit convention."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x < 0.0) or np.any(x > 1.0):
            raise SpaceError("evaluation points must lie in [0, 1]")
        idx = np.searchsorted(self.mesh.nodes, x, side="right") - 1
        return np.clip(idx, 0, self.n_elements - 1)

    def eval(self, coeffs, x, j: int = 0, precise: bool = False):
        """Evaluate the discrete function with the given coefficients.

        precise=True runs the basis contraction in 80-bit arithmetic.  A
        j-th derivative on an element of length L is a sum of O(1/L^j)
        terms cancelling to O(1); in double precision the rounding noise
        eps_mach/L^j swamps second derivatives once L drops below ~1e-8
        (layer-adapted meshes at small eps), so norm integrands that need
        j >= 2 request the extended-precision path.
        """
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.dof_count,):
            raise SpaceError(f"expected {self.dof_count} coefficients, got {coeffs.shape}")
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        e = self.locate(x_arr)
        lengths = self.mesh.lengths[e]
        t = (x_arr - self.mesh.nodes[e]) / lengths
        dtype = np.longdouble if precise else float
        dofs = self.dof_table[e]                       # (npts, n_local)
        ref = self.ref_basis(t, j, dtype=dtype)        # (npts, n_local)
        scale = self.dof_scales(lengths, j)            # (npts, n_local)
        vals = np.einsum("pi,pi,pi->p", ref, scale.astype(dtype),
                         coeffs[dofs].astype(dtype))
        if precise:
            vals = vals.astype(float)
        return vals if np.ndim(x) else float(vals[0])

    def dof_scales(self, lengths, j: int) -> np.ndarray:
        return np.stack([self.dof_scale(L, j) for L in np.atleast_1d(lengths)])


@dataclass(frozen=True)
class LagrangeSpace(FESpace):
    def __post_init__(self):
        if not 1 <= self.k <= 3:
            raise SpaceError(f"Pk supports k=1..3, got k={self.k}")
        object.__setattr__(self, "_mono", _lagrange_monomials(self.k))
        ne = self.n_elements
        table = self.k * np.arange(ne)[:, None] + np.arange(self.k + 1)[None, :]
        object.__setattr__(self, "dof_table", table)

    @property
    def n_local(self) -> int:
        return self.k + 1

    @property
    def node_coords(self) -> np.ndarray:
        """Physical coordinate of every DOF (nodal basis)."""
        nodes = self.mesh.nodes
        frac = np.arange(self.k) / self.k
        inner = nodes[:-1, None] + np.diff(nodes)[:, None] * frac[None, :]
        return np.append(inner.ravel(), 1.0)

    def element_dofs(self, e) -> np.ndarray:
        return self.dof_table[e]

    def ref_basis(self, t, j: int, dtype=float) -> np.ndarray:
        t = np.atleast_1d(t)
        if j > self.k:
            return np.zeros((t.size, self.k + 1), dtype=dtype)
        return _eval_monomials(self._mono, t, j, dtype=dtype)

    def dof_scale(self, length, j: int) -> np.ndarray:
        return np.full(self.k + 1, length ** (-j))

    def dof_scales(self, lengths, j: int) -> np.ndarray:
        lengths = np.atleast_1d(lengths)
        return np.repeat(lengths[:, None] ** (-j), self.k + 1, axis=1)


@dataclass(frozen=True)
class HermiteSpace(FESpace):
    def __post_init__(self):
        if self.k != 3:
            raise SpaceError(f"Hermite3 is cubic; got k={self.k}")
        base = 2 * np.arange(self.n_elements)[:, None]
        object.__setattr__(self, "dof_table", base + np.arange(4)[None, :])

    @property
    def n_local(self) -> int:
        return 4

    def element_dofs(self, e) -> np.ndarray:
        return self.dof_table[e]

    def ref_basis(self, t, j: int, dtype=float) -> np.ndarray:
        t = np.atleast_1d(t)
        if j > 3:
            return np.zeros((t.size, 4), dtype=dtype)
        return _eval_monomials(_HERMITE_MONO, t, j, dtype=dtype)

    def dof_scale(self, length, j: int) -> np.ndarray:
        v = length ** (-j)
        s = length ** (1 - j)
        return np.array([v, s, v, s])

    def dof_scales(self, lengths, j: int) -> np.ndarray:
        lengths = np.atleast_1d(lengths)
        v = lengths ** (-j)
        s = lengths ** (1 - j)
        return np.stack([v, s, v, s], axis=1)


@dataclass(frozen=True)
class DiscreteFunction:
    """A member of an FESpace: coefficient vector plus evaluation."""

    space: FESpace
    coefficients: np.ndarray

    def __call__(self, x, j: int = 0, precise: bool = False):
        return self.space.eval(self.coefficients, x, j, precise=precise)


def _boundary_constraints(family: str, dof_count: int, bc, data) -> tuple:
    """(dof, value) pairs for the essential part of the boundary descriptor."""
    out = []
    for side, kind in zip(("left", "right"), bc):
        x = 0.0 if side == "left" else 1.0
        if family == "Pk":
            vdof = 0 if side == "left" else dof_count - 1
            if kind == "dirichlet":
                out.append((vdof, float(data(x, 0))))
            elif kind != "neumann":
                raise SpaceError(f"order-2 boundary kind {kind!r} unsupported on Pk")
        else:
            vdof = 0 if side == "left" else dof_count - 2
            if kind in ("hinged", "clamped"):
                out.append((vdof, float(data(x, 0))))
                if kind == "clamped":
                    out.append((vdof + 1, float(data(x, 1))))
            else:
                raise SpaceError(f"order-4 boundary kind {kind!r} unsupported on Hermite3")
    return tuple(out)


def make_space(mesh: Mesh, family: str, k: int = 1, bc=None, data=None) -> FESpace:
    """Build a space; bc=(left kind, right kind) with data(x, j) fills constraints.

    For the two-field method pass bc=('dirichlet', 'dirichlet') for the
    primal space and bc=None for the auxiliary one.
    """
    if family == "Pk":
        dof_count = k * mesh.n_elements + 1
        cls = LagrangeSpace
    elif family == "Hermite3":
        if k not in (3,):
            raise SpaceError(f"Hermite3 requires k=3, got k={k}")
        dof_count = 2 * (mesh.n_elements + 1)
        cls = HermiteSpace
    else:
        raise SpaceError(f"unknown space family {family!r}; known: Pk, Hermite3")
    constraints = ()
    if bc is not None:
        if data is None:
            data = lambda x, j: 0.0  # noqa: E731
        constraints = _boundary_constraints(family, dof_count, bc, data)
    return cls(mesh=mesh, family=family, k=k, dof_count=dof_count,
               constraints=constraints)
