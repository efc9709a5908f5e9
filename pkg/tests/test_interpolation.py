"""Nodal, moment, and L2 interpolation operators."""

import math

import numpy as np
import pytest

import layerfem as lf
from layerfem.quadrature import gauss_rule

XG, WG = gauss_rule(12)


def element_integral(mesh, fn):
    """Apply fn(x, a, L) on each element's 12-point rule; return per-element sums."""
    out = []
    for e in range(mesh.n_elements):
        a, b = mesh.nodes[e], mesh.nodes[e + 1]
        L = b - a
        x = a + L * XG
        out.append(L * np.sum(WG * fn(x, a, L)))
    return np.asarray(out)


def smooth(x, j=0):
    if j == 0:
        return np.exp(np.sin(3.0 * x))
    return np.exp(np.sin(3.0 * x)) * 3.0 * np.cos(3.0 * x)


def test_nodal_matches_at_nodes():
    for k in (1, 2, 3):
        sp = lf.make_space(lf.uniform_mesh(4), "Pk", k)
        g = lf.nodal_interpolant(smooth, sp)
        assert np.allclose(g(sp.node_coords), smooth(sp.node_coords), rtol=1e-14)


def test_frozen_quadratic_interpolant_of_cubic():
    sp = lf.make_space(lf.uniform_mesh(1), "Pk", 2)
    g = lf.nodal_interpolant(lambda x: x**3, sp)
    xs = np.linspace(0.0, 1.0, 7)
    assert np.allclose(g(xs), 1.5 * xs**2 - 0.5 * xs, atol=1e-14)


def test_moment_interpolant_orthogonality():
    meshes = (lf.uniform_mesh(4),
              lf.make_mesh("two-region", 0.125, eps=1e-4, tau_exp=0.5))
    for mesh in meshes:
        for k in (2, 3):
            sp = lf.make_space(mesh, "Pk", k)
            g = lf.moment_interpolant(smooth, sp)
            for l in range(k - 1):
                resid = element_integral(
                    mesh, lambda x, a, L: (smooth(x) - g(x)) * ((x - a) / L) ** l)
                assert np.max(np.abs(resid)) < 1e-10, (k, l)
            nodes = mesh.nodes
            assert np.allclose(g(nodes), smooth(nodes), rtol=1e-12, atol=1e-12)


def test_moment_interpolant_gradient_orthogonality():
    # endpoint matching plus interior moments make the error's gradient
    # L2-orthogonal to every discrete gradient
    mesh = lf.uniform_mesh(5)
    sp = lf.make_space(mesh, "Pk", 3)
    g = lf.moment_interpolant(smooth, sp)
    for i in range(sp.dof_count):
        c = np.zeros(sp.dof_count)
        c[i] = 1.0
        chi = lf.DiscreteFunction(sp, c)
        total = np.sum(element_integral(
            mesh, lambda x, a, L: (smooth(x, 1) - g(x, 1)) * chi(x, 1)))
        assert abs(total) < 1e-9


def test_p1_nodal_gradient_orthogonality():
    mesh = lf.uniform_mesh(5)
    sp = lf.make_space(mesh, "Pk", 1)
    g = lf.nodal_interpolant(smooth, sp)
    resid = element_integral(mesh, lambda x, a, L: smooth(x, 1) - g(x, 1))
    assert np.max(np.abs(resid)) < 1e-12


def test_moment_needs_quadratic_space():
    sp = lf.make_space(lf.uniform_mesh(4), "Pk", 1)
    with pytest.raises(ValueError):
        lf.moment_interpolant(smooth, sp)


def test_interpolate_kinds_and_fallback():
    p = lf.make_problem("CD2", 1e-3)
    sp = lf.make_space(lf.uniform_mesh(4), "Pk", 1)
    a = lf.interpolate(p, sp, "moment")  # degree 1 falls back to nodal
    b = lf.interpolate(p, sp, "nodal")
    assert np.array_equal(a.coefficients, b.coefficients)
    with pytest.raises(ValueError, match="nodal, moment, l2"):
        lf.interpolate(p, sp, "spline")


def test_l2_projection_orthogonality_and_stability():
    for family, k in (("Pk", 1), ("Pk", 3), ("Hermite3", 3)):
        sp = lf.make_space(lf.uniform_mesh(4), family, k)
        g = lf.l2_project(smooth, sp)
        for i in range(sp.dof_count):
            c = np.zeros(sp.dof_count)
            c[i] = 1.0
            chi = lf.DiscreteFunction(sp, c)
            total = np.sum(element_integral(
                sp.mesh, lambda x, a, L: (smooth(x) - g(x)) * chi(x)))
            assert abs(total) < 1e-10
        norm_f = math.sqrt(np.sum(element_integral(
            sp.mesh, lambda x, a, L: smooth(x) ** 2)))
        norm_g = lf.seminorm(None, g, 0, tol=1e-10)
        assert norm_g <= norm_f * (1.0 + 1e-10)


def test_nodal_interpolation_sup_stability():
    # rough but bounded data: interpolant sup-norm stays within a fixed factor
    rough = lambda x: np.sin(37.0 * x) + 0.5 * np.sign(np.sin(11.0 * x + 0.3))
    xs = np.linspace(0.0, 1.0, 2001)
    bound = np.max(np.abs(rough(xs)))
    for mesh in (lf.uniform_mesh(7),
                 lf.make_mesh("two-region", 0.125, eps=1e-5, tau_exp=0.5)):
        for k in (1, 2, 3):
            sp = lf.make_space(mesh, "Pk", k)
            g = lf.nodal_interpolant(rough, sp)
            assert np.max(np.abs(g(xs))) <= 4.0 * bound


def test_interpolation_convergence_orders():
    fj = lambda x, j=0: (2.0 ** j) * np.sin(2.0 * x + 0.4 + j * np.pi / 2.0)
    for family, k, n0 in (("Pk", 1, 8), ("Pk", 2, 8), ("Pk", 3, 8), ("Hermite3", 3, 4)):
        errs0, errs1 = [], []
        for n in (n0, 2 * n0):
            sp = lf.make_space(lf.uniform_mesh(n), family, k)
            g = lf.nodal_interpolant(fj, sp)
            errs0.append(lf.seminorm(fj, g, 0, tol=1e-12))
            errs1.append(lf.seminorm(fj, g, 1, tol=1e-12))
        rate0 = math.log(errs0[0] / errs0[1]) / math.log(2.0)
        rate1 = math.log(errs1[0] / errs1[1]) / math.log(2.0)
        assert abs(rate0 - (k + 1)) < 0.2, (family, k, rate0)
        assert abs(rate1 - k) < 0.2, (family, k, rate1)


def test_layer_aware_moment_loads():
    # a layer far below the mesh scale still yields accurate element moments
    eps = 1e-6
    p = lf.make_problem("CD2", eps, overrides={"smooth": 0})
    sp = lf.make_space(lf.uniform_mesh(8), "Pk", 2)
    g = lf.interpolate(p, sp, "moment")
    moments = element_integral(sp.mesh, lambda x, a, L: g(x))
    h = sp.mesh.nodes[1]
    expect0 = eps**2 * (1.0 - math.exp(-h / eps))  # exact layer mass in element 0
    assert moments[0] == pytest.approx(expect0, rel=1e-3)
    assert np.max(np.abs(moments[1:])) < 1e-13
