"""Catalog construction, manufactured solutions, and parameter validation."""

import numpy as np
import pytest

import layerfem as lf
from layerfem.problems import RECOMMENDED

ALL_IDS = (
    "CD2", "RD2",
    "CD4-HINGED", "CD4-XWEAK", "CD4-CLAMPED",
    "RD4-HINGED", "RD4-CLAMPED",
    "MIX4", "MIX4-HINGED",
)

# id -> (order, mixed, eps_power, bc, layer (exponent, side) pairs, norm preset)
STRUCTURE = {
    "CD2": (2, False, 1, ("neumann", "dirichlet"), ((1.0, "left"),), "CD2_ENERGY"),
    "RD2": (2, False, 2, ("neumann", "neumann"),
            ((1.0, "left"), (1.0, "right")), "RD2_ENERGY"),
    "CD4-HINGED": (4, False, 1, ("hinged", "hinged"), ((2.0, "left"),), "CD4_ENERGY"),
    "CD4-XWEAK": (4, False, 1, ("hinged", "hinged"), ((3.0, "left"),), "CD4_ENERGY"),
    "CD4-CLAMPED": (4, False, 1, ("clamped", "clamped"), ((1.0, "left"),), "CD4_ENERGY"),
    "RD4-HINGED": (4, False, 2, ("hinged", "hinged"),
                   ((2.0, "left"), (2.0, "right")), "RD4_ENERGY"),
    "RD4-CLAMPED": (4, False, 2, ("clamped", "clamped"),
                    ((1.0, "left"), (1.0, "right")), "RD4_ENERGY"),
    "MIX4": (4, True, 2, ("clamped", "clamped"),
             ((1.0, "left"), (1.0, "right")), "MIXED"),
    "MIX4-HINGED": (4, True, 2, ("hinged", "hinged"),
                    ((2.0, "left"), (2.0, "right")), "MIXED"),
}


def test_catalog_ids():
    assert lf.catalog_ids() == ALL_IDS


@pytest.mark.parametrize("pid", ALL_IDS)
def test_catalog_structure(pid):
    p = lf.make_problem(pid, 1e-6)
    order, mixed, eps_power, bc, layers, norm = STRUCTURE[pid]
    assert p.order == order
    assert p.mixed == mixed
    assert p.eps_power == eps_power
    assert p.bc == bc
    assert tuple((t.amplitude_exponent, t.side) for t in p.layers) == layers
    assert p.norm_preset == norm
    assert not lf.validate(p)


def test_eps_domain():
    lf.make_problem("CD2", lf.EPS_MAX)  # boundary value allowed
    for bad in (0.0, -1e-3, 0.11):
        with pytest.raises(lf.ProblemError, match="eps"):
            lf.make_problem("CD2", bad)


def test_unknown_id_is_named():
    with pytest.raises(lf.CatalogError, match="NOPE"):
        lf.make_problem("NOPE", 1e-6)


def test_unknown_override_is_named():
    with pytest.raises(lf.ProblemError, match="wibble"):
        lf.make_problem("CD2", 1e-6, overrides={"wibble": 3})


def test_exact_derivative_chain():
    # hand-coded derivative formulas agree with central differences
    x = np.linspace(0.05, 0.95, 9)
    h = 1e-6
    for pid in ("CD4-CLAMPED", "RD2"):
        p = lf.make_problem(pid, 0.01)
        for j in range(4):
            fd = (p.exact(x + h, j) - p.exact(x - h, j)) / (2 * h)
            scale = np.max(np.abs(p.exact(x, j + 1))) + 1.0
            assert np.allclose(fd, p.exact(x, j + 1), rtol=5e-5, atol=5e-5 * scale)


def test_exact_eval_order_domain():
    p = lf.make_problem("CD2", 1e-3)
    lf.exact_eval(p, 0.5, 4)
    with pytest.raises(ValueError):
        lf.exact_eval(p, 0.5, 5)


def test_rhs_matches_operator_order2():
    x = np.linspace(0.0, 1.0, 11)
    p = lf.make_problem("CD2", 1e-3)  # -eps u'' - b u' + c u with b = c = 2
    f = -p.eps * p.u(x, 2) - 2.0 * p.u(x, 1) + 2.0 * p.u(x, 0)
    assert np.allclose(p.rhs(x), f, rtol=1e-12, atol=1e-12)
    p = lf.make_problem("RD2", 1e-3)  # -eps^2 u'' + c u
    f = -p.eps**2 * p.u(x, 2) + 2.0 * p.u(x, 0)
    assert np.allclose(p.rhs(x), f, rtol=1e-12, atol=1e-12)


def test_rhs_matches_operator_order4():
    x = np.linspace(0.0, 1.0, 11)
    p = lf.make_problem("RD4-HINGED", 1e-2)  # eps^2 u'''' - (p u')' + q u' + r u
    f = p.eps**2 * p.u(x, 4) - p.u(x, 2) + p.u(x, 0)
    assert np.allclose(p.rhs(x), f, rtol=1e-12, atol=1e-12)
    p = lf.make_problem("CD4-HINGED", 1e-2)  # eps u'''' + b u''' - (p u')' + q u' + r u
    f = p.eps * p.u(x, 4) + 2.0 * p.u(x, 3) - p.u(x, 2) + p.u(x, 0)
    assert np.allclose(p.rhs(x), f, rtol=1e-12, atol=1e-12)
    p = lf.make_problem("MIX4", 1e-2)  # eps^2 u'''' - (b u')' + d u, b constant
    f = p.eps**2 * p.u(x, 4) - 2.0 * p.u(x, 2) + 2.0 * p.u(x, 0)
    assert np.allclose(p.rhs(x), f, rtol=1e-12, atol=1e-12)


def test_w_exact_is_scaled_curvature():
    p = lf.make_problem("MIX4", 1e-3)
    x = np.linspace(0.0, 1.0, 11)
    assert np.allclose(p.w_exact(x), p.eps * p.u(x, 2), rtol=1e-14)
    assert np.allclose(p.w_exact(x, 1), p.eps * p.u(x, 3), rtol=1e-14)


def test_layer_term_eval():
    assert lf.LayerTerm(2.0, "left").eval(0.0, 3, 1e-2) == pytest.approx(-100.0)
    assert lf.LayerTerm(1.0, "right").eval(1.0, 1, 1e-3) == pytest.approx(1.0)
    # decay away from the anchored end
    assert abs(lf.LayerTerm(1.0, "left").eval(0.5, 0, 1e-3)) < 1e-200


def test_layer_override_and_smooth_off():
    p = lf.make_problem("CD2", 1e-3, overrides={"smooth": 0})
    x = np.linspace(0.0, 1.0, 9)
    assert np.allclose(p.exact(x), 1e-3 * np.exp(-x / 1e-3), rtol=1e-14)
    p = lf.make_problem("CD2", 1e-3, overrides={"layers": ()})
    assert np.allclose(p.exact(x), np.cos(np.pi * x / 2), rtol=1e-14)
    p = lf.make_problem("CD2", 1e-3, overrides={"layers": ((2.0, "right"),)})
    assert np.allclose(p.exact(x),
                       np.cos(np.pi * x / 2) + 1e-6 * np.exp(-(1 - x) / 1e-3),
                       rtol=1e-14)


def test_coefficient_override_changes_rhs():
    x = np.linspace(0.0, 1.0, 9)
    p = lf.make_problem("CD2", 1e-3, overrides={"b": 3.0})
    f = -p.eps * p.u(x, 2) - 3.0 * p.u(x, 1) + 2.0 * p.u(x, 0)
    assert np.allclose(p.rhs(x), f, rtol=1e-12)


def test_validation_rejects_weak_coefficients():
    with pytest.raises(lf.ProblemError, match="b"):
        lf.make_problem("CD2", 1e-3, overrides={"b": 1.0})
    with pytest.raises(lf.ProblemError):
        lf.make_problem("MIX4", 1e-3, overrides={"d": 0.0})
    # margin requirement d - b''/2 > delta fails once delta reaches 2
    with pytest.raises(lf.ProblemError):
        lf.make_problem("MIX4", 1e-3, delta=2.0)
    lf.make_problem("MIX4", 1e-3, delta=1.5)


def test_recommended_pairings():
    expect = {
        ("CD2", 1): ("uniform", None),
        ("CD2", 2): ("two-region", 0.5),
        ("CD2", 3): ("two-region", 2.0 / 3.0),
        ("RD2", 1): ("uniform", None),
        ("CD4-HINGED", 3): ("two-region", 0.5),
        ("CD4-XWEAK", 3): ("uniform", None),
        ("CD4-CLAMPED", 3): ("shishkin", None),
        ("RD4-HINGED", 3): ("two-region", 0.5),
        ("RD4-CLAMPED", 3): ("two-region", 0.75),
        ("MIX4", 1): ("two-region", 0.5),
        ("MIX4", 2): ("two-region", 0.75),
        ("MIX4-HINGED", 1): ("uniform", None),
        ("MIX4-HINGED", 2): ("two-region", 0.25),
    }
    for (pid, k), (family, tau_exp) in expect.items():
        rec = RECOMMENDED[pid]
        got = (rec["family"](k), rec["tau_exp"](k))
        assert got[0] == family, (pid, k, got)
        if tau_exp is None:
            assert got[1] is None
        else:
            assert got[1] == pytest.approx(tau_exp)
