"""Convergence-study harness: cases, sweeps, diagnostics, rendering."""

import math

import numpy as np
import pytest

import layerfem as lf
from layerfem.study import (CSV_COLUMNS, CaseConfig, CaseResult, SweepTable,
                            eoc, render, run_case, run_sweep, smallness_check,
                            table_rows, uniformity)


def synthetic_table(errs, eps_list, H_list, flags=None):
    results = []
    for i, eps in enumerate(eps_list):
        for j, H in enumerate(H_list):
            cfg = CaseConfig("CD2", eps, H)
            fl = () if flags is None else flags.get((i, j), ())
            results.append(CaseResult(cfg, dofs=8, err_total=errs[i][j],
                                      err_by_order={0: errs[i][j]}, residual=0.0,
                                      flags=fl))
    return SweepTable(results, tuple(eps_list), tuple(H_list))


def test_eoc_identity():
    for p in (1, 2, 3):
        assert eoc(1.0, 2.0 ** (-p), 1.0, 0.5) == pytest.approx(p, abs=1e-12)
        assert eoc(0.7, 0.7 * 3.0 ** (-p), 0.3, 0.1) == pytest.approx(p, abs=1e-12)


def test_eoc_undefined_cases():
    assert math.isnan(eoc(0.0, 1.0, 1.0, 0.5))
    assert math.isnan(eoc(1.0, 0.0, 1.0, 0.5))
    assert math.isnan(eoc(1.0, 1.0, 0.5, 0.5))
    assert math.isnan(eoc(math.nan, 1.0, 1.0, 0.5))


def test_uniformity():
    assert uniformity([1.0, 2.0, 4.0]) == pytest.approx(4.0)
    assert math.isnan(uniformity([3.0]))
    assert uniformity([2.0, math.nan, 1.0]) == pytest.approx(2.0)


def test_smallness_check_branches():
    r = smallness_check(0.01, 1.0 / 64.0, 3, 2.0 / 3.0)
    assert r["value"] == pytest.approx(0.01 * math.exp(-0.01 ** (2.0 / 3.0) / 0.01))
    assert r["threshold"] == pytest.approx((1.0 / 64.0) ** 4)
    assert r["layer_ok"] == (r["value"] <= r["threshold"])
    assert r["direct_ok"] == (0.01 <= r["threshold"])
    assert r["satisfied"] == (r["layer_ok"] or r["direct_ok"])
    assert not r["satisfied"]
    # frozen deep-layer value: eps * exp(-eps^(-1/2)) at eps = 0.0025
    r = smallness_check(0.0025, 0.125, 2, 0.5)
    assert r["value"] == pytest.approx(5.15e-12, rel=0.02)
    assert r["satisfied"]


def test_case_config_resolution():
    cfg = CaseConfig("CD2", 1e-6, 0.125, k=2).resolved()
    assert cfg.mesh_family == "two-region"
    assert cfg.tau_exp == pytest.approx(0.5)
    cfg = CaseConfig("CD2", 1e-6, 0.125, k=1).resolved()
    assert cfg.mesh_family == "uniform"
    with pytest.raises(lf.CatalogError):
        CaseConfig("NOPE", 1e-6, 0.125).resolved()
    with pytest.raises(ValueError, match="tau_exp"):
        CaseConfig("MIX4-HINGED", 1e-6, 0.125, k=1,
                   mesh_family="two-region").resolved()
    with pytest.warns(UserWarning, match="overrides the recommended"):
        CaseConfig("CD2", 1e-6, 0.125, k=2, mesh_family="two-region",
                   tau_exp=0.9).resolved()


def test_run_case_solve_and_interp():
    solve = run_case(CaseConfig("CD2", 1e-6, 0.0625, k=2))
    assert solve.dofs >= 33
    assert solve.err_total > 0.0
    assert not solve.failed
    assert solve.smallness is not None  # two-region mesh attaches the check
    interp = run_case(CaseConfig("CD2", 1e-6, 0.0625, k=2, interp="nodal"))
    assert interp.residual == 0.0
    assert interp.err_total < solve.err_total * 10.0
    uni = run_case(CaseConfig("CD2", 1e-6, 0.0625, k=1))
    assert uni.smallness is None


def test_run_case_determinism():
    cfg = CaseConfig("CD2", 1e-7, 0.0625, k=2)
    a = run_case(cfg)
    b = run_case(cfg)
    assert a.err_total == b.err_total
    assert a.err_by_order == b.err_by_order
    assert a.flags == b.flags


def test_run_sweep_parallel_matches_sequential():
    kw = dict(eps_list=(1e-4, 1e-6), H_list=(0.125, 0.0625), k=1)
    par = run_sweep("CD2", parallel=True, **kw)
    seq = run_sweep("CD2", parallel=False, **kw)
    for rp, rs in zip(par.results, seq.results):
        assert rp.err_total == rs.err_total
        assert rp.config.eps == rs.config.eps


def test_run_sweep_captures_stage_failures():
    # tau = eps^0.2 exceeds the two-region cap, so every case fails at mesh
    t = run_sweep("CD2", eps_list=(0.09,), H_list=(0.125,),
                  mesh_family="two-region", tau_exp=0.2)
    r = t.results[0]
    assert r.failed and r.flagged
    assert math.isnan(r.err_total)
    assert r.flags[0].startswith("error[mesh]:")
    rows = table_rows(t)
    assert rows[0][CSV_COLUMNS.index("err_total")] == ""
    assert "error[mesh]" in rows[0][CSV_COLUMNS.index("flags")]


def test_table_readings_exclude_flagged():
    errs = [[8.0, 4.0, 2.0], [8.0, 4.0, 1.0], [8.0, 4.0, 1.0]]
    eps_list = [1e-4, 1e-5, 1e-6]
    t = synthetic_table(errs, eps_list, [0.5, 0.25, 0.125])
    assert t.max_curve() == [8.0, 4.0, 2.0]
    assert t.max_curve_eoc() == pytest.approx(1.0)
    assert t.uniformity_at(0.125) == pytest.approx(2.0)
    assert t.row_eocs(1e-5)[-1] == pytest.approx(2.0)
    assert math.isnan(t.row_eocs(1e-5)[0])
    # flagging the (1e-4, 0.125) cell removes it from every diagnostic
    t = synthetic_table(errs, eps_list, [0.5, 0.25, 0.125],
                        flags={(0, 2): ("solve-precision",)})
    assert t.max_curve()[-1] == 1.0
    assert t.max_curve_eoc() == pytest.approx(2.0)
    assert t.uniformity_at(0.125) == pytest.approx(1.0)
    assert math.isnan(t.row_eocs(1e-4)[-1])


def test_render_empty_and_single():
    empty = SweepTable([], (), ())
    assert render(empty, "csv") == ",".join(CSV_COLUMNS) + "\n"
    one = synthetic_table([[0.5]], [1e-4], [0.125])
    lines = render(one, "csv").splitlines()
    assert len(lines) == 2
    cells = lines[1].split(",")
    assert cells[CSV_COLUMNS.index("eoc")] == ""  # undefined at the largest H
    assert cells[CSV_COLUMNS.index("uniformity")] == ""
    assert float(cells[CSV_COLUMNS.index("err_total")]) == 0.5


def test_render_markdown_mirrors_csv():
    t = synthetic_table([[8.0, 4.0], [6.0, 3.0]], [1e-4, 1e-5], [0.5, 0.25])
    csv_lines = render(t, "csv").splitlines()
    md_lines = render(t, "md").splitlines()
    assert md_lines[0].startswith("|")
    assert set(md_lines[1].replace("|", "").strip()) <= {"-", " ", ":"}
    for csv_row, md_row in zip(csv_lines[1:], md_lines[2:]):
        md_cells = [c.strip() for c in md_row.strip().strip("|").split("|")]
        assert md_cells == csv_row.split(",")
    with pytest.raises(ValueError):
        render(t, "html")


def test_rendered_floats_round_trip():
    t = run_sweep("CD2", eps_list=(1e-5,), H_list=(0.125, 0.0625), k=1)
    rows = table_rows(t)
    for row in rows:
        err = float(row[CSV_COLUMNS.index("err_total")])
        eps = float(row[CSV_COLUMNS.index("eps")])
        r = t.result(eps, float(row[CSV_COLUMNS.index("H")]))
        assert err == r.err_total  # shortest-repr decimal is exact


def test_flag_vocabulary():
    for flag in ("norm-quad-cap", "load-quad-cap", "solve-precision"):
        r = CaseResult(CaseConfig("CD2", 1e-4, 0.125), err_total=1.0, flags=(flag,))
        assert r.flagged and not r.failed, flag
    r = CaseResult(CaseConfig("CD2", 1e-4, 0.125), err_total=1.0, flags=())
    assert not r.flagged
