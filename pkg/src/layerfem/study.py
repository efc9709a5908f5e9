"""Convergence-study harness: (eps, H) sweeps, EOC, uniformity, smallness.

A sweep runs a grid of cases (outer loop eps, inner loop H), each case being
problem -> mesh -> space -> assemble -> solve -> error norms, or an
interpolation-only variant that skips the solve.  Failures inside a case do
not abort the sweep: the row is kept with an error flag and empty numbers.

Derived quantities:

    eoc         log(e1/e2) / log(H1/H2) between consecutive H at fixed eps
    uniformity  max/min of the error across eps at fixed H (flagged rows
                excluded); the operational meaning of "uniform in eps"
    smallness   layer size at the transition point, eps*exp(-tau/eps),
                against H^(k+1), with the direct branch eps <= H^(k+1)

Tables render as CSV (columns fixed: problem,eps,H,k,mesh,dofs,err_total,
err_j0,err_j1,err_j2,eoc,uniformity,flags) or as pipe-aligned Markdown.
Floats print as their shortest round-trip decimal.  For the two-field
method err_j1 is the H1 seminorm of the primal error and err_j0 the L2 norm
of the auxiliary error; err_j2 stays empty.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .assembly import solve_problem
from .interpolation import interpolate
from .meshes import make_mesh
from .norms import (get_norm_spec, norm_error, seminorm_error, solver_noise,
                    weighted_norm)
from .problems import RECOMMENDED, CatalogError, make_problem

DEFAULT_EPS_GRID = (1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9)
DEFAULT_H_GRID = (1 / 8, 1 / 16, 1 / 32, 1 / 64, 1 / 128)
SOLVE_NOISE_LIMIT = 1.0   # cells whose solver-noise bound reaches the measured
                          # error itself are rounding artifacts, not data
CSV_COLUMNS = ("problem", "eps", "H", "k", "mesh", "dofs", "err_total",
               "err_j0", "err_j1", "err_j2", "eoc", "uniformity", "flags")


class CaseError(RuntimeError):
    """Failure inside a case, annotated with the pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class CaseConfig:
    """One grid point of a sweep; None fields fall back to catalog defaults."""

    problem: str
    eps: float
    H: float
    k: int = 1
    mesh_family: str | None = None
    tau_exp: float | None = None
    alpha: float = 1.0
    tau0: float = 2.0
    sides: str | None = None
    norm: str | None = None
    interp: str | None = None   # nodal|moment|l2 -> interpolation-only case
    norm_tol: float = 1e-6

    def resolved(self) -> "CaseConfig":
        """Fill defaulted fields from the catalog pairing table."""
        if self.problem not in RECOMMENDED:
            raise CatalogError(f"unknown problem id {self.problem!r}; "
                               f"known ids: {', '.join(RECOMMENDED)}")
        rec = RECOMMENDED[self.problem]
        fam = self.mesh_family or rec["family"](self.k)
        tau_exp = self.tau_exp
        if fam in ("two-region", "graded"):
            expected = rec["tau_exp"](self.k)
            if tau_exp is None:
                if expected is None:
                    raise ValueError(
                        f"{self.problem} at k={self.k} pairs with a uniform "
                        f"mesh; pass tau_exp explicitly to force {fam}")
                tau_exp = expected
            elif expected is not None and not math.isclose(tau_exp, expected):
                warnings.warn(
                    f"{self.problem} k={self.k}: tau_exp={tau_exp:g} overrides "
                    f"the recommended {expected:g}", stacklevel=3)
        return replace(self, mesh_family=fam, tau_exp=tau_exp)


@dataclass
class CaseResult:
    """Outcome of one case; error fields are NaN when the case failed."""

    config: CaseConfig
    dofs: int = 0
    err_total: float = math.nan
    err_by_order: dict = field(default_factory=dict)
    residual: float = math.nan
    flags: tuple = ()
    smallness: dict | None = None

    @property
    def failed(self) -> bool:
        return any(f.startswith("error") for f in self.flags)

    @property
    def flagged(self) -> bool:
        return self.failed or any(f.endswith("quad-cap") for f in self.flags) \
            or "solve-precision" in self.flags


def smallness_check(eps: float, H: float, k: int, tau_exp: float) -> dict:
    """Layer magnitude at the transition point versus the H^(k+1) threshold."""
    tau = eps ** tau_exp
    value = eps * math.exp(-tau / eps)
    threshold = H ** (k + 1)
    layer_ok = value <= threshold
    direct_ok = eps <= threshold
    return {"value": value, "threshold": threshold, "layer_ok": layer_ok,
            "direct_ok": direct_ok, "satisfied": layer_ok or direct_ok}


def _layer_sides(problem) -> str:
    sides = {t.side for t in problem.layers}
    if sides == {"left", "right"}:
        return "both"
    return "right" if sides == {"right"} else "left"


def run_case(cfg: CaseConfig) -> CaseResult:
    """Execute one case; raises CaseError naming the failing stage."""
    try:
        cfg = cfg.resolved()
        problem = make_problem(cfg.problem, cfg.eps)
    except Exception as e:
        raise CaseError("problem", e) from e
    try:
        mesh = make_mesh(cfg.mesh_family, cfg.H, eps=cfg.eps, tau_exp=cfg.tau_exp,
                         alpha=cfg.alpha, tau0=cfg.tau0,
                         sides=cfg.sides or _layer_sides(problem))
    except Exception as e:
        raise CaseError("mesh", e) from e

    flags = []
    anchors = tuple(0.0 if t.side == "left" else 1.0 for t in problem.layers)
    spec = get_norm_spec(cfg.norm or problem.norm_preset)

    if cfg.interp is not None:
        try:
            from .assembly import build_spaces
            space = build_spaces(problem, mesh, cfg.k)[0]
            df = interpolate(problem, space, cfg.interp)
        except Exception as e:
            raise CaseError("interp", e) from e
        values = {}
        hit_any = False
        for j, _ in spec.terms:
            values[j], hit = seminorm_error(problem.exact, df, j, tol=cfg.norm_tol,
                                            anchors=anchors, eps=problem.eps)
            hit_any |= hit
        if hit_any:
            flags.append("norm-quad-cap")
        total = weighted_norm(values, spec, problem.eps)
        dofs, residual = space.dof_count, 0.0
    else:
        try:
            sol = solve_problem(problem, mesh, cfg.k)
        except Exception as e:
            raise CaseError("solve", e) from e
        if sol.load_flagged:
            flags.append("load-quad-cap")
        try:
            total, values, hit = norm_error(sol, spec, tol=cfg.norm_tol)
        except Exception as e:
            raise CaseError("norms", e) from e
        if hit:
            flags.append("norm-quad-cap")
        # the dither probe bounds the solution's rounding noise from above;
        # the cell is only untrustworthy once that bound swallows the error
        if solver_noise(sol, spec) > SOLVE_NOISE_LIMIT * total:
            flags.append("solve-precision")
        dofs, residual = sol.dofs, sol.residual

    smallness = None
    if cfg.mesh_family in ("two-region", "graded") and cfg.tau_exp is not None:
        smallness = smallness_check(cfg.eps, cfg.H, cfg.k, cfg.tau_exp)
    return CaseResult(cfg, dofs, total, values, residual, tuple(flags), smallness)


def eoc(e1: float, e2: float, H1: float, H2: float) -> float:
    """log(e1/e2)/log(H1/H2); NaN when either error is nonpositive."""
    if not (e1 > 0.0 and e2 > 0.0) or H1 == H2:
        return math.nan
    return math.log(e1 / e2) / math.log(H1 / H2)


def uniformity(errors) -> float:
    """max/min over the given positive errors; NaN if fewer than two."""
    vals = [e for e in errors if e > 0.0 and math.isfinite(e)]
    if len(vals) < 2:
        return math.nan
    return max(vals) / min(vals)


@dataclass
class SweepTable:
    """Grid of CaseResults (eps outer, H inner) with derived diagnostics."""

    results: list
    eps_list: tuple
    H_list: tuple

    def result(self, eps: float, H: float) -> CaseResult:
        i = self.eps_list.index(eps)
        j = self.H_list.index(H)
        return self.results[i * len(self.H_list) + j]

    def row_eocs(self, eps: float) -> list:
        """EOC per consecutive H pair for one eps; NaN where undefined."""
        out = [math.nan]
        for j in range(1, len(self.H_list)):
            r1, r2 = self.result(eps, self.H_list[j - 1]), self.result(eps, self.H_list[j])
            if r1.flagged or r2.flagged:
                out.append(math.nan)
            else:
                out.append(eoc(r1.err_total, r2.err_total,
                               self.H_list[j - 1], self.H_list[j]))
        return out

    def finest_eoc(self, eps: float) -> float:
        return self.row_eocs(eps)[-1]

    def max_curve(self) -> list:
        """Worst error over eps at each H (flagged cases excluded).

        A rate read off this curve tracks the uniform-convergence claim
        sup_eps error <= C H^p directly, instead of any single eps row.
        """
        out = []
        for H in self.H_list:
            errs = [self.result(eps, H).err_total for eps in self.eps_list
                    if not self.result(eps, H).flagged]
            errs = [e for e in errs if math.isfinite(e)]
            out.append(max(errs) if errs else math.nan)
        return out

    def max_curve_eoc(self) -> float:
        """Finest-pair EOC of the max-over-eps error curve."""
        curve = self.max_curve()
        if len(curve) < 2:
            return math.nan
        return eoc(curve[-2], curve[-1], self.H_list[-2], self.H_list[-1])

    def uniformity_at(self, H: float) -> float:
        errs = [self.result(eps, H).err_total for eps in self.eps_list
                if not self.result(eps, H).flagged]
        return uniformity(errs)


def run_sweep(problem: str, eps_list=DEFAULT_EPS_GRID, H_list=DEFAULT_H_GRID,
              parallel: bool = True, **case_kw) -> SweepTable:
    """Run the full grid; failed cases become flagged rows, not exceptions."""
    eps_list = tuple(eps_list)
    H_list = tuple(H_list)
    configs = [CaseConfig(problem=problem, eps=eps, H=H, **case_kw)
               for eps in eps_list for H in H_list]

    def guarded(cfg: CaseConfig) -> CaseResult:
        try:
            return run_case(cfg)
        except CaseError as e:
            return CaseResult(cfg, flags=(f"error[{e.stage}]: {e.cause}",))
        except Exception as e:  # pragma: no cover - defensive
            return CaseResult(cfg, flags=(f"error: {e}",))

    if parallel and len(configs) > 1:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(guarded, configs))
    else:
        results = [guarded(c) for c in configs]
    return SweepTable(results, eps_list, H_list)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return ""
        return repr(x)
    return str(x)


def table_rows(table: SweepTable) -> list:
    """Rows of rendered strings in CSV column order."""
    rows = []
    for i, eps in enumerate(table.eps_list):
        eocs = table.row_eocs(eps)
        for j, H in enumerate(table.H_list):
            r = table.results[i * len(table.H_list) + j]
            cfg = r.config.resolved()
            uni = table.uniformity_at(H)
            rows.append([
                cfg.problem, _fmt(float(eps)), _fmt(float(H)), str(cfg.k),
                cfg.mesh_family, str(r.dofs) if r.dofs else "",
                _fmt(r.err_total),
                _fmt(r.err_by_order.get(0, math.nan)),
                _fmt(r.err_by_order.get(1, math.nan)),
                _fmt(r.err_by_order.get(2, math.nan)),
                _fmt(eocs[j]), _fmt(uni),
                ";".join(r.flags),
            ])
    return rows


def render(table: SweepTable, format: str = "csv") -> str:
    """CSV or pipe-aligned Markdown with the fixed column schema."""
    rows = table_rows(table)
    if format == "csv":
        lines = [",".join(CSV_COLUMNS)]
        lines += [",".join(row) for row in rows]
        return "\n".join(lines) + "\n"
    if format == "md":
        all_rows = [list(CSV_COLUMNS)] + rows
        widths = [max(len(r[c]) for r in all_rows) for c in range(len(CSV_COLUMNS))]
        def line(r):
            return "| " + " | ".join(v.ljust(w) for v, w in zip(r, widths)) + " |"
        sep = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
        return "\n".join([line(list(CSV_COLUMNS)), sep] + [line(r) for r in rows]) + "\n"
    raise ValueError(f"unknown render format {format!r}; known: csv, md")
