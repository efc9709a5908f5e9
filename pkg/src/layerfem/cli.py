"""Command-line front end: mesh dumps, single solves, interpolation studies,
convergence sweeps, and the catalog listing.

Every subcommand can read its options from a flat key=value config file
(--config FILE); keys are the long flag names without the leading dashes,
unknown keys are rejected by name, and explicit flags override the file.
Exit codes: 0 success, 1 usage error, 2 a case failed at runtime (rows are
retained with error flags).
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .meshes import make_mesh
from .norms import NORM_PRESETS, get_norm_spec, norm_error
from .problems import RECOMMENDED, catalog_ids, make_problem
from .study import CaseConfig, _layer_sides, render, run_sweep

_FAMILIES = ("uniform", "two-region", "shishkin", "graded")
_INTERP_KINDS = ("nodal", "moment", "l2")
SAMPLES = 401


class UsageError(ValueError):
    """Bad flags or config; message names the offender."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage errors; the contract reserves 2
    # for runtime case failures, so route usage problems through exit 1
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _mesh_options(sub, flag="--mesh-family"):
    sub.add_argument(flag, dest="mesh_family", choices=_FAMILIES)
    sub.add_argument("--eps", type=float)
    sub.add_argument("--H", type=float)
    sub.add_argument("--k", type=int)
    sub.add_argument("--tau-exp", dest="tau_exp", type=float)
    sub.add_argument("--alpha", type=float)
    sub.add_argument("--tau0", type=float)
    sub.add_argument("--sides", choices=("left", "right", "both"))


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise UsageError(f"expected a comma-separated number list, got {text!r}") \
            from None


def build_parser() -> _Parser:
    parser = _Parser(prog="layerfem", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", metavar="command")

    m = subs.add_parser("mesh", help="print a mesh as node CSV")
    _mesh_options(m, flag="--family")

    s = subs.add_parser("solve", help="solve one case, print x,u,u' samples")
    s.add_argument("--problem")
    s.add_argument("--norm", choices=tuple(NORM_PRESETS))
    _mesh_options(s)
    s.add_argument("--plot", metavar="FILE")

    i = subs.add_parser("interp", help="interpolation-error sweep")
    i.add_argument("--problem")
    i.add_argument("--interp", choices=_INTERP_KINDS)
    i.add_argument("--eps-list", dest="eps_list", type=_floats)
    i.add_argument("--H-list", dest="H_list", type=_floats)
    i.add_argument("--norm", choices=tuple(NORM_PRESETS))
    _mesh_options(i)
    i.add_argument("--format", choices=("csv", "md"))
    i.add_argument("--seq", action="store_const", const=True)

    w = subs.add_parser("sweep", help="convergence sweep over (eps, H)")
    w.add_argument("--problem")
    w.add_argument("--eps-list", dest="eps_list", type=_floats)
    w.add_argument("--H-list", dest="H_list", type=_floats)
    w.add_argument("--norm", choices=tuple(NORM_PRESETS))
    _mesh_options(w)
    w.add_argument("--format", choices=("csv", "md"))
    w.add_argument("--seq", action="store_const", const=True)
    w.add_argument("--plot", metavar="FILE")

    subs.add_parser("presets", help="list the catalog and recommended meshes")

    for sub in (m, s, i, w):
        sub.add_argument("--out", metavar="FILE")
        sub.add_argument("--config", metavar="FILE")
    return parser


_BOOLS = {"true": True, "1": True, "yes": True,
          "false": False, "0": False, "no": False}


def _parse_config(path: str, ns: argparse.Namespace) -> dict:
    """key=value lines; keys are long flag names without leading dashes."""
    known = {k.replace("_", "-"): k
             for k in vars(ns) if k not in ("config", "command")}
    if ns.command == "mesh":
        known["family"] = known.pop("mesh-family")
    out = {}
    try:
        lines = open(path).read().splitlines()
    except OSError as e:
        raise UsageError(f"cannot read config file {path!r}: {e.strerror}") from None
    for ln, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{ln}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in known:
            raise UsageError(f"{path}:{ln}: unknown config key {key!r}")
        out[known[key]] = value
    return out


def _coerce(key: str, value: str):
    if key in ("eps", "H", "tau_exp", "alpha", "tau0"):
        return float(value)
    if key == "k":
        return int(value)
    if key in ("eps_list", "H_list"):
        return _floats(value)
    if key == "seq":
        try:
            return _BOOLS[value.lower()]
        except KeyError:
            raise UsageError(f"config key 'seq' expects a boolean, got {value!r}") \
                from None
    return value


def _merge_config(ns: argparse.Namespace):
    if getattr(ns, "config", None) is None:
        return
    for key, raw in _parse_config(ns.config, ns).items():
        if getattr(ns, key) is None:
            setattr(ns, key, _coerce(key, raw))


def _require(ns, *names):
    for name in names:
        if getattr(ns, name) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required")


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _resolved_config(ns) -> CaseConfig:
    """CaseConfig from flags, recommended pairings filling the gaps."""
    cfg = CaseConfig(problem=ns.problem, eps=ns.eps, H=ns.H, k=ns.k or 1,
                     mesh_family=ns.mesh_family,
                     tau_exp=ns.tau_exp, alpha=ns.alpha or 1.0,
                     tau0=ns.tau0 or 2.0, sides=ns.sides,
                     norm=ns.norm)
    return cfg.resolved()


def cmd_mesh(ns) -> int:
    if ns.mesh_family is None:
        raise UsageError("--family is required")
    _require(ns, "H")
    mesh = make_mesh(ns.mesh_family, ns.H, eps=ns.eps, tau_exp=ns.tau_exp,
                     alpha=ns.alpha or 1.0, tau0=ns.tau0 or 2.0,
                     sides=ns.sides or "left")
    _emit(mesh.dump(), ns.out)
    return 0


def cmd_solve(ns) -> int:
    from .assembly import solve_problem

    _require(ns, "problem", "eps", "H")
    problem = make_problem(ns.problem, ns.eps)
    if ns.norm is not None:
        get_norm_spec(ns.norm)
    cfg = _resolved_config(ns)
    mesh = make_mesh(cfg.mesh_family, cfg.H, eps=cfg.eps, tau_exp=cfg.tau_exp,
                     alpha=cfg.alpha, tau0=cfg.tau0,
                     sides=cfg.sides or _layer_sides(problem))
    try:
        sol = solve_problem(problem, mesh, cfg.k)
        err, _, _ = norm_error(sol, cfg.norm, tol=cfg.norm_tol)
    except Exception as e:
        sys.stderr.write(f"layerfem: case failed: {e}\n")
        return 2
    preset = get_norm_spec(cfg.norm or problem.norm_preset).name
    x = np.linspace(0.0, 1.0, SAMPLES)
    lines = [f"# meta: problem={problem.id},eps={problem.eps:g},H={cfg.H:g},"
             f"k={cfg.k},mesh={mesh.family},norm={preset},err={err:.17g}",
             "x,u,u'"]
    lines += [f"{xi:.17g},{ui:.17g},{di:.17g}"
              for xi, ui, di in zip(x, sol.u(x), sol.u(x, 1))]
    _emit("\n".join(lines) + "\n", ns.out)
    if ns.plot:
        from .figures import solution_figure
        solution_figure(sol, ns.plot)
    return 0


def _sweep_table(ns, interp=None):
    _require(ns, "problem")
    make_problem(ns.problem, (ns.eps_list or (1e-6,))[0])   # id check up front
    if ns.norm is not None:
        get_norm_spec(ns.norm)
    kw = dict(k=ns.k or 1, mesh_family=ns.mesh_family,
              tau_exp=ns.tau_exp, alpha=ns.alpha or 1.0, tau0=ns.tau0 or 2.0,
              sides=ns.sides, norm=ns.norm)
    if interp is not None:
        kw["interp"] = interp
    from .study import DEFAULT_EPS_GRID, DEFAULT_H_GRID
    return run_sweep(ns.problem, ns.eps_list or DEFAULT_EPS_GRID,
                     ns.H_list or DEFAULT_H_GRID,
                     parallel=not ns.seq, **kw)


def cmd_interp(ns) -> int:
    kind = ns.interp or "nodal"
    if kind not in _INTERP_KINDS:
        raise UsageError(f"--interp must be one of {', '.join(_INTERP_KINDS)}, "
                         f"got {kind!r}")
    table = _sweep_table(ns, interp=kind)
    _emit(render(table, ns.format or "csv"), ns.out)
    return 2 if any(r.failed for r in table.results) else 0


def cmd_sweep(ns) -> int:
    table = _sweep_table(ns)
    _emit(render(table, ns.format or "csv"), ns.out)
    if ns.plot:
        from .figures import convergence_figure
        convergence_figure(table, ns.plot, title=ns.problem)
    return 2 if any(r.failed for r in table.results) else 0


def cmd_presets(_ns) -> int:
    rows = [("problem", "order", "fields", "norm", "k=1 mesh", "k=2 mesh")]
    for pid in catalog_ids():
        p = make_problem(pid, 1e-6)
        rec = RECOMMENDED[pid]
        cells = []
        for k in (1, 2):
            fam = rec["family"](k)
            tau = rec["tau_exp"](k)
            cells.append(fam if tau is None else f"{fam} tau_exp={tau:g}")
        rows.append((pid, str(p.order), "2" if p.mixed else "1",
                     p.norm_preset, cells[0], cells[1]))
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    for row in rows:
        sys.stdout.write("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip()
                         + "\n")
    return 0


_COMMANDS = {"mesh": cmd_mesh, "solve": cmd_solve, "interp": cmd_interp,
             "sweep": cmd_sweep, "presets": cmd_presets}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None:
        parser.print_help()
        return 1
    try:
        _merge_config(ns)
        return _COMMANDS[ns.command](ns)
    except (UsageError, ValueError) as e:
        sys.stderr.write(f"layerfem: error: {e}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
