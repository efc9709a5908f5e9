"""Gauss-Legendre rules and layer-aware adaptive integration.

Fixed rules drive element-matrix assembly.  Error norms and load vectors
integrate functions with boundary layer content, which a fixed rule on a
coarse element cannot resolve at small eps, so those integrals use
`adaptive_integral`: the interval is first split at geometrically spaced
seed points near each layer anchor (anchor + eps*2^m, m = 0..7), then each
segment is integrated by 8-point Gauss with panel doubling until two
successive estimates agree to the requested tolerance.  The panel count per
element is capped at 2^14; hitting the cap flags the result instead of
failing.
"""
from __future__ import annotations

import functools

import numpy as np

PANEL_CAP = 2 ** 14
_SEED_DOUBLINGS = 8   # seeds at anchor + eps*2^m for m = 0..7


@functools.lru_cache(maxsize=32)
def gauss_rule(n: int):
    """n-point Gauss-Legendre points and weights on [0, 1]."""
    if n < 1:
        raise ValueError(f"rule order must be >= 1, got {n}")
    pts, wts = np.polynomial.legendre.leggauss(n)
    return 0.5 * (pts + 1.0), 0.5 * wts


def layer_seeds(anchors, eps: float, a: float, b: float) -> np.ndarray:
    """Geometric subdivision points inside (a, b) near layer anchors.

    anchors is an iterable of 0.0 (left layer) and/or 1.0 (right layer).
    """
    seeds = []
    for anchor in anchors:
        steps = eps * 2.0 ** np.arange(_SEED_DOUBLINGS)
        pts = anchor + steps if anchor == 0.0 else anchor - steps
        seeds.extend(pts)
    seeds = [s for s in seeds if a < s < b]
    return np.asarray(sorted(seeds))


def adaptive_integral(g, a: float, b: float, seeds=(), tol: float = 1e-3,
                      atol: float = 0.0, cap: int = PANEL_CAP):
    """Integrate vectorized g over [a, b]; returns (value, hit_cap_flag).

    Doubles the per-segment panel count until successive whole-interval
    estimates differ by less than tol relative (plus atol absolute).
    """
    if b <= a:
        return 0.0, False
    edges = np.concatenate(([a], np.asarray(seeds, dtype=float), [b]))
    gp, gw = gauss_rule(8)
    n_seg = edges.size - 1
    n = 1
    prev = None
    while True:
        # panel edges: n equal panels inside every segment
        frac = np.arange(n + 1) / n
        panel_edges = edges[:-1, None] + np.diff(edges)[:, None] * frac[None, :]
        lefts = panel_edges[:, :-1].ravel()
        widths = np.diff(panel_edges, axis=1).ravel()
        pts = lefts[:, None] + widths[:, None] * gp[None, :]
        vals = np.asarray(g(pts.ravel()), dtype=float).reshape(pts.shape)
        est = float(np.einsum("pq,q,p->", vals, gw, widths))
        if prev is not None and abs(est - prev) <= tol * abs(est) + atol:
            return est, False
        if 2 * n * n_seg > cap:
            return est, True
        prev = est
        n *= 2


def adaptive_batch(jobs, tol: float, scale: str = "max", atol_floor: float = 0.0,
                   noise_rel: float = 0.0, first_cap: int = 1024):
    """Integrate related jobs with a shared noise floor; returns (values, flagged).

    jobs: sequence of (g, a, b, seeds).  A squared-difference or manufactured
    integrand carries float cancellation noise, so an integral many orders of
    magnitude below its siblings can never satisfy a purely relative
    tolerance.  Pass one integrates everything under a modest panel budget;
    the magnitudes collected there set an absolute tolerance (tol times the
    largest value for scale='max', tol times the mean magnitude for
    scale='sum', where job values accumulate into one total) under which the
    stragglers rerun with the full budget.  Only a still-unconverged rerun
    flags the batch.

    noise_rel raises each straggler's floor to noise_rel times its own
    first-pass magnitude.  Callers set it when the integrand itself cannot
    be evaluated beyond that relative accuracy, e.g. a layer anchored at
    x=1: the distance 1-x quantizes at eps_mach absolute, so exp(-(1-x)/eps)
    carries eps_mach/eps relative noise no panel count can average away.
    """
    values = []
    pending = []
    for idx, (g, a, b, seeds) in enumerate(jobs):
        val, hit = adaptive_integral(g, a, b, seeds, tol=tol, atol=atol_floor,
                                     cap=first_cap)
        values.append(val)
        if hit:
            pending.append(idx)
    if not pending:
        return values, False
    mags = [abs(v) for v in values]
    base = max(mags) if scale == "max" else sum(mags) / max(1, len(mags))
    atol = max(tol * base, atol_floor)
    flagged = False
    for idx in pending:
        g, a, b, seeds = jobs[idx]
        own = max(atol, noise_rel * abs(values[idx]))
        values[idx], hit = adaptive_integral(g, a, b, seeds, tol=tol, atol=own)
        flagged |= hit
    return values, flagged
