"""Empirical decay-bound fits for the detection probabilities.

Two families of bounds are checked on finite grids:

* a universal two-photon bound P <= C / ((t0 + |t1|) (t0 + |t2|)) valid
  everywhere, fitted by scanning P over spacetime grids and profiling
  the constant against the offset t0;
* super-polynomial decay outside the light cone |z| >= |t|, checked by
  fitting log-log slopes of P along rays and by computing the constants
  C_{n1 n2} = sup P (1 + |z1|)^{n1} (1 + |z2|)^{n2}.

A grid supremum only bounds the true supremum from below, so every fit
records how much the constant drifts under grid refinement instead of
claiming a proof.  Points where P falls below the double-precision
cancellation floor are reported as below-floor passes and excluded from
slope fits.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import t as _student_t

from .correlators import (
    SpacetimePoint,
    asymptotic_biphoton,
    biphoton_scan,
    single_scan,
)
from .dispersion import DispersionRelation

__all__ = [
    "BoundFit",
    "SlopeFit",
    "Ray",
    "LightconeReport",
    "fit_universal_bound",
    "check_lightcone_decay",
    "decay_slope_fit",
    "bound_fit_csv_rows",
    "summarize_bound_fits",
]

PROBABILITY_FLOOR = 1e-26      # |A| ~ 1e-13, the oscillatory cancellation limit
T_OFFSET_GRID_DECADES = (-2.0, 2.0)
T_OFFSET_GRID_POINTS = 50


@dataclass(frozen=True)
class BoundFit:
    bound_kind: str                       # "two_photon_universal" | "outside_lightcone"
    constant: float
    max_violation: float                  # max(P * denominator - C); <= 0 means holds
    grid_descriptor: str
    t_offset: float | None = None
    orders: tuple[int, int] | None = None
    refinement_drift: float | None = None
    t_offset_profile: tuple[np.ndarray, np.ndarray] | None = None
    asymptotic_constant: float | None = None
    n_points: int = 0
    n_below_floor: int = 0
    n_excluded: int = 0
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    half_width_95: float
    n_used: int
    n_excluded: int


@dataclass(frozen=True)
class Ray:
    """Samples along one outside-the-cone ray at fixed detection time.

    ``frozen`` pins the second detector of a pair measurement; leave it
    None for single-photon scans.
    """

    t: float
    z_values: np.ndarray
    frozen: SpacetimePoint | None = None

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.z_values, dtype=float))
        if not (np.abs(z) >= abs(self.t)).all():
            raise ValueError("ray samples must satisfy |z| >= |t| (outside the cone)")
        object.__setattr__(self, "z_values", z)


@dataclass(frozen=True)
class LightconeReport:
    fits: tuple[BoundFit, ...]
    verdict: str                          # "pass" | "fail" | "inconclusive"
    ray_slopes: tuple[SlopeFit, ...]
    diagnostics: dict


# ----------------------------------------------------------------------
# universal bound
# ----------------------------------------------------------------------

def _golden_min(fun, a: float, b: float, iters: int = 40) -> tuple[float, float]:
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = b - phi * (b - a)
    x2 = a + phi * (b - a)
    f1, f2 = fun(x1), fun(x2)
    for _ in range(iters):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - phi * (b - a)
            f1 = fun(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + phi * (b - a)
            f2 = fun(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def _refined_grid(v: np.ndarray) -> np.ndarray:
    """Double the density keeping the original nodes (midpoint insertion)."""
    v = np.asarray(v, dtype=float)
    mids = 0.5 * (v[:-1] + v[1:])
    return np.sort(np.concatenate([v, mids]))


def asymptotic_bound_weight(f, d: DispersionRelation,
                            v1: np.ndarray, v2: np.ndarray) -> np.ndarray:
    """P * t1 * t2 in the large-time limit, on a velocity grid.

    From the stationary-phase probability this equals
    |f(k10,k20) + f(k20,k10)|^2 / (16 w''(k10) w(k10) w''(k20) w(k20));
    its grid supremum is the asymptotic estimate of the universal C.
    """
    v1 = np.atleast_1d(np.asarray(v1, dtype=float))
    v2 = np.atleast_1d(np.asarray(v2, dtype=float))
    k1 = np.array([d.stationary_point(v) for v in v1])
    k2 = np.array([d.stationary_point(v) for v in v2])
    pair = f(k1[:, None], k2[None, :]) + f(k2[None, :], k1[:, None])
    den1 = d.omega_dd(k1) * d.omega(k1)
    den2 = d.omega_dd(k2) * d.omega(k2)
    return np.abs(pair) ** 2 / (16.0 * den1[:, None] * den2[None, :])


def fit_universal_bound(f, d: DispersionRelation, t_pairs, v1_grid, v2_grid,
                        rel_tol: float = 1e-6, refine: bool = True,
                        use_asymptotics: bool = True) -> BoundFit:
    """Fit C and t0 such that P <= C / ((t0+|t1|) (t0+|t2|)) on the grid.

    The scan covers every (t1, t2) pair combined with the velocity grid
    (detectors at z_i = v_i t_i).  Points are evaluated by quadrature
    below the asymptotic applicability guard and by stationary phase
    beyond it; whenever the asymptotic route is taken, a quadrature
    cross-check on a grid subsample is recorded in the diagnostics.

    C(t0) = sup P (t0+|t1|)(t0+|t2|) is profiled on a logarithmic t0 grid
    over [1e-2, 1e2]/mass (50 points) and the minimising t0 is refined by
    golden section; this minimum defines the reported C, which makes
    max_violation <= 0 on the scanned grid by construction.  The grid
    supremum only bounds the true constant from below: refinement_drift
    records the relative change of C when the velocity grids double in
    density (original nodes kept).
    """
    v1_grid = np.asarray(v1_grid, dtype=float)
    v2_grid = np.asarray(v2_grid, dtype=float)
    v1_fine = _refined_grid(v1_grid) if refine else v1_grid
    v2_fine = _refined_grid(v2_grid) if refine else v2_grid
    in_coarse1 = np.isin(v1_fine, v1_grid)
    in_coarse2 = np.isin(v2_fine, v2_grid)

    entries = []        # (t1, t2, P fine grid, method)
    cross_checks = []
    for t1, t2 in t_pairs:
        z1 = v1_fine * t1
        z2 = v2_fine * t2
        guards = np.array([
            [min(asymptotic_biphoton(f, d, a, b, t1, t2).guard_values)
             for b in (v2_fine[0], v2_fine[-1])]
            for a in (v1_fine[0], v1_fine[-1])])
        if use_asymptotics and guards.min() >= 10.0:
            P = np.empty((v1_fine.size, v2_fine.size))
            for i, a in enumerate(v1_fine):
                for j, b in enumerate(v2_fine):
                    P[i, j] = asymptotic_biphoton(f, d, a, b, t1, t2).probability
            method = "asymptotic_spa"
            # spot-check the asymptotics against the exact evaluator
            amps, _, _ = biphoton_scan(f, d, t1, t2, z1[::max(1, v1_fine.size // 2)],
                                       z2[::max(1, v2_fine.size // 2)], rel_tol)
            pq = np.abs(amps) ** 2
            ps = P[::max(1, v1_fine.size // 2), ::max(1, v2_fine.size // 2)]
            scale = max(pq.max(), ps.max())
            if scale > 0:
                cross_checks.append(float(np.abs(pq - ps).max() / scale))
        else:
            amps, _, _ = biphoton_scan(f, d, t1, t2, z1, z2, rel_tol)
            P = np.abs(amps) ** 2
            method = "adaptive_panel"
        entries.append((float(t1), float(t2), P, method))

    def weighted_sup(t0: float, coarse_only: bool) -> float:
        best = 0.0
        for t1, t2, P, _ in entries:
            if coarse_only:
                P = P[np.ix_(in_coarse1, in_coarse2)]
            w = (t0 + abs(t1)) * (t0 + abs(t2))
            best = max(best, float(P.max()) * w)
        return best

    lo = 10.0 ** T_OFFSET_GRID_DECADES[0] / d.mass
    hi = 10.0 ** T_OFFSET_GRID_DECADES[1] / d.mass
    t0_grid = np.geomspace(lo, hi, T_OFFSET_GRID_POINTS)
    profile = np.array([weighted_sup(t0, True) for t0 in t0_grid])
    i_best = int(np.argmin(profile))
    a = t0_grid[max(i_best - 1, 0)]
    b = t0_grid[min(i_best + 1, t0_grid.size - 1)]
    t0_best, c_base = _golden_min(lambda x: weighted_sup(x, True), a, b)
    if profile[i_best] < c_base:
        t0_best, c_base = float(t0_grid[i_best]), float(profile[i_best])

    violation = weighted_sup(t0_best, True) - c_base
    drift = None
    if refine:
        c_fine = weighted_sup(t0_best, False)
        drift = abs(c_fine - c_base) / c_base if c_base > 0 else 0.0

    asym = None
    if use_asymptotics:
        asym = float(asymptotic_bound_weight(f, d, v1_fine, v2_fine).max())

    n_pts = sum(p.size for _, _, p, _ in entries)
    desc = (f"{len(entries)} time pairs x {v1_grid.size}x{v2_grid.size} velocities "
            f"(refined {v1_fine.size}x{v2_fine.size})")
    diag = {"methods": sorted({m for *_, m in entries})}
    if cross_checks:
        diag["spa_cross_check_max_rel"] = max(cross_checks)
    return BoundFit(
        bound_kind="two_photon_universal",
        constant=float(c_base),
        max_violation=float(violation),
        grid_descriptor=desc,
        t_offset=float(t0_best),
        refinement_drift=drift,
        t_offset_profile=(t0_grid, profile),
        asymptotic_constant=asym,
        n_points=n_pts,
        diagnostics=diag,
    )


# ----------------------------------------------------------------------
# outside the light cone
# ----------------------------------------------------------------------

def decay_slope_fit(x, p) -> SlopeFit:
    """Ordinary least squares on (log x, log p) with a 95% half-width.

    Nonpositive p samples are excluded (flagged in n_excluded); fewer
    than 5 valid samples is an error.
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    good = p > 0
    n_excl = int((~good).sum())
    x, p = x[good], p[good]
    if x.size < 5:
        raise ValueError(f"slope fit needs >= 5 positive samples, got {x.size}")
    lx, lp = np.log(x), np.log(p)
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    coef, res, *_ = np.linalg.lstsq(A, lp, rcond=None)
    slope = float(coef[0])
    n = x.size
    resid = lp - A @ coef
    s2 = float(resid @ resid) / (n - 2) if n > 2 else 0.0
    sxx = float(((lx - lx.mean()) ** 2).sum())
    se = np.sqrt(s2 / sxx) if sxx > 0 else np.inf
    half = float(_student_t.ppf(0.975, n - 2) * se) if n > 2 else np.inf
    return SlopeFit(slope, half, n, n_excl)


def _ray_probabilities(source, d: DispersionRelation, ray: Ray, rel_tol: float):
    if ray.frozen is None:
        res = single_scan(source, d, ray.z_values, ray.t, rel_tol=rel_tol)
        return res.values
    amps, _, _ = biphoton_scan(source, d, ray.t, ray.frozen.t,
                               ray.z_values, [ray.frozen.z], rel_tol)
    return np.abs(amps[:, 0]) ** 2


def check_lightcone_decay(source, d: DispersionRelation, rays, orders,
                          rel_tol: float = 1e-9,
                          floor: float = PROBABILITY_FLOOR,
                          window: int = 5) -> LightconeReport:
    """Super-polynomial decay check on outside-the-cone rays.

    For every requested order n the local log-log slope of P against
    (1 + |z|) is fitted along each ray; the bound of order n passes on a
    ray once the slope stays at or below -n beyond some onset radius.
    Points with P below the floor are counted as below-floor passes and
    excluded from fits; a ray whose usable points cannot support a fit
    yields an inconclusive verdict with diagnostics.

    Returns one BoundFit per order carrying C_{n1 n2} as the supremum of
    P (1+|z1|)^{n1} (1+|z2|)^{n2} over the usable samples (n2 applies to
    the frozen detector of pair scans and is 0 for single-photon rays).
    """
    orders = [int(n) for n in orders]
    ray_data = []
    for ray in rays:
        P = _ray_probabilities(source, d, ray, rel_tol)
        ray_data.append((ray, P))

    slopes = []
    onsets = {n: [] for n in orders}
    ray_verdicts = []
    for ray, P in ray_data:
        zs = np.abs(ray.z_values)
        usable = P > floor
        if usable.sum() < window:
            ray_verdicts.append("inconclusive")
            slopes.append(SlopeFit(np.nan, np.inf, int(usable.sum()),
                                   int((~usable).sum())))
            for n in orders:
                onsets[n].append(np.nan)
            continue
        fitted = decay_slope_fit(1.0 + zs[usable], P[usable])
        slopes.append(fitted)
        zu, pu = zs[usable], P[usable]
        local = []
        for i in range(zu.size - window + 1):
            sl = decay_slope_fit(1.0 + zu[i:i + window], pu[i:i + window])
            local.append(sl.slope)
        local = np.asarray(local)
        ok_all = True
        for n in orders:
            holding = local <= -n
            onset = np.nan
            for i in range(holding.size):
                if holding[i:].all():
                    onset = float(zu[i])
                    break
            onsets[n].append(onset)
            if not np.isfinite(onset):
                ok_all = False
        ray_verdicts.append("pass" if ok_all else "fail")

    fits = []
    for n in orders:
        sup = 0.0
        viol_points = 0
        below = 0
        for ray, P in ray_data:
            usable = P > floor
            below += int((~usable).sum())
            w1 = (1.0 + np.abs(ray.z_values[usable])) ** n
            w2 = 1.0 if ray.frozen is None else (1.0 + abs(ray.frozen.z)) ** n
            if usable.any():
                sup = max(sup, float((P[usable] * w1).max() * w2))
        n2 = 0 if all(r.frozen is None for r, _ in ray_data) else n
        fits.append(BoundFit(
            bound_kind="outside_lightcone",
            constant=sup,
            max_violation=0.0,
            grid_descriptor=f"{len(ray_data)} rays",
            orders=(n, n2),
            n_points=sum(p.size for _, p in ray_data),
            n_below_floor=below,
            diagnostics={"onset_radii": onsets[n]},
        ))

    if any(v == "inconclusive" for v in ray_verdicts):
        verdict = "inconclusive"
    elif all(v == "pass" for v in ray_verdicts):
        verdict = "pass"
    else:
        verdict = "fail"
    return LightconeReport(
        fits=tuple(fits),
        verdict=verdict,
        ray_slopes=tuple(slopes),
        diagnostics={"ray_verdicts": ray_verdicts},
    )


# ----------------------------------------------------------------------
# report emission
# ----------------------------------------------------------------------

_CSV_COLUMNS = ("bound_kind", "order_1", "order_2", "constant", "t_offset",
                "max_violation", "refinement_drift", "asymptotic_constant",
                "n_points", "n_below_floor", "grid")


def bound_fit_csv_rows(fits) -> tuple[tuple[str, ...], list[tuple]]:
    """Stable (header, rows) rendering of BoundFit records for CSV output."""
    rows = []
    for f in fits:
        o1, o2 = f.orders if f.orders is not None else ("", "")
        rows.append((
            f.bound_kind, o1, o2, f.constant,
            "" if f.t_offset is None else f.t_offset,
            f.max_violation,
            "" if f.refinement_drift is None else f.refinement_drift,
            "" if f.asymptotic_constant is None else f.asymptotic_constant,
            f.n_points, f.n_below_floor, f.grid_descriptor,
        ))
    return _CSV_COLUMNS, rows


def summarize_bound_fits(fits) -> str:
    """Human-readable structured-text summary of a collection of fits."""
    lines = []
    for f in fits:
        lines.append(f"bound: {f.bound_kind}")
        if f.orders is not None:
            lines.append(f"  orders: n1={f.orders[0]} n2={f.orders[1]}")
        lines.append(f"  constant: {f.constant:.9e}")
        if f.t_offset is not None:
            lines.append(f"  t_offset: {f.t_offset:.9e}")
        lines.append(f"  max_violation: {f.max_violation:.3e} "
                     f"({'holds on grid' if f.max_violation <= 0 else 'VIOLATED'})")
        if f.refinement_drift is not None:
            lines.append(f"  refinement_drift: {f.refinement_drift:.3%}")
        if f.asymptotic_constant is not None:
            lines.append(f"  asymptotic_constant: {f.asymptotic_constant:.9e}")
        lines.append(f"  grid: {f.grid_descriptor}")
        if f.n_below_floor:
            lines.append(f"  below_floor_points: {f.n_below_floor}")
        for key, val in sorted(f.diagnostics.items()):
            lines.append(f"  {key}: {val}")
    return "\n".join(lines) + "\n"
