"""Error-controlled quadrature for oscillatory momentum integrals.

Evaluates integrals of the form

    I(z, t) = int_domain h(k) exp(i (k z - omega(k) t)) dk

and their two-dimensional tensor products, uniformly from t = 0 up to the
moderately deep asymptotic regime (t ~ 1e3).  The method is adaptive
panels with a fixed-order embedded Gauss(7)/Kronrod(15) pair on each
panel:

* Panels are sized so that no panel spans more than a quarter of the
  local oscillation period 2*pi/|z - omega'(k) t|.  Because omega' is
  monotone in k, the largest phase rate on a panel is attained at an
  endpoint, so the constraint is checked exactly from endpoint values.
  Near a stationary point the endpoint rule automatically yields panels
  of width ~ sqrt(pi / (omega'' t)), which resolves the quadratic phase.
* The panel error estimate is |K15 - G7|; a panel whose estimate is
  large gets bisected.  Refinement stops once the summed estimate drops
  below max(rel_tol * |I|, ABS_FLOOR, arithmetic noise scale); the noise
  scale matters because the estimate itself is a difference of large
  sums and cannot certify below round-off.

Evaluation is pure and deterministic: the same problem always produces
the same panel subdivision and the same summation order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dispersion import DispersionRelation

__all__ = [
    "OscIntegralProblem",
    "QuadResult",
    "QuadratureError",
    "osc_integrate_1d",
    "osc_integrate_1d_many",
    "osc_integrate_2d",
    "osc_tensor_scan",
]

# Absolute error floor used when the integral value itself is ~ 0 and a
# relative target is meaningless (double-precision cancellation limit).
ABS_FLOOR = 1e-15

# Largest admissible phase advance per panel: a quarter oscillation.
_MAX_PHASE_PER_PANEL = 0.5 * np.pi

# Kronrod-15 abscissae (ascending) with the embedded Gauss-7 subset at the
# odd positions.  Standard QUADPACK constants; validated in the test suite
# against numpy's Gauss-Legendre nodes and exact polynomial moments.
_XGK_HALF = np.array([
    0.9914553711208126,
    0.9491079123427585,
    0.8648644233597691,
    0.7415311855993944,
    0.5860872354676911,
    0.4058451513773972,
    0.2077849550078985,
    0.0,
])
_WGK_HALF = np.array([
    0.02293532201052922,
    0.06309209262997855,
    0.10479001032225018,
    0.14065325971552590,
    0.16900472663926790,
    0.19035057806478542,
    0.20443294007529889,
    0.20948214108472783,
])
_WG_HALF = np.array([
    0.12948496616886969,
    0.27970539148927664,
    0.38183005050511894,
    0.41795918367346938,
])

XGK = np.concatenate([-_XGK_HALF[:7], _XGK_HALF[::-1]])          # 15 ascending
WGK = np.concatenate([_WGK_HALF[:7], _WGK_HALF[::-1]])
WG = np.concatenate([_WG_HALF[:3], _WG_HALF[::-1]])              # 7 ascending
GAUSS_SUBSET = np.arange(1, 15, 2)                               # G7 node positions


@dataclass(frozen=True)
class OscIntegralProblem:
    """One oscillatory integral: envelope, phase parameters and tolerance.

    ``envelope`` must accept a float ndarray of momenta and return a
    complex ndarray of the same shape.
    """

    envelope: Callable
    z: float
    t: float
    dispersion: DispersionRelation
    domain: tuple[float, float]
    rel_tol: float = 1e-9

    def __post_init__(self):
        lo, hi = self.domain
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ValueError(f"domain must be a finite increasing interval, got {self.domain}")
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError(f"rel_tol must lie in (0, 1), got {self.rel_tol}")


@dataclass(frozen=True)
class QuadResult:
    value: complex
    error_estimate: float
    panels_used: int
    method: str  # "adaptive_panel" or "asymptotic_spa"

    def __post_init__(self):
        if self.error_estimate < 0 or self.panels_used < 1:
            raise ValueError("invalid quadrature result fields")


class QuadratureError(RuntimeError):
    """Tolerance unreachable within the panel budget.

    Carries the best available result in ``.result`` so callers can decide
    whether the achieved error is acceptable.
    """

    def __init__(self, message: str, result: QuadResult):
        super().__init__(message)
        self.result = result


# ----------------------------------------------------------------------
# panel construction
# ----------------------------------------------------------------------

def oscillation_breakpoints(
    d: DispersionRelation,
    domain: tuple[float, float],
    phase_params: Sequence[tuple[float, float]],
    max_width: float | None = None,
    min_panels: int = 8,
    max_panels: int = 1 << 20,
) -> np.ndarray:
    """Panel breakpoints satisfying the quarter-oscillation constraint.

    ``phase_params`` is a sequence of (z, t) pairs; the constraint is
    enforced for every pair, so one subdivision can serve a whole scan.
    ``max_width`` optionally caps panel widths at the envelope's finest
    feature scale so the fixed-order rule resolves the envelope as well.
    """
    lo, hi = map(float, domain)
    span = hi - lo
    width0 = span / max(min_panels, 1)
    if max_width is not None and max_width > 0:
        width0 = min(width0, float(max_width))
    n0 = max(int(np.ceil(span / width0)), 1)
    breaks = list(np.linspace(lo, hi, n0 + 1))

    def max_rate(a: float, b: float) -> float:
        r = 0.0
        for z, t in phase_params:
            r = max(r, abs(d.phase_rate(a, z, t)), abs(d.phase_rate(b, z, t)))
        return r

    out = []
    stack = [(breaks[i], breaks[i + 1]) for i in range(len(breaks) - 1)]
    stack.reverse()
    tiny = span * 1e-13
    while stack:
        a, b = stack.pop()
        w = b - a
        if w <= tiny or w * max_rate(a, b) <= _MAX_PHASE_PER_PANEL:
            out.append(a)
        else:
            if len(out) + len(stack) + 2 > max_panels:
                raise QuadratureError(
                    f"panel budget {max_panels} exhausted while resolving oscillation on {domain}",
                    QuadResult(0.0 + 0.0j, np.inf, len(out) + len(stack) + 1, "adaptive_panel"),
                )
            mid = 0.5 * (a + b)
            stack.append((mid, b))
            stack.append((a, mid))
    out.append(hi)
    return np.asarray(out)


def _panel_grid(breaks: np.ndarray):
    """Kronrod nodes (P, 15) and half-widths (P,) for the given panels."""
    a = breaks[:-1]
    b = breaks[1:]
    half = 0.5 * (b - a)
    centre = 0.5 * (a + b)
    nodes = centre[:, None] + half[:, None] * XGK[None, :]
    return nodes, half


# |K15 - G7| cannot be trusted below the arithmetic noise of the sums;
# the noise scale is this factor times the weighted L1 norm of the integrand.
ROUNDOFF_FACTOR = 50.0 * np.finfo(float).eps


def _panel_values(problem: OscIntegralProblem, lefts: np.ndarray, rights: np.ndarray):
    """Per-panel K15/G7 estimates plus the weighted L1 scale of each panel."""
    half = 0.5 * (rights - lefts)
    centre = 0.5 * (rights + lefts)
    nodes = centre[:, None] + half[:, None] * XGK[None, :]
    d = problem.dispersion
    k = nodes.ravel()
    f = np.asarray(problem.envelope(k), dtype=complex)
    f = f * np.exp(1j * (k * problem.z - d.omega(k) * problem.t))
    f = f.reshape(nodes.shape)
    v15 = (f * WGK[None, :]).sum(axis=1) * half
    v7 = (f[:, GAUSS_SUBSET] * WG[None, :]).sum(axis=1) * half
    l1 = (np.abs(f) * WGK[None, :]).sum(axis=1) * half
    return v15, v7, l1


# ----------------------------------------------------------------------
# 1-D adaptive driver
# ----------------------------------------------------------------------

def osc_integrate_1d(
    problem: OscIntegralProblem,
    max_width: float | None = None,
    max_panels: int = 200_000,
) -> QuadResult:
    """Adaptive evaluation of one oscillatory integral.

    Panels start from the quarter-oscillation subdivision; the ones with
    the largest |K15 - G7| estimates are bisected until the summed
    estimate meets max(rel_tol * |I|, ABS_FLOOR).  Raises QuadratureError
    (carrying the best value and achieved error) if the panel budget runs
    out first.
    """
    breaks = oscillation_breakpoints(
        problem.dispersion, problem.domain,
        [(problem.z, problem.t)], max_width=max_width, max_panels=max_panels,
    )
    lefts = breaks[:-1].copy()
    rights = breaks[1:].copy()
    v15, v7, l1 = _panel_values(problem, lefts, rights)
    err = np.abs(v15 - v7)

    span = problem.domain[1] - problem.domain[0]
    tiny = span * 1e-13
    while True:
        order = np.argsort(lefts, kind="stable")
        value = complex(v15[order].sum())
        total_err = float(err[order].sum())
        noise = ROUNDOFF_FACTOR * float(l1.sum())
        target = max(problem.rel_tol * abs(value), ABS_FLOOR, noise)
        if total_err <= target:
            return QuadResult(value, total_err, len(lefts), "adaptive_panel")
        widths = rights - lefts
        # splitting a panel whose estimate sits at its own noise scale
        # only adds round-off, never accuracy
        splittable = (err > ROUNDOFF_FACTOR * l1) & (widths > tiny)
        worst = err[splittable].max() if splittable.any() else 0.0
        split = splittable & (err >= 0.25 * worst)
        if not split.any() or len(lefts) + int(split.sum()) > max_panels:
            raise QuadratureError(
                f"quadrature stalled at error {total_err:.3e} (target {target:.3e}) "
                f"with {len(lefts)} panels",
                QuadResult(value, total_err, len(lefts), "adaptive_panel"),
            )
        mids = 0.5 * (lefts[split] + rights[split])
        child_lefts = np.concatenate([lefts[split], mids])
        child_rights = np.concatenate([mids, rights[split]])
        cv15, cv7, cl1 = _panel_values(problem, child_lefts, child_rights)
        lefts = np.concatenate([lefts[~split], child_lefts])
        rights = np.concatenate([rights[~split], child_rights])
        v15 = np.concatenate([v15[~split], cv15])
        v7 = np.concatenate([v7[~split], cv7])
        l1 = np.concatenate([l1[~split], cl1])
        err = np.concatenate([err[~split], np.abs(cv15 - cv7)])


def osc_integrate_1d_many(
    envelope: Callable,
    d: DispersionRelation,
    z_values: np.ndarray,
    t: float,
    domain: tuple[float, float],
    rel_tol: float = 1e-9,
    max_width: float | None = None,
    max_levels: int = 8,
    chunk: int = 2048,
):
    """Batched 1-D evaluation over many detector positions at one time.

    One panelization (valid for every z in the batch) is built, the
    envelope is sampled once, and the per-z phase sums are formed as a
    matrix product.  A level of global panel bisection is applied when
    any point misses the error target, which is uniform over the batch:
    rel_tol times the largest amplitude (deep-tail points are round-off
    limited and still carry their own estimates).  Returns
    (values, errors, panels).
    """
    z_values = np.atleast_1d(np.asarray(z_values, dtype=float))
    zmin, zmax = float(z_values.min()), float(z_values.max())
    breaks = oscillation_breakpoints(
        d, domain, [(zmin, t), (zmax, t)], max_width=max_width)
    for _level in range(max_levels + 1):
        nodes, half = _panel_grid(breaks)
        k = nodes.ravel()
        base = np.asarray(envelope(k), dtype=complex) * np.exp(-1j * d.omega(k) * t)
        w15 = (half[:, None] * WGK[None, :]).ravel()
        gmask = np.zeros(nodes.shape, dtype=bool)
        gmask[:, GAUSS_SUBSET] = True
        gmask = gmask.ravel()
        w7 = (half[:, None] * WG[None, :]).ravel()
        u15 = base * w15
        u7 = base[gmask] * w7
        kg = k[gmask]
        vals15 = np.empty(z_values.size, dtype=complex)
        vals7 = np.empty_like(vals15)
        for i0 in range(0, z_values.size, chunk):
            sl = slice(i0, min(i0 + chunk, z_values.size))
            ph = np.exp(1j * np.outer(z_values[sl], k))
            vals15[sl] = ph @ u15
            vals7[sl] = np.exp(1j * np.outer(z_values[sl], kg)) @ u7
            del ph
        errs = np.abs(vals15 - vals7)
        noise = ROUNDOFF_FACTOR * float(np.abs(u15).sum())
        target = max(rel_tol * float(np.abs(vals15).max()), ABS_FLOOR, noise)
        if (errs <= target).all() or _level == max_levels:
            if (errs > target).any():
                worst = int(np.argmax(errs))
                raise QuadratureError(
                    f"batched quadrature stalled at z={z_values[worst]:.6g} "
                    f"(error {errs[worst]:.3e}, target {target:.3e})",
                    QuadResult(complex(vals15[worst]), float(errs[worst]),
                               len(breaks) - 1, "adaptive_panel"),
                )
            return vals15, errs, len(breaks) - 1
        mids = 0.5 * (breaks[:-1] + breaks[1:])
        breaks = np.sort(np.concatenate([breaks, mids]))


# ----------------------------------------------------------------------
# 2-D tensor-product rule
# ----------------------------------------------------------------------

def _axis_weights(d: DispersionRelation, breaks: np.ndarray, z: float, t: float):
    """Kronrod and Gauss weight vectors including the travelling phase."""
    nodes, half = _panel_grid(breaks)
    k = nodes.ravel()
    phase = np.exp(1j * (k * z - d.omega(k) * t))
    w15 = (half[:, None] * WGK[None, :]).ravel() * phase
    gmask = np.zeros(nodes.shape, dtype=bool)
    gmask[:, GAUSS_SUBSET] = True
    gmask = gmask.ravel()
    w7 = (half[:, None] * WG[None, :]).ravel() * phase[gmask]
    return k, w15, w7, gmask


def _tensor_pair(joint_envelope, k1, w15_1, w7_1, g1, k2, w15_2, w7_2, g2,
                 chunk: int = 512):
    """Contract the tensor rule in streamed row chunks.

    Returns (K15, G7, weighted L1 scale) for the whole tensor grid.
    """
    v15 = 0.0 + 0.0j
    v7 = 0.0 + 0.0j
    l1 = 0.0
    goffset = np.cumsum(g1) - g1
    aw2 = np.abs(w15_2)
    aw1 = np.abs(w15_1)
    for i0 in range(0, k1.size, chunk):
        sl = slice(i0, min(i0 + chunk, k1.size))
        block = np.asarray(joint_envelope(k1[sl][:, None], k2[None, :]), dtype=complex)
        v15 += w15_1[sl] @ (block @ w15_2)
        l1 += float(aw1[sl] @ (np.abs(block) @ aw2))
        rows_g = g1[sl]
        if rows_g.any():
            j0 = int(goffset[i0])
            v7 += w7_1[j0:j0 + int(rows_g.sum())] @ (block[rows_g][:, g2] @ w7_2)
        del block
    return v15, v7, l1


def osc_integrate_2d(
    p1: OscIntegralProblem,
    p2: OscIntegralProblem,
    joint_envelope: Callable,
    max_width: float | None = None,
    share_breaks: bool = False,
    max_levels: int = 4,
    max_nodes_axis: int = 60_000,
) -> QuadResult:
    """Tensor-product panel rule for the double momentum integral.

    The joint envelope couples the axes, so the value is formed as
    w1^T F w2 with per-axis phase-bearing weight vectors; the error
    estimate compares the embedded Gauss-7 tensor rule against
    Kronrod-15 and global panel bisection is applied until the target is
    met.  ``share_breaks`` forces one common subdivision on both axes
    (required for exact exchange symmetry of symmetric envelopes; the
    domains must then agree).
    """
    d = p1.dispersion
    rel_tol = min(p1.rel_tol, p2.rel_tol)
    if share_breaks:
        if p1.domain != p2.domain:
            raise ValueError("share_breaks requires identical axis domains")
        breaks1 = oscillation_breakpoints(
            d, p1.domain, [(p1.z, p1.t), (p2.z, p2.t)], max_width=max_width)
        breaks2 = breaks1
    else:
        breaks1 = oscillation_breakpoints(d, p1.domain, [(p1.z, p1.t)], max_width=max_width)
        breaks2 = oscillation_breakpoints(
            p2.dispersion, p2.domain, [(p2.z, p2.t)], max_width=max_width)

    for level in range(max_levels + 1):
        k1, w15_1, w7_1, g1 = _axis_weights(d, breaks1, p1.z, p1.t)
        k2, w15_2, w7_2, g2 = _axis_weights(p2.dispersion, breaks2, p2.z, p2.t)
        v15, v7, l1 = _tensor_pair(joint_envelope, k1, w15_1, w7_1, g1,
                                   k2, w15_2, w7_2, g2)
        err = abs(v15 - v7)
        target = max(rel_tol * abs(v15), ABS_FLOOR, ROUNDOFF_FACTOR * l1)
        panels = (len(breaks1) - 1) * (len(breaks2) - 1)
        if err <= target:
            return QuadResult(v15, err, panels, "adaptive_panel")
        if level == max_levels or 2 * k1.size > 15 * max_nodes_axis:
            raise QuadratureError(
                f"2-D quadrature stalled at error {err:.3e} (target {target:.3e}) "
                f"with {panels} cells",
                QuadResult(v15, err, panels, "adaptive_panel"),
            )
        breaks1 = np.sort(np.concatenate([breaks1, 0.5 * (breaks1[:-1] + breaks1[1:])]))
        if share_breaks:
            breaks2 = breaks1
        else:
            breaks2 = np.sort(np.concatenate([breaks2, 0.5 * (breaks2[:-1] + breaks2[1:])]))


def osc_tensor_scan(
    joint_envelope: Callable,
    d: DispersionRelation,
    domain: tuple[float, float],
    t1: float,
    t2: float,
    z1_values: np.ndarray,
    z2_values: np.ndarray,
    rel_tol: float = 1e-7,
    max_width: float | None = None,
    max_levels: int = 3,
    chunk: int = 384,
):
    """Batched 2-D evaluation over a grid of detector-position pairs.

    One shared panelization (valid for every z in either batch) is built
    per axis, the joint envelope is streamed once per refinement level,
    and all grid values come out of two matrix products.  Returns
    (values, errors, panels_per_axis) with values shaped
    (len(z1_values), len(z2_values)).

    The error target is uniform over the grid: rel_tol times the largest
    grid amplitude.  Grid points far in the tails are then not refined
    to a meaningless per-point relative accuracy; every point still
    carries its own error estimate.
    """
    z1_values = np.atleast_1d(np.asarray(z1_values, dtype=float))
    z2_values = np.atleast_1d(np.asarray(z2_values, dtype=float))
    params = [(float(z1_values.min()), t1), (float(z1_values.max()), t1),
              (float(z2_values.min()), t2), (float(z2_values.max()), t2)]
    breaks = oscillation_breakpoints(d, domain, params, max_width=max_width)

    for level in range(max_levels + 1):
        nodes, half = _panel_grid(breaks)
        k = nodes.ravel()
        gmask = np.zeros(nodes.shape, dtype=bool)
        gmask[:, GAUSS_SUBSET] = True
        gmask = gmask.ravel()
        w15 = (half[:, None] * WGK[None, :]).ravel()
        w7 = (half[:, None] * WG[None, :]).ravel()

        def weight_matrix(z_vals, t):
            ph = np.exp(1j * (np.outer(k, z_vals) - d.omega(k)[:, None] * t))
            u15 = w15[:, None] * ph
            u7 = w7[:, None] * ph[gmask]
            return u15, u7

        u15_1, u7_1 = weight_matrix(z1_values, t1)
        u15_2, u7_2 = weight_matrix(z2_values, t2)
        v15 = np.zeros((z1_values.size, z2_values.size), dtype=complex)
        v7 = np.zeros_like(v15)
        l1 = 0.0
        gcount = np.cumsum(gmask) - gmask  # g-index offset per node
        for i0 in range(0, k.size, chunk):
            sl = slice(i0, min(i0 + chunk, k.size))
            block = np.asarray(joint_envelope(k[sl][:, None], k[None, :]), dtype=complex)
            v15 += u15_1[sl].T @ (block @ u15_2)
            l1 += float(w15[sl] @ (np.abs(block) @ w15))
            rows_g = gmask[sl]
            if rows_g.any():
                j0 = int(gcount[i0])
                v7 += u7_1[j0:j0 + int(rows_g.sum())].T @ (block[rows_g][:, gmask] @ u7_2)
            del block
        errs = np.abs(v15 - v7)
        target = max(rel_tol * float(np.abs(v15).max()), ABS_FLOOR,
                     ROUNDOFF_FACTOR * l1)
        if (errs <= target).all() or level == max_levels:
            if (errs > target).any():
                bad = np.unravel_index(int(np.argmax(errs)), errs.shape)
                raise QuadratureError(
                    f"tensor scan stalled at grid point {bad} "
                    f"(error {errs[bad]:.3e}, target {target:.3e})",
                    QuadResult(complex(v15[bad]), float(errs[bad]),
                               (len(breaks) - 1) ** 2, "adaptive_panel"),
                )
            return v15, errs, len(breaks) - 1
        breaks = np.sort(np.concatenate([breaks, 0.5 * (breaks[:-1] + breaks[1:])]))
