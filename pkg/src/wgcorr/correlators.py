"""Detection amplitudes and probability densities along the waveguide.

Single-photon quantities for one mode of mass m:

    A(z, t) = int dk g(k) exp(-i omega(k) t + i k z) / (2 sqrt(2 pi omega(k)))
    P(z, t) = |A(z, t)|^2

and the joint two-photon analogues built from a symmetric pair amplitude
f(k1, k2).  Exact values come from the adaptive oscillatory quadrature;
the large-time behaviour along rays z = v t comes from the leading
stationary-phase term, with an applicability guard since the asymptotics
is a large-t statement.

All evaluations are pure; scan helpers share one panelization across a
grid and aggregate deterministically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dispersion import DispersionRelation
from .quadrature import (
    OscIntegralProblem,
    QuadResult,
    osc_integrate_1d,
    osc_integrate_1d_many,
    osc_integrate_2d,
    osc_tensor_scan,
)

__all__ = [
    "SpacetimePoint",
    "CorrelationResult",
    "AsymptoticSingle",
    "AsymptoticBiphoton",
    "amplitude_single",
    "probability_single",
    "asymptotic_single",
    "amplitude_biphoton",
    "probability_biphoton",
    "asymptotic_biphoton",
    "entangled_spacetime_profile",
    "ProfileResult",
    "single_scan",
    "biphoton_scan",
    "momentum_norm",
    "position_norm",
    "kg_residual",
]

# Stationary phase is trusted once t * omega''(k0) * width^2 reaches this.
ASYMPTOTIC_GUARD = 10.0


@dataclass(frozen=True)
class SpacetimePoint:
    z: float
    t: float


@dataclass(frozen=True)
class CorrelationResult:
    """Evaluated P values on a set of points, with P = |A|^2 enforced."""

    points: tuple
    amplitudes: np.ndarray
    values: np.ndarray
    error_estimates: np.ndarray
    methods: tuple[str, ...]

    @classmethod
    def from_amplitudes(cls, points, amplitudes, amp_errors, methods):
        amplitudes = np.asarray(amplitudes, dtype=complex)
        amp_errors = np.asarray(amp_errors, dtype=float)
        values = np.abs(amplitudes) ** 2
        p_errors = 2.0 * np.abs(amplitudes) * amp_errors + amp_errors**2
        return cls(tuple(points), amplitudes, values, p_errors, tuple(methods))


def _single_envelope(packet, d: DispersionRelation):
    def env(k):
        return packet(k) / (2.0 * np.sqrt(2.0 * np.pi * d.omega(k)))
    return env


def _joint_envelope(f, d: DispersionRelation):
    def env(k1, k2):
        w = d.omega(k1) * d.omega(k2)
        return f(k1, k2) / (8.0 * np.pi * np.sqrt(w))
    return env


def _feature(packet) -> float | None:
    try:
        return 0.5 * packet.effective_width()
    except (AttributeError, ValueError):
        return None


# ----------------------------------------------------------------------
# single photon
# ----------------------------------------------------------------------

def amplitude_single(packet, d: DispersionRelation, pt: SpacetimePoint,
                     rel_tol: float = 1e-9) -> QuadResult:
    """Detection amplitude A(z, t) by adaptive quadrature over the packet support."""
    prob = OscIntegralProblem(
        envelope=_single_envelope(packet, d),
        z=pt.z, t=pt.t, dispersion=d, domain=packet.support, rel_tol=rel_tol)
    return osc_integrate_1d(prob, max_width=_feature(packet))


def probability_single(packet, d: DispersionRelation, pt: SpacetimePoint,
                       rel_tol: float = 1e-9) -> tuple[float, float]:
    """P(z, t) = |A(z, t)|^2 and its propagated error estimate."""
    r = amplitude_single(packet, d, pt, rel_tol)
    a = abs(r.value)
    return a * a, 2.0 * a * r.error_estimate + r.error_estimate**2


@dataclass(frozen=True)
class AsymptoticSingle:
    probability: float
    amplitude: complex
    stationary_momentum: float
    guard_value: float
    guard_ok: bool


def asymptotic_single(packet, d: DispersionRelation, v: float, t: float) -> AsymptoticSingle:
    """Leading stationary-phase value of P(v t, t) for large t.

    P ~ |g(k0)|^2 / (4 t omega(k0) omega''(k0)) with k0 the momentum whose
    group velocity is v; the amplitude carries the exp(-i pi/4) phase
    shift of the quadratic stationary point.  guard_ok reports whether
    t * omega''(k0) * width^2 has reached the trust threshold; below it
    the leading term can be badly off and the value is advisory only.
    """
    if not t > 0:
        raise ValueError(f"asymptotics requires t > 0, got {t}")
    k0 = d.stationary_point(v)
    w0 = d.omega(k0)
    wdd = d.omega_dd(k0)
    g0 = complex(packet(k0))
    phase = np.exp(-1j * (t * (w0 - k0 * v) + 0.25 * np.pi))
    amplitude = g0 * phase / (2.0 * np.sqrt(t * w0 * wdd))
    sigma = packet.effective_width()
    guard = t * wdd * sigma * sigma
    return AsymptoticSingle(
        probability=abs(g0) ** 2 / (4.0 * t * w0 * wdd),
        amplitude=complex(amplitude),
        stationary_momentum=float(k0),
        guard_value=float(guard),
        guard_ok=bool(guard >= ASYMPTOTIC_GUARD),
    )


# ----------------------------------------------------------------------
# biphoton
# ----------------------------------------------------------------------

def amplitude_biphoton(f, d: DispersionRelation, pt1: SpacetimePoint,
                       pt2: SpacetimePoint, rel_tol: float = 1e-8) -> QuadResult:
    """Joint amplitude A(z1, t1, z2, t2) by the tensor-product panel rule.

    The defining double integral holds two exchange terms; for a
    symmetric f they are equal, so one is computed and doubled.  Both
    axes share one panelization, which keeps detector exchange an exact
    symmetry of the rule.
    """
    dom = f.axis_domain()
    p1 = OscIntegralProblem(envelope=lambda k: k, z=pt1.z, t=pt1.t,
                            dispersion=d, domain=dom, rel_tol=rel_tol)
    p2 = OscIntegralProblem(envelope=lambda k: k, z=pt2.z, t=pt2.t,
                            dispersion=d, domain=dom, rel_tol=rel_tol)
    res = osc_integrate_2d(p1, p2, _joint_envelope(f, d),
                           max_width=_feature(f), share_breaks=True)
    return QuadResult(2.0 * res.value, 2.0 * res.error_estimate,
                      res.panels_used, res.method)


def probability_biphoton(f, d: DispersionRelation, pt1: SpacetimePoint,
                         pt2: SpacetimePoint, rel_tol: float = 1e-8) -> tuple[float, float]:
    r = amplitude_biphoton(f, d, pt1, pt2, rel_tol)
    a = abs(r.value)
    return a * a, 2.0 * a * r.error_estimate + r.error_estimate**2


@dataclass(frozen=True)
class AsymptoticBiphoton:
    probability: float
    amplitude: complex
    stationary_momenta: tuple[float, float]
    guard_values: tuple[float, float]
    guard_ok: bool


def _spa_factor(d: DispersionRelation, k0: float, v: float, t: float) -> complex:
    """One detector's stationary-phase factor, phases tied to its own frame."""
    w0 = d.omega(k0)
    wdd = d.omega_dd(k0)
    return np.exp(-1j * (t * (w0 - k0 * v) + 0.25 * np.pi)) / (2.0 * np.sqrt(t * w0 * wdd))


def asymptotic_biphoton(f, d: DispersionRelation, v1: float, v2: float,
                        t1: float, t2: float) -> AsymptoticBiphoton:
    """Leading two-term stationary-phase value of the joint probability.

    Each exchange term of the joint amplitude is evaluated at the same
    stationary pair (k10, k20); the terms carry f(k10, k20) and
    f(k20, k10) respectively, sharing the frame-tied phases
    exp(-i t_i (omega(k_i0) - k_i0 v_i)) and the e^{-i pi/2} shift.  The
    squared modulus therefore includes the cross term between the two f
    evaluations; for an exchange-symmetric f the terms coincide and the
    amplitude is twice the single term.
    """
    if not (t1 > 0 and t2 > 0):
        raise ValueError("asymptotics requires t1, t2 > 0")
    k10 = d.stationary_point(v1)
    k20 = d.stationary_point(v2)
    s1 = _spa_factor(d, k10, v1, t1)
    s2 = _spa_factor(d, k20, v2, t2)
    pair_sum = complex(f(k10, k20)) + complex(f(k20, k10))
    amplitude = pair_sum * s1 * s2
    sigma = f.effective_width()
    g1 = t1 * d.omega_dd(k10) * sigma * sigma
    g2 = t2 * d.omega_dd(k20) * sigma * sigma
    return AsymptoticBiphoton(
        probability=abs(amplitude) ** 2,
        amplitude=complex(amplitude),
        stationary_momenta=(float(k10), float(k20)),
        guard_values=(float(g1), float(g2)),
        guard_ok=bool(min(g1, g2) >= ASYMPTOTIC_GUARD),
    )


@dataclass(frozen=True)
class ProfileResult:
    v1: np.ndarray
    v2: np.ndarray
    values: np.ndarray    # |f(k10, k20)|^2, zero where invalid
    valid: np.ndarray     # False on or outside the light cone


def entangled_spacetime_profile(f, d: DispersionRelation,
                                v1: np.ndarray, v2: np.ndarray) -> ProfileResult:
    """Spacetime footprint |f(k10, k20)|^2 over a velocity-pair grid.

    Maps z_i/t_i ratios to stationary momenta and evaluates the pair
    amplitude there; this is the feature that separates an entangled f
    from a separable one.  Grid points with |v| >= 1 are flagged invalid
    and left unevaluated.
    """
    v1 = np.atleast_1d(np.asarray(v1, dtype=float))
    v2 = np.atleast_1d(np.asarray(v2, dtype=float))
    ok1 = np.abs(v1) < 1.0
    ok2 = np.abs(v2) < 1.0
    k1 = np.where(ok1, d.mass * v1 / np.sqrt(np.where(ok1, 1.0 - v1 * v1, 1.0)), 0.0)
    k2 = np.where(ok2, d.mass * v2 / np.sqrt(np.where(ok2, 1.0 - v2 * v2, 1.0)), 0.0)
    vals = np.abs(f(k1[:, None], k2[None, :])) ** 2
    valid = ok1[:, None] & ok2[None, :]
    return ProfileResult(v1, v2, np.where(valid, vals, 0.0), valid)


# ----------------------------------------------------------------------
# batched scans
# ----------------------------------------------------------------------

def single_scan(packet, d: DispersionRelation, z_values, t: float,
                rel_tol: float = 1e-9) -> CorrelationResult:
    """A(z, t) and P(z, t) on a z-grid at fixed t, sharing one panelization."""
    z_values = np.atleast_1d(np.asarray(z_values, dtype=float))
    amps, errs, panels = osc_integrate_1d_many(
        _single_envelope(packet, d), d, z_values, t,
        packet.support, rel_tol=rel_tol, max_width=_feature(packet))
    pts = [SpacetimePoint(float(z), float(t)) for z in z_values]
    return CorrelationResult.from_amplitudes(
        pts, amps, errs, ["adaptive_panel"] * z_values.size)


def biphoton_scan(f, d: DispersionRelation, t1: float, t2: float,
                  z1_values, z2_values, rel_tol: float = 1e-7):
    """Joint amplitudes on a (z1, z2) grid at fixed times.

    Returns (amplitudes, amp_errors, panels_per_axis) with shape
    (len(z1), len(z2)); amplitudes include the exchange doubling.
    """
    vals, errs, panels = osc_tensor_scan(
        _joint_envelope(f, d), d, f.axis_domain(), t1, t2,
        z1_values, z2_values, rel_tol=rel_tol, max_width=_feature(f))
    return 2.0 * vals, 2.0 * errs, panels


# ----------------------------------------------------------------------
# conserved quantities and residuals
# ----------------------------------------------------------------------

def momentum_norm(packet, d: DispersionRelation, rel_tol: float = 1e-11) -> float:
    """int |g(k)|^2 / (4 omega(k)) dk, the conserved norm of A."""
    prob = OscIntegralProblem(
        envelope=lambda k: np.abs(packet(k)) ** 2 / (4.0 * d.omega(k)) + 0.0j,
        z=0.0, t=0.0, dispersion=d, domain=packet.support, rel_tol=rel_tol)
    return float(osc_integrate_1d(prob, max_width=_feature(packet)).value.real)


def position_norm(packet, d: DispersionRelation, t: float,
                  rel_tol: float = 1e-10) -> float:
    """int |A(z, t)|^2 dz on an automatically sized window (Simpson rule).

    The window tracks the group-velocity span of the packet support plus
    a dispersive-spreading pad wide enough that the discarded tails are
    far below the target accuracy.
    """
    lo, hi = packet.support
    sigma = packet.effective_width()
    vmin, vmax = float(d.omega_d(lo)), float(d.omega_d(hi))
    kmin_abs = min(abs(lo), abs(hi)) if lo * hi > 0 else 0.0
    wdd_max = float(d.omega_dd(kmin_abs))
    width_z = float(np.hypot(1.0 / sigma, wdd_max * abs(t) * sigma))
    pad = 12.0 * width_z + 16.0 / d.mass
    z_lo = min(vmin, vmax) * t - pad
    z_hi = max(vmin, vmax) * t + pad
    feature = 1.0 / sigma  # |A|^2 never varies faster than the t = 0 envelope
    n = int(np.ceil((z_hi - z_lo) / (feature / 32.0)))
    n += n % 2  # Simpson needs an even interval count
    z = np.linspace(z_lo, z_hi, n + 1)
    res = single_scan(packet, d, z, t, rel_tol=rel_tol)
    from scipy.integrate import simpson
    return float(simpson(res.values, x=z))


def kg_residual(packet, d: DispersionRelation, z: float, t: float, h: float,
                rel_tol: float = 1e-12) -> tuple[complex, float]:
    """Central-difference wave-operator residual at one spacetime point.

    Applies (d^2/dt^2 - d^2/dz^2 + m^2) to A on a 5-point stencil of step
    h; the exact amplitude annihilates the operator, so the residual is
    pure discretization error, O(h^2).  Returns (residual, |A(z, t)|).
    """
    def amp(zz, tt):
        return amplitude_single(packet, d, SpacetimePoint(zz, tt), rel_tol).value

    centre = amp(z, t)
    a_tp = amp(z, t + h)
    a_tm = amp(z, t - h)
    a_zp = amp(z + h, t)
    a_zm = amp(z - h, t)
    res = (a_tp + a_tm - a_zp - a_zm) / (h * h) + d.mass**2 * centre
    return complex(res), abs(centre)
