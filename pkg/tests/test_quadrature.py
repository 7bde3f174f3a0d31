import numpy as np
import pytest

from wgcorr import DispersionRelation, OscIntegralProblem, QuadratureError
from wgcorr.quadrature import (
    GAUSS_SUBSET,
    WG,
    WGK,
    XGK,
    osc_integrate_1d,
    osc_integrate_2d,
    oscillation_breakpoints,
)

D1 = DispersionRelation(1.0)


def gaussian_env(center, width, amp=1.0):
    def env(k):
        return amp * np.exp(-0.5 * ((k - center) / width) ** 2) + 0.0j
    return env


def riemann_oracle(env, d, z, t, domain, n=10_000_000):
    """Independent fixed-step midpoint Riemann sum."""
    k = np.linspace(domain[0], domain[1], n, endpoint=False)
    h = (domain[1] - domain[0]) / n
    k = k + 0.5 * h
    total = 0.0 + 0.0j
    for i0 in range(0, n, 1_000_000):
        kk = k[i0:i0 + 1_000_000]
        total += np.sum(env(kk) * np.exp(1j * (kk * z - d.omega(kk) * t)))
    return total * h


# ----------------------------------------------------------------------
# the embedded rule itself
# ----------------------------------------------------------------------

def test_rule_constants_match_gauss_legendre():
    nodes, weights = np.polynomial.legendre.leggauss(7)
    np.testing.assert_allclose(XGK[GAUSS_SUBSET], nodes, atol=1e-13)
    np.testing.assert_allclose(WG, weights, atol=1e-13)
    assert abs(WGK.sum() - 2.0) < 1e-14
    assert abs(WG.sum() - 2.0) < 1e-14


def test_rule_polynomial_exactness():
    # Gauss-7 integrates monomials exactly through degree 13,
    # Kronrod-15 through degree 22, on [-1, 1].
    for deg in range(0, 23):
        exact = 0.0 if deg % 2 else 2.0 / (deg + 1)
        k15 = np.sum(WGK * XGK**deg)
        assert abs(k15 - exact) < 1e-13, f"K15 misses degree {deg}"
        if deg <= 13:
            g7 = np.sum(WG * XGK[GAUSS_SUBSET] ** deg)
            assert abs(g7 - exact) < 1e-13, f"G7 misses degree {deg}"


def test_breakpoints_respect_quarter_oscillation():
    d = DispersionRelation(1.0)
    z, t = 35.0, 120.0
    breaks = oscillation_breakpoints(d, (-2.0, 2.0), [(z, t)])
    widths = np.diff(breaks)
    for a, b, w in zip(breaks[:-1], breaks[1:], widths):
        rate = max(abs(d.phase_rate(a, z, t)), abs(d.phase_rate(b, z, t)))
        assert w * rate <= 0.5 * np.pi * (1 + 1e-12)


# ----------------------------------------------------------------------
# 1-D integrals
# ----------------------------------------------------------------------

def test_plain_gaussian_integral():
    # no oscillation at z = t = 0: integral of exp(-k^2/2) = sqrt(2 pi)
    prob = OscIntegralProblem(gaussian_env(0.0, 1.0), z=0.0, t=0.0,
                              dispersion=D1, domain=(-9.0, 9.0), rel_tol=1e-12)
    res = osc_integrate_1d(prob)
    assert res.value.real == pytest.approx(np.sqrt(2 * np.pi), rel=1e-12)
    assert abs(res.value.imag) < 1e-14
    assert res.method == "adaptive_panel"
    assert res.error_estimate <= max(1e-12 * abs(res.value), 1e-15)


def test_even_real_envelope_gives_real_transform():
    # t = 0: the Fourier transform of an even real envelope is real
    prob = OscIntegralProblem(gaussian_env(0.0, 0.7), z=5.3, t=0.0,
                              dispersion=D1, domain=(-8.0, 8.0), rel_tol=1e-12)
    res = osc_integrate_1d(prob)
    assert abs(res.value.imag) <= 1e-12 * abs(res.value)


def test_oscillatory_against_riemann_oracle():
    env = gaussian_env(0.0, 0.5)
    dom = (-0.5 * 7.44, 0.5 * 7.44)
    res = osc_integrate_1d(OscIntegralProblem(env, z=0.0, t=50.0, dispersion=D1,
                                              domain=dom, rel_tol=1e-10))
    oracle = riemann_oracle(env, D1, 0.0, 50.0, dom)
    assert abs(res.value - oracle) <= 1e-8 * abs(oracle)


def test_random_problem_suite_against_oracle():
    # moderate subset of the acceptance suite for fast feedback
    rng = np.random.default_rng(7)
    for _ in range(8):
        m = rng.uniform(0.5, 2.0)
        d = DispersionRelation(m)
        center = rng.uniform(-1.0, 1.5)
        width = rng.uniform(0.15, 0.8)
        t = rng.uniform(0.0, 100.0)
        v = rng.uniform(-0.9, 0.9)
        z = v * t + rng.uniform(-3, 3)
        dom = (center - 7.44 * width, center + 7.44 * width)
        env = gaussian_env(center, width)
        tol = 10.0 ** rng.uniform(-10, -6)
        res = osc_integrate_1d(OscIntegralProblem(env, z=z, t=t, dispersion=d,
                                                  domain=dom, rel_tol=tol))
        oracle = riemann_oracle(env, d, z, t, dom, n=2_000_000)
        assert abs(res.value - oracle) <= max(10 * tol * abs(res.value), 1e-12)


def test_halving_tolerance_never_hurts():
    env = gaussian_env(0.4, 0.3)
    dom = (0.4 - 7.44 * 0.3, 0.4 + 7.44 * 0.3)
    oracle = riemann_oracle(env, D1, 11.0, 40.0, dom, n=4_000_000)
    prev = np.inf
    for tol in (1e-4, 1e-6, 1e-8, 1e-10):
        res = osc_integrate_1d(OscIntegralProblem(env, z=11.0, t=40.0,
                                                  dispersion=D1, domain=dom,
                                                  rel_tol=tol))
        true_err = abs(res.value - oracle)
        assert true_err <= prev * (1 + 1e-9)
        prev = true_err


def test_phase_shift_covariance():
    # multiplying the envelope by exp(i a k) equals translating z by a
    a = 3.7
    base = gaussian_env(0.2, 0.4)
    shifted = lambda k: base(k) * np.exp(1j * a * k)
    dom = (0.2 - 7.44 * 0.4, 0.2 + 7.44 * 0.4)
    r1 = osc_integrate_1d(OscIntegralProblem(shifted, z=2.0, t=15.0,
                                             dispersion=D1, domain=dom, rel_tol=1e-11))
    r2 = osc_integrate_1d(OscIntegralProblem(base, z=2.0 + a, t=15.0,
                                             dispersion=D1, domain=dom, rel_tol=1e-11))
    assert abs(r1.value - r2.value) <= 1e-10 * abs(r2.value)


def test_unreachable_tolerance_carries_payload():
    # needle envelope: the panel budget runs out before the error target
    env = gaussian_env(0.0, 0.002)
    with pytest.raises(QuadratureError) as excinfo:
        osc_integrate_1d(
            OscIntegralProblem(env, z=0.0, t=0.0, dispersion=D1,
                               domain=(-1.0, 1.0), rel_tol=1e-13),
            max_panels=16)
    res = excinfo.value.result
    assert res.panels_used >= 8
    assert np.isfinite(res.error_estimate)
    # best value is still in the right ballpark
    exact = 0.002 * np.sqrt(2 * np.pi)
    assert abs(res.value.real - exact) < 0.3 * exact


# ----------------------------------------------------------------------
# 2-D integrals
# ----------------------------------------------------------------------

def test_separable_2d_equals_product_of_1d():
    e1 = gaussian_env(0.3, 0.5)
    e2 = gaussian_env(-0.2, 0.4)
    dom = (-4.0, 4.0)
    p1 = OscIntegralProblem(e1, z=3.0, t=8.0, dispersion=D1, domain=dom, rel_tol=1e-10)
    p2 = OscIntegralProblem(e2, z=-1.0, t=5.0, dispersion=D1, domain=dom, rel_tol=1e-10)
    joint = lambda k1, k2: e1(k1) * e2(k2)
    r2d = osc_integrate_2d(p1, p2, joint)
    ra = osc_integrate_1d(p1)
    rb = osc_integrate_1d(p2)
    prod = ra.value * rb.value
    assert abs(r2d.value - prod) <= 1e-8 * abs(prod)


def test_2d_plain_envelope_against_riemann():
    joint = lambda k1, k2: np.exp(-0.5 * (k1**2 + k2**2) - 0.3 * k1 * k2) + 0.0j
    dom = (-6.0, 6.0)
    p = OscIntegralProblem(gaussian_env(0, 1), z=0.0, t=0.0, dispersion=D1,
                           domain=dom, rel_tol=1e-10)
    res = osc_integrate_2d(p, p, joint)
    n = 4000
    k = np.linspace(dom[0], dom[1], n, endpoint=False)
    h = (dom[1] - dom[0]) / n
    k = k + 0.5 * h
    oracle = 0.0
    for i0 in range(0, n, 250):
        oracle += joint(k[i0:i0 + 250][:, None], k[None, :]).real.sum()
    oracle *= h * h
    assert abs(res.value.real - oracle) <= 1e-7 * abs(oracle)
    assert abs(res.value.imag) < 1e-12


def test_2d_swap_symmetry():
    joint = lambda k1, k2: np.exp(-0.5 * (k1 - k2) ** 2 - 0.1 * (k1 + k2) ** 2) + 0.0j
    dom = (-5.0, 5.0)
    pa = OscIntegralProblem(gaussian_env(0, 1), z=2.0, t=6.0, dispersion=D1,
                            domain=dom, rel_tol=1e-10)
    pb = OscIntegralProblem(gaussian_env(0, 1), z=-1.5, t=9.0, dispersion=D1,
                            domain=dom, rel_tol=1e-10)
    r1 = osc_integrate_2d(pa, pb, joint, share_breaks=True)
    r2 = osc_integrate_2d(pb, pa, joint, share_breaks=True)
    assert abs(r1.value - r2.value) <= 1e-12 * abs(r1.value)
