import numpy as np
import pytest

from wgcorr import (
    CorrelatedGaussian,
    GaussianPacket,
    PumpedPair,
    SymmetrizedProduct,
    TablePacket,
    biphoton_norm,
    load_table_packet,
    normalize_biphoton,
    normalized_packet,
    packet_norm,
)

# pump spec matching exp(-(K-2)^2/0.02), i.e. width 0.1 around 2
PUMP = GaussianPacket(center=2.0, width=0.1)


def test_gaussian_peak_values():
    assert GaussianPacket(0.0, 1.0)(0.0) == 1.0
    g = GaussianPacket(0.75, 0.1, amplitude=2.5 - 1.0j)
    assert g(0.75) == 2.5 - 1.0j


def test_zero_outside_support():
    g = GaussianPacket(0.0, 1.0, support=(-1.0, 1.0))
    assert g(1.5) == 0.0
    assert g(-40.0) == 0.0
    t = TablePacket(np.array([0.0, 1.0, 2.0]), np.array([1.0, 2.0, 1.0], dtype=complex))
    assert t(2.5) == 0.0 and t(-0.1) == 0.0


def test_default_support_from_envelope_cutoff():
    g = GaussianPacket(0.3, 0.2)
    lo, hi = g.support
    # envelope at the support edge sits at the 1e-12 cutoff
    assert abs(abs(g(hi - 1e-12)) / abs(g.amplitude) - 1e-12) < 1e-13
    assert np.isclose(hi - 0.3, 0.3 - lo)


def test_width_must_be_positive():
    with pytest.raises(ValueError):
        GaussianPacket(0.0, -1.0)
    with pytest.raises(ValueError):
        GaussianPacket(0.0, 0.0)


def test_table_grid_must_increase():
    with pytest.raises(ValueError):
        TablePacket(np.array([0.0, 0.0, 1.0]), np.zeros(3, dtype=complex))


def test_table_interpolation_is_linear():
    t = TablePacket(np.array([0.0, 1.0]), np.array([0.0 + 0.0j, 2.0 + 4.0j]))
    assert t(0.5) == pytest.approx(1.0 + 2.0j)


def test_pumped_pair_vanishes_off_positive_quadrant():
    f = PumpedPair(PUMP, pump_scale=1.0)
    assert f(0.0, 1.3) == 0.0
    assert f(1.3, 0.0) == 0.0
    assert f(-0.2, 0.5) == 0.0
    assert f(0.5, -4.0) == 0.0


def test_pumped_pair_hand_value():
    # at (1, 1): (i/1) * pump(2) * sqrt(6*1*1*2) = i * sqrt(12)
    f = PumpedPair(PUMP, pump_scale=1.0)
    val = f(1.0, 1.0)
    assert val == pytest.approx(1j * np.sqrt(12.0), abs=1e-12)
    assert abs(val - 3.4641016151377544j) < 1e-12


@pytest.mark.parametrize("family", [
    PumpedPair(PUMP, pump_scale=2.0),
    SymmetrizedProduct(GaussianPacket(0.6, 0.3), GaussianPacket(1.1, 0.2, amplitude=0.7 + 0.2j)),
    CorrelatedGaussian(pump_center=2.0, pump_width=0.15, relative_width=0.5),
])
def test_exchange_symmetry_is_exact(family):
    rng = np.random.default_rng(42)
    k1 = rng.uniform(-1.0, 3.0, 1000)
    k2 = rng.uniform(-1.0, 3.0, 1000)
    a = family(k1, k2)
    b = family(k2, k1)
    # bitwise identical, not merely close
    assert np.array_equal(a, b)


def test_smoothness_finite_differences_converge_quadratically():
    g = GaussianPacket(0.5, 0.25)
    k = 0.62
    exact = g(k) * (-(k - 0.5) / 0.25**2)
    errs = []
    for h in (1e-3, 5e-4):
        fd = (g(k + h) - g(k - h)) / (2 * h)
        errs.append(abs(fd - exact))
    assert 3.5 < errs[0] / errs[1] < 4.5

    f = CorrelatedGaussian(2.0, 0.2, 0.6)
    k1, k2 = 1.1, 0.95
    errs = []
    for h in (1e-3, 5e-4):
        fd = (f(k1 + h, k2) - 2 * f(k1, k2) + f(k1 - h, k2)) / h**2
        fd2 = (f(k1 + h / 2, k2) - 2 * f(k1, k2) + f(k1 - h / 2, k2)) / (h / 2) ** 2
        errs.append(abs(fd - fd2))
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_packet_normalization():
    g = normalized_packet(GaussianPacket(0.75, 0.1, amplitude=3.3))
    assert packet_norm(g) == pytest.approx(1.0, abs=1e-10)
    # closed form: |amp|^2 sigma sqrt(pi) = 1
    assert abs(g.amplitude) == pytest.approx((0.1 * np.sqrt(np.pi)) ** -0.5, rel=1e-9)


def test_normalize_biphoton_idempotent_and_projective():
    dom = (0.1, 4.0)
    f = PumpedPair(PUMP, pump_scale=1.0)
    f1 = normalize_biphoton(f, dom)
    f2 = normalize_biphoton(f1, dom)
    assert abs(f2.scale - f1.scale) <= 1e-10 * abs(f1.scale)
    # projective invariance: scaling by 3 first changes nothing
    from dataclasses import replace
    f3 = normalize_biphoton(replace(f, scale=3.0 * f.scale), dom)
    assert abs(f3.scale - f1.scale) <= 1e-8 * abs(f1.scale)


def test_normalized_pumped_pair_against_riemann():
    # independent check of the norm on [0.1, 4]^2 by a midpoint Riemann sum
    dom = (0.1, 4.0)
    f = normalize_biphoton(PumpedPair(PUMP, pump_scale=1.0), dom)
    n = 2000
    k = np.linspace(dom[0], dom[1], n, endpoint=False)
    h = (dom[1] - dom[0]) / n
    k = k + 0.5 * h
    total = 0.0
    for i0 in range(0, n, 200):
        vals = f(k[i0:i0 + 200][:, None], k[None, :])
        total += float(np.sum(np.abs(vals) ** 2))
    total *= h * h
    assert total == pytest.approx(1.0, abs=1e-4)


def test_normalize_zero_norm_rejected():
    f = SymmetrizedProduct(GaussianPacket(0.5, 0.1, amplitude=0.0),
                           GaussianPacket(0.5, 0.1))
    with pytest.raises(ValueError):
        normalize_biphoton(f, (0.0, 1.0))


def test_load_table_packet_roundtrip(tmp_path):
    path = tmp_path / "packet.csv"
    path.write_text("k,re,im\n0.0,1.0,0.5\n0.5,2.0,-0.25\n1.0,0.0,0.0\n")
    t = load_table_packet(path)
    assert t.support == (0.0, 1.0)
    assert t(0.5) == 2.0 - 0.25j
    assert t(0.25) == pytest.approx(1.5 + 0.125j)


def test_load_table_packet_rejects_bad_rows(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("k,re,im\n0.0,1.0,0.0\noops,not,numbers\n")
    with pytest.raises(ValueError):
        load_table_packet(path)
