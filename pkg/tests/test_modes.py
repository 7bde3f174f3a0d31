import numpy as np
import pytest
from scipy.optimize import bisect
from scipy.special import j0

from wgcorr import (
    Disk,
    ModeSolverError,
    Raster,
    Rectangle,
    UnsupportedShapeError,
    analytic_spectrum,
    check_completeness,
    fd_spectrum,
    load_raster,
)


def bessel_j0_first_zero():
    """Independent oracle: bisection on J0 over a bracketing interval."""
    return bisect(j0, 2.0, 3.0, xtol=1e-12)


# ----------------------------------------------------------------------
# closed-form spectra
# ----------------------------------------------------------------------

def test_square_fundamental_eigenvalue():
    ms = analytic_spectrum(Rectangle(np.pi, np.pi), count=1)
    assert ms.cutoff_masses[0] ** 2 == pytest.approx(2.0, abs=1e-12)


def test_square_fundamental_satisfies_pde():
    # substitute the sampled mode into the eigenvalue equation with a
    # 5-point Laplacian: residual should be O(h^2), small against m^2 v
    ms = analytic_spectrum(Rectangle(np.pi, np.pi), count=1)
    m2 = ms.cutoff_masses[0] ** 2
    h = ms.resolution
    n = int(round(np.pi / h)) - 1
    v = ms.modes[0].samples.reshape(n, n)
    pad = np.zeros((n + 2, n + 2))
    pad[1:-1, 1:-1] = v
    lap = (pad[:-2, 1:-1] + pad[2:, 1:-1] + pad[1:-1, :-2] + pad[1:-1, 2:]
           - 4 * pad[1:-1, 1:-1]) / h**2
    resid = lap + m2 * v
    assert np.abs(resid).max() < 2 * m2 * h**2 * np.abs(v).max()


def test_disk_fundamental_against_bisection_oracle():
    ms = analytic_spectrum(Disk(1.0), count=1)
    assert ms.cutoff_masses[0] == pytest.approx(bessel_j0_first_zero(), abs=1e-10)
    assert ms.cutoff_masses[0] == pytest.approx(2.404826, abs=1e-6)


def test_two_by_one_rectangle_low_eigenvalues():
    # oracle: enumerate p^2/4 + q^2 for small p, q and sort
    cand = sorted(p * p / 4 + q * q for p in range(1, 6) for q in range(1, 6))
    ms = analytic_spectrum(Rectangle(2 * np.pi, np.pi), count=2)
    np.testing.assert_allclose(ms.cutoff_masses**2, cand[:2], atol=1e-12)
    np.testing.assert_allclose(ms.cutoff_masses**2, [1.25, 2.0], atol=1e-12)


def test_square_degenerate_pair_ordering():
    ms = analytic_spectrum(Rectangle(np.pi, np.pi), count=4)
    clusters = ms.degenerate_clusters()
    # (1,2) and (2,1) share m^2 = 5 and come in lexicographic order
    assert clusters[1] == [1, 2]
    assert ms.modes[1].label == "(1,2)"
    assert ms.modes[2].label == "(2,1)"


def test_analytic_orthonormality():
    for cs in (Rectangle(np.pi, 1.7), Disk(1.3)):
        ms = analytic_spectrum(cs, count=8)
        assert ms.orthonormality_defect() < 1e-8


def test_spectra_sorted_and_positive():
    ms = analytic_spectrum(Disk(2.0), count=10)
    m = ms.cutoff_masses
    assert (m > 0).all()
    assert (np.diff(m) >= -1e-12).all()


def test_domain_monotonicity():
    small = analytic_spectrum(Rectangle(np.pi, np.pi), count=6).cutoff_masses
    big = analytic_spectrum(Rectangle(1.3 * np.pi, np.pi), count=6).cutoff_masses
    assert (big <= small + 1e-12).all()


def test_sign_convention_first_sample_positive():
    for ms in (analytic_spectrum(Rectangle(2.0, 1.0), count=5),
               analytic_spectrum(Disk(1.0), count=5)):
        for mode in ms.modes:
            nz = np.nonzero(np.abs(mode.samples) > 1e-12 * np.abs(mode.samples).max())[0]
            assert mode.samples[nz[0]] > 0


def test_raster_requires_fd_solver():
    r = Raster(np.ones((20, 20), dtype=bool), 0.05)
    with pytest.raises(UnsupportedShapeError):
        analytic_spectrum(r, count=1)


# ----------------------------------------------------------------------
# finite differences
# ----------------------------------------------------------------------

def test_fd_square_within_one_percent():
    ms = fd_spectrum(Rectangle(np.pi, np.pi), count=1, spacing=np.pi / 64)
    m2 = ms.cutoff_masses[0] ** 2
    assert abs(m2 - 2.0) / 2.0 < 0.01


def test_fd_richardson_ratio():
    e = []
    for spacing in (np.pi / 32, np.pi / 64):
        ms = fd_spectrum(Rectangle(np.pi, np.pi), count=1, spacing=spacing)
        e.append(abs(ms.cutoff_masses[0] ** 2 - 2.0))
    assert 3.0 < e[0] / e[1] < 5.0


def test_fd_disk_within_two_percent():
    ms = fd_spectrum(Disk(1.0), count=1, spacing=1 / 64)
    oracle = bessel_j0_first_zero()
    assert abs(ms.cutoff_masses[0] - oracle) / oracle < 0.02


def test_fd_orthonormality_within_tolerance():
    ms = fd_spectrum(Rectangle(np.pi, np.pi), count=4, spacing=np.pi / 40)
    assert ms.orthonormality_defect() < 10 * ms.resolution**2


def test_fd_eigenvalue_ordering_and_degeneracy():
    ms = fd_spectrum(Rectangle(np.pi, np.pi), count=3, spacing=np.pi / 48)
    m2 = ms.cutoff_masses**2
    assert m2[0] < m2[1] <= m2[2] * (1 + 1e-12)
    # the (1,2)/(2,1) pair stays a degenerate cluster
    clusters = ms.degenerate_clusters(rel_tol=1e-6)
    assert [1, 2] in clusters


def test_fd_rejects_underresolved_domain():
    with pytest.raises(ValueError):
        fd_spectrum(Rectangle(1.0, 1.0), count=1, spacing=0.2)


def test_fd_rejects_disconnected_mask():
    mask = np.zeros((40, 40), dtype=bool)
    mask[2:18, 2:18] = True
    mask[22:38, 22:38] = True
    with pytest.raises(ValueError):
        Raster(mask, 0.05)


# ----------------------------------------------------------------------
# completeness
# ----------------------------------------------------------------------

def test_projection_reproduces_basis_element():
    ms = analytic_spectrum(Rectangle(np.pi, np.pi), count=5)
    resid = check_completeness(ms, ms.modes[2].samples)
    assert resid < 1e-8


def test_smooth_bump_expansion_residual():
    ms100 = analytic_spectrum(Rectangle(np.pi, np.pi), count=100)
    x, y = ms100.node_x, ms100.node_y
    bump = np.sin(x) * np.sin(y) * np.exp(-((x - 1.2) ** 2 + (y - 1.9) ** 2))
    norm = np.sqrt(np.sum(ms100.weights * bump * bump))

    ms25 = analytic_spectrum(Rectangle(np.pi, np.pi), count=25)
    r25 = check_completeness(ms25, bump)
    r100 = check_completeness(ms100, bump)
    assert r25 < 0.10 * norm
    # frozen regression baseline for the 25-mode residual (relative)
    assert r25 / norm == pytest.approx(5.587e-03, rel=0.25)
    assert r100 < r25


# ----------------------------------------------------------------------
# raster file format
# ----------------------------------------------------------------------

def test_load_raster_roundtrip(tmp_path):
    path = tmp_path / "shape.txt"
    rows = ["0111", "1111", "1110"]
    path.write_text("spacing 0.025\n" + "\n".join(rows) + "\n")
    r = load_raster(path)
    assert r.spacing == 0.025
    assert r.mask.shape == (3, 4)
    assert bool(r.mask[0, 0]) is False and bool(r.mask[1, 0]) is True


def test_load_raster_validates(tmp_path):
    p1 = tmp_path / "bad_header.txt"
    p1.write_text("0.025\n11\n11\n")
    with pytest.raises(ValueError):
        load_raster(p1)
    p2 = tmp_path / "ragged.txt"
    p2.write_text("spacing 0.1\n111\n11\n")
    with pytest.raises(ValueError):
        load_raster(p2)
    p3 = tmp_path / "alien.txt"
    p3.write_text("spacing 0.1\n121\n111\n")
    with pytest.raises(ValueError):
        load_raster(p3)


def test_fd_on_loaded_raster_matches_direct_mask(tmp_path):
    # a 31x31 square mask at spacing 1/32 approximates the unit square
    n = 31
    rows = ["1" * n] * n
    path = tmp_path / "square.txt"
    path.write_text(f"spacing {1/32}\n" + "\n".join(rows) + "\n")
    r = load_raster(path)
    ms = fd_spectrum(r, count=1)
    # unit square fundamental: 2 pi^2
    assert ms.cutoff_masses[0] ** 2 == pytest.approx(2 * np.pi**2, rel=0.01)
