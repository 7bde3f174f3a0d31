"""Momentum-space amplitude families for one- and two-photon states.

Single-photon packets g(k) and exchange-symmetric pair amplitudes
f(k1, k2).  All objects are immutable, callable on scalars or arrays
(with broadcasting), and return complex values; evaluation is zero
outside the declared support.

Exchange symmetry of every pair family is exact by construction: the
arithmetic is arranged so that swapping the arguments produces bitwise
identical floating-point results.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .dispersion import DispersionRelation
from .quadrature import OscIntegralProblem, osc_integrate_1d, osc_integrate_2d

__all__ = [
    "GaussianPacket",
    "TablePacket",
    "SymmetrizedProduct",
    "CorrelatedGaussian",
    "PumpedPair",
    "load_table_packet",
    "packet_norm",
    "normalized_packet",
    "biphoton_norm",
    "normalize_biphoton",
]

# Envelopes count as supported where they exceed this fraction of the
# peak; for a Gaussian that is center +- CUT_SIGMAS * width.
SUPPORT_CUT = 1e-12
CUT_SIGMAS = float(np.sqrt(-2.0 * np.log(SUPPORT_CUT)))


# ----------------------------------------------------------------------
# single-photon packets
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianPacket:
    """g(k) = amplitude * exp(-(k - center)^2 / (2 width^2)), clipped to support."""

    center: float
    width: float
    amplitude: complex = 1.0 + 0.0j
    support: tuple[float, float] | None = None

    def __post_init__(self):
        if not (self.width > 0 and np.isfinite(self.width)):
            raise ValueError(f"packet width must be positive, got {self.width}")
        if self.support is None:
            half = CUT_SIGMAS * self.width
            object.__setattr__(self, "support", (self.center - half, self.center + half))
        lo, hi = self.support
        if not lo < hi:
            raise ValueError(f"support must be an increasing interval, got {self.support}")

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        lo, hi = self.support
        u = (k - self.center) / self.width
        vals = self.amplitude * np.exp(-0.5 * u * u)
        out = np.where((k >= lo) & (k <= hi), vals, 0.0)
        return out if out.shape else complex(out)

    def effective_width(self) -> float:
        return self.width


@dataclass(frozen=True)
class TablePacket:
    """Sampled packet with linear interpolation; zero outside the grid."""

    k: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.k, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if k.ndim != 1 or k.size < 2 or v.shape != k.shape:
            raise ValueError("table packet needs matching 1-D grids with >= 2 samples")
        if not (np.diff(k) > 0).all():
            raise ValueError("table grid must be strictly increasing")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "values", v)

    @property
    def support(self) -> tuple[float, float]:
        return (float(self.k[0]), float(self.k[-1]))

    def __call__(self, kq):
        kq = np.asarray(kq, dtype=float)
        re = np.interp(kq, self.k, self.values.real, left=0.0, right=0.0)
        im = np.interp(kq, self.k, self.values.imag, left=0.0, right=0.0)
        out = re + 1j * im
        return out if out.shape else complex(out)

    def effective_width(self) -> float:
        """RMS width of |g|^2 on the table grid."""
        w = np.abs(self.values) ** 2
        total = np.trapezoid(w, self.k)
        if total <= 0:
            raise ValueError("cannot define a width for an identically zero table")
        mean = np.trapezoid(self.k * w, self.k) / total
        var = np.trapezoid((self.k - mean) ** 2 * w, self.k) / total
        return float(np.sqrt(var))


def load_table_packet(path) -> TablePacket:
    """Read a (k, re, im) CSV file; a non-numeric first row is a header."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or not "".join(row).strip():
                continue
            try:
                rows.append((float(row[0]), float(row[1]), float(row[2])))
            except (ValueError, IndexError):
                if rows:
                    raise ValueError(f"malformed table row {row!r} in {path}")
                continue  # header line
    if len(rows) < 2:
        raise ValueError(f"table file {path} holds fewer than 2 samples")
    data = np.asarray(rows, dtype=float)
    return TablePacket(data[:, 0], data[:, 1] + 1j * data[:, 2])


# ----------------------------------------------------------------------
# two-photon pair amplitudes
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SymmetrizedProduct:
    """f(k1,k2) = scale * (g1(k1) g2(k2) + g1(k2) g2(k1)) / 2."""

    packet1: GaussianPacket | TablePacket
    packet2: GaussianPacket | TablePacket
    scale: complex = 1.0 + 0.0j

    def __call__(self, k1, k2):
        a = self.packet1(k1) * self.packet2(k2)
        b = self.packet1(k2) * self.packet2(k1)
        return self.scale * (0.5 * (a + b))

    def axis_domain(self) -> tuple[float, float]:
        lo1, hi1 = self.packet1.support
        lo2, hi2 = self.packet2.support
        return (min(lo1, lo2), max(hi1, hi2))

    def effective_width(self) -> float:
        return min(self.packet1.effective_width(), self.packet2.effective_width())


@dataclass(frozen=True)
class CorrelatedGaussian:
    """Gaussian in the pump sum k1 + k2 times Gaussian in the difference.

    f = scale * exp(-(k1+k2-pump_center)^2 / (2 pump_width^2))
              * exp(-(k1-k2)^2 / (2 relative_width^2))
    """

    pump_center: float
    pump_width: float
    relative_width: float
    scale: complex = 1.0 + 0.0j

    def __post_init__(self):
        if not (self.pump_width > 0 and self.relative_width > 0):
            raise ValueError("pump_width and relative_width must be positive")

    def __call__(self, k1, k2):
        s = np.asarray(k1, dtype=float) + np.asarray(k2, dtype=float)
        dm = np.asarray(k1, dtype=float) - np.asarray(k2, dtype=float)
        us = (s - self.pump_center) / self.pump_width
        ud = dm / self.relative_width
        out = self.scale * np.exp(-0.5 * us * us - 0.5 * ud * ud)
        return out if np.shape(out) else complex(out)

    def axis_domain(self) -> tuple[float, float]:
        half = CUT_SIGMAS * (self.pump_width + self.relative_width)
        return (0.5 * (self.pump_center - half), 0.5 * (self.pump_center + half))

    def effective_width(self) -> float:
        wp2, wr2 = self.pump_width**2, self.relative_width**2
        return float(np.sqrt(wp2 * wr2 / (wp2 + wr2)))


@dataclass(frozen=True)
class PumpedPair:
    """Co-propagating pair amplitude with a Gaussian pump spectrum.

    f(k1,k2) = scale * (i / pump_scale^2) * pump(k1+k2)
             * sqrt(6 k1 k2 (k1+k2))      on k1 > 0, k2 > 0,
    and zero elsewhere: the square root is real only on the open positive
    quadrant, so support is restricted there by convention.
    """

    pump: GaussianPacket
    pump_scale: float
    scale: complex = 1.0 + 0.0j

    def __post_init__(self):
        if not (self.pump_scale > 0):
            raise ValueError("pump_scale must be positive")

    def __call__(self, k1, k2):
        k1 = np.asarray(k1, dtype=float)
        k2 = np.asarray(k2, dtype=float)
        s = k1 + k2
        arg = 6.0 * (k1 * k2) * s
        good = (k1 > 0) & (k2 > 0)
        root = np.sqrt(np.where(good, arg, 0.0))
        pref = self.scale * (1j / self.pump_scale**2)
        out = np.where(good, pref * self.pump(s) * root, 0.0 + 0.0j)
        return out if out.shape else complex(out)

    def axis_domain(self) -> tuple[float, float]:
        return (0.0, self.pump.support[1])

    def effective_width(self) -> float:
        return self.pump.effective_width()


BiphotonSpec = SymmetrizedProduct | CorrelatedGaussian | PumpedPair


# ----------------------------------------------------------------------
# normalization
# ----------------------------------------------------------------------

_UNIT_MASS = DispersionRelation(1.0)  # phase factors drop out at z = t = 0


def packet_norm(packet, domain: tuple[float, float] | None = None,
                rel_tol: float = 1e-11) -> float:
    """sqrt of int |g(k)|^2 dk over the packet support."""
    dom = packet.support if domain is None else domain
    prob = OscIntegralProblem(
        envelope=lambda k: np.abs(packet(k)) ** 2 + 0.0j,
        z=0.0, t=0.0, dispersion=_UNIT_MASS, domain=dom, rel_tol=rel_tol)
    res = osc_integrate_1d(prob, max_width=_feature_width(packet))
    return float(np.sqrt(res.value.real))


def normalized_packet(packet, domain: tuple[float, float] | None = None):
    """Rescale a packet to unit L2 norm on its (or the given) domain."""
    n = packet_norm(packet, domain)
    if not n > 0:
        raise ValueError("cannot normalize an identically zero packet")
    if isinstance(packet, GaussianPacket):
        return replace(packet, amplitude=packet.amplitude / n)
    return TablePacket(packet.k, packet.values / n)


def biphoton_norm(spec: BiphotonSpec, k_domain: tuple[float, float],
                  rel_tol: float = 1e-10) -> float:
    """sqrt of the truncated L2 norm  int int |f|^2 dk1 dk2  over k_domain^2."""
    def env(k1, k2):
        return np.abs(spec(k1, k2)) ** 2 + 0.0j

    p = OscIntegralProblem(envelope=lambda k: k, z=0.0, t=0.0,
                           dispersion=_UNIT_MASS, domain=k_domain, rel_tol=rel_tol)
    res = osc_integrate_2d(p, p, env, max_width=_feature_width(spec),
                           share_breaks=True)
    return float(np.sqrt(res.value.real))


def normalize_biphoton(spec: BiphotonSpec, k_domain: tuple[float, float],
                       rel_tol: float = 1e-10) -> BiphotonSpec:
    """Rescale so that the truncated L2 norm over k_domain^2 equals one."""
    n = biphoton_norm(spec, k_domain, rel_tol)
    if not (np.isfinite(n) and n > 0):
        raise ValueError("cannot normalize a pair amplitude with zero norm on the domain")
    return replace(spec, scale=spec.scale / n)


def _feature_width(obj) -> float | None:
    try:
        return 0.5 * obj.effective_width()
    except (AttributeError, ValueError):
        return None
