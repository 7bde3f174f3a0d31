"""Batch command line front end.

Subcommands read a sectioned key = value configuration file, run the
requested computation and write deterministic CSV tables (stable column
order, 17-significant-digit floats) plus static SVG line plots into the
output directory.  The defaults-resolved configuration is echoed to
``config_effective.ini`` so every run can be reproduced from its own
output directory byte for byte.

    wgcorr modes    --config cfg.ini [--out DIR] [--threads N]
    wgcorr single   --config cfg.ini ...
    wgcorr biphoton --config cfg.ini ...
    wgcorr bounds   --config cfg.ini ...
    wgcorr validate --config cfg.ini ...
"""

from __future__ import annotations

import argparse
import configparser
import csv
import sys
from pathlib import Path

import numpy as np

from . import svgplot
from .bounds import (
    Ray,
    bound_fit_csv_rows,
    check_lightcone_decay,
    decay_slope_fit,
    fit_universal_bound,
    summarize_bound_fits,
)
from .correlators import (
    SpacetimePoint,
    amplitude_biphoton,
    amplitude_single,
    asymptotic_single,
    biphoton_scan,
    entangled_spacetime_profile,
    kg_residual,
    momentum_norm,
    position_norm,
    probability_biphoton,
    probability_single,
    single_scan,
)
from .dispersion import DispersionRelation
from .modes import (
    Disk,
    ModeSolverError,
    Rectangle,
    analytic_spectrum,
    fd_spectrum,
    load_raster,
)
from .quadrature import QuadratureError
from .wavepackets import (
    CorrelatedGaussian,
    GaussianPacket,
    PumpedPair,
    SymmetrizedProduct,
    load_table_packet,
    normalize_biphoton,
    normalized_packet,
)


class ConfigError(Exception):
    pass


def _fmt(value) -> str:
    """CSV cell rendering; floats carry 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    if isinstance(value, (complex, np.complexfloating)):
        return f"{value.real:.17g}{value.imag:+.17g}j"
    return str(value)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


class Config:
    """Typed, line-anchored access to an INI file, recording every lookup.

    The record of resolved values (explicit and defaulted) is what gets
    echoed next to the outputs.
    """

    def __init__(self, path):
        self.path = Path(path)
        if not self.path.exists():
            raise ConfigError(f"{path}: configuration file not found")
        self._raw_lines = self.path.read_text().splitlines()
        self._cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            self._cp.read_string("\n".join(self._raw_lines), source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        self.resolved: dict[tuple[str, str], str] = {}

    def _line_of(self, section: str, key: str) -> int | None:
        current = None
        for i, ln in enumerate(self._raw_lines, start=1):
            s = ln.strip()
            if s.startswith("[") and s.endswith("]"):
                current = s[1:-1].strip().lower()
            elif current == section.lower() and (
                    s.lower().startswith(key.lower() + " ") or
                    s.lower().startswith(key.lower() + "=") or
                    s.lower().split("=")[0].strip() == key.lower()):
                return i
        return None

    def _fail(self, section, key, message):
        line = self._line_of(section, key)
        anchor = f"{self.path}:{line}" if line else f"{self.path} [{section}] {key}"
        raise ConfigError(f"{anchor}: {message}")

    def has(self, section, key) -> bool:
        return self._cp.has_option(section, key)

    def _get(self, section, key, default, conv, kind):
        if self._cp.has_option(section, key):
            raw = self._cp.get(section, key).strip()
            try:
                value = conv(raw)
            except ValueError:
                self._fail(section, key, f"expected {kind}, got {raw!r}")
        elif default is None:
            anchor = f"{self.path}"
            raise ConfigError(f"{anchor}: missing required key [{section}] {key}")
        else:
            value = default
        self.resolved[(section, key)] = self._render(value)
        return value

    @staticmethod
    def _render(value) -> str:
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, float):
            return repr(float(value))
        if isinstance(value, tuple):
            return ":".join(Config._render(v) for v in value)
        if isinstance(value, list):
            return ", ".join(Config._render(v) for v in value)
        return str(value)

    def get_str(self, section, key, default=None):
        return self._get(section, key, default, str, "a string")

    def get_float(self, section, key, default=None):
        return self._get(section, key, default, float, "a number")

    def get_int(self, section, key, default=None):
        return self._get(section, key, default, int, "an integer")

    def get_bool(self, section, key, default=None):
        def conv(raw):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return self._get(section, key, default, conv, "a boolean")

    def get_floats(self, section, key, default=None):
        def conv(raw):
            return [float(tok) for tok in raw.replace(";", ",").split(",") if tok.strip()]
        return self._get(section, key, default, conv, "a comma-separated number list")

    def get_pairs(self, section, key, default=None):
        def conv(raw):
            pairs = []
            for tok in raw.split(","):
                tok = tok.strip()
                if not tok:
                    continue
                a, _, b = tok.partition(":")
                pairs.append((float(a), float(b)))
            if not pairs:
                raise ValueError(raw)
            return pairs
        return self._get(section, key, default, conv, "a list like 50:50, 800:800")

    def echo(self, path):
        cp = configparser.ConfigParser()
        for (section, key), rendered in self.resolved.items():
            if not cp.has_section(section):
                cp.add_section(section)
            cp.set(section, key, rendered)
        with open(path, "w", encoding="utf-8") as fh:
            cp.write(fh)


# ----------------------------------------------------------------------
# model construction from config sections
# ----------------------------------------------------------------------

def resolve_spectrum(cfg: Config, count: int):
    source = cfg.get_str("mode", "source")
    if source == "rectangle":
        cs = Rectangle(cfg.get_float("mode", "a"), cfg.get_float("mode", "b"))
    elif source == "disk":
        cs = Disk(cfg.get_float("mode", "radius"))
    elif source == "raster":
        cs = load_raster(cfg.get_str("mode", "file"))
    else:
        raise ConfigError(f"{cfg.path}: [mode] source={source!r} does not define a spectrum")
    solver = cfg.get_str("mode", "solver", "analytic" if source != "raster" else "fd")
    if solver == "analytic":
        return analytic_spectrum(cs, count)
    spacing = None
    if source == "raster":
        spacing = cs.spacing
    if cfg.has("mode", "spacing") or source != "raster":
        spacing = cfg.get_float("mode", "spacing", spacing)
    return fd_spectrum(cs, count, spacing)


_SOURCE_KEYS = {"mass": ("mass",), "rectangle": ("a", "b"),
                "disk": ("radius",), "raster": ("file",)}


def resolve_mass(cfg: Config) -> float:
    source = cfg.get_str("mode", "source")
    if source not in _SOURCE_KEYS:
        raise ConfigError(
            f"{cfg.path}: [mode] source must be one of mass/rectangle/disk/raster, "
            f"got {source!r}")
    foreign = [k for s, keys in _SOURCE_KEYS.items() if s != source
               for k in keys if cfg.has("mode", k)]
    if foreign:
        raise ConfigError(
            f"{cfg.path}: [mode] must specify exactly one mass source; "
            f"source={source} conflicts with keys {foreign}")
    if source == "mass":
        mass = cfg.get_float("mode", "mass")
        if not mass > 0:
            raise ConfigError(f"{cfg.path}: [mode] mass must be positive")
        return mass
    index = cfg.get_int("mode", "index", 1)
    spectrum = resolve_spectrum(cfg, index)
    return float(spectrum.cutoff_masses[index - 1])


def resolve_packet(cfg: Config):
    family = cfg.get_str("packet", "family", "gaussian")
    if family == "gaussian":
        packet = GaussianPacket(
            center=cfg.get_float("packet", "center"),
            width=cfg.get_float("packet", "width"),
            amplitude=complex(cfg.get_float("packet", "amplitude_re", 1.0),
                              cfg.get_float("packet", "amplitude_im", 0.0)))
    elif family == "table":
        packet = load_table_packet(cfg.get_str("packet", "file"))
    else:
        raise ConfigError(f"{cfg.path}: [packet] family={family!r} unknown")
    if cfg.get_bool("packet", "normalize", True):
        packet = normalized_packet(packet)
    return packet


def resolve_biphoton(cfg: Config):
    family = cfg.get_str("biphoton", "family")
    if family == "separable":
        f = SymmetrizedProduct(
            GaussianPacket(cfg.get_float("biphoton", "packet1_center"),
                           cfg.get_float("biphoton", "packet1_width")),
            GaussianPacket(cfg.get_float("biphoton", "packet2_center"),
                           cfg.get_float("biphoton", "packet2_width")))
    elif family == "gaussian_correlated":
        f = CorrelatedGaussian(
            pump_center=cfg.get_float("biphoton", "pump_center"),
            pump_width=cfg.get_float("biphoton", "pump_width"),
            relative_width=cfg.get_float("biphoton", "relative_width"))
    elif family in ("pumped_pair", "yls"):
        pump = GaussianPacket(cfg.get_float("biphoton", "pump_center"),
                              cfg.get_float("biphoton", "pump_width"))
        f = PumpedPair(pump, pump_scale=cfg.get_float("biphoton", "pump_scale"))
    else:
        raise ConfigError(f"{cfg.path}: [biphoton] family={family!r} unknown")
    if cfg.get_bool("biphoton", "normalize", True):
        lo, hi = f.axis_domain()
        lo = cfg.get_float("biphoton", "norm_k_min", float(lo))
        hi = cfg.get_float("biphoton", "norm_k_max", float(hi))
        f = normalize_biphoton(f, (lo, hi))
    return f


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def cmd_modes(cfg: Config, out: Path) -> int:
    count = cfg.get_int("mode", "count", 10)
    spectrum = resolve_spectrum(cfg, count)
    clusters = spectrum.degenerate_clusters()
    cluster_of = {}
    for cid, members in enumerate(clusters):
        for m in members:
            cluster_of[m] = cid
    rows = [(m.index, m.label, m.mode_class, m.cutoff_mass, m.cutoff_mass**2,
             cluster_of[i]) for i, m in enumerate(spectrum.modes)]
    write_csv(out / "modes.csv",
              ("index", "label", "mode_class", "cutoff_mass", "m_squared", "cluster"),
              rows)
    svgplot.line_plot(out / "modes.svg",
                      [m.index for m in spectrum.modes],
                      [("cutoff mass", [m.cutoff_mass for m in spectrum.modes])],
                      title="mode cutoff masses", xlabel="mode index",
                      ylabel="cutoff mass")
    return 0


def cmd_single(cfg: Config, out: Path) -> int:
    mass = resolve_mass(cfg)
    d = DispersionRelation(mass)
    packet = resolve_packet(cfg)
    tol = cfg.get_float("tolerances", "quadrature_rel", 1e-9)

    rows = []
    series = []
    z = np.linspace(cfg.get_float("scan", "z_min"), cfg.get_float("scan", "z_max"),
                    cfg.get_int("scan", "z_count"))
    for t in cfg.get_floats("scan", "t_values", [0.0]):
        res = single_scan(packet, d, z, t, rel_tol=tol)
        for pt, a, p, e, meth in zip(res.points, res.amplitudes, res.values,
                                     res.error_estimates, res.methods):
            rows.append((pt.t, pt.z, a.real, a.imag, p, e, meth))
        series.append((f"t={t:g}", list(res.values)))
    write_csv(out / "single_scan.csv",
              ("t", "z", "amp_re", "amp_im", "probability", "error", "method"),
              rows)
    svgplot.line_plot(out / "single_scan.svg", list(z), series,
                      title="detection probability density",
                      xlabel="z", ylabel="P(z, t)")

    if cfg.has("scan", "v"):
        v = cfg.get_float("scan", "v")
        t_lo = cfg.get_float("scan", "t_min", 100.0)
        t_hi = cfg.get_float("scan", "t_max", 1000.0)
        nt = cfg.get_int("scan", "t_count", 25)
        ts = np.geomspace(t_lo, t_hi, nt)
        arows = []
        p_quad, p_asym = [], []
        for t in ts:
            pq, pe = probability_single(packet, d, SpacetimePoint(v * t, t), rel_tol=tol)
            asym = asymptotic_single(packet, d, v, t)
            rel = abs(pq - asym.probability) / asym.probability if asym.probability else np.inf
            arows.append((t, v, v * t, pq, pe, asym.probability, rel,
                          asym.guard_value, asym.guard_ok))
            p_quad.append(t * pq)
            p_asym.append(t * asym.probability)
        write_csv(out / "asymptotic_comparison.csv",
                  ("t", "v", "z", "p_quadrature", "p_error", "p_asymptotic",
                   "rel_diff", "guard_value", "guard_ok"),
                  arows)
        svgplot.line_plot(out / "asymptotic_comparison.svg", list(ts),
                          [("t * P quadrature", p_quad), ("t * P asymptotic", p_asym)],
                          title="ray probability against the large-time form",
                          xlabel="t", ylabel="t * P(v t, t)", logx=True)
    return 0


def cmd_biphoton(cfg: Config, out: Path) -> int:
    mass = resolve_mass(cfg)
    d = DispersionRelation(mass)
    f = resolve_biphoton(cfg)
    tol = cfg.get_float("tolerances", "biphoton_rel", 1e-6)

    t1 = cfg.get_float("scan", "t1")
    t2 = cfg.get_float("scan", "t2")
    z1 = np.linspace(cfg.get_float("scan", "z1_min"), cfg.get_float("scan", "z1_max"),
                     cfg.get_int("scan", "z1_count"))
    z2 = np.linspace(cfg.get_float("scan", "z2_min"), cfg.get_float("scan", "z2_max"),
                     cfg.get_int("scan", "z2_count"))
    amps, errs, _ = biphoton_scan(f, d, t1, t2, z1, z2, rel_tol=tol)
    rows = []
    for i, a in enumerate(z1):
        for j, b in enumerate(z2):
            amp = amps[i, j]
            err = errs[i, j]
            p = abs(amp) ** 2
            rows.append((t1, a, t2, b, amp.real, amp.imag, p,
                         2 * abs(amp) * err + err**2, "adaptive_panel"))
    write_csv(out / "biphoton_scan.csv",
              ("t1", "z1", "t2", "z2", "amp_re", "amp_im", "probability",
               "error", "method"),
              rows)
    step = max(1, z2.size // 6)
    series = [(f"z2={z2[j]:g}", list(np.abs(amps[:, j]) ** 2))
              for j in range(0, z2.size, step)]
    svgplot.line_plot(out / "biphoton_scan.svg", list(z1), series,
                      title="joint detection probability density",
                      xlabel="z1", ylabel="P(z1, t1, z2, t2)")

    v = np.linspace(cfg.get_float("scan", "profile_v_min", 0.1),
                    cfg.get_float("scan", "profile_v_max", 0.9),
                    cfg.get_int("scan", "profile_v_count", 41))
    prof = entangled_spacetime_profile(f, d, v, v)
    prows = []
    for i, a in enumerate(v):
        for j, b in enumerate(v):
            prows.append((a, b, prof.values[i, j], bool(prof.valid[i, j])))
    write_csv(out / "profile.csv", ("v1", "v2", "pair_weight", "valid"), prows)
    step = max(1, v.size // 6)
    series = [(f"v2={v[j]:.3g}", list(prof.values[:, j]))
              for j in range(0, v.size, step)]
    svgplot.line_plot(out / "profile.svg", list(v), series,
                      title="spacetime profile of the pair amplitude",
                      xlabel="v1", ylabel="|f(k10, k20)|^2")
    return 0


def cmd_bounds(cfg: Config, out: Path) -> int:
    mass = resolve_mass(cfg)
    d = DispersionRelation(mass)
    f = resolve_biphoton(cfg)
    tol = cfg.get_float("tolerances", "biphoton_rel", 1e-6)
    fits = []

    t_pairs = cfg.get_pairs("scan", "t_pairs", [(50.0, 50.0), (200.0, 200.0)])
    v1 = np.linspace(cfg.get_float("scan", "v1_min"), cfg.get_float("scan", "v1_max"),
                     cfg.get_int("scan", "v1_count"))
    v2 = np.linspace(cfg.get_float("scan", "v2_min"), cfg.get_float("scan", "v2_max"),
                     cfg.get_int("scan", "v2_count"))
    fit = fit_universal_bound(f, d, t_pairs, v1, v2, rel_tol=tol)
    fits.append(fit)
    t0s, profile = fit.t_offset_profile
    write_csv(out / "t_offset_profile.csv", ("t_offset", "weighted_sup"),
              list(zip(t0s, profile)))
    svgplot.line_plot(out / "t_offset_profile.svg", list(t0s),
                      [("sup P (t0+t1)(t0+t2)", list(profile))],
                      title="universal bound constant against the offset",
                      xlabel="t0", ylabel="C(t0)", logx=True, logy=True)

    if cfg.has("scan", "lightcone_t"):
        packet = resolve_packet(cfg)
        t_ray = cfg.get_float("scan", "lightcone_t")
        zs = np.linspace(cfg.get_float("scan", "lightcone_z_min"),
                         cfg.get_float("scan", "lightcone_z_max"),
                         cfg.get_int("scan", "lightcone_z_count", 21))
        orders = [int(n) for n in cfg.get_floats("scan", "lightcone_orders",
                                                 [0.0, 2.0, 4.0, 6.0])]
        qtol = cfg.get_float("tolerances", "quadrature_rel", 1e-9)
        report = check_lightcone_decay(packet, d, [Ray(t_ray, zs)], orders,
                                       rel_tol=qtol)
        fits.extend(report.fits)
        res = single_scan(packet, d, zs, t_ray, rel_tol=qtol)
        write_csv(out / "lightcone_scan.csv",
                  ("t", "z", "probability", "below_floor"),
                  [(t_ray, float(z), p, p <= 1e-26)
                   for z, p in zip(zs, res.values)])
        svgplot.line_plot(out / "lightcone_scan.svg",
                          [1.0 + float(z) for z in zs],
                          [("P", list(np.maximum(res.values, 1e-300)))],
                          title=f"decay outside the light cone (verdict: {report.verdict})",
                          xlabel="1 + |z|", ylabel="P", logx=True, logy=True)

    header, rows = bound_fit_csv_rows(fits)
    write_csv(out / "bound_fits.csv", header, rows)
    (out / "bounds_summary.txt").write_text(summarize_bound_fits(fits))
    return 0


def cmd_validate(cfg: Config, out: Path) -> int:
    """Built-in property battery; one PASS/FAIL line per check."""
    d = DispersionRelation(1.0)
    checks = []

    vs = np.linspace(-0.95, 0.95, 39)
    worst = max(abs(d.omega_d(d.stationary_point(v)) - v) for v in vs)
    checks.append(("dispersion_round_trip", worst, 1e-12))

    g = normalized_packet(GaussianPacket(0.75, 0.1))
    lo, hi = g.support
    k = np.linspace(lo, hi, 400_001)
    k = k[:-1] + (k[1] - k[0]) / 2
    env = g(k) / (2 * np.sqrt(2 * np.pi * d.omega(k)))
    for t in (0.0, 30.0):
        oracle = np.sum(env * np.exp(1j * (k * 1.5 - d.omega(k) * t))) * (k[1] - k[0])
        got = amplitude_single(g, d, SpacetimePoint(1.5, t), rel_tol=1e-10).value
        checks.append((f"quadrature_oracle_t{t:g}", abs(got - oracle) / abs(oracle), 1e-7))

    ms = analytic_spectrum(Rectangle(np.pi, np.pi), count=6)
    checks.append(("mode_orthonormality", ms.orthonormality_defect(), 1e-8))

    ge = GaussianPacket(0.0, 0.3)
    p1, _ = probability_single(ge, d, SpacetimePoint(2.0, 9.0), rel_tol=1e-10)
    p2, _ = probability_single(ge, d, SpacetimePoint(-2.0, 9.0), rel_tol=1e-10)
    checks.append(("probability_parity", abs(p1 - p2) / p1, 1e-9))

    f = SymmetrizedProduct(GaussianPacket(0.6, 0.3), GaussianPacket(1.0, 0.25))
    pa, _ = probability_biphoton(f, d, SpacetimePoint(2.0, 4.0),
                                 SpacetimePoint(1.0, 6.0), rel_tol=1e-8)
    pb, _ = probability_biphoton(f, d, SpacetimePoint(1.0, 6.0),
                                 SpacetimePoint(2.0, 4.0), rel_tol=1e-8)
    checks.append(("biphoton_exchange", abs(pa - pb) / pa, 1e-10))

    joint = amplitude_biphoton(f, d, SpacetimePoint(1.0, 3.0),
                               SpacetimePoint(-0.5, 5.0), rel_tol=1e-10).value
    parts = (amplitude_single(f.packet1, d, SpacetimePoint(1.0, 3.0), rel_tol=1e-11).value
             * amplitude_single(f.packet2, d, SpacetimePoint(-0.5, 5.0), rel_tol=1e-11).value
             + amplitude_single(f.packet1, d, SpacetimePoint(-0.5, 5.0), rel_tol=1e-11).value
             * amplitude_single(f.packet2, d, SpacetimePoint(1.0, 3.0), rel_tol=1e-11).value)
    checks.append(("separable_factorization", abs(joint - parts) / abs(parts), 1e-7))

    target = momentum_norm(g, d)
    drift = max(abs(position_norm(g, d, t) - target) / target for t in (0.0, 5.0))
    checks.append(("norm_conservation", drift, 1e-6))

    r1, a1 = kg_residual(g, d, 6.0, 9.0, h=2e-2)
    r2, _ = kg_residual(g, d, 6.0, 9.0, h=1e-2)
    ratio = abs(r1) / abs(r2)
    checks.append(("wave_operator_residual_ratio", abs(ratio - 4.0), 1.0))

    rows = []
    failed = 0
    for name, metric, threshold in checks:
        ok = metric <= threshold
        failed += 0 if ok else 1
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: metric={metric:.3e} "
              f"threshold={threshold:.1e}")
        rows.append((name, metric, threshold, ok))
    write_csv(out / "validation.csv", ("check", "metric", "threshold", "passed"), rows)
    return 1 if failed else 0


_COMMANDS = {
    "modes": cmd_modes,
    "single": cmd_single,
    "biphoton": cmd_biphoton,
    "bounds": cmd_bounds,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wgcorr",
        description="waveguide photon correlation scans: modes, probabilities, bounds")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI configuration file")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--threads", type=int, default=1,
                       help="worker hint for grid scans (evaluation is deterministic)")
    args = parser.parse_args(argv)

    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = Config(args.config)
        out = Path(args.out) if args.out else Path(cfg.get_str("output", "directory", "out"))
        out.mkdir(parents=True, exist_ok=True)
        status = _COMMANDS[args.command](cfg, out)
        cfg.echo(out / "config_effective.ini")
        return status
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (QuadratureError, ModeSolverError) as exc:
        print(f"numeric failure in {args.command}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
