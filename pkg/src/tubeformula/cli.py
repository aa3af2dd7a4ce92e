"""Command line entry point: ``tubeformula --config NAME|PATH [overrides]``."""

import argparse
import csv
import io
import logging
import math
import sys
from pathlib import Path

from . import __version__
from .config import MODES, bundled_configs, parse_config, read_config
from .errors import ConfigError, TubeFormulaError
from .geometry import inner_tube_volume_raster, profile_volume, steiner_coefficients
from .oracle import SweepReport, direct_tile_sum, sweep_compare
from .raster import write_pgm
from .spectrum import ScalingZeta, complex_dimensions, lattice_detect
from .system import raster_condition_check
from .tube import GeometricZeta, tube_formula

log = logging.getLogger("tubeformula")


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    if v is None:
        return ""
    return str(v)


def write_csv(path, header, rows, cfg, meta=()):
    """CSV with '#' provenance lines; LF endings, 17 significant digits."""
    buf = io.StringIO()
    buf.write(f"# tubeformula {__version__}\n")
    buf.write(f"# config-sha256 {cfg.digest}\n")
    buf.write(f"# mode {cfg.mode}\n")
    for key, value in meta:
        buf.write(f"# {key} {_fmt(value)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(buf.getvalue().encode("utf-8"))
    return path


def _window(cfg, period, n_max):
    if cfg.window is not None:
        return cfg.window
    if period is not None:
        return (n_max + 0.5) * period
    return 100.0


def _dimensions(cfg, n_max):
    zeta = ScalingZeta.of(cfg.system)
    lat = lattice_detect(zeta)
    window = _window(cfg, None if lat is None else lat.period, n_max)
    return zeta, complex_dimensions(zeta, window, d=cfg.system.d)


def run_dimensions(cfg, out):
    zeta, dims = _dimensions(cfg, max(cfg.truncation))
    meta = [("D", dims.D), ("period", dims.period), ("window", dims.window),
            ("method", dims.method)]
    path = write_csv(out / "dimensions.csv", ("re", "im", "zeta_residue_re", "zeta_residue_im", "order"),
                     dims.csv_rows(), cfg, meta)
    log.info("D = %.17g, period = %s, %d poles in |Im| <= %g -> %s", dims.D,
             _fmt(dims.period), len(dims.poles), dims.window, path)
    return 0


def run_polygon(cfg, out):
    poly = cfg.polygon
    k1, k0 = steiner_coefficients(poly)
    rows = []
    for eps in cfg.eps:
        model = profile_volume(cfg.profile, eps) if cfg.profile is not None else k1 * eps + k0 * eps ** 2
        rv = inner_tube_volume_raster(poly, eps, cfg.resolution)
        diff = abs(rv.value - model)
        rows.append((eps, model, rv.value, diff, rv.error_bound, diff / abs(model),
                     diff <= max(0.01 * abs(model), rv.error_bound)))
    meta = [("kappa1", k1), ("kappa0", k0), ("area", poly.area), ("perimeter", poly.perimeter),
            ("resolution", cfg.resolution)]
    path = write_csv(out / "polygon.csv",
                     ("eps", "model", "raster", "abs_diff", "raster_bound", "rel_diff", "agrees"),
                     rows, cfg, meta)
    log.info("kappa1 = %.17g, kappa0 = %.17g -> %s", k1, k0, path)
    return 0 if all(r[-1] for r in rows) else 3


def run_tube(cfg, out):
    zeta, dims = _dimensions(cfg, max(cfg.truncation))
    gzs = [GeometricZeta(zeta, p) for p in cfg.profiles]
    rows = []
    for eps in cfg.eps:
        direct = math.fsum(direct_tile_sum(cfg.system, p, eps) for p in cfg.profiles)
        for n in cfg.truncation:
            evs = [tube_formula(gz, dims, eps, n) for gz in gzs]
            total = math.fsum(ev.total for ev in evs)
            err = abs(total - direct)
            rows.append((eps, n, math.fsum(ev.integer_part for ev in evs),
                         math.fsum(ev.complex_part for ev in evs), total, direct, err,
                         err / abs(direct), max(ev.imag_leak for ev in evs)))
    path = write_csv(out / "tube.csv", SweepReport.CSV_HEADER, rows, cfg,
                     [("D", dims.D), ("period", dims.period), ("window", dims.window)])
    log.info("%d rows, max rel_err %.3g -> %s", len(rows), max(r[7] for r in rows), path)
    return 0


def plot_sweep(report, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ok = [r for r in report.rows if not r.error]
    eps = [r.eps for r in ok]
    with matplotlib.rc_context({"svg.hashsalt": "tubeformula", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(eps, [r.direct_value for r in ok], "k-", label="direct sum")
        ax.plot(eps, [r.residue_value for r in ok], "o", mfc="none", label=f"residues, N={report.N}")
        ax.set_xlabel("eps")
        ax.set_ylabel("V(eps)")
        ax.legend(loc="upper left")
        inset = ax.inset_axes([0.58, 0.12, 0.38, 0.32])
        inset.semilogy(eps, [max(r.rel_err, 1e-17) for r in ok], "r.-")
        inset.set_title("rel. error", fontsize=8)
        inset.tick_params(labelsize=7)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path


def run_compare(cfg, out):
    n = max(cfg.truncation)
    zeta, dims = _dimensions(cfg, n)
    gzs = [GeometricZeta(zeta, p) for p in cfg.profiles]
    report = sweep_compare(cfg.system, list(cfg.profiles), dims, cfg.eps, n, gz=gzs)
    path = write_csv(out / "compare.csv", SweepReport.CSV_HEADER, report.csv_rows(), cfg,
                     [("D", dims.D), ("period", dims.period), ("window", dims.window),
                      ("cutoff", report.cutoff_policy), ("max_rel_err", report.max_rel_err)])
    if cfg.svg:
        plot_sweep(report, out / "compare.svg")
    for row in report.failed:
        log.error("eps = %s: %s", _fmt(row.eps), row.error)
    log.info("N = %d, max rel_err %.3g over %d points -> %s", n, report.max_rel_err,
             len(report.rows), path)
    return 3 if report.failed else 0


def run_conditions(cfg, out):
    rep = raster_condition_check(cfg.system, cfg.hull, cfg.resolution)
    out.mkdir(parents=True, exist_ok=True)
    write_pgm(out / "generator.pgm", rep.generator_mask)
    rows = [("tileset_ok", rep.tileset_ok), ("nontrivial_ok", rep.nontrivial_ok),
            ("hull_area", rep.hull_area), ("outside_area", rep.outside_area),
            ("overlap_area", rep.overlap_area), ("uncovered_area", rep.uncovered_area),
            ("error_bound", rep.error_bound)]
    path = write_csv(out / "conditions.csv", ("quantity", "value"), rows, cfg,
                     [("resolution", cfg.resolution)])
    log.info("tileset %s, nontrivial %s -> %s", rep.tileset_ok, rep.nontrivial_ok, path)
    return 0 if rep.tileset_ok and rep.nontrivial_ok else 3


RUNNERS = {
    "dimensions": run_dimensions,
    "polygon": run_polygon,
    "tube": run_tube,
    "compare": run_compare,
    "conditions": run_conditions,
}


def run(cfg, out_dir=None):
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    return RUNNERS[cfg.mode](cfg, out)


def build_parser():
    p = argparse.ArgumentParser(
        prog="tubeformula",
        description="Tube volumes of self-similar tilings: residue formula vs direct summation.")
    p.add_argument("--config", required=True,
                   help=f"config file or bundled name ({', '.join(bundled_configs())})")
    p.add_argument("--mode", choices=MODES, help="override the config's mode")
    p.add_argument("--out", help="output directory (default: config output.dir)")
    p.add_argument("--eps-min", type=float)
    p.add_argument("--eps-max", type=float)
    p.add_argument("--eps-count", type=int)
    p.add_argument("--truncation", type=int, help="residue truncation N")
    p.add_argument("--window", type=float, help="pole search height T")
    p.add_argument("--resolution", type=int, help="raster pixels per unit length")
    p.add_argument("--quiet", action="store_true")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def apply_overrides(raw, args):
    raw = dict(raw)
    if args.mode:
        raw["mode"] = args.mode
    if any(v is not None for v in (args.eps_min, args.eps_max, args.eps_count)):
        eps = raw.get("eps")
        eps = dict(eps) if isinstance(eps, dict) else {}
        for key, value in (("min", args.eps_min), ("max", args.eps_max), ("count", args.eps_count)):
            if value is not None:
                eps[key] = value
        raw["eps"] = eps
    for key in ("truncation", "window", "resolution"):
        if getattr(args, key) is not None:
            raw[key] = getattr(args, key)
    return raw


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = parse_config(apply_overrides(read_config(args.config), args))
        return run(cfg, args.out)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return exc.exit_code
    except TubeFormulaError as exc:
        extra = ""
        if getattr(exc, "point", None) is not None:
            extra = f" (at s = {exc.point})"
        log.error("%s: %s%s", type(exc).__name__, exc, extra)
        return exc.exit_code
    except (ValueError, ArithmeticError) as exc:
        log.error("numeric error: %s", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
