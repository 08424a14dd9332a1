"""Command line front-end.

Usage: ``thermospec COMMAND --config PATH [--out CSV] [--plot SVG] ...``

Exit codes: 0 success, 2 configuration error, 3 numerical cap exceeded,
4 domain error (for example ``alpha`` outside ``L_Phi`` or a failed check).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .checks import run_suite
from .config import RunConfig, load_config
from .errors import ConfigError, ThermoError
from .geometry import fixed_point_average_dimension, gibbs_local_dimension_spectrum
from .metric import metric_dimension
from .potential import as_bundle
from .pressure import pressure_bracket, pressure_exact, pressure_extrapolate
from .spectrum import SpectrumSystem, lambda_estimate, localized_dimension, spectrum_curve

EXIT = {"config": 2, "cap": 3, "domain": 4}
COMMANDS = ("pressure", "dimension", "tau", "spectrum", "count", "localized", "fixed-points",
            "gibbs-spectrum", "check")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _vec(value, d: int) -> np.ndarray:
    v = np.atleast_1d(np.asarray(value, dtype=float))
    if v.shape != (d,):
        raise ConfigError(f"expected {d} coordinates, got {v.tolist()}")
    return v


def _need(cfg: RunConfig, *attrs):
    for a in attrs:
        if getattr(cfg, a) is None:
            raise ConfigError(f"command needs a [{a}] section")


# -- commands: each returns (header, rows) ---------------------------------------------

def cmd_pressure(cfg, args):
    _need(cfg, "potential")
    n = int(cfg.param("n", 64))
    rows = []
    for i, c in enumerate(as_bundle(cfg.potential).components):
        exact = pressure_exact(c) if c.kind == "kstep" else float("nan")
        b = pressure_bracket(c, n)
        rows.append([i, exact, b.lower, b.upper, pressure_extrapolate(c, n), n])
    return ["component", "pressure_exact", "bracket_lower", "bracket_upper", "extrapolated", "n"], rows


def cmd_dimension(cfg, args):
    _need(cfg, "metric")
    rows = []
    if cfg.metric.psi.kind == "kstep":
        d, err = metric_dimension(cfg.metric, "root")
        rows.append(["root", d, err])
    d, err = metric_dimension(cfg.metric, "count", int(cfg.param("n_max", 20)))
    rows.append(["count", d, err])
    return ["method", "value", "error"], rows


def cmd_tau(cfg, args):
    _need(cfg, "metric", "potential")
    system = SpectrumSystem.of(cfg.metric, cfg.potential)
    z = _vec(cfg.param("z", [0.0] * system.d), system.d)
    a = _vec(cfg.param("alpha", [0.0] * system.d), system.d)
    return ["tau"], [[system.tau(z, a, tol=args.tol)]]


def cmd_spectrum(cfg, args):
    _need(cfg, "metric", "potential")
    curve = spectrum_curve(cfg.metric, cfg.potential, points=int(cfg.param("points", 201)),
                           grid2=int(cfg.param("grid2", 41)), threads=args.threads)
    d = curve.potential.d
    header = [f"alpha_{i + 1}" for i in range(d)] + ["tau_star"] + [f"z_star_{i + 1}" for i in range(d)] + \
        ["witness_entropy", "witness_psi_avg", "boundary_flag"]
    rows = []
    for p in curve.grid:
        w = p.witness
        rows.append(list(p.alpha) + [p.tau_star] + list(p.z_star) +
                    [w.entropy if w else float("nan"), w.psi_avg if w else float("nan"), p.boundary])
    if args.plot:
        _write_svg(args.plot, curve.alphas, curve.values, "alpha", "tau*")
    return header, rows


def cmd_count(cfg, args):
    _need(cfg, "metric", "potential")
    d = cfg.potential.d
    alpha = _vec(cfg.param("alpha", [0.0] * d), d)
    n_list = cfg.param("n_list", [cfg.param("n", 12)])
    eps_list = cfg.param("eps", [0.05])
    table = lambda_estimate(cfg.metric, cfg.potential, alpha, [int(n) for n in np.atleast_1d(n_list)],
                            [float(e) for e in np.atleast_1d(eps_list)])
    rows = [[n, e, round(math.exp(v * n)) if math.isfinite(v) else 0, v] for n, e, v in table.rows]
    rows.append(["extrapolated", "", "", table.extrapolated])
    return ["n", "eps", "count", "log_count_over_n"], rows


def cmd_localized(cfg, args):
    _need(cfg, "metric", "potential", "xi")
    system = SpectrumSystem.of(cfg.metric, cfg.potential)
    value = localized_dimension(cfg.xi, system, interval=cfg.xi_interval)
    return ["localized_dimension", "interval_valued"], [[value, cfg.xi_interval]]


def cmd_fixed_points(cfg, args):
    if cfg.ifs is None:
        raise ConfigError("fixed-points needs an [ifs] section")
    res = fixed_point_average_dimension(cfg.ifs, k=int(cfg.param("k", 8)),
                                        membership_depth=int(cfg.param("membership_depth", 12)))
    d = cfg.ifs.dim
    header = ["value"] + [f"argmax_{i + 1}" for i in range(d)] + ["full_dim", "dimension"]
    return header, [[res.value] + list(res.argmax) + [res.full_dim, res.dimension]]


def cmd_gibbs_spectrum(cfg, args):
    if cfg.ifs is None or cfg.potential is None:
        raise ConfigError("gibbs-spectrum needs [ifs] and [potential] sections")
    phi = cfg.potential.components[0]
    spec = gibbs_local_dimension_spectrum(cfg.ifs, phi, points=int(cfg.param("points", 201)),
                                          normalize=bool(cfg.param("normalize", False)))
    rows = [[b, v] for b, v in zip(spec.betas, spec.values)]
    if cfg.xi is not None:
        rows.append(["localized", spec.localized(cfg.xi, cfg.xi_interval)])
    if args.plot:
        _write_svg(args.plot, spec.betas[:, None], spec.values, "local dimension", "dimension")
    return ["local_dimension", "dimension"], rows


def cmd_check(cfg, args):
    _need(cfg, "metric", "potential")
    results = run_suite(cfg.metric, cfg.potential, seed=args.seed)
    rows = [[r.name, r.violation, r.tol, r.passed] for r in results]
    failed = [r.name for r in results if not r.passed]
    return ["check", "violation", "tol", "passed"], rows, failed


HANDLERS = {
    "pressure": cmd_pressure,
    "dimension": cmd_dimension,
    "tau": cmd_tau,
    "spectrum": cmd_spectrum,
    "count": cmd_count,
    "localized": cmd_localized,
    "fixed-points": cmd_fixed_points,
    "gibbs-spectrum": cmd_gibbs_spectrum,
    "check": cmd_check,
}


# -- output -------------------------------------------------------------------------

def render_csv(command: str, cfg: RunConfig, header, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# thermospec {__version__} command={command} config_sha256={cfg.digest}\r\n")
    writer = csv.writer(buf)
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(x) for x in row])
    return buf.getvalue()


def _write_svg(path, x, y, xlabel, ylabel, size=(480, 320), pad=40):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w, h = size
    ok = np.isfinite(y)
    y0, y1 = (float(y[ok].min()), float(y[ok].max())) if ok.any() else (0.0, 1.0)
    y1 = y1 if y1 > y0 else y0 + 1.0

    def sy(v):
        return h - pad - (v - y0) / (y1 - y0) * (h - 2 * pad)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">',
             f'<line x1="{pad}" y1="{h - pad}" x2="{w - pad}" y2="{h - pad}" stroke="black"/>',
             f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{h - pad}" stroke="black"/>',
             f'<text x="{w / 2}" y="{h - 8}" text-anchor="middle">{xlabel}</text>',
             f'<text x="12" y="{h / 2}" transform="rotate(-90 12 {h / 2})" text-anchor="middle">{ylabel}</text>']
    if x.ndim == 2 and x.shape[1] == 2:
        lo, hi = x.min(axis=0), x.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        for (a, b), v in zip(x, y):
            if not math.isfinite(v):
                continue
            shade = int(255 * (1 - (v - y0) / (y1 - y0)))
            cx = pad + (a - lo[0]) / span[0] * (w - 2 * pad)
            cy = h - pad - (b - lo[1]) / span[1] * (h - 2 * pad)
            parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="3" fill="rgb({shade},{shade},{shade})"/>')
    else:
        xs = x.reshape(len(y), -1)[:, 0]
        x0, x1 = float(xs.min()), float(xs.max())
        x1 = x1 if x1 > x0 else x0 + 1.0
        pts = " ".join(f"{pad + (a - x0) / (x1 - x0) * (w - 2 * pad):.2f},{sy(v):.2f}"
                       for a, v in zip(xs, y) if math.isfinite(v))
        parts.append(f'<polyline fill="none" stroke="black" points="{pts}"/>')
    parts.append("</svg>")
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(parts) + "\n")
    except OSError as exc:  # plotting never changes the exit code
        print(json.dumps({"warning": "plot", "message": str(exc)}), file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thermospec", description="Multifractal spectra on subshifts of finite type.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="INI run configuration")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--plot", help="optional SVG output path")
    p.add_argument("--threads", type=int, default=None, help="worker threads (else [run] threads, else env THERMOSPEC_THREADS)")
    p.add_argument("--seed", type=int, default=0, help="seed for sampled quantities")
    p.add_argument("--tol", type=float, default=1e-10, help="root-finding tolerance")
    return p


def _error(exc: Exception, category: str) -> int:
    record = {"error": type(exc).__name__, "category": category, "message": str(exc)}
    print(json.dumps(record), file=sys.stderr)
    return EXIT[category]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        threads = args.threads or cfg.param("threads") or int(os.environ.get("THERMOSPEC_THREADS", "1") or 1)
        args.threads = max(1, int(threads))
        out = HANDLERS[args.command](cfg, args)
    except ThermoError as exc:
        return _error(exc, exc.category)
    failed = []
    if len(out) == 3:
        header, rows, failed = out
    else:
        header, rows = out
    text = render_csv(args.command, cfg, header, rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if failed:
        print(json.dumps({"error": "CheckFailed", "category": "domain", "failed": failed}), file=sys.stderr)
        return EXIT["domain"]
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
