"""Command-line front end.

Every subcommand reads an optional JSON config (waveguide plus run
settings), applies flag overrides, and writes its artifacts into the output
directory (``--output-dir``, else ``$FASGUIDE_OUTPUT_DIR``, else the current
directory).

Exit codes: 0 success, 1 configuration error, 2 numerical/resolution error,
3 fewer than two FAS methods succeeded in ``fas-compare``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .continuation import curve_kappa, estimate_fas_mr, find_branch_points, sheet0prime
from .core import WaveguideConfig, demo_config
from .dispersion import find_gv_peaks, trace_branches
from .errors import ConfigError, FasguideError
from .leaky import estimate_fas_leaky, leaky_sweep
from .pseudobranch import build_model, estimate_fas_pseudo
from .synthesis import DEFAULT_BAND, ProbePulse, simulate

ENV_OUTPUT_DIR = "FASGUIDE_OUTPUT_DIR"

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_UNDERPOPULATED = 0, 1, 2, 3


@dataclass
class RunConfig:
    waveguide: WaveguideConfig = field(default_factory=demo_config)
    pulse: ProbePulse = field(default_factory=ProbePulse)
    distances: list = field(default_factory=lambda: [10.0, 20.0, 30.0])
    output_dir: Path = Path(".")
    im_height: float = 1.0

    @property
    def band(self):
        return self.pulse.band

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        rc = cls()
        wg = data.get("waveguide", data if "media" in data else None)
        if wg is not None:
            rc.waveguide = WaveguideConfig.from_dict(wg)
        if "pulse" in data:
            pd = data["pulse"]
            try:
                rc.pulse = ProbePulse(
                    omega0=float(pd.get("omega0", 28.0)),
                    sigma=float(pd.get("sigma", 0.2)),
                    band=tuple(pd.get("band", DEFAULT_BAND)),
                )
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad pulse settings: {exc}") from exc
        if "distances" in data:
            rc.distances = [float(x) for x in data["distances"]]
        if "output_dir" in data:
            rc.output_dir = Path(data["output_dir"])
        if "im_height" in data:
            rc.im_height = float(data["im_height"])
        return rc


def _window(args):
    if not args.omega_min < args.omega_max:
        raise ConfigError(f"empty frequency window [{args.omega_min}, {args.omega_max}]")
    if not args.step > 0:
        raise ConfigError("step must be positive")
    return np.arange(args.omega_min, args.omega_max + args.step / 2, args.step)


def _traced_peaks(cfg, lo, hi, step=0.05):
    # trace one unit beyond the window so interior peaks are not cut off
    branches = trace_branches(np.arange(max(lo - 1, step), hi + 1 + step / 2, step), cfg)
    return find_gv_peaks(branches, (lo, hi), cfg)


def _say(msg):
    print(msg, file=sys.stderr)


# --------------------------------------------------------------------------
# subcommands


def cmd_dispersion(rc: RunConfig, args):
    grid = _window(args)
    branches = trace_branches(grid, rc.waveguide)
    path = io.write_branches(rc.output_dir / "branches.csv", branches, rc.waveguide)
    _say(f"{len(branches)} branches -> {path}")


def cmd_gv_peaks(rc: RunConfig, args):
    _window(args)
    peaks = _traced_peaks(rc.waveguide, args.omega_min, args.omega_max, args.step)
    path = io.write_peaks(rc.output_dir / "peaks.csv", peaks)
    for p in peaks:
        print(f"omega*={p.omega_star:.4f}  k*={p.k_star:.4f}  v_gr={p.v_gr:.4f}")
    _say(f"{len(peaks)} peaks -> {path}")


def cmd_continuation(rc: RunConfig, args):
    grid = _window(args)
    curve = sheet0prime(grid, rc.im_height, rc.waveguide)
    io.write_sheet(rc.output_dir / "sheet0prime.csv", curve, curve_kappa(curve))
    region = (args.omega_min, args.omega_max, -args.bp_im, args.bp_im)
    bps = find_branch_points(region, rc.waveguide, max_im_k=args.max_im_k)
    io.write_branch_points(rc.output_dir / "branch_points.csv", bps)
    if args.omega0 is not None:
        est = estimate_fas_mr(curve, args.omega0)
        print(f"v_fas={est.v_fas:.4f}  kappa={est.kappa:.4f}")
    _say(f"sheet 0' ({len(curve)} points) and {len(bps)} branch points -> {rc.output_dir}")


def cmd_leaky(rc: RunConfig, args):
    grid = _window(args)
    roots = leaky_sweep(grid, rc.waveguide)
    io.write_leaky(rc.output_dir / "leaky.csv", roots)
    if args.omega0 is not None:
        est = estimate_fas_leaky(args.omega0, rc.waveguide)
        print(f"v_fas={est.v_fas:.4f}  kappa={est.kappa:.4f}")
    _say(f"{len(roots)} leaky roots -> {rc.output_dir / 'leaky.csv'}")


def cmd_pseudobranch(rc: RunConfig, args):
    if args.peaks:
        peaks = io.read_peaks(args.peaks)
    else:
        peaks = _traced_peaks(rc.waveguide, args.omega_min, args.omega_max)
    model = build_model(peaks)
    est = estimate_fas_pseudo(peaks, args.omega0)
    out = model.to_dict()
    out["estimate"] = est.to_dict()
    io.write_json(rc.output_dir / "pseudobranch.json", out)
    print(f"v={model.v:.4f}  beta={model.beta:.4f}  v_fas={est.v_fas:.4f}  kappa={est.kappa:.4f}")


def _pulse(rc: RunConfig, args) -> ProbePulse:
    p = rc.pulse
    try:
        return ProbePulse(
            omega0=args.omega0 if args.omega0 is not None else p.omega0,
            sigma=args.sigma if args.sigma is not None else p.sigma,
            band=(
                args.band_lo if args.band_lo is not None else p.band[0],
                args.band_hi if args.band_hi is not None else p.band[1],
            ),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_simulate(rc: RunConfig, args):
    p = _pulse(rc, args)
    distances = args.distances or rc.distances
    if not distances or any(L <= 0 for L in distances):
        raise ConfigError("distances must be non-empty and positive")
    res = simulate(rc.waveguide, p, distances, dt=args.dt, evanescent=not args.no_evanescent, check_resolution=args.check_resolution)
    for tr in res.traces:
        io.write_trace(rc.output_dir / io.trace_filename(tr.L), tr)
    io.write_fas_table(rc.output_dir / "fas_table.csv", res.measurements)
    io.write_json(rc.output_dir / "simulate.json", res.to_dict())
    for m in res.measurements:
        print(f"L={m.L:g}  tof={m.tof:.4f}  amplitude={m.amplitude:.4g}")
    if res.fit is not None:
        print(f"kappa={res.fit.kappa:.4f}  v_fas={res.fit.v_fas:.4f}")


def cmd_fas_compare(rc: RunConfig, args):
    cfg = rc.waveguide
    w0 = args.omega0
    lo, hi = args.omega_min, args.omega_max
    methods = {}

    def attempt(name, fn):
        try:
            methods[name] = fn().to_dict()
        except (FasguideError, ValueError) as exc:
            methods[name] = {"error": f"{type(exc).__name__}: {exc}"}

    peaks = []

    def mr():
        nonlocal peaks
        peaks = _traced_peaks(cfg, lo, hi)
        curve = sheet0prime(np.arange(lo, hi + 0.025, 0.05), rc.im_height, cfg, peaks=peaks)
        return estimate_fas_mr(curve, w0)

    def pseudo():
        return estimate_fas_pseudo(peaks or _traced_peaks(cfg, lo, hi), w0)

    attempt("miklowitz_randles", mr)
    attempt("leaky", lambda: estimate_fas_leaky(w0, cfg))
    attempt("pseudo_branch", pseudo)
    if args.distances:
        p = _pulse(rc, args)
        attempt("measured", lambda: simulate(cfg, p, args.distances).estimate(w0))
    ok = {k: v for k, v in methods.items() if "error" not in v}
    pairwise = {"kappa": {}, "v_fas": {}}
    names = list(ok)
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            for q in ("kappa", "v_fas"):
                x, y = ok[a][q], ok[b][q]
                pairwise[q][f"{a}/{b}"] = x / y if y else None
    io.write_json(rc.output_dir / "fas_compare.json", {"omega0": w0, "methods": methods, "pairwise": pairwise})
    for name, v in methods.items():
        if "error" in v:
            print(f"{name:18s} failed: {v['error']}")
        else:
            print(f"{name:18s} v_fas={v['v_fas']:.4f}  kappa={v['kappa']:.4f}")
    if len(ok) < 2:
        return EXIT_UNDERPOPULATED
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing


def _window_args(p, lo, hi, step=0.05):
    p.add_argument("--omega-min", type=float, default=lo)
    p.add_argument("--omega-max", type=float, default=hi)
    p.add_argument("--step", type=float, default=step, help="frequency step")


def _pulse_args(p):
    p.add_argument("--omega0", type=float, default=None, help="pulse centre frequency")
    p.add_argument("--sigma", type=float, default=None, help="pulse envelope width")
    p.add_argument("--band-lo", type=float, default=None)
    p.add_argument("--band-hi", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (waveguide, pulse, distances, ...)")
    common.add_argument("--output-dir", help=f"output directory (default ${ENV_OUTPUT_DIR} or .)")
    common.add_argument("--im-height", type=float, default=None, help="Im omega of sheet 0' (default 1)")

    parser = argparse.ArgumentParser(prog="fasguide", description="Two-layer waveguide dispersion and FAS analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dispersion", parents=[common], help="trace real dispersion branches -> branches.csv")
    _window_args(p, 20.0, 40.0)
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("gv-peaks", parents=[common], help="group-velocity peaks -> peaks.csv")
    _window_args(p, 22.0, 39.0)
    p.set_defaults(func=cmd_gv_peaks)

    p = sub.add_parser("continuation", parents=[common], help="sheet 0' and branch points -> sheet0prime.csv, branch_points.csv")
    _window_args(p, 20.0, 40.0)
    p.add_argument("--omega0", type=float, default=28.0, help="frequency of the printed FAS estimate")
    p.add_argument("--bp-im", type=float, default=1.5, help="|Im omega| extent of the branch-point search")
    p.add_argument("--max-im-k", type=float, default=None, help="drop branch points with |Im k| above this")
    p.set_defaults(func=cmd_continuation)

    p = sub.add_parser("leaky", parents=[common], help="leaky-wave sweep -> leaky.csv")
    _window_args(p, 20.0, 40.0)
    p.add_argument("--omega0", type=float, default=28.0)
    p.set_defaults(func=cmd_leaky)

    p = sub.add_parser("pseudobranch", parents=[common], help="tangent model fit -> pseudobranch.json")
    p.add_argument("--peaks", help="peaks.csv to fit (default: compute from the config)")
    p.add_argument("--omega-min", type=float, default=22.0)
    p.add_argument("--omega-max", type=float, default=39.0)
    p.add_argument("--omega0", type=float, default=28.0)
    p.set_defaults(func=cmd_pseudobranch)

    p = sub.add_parser("simulate", parents=[common], help="modal-sum traces and FAS table")
    p.add_argument("--distances", type=float, nargs="+", default=None)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--no-evanescent", action="store_true", help="drop the evanescent-mode leg")
    p.add_argument("--check-resolution", action="store_true", help="repeat at half the k step and compare")
    _pulse_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fas-compare", parents=[common], help="all FAS estimates -> fas_compare.json")
    p.add_argument("--distances", type=float, nargs="+", default=None, help="also run the measured method")
    p.add_argument("--omega-min", type=float, default=20.0, help="window for peaks and sheet 0'")
    p.add_argument("--omega-max", type=float, default=40.0)
    _pulse_args(p)
    p.set_defaults(func=cmd_fas_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rc = RunConfig.from_file(args.config) if args.config else RunConfig()
        out = args.output_dir or os.environ.get(ENV_OUTPUT_DIR) or rc.output_dir
        rc.output_dir = Path(out)
        if args.im_height is not None:
            rc.im_height = args.im_height
        if args.command == "fas-compare" and args.omega0 is None:
            args.omega0 = rc.pulse.omega0
        code = args.func(rc, args)
    except ConfigError as exc:
        _say(f"config error: {exc}")
        return EXIT_CONFIG
    except (FasguideError, ValueError, ArithmeticError) as exc:
        _say(f"numerical error: {type(exc).__name__}: {exc}")
        return EXIT_NUMERIC
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
