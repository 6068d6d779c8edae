"""CSV / JSON emitters.  Files are written to a temporary name and renamed into place."""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .dispersion import GvPeak

FLOAT_FORMAT = "%.9g"


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return FLOAT_FORMAT % x
    return str(x)


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path, header, rows) -> Path:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return atomic_write_text(path, buf.getvalue())


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def _clean(obj):
    # JSON has no NaN/inf
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def write_json(path, obj) -> Path:
    return atomic_write_text(path, json.dumps(_clean(obj), indent=2, default=_json_default) + "\n")


# --------------------------------------------------------------------------
# emitters with fixed column order


def write_branches(path, branches, cfg) -> Path:
    def rows():
        for br in branches:
            vg = br.group_velocities(cfg)
            for p, v in zip(br.points, vg):
                yield br.index, p.omega, p.k, v

    return write_csv(path, ["branch_index", "omega", "k", "v_g"], rows())


def write_peaks(path, peaks) -> Path:
    return write_csv(
        path,
        ["n", "omega_star", "k_star", "v_gr"],
        ((i + 1, p.omega_star, p.k_star, p.v_gr) for i, p in enumerate(peaks)),
    )


def read_peaks(path) -> list[GvPeak]:
    with open(path, newline="") as fh:
        return [GvPeak(float(r["omega_star"]), float(r["k_star"]), float(r["v_gr"])) for r in csv.DictReader(fh)]


def write_sheet(path, curve, kappa) -> Path:
    return write_csv(
        path,
        ["re_omega", "im_omega", "re_xi", "im_xi", "kappa"],
        ((r.omega.real, r.omega.imag, r.k.real, r.k.imag, kp) for r, kp in zip(curve, kappa)),
    )


def write_branch_points(path, points) -> Path:
    return write_csv(
        path,
        ["re_omega", "im_omega", "re_k", "im_k", "group"],
        ((b.omega_bp.real, b.omega_bp.imag, b.k_bp.real, b.k_bp.imag, b.group) for b in points),
    )


def write_leaky(path, roots) -> Path:
    return write_csv(path, ["omega", "re_xi", "im_xi"], ((r.omega.real, r.xi_l.real, r.xi_l.imag) for r in roots))


def trace_filename(L: float) -> str:
    return f"trace_L{L:g}.csv"


def write_trace(path, series) -> Path:
    return write_csv(path, ["t", "u"], zip(series.t, series.u))


def write_fas_table(path, measurements) -> Path:
    return write_csv(path, ["L", "tof", "amplitude"], ((m.L, m.tof, m.amplitude) for m in measurements))
