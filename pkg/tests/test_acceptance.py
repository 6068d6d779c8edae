"""Acceptance criteria, one PASS/FAIL line each at the required tolerances.

Run with ``pytest tests/test_acceptance.py -v``; the verdict lines are
printed even when output capture is on.
"""

import math
import time

import numpy as np
import pytest

from fasguide import cli, continuation, dispersion, leaky, pseudobranch, synthesis
from fasguide.core import alpha, dispersion_function, kernels_from_alpha
from fasguide.io import read_peaks

from .oracles import FAS_TABLE, PEAK_TABLE, duct_wavenumbers
from .test_continuation import _polished_bp, _two_local_roots
from .test_pseudobranch import tangent_peaks

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, detail

    return emit


@pytest.fixture(scope="module")
def cli_peaks(tmp_path_factory):
    out = tmp_path_factory.mktemp("gv")
    dispersion.max_group_velocity.cache_clear()
    t0 = time.perf_counter()
    code = cli.main(["gv-peaks", "--omega-min", "22", "--omega-max", "39", "--output-dir", str(out)])
    elapsed = time.perf_counter() - t0
    assert code == 0
    return read_peaks(out / "peaks.csv"), elapsed


def test_c1a_peak_count_frequency_velocity(cli_peaks, report):
    peaks, elapsed = cli_peaks
    ok = len(peaks) == 5
    dw = dv = float("nan")
    if ok:
        dw = max(abs(p.omega_star - w) for p, (w, _, _) in zip(peaks, PEAK_TABLE))
        dv = max(abs(p.v_gr / v - 1) for p, (_, _, v) in zip(peaks, PEAK_TABLE))
        ok = dw <= 0.05 and dv <= 0.02 and elapsed <= 60
    report(
        "1a reference peaks (count, omega* +-0.05, v_gr +-2%, <= 1 min)",
        ok,
        f"{len(peaks)} peaks, max |d omega*|={dw:.4f}, max rel d v_gr={dv:.4f}, {elapsed:.1f} s",
    )


def test_c1b_peak_wavenumber(cli_peaks, report):
    peaks, _ = cli_peaks
    errs = [abs(p.k_star - k) for p, (_, k, _) in zip(peaks, PEAK_TABLE)]
    report(
        "1b reference peaks k(omega*) within +-0.02",
        len(peaks) == 5 and max(errs) <= 0.02,
        "|d k*| = " + ", ".join(f"{e:.3f}" for e in errs),
    )


def test_c2_fas_table(cfg, report):
    synthesis.modal_nodes.cache_clear()
    dispersion.max_group_velocity.cache_clear()
    t0 = time.perf_counter()
    res = synthesis.simulate(cfg, synthesis.ProbePulse(), [10.0, 20.0, 30.0])
    elapsed = time.perf_counter() - t0
    tof_err = [abs(m.tof / tof - 1) for m, (_, tof, _) in zip(res.measurements, FAS_TABLE)]
    amps = [m.amplitude for m in res.measurements]
    ok = max(tof_err) <= 0.15 and all(a > b for a, b in zip(amps, amps[1:])) and 0.10 <= res.fit.kappa <= 0.30 and elapsed <= 600
    report(
        "2 reference FAS table (ToF +-15%, decreasing amplitude, kappa in [0.10, 0.30], <= 10 min)",
        ok,
        "ToF " + ", ".join(f"{m.tof:.3f}" for m in res.measurements)
        + ", amp " + ", ".join(f"{a:.3g}" for a in amps)
        + f", kappa={res.fit.kappa:.3f}, {elapsed:.1f} s",
    )


def test_c3_three_methods(cfg, demo_peaks, sheet_curve, report):
    ests = [
        continuation.estimate_fas_mr(sheet_curve, 28.0),
        leaky.estimate_fas_leaky(28.0, cfg),
        pseudobranch.estimate_fas_pseudo(demo_peaks, 28.0),
    ]
    vs = [e.v_fas for e in ests]
    ks = [e.kappa for e in ests]
    ratio = max(ks) / min(ks) if min(ks) > 0 else math.inf
    ok = all(3.5 <= v <= 4.6 for v in vs) and all(0.08 <= k <= 0.65 for k in ks) and ratio <= 2
    report(
        "3 three-method consistency at omega0=28",
        ok,
        ", ".join(f"{e.method}: v={e.v_fas:.3f} kappa={e.kappa:.3f}" for e in ests) + f", max kappa ratio={ratio:.2f}",
    )


def test_c4_leaky_overlay(cfg, demo_peaks, report):
    anchors = pseudobranch.estimate_a(demo_peaks)
    ratios = []
    for p in demo_peaks:
        if 24 <= p.omega_star <= 37:
            im = abs(leaky.solve_leaky(p.omega_star, cfg).xi_l.imag)
            ratios.append(im / float(pseudobranch.interpolate_a(anchors, p.omega_star)))
    curve = continuation.sheet0prime(np.arange(24.0, 37.0 + 1e-9, 0.05), 1.0, cfg, peaks=demo_peaks)
    re_err = max(abs(leaky.solve_leaky(r.omega, cfg).xi_l.real / r.k.real - 1) for r in curve)
    ok = ratios and all(0.5 <= r <= 2 for r in ratios) and re_err <= 0.05
    report(
        "4 leaky vs tangent a (factor 2) and vs sheet 0' Re xi at Im omega=1 (5%)",
        bool(ok),
        "Im xi_L / a = " + ", ".join(f"{r:.3f}" for r in ratios) + f"; max rel |d Re xi| = {re_err:.4f}",
    )


def test_c5_direct_inversion(cfg, report):
    p = synthesis.ProbePulse()
    t0, t1 = synthesis.fas_window(10.0, cfg, p.band)
    t = np.arange(t0, t1, 0.01)
    modal = synthesis.modal_sum_field(10.0, t, p, cfg).u
    direct = synthesis.direct_inversion_field(10.0, t, p, cfg).u
    rms = np.sqrt(np.mean((modal - direct) ** 2)) / np.sqrt(np.mean(modal**2))
    report("5 modal sum vs direct inversion at L=10 (2% RMS over the FAS window)", rms <= 0.02, f"relative RMS {rms:.4%} on [{t0:.2f}, {t1:.2f}]")


def test_c6_property_suites(cfg, sym_cfg, demo_branches, report):
    fails = []
    rng = np.random.default_rng(0)

    # kernel evenness and conjugate symmetry
    worst_even = worst_conj = 0.0
    for _ in range(200):
        k = complex(*rng.uniform(-30, 30, 2))
        w = complex(*rng.uniform(-30, 30, 2))
        a1, a2 = complex(alpha(1, k, w, cfg)), complex(alpha(2, k, w, cfg))
        m, n = kernels_from_alpha(a1, a2, cfg)
        scale = max(1.0, abs(m), abs(n))
        for s1, s2 in ((1, -1), (-1, 1), (-1, -1)):
            m2, n2 = kernels_from_alpha(s1 * a1, s2 * a2, cfg)
            worst_even = max(worst_even, abs(m2 - m) / scale, abs(n2 - n) / scale)
        nc = complex(dispersion_function(k.conjugate(), w.conjugate(), cfg))
        worst_conj = max(worst_conj, abs(nc - n.conjugate()) / scale)
    if worst_even > 1e-9 or worst_conj > 1e-9:
        fails.append(f"symmetry {worst_even:.1e}/{worst_conj:.1e}")

    # symmetric configuration against the closed form
    worst_sym = 0.0
    for w in np.arange(1.0, 20.0, 0.37):
        ks = [r.k for r in dispersion.find_real_roots(w, sym_cfg)]
        ref = duct_wavenumbers(w, 1.4)
        if len(ks) != len(ref):
            worst_sym = math.inf
            break
        worst_sym = max(worst_sym, max(abs(a - b) for a, b in zip(ks, ref)))
    if worst_sym > 1e-8:
        fails.append(f"closed form {worst_sym:.1e}")

    # analytic vs finite-difference group velocity
    worst_vg = 0.0
    for br in demo_branches[::3]:
        p = br.points[len(br.points) // 2]
        h = 1e-4
        sp = dispersion.polish_root(p.k**2, p.omega + h, cfg)
        sm = dispersion.polish_root(p.k**2, p.omega - h, cfg)
        fd = 2 * h / (math.sqrt(sp) - math.sqrt(sm))
        worst_vg = max(worst_vg, abs(dispersion.group_velocity(p, cfg) / fd - 1))
    if worst_vg > 1e-3:
        fails.append(f"group velocity {worst_vg:.1e}")

    # double loop around a branch point
    bps = continuation.find_branch_points((28.0, 29.5, 0.0, 1.0), cfg)
    bp = _polished_bp(bps)
    start = bp.omega_bp + 0.05
    r1, r2 = _two_local_roots(cfg, bp.omega_bp, bp.k_bp, start)
    loop = [bp.omega_bp + 0.05 * np.exp(1j * t) for t in np.linspace(0, 2 * np.pi, 65)[1:]]
    once = continuation.continue_root(continuation.ComplexRoot(start, r1), loop, cfg, max_step=0.01)[-1].k
    twice = continuation.continue_root(continuation.ComplexRoot(start, r1), loop + loop, cfg, max_step=0.01)[-1].k
    mono = max(abs(once - r2), abs(twice - r1))
    if mono > 1e-6:
        fails.append(f"monodromy {mono:.1e}")

    # tangent-model round trip
    m = pseudobranch.build_model(tangent_peaks(analytic=False))
    got = [m.v, m.c, m.beta, m.gamma] + [x.a for x in m.anchors]
    want = [4.0, -3.0, 1.0, 0.3] + [0.3] * len(m.anchors)
    rt = max(abs(g / w - 1) for g, w in zip(got, want))
    if rt > 1e-3:
        fails.append(f"round trip {rt:.1e}")

    # linearity and time shift of the synthesis
    t = np.arange(0.0, 7.0, 0.01)
    base = synthesis.modal_sum_field(10.0, t, synthesis.ProbePulse(), cfg).u
    double = synthesis.modal_sum_field(10.0, t, synthesis.ProbePulse(amplitude=2.0), cfg).u
    shifted = synthesis.modal_sum_field(10.0, t + 0.5, synthesis.ProbePulse(delay=0.5), cfg).u
    peak = np.max(np.abs(base))
    lin = np.max(np.abs(double - 2 * base)) / peak
    shift = np.max(np.abs(shifted - base)) / peak
    if lin > 1e-12 or shift > 1e-12:
        fails.append(f"linearity/shift {lin:.1e}/{shift:.1e}")

    report(
        "6 property suites",
        not fails,
        f"symmetry {max(worst_even, worst_conj):.1e}, closed form {worst_sym:.1e}, v_g {worst_vg:.1e}, "
        f"monodromy {mono:.1e}, round trip {rt:.1e}, linearity {lin:.1e}, shift {shift:.1e}"
        + ("; failed: " + "; ".join(fails) if fails else ""),
    )
