import math

import numpy as np
import pytest

from fasguide import dispersion as d
from fasguide.core import dispersion_function, n_and_partials
from fasguide.errors import CutoffSingularityError, ResolutionError

from .oracles import PEAK_TABLE, duct_group_velocity, duct_wavenumbers


def test_symmetric_roots_closed_form(sym_cfg):
    roots = d.find_real_roots(10.0, sym_cfg)
    expected = duct_wavenumbers(10.0, 1.4)
    assert [r.k for r in roots] == pytest.approx(expected, abs=1e-8)
    assert all(not r.evanescent for r in roots)


def test_roots_sorted_and_valid(cfg):
    roots = d.find_real_roots(31.3, cfg)
    ks = [r.k for r in roots]
    assert ks == sorted(ks)
    assert np.all(np.diff(ks) > 1e-6)
    for r in roots:
        assert r.residual < d.DEFAULT_TOL
        # sign change across the root
        lo = complex(dispersion_function(r.k - 1e-7, r.omega, cfg)).real
        hi = complex(dispersion_function(r.k + 1e-7, r.omega, cfg)).real
        assert lo * hi < 0


@pytest.mark.parametrize("omega,k_ref", [(24.16, 3.0), (36.86, 6.31)])
def test_root_near_peak_table(cfg, omega, k_ref):
    ks = np.array([r.k for r in d.find_real_roots(omega, cfg)])
    assert np.min(np.abs(ks - k_ref)) < 0.06


def test_k_max_limits_search(cfg):
    roots = d.find_real_roots(24.16, cfg, k_max=10.0)
    assert roots and max(r.k for r in roots) <= 10.0
    assert len(roots) < len(d.find_real_roots(24.16, cfg))


def test_bad_arguments(cfg):
    with pytest.raises(ValueError):
        d.find_real_roots(-1.0, cfg)
    with pytest.raises(ValueError):
        d.find_real_roots(1.0, cfg, k_max=0.0)


def test_resolution_error_on_coarse_grid(cfg):
    with pytest.raises(ResolutionError):
        d.find_real_roots(45.0, cfg, refine=0.5)


def test_evanescent_roots_symmetric(sym_cfg):
    # duct modes above cutoff at omega: k = i sqrt((n pi / H)**2 - omega**2)
    w = 3.0
    roots = d.find_real_roots(w, sym_cfg, evanescent=True, q_max=8.0)
    ev = sorted(r.k for r in roots if r.evanescent)
    q = [math.sqrt((n * math.pi / 1.4) ** 2 - w**2) for n in range(1, 6) if n * math.pi / 1.4 > w]
    expected = [x for x in q if x < 8]
    assert ev == pytest.approx(expected, abs=1e-8)
    assert all(r.wavenumber.real == 0 for r in roots if r.evanescent)


def test_root_count_monotone_symmetric(sym_cfg):
    counts = [len(d.find_real_roots(w, sym_cfg)) for w in np.arange(0.5, 20, 0.25)]
    assert all(b >= a for a, b in zip(counts, counts[1:]))


def test_group_velocity_symmetric(sym_cfg):
    for r in d.find_real_roots(10.0, sym_cfg):
        assert d.group_velocity(r, sym_cfg) == pytest.approx(duct_group_velocity(r.k, 10.0), rel=1e-9)


@pytest.mark.parametrize("row", PEAK_TABLE[::4])
def test_group_velocity_at_table_points(cfg, row):
    omega, k, vg = row
    roots = d.find_real_roots(omega, cfg)
    r = min(roots, key=lambda r: abs(r.k - k))
    assert d.group_velocity(r, cfg) == pytest.approx(vg, rel=0.02)


def test_group_velocity_cutoff_error(sym_cfg):
    w = math.pi / 1.4
    with pytest.raises(CutoffSingularityError):
        d.group_velocity(d.DispersionRoot(w, 0.0), sym_cfg)
    with pytest.raises(ValueError):
        d.group_velocity(d.DispersionRoot(w, 1.0, evanescent=True), sym_cfg)


def test_group_velocity_matches_branch_difference(cfg, demo_branches):
    br = max(demo_branches, key=lambda b: len(b.points))
    i = len(br.points) // 2
    p = br.points[i]
    h = 1e-4
    s = p.k**2
    sp = d.polish_root(s, p.omega + h, cfg)
    sm = d.polish_root(s, p.omega - h, cfg)
    fd = 2 * h / (math.sqrt(sp) - math.sqrt(sm))
    assert d.group_velocity(p, cfg) == pytest.approx(fd, rel=1e-3)


def test_trace_symmetric_closed_form(sym_cfg):
    grid = np.arange(1.0, 12.0, 0.1)
    branches = d.trace_branches(grid, sym_cfg)
    for br in branches:
        # each branch is one duct mode n: k**2 + (n pi / H)**2 = omega**2
        n_pi_h = np.sqrt(br.omegas**2 - br.ks**2)
        n = np.round(n_pi_h[-1] * 1.4 / math.pi)
        assert np.allclose(br.ks, np.sqrt(br.omegas**2 - (n * math.pi / 1.4) ** 2), atol=1e-8)


def test_trace_empty_and_invariants(cfg, demo_branches):
    assert d.trace_branches([], cfg) == []
    for br in demo_branches:
        assert np.all(np.diff(br.omegas) > 0)
        # no jumps: |dk| bounded by the local slope dk/domega times the step
        dk = np.abs(np.diff(br.ks))
        dw = np.diff(br.omegas)
        with np.errstate(divide="ignore"):
            slope = 1 / np.abs(br.group_velocities(cfg))
        bound = 2 * np.maximum(slope[:-1], slope[1:]) * dw
        assert np.all(dk <= bound)
    # new branches open at cutoffs inside the window
    opened = [b for b in demo_branches if b.cutoff_omega is not None]
    assert opened and all(21 < b.cutoff_omega < 40 for b in opened)


def test_trace_requires_ascending(cfg):
    with pytest.raises(ValueError):
        d.trace_branches([3.0, 2.0], cfg)


def test_demo_peaks(demo_peaks):
    assert len(demo_peaks) == 5
    for p, (w, _, vg) in zip(demo_peaks, PEAK_TABLE):
        assert p.omega_star == pytest.approx(w, abs=0.05)
        assert p.v_gr == pytest.approx(vg, rel=0.02)
        assert p.slope == pytest.approx(1 / p.v_gr)
    gaps = np.diff([p.omega_star for p in demo_peaks])
    assert np.all((gaps >= 3.0) & (gaps <= 3.3))


def test_peaks_are_local_maxima(cfg, demo_peaks):
    for p in demo_peaks:
        for dw in (-0.05, 0.05):
            s = d.polish_root(p.k_star**2 + dw * 2 * p.k_star / p.v_gr, p.omega_star + dw, cfg)
            assert d.group_velocity_array(math.sqrt(s), p.omega_star + dw, cfg) < p.v_gr


def test_symmetric_has_no_peaks(sym_cfg):
    branches = d.trace_branches(np.arange(1.0, 15.0, 0.05), sym_cfg)
    assert d.find_gv_peaks(branches, (2.0, 14.0), sym_cfg) == []


def test_refine_brackets_vectorised():
    f = np.cos
    a = np.array([1.0, 4.0, 7.0])
    b = np.array([2.0, 5.0, 8.0])
    x = d.refine_brackets(f, a, b, f(a), f(b))
    assert x == pytest.approx([math.pi / 2, 3 * math.pi / 2, 5 * math.pi / 2], abs=1e-13)


def test_parabolic_vertex():
    x = np.array([0.0, 1.0, 2.0])
    assert d.parabolic_vertex(x, -(x - 1.3) ** 2 + 2)[0] == pytest.approx(1.3)


def test_max_group_velocity(cfg):
    v = d.max_group_velocity(cfg, (20.0, 40.0))
    # guided waves stay well below the fast bulk speed in this band
    assert 2.5 < v < 3.0
    _, dn_ds, dn_dw = n_and_partials(1.0, 20.0, cfg)
    assert np.isfinite(dn_ds) and np.isfinite(dn_dw)
