import math

import numpy as np
import pytest

from fasguide import pseudobranch as pb
from fasguide.dispersion import GvPeak

from .oracles import PEAK_TABLE

TABLE_PEAKS = [GvPeak(w, k, v) for w, k, v in PEAK_TABLE]


def tangent_peaks(v=4.0, c=-3.0, beta=1.0, gamma=0.3, a=0.3, n_range=range(8, 13), analytic=True):
    """Sample every branch of a*tan(beta w + gamma) + w/v + c around its zero."""
    peaks = []
    for n in n_range:
        w0 = (n * math.pi - gamma) / beta
        w = np.linspace(w0 - 0.6, w0 + 0.6, 241)
        k = a * np.tan(beta * w + gamma) + w / v + c
        slope = a * beta / np.cos(beta * w + gamma) ** 2 + 1 / v if analytic else None
        peaks += pb.peaks_from_curve(w, k, slope)
    return peaks


def test_linear_fit_table():
    fit = pb.fit_linear(TABLE_PEAKS)
    assert fit.v == pytest.approx(3.855, abs=2e-3)
    v, c = fit
    assert (v, c) == (fit.v, fit.c)
    assert [p[2] for p in fit.pairs] == pytest.approx([3.52, 3.81, 4.05, 4.00], abs=0.01)


def test_beta_table():
    beta = pb.estimate_beta(TABLE_PEAKS)
    assert beta.mean == pytest.approx(0.9897, abs=1e-3)
    assert all(g[2] == pytest.approx(math.pi / (g[1] - g[0])) for g in beta.gaps)


def test_a_table():
    anchors = pb.estimate_a(TABLE_PEAKS)
    assert [x.a for x in anchors] == pytest.approx([0.516, 0.342, 0.258, 0.196, 0.146], abs=3e-3)
    assert not any(x.flagged for x in anchors)
    # a decreases with omega: later arrivals decay less
    assert np.all(np.diff([x.a for x in anchors]) < 0)


def test_negative_a_flagged():
    anchors = pb.estimate_a(TABLE_PEAKS, v=1.0)
    assert all(x.flagged and x.a < 0 for x in anchors)


def test_estimate_at_28_table():
    est = pb.estimate_fas_pseudo(TABLE_PEAKS, 28.0)
    assert est.method == "pseudo_branch"
    assert est.v_fas == pytest.approx(3.81, abs=0.01)
    assert est.kappa == pytest.approx(0.322, abs=3e-3)
    assert est.details["extrapolated"] is False
    assert pb.estimate_fas_pseudo(TABLE_PEAKS, 40.0).details["extrapolated"] is True


def test_estimate_from_computed_peaks(demo_peaks):
    est = pb.estimate_fas_pseudo(demo_peaks, 28.0)
    assert 3.5 <= est.v_fas <= 4.6
    assert 0.1 <= est.kappa <= 0.6


def test_synthetic_round_trip():
    peaks = tangent_peaks()
    assert len(peaks) == 5
    m = pb.build_model(peaks)
    assert m.v == pytest.approx(4.0, rel=1e-9)
    assert m.c == pytest.approx(-3.0, rel=1e-9)
    assert m.beta == pytest.approx(1.0, rel=1e-9)
    assert m.gamma == pytest.approx(0.3, abs=1e-9)
    assert [x.a for x in m.anchors] == pytest.approx([0.3] * 5, rel=1e-9)
    # numerically differentiated curves still land close
    coarse = pb.build_model(tangent_peaks(analytic=False))
    assert [x.a for x in coarse.anchors] == pytest.approx([0.3] * 5, rel=1e-4)


def test_model_matches_slope_at_anchors(demo_peaks):
    m = pb.build_model(demo_peaks)
    for p in demo_peaks:
        assert float(m.slope(p.omega_star)) == pytest.approx(1 / p.v_gr, rel=1e-9)
    # continued upward the tangent tends to i, so Im xi approaches a + Im(omega) / v
    w = 28.0 + 8j
    assert m.xi(w).imag - 8 / m.v == pytest.approx(float(m.a(28.0)), rel=1e-5)
    d = m.to_dict()
    assert set(d) == {"v", "c", "beta", "gamma", "anchors"}
    assert len(d["anchors"]) == len(demo_peaks)


def test_argument_checks():
    with pytest.raises(ValueError):
        pb.fit_linear(TABLE_PEAKS[:1])
    with pytest.raises(ValueError):
        pb.TangentModel(4.0, 0.0, -1.0, 0.0)
    with pytest.raises(ValueError):
        pb.TangentModel(0.0, 0.0, 1.0, 0.0)
