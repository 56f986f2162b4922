import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import curve_fit

from semcast.errors import InfeasibleRequirement
from semcast.rdp import (RECONSTRUCTION_CURVE as PHI_R, SYNTHESIS_CURVE as PHI_S, RdpCurve,
                         RequirementAlreadyMet, fit_curve, read_samples_csv)

curves = st.builds(RdpCurve, st.floats(0.01, 1.0), st.floats(0.1, 10.0), st.floats(0.0, 1.0))


def test_evaluate_examples():
    assert PHI_R.evaluate(0.0) == pytest.approx(0.207, abs=1e-15)
    assert PHI_R.evaluate(0.65804) == pytest.approx(0.02850, abs=1e-4)
    assert PHI_S.evaluate(0.45118) == pytest.approx(0.58705, abs=1e-4)


def test_negative_rate_rejected():
    with pytest.raises(ValueError):
        PHI_R.evaluate(-0.1)


def test_invert_examples():
    assert PHI_R.invert(0.02850) == pytest.approx(0.65804, abs=1e-4)
    assert PHI_S.invert(0.58705) == pytest.approx(0.45118, abs=1e-4)
    with pytest.raises(InfeasibleRequirement):
        PHI_S.invert(0.566)
    with pytest.raises(InfeasibleRequirement):
        PHI_S.invert(0.5)


def test_requirement_already_met_flagged():
    with pytest.warns(RequirementAlreadyMet):
        assert PHI_R.invert(0.3) == 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert PHI_R.invert_flagged(0.21) == (0.0, True)
    assert PHI_R.invert_flagged(0.05)[1] is False


@given(curves, st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_strictly_decreasing(curve, r1, r2):
    if r1 == r2:
        return
    lo, hi = min(r1, r2), max(r1, r2)
    gap = curve.a * math.exp(-curve.b * lo) * -math.expm1(-curve.b * (hi - lo))
    if gap < 4 * np.finfo(float).eps * curve.evaluate(lo):
        return  # difference below double resolution
    assert curve.evaluate(lo) > curve.evaluate(hi)


@given(curves, st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_convex_midpoint(curve, r1, r2):
    mid = curve.evaluate(0.5 * (r1 + r2))
    avg = 0.5 * (curve.evaluate(r1) + curve.evaluate(r2))
    assert mid <= avg * (1 + 1e-15)


@given(st.floats(0.0, 5.0))
def test_round_trip_reconstruction_curve(r):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RequirementAlreadyMet)
        assert PHI_R.invert(PHI_R.evaluate(r)) == pytest.approx(r, rel=1e-10, abs=1e-12)


@given(st.floats(0.0, 5.0))
def test_round_trip_synthesis_curve(r):
    # Past r ~ 2.5 the decaying term of the synthesis curve sinks below the
    # resolution of its 0.566 floor, so the error bound follows conditioning.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RequirementAlreadyMet)
        back = PHI_S.invert(PHI_S.evaluate(r))
    cond = 4 * np.finfo(float).eps * PHI_S.evaluate(r) / abs(PHI_S.derivative(r))
    assert abs(back - r) <= max(1e-10 * r, 1e-12, cond)
    if r <= 2.0:
        assert back == pytest.approx(r, rel=1e-10, abs=1e-12)


@given(curves, st.floats(0.01, 0.99))
def test_invert_then_evaluate(curve, frac):
    target = curve.c + frac * curve.a
    assert curve.evaluate(curve.invert(target)) == pytest.approx(target, rel=1e-12)


def test_derivative_matches_difference():
    r, h = 0.7, 1e-6
    fd = (PHI_R.evaluate(r + h) - PHI_R.evaluate(r - h)) / (2 * h)
    assert PHI_R.derivative(r) == pytest.approx(fd, rel=1e-8)


def test_invalid_parameters():
    for a, b, c in ((0, 1, 0), (1, 0, 0), (1, 1, -0.1)):
        with pytest.raises(ValueError):
            RdpCurve(a, b, c)


def test_fit_recovers_noiseless_parameters():
    r = np.linspace(0.1, 1.5, 10)
    res = fit_curve(np.column_stack([r, PHI_R.evaluate(r)]))
    for got, want in zip(res.curve.as_tuple(), PHI_R.as_tuple()):
        assert got == pytest.approx(want, rel=1e-6)
    assert res.rms < 1e-9


def test_fit_with_noise_matches_independent_least_squares():
    rng = np.random.default_rng(11)
    r = np.linspace(0.1, 1.5, 10)
    m = PHI_R.evaluate(r) + rng.normal(0, 1e-3, r.size)
    res = fit_curve(np.column_stack([r, m]))
    for got, want in zip(res.curve.as_tuple()[:2], PHI_R.as_tuple()[:2]):
        assert got == pytest.approx(want, rel=0.05)
    ref, _ = curve_fit(lambda x, a, b, c: a * np.exp(-b * x) + c, r, m, p0=(0.2, 3.0, 0.01), maxfev=10000)
    if ref[2] >= 0:
        assert np.allclose(res.curve.as_tuple(), ref, rtol=1e-4)
    sse = lambda p: float(((p[0] * np.exp(-p[1] * r) + p[2] - m) ** 2).sum())  # noqa: E731
    assert sse(res.curve.as_tuple()) <= sse(ref) * (1 + 1e-6)


def test_fit_needs_four_samples():
    with pytest.raises(ValueError):
        fit_curve([(0.1, 0.2), (0.2, 0.1), (0.3, 0.05)])


def test_fit_rejects_duplicate_rates():
    with pytest.raises(ValueError):
        fit_curve([(0.1, 0.2), (0.1, 0.1), (0.3, 0.05), (0.4, 0.04)])


def test_read_samples_csv(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("rate_bpp,metric\n0.1,0.2\n0.2,0.15\n\n0.3,0.1\n")
    data = read_samples_csv(p)
    assert data.shape == (3, 2) and data[2, 1] == 0.1
