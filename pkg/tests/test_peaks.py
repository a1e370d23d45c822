import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from expframe import AmplitudeSpectrum, PeakParams, extract_peaks, running_median


def _spec(t, a, n=0):
    return AmplitudeSpectrum(n, t, a, np.arange(len(t)))


def _scores_bruteforce(t, a, w, eps):
    x = np.log(t)
    n = len(x)
    out = []
    for i in range(n):
        win = sorted(a[j] for j in range(n) if abs(x[j] - x[i]) <= w / 2)
        base = win[(len(win) - 1) // 2]
        p = max(0.0, a[i] - base)
        ring = [a[j] ** 2 for j in range(n) if j != i and w / 2 <= abs(x[j] - x[i]) <= w]
        e = np.sqrt(np.mean(ring)) if ring else 0.0
        s = p / (eps + e) if p > 0 else 0.0
        out.append(p * s)
    return np.array(out)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 10), min_size=1, max_size=30), st.floats(0.05, 3))
def test_running_median_bruteforce(vals, window):
    keys = np.linspace(0, 5, len(vals))
    got = running_median(vals, keys, window)
    for i, k in enumerate(keys):
        inside = sorted(v for v, kk in zip(vals, keys) if abs(kk - k) <= window / 2)
        assert got[i] == inside[(len(inside) - 1) // 2]


def test_running_median_errors():
    with pytest.raises(ValueError):
        running_median([1, 2], [1, 0], 1.0)
    with pytest.raises(ValueError):
        running_median([1, 2], [0], 1.0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(1e-3, 10), min_size=2, max_size=40), st.floats(0.05, 1.0))
def test_scores_match_bruteforce(amps, w):
    a = np.array(amps)
    t = np.exp(np.linspace(0, 5, a.size))
    report = extract_peaks(_spec(t, a), PeakParams(w=w))
    ref = _scores_bruteforce(t, a, w, 1e-12 * a.max())
    np.testing.assert_allclose(report.score, ref, rtol=1e-12, atol=0)
    # every candidate is a local maximum of the score within w
    x = np.log(t)
    for p in report.candidates:
        i = int(p.mode)
        assert all(ref[i] >= ref[j] for j in range(a.size) if abs(x[j] - x[i]) <= w)


def test_two_gaussian_bumps():
    x = np.linspace(0, 8, 161)
    a = 0.05 + np.exp(-((x - 2) / 0.08) ** 2) + 0.6 * np.exp(-((x - 6) / 0.08) ** 2)
    report = extract_peaks(_spec(np.exp(x), a), PeakParams(k_top=2))
    centres = sorted(np.log(p.time_constant) for p in report.reported)
    np.testing.assert_allclose(centres, [2.0, 6.0], atol=1e-9)
    assert report.reported[0].amplitude > report.reported[1].amplitude


def test_lone_point_has_zero_prominence():
    report = extract_peaks(_spec([1.0, 10.0, 100.0], [0.1, 5.0, 0.1]))
    assert np.all(report.prominence == 0) and report.candidates == []


def test_flat_spectrum_has_no_peaks():
    t = np.exp(np.linspace(0, 4, 30))
    report = extract_peaks(_spec(t, np.ones(30)))
    assert report.candidates == [] and report.reported == []


def test_isolated_spike_score():
    t = np.exp(np.linspace(0, 6, 50))
    a = np.full(50, 0.01)
    a[20] = 1.0
    report = extract_peaks(_spec(t, a))
    top = report.reported[0]
    assert top.mode == 20
    # prominence 0.99, annulus holds the two neighbours at the background level
    assert top.score == pytest.approx(0.99 ** 2 / (1e-12 + 0.01), rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(1e-3, 10), min_size=3, max_size=30), st.floats(1e-3, 1e3))
def test_scale_equivariance(amps, c):
    a = np.array(amps)
    t = np.exp(np.linspace(0, 4, a.size))
    r1 = extract_peaks(_spec(t, a))
    r2 = extract_peaks(_spec(t, c * a))
    np.testing.assert_allclose(r2.score, c * r1.score, rtol=1e-9, atol=1e-300)
    s1 = {p.mode for p in r1.candidates if p.score > 1e-6 * r1.score.max()}
    s2 = {p.mode for p in r2.candidates if p.score > 1e-6 * r2.score.max()}
    assert s1 == s2


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(1e-3, 10), min_size=3, max_size=40), st.integers(1, 8))
def test_top_k_is_best_candidates(amps, k):
    a = np.array(amps)
    t = np.exp(np.linspace(0, 6, a.size))
    report = extract_peaks(_spec(t, a), PeakParams(k_top=k))
    scores = [p.score for p in report.candidates]
    assert scores == sorted(scores, reverse=True)
    assert report.reported == report.candidates[:k]


@given(st.floats(0.0, 0.5), st.floats(0.0, 0.5))
def test_isolation_decreases_with_background(b1, b2):
    assume(abs(b1 - b2) > 1e-6)
    lo, hi = sorted([b1, b2])

    def iso(bg):
        x = np.linspace(0, 2, 21)
        a = np.full(21, bg)
        a[10] = 1.0
        return extract_peaks(_spec(np.exp(x), a)).isolation[10]

    assert iso(hi) < iso(lo)


def test_equal_time_constants_merged():
    t = np.array([1.0, 10.0, 10.0, 100.0])
    a = np.array([0.1, 0.5, 2.0, 0.1])
    # decade spacing: the window must span neighbours for any prominence
    report = extract_peaks(_spec(t, a), PeakParams(w=6.0))
    assert report.time_constants.size == 3
    assert report.reported[0].mode == 2


def test_theta_threshold():
    x = np.linspace(0, 8, 161)
    a = 0.05 + np.exp(-((x - 2) / 0.08) ** 2) + 0.3 * np.exp(-((x - 6) / 0.08) ** 2)
    spec = _spec(np.exp(x), a)
    base = extract_peaks(spec)
    theta = 0.5 * (base.candidates[0].score + base.candidates[1].score)
    loose = extract_peaks(spec, PeakParams(theta=theta))
    strict = extract_peaks(spec, PeakParams(theta=theta, theta_filters_reported=True))
    assert len(loose.all_peaks) == 1
    assert len(loose.reported) == len(base.reported)
    assert strict.reported == loose.all_peaks


def test_infinite_time_constants_ignored():
    t = np.array([np.inf, 2.0, 20.0, 200.0])
    a = np.array([100.0, 0.1, 1.0, 0.1])
    report = extract_peaks(_spec(t, a), PeakParams(w=6.0))
    assert all(np.isfinite(p.time_constant) for p in report.candidates)
    assert report.reported[0].mode == 2


def test_params_and_input_validation():
    for bad in (dict(w=0), dict(eps=-1), dict(theta=-1), dict(k_top=0)):
        with pytest.raises(ValueError):
            PeakParams(**bad)
    with pytest.raises(ValueError):
        extract_peaks(_spec([np.inf], [1.0]))
    with pytest.raises(ValueError):
        extract_peaks(_spec([-1.0, 2.0], [1.0, 1.0]))
