"""Analytic detector model: configs, noise formulas, squeezing threshold."""

import math

import pytest

from brightcv.detector import (
    DetectorConfig,
    ModeStatistics,
    balanced_variance,
    epsilon_tot,
    g_coefficient,
    squeezing_vanish_threshold,
    unbalanced_variance,
)

# Frozen reference: t_a=0.51, t_b=0.49, n_bar=100, Var(n)=10100, eps_tot=0.1
UNBALANCED_EXTRA = 1.1616646658663465


def test_config_validation():
    with pytest.raises(ValueError):
        DetectorConfig(m=0, n=1, epsilon=0.5, alpha=1.0)
    with pytest.raises(ValueError):
        DetectorConfig(m=1, n=-1, epsilon=0.5, alpha=1.0)
    with pytest.raises(ValueError):
        DetectorConfig(m=1, n=1, epsilon=1.5, alpha=1.0)
    with pytest.raises(ValueError):
        DetectorConfig(m=1, n=1, epsilon=0.5, alpha=0.0)
    with pytest.raises(ValueError):
        DetectorConfig(m=1, n=1, epsilon=0.5, alpha=1.0, t_a=1.0)


def test_eps_tot_examples():
    det = DetectorConfig(m=100, n=0, epsilon=0.5, alpha=10.0)
    assert epsilon_tot(det) == 0.0

    det = DetectorConfig(m=100, n=100, epsilon=0.1, alpha=10.0)
    assert det.eps_tot == pytest.approx(1e-2, rel=1e-12)

    doubled = DetectorConfig(m=100, n=100, epsilon=0.1, alpha=20.0)
    assert doubled.eps_tot == pytest.approx(det.eps_tot / 2.0, rel=1e-12)


def test_from_eps_tot_round_trip():
    det = DetectorConfig.from_eps_tot(0.05, m=500, n=500)
    assert det.eps_tot == pytest.approx(0.05, rel=1e-12)
    # large targets shrink alpha instead of overflowing epsilon
    det = DetectorConfig.from_eps_tot(2.0, m=1, n=1)
    assert det.epsilon <= 1.0
    assert det.eps_tot == pytest.approx(2.0, rel=1e-12)
    with pytest.raises(ValueError):
        DetectorConfig.from_eps_tot(2.0, m=1, n=1, alpha=10.0)


def test_g_coefficient():
    assert g_coefficient(0.5) == 1.0
    assert g_coefficient(2.0 / 3.0) == pytest.approx(2.0, rel=1e-12)
    for t in (0.1, 0.3, 0.5, 0.7, 0.9):
        assert g_coefficient(t) * g_coefficient(1.0 - t) == pytest.approx(1.0, rel=1e-12)


def test_balanced_variance_examples():
    assert balanced_variance(ModeStatistics.thermal(1.0, 0.0), 0.3) == 1.0
    # squeezing exactly erased at the threshold brightness
    assert balanced_variance(ModeStatistics.thermal(0.1, 9000.0), 1e-2) == pytest.approx(1.0, abs=1e-12)
    det = DetectorConfig(m=2, n=3, epsilon=1.0, alpha=5.0)
    assert det.eps_tot**2 == pytest.approx(0.06, rel=1e-12)
    assert balanced_variance(ModeStatistics.thermal(9.0, 4.0), det.eps_tot) == pytest.approx(9.24, rel=1e-12)


def test_unbalanced_variance_reduces_to_balanced():
    stats = ModeStatistics.thermal(1.7, 42.0)
    for t in (0.2, 0.5, 0.8):
        det = DetectorConfig(m=1, n=1, epsilon=0.5, alpha=5.0, t_a=t, t_b=t)
        assert unbalanced_variance(stats, det) == pytest.approx(
            balanced_variance(stats, det.eps_tot), rel=1e-12
        )


def test_unbalanced_variance_example():
    det = DetectorConfig(m=1, n=1, epsilon=0.5, alpha=5.0, t_a=0.51, t_b=0.49)
    assert det.eps_tot == pytest.approx(0.1, rel=1e-12)
    stats = ModeStatistics.thermal(201.0, 100.0)
    assert stats.var_n == 10100.0
    assert unbalanced_variance(stats, det) == pytest.approx(201.0 + UNBALANCED_EXTRA, rel=1e-12)


def test_photon_statistics_constructors():
    assert ModeStatistics.thermal(1.0, 3.0).var_n == 12.0
    assert ModeStatistics.coherent(1.0, 3.0).var_n == 3.0
    with pytest.raises(ValueError):
        ModeStatistics(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        ModeStatistics(1.0, -1.0, 1.0)


def test_squeezing_vanish_threshold():
    assert squeezing_vanish_threshold(0.1, 1e-2) == pytest.approx(9000.0, rel=1e-12)
    # V_S -> 1 means no squeezing to erase
    assert squeezing_vanish_threshold(1.0 - 1e-9, 0.1) < 1e-6
    for v_s in (0.1, 0.5, 0.9):
        for eps_tot in (1e-2, 0.1):
            n_thr = squeezing_vanish_threshold(v_s, eps_tot)
            var = balanced_variance(ModeStatistics.thermal(v_s, n_thr), eps_tot)
            assert var == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        squeezing_vanish_threshold(1.1, 0.1)
    with pytest.raises(ValueError):
        squeezing_vanish_threshold(0.5, 0.0)
