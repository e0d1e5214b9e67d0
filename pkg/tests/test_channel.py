"""Lossy noisy Gaussian channel and the dB/distance helpers."""

import numpy as np
import pytest

from brightcv.channel import (
    ChannelParams,
    apply_channel,
    attenuation_db,
    detected_mean_photon,
    distance_km,
    eta_from_db,
)
from brightcv.gaussian import TwoModeCM, log_negativity
from brightcv.protocols import epr_cm


def test_params_validation():
    with pytest.raises(ValueError):
        ChannelParams(eta=0.0)
    with pytest.raises(ValueError):
        ChannelParams(eta=1.1)
    with pytest.raises(ValueError):
        ChannelParams(eta=0.5, chi=-0.1)


def test_perfect_channel_is_identity():
    cm = epr_cm(2.0)
    out = apply_channel(cm, ChannelParams(eta=1.0, chi=0.0))
    assert np.array_equal(out.matrix, cm.matrix)


def test_full_loss_limit():
    cm = epr_cm(5.0)
    out = apply_channel(cm, ChannelParams(eta=1e-12, chi=0.0))
    assert np.allclose(out.b, np.eye(2), atol=1e-10)
    assert np.allclose(out.c, np.zeros((2, 2)), atol=1e-4)


def test_half_loss_on_epr():
    out = apply_channel(epr_cm(1.0), ChannelParams(eta=0.5, chi=0.0))
    assert np.allclose(out.b, 2.0 * np.eye(2), atol=1e-12)
    assert np.allclose(out.c, np.diag([2.0, -2.0]), atol=1e-12)
    assert log_negativity(out) > 0.0


def test_semigroup_composition():
    # Two channels compose to one with eta = eta1 eta2 and input-referred
    # excess noise chi = chi1 + chi2 / eta1.
    rng = np.random.default_rng(19)
    for _ in range(20):
        x = rng.standard_normal((4, 4))
        cm = TwoModeCM.from_matrix(np.eye(4) + x @ x.T)
        eta1, eta2 = rng.uniform(0.1, 1.0, 2)
        chi1, chi2 = rng.uniform(0.0, 0.5, 2)
        two_step = apply_channel(
            apply_channel(cm, ChannelParams(eta1, chi1)), ChannelParams(eta2, chi2)
        )
        one_step = apply_channel(cm, ChannelParams(eta1 * eta2, chi1 + chi2 / eta1))
        assert np.allclose(two_step.matrix, one_step.matrix, atol=1e-12)


def test_detected_mean_photon():
    assert detected_mean_photon(7.0, 1.0) == 7.0
    assert detected_mean_photon(0.0, 0.3) == 0.0
    assert detected_mean_photon(100.0, 0.25) == 25.0
    with pytest.raises(ValueError):
        detected_mean_photon(1.0, 0.0)


def test_db_conversions():
    assert attenuation_db(1.0) == 0.0
    assert attenuation_db(0.1) == pytest.approx(10.0, rel=1e-12)
    assert eta_from_db(attenuation_db(0.37)) == pytest.approx(0.37, rel=1e-12)
    assert distance_km(36.0) == pytest.approx(180.0, rel=1e-12)
