"""Gaussian lossy, noisy channel acting on covariance matrices.

Quadratures transform as x' = sqrt(eta) (x + x_N) + sqrt(1 - eta) x_0 with
Var(x_N) = chi (excess noise, referred to the channel input) and x_0 a
vacuum quadrature.  Bob therefore sees eta * chi of excess noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian import TwoModeCM

#: Telecom-fiber attenuation used for the derived distance column.
FIBER_LOSS_DB_PER_KM = 0.2


@dataclass(frozen=True)
class ChannelParams:
    """Transmittance eta in (0, 1] and input-referred excess noise chi >= 0 (SNU)."""

    eta: float
    chi: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if self.chi < 0.0:
            raise ValueError(f"chi must be non-negative, got {self.chi}")


def apply_channel(cm: TwoModeCM, params: ChannelParams) -> TwoModeCM:
    """Send Bob's mode through the channel: B -> eta (B + chi I) + (1 - eta) I,
    C -> sqrt(eta) C; Alice's block is untouched."""
    eta, chi = params.eta, params.chi
    eye = np.eye(2)
    b = eta * (cm.b + chi * eye) + (1.0 - eta) * eye
    c = math.sqrt(eta) * cm.c
    return TwoModeCM(cm.a, b, c)


def detected_mean_photon(n_bar: float, eta: float) -> float:
    """Mean photon number per signal mode arriving at Bob's detector."""
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    return eta * n_bar


def attenuation_db(eta: float) -> float:
    """Channel attenuation in dB, -10 log10(eta)."""
    if eta <= 0.0:
        raise ValueError(f"eta must be positive, got {eta}")
    return -10.0 * math.log10(eta)


def eta_from_db(db: float) -> float:
    """Inverse of attenuation_db."""
    return 10.0 ** (-db / 10.0)


def distance_km(db: float, loss_db_per_km: float = FIBER_LOSS_DB_PER_KM) -> float:
    """Equivalent fiber length for a given attenuation (derived quantity only)."""
    return db / loss_db_per_km
