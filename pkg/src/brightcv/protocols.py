"""Effective shared states of the bright-beam communication schemes.

Assembles the two-mode covariance matrix shared by Alice and Bob for the
prepare-and-measure (P&M) and entanglement-based schemes, including the
detector noise caused by the macroscopic brightness of the beams, and
evaluates entanglement curves and break thresholds.

The P&M protocol (squeezed states of variance V_S, Gaussian modulation up
to 1/V_S) is treated through its EPR equivalent with ideal detection on
Alice's side; the P&M source parameters are derived views of the same
state, never a second code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np
from scipy.optimize import brentq

from .channel import ChannelParams, apply_channel
from .detector import DetectorConfig
from .gaussian import (
    PhysicalityError,
    TwoModeCM,
    log_negativity,
    partial_transpose,
    symplectic_eigenvalues,
)


class SchemeKind(Enum):
    PREPARE_AND_MEASURE = "pm"
    EPR_BASED = "epr"


@dataclass(frozen=True)
class SourceParams:
    """Bright multimode twin-beam source.

    n_bar             mean photon number per mode
    m, n              matched / unmatched mode counts
    n_bar_unmatched   brightness override for the unmatched modes; defaults
                      to n_bar (same per-mode energy in the whole beam)
    """

    n_bar: float
    m: int = 1
    n: int = 0
    n_bar_unmatched: float | None = None

    def __post_init__(self) -> None:
        if self.n_bar < 0.0:
            raise ValueError(f"n_bar must be non-negative, got {self.n_bar}")
        if self.m < 1 or self.n < 0:
            raise ValueError(f"need m >= 1 and n >= 0, got m={self.m}, n={self.n}")
        if self.n_bar_unmatched is not None and self.n_bar_unmatched < 0.0:
            raise ValueError("n_bar_unmatched must be non-negative")

    @property
    def v(self) -> float:
        """EPR quadrature variance V = 2 n_bar + 1."""
        return 2.0 * self.n_bar + 1.0

    @property
    def v_s(self) -> float:
        """Squeezing of the equivalent P&M source, V_S = 1/V."""
        return 1.0 / self.v

    @property
    def n_tot(self) -> float:
        """Total mean photon number per beam, (m + n) n_bar."""
        return (self.m + self.n) * self.n_bar

    @property
    def noise_n_bar(self) -> float:
        """Per-mode brightness entering the detector-noise terms."""
        return self.n_bar if self.n_bar_unmatched is None else self.n_bar_unmatched


def epr_cm(n_bar: float) -> TwoModeCM:
    """Pure twin-beam (EPR) state: A = B = (2 n_bar + 1) I, C = diag(c, -c)
    with c = 2 sqrt(n_bar (n_bar + 1))."""
    if n_bar < 0.0:
        raise ValueError(f"n_bar must be non-negative, got {n_bar}")
    v = 2.0 * n_bar + 1.0
    c = 2.0 * math.sqrt(n_bar * (n_bar + 1.0))
    return TwoModeCM(v * np.eye(2), v * np.eye(2), np.diag([c, -c]))


def detector_noise_variance(
    det: DetectorConfig,
    n_bar: float,
    photon_statistics: str = "thermal",
) -> float:
    """Isotropic excess variance (SNU) a detector adds for per-mode brightness n_bar.

    Uses the unbalanced formula, which reduces to eps_tot^2 * n_bar when
    t_a = t_b.  Photon-number variance of the unmatched modes defaults to
    thermal, Var(n) = n_bar (n_bar + 1); "coherent" selects Var(n) = n_bar.
    """
    if photon_statistics == "thermal":
        var_n = n_bar * (n_bar + 1.0)
    elif photon_statistics == "coherent":
        var_n = n_bar
    else:
        raise ValueError(f"unknown photon statistics {photon_statistics!r}")
    t_a, t_b = det.t_a, det.t_b
    bracket = t_b * (1.0 - t_b) * n_bar + (t_b - t_a) ** 2 * var_n
    return det.eps_tot**2 * bracket / (t_a * (1.0 - t_a))


def shared_cm(
    source: SourceParams,
    ch: ChannelParams,
    det: DetectorConfig,
    scheme: SchemeKind = SchemeKind.PREPARE_AND_MEASURE,
    include_channel_noise_photons: bool = False,
    photon_statistics: str = "thermal",
) -> TwoModeCM:
    """Covariance matrix effectively shared by the trusted parties.

    Starts from the twin-beam state, sends Bob's mode through the channel
    and adds the detector mismatch noise to Bob's block (attributed to the
    untrusted channel).  The entanglement-based scheme additionally adds
    Alice's local detector noise, computed with the un-attenuated
    brightness.  ``include_channel_noise_photons`` also counts the channel
    excess-noise photons (chi/2 per mode at the input) towards the
    brightness reaching Bob's detector; excluded by default.
    """
    cm = apply_channel(epr_cm(source.n_bar), ch)

    bright = source.noise_n_bar
    bob_bright = ch.eta * bright
    if include_channel_noise_photons:
        bob_bright += ch.eta * ch.chi / 2.0

    eye = np.eye(2)
    b = cm.b + detector_noise_variance(det, bob_bright, photon_statistics) * eye
    a = cm.a
    if scheme is SchemeKind.EPR_BASED:
        a = a + detector_noise_variance(det, bright, photon_statistics) * eye

    out = TwoModeCM(a, b, cm.c)
    if not out.is_physical():
        raise PhysicalityError("shared covariance matrix is unphysical; convention bug")
    return out


def entanglement_break_threshold(eps_tot: float) -> float:
    """Per-mode photon number at which the detected entanglement vanishes,
    1 / (eps_tot^2 (1 + eps_tot^2 / 4)); approximately eps_tot^-2."""
    if eps_tot <= 0.0:
        raise ValueError(f"eps_tot must be positive, got {eps_tot}")
    e2 = eps_tot**2
    return 1.0 / (e2 * (1.0 + e2 / 4.0))


def entanglement_break_threshold_numeric(
    det: DetectorConfig,
    eta: float = 1.0,
    rel_tol: float = 1e-8,
) -> float:
    """Root of E_N(n_bar) = 0 found by bisection on the smaller symplectic
    eigenvalue of the partial transpose (entanglement-based scheme, chi = 0).

    Cross-check for the closed form; agrees within 1e-4 relative.
    """
    ch = ChannelParams(eta=eta, chi=0.0)

    def nu_minus_pt(n_bar: float) -> float:
        source = SourceParams(n_bar=n_bar, m=det.m, n=det.n)
        cm = shared_cm(source, ch, det, SchemeKind.EPR_BASED)
        return symplectic_eigenvalues(partial_transpose(cm), check_physical=False).nu_minus - 1.0

    guess = entanglement_break_threshold(det.eps_tot)
    lo, hi = 0.25 * guess, 4.0 * guess
    return float(brentq(nu_minus_pt, lo, hi, xtol=guess * rel_tol, rtol=1e-14))


def entanglement_curve(
    n_tot_values: Iterable[float],
    ch: ChannelParams,
    det: DetectorConfig,
    scheme: SchemeKind = SchemeKind.EPR_BASED,
    **kwargs,
) -> list[tuple[float, float]]:
    """Logarithmic negativity versus total mean photon number per beam.

    Per-mode brightness is n_tot / (m + n).  The grid must be strictly
    increasing.
    """
    values = [float(v) for v in n_tot_values]
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError("n_tot grid must be strictly increasing")
    total_modes = det.m + det.n
    out = []
    for n_tot in values:
        source = SourceParams(n_bar=n_tot / total_modes, m=det.m, n=det.n)
        cm = shared_cm(source, ch, det, scheme, **kwargs)
        out.append((n_tot, log_negativity(cm)))
    return out
