"""Asymptotic collective-attack key-rate pipeline.

Reverse reconciliation with x-homodyne on both sides; the eavesdropper is
assumed to hold the purification of all untrusted noise, so the Holevo
bound is evaluated from the shared covariance matrix alone:

    K = beta * I_AB - chi_BE
    chi_BE = g(nu_plus) + g(nu_minus) - g(nu_cond)

with nu_pm the symplectic eigenvalues of the shared state and nu_cond the
eigenvalue of Alice's state conditioned on Bob's x-homodyne outcome.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .channel import ChannelParams, eta_from_db
from .detector import DetectorConfig
from .gaussian import (
    NumericalDomainError,
    TwoModeCM,
    condition_on_homodyne,
    entropy_g,
    symplectic_eigenvalues,
)
from .protocols import SchemeKind, SourceParams, shared_cm

DEFAULT_BETA = 0.97

#: Outcomes of the attenuation-threshold search.
CROSSING = "crossing"
SECURE_BEYOND_RANGE = "secure_beyond_range"
NEVER_SECURE = "never_secure"


@dataclass(frozen=True)
class KeyRateResult:
    """Information quantities for one parameter point (bits per channel use)."""

    i_ab: float
    chi_be: float
    key_rate: float
    beta: float


@dataclass(frozen=True)
class AttenuationThreshold:
    """Result of the K = 0 search over channel attenuation."""

    status: str
    attenuation_db: float | None


@dataclass(frozen=True)
class OptimalPhotonNumber:
    n_bar: float
    key_rate: float
    from_grid_fallback: bool = False


def mutual_information(cm: TwoModeCM) -> float:
    """Shannon mutual information (bits) of the x-homodyne outcomes,
    I_AB = (1/2) log2(B_xx / V_{B|A}) with V_{B|A} = B_xx - C_xx^2 / A_xx."""
    symplectic_eigenvalues(cm)
    b_xx = cm.b[0, 0]
    v_cond = b_xx - cm.c[0, 0] ** 2 / cm.a[0, 0]
    if v_cond <= 0.0:
        raise NumericalDomainError(f"degenerate state: conditional variance {v_cond:g}")
    return 0.5 * math.log2(b_xx / v_cond)


def holevo_bound(cm: TwoModeCM) -> float:
    """Holevo bound chi_BE (bits) for reverse reconciliation on Bob's x-homodyne."""
    nu = symplectic_eigenvalues(cm)
    a_cond = condition_on_homodyne(cm, measured_mode="bob", quadrature="x")
    det_cond = float(np.linalg.det(a_cond))
    if det_cond <= 0.0:
        raise NumericalDomainError(f"conditional state has det {det_cond:g}")
    nu_cond = math.sqrt(det_cond)
    chi = entropy_g(nu.nu_plus) + entropy_g(nu.nu_minus) - entropy_g(max(nu_cond, 1.0))
    # Round-off can push a vanishing bound a few ulp below zero.
    if -1e-9 < chi < 0.0:
        chi = 0.0
    return chi


def key_rate(
    source: SourceParams,
    ch: ChannelParams,
    det: DetectorConfig,
    beta: float = DEFAULT_BETA,
    **shared_kwargs,
) -> KeyRateResult:
    """Lower bound on the secure key rate, K = beta I_AB - chi_BE.

    Evaluated on the effective P&M shared state (Alice's detection ideal).
    Negative K is returned as-is and marks the insecure region.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    if source.n_bar == 0.0:
        return KeyRateResult(0.0, 0.0, 0.0, beta)
    cm = shared_cm(source, ch, det, SchemeKind.PREPARE_AND_MEASURE, **shared_kwargs)
    i_ab = mutual_information(cm)
    chi_be = holevo_bound(cm)
    return KeyRateResult(i_ab, chi_be, beta * i_ab - chi_be, beta)


def max_tolerable_attenuation(
    source: SourceParams,
    det: DetectorConfig,
    chi: float,
    beta: float = DEFAULT_BETA,
    max_db: float = 60.0,
    tol_db: float = 1e-6,
    **shared_kwargs,
) -> AttenuationThreshold:
    """Attenuation (dB) at which the key rate crosses zero.

    Bisection over (0, max_db]; before searching, K is verified to be
    monotone non-increasing in the attenuation over the bracket.  Returns
    NEVER_SECURE when K <= 0 already at 0 dB and SECURE_BEYOND_RANGE when
    no crossing exists below max_db.
    """

    def k_at(db: float) -> float:
        ch = ChannelParams(eta=eta_from_db(db), chi=chi)
        return key_rate(source, ch, det, beta, **shared_kwargs).key_rate

    probe = np.linspace(0.0, max_db, 25)
    ks = [k_at(db) for db in probe]
    if ks[0] <= 0.0:
        return AttenuationThreshold(NEVER_SECURE, None)
    negative = [i for i, k in enumerate(ks) if k <= 0.0]
    if not negative:
        return AttenuationThreshold(SECURE_BEYOND_RANGE, None)

    # K must decay monotonically up to the first sign change; past it the
    # rate may creep back towards zero from below.
    first = negative[0]
    drift = max(abs(k) for k in ks[: first + 1]) * 1e-12
    if any(ks[i + 1] > ks[i] + drift for i in range(first)):
        raise NumericalDomainError("key rate is not monotone decreasing in attenuation")

    db = float(brentq(k_at, probe[first - 1], probe[first], xtol=tol_db, rtol=1e-14))
    return AttenuationThreshold(CROSSING, db)


def optimal_photon_number(
    ch: ChannelParams,
    det: DetectorConfig,
    beta: float = DEFAULT_BETA,
    n_range: tuple[float, float] = (1e-2, 1e6),
    coarse_points: int = 41,
    rel_tol: float = 1e-4,
    **shared_kwargs,
) -> OptimalPhotonNumber:
    """Maximize K over the per-mode photon number by golden-section search.

    A coarse log-spaced grid first confirms the profile is unimodal; if it
    is not, the dense-grid argmax is returned with a fallback flag.
    """
    lo, hi = n_range
    if lo <= 0.0 or hi <= lo:
        raise ValueError(f"need 0 < lo < hi, got ({lo}, {hi})")

    def k_at(n_bar: float) -> float:
        source = SourceParams(n_bar=n_bar, m=det.m, n=det.n)
        return key_rate(source, ch, det, beta, **shared_kwargs).key_rate

    grid = np.geomspace(lo, hi, coarse_points)
    ks = np.array([k_at(n) for n in grid])
    i_max = int(np.argmax(ks))
    drift = max(1.0, float(np.max(np.abs(ks)))) * 1e-12
    rising_ok = all(ks[i] <= ks[i + 1] + drift for i in range(i_max))
    falling_ok = all(ks[i] >= ks[i + 1] - drift for i in range(i_max, len(ks) - 1))
    if not (rising_ok and falling_ok):
        return OptimalPhotonNumber(float(grid[i_max]), float(ks[i_max]), True)

    # Golden section on log(n_bar) between the neighbours of the argmax.
    a = math.log(grid[max(i_max - 1, 0)])
    b = math.log(grid[min(i_max + 1, len(grid) - 1)])
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    kc, kd = k_at(math.exp(c)), k_at(math.exp(d))
    while b - a > math.log1p(rel_tol):
        if kc > kd:
            b, d, kd = d, c, kc
            c = b - inv_phi * (b - a)
            kc = k_at(math.exp(c))
        else:
            a, c, kc = c, d, kd
            d = a + inv_phi * (b - a)
            kd = k_at(math.exp(d))
    n_star = math.exp((a + b) / 2.0)
    return OptimalPhotonNumber(n_star, k_at(n_star), False)
