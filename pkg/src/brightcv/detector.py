"""Analytic model of a multimode homodyne detector for bright light.

The detector couples M matched signal modes to strong local-oscillator (LO)
modes and N unmatched signal modes to vacuum, on beamsplitters with
transmittances t_a (matched) and t_b (unmatched).  Unmatched bright modes
are only partially filtered out (per-mode inefficiency epsilon) and leak
self-energy noise into the photocurrent difference.  All variances are in
shot-noise units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class DetectorConfig:
    """Multimode homodyne detector parameters.

    m, n        matched / unmatched mode counts
    epsilon     per-mode filtration inefficiency, in [0, 1]
    alpha       LO amplitude per mode (real, > 0)
    phi         LO phase (0 measures x, pi/2 measures p)
    t_a, t_b    beamsplitter transmittances for matched / unmatched modes
    """

    m: int
    n: int
    epsilon: float
    alpha: float
    phi: float = 0.0
    t_a: float = 0.5
    t_b: float = 0.5

    def __post_init__(self) -> None:
        if not isinstance(self.m, int) or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m!r}")
        if not isinstance(self.n, int) or self.n < 0:
            raise ValueError(f"n must be a non-negative integer, got {self.n!r}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.alpha <= 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not 0.0 < self.t_a < 1.0:
            raise ValueError(f"t_a must lie strictly inside (0, 1), got {self.t_a}")
        if not 0.0 < self.t_b < 1.0:
            raise ValueError(f"t_b must lie strictly inside (0, 1), got {self.t_b}")

    @property
    def g(self) -> float:
        """Electronic gain applied to the second detector, t_a / (1 - t_a)."""
        return g_coefficient(self.t_a)

    @property
    def eps_tot(self) -> float:
        """Effective mode-filtration inefficiency sqrt(n eps^2 / (m alpha^2))."""
        return math.sqrt(self.n * self.epsilon**2 / (self.m * self.alpha**2))

    @property
    def balanced(self) -> bool:
        return self.t_a == 0.5 and self.t_b == 0.5

    @classmethod
    def from_eps_tot(
        cls,
        eps_tot: float,
        m: int = 1,
        n: int = 1,
        alpha: float | None = None,
        **kwargs,
    ) -> "DetectorConfig":
        """Build a config realizing a target eps_tot.

        epsilon = eps_tot * alpha * sqrt(m / n); when alpha is not given it
        is chosen so that epsilon stays within [0, 1].
        """
        if eps_tot < 0.0:
            raise ValueError(f"eps_tot must be non-negative, got {eps_tot}")
        if n < 1:
            raise ValueError("from_eps_tot needs at least one unmatched mode")
        ratio = math.sqrt(m / n)
        if alpha is None:
            alpha = 10.0
            if eps_tot > 0.0:
                alpha = min(10.0, 0.9 / (eps_tot * ratio))
        epsilon = eps_tot * alpha * ratio
        if epsilon > 1.0:
            raise ValueError(
                f"eps_tot={eps_tot} with alpha={alpha}, m={m}, n={n} needs "
                f"epsilon={epsilon:.3g} > 1; reduce alpha or increase n"
            )
        return cls(m=m, n=n, epsilon=epsilon, alpha=alpha, **kwargs)

    def with_eps_tot(self, eps_tot: float) -> "DetectorConfig":
        """Same detector with epsilon rescaled to hit a target eps_tot."""
        epsilon = eps_tot * self.alpha * math.sqrt(self.m / self.n)
        return replace(self, epsilon=epsilon)


@dataclass(frozen=True)
class ModeStatistics:
    """Statistics of a signal mode as seen by the detector.

    var_x   quadrature variance Var(X) of the matched signal (SNU)
    n_bar   mean photon number per unmatched mode
    var_n   photon-number variance of an unmatched mode
    """

    var_x: float
    n_bar: float
    var_n: float

    def __post_init__(self) -> None:
        if self.var_x <= 0.0:
            raise ValueError(f"var_x must be positive, got {self.var_x}")
        if self.n_bar < 0.0 or self.var_n < 0.0:
            raise ValueError("n_bar and var_n must be non-negative")

    @classmethod
    def thermal(cls, var_x: float, n_bar: float) -> "ModeStatistics":
        """Thermal photon statistics, Var(n) = n_bar (n_bar + 1)."""
        return cls(var_x, n_bar, n_bar * (n_bar + 1.0))

    @classmethod
    def coherent(cls, var_x: float, n_bar: float) -> "ModeStatistics":
        """Poissonian photon statistics, Var(n) = n_bar."""
        return cls(var_x, n_bar, n_bar)


def g_coefficient(t_a: float) -> float:
    """Gain g = t_a / (1 - t_a) cancelling the matched-signal self term."""
    if t_a >= 1.0:
        raise ZeroDivisionError("g diverges at t_a = 1")
    return t_a / (1.0 - t_a)


def epsilon_tot(config: DetectorConfig) -> float:
    """Effective inefficiency aggregating mode counts, filtering and LO power."""
    return config.eps_tot


def balanced_variance(stats: ModeStatistics, eps_tot: float) -> float:
    """Normalized photocurrent variance of the balanced detector (SNU).

    Var(X) + eps_tot^2 * n_bar: the plain homodyne outcome plus the
    self-energy noise of the bright unmatched modes.
    """
    if eps_tot < 0.0:
        raise ValueError(f"eps_tot must be non-negative, got {eps_tot}")
    return stats.var_x + eps_tot**2 * stats.n_bar


def unbalanced_variance(stats: ModeStatistics, config: DetectorConfig) -> float:
    """Normalized photocurrent variance of a generally unbalanced detector.

    Var(X) + eps_tot^2 / (t_a (1 - t_a)) *
        [t_b (1 - t_b) n_bar + (t_b - t_a)^2 Var(n)]

    Reduces to balanced_variance when t_a = t_b.
    """
    t_a, t_b = config.t_a, config.t_b
    bracket = t_b * (1.0 - t_b) * stats.n_bar + (t_b - t_a) ** 2 * stats.var_n
    return stats.var_x + config.eps_tot**2 * bracket / (t_a * (1.0 - t_a))


def squeezing_vanish_threshold(v_s: float, eps_tot: float) -> float:
    """Mean photon number per mode at which squeezing v_s is erased.

    (1 - v_s) / eps_tot^2: there the balanced detector reads exactly the
    shot-noise level regardless of the channel transmittance.
    """
    if not 0.0 < v_s < 1.0:
        raise ValueError(f"v_s must lie in (0, 1) for squeezing to vanish, got {v_s}")
    if eps_tot <= 0.0:
        raise ValueError(f"eps_tot must be positive, got {eps_tot}")
    return (1.0 - v_s) / eps_tot**2
