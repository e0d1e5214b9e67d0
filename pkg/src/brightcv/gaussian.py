"""Covariance-matrix algebra for two-mode Gaussian states.

Conventions used throughout the package: quadratures x = a^dag + a and
p = i(a^dag - a), so the vacuum has Var(x) = Var(p) = 1 (one shot-noise
unit, SNU) and a thermal state with mean photon number n has quadrature
variance 2n + 1.  A two-mode state is stored in the block form

    gamma = [[A, C],
             [C.T, B]]

with A the 2x2 covariance block of the first (Alice) mode, B the block of
the second (Bob) mode and C the cross-correlation block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

#: Absolute tolerance on symplectic eigenvalues when deciding physicality.
PHYSICALITY_TOL = 1e-9

# Reflection of the p-quadrature of a single mode.
_Z = np.diag([1.0, -1.0])

# Symplectic form for the (x1, p1, x2, p2) ordering.
_J = np.array([[0.0, 1.0], [-1.0, 0.0]])
_OMEGA = np.block([[_J, np.zeros((2, 2))], [np.zeros((2, 2)), _J]])


class PhysicalityError(ValueError):
    """Covariance matrix violates the uncertainty relation (nu_minus < 1)."""


class NumericalDomainError(ArithmeticError):
    """An intermediate quantity left its mathematical domain."""


class SymplecticSpectrum(NamedTuple):
    nu_plus: float
    nu_minus: float


@dataclass(frozen=True, eq=False)
class TwoModeCM:
    """Two-mode covariance matrix in block form [[A, C], [C.T, B]] (SNU)."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self) -> None:
        for name in ("a", "b", "c"):
            block = np.array(getattr(self, name), dtype=float)
            if block.shape != (2, 2):
                raise ValueError(f"block {name} must be 2x2, got {block.shape}")
            block.setflags(write=False)
            object.__setattr__(self, name, block)
        if not np.allclose(self.a, self.a.T, atol=1e-12):
            raise ValueError("block A must be symmetric")
        if not np.allclose(self.b, self.b.T, atol=1e-12):
            raise ValueError("block B must be symmetric")

    @classmethod
    def vacuum(cls) -> "TwoModeCM":
        return cls(np.eye(2), np.eye(2), np.zeros((2, 2)))

    @classmethod
    def from_matrix(cls, gamma: np.ndarray) -> "TwoModeCM":
        gamma = np.asarray(gamma, dtype=float)
        if gamma.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got {gamma.shape}")
        return cls(gamma[:2, :2], gamma[2:, 2:], gamma[:2, 2:])

    @property
    def matrix(self) -> np.ndarray:
        """The full 4x4 covariance matrix."""
        return np.block([[self.a, self.c], [self.c.T, self.b]])

    def is_physical(self, tol: float = PHYSICALITY_TOL) -> bool:
        nu = symplectic_eigenvalues(self, check_physical=False, tol=tol)
        norm = float(np.max(np.abs(self.matrix)))
        return nu.nu_minus >= 1.0 - tol * max(1.0, norm)


def symplectic_eigenvalues(
    cm: TwoModeCM,
    check_physical: bool = True,
    tol: float = PHYSICALITY_TOL,
) -> SymplecticSpectrum:
    """Symplectic spectrum {nu_plus, nu_minus} of a two-mode covariance matrix.

    Mathematically nu_pm^2 = (Delta pm sqrt(Delta^2 - 4 det gamma)) / 2 with
    Delta = det A + det B + 2 det C, but that expression loses half the
    digits whenever the spectrum is near-degenerate (pure and lossy-pure
    states).  The eigenvalues are therefore evaluated as the spectrum of
    the Hermitian matrix gamma^(1/2) (i Omega) gamma^(1/2), which is
    accurate to machine precision; the tests cross-check the Delta formula.

    With ``check_physical`` (the default) a state with nu_minus < 1 - tol is
    rejected; disable it when the input is a partially transposed matrix,
    whose smaller eigenvalue may legitimately drop below one.  The
    tolerance is scaled with the matrix norm: for bright states the entry
    round-off alone perturbs nu_minus at the norm * eps level.
    """
    gamma = cm.matrix
    evals, vecs = np.linalg.eigh(gamma)
    if evals[0] <= 0.0:
        raise NumericalDomainError(
            f"covariance matrix is not positive definite (eigenvalue {evals[0]:g})"
        )
    sqrt_gamma = (vecs * np.sqrt(evals)) @ vecs.T
    herm = sqrt_gamma @ (1j * _OMEGA) @ sqrt_gamma
    nus = np.linalg.eigvalsh(herm)  # ascending: -nu+, -nu-, nu-, nu+
    nu_plus, nu_minus = float(nus[3]), float(nus[2])

    if check_physical:
        norm = float(np.max(np.abs(gamma)))
        if nu_minus < 1.0 - tol * max(1.0, norm):
            raise PhysicalityError(
                f"state is unphysical: smaller symplectic eigenvalue {nu_minus:.12g} < 1"
            )
    return SymplecticSpectrum(nu_plus, nu_minus)


def partial_transpose(cm: TwoModeCM) -> TwoModeCM:
    """Partial transposition of the second (Bob) mode.

    Flips the sign of Bob's p-quadrature: B -> Z B Z and C -> C Z with
    Z = diag(1, -1).  Applying it twice returns the input exactly.
    """
    return TwoModeCM(cm.a, _Z @ cm.b @ _Z, cm.c @ _Z)


def log_negativity(cm: TwoModeCM, tol: float = PHYSICALITY_TOL) -> float:
    """Logarithmic negativity E_N = max(0, -log2 nu_minus~) in bits.

    nu_minus~ is the smaller symplectic eigenvalue of the partial transpose.
    Raises PhysicalityError for unphysical input.
    """
    symplectic_eigenvalues(cm, check_physical=True, tol=tol)
    nu_pt = symplectic_eigenvalues(partial_transpose(cm), check_physical=False, tol=tol)
    return max(0.0, -math.log2(nu_pt.nu_minus))


def entropy_g(nu: float, tol: float = PHYSICALITY_TOL) -> float:
    """Von Neumann entropy (bits) of a thermal symplectic mode with eigenvalue nu.

    g(nu) = ((nu+1)/2) log2((nu+1)/2) - ((nu-1)/2) log2((nu-1)/2), with
    g(1) = 0 by continuity.  Values in [1 - tol, 1] are clamped to 1 to
    avoid spurious NaN near pure states.
    """
    if nu < 1.0 - tol:
        raise NumericalDomainError(f"entropy_g requires nu >= 1, got {nu:.12g}")
    if nu <= 1.0:
        return 0.0
    up = (nu + 1.0) / 2.0
    dn = (nu - 1.0) / 2.0
    return up * math.log2(up) - dn * math.log2(dn)


def condition_on_homodyne(
    cm: TwoModeCM,
    measured_mode: str = "bob",
    quadrature: str = "x",
) -> np.ndarray:
    """Conditional 2x2 covariance matrix of the unmeasured mode after a
    homodyne measurement of one quadrature on the other mode.

    For an x-homodyne on Bob the result is A - (1/B_xx) c1 c1^T with c1 the
    first column of C (the rank-one Schur complement restricted to the
    measured quadrature).
    """
    if quadrature not in ("x", "p"):
        raise ValueError(f"quadrature must be 'x' or 'p', got {quadrature!r}")
    q = 0 if quadrature == "x" else 1
    if measured_mode == "bob":
        remaining, measured, cross = cm.a, cm.b, cm.c[:, q]
    elif measured_mode == "alice":
        remaining, measured, cross = cm.b, cm.a, cm.c[q, :]
    else:
        raise ValueError(f"measured_mode must be 'alice' or 'bob', got {measured_mode!r}")
    var_q = measured[q, q]
    if var_q <= 0.0:
        raise ZeroDivisionError(f"measured quadrature has non-positive variance {var_q:g}")
    return remaining - np.outer(cross, cross) / var_q
