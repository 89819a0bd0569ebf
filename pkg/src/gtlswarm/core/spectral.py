"""Ergodicity, eigenvalue and mixing-rate quantities of stochastic matrices."""

from __future__ import annotations

import numpy as np

from .graph import InputError
from .plan import STOCH_TOL, require_stochastic

STATIONARY_TOL = 1e-8


def ergodicity_coefficient(M) -> float:
    """Half the largest L1 distance between two columns of ``M``."""
    M = require_stochastic(M)
    diff = np.abs(M[:, :, None] - M[:, None, :]).sum(axis=0)
    return float(min(max(0.5 * diff.max(initial=0.0), 0.0), 1.0))


def _drop_unit_eigenvalue(eig: np.ndarray) -> np.ndarray:
    k = int(np.argmin(np.abs(eig - 1.0)))
    return np.delete(eig, k)


def second_eigenvalue_modulus(M) -> float:
    """Largest eigenvalue modulus once the Perron eigenvalue 1 is removed."""
    M = require_stochastic(M)
    if M.shape[0] == 1:
        return 0.0
    rest = _drop_unit_eigenvalue(np.linalg.eigvals(M))
    return float(np.max(np.abs(rest)))


def stationary_distribution(M) -> np.ndarray:
    """A distribution with ``M nu = nu`` (least squares with the sum row)."""
    M = require_stochastic(M)
    n = M.shape[0]
    A = np.vstack([M - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    nu, *_ = np.linalg.lstsq(A, b, rcond=None)
    nu = np.clip(nu, 0.0, None)
    return nu / nu.sum()


def _check_pair(M, nu) -> tuple[np.ndarray, np.ndarray]:
    M = require_stochastic(M)
    nu = np.asarray(nu, dtype=float)
    if nu.shape != (M.shape[0],):
        raise InputError("distribution length does not match the matrix")
    if np.any(nu <= 0.0):
        raise InputError("distribution must be strictly positive")
    if abs(nu.sum() - 1.0) > STOCH_TOL:
        raise InputError("distribution must sum to 1")
    if np.max(np.abs(M @ nu - nu)) > STATIONARY_TOL:
        raise InputError("distribution is not stationary for the matrix")
    return M, nu


def centered_similarity(M, nu) -> np.ndarray:
    """``Q^-1 M Q - r r^T`` with ``r = sqrt(nu)`` and ``Q = diag(r)``."""
    r = np.sqrt(nu)
    return (M * r[None, :]) / r[:, None] - np.outer(r, r)


def reversibilization_rate(M, nu) -> float:
    """Second eigenvalue of ``M diag(nu) M^T diag(nu)^-1`` via a singular value."""
    M, nu = _check_pair(M, nu)
    s = np.linalg.svd(centered_similarity(M, nu), compute_uv=False)
    return float(s[0] ** 2)


def reversibilization_rate_eig(M, nu) -> float:
    """Same quantity from an explicit eigendecomposition (cross-check path)."""
    M, nu = _check_pair(M, nu)
    if M.shape[0] == 1:
        return 0.0
    R = M @ np.diag(nu) @ M.T @ np.diag(1.0 / nu)
    eig = np.sort(np.real(np.linalg.eigvals(R)))[::-1]
    return float(max(eig[1], 0.0))
