"""Singular values of collocation matrices, weight selection and spectral radii."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse

DEFAULT_RANK_TOL = 1e-10
MAX_DENSE_H = 500


class SpectralError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SpectralSummary:
    rank: int
    sigma_max: float
    sigma_min: float
    singular_values: np.ndarray = field(repr=False)
    tol: float = DEFAULT_RANK_TOL

    def as_dict(self) -> dict:
        return {
            "rank": self.rank,
            "sigma_max": self.sigma_max,
            "sigma_min": self.sigma_min,
            "singular_values": [float(s) for s in self.singular_values],
            "tol": self.tol,
        }


@dataclass(frozen=True)
class WeightSet:
    """MLSPIA weights ``(omega, gamma, upsilon)`` and the LSPIA step ``mu``.

    ``rate`` and ``lspia_rate`` hold predicted spectral radii when the set
    came from one of the optimal-weight formulas.
    """

    omega: float
    gamma: float
    upsilon: float
    mu: float | None = None
    rate: float | None = None
    lspia_rate: float | None = None

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("omega", "gamma", "upsilon", "mu", "rate", "lspia_rate")}


def _triangular_factor(B, block: int = 8192) -> np.ndarray:
    """R factor of a thin QR of ``B``, accumulated over row blocks."""
    m, n = B.shape
    B = sparse.csr_matrix(B)
    R = np.zeros((0, n))
    for start in range(0, m, block):
        chunk = B[start : start + block].toarray()
        R = np.linalg.qr(np.vstack([R, chunk]), mode="r")
    return R


def gram_decomposition(B) -> tuple[np.ndarray, np.ndarray]:
    """Singular values ``s`` (descending) and right vectors ``V`` with ``B^T B = V diag(s^2) V^T``."""
    try:
        R = _triangular_factor(B)
        _, s, Vt = np.linalg.svd(R)
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"singular value iteration failed for a {B.shape} matrix: {exc}") from exc
    n = B.shape[1]
    if s.size < n:
        # fewer rows than columns: pad the spectrum with exact zeros
        s = np.concatenate([s, np.zeros(n - s.size)])
    return s, Vt.T


def extreme_singular_values(B, tol: float = DEFAULT_RANK_TOL) -> SpectralSummary:
    """Numerical rank and extreme positive singular values of ``B``.

    The rank counts singular values above ``tol * sigma_max``.
    """
    if tol <= 0:
        raise ValueError("rank tolerance must be positive")
    s, _ = gram_decomposition(B)
    if s.size == 0 or s[0] == 0.0:
        raise ValueError("matrix is zero")
    kept = s[s > tol * s[0]]
    return SpectralSummary(int(kept.size), float(kept[0]), float(kept[-1]), kept, tol)


def _check_sigmas(*sigmas: float) -> None:
    for s in sigmas:
        if not (s > 0 and math.isfinite(s)):
            raise ValueError(f"singular values must be positive and finite, got {s}")


def optimal_weights(s: SpectralSummary) -> WeightSet:
    """Fastest-rate MLSPIA weights and the LSPIA optimal step for a curve basis."""
    return _optimal(s.sigma_max, s.sigma_min)


def optimal_weights_surface(su: SpectralSummary, sv: SpectralSummary) -> WeightSet:
    """Same as :func:`optimal_weights` with the singular values of ``B1 (x) B2``."""
    return _optimal(su.sigma_max * sv.sigma_max, su.sigma_min * sv.sigma_min)


def _optimal(s1: float, sr: float) -> WeightSet:
    _check_sigmas(s1, sr)
    if s1 < sr:
        raise ValueError("sigma_max must be >= sigma_min")
    w = 4.0 * s1 * sr / (s1 + sr) ** 2
    return WeightSet(
        omega=w,
        gamma=w,
        upsilon=1.0 / (s1 * sr),
        mu=2.0 / (s1 * s1 + sr * sr),
        rate=(s1 - sr) / (s1 + sr),
        lspia_rate=(s1 * s1 - sr * sr) / (s1 * s1 + sr * sr),
    )


def lspia_weight(s: SpectralSummary) -> float:
    return 2.0 / (s.sigma_max**2 + s.sigma_min**2)


def validate_weights(w: WeightSet, sigma_max: float) -> tuple[bool, str]:
    """Check the convergence region for MLSPIA weights.

    For surfaces pass ``sigma_max * mu_max`` as the bound.
    """
    _check_sigmas(sigma_max)
    om, ga, up = w.omega, w.gamma, w.upsilon
    if not all(map(math.isfinite, (om, ga, up))):
        return False, "weights must be finite"
    if not 0.0 < om < 2.0:
        return False, f"need 0 < omega < 2, got omega={om}"
    if not up > 0.0:
        return False, f"need upsilon > 0, got upsilon={up}"
    s2u = sigma_max * sigma_max * up
    lo = om - om / s2u
    hi = om / 2.0 - (om - 2.0) / s2u
    if not lo < ga:
        return False, f"need gamma > omega - omega/(sigma^2 upsilon) = {lo}, got gamma={ga}"
    if not ga < hi:
        return False, f"need gamma < omega/2 - (omega-2)/(sigma^2 upsilon) = {hi}, got gamma={ga}"
    return True, "ok"


def _quadratic(w: WeightSet, sigma: float) -> tuple[float, float]:
    s2 = sigma * sigma
    b = w.gamma * w.upsilon * s2 - (2.0 - w.omega)
    c = s2 * w.upsilon * (w.omega - w.gamma) + 1.0 - w.omega
    return b, c


_EPS = np.finfo(float).eps


def _root_modulus(w: WeightSet, sigma: float) -> float:
    """Largest root modulus of ``x^2 + b x + c`` for one singular value."""
    b, c = _quadratic(w, sigma)
    s2 = sigma * sigma
    # rounding bound on the discriminant, from the magnitudes that formed b and c
    err_b = _EPS * (abs(w.gamma * w.upsilon * s2) + abs(2.0 - w.omega))
    err_c = _EPS * (abs(s2 * w.upsilon * (w.omega - w.gamma)) + 1.0 + abs(w.omega))
    disc = b * b - 4.0 * c
    if abs(disc) <= 16.0 * (2.0 * abs(b) * err_b + 4.0 * err_c):
        return abs(b) / 2.0
    if disc < 0.0:
        return math.sqrt(c)
    return (abs(b) + math.sqrt(disc)) / 2.0


def theoretical_radius(w: WeightSet, singulars) -> float:
    """Spectral radius of the reduced MLSPIA iteration matrix.

    Maximum of ``|1 - omega|`` and the root moduli of
    ``x^2 + (gamma upsilon s^2 - (2 - omega)) x + s^2 upsilon (omega - gamma) + 1 - omega``
    over the given positive singular values ``s``. Near-double roots are
    treated as exact double roots.
    """
    rho = abs(1.0 - w.omega)
    for sigma in np.atleast_1d(singulars):
        rho = max(rho, _root_modulus(w, float(sigma)))
    return rho


def lspia_radius(mu: float, singulars) -> float:
    s2 = np.atleast_1d(np.asarray(singulars, dtype=float)) ** 2
    return float(np.max(np.abs(1.0 - mu * s2)))


def predicted_eigenvalues(w: WeightSet, singulars) -> np.ndarray:
    """All eigenvalues predicted for the reduced iteration matrix (complex)."""
    out = [complex(1.0 - w.omega)]
    for sigma in np.atleast_1d(singulars):
        b, c = _quadratic(w, float(sigma))
        out.extend(np.roots([1.0, b, c]).astype(complex))
    return np.array(out)


def iteration_matrix(B, w: WeightSet) -> np.ndarray:
    """Dense ``(m+n) x (m+n)`` MLSPIA iteration matrix, for diagnostics only."""
    m, n = B.shape
    if m + n > MAX_DENSE_H:
        raise ValueError(f"iteration matrix of size {m + n} exceeds the diagnostic cap {MAX_DENSE_H}")
    Bd = B.toarray() if sparse.issparse(B) else np.asarray(B, dtype=float)
    H = np.zeros((m + n, m + n))
    H[:m, :m] = (1.0 - w.omega) * np.eye(m) - w.gamma * w.upsilon * (Bd @ Bd.T)
    H[:m, m:] = -w.omega * Bd
    H[m:, :m] = w.upsilon * Bd.T
    H[m:, m:] = np.eye(n)
    return H


def with_mu(w: WeightSet, mu: float) -> WeightSet:
    return replace(w, mu=mu)
