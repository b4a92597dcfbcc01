"""LSPIA and MLSPIA iterations for curves and tensor-product surfaces.

Curves keep data as ``(m, d)`` arrays and control points as ``(n, d)``.
Surfaces keep data as ``(m1, m2, d)`` grids and control nets as ``(n1, n2, d)``;
the Kronecker product ``B1 (x) B2`` is never formed.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import spectral
from .params import chord_params, grid_params
from .spectral import SpectralSummary, WeightSet
from .splines import collocate, make_knots, tensor_apply

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 100_000
DIVERGENCE_FACTOR = 1e12

CONVERGED = "converged"
MAX_ITERS = "max_iters"
DIVERGED = "diverged"


class DivergenceError(ArithmeticError):
    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class InvalidWeightsError(ValueError):
    pass


@dataclass
class FitProblem:
    """Everything held fixed while iterating.

    ``bases`` is ``(B,)`` for curves and ``(B1, B2)`` for surfaces.
    """

    data: np.ndarray
    bases: tuple
    weights: WeightSet
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    knots: tuple = ()
    params: tuple = ()
    spectra: tuple = ()

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        self.bases = tuple(sparse.csr_matrix(b) for b in self.bases)
        self._adjoint_bases = tuple(b.T.tocsr() for b in self.bases)
        if self.is_surface:
            (m1, n1), (m2, n2) = self.bases[0].shape, self.bases[1].shape
            if self.data.ndim != 3 or self.data.shape[:2] != (m1, m2):
                raise ValueError(f"data grid {self.data.shape} does not match bases ({m1}, {m2})")
        elif len(self.bases) == 1:
            if self.data.ndim == 1:
                self.data = self.data[:, None]
            if self.data.ndim != 2 or self.data.shape[0] != self.bases[0].shape[0]:
                raise ValueError(
                    f"{self.data.shape[0]} data points do not match {self.bases[0].shape[0]} collocation rows"
                )
        else:
            raise ValueError("bases must hold one (curve) or two (surface) matrices")
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")

    @property
    def is_surface(self) -> bool:
        return len(self.bases) == 2

    @property
    def ctrl_shape(self) -> tuple:
        d = self.data.shape[-1]
        if self.is_surface:
            return (self.bases[0].shape[1], self.bases[1].shape[1], d)
        return (self.bases[0].shape[1], d)

    def forward(self, P: np.ndarray) -> np.ndarray:
        """Collocation applied to control points: ``B P`` or ``B1 P B2^T``."""
        if self.is_surface:
            return tensor_apply(self.bases[0], self.bases[1], P)
        return self.bases[0] @ P

    def adjoint(self, R: np.ndarray) -> np.ndarray:
        """Transposed collocation: ``B^T R`` or ``B1^T R B2``."""
        if self.is_surface:
            return tensor_apply(self._adjoint_bases[0], self._adjoint_bases[1], R)
        return self._adjoint_bases[0] @ R

    def sigma_bound(self) -> float:
        """Largest singular value of the (tensor) collocation operator."""
        if not self.spectra:
            self.spectra = tuple(spectral.extreme_singular_values(b) for b in self.bases)
        return float(np.prod([s.sigma_max for s in self.spectra]))

    def check_weights(self) -> None:
        ok, reason = spectral.validate_weights(self.weights, self.sigma_bound())
        if not ok:
            raise InvalidWeightsError(f"weights outside the convergence region: {reason}")


def _resolve_weights(weights, spectra) -> WeightSet:
    if weights is None or weights == "optimal":
        if len(spectra) == 2:
            return spectral.optimal_weights_surface(*spectra)
        return spectral.optimal_weights(spectra[0])
    return weights


def curve_problem(data, n: int, degree: int = 3, weights=None, tol: float = DEFAULT_TOL,
                  max_iter: int = DEFAULT_MAX_ITER) -> FitProblem:
    """Chord parameters, averaged knots and collocation for a point sequence."""
    Q = np.asarray(data, dtype=float)
    t = chord_params(Q)
    kv = make_knots(t, n, degree)
    B = collocate(kv, t)
    spectra = (spectral.extreme_singular_values(B),)
    return FitProblem(Q, (B,), _resolve_weights(weights, spectra), tol, max_iter,
                      knots=(kv,), params=(t,), spectra=spectra)


def surface_problem(data, n1: int, n2: int, degree: int = 3, weights=None,
                    tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> FitProblem:
    """Averaged chord parameters and one basis per grid direction."""
    Q = np.asarray(data, dtype=float)
    sp = grid_params(Q)
    kv_u = make_knots(sp.u, n1, degree)
    kv_v = make_knots(sp.v, n2, degree)
    B1, B2 = collocate(kv_u, sp.u), collocate(kv_v, sp.v)
    spectra = (spectral.extreme_singular_values(B1), spectral.extreme_singular_values(B2))
    return FitProblem(Q, (B1, B2), _resolve_weights(weights, spectra), tol, max_iter,
                      knots=(kv_u, kv_v), params=(sp.u, sp.v), spectra=spectra)


@dataclass
class IterationState:
    """Auxiliary points ``lam`` (data-shaped) and control points ``ctrl``.

    ``delta`` and ``delta_prev`` hold the increment and the last correction
    term of the per-point formulation; they stay ``None`` for the matrix form.
    """

    lam: np.ndarray
    ctrl: np.ndarray
    k: int = 0
    delta: np.ndarray | None = None
    delta_prev: np.ndarray | None = None

    def copy(self) -> "IterationState":
        cp = lambda a: None if a is None else a.copy()  # noqa: E731
        return IterationState(self.lam.copy(), self.ctrl.copy(), self.k, cp(self.delta), cp(self.delta_prev))


@dataclass
class ConvergenceRecord:
    k: int
    error: float
    step_norm: float
    elapsed: float


@dataclass
class RunResult:
    ctrl: np.ndarray
    history: list = field(default_factory=list)
    status: str = CONVERGED
    method: str = "mlspia"

    @property
    def iterations(self) -> int:
        return self.history[-1].k if self.history else 0

    @property
    def final_error(self) -> float:
        return self.history[-1].error if self.history else float("nan")


def subsample_indices(m: int, n: int) -> np.ndarray:
    """Zero-based data indices chosen as initial control points.

    First and last data points, interior ``floor(m (i-1) / (n-1))`` (one-based ``i``).
    """
    if n > m:
        raise ValueError(f"cannot pick {n} control points from {m} data points")
    if n == 1:
        return np.array([0])
    idx = [0] + [(m * (i - 1)) // (n - 1) for i in range(2, n)] + [m - 1]
    return np.array(idx)


def initial_ctrl(problem: FitProblem, strategy: str) -> np.ndarray:
    if strategy == "I":
        return np.zeros(problem.ctrl_shape)
    if strategy == "II":
        Q = problem.data
        if problem.is_surface:
            (m1, n1), (m2, n2) = problem.bases[0].shape, problem.bases[1].shape
            return Q[np.ix_(subsample_indices(m1, n1), subsample_indices(m2, n2))].copy()
        m, n = problem.bases[0].shape
        return Q[subsample_indices(m, n)].copy()
    raise ValueError(f"unknown initial strategy {strategy!r}")


def init_state(problem: FitProblem, strategy: str = "II", ctrl0=None, lam0=None) -> IterationState:
    """Initial control points and auxiliary points.

    ``"I"``: zero control points, ``lam = omega Q``.
    ``"II"``: control points subsampled from the data, ``lam = omega (Q - B P)``.
    ``"custom"``: caller-supplied ``ctrl0`` and ``lam0``.
    """
    w = problem.weights.omega
    if strategy == "custom":
        if ctrl0 is None or lam0 is None:
            raise ValueError("custom initialization needs ctrl0 and lam0")
        P = np.array(ctrl0, dtype=float).reshape(problem.ctrl_shape)
        lam = np.array(lam0, dtype=float).reshape(problem.data.shape)
        return IterationState(lam, P)
    P = initial_ctrl(problem, strategy)
    if strategy == "I":
        return IterationState(w * problem.data, P)
    return IterationState(w * (problem.data - problem.forward(P)), P)


def _check_finite(*arrays, k=None):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise DivergenceError(f"non-finite values at step {k}")


def lspia_step(problem: FitProblem, P: np.ndarray) -> np.ndarray:
    """``P + mu B^T (Q - B P)``."""
    mu = problem.weights.mu
    if mu is None or not mu > 0:
        raise ValueError("LSPIA needs a positive mu")
    return P + mu * problem.adjoint(problem.data - problem.forward(P))


def mlspia_step(problem: FitProblem, s: IterationState) -> IterationState:
    """One step of the matrix form::

        lam' = (1 - omega) lam - gamma upsilon B (B^T lam) + omega (Q - B P)
        P'   = P + upsilon B^T lam
    """
    w = problem.weights
    with np.errstate(over="ignore", invalid="ignore"):
        T = problem.adjoint(s.lam)
        lam = (1.0 - w.omega) * s.lam - (w.gamma * w.upsilon) * problem.forward(T) \
            + w.omega * (problem.data - problem.forward(s.ctrl))
        P = s.ctrl + w.upsilon * T
    _check_finite(lam, P, k=s.k + 1)
    return IterationState(lam, P, s.k + 1)


def mlspia_surface_step(problem: FitProblem, s: IterationState) -> IterationState:
    if not problem.is_surface:
        raise ValueError("surface step needs a grid problem")
    return mlspia_step(problem, s)


def _pointwise_correction(B: sparse.csc_matrix, R: np.ndarray, upsilon: float) -> np.ndarray:
    # delta_i = upsilon * sum_j B_i(t_j) R_j, one control point at a time
    out = np.zeros((B.shape[1], R.shape[1]))
    for i in range(B.shape[1]):
        lo, hi = B.indptr[i], B.indptr[i + 1]
        rows, vals = B.indices[lo:hi], B.data[lo:hi]
        out[i] = upsilon * (vals @ R[rows])
    return out


def _curve_values(B: sparse.csr_matrix, P: np.ndarray) -> np.ndarray:
    # C(t_j) = sum_i B_i(t_j) P_i, one data point at a time
    out = np.zeros((B.shape[0], P.shape[1]))
    for j in range(B.shape[0]):
        lo, hi = B.indptr[j], B.indptr[j + 1]
        out[j] = B.data[lo:hi] @ P[B.indices[lo:hi]]
    return out


def mlspia_step_per_point(problem: FitProblem, s: IterationState) -> IterationState:
    """Reference formulation with increment memory (curves only).

    ``Delta^0 = upsilon sum_j B_i(t_j) lam_j``; for ``k >= 1``
    ``Delta^k = (1-omega) Delta^{k-1} + gamma delta^k + (omega-gamma) delta^{k-1}``
    with ``delta^k = upsilon sum_j B_i(t_j) (Q_j - C^k(t_j))``; then ``P += Delta^k``.
    """
    if problem.is_surface:
        raise ValueError("per-point formulation implemented for curves; use mlspia_surface_step_per_entry")
    w = problem.weights
    B = problem.bases[0]
    Bc = B.tocsc()
    d_k = _pointwise_correction(Bc, problem.data - _curve_values(B, s.ctrl), w.upsilon)
    if s.k == 0:
        D = _pointwise_correction(Bc, s.lam, w.upsilon)
    else:
        D = (1.0 - w.omega) * s.delta + w.gamma * d_k + (w.omega - w.gamma) * s.delta_prev
    P = s.ctrl + D
    _check_finite(P, k=s.k + 1)
    return IterationState(s.lam, P, s.k + 1, delta=D, delta_prev=d_k)


def mlspia_surface_step_per_entry(problem: FitProblem, s: IterationState) -> IterationState:
    """Per-entry surface formulation by direct double sums over the data grid.

    Cost is ``O(m1 m2 n1 n2)`` per step; meant for verification on small grids.
    """
    if not problem.is_surface:
        raise ValueError("per-entry formulation needs a grid problem")
    w = problem.weights
    phi = problem.bases[0].toarray()  # phi[h, i] = phi_i(t_h)
    psi = problem.bases[1].toarray()  # psi[l, j] = psi_j(s_l)
    Q = problem.data
    fit = np.einsum("hi,lj,ijc->hlc", phi, psi, s.ctrl)
    d_k = w.upsilon * np.einsum("hi,lj,hlc->ijc", phi, psi, Q - fit)
    if s.k == 0:
        D = w.upsilon * np.einsum("hi,lj,hlc->ijc", phi, psi, s.lam)
    else:
        D = (1.0 - w.omega) * s.delta + w.gamma * d_k + (w.omega - w.gamma) * s.delta_prev
    P = s.ctrl + D
    _check_finite(P, k=s.k + 1)
    return IterationState(s.lam, P, s.k + 1, delta=D, delta_prev=d_k)


def error_E(problem: FitProblem, P: np.ndarray) -> float:
    """Stopping metric ``||B^T (B P - Q)||`` (Frobenius over coordinates)."""
    return float(np.linalg.norm(problem.adjoint(problem.forward(P) - problem.data)))


def run(problem: FitProblem, strategy="II", method: str = "mlspia", check_weights: bool = True) -> RunResult:
    """Iterate until ``E_k < tol`` or the iteration cap.

    ``strategy`` is ``"I"``, ``"II"`` or a prepared :class:`IterationState`
    (for LSPIA only its control points are used). The recorded ``E_k`` values
    are the ones the stopping test used.
    """
    if method not in ("mlspia", "lspia"):
        raise ValueError(f"unknown method {method!r}")
    if check_weights and method == "mlspia":
        problem.check_weights()
    if isinstance(strategy, IterationState):
        state = strategy.copy()
    elif method == "mlspia":
        state = init_state(problem, strategy)
    else:
        state = IterationState(np.zeros(0), initial_ctrl(problem, strategy))

    history = []
    t0 = time.perf_counter()
    e0 = None
    step_norm = 0.0
    status = MAX_ITERS
    k = 0
    while True:
        e = error_E(problem, state.ctrl)
        history.append(ConvergenceRecord(k, e, step_norm, time.perf_counter() - t0))
        if e0 is None:
            e0 = e
        if not np.isfinite(e) or e > DIVERGENCE_FACTOR * max(e0, 1.0):
            status = DIVERGED
            break
        if e < problem.tol:
            status = CONVERGED
            break
        if k >= problem.max_iter:
            break
        prev = state.ctrl
        try:
            if method == "mlspia":
                state = mlspia_step(problem, state)
            else:
                state = IterationState(state.lam, lspia_step(problem, state.ctrl), k + 1)
        except DivergenceError:
            status = DIVERGED
            break
        step_norm = float(np.max(np.linalg.norm((state.ctrl - prev).reshape(-1, prev.shape[-1]), axis=1)))
        k += 1
    log.debug("%s finished: %s after %d steps, E=%.3e", method, status, k, history[-1].error)
    return RunResult(state.ctrl, history, status, method)


def direct_ls(problem: FitProblem, tol: float = spectral.DEFAULT_RANK_TOL) -> np.ndarray:
    """Minimum-norm least-squares control points via the Gram eigendecomposition."""
    if problem.is_surface:
        s1, V1 = spectral.gram_decomposition(problem.bases[0])
        s2, V2 = spectral.gram_decomposition(problem.bases[1])
        rhs = problem.adjoint(problem.data)
        G = np.einsum("ia,ijc,jb->abc", V1, rhs, V2)
        prod = np.outer(s1, s2)
        keep = prod > tol * prod.max()
        scale = np.where(keep, 1.0 / np.where(keep, prod, 1.0) ** 2, 0.0)
        G *= scale[:, :, None]
        return np.einsum("ia,abc,jb->ijc", V1, G, V2)
    s, V = spectral.gram_decomposition(problem.bases[0])
    keep = s > tol * s[0]
    Vr = V[:, keep]
    rhs = problem.adjoint(problem.data)
    return Vr @ ((Vr.T @ rhs) / (s[keep] ** 2)[:, None])


def max_deviation(a: np.ndarray, b: np.ndarray, knots: tuple, samples: int | None = None) -> float:
    """Largest pointwise distance between two splines on the same basis.

    Curves sample ``samples`` (default 4096) parameters; surfaces a
    ``samples x samples`` (default 256) grid.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"control shapes differ: {a.shape} vs {b.shape}")
    diff = a - b
    if len(knots) == 2:
        kv_u, kv_v = knots
        if diff.shape[:2] != (kv_u.n, kv_v.n):
            raise ValueError("control net does not match the bases")
        ts = np.linspace(0.0, 1.0, samples or 256)
        D = tensor_apply(collocate(kv_u, ts), collocate(kv_v, ts), diff)
        return float(np.max(np.linalg.norm(D, axis=-1)))
    (kv,) = knots
    if diff.shape[0] != kv.n:
        raise ValueError("control points do not match the basis")
    if diff.ndim == 1:
        diff = diff[:, None]
    ts = np.linspace(0.0, 1.0, samples or 4096)
    return float(np.max(np.linalg.norm(collocate(kv, ts) @ diff, axis=1)))


__all__ = [
    "FitProblem", "IterationState", "ConvergenceRecord", "RunResult", "DivergenceError",
    "InvalidWeightsError", "curve_problem", "surface_problem", "init_state", "initial_ctrl",
    "subsample_indices", "lspia_step", "mlspia_step", "mlspia_surface_step",
    "mlspia_step_per_point", "mlspia_surface_step_per_entry", "error_E", "run", "direct_ls",
    "max_deviation", "SpectralSummary",
]
