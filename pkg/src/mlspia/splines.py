"""B-spline bases, knot vectors, collocation matrices and curve/surface evaluation.

Indices are zero-based throughout. Collocation matrices are stored as
``scipy.sparse.csr_matrix`` with at most ``degree + 1`` entries per row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse


@dataclass(frozen=True)
class KnotVector:
    """Clamped knot vector on [0, 1]."""

    degree: int
    knots: np.ndarray

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        p = int(self.degree)
        if p < 1:
            raise ValueError(f"degree must be positive, got {p}")
        if knots.ndim != 1 or knots.size < 2 * p + 2:
            raise ValueError("knot vector too short for the degree")
        if np.any(np.diff(knots) < 0):
            raise ValueError("knots must be nondecreasing")
        if np.any(knots[: p + 1] != knots[0]) or np.any(knots[-p - 1 :] != knots[-1]):
            raise ValueError("knot vector must be clamped (end knots repeated degree+1 times)")
        knots.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "degree", p)

    @property
    def n(self) -> int:
        """Number of basis functions."""
        return self.knots.size - self.degree - 1

    @property
    def interior(self) -> np.ndarray:
        return self.knots[self.degree + 1 : -self.degree - 1]


def make_knots(params, n: int, degree: int = 3) -> KnotVector:
    """Clamped knot vector whose interior knots average the parameters.

    With ``m`` parameters, ``d = m / (n - p)`` and for ``j = 1 .. n-p-1``::

        i = floor(j * d),  a = j * d - i
        u[p + j] = (1 - a) * t[i - 1] + a * t[i]      (t zero-based)

    This keeps every basis function supported by at least one parameter.
    """
    t = np.asarray(params, dtype=float)
    m = t.size
    p = int(degree)
    if n <= p:
        raise ValueError(f"need more control points than the degree (n={n}, p={p})")
    if m < n:
        raise ValueError(f"need at least as many parameters as control points (m={m}, n={n})")
    if np.any(np.diff(t) <= 0):
        raise ValueError("parameters must be strictly increasing")

    d = m / (n - p)
    interior = np.empty(n - p - 1)
    for j in range(1, n - p):
        i = int(np.floor(j * d))
        a = j * d - i
        interior[j - 1] = (1.0 - a) * t[i - 1] + a * t[i]
    knots = np.concatenate([np.zeros(p + 1), interior, np.ones(p + 1)])
    return KnotVector(p, knots)


def uniform_knots(n: int, degree: int = 3) -> KnotVector:
    p = degree
    interior = np.linspace(0.0, 1.0, n - p + 1)[1:-1]
    return KnotVector(p, np.concatenate([np.zeros(p + 1), interior, np.ones(p + 1)]))


def find_spans(kv: KnotVector, t: np.ndarray) -> np.ndarray:
    """Index ``s`` with ``knots[s] <= t < knots[s+1]``; the right end maps to the last span."""
    spans = np.searchsorted(kv.knots, t, side="right") - 1
    return np.clip(spans, kv.degree, kv.n - 1)


def _check_domain(t: np.ndarray) -> None:
    if np.any(~np.isfinite(t)) or np.any(t < 0.0) or np.any(t > 1.0):
        bad = t[~((t >= 0.0) & (t <= 1.0))]
        raise ValueError(f"parameter outside [0, 1]: {bad[:5]}")


def basis_values(kv: KnotVector, t) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized Cox-de Boor evaluation.

    Returns ``(spans, values)`` where ``values[k, r]`` is ``B_{spans[k]-p+r}(t[k])``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    _check_domain(t)
    p = kv.degree
    U = kv.knots
    spans = find_spans(kv, t)
    N = np.zeros((t.size, p + 1))
    N[:, 0] = 1.0
    left = np.zeros((t.size, p + 1))
    right = np.zeros((t.size, p + 1))
    for j in range(1, p + 1):
        left[:, j] = t - U[spans + 1 - j]
        right[:, j] = U[spans + j] - t
        saved = np.zeros(t.size)
        for r in range(j):
            temp = N[:, r] / (right[:, r + 1] + left[:, j - r])
            N[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        N[:, j] = saved
    return spans, N


def eval_basis(kv: KnotVector, t: float) -> list[tuple[int, float]]:
    """Nonzero basis values at a single parameter as ``(index, value)`` pairs."""
    spans, N = basis_values(kv, [t])
    first = spans[0] - kv.degree
    return [(first + r, float(v)) for r, v in enumerate(N[0]) if v != 0.0]


def collocate(kv: KnotVector, params) -> sparse.csr_matrix:
    """Sparse ``m x n`` collocation matrix with entries ``B_i(t_j)``."""
    t = np.atleast_1d(np.asarray(params, dtype=float))
    spans, N = basis_values(kv, t)
    p = kv.degree
    m = t.size
    cols = (spans - p)[:, None] + np.arange(p + 1)[None, :]
    indptr = np.arange(0, m * (p + 1) + 1, p + 1)
    B = sparse.csr_matrix((N.ravel(), cols.ravel(), indptr), shape=(m, kv.n))
    return B


def _as_points(ctrl) -> np.ndarray:
    P = np.asarray(ctrl, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    return P


def eval_curve(ctrl, kv: KnotVector, t):
    """Curve point(s) ``sum_i B_i(t) P_i``; scalar ``t`` gives one point."""
    P = _as_points(ctrl)
    if P.shape[0] != kv.n:
        raise ValueError(f"expected {kv.n} control points, got {P.shape[0]}")
    scalar = np.ndim(t) == 0
    B = collocate(kv, t)
    C = B @ P
    return C[0] if scalar else C


def eval_surface(net, kv_u: KnotVector, kv_v: KnotVector, t, s):
    """Tensor-product surface ``sum_ij phi_i(t) psi_j(s) P_ij``.

    ``net`` has shape ``(n_u, n_v, d)``. Scalar ``t`` and ``s`` give one point;
    arrays give the grid of points, shape ``(len(t), len(s), d)``.
    """
    P = np.asarray(net, dtype=float)
    if P.ndim != 3 or P.shape[:2] != (kv_u.n, kv_v.n):
        raise ValueError(f"control net shape {P.shape} does not match bases ({kv_u.n}, {kv_v.n})")
    scalar = np.ndim(t) == 0 and np.ndim(s) == 0
    Bu = collocate(kv_u, t)
    Bv = collocate(kv_v, s)
    S = tensor_apply(Bu, Bv, P)
    return S[0, 0] if scalar else S


def tensor_apply(B1, B2, X: np.ndarray) -> np.ndarray:
    """Apply ``B1 (.) B2^T`` to every coordinate slice of ``X`` (shape ``(a, b, d)``)."""
    a, b, d = X.shape
    Y = B1 @ X.reshape(a, b * d)
    r1 = Y.shape[0]
    Y = Y.reshape(r1, b, d).transpose(1, 0, 2).reshape(b, r1 * d)
    Z = B2 @ Y
    r2 = Z.shape[0]
    return np.ascontiguousarray(Z.reshape(r2, r1, d).transpose(1, 0, 2))


def derivative_curve(ctrl, kv: KnotVector) -> tuple[np.ndarray, KnotVector]:
    """Hodograph: control points and knots of ``C'`` (degree ``p - 1``)."""
    P = _as_points(ctrl)
    p = kv.degree
    if p < 2:
        raise ValueError("derivative curve of a degree-1 spline is not a spline of positive degree")
    U = kv.knots
    denom = U[p + 1 : p + kv.n] - U[1 : kv.n]
    diff = P[1:] - P[:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        D = np.where(denom[:, None] > 0, p * diff / denom[:, None], 0.0)
    return D, KnotVector(p - 1, U[1:-1])


def curve_derivatives(ctrl, kv: KnotVector, t, order: int = 2) -> list[np.ndarray]:
    """``[C(t), C'(t), ..., C^(order)(t)]`` evaluated at the parameters ``t``."""
    P = _as_points(ctrl)
    out = [collocate(kv, t) @ P]
    cur_P, cur_kv = P, kv
    for _ in range(order):
        if cur_kv.degree == 1:
            # derivative of a piecewise-linear spline is piecewise constant
            U = cur_kv.knots
            tt = np.atleast_1d(np.asarray(t, dtype=float))
            spans = find_spans(cur_kv, tt)
            h = U[spans + 1] - U[spans]
            dP = (cur_P[spans] - cur_P[spans - 1]) / h[:, None]
            out.append(dP)
            cur_P = None
            break
        cur_P, cur_kv = derivative_curve(cur_P, cur_kv)
        out.append(collocate(cur_kv, t) @ cur_P)
    while len(out) < order + 1:
        out.append(np.zeros_like(out[0]))
    return out


def curvature_samples(ctrl, kv: KnotVector, k: int, eps: float = 1e-12):
    """Sample position and curvature at ``k`` uniform parameters.

    Planar curves use ``|x'y'' - y'x''| / |C'|^3``; 3-D curves use
    ``|C' x C''| / |C'|^3``. Samples with ``|C'| < eps`` carry ``None``.
    """
    if kv.degree < 2:
        raise ValueError("curvature needs degree >= 2")
    if k < 2:
        raise ValueError("need at least two samples")
    P = _as_points(ctrl)
    ts = np.linspace(0.0, 1.0, k)
    C, d1, d2 = curve_derivatives(P, kv, ts, order=2)
    speed = np.linalg.norm(d1, axis=1)
    if P.shape[1] == 2:
        cross = np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    elif P.shape[1] == 3:
        cross = np.linalg.norm(np.cross(d1, d2), axis=1)
    else:
        raise ValueError("curvature defined for 2-D and 3-D curves only")
    samples = []
    for t, pt, sp, cr in zip(ts, C, speed, cross):
        kappa = None if sp < eps else float(cr / sp**3)
        samples.append((float(t), pt.copy(), kappa))
    return samples
