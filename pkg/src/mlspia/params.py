"""Parameter values for data points."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateDataError(ValueError):
    pass


@dataclass(frozen=True)
class SurfaceParams:
    u: np.ndarray
    v: np.ndarray


def chord_params(data) -> np.ndarray:
    """Normalized accumulated chord-length parameters in [0, 1]."""
    Q = np.asarray(data, dtype=float)
    if Q.ndim == 1:
        Q = Q[:, None]
    if Q.shape[0] < 2:
        raise ValueError("need at least two points")
    chords = np.linalg.norm(np.diff(Q, axis=0), axis=1)
    zero = np.flatnonzero(chords == 0.0)
    if zero.size:
        raise DegenerateDataError(
            f"consecutive points {zero[0]} and {zero[0] + 1} coincide (zero chord)"
        )
    t = np.concatenate([[0.0], np.cumsum(chords)])
    t /= t[-1]
    t[-1] = 1.0
    return t


def _averaged(Q: np.ndarray, axis_name: str) -> np.ndarray:
    # Q has shape (count, length, d); parameterize along axis 1, average over axis 0
    chords = np.linalg.norm(np.diff(Q, axis=1), axis=2)
    totals = chords.sum(axis=1)
    bad = np.flatnonzero(totals == 0.0)
    if bad.size:
        raise DegenerateDataError(f"{axis_name} {bad[0]} is degenerate (all chords zero)")
    t = np.concatenate([np.zeros((Q.shape[0], 1)), np.cumsum(chords, axis=1)], axis=1)
    t /= totals[:, None]
    t[:, -1] = 1.0
    avg = t.mean(axis=0)
    avg[0], avg[-1] = 0.0, 1.0
    return avg


def grid_params(data) -> SurfaceParams:
    """Averaged chord parameters for a point grid of shape ``(m1, m2, d)``.

    ``u[i]`` averages, over every column ``j``, the chord parameter of
    ``Q[i, j]`` along the column ``Q[:, j]``; ``v`` is the same along rows.
    """
    Q = np.asarray(data, dtype=float)
    if Q.ndim != 3 or Q.shape[0] < 2 or Q.shape[1] < 2:
        raise ValueError(f"need a grid of shape (m1>=2, m2>=2, d), got {Q.shape}")
    u = _averaged(Q.transpose(1, 0, 2), "column")
    v = _averaged(Q, "row")
    for name, w in (("u", u), ("v", v)):
        if np.any(np.diff(w) <= 0):
            raise DegenerateDataError(f"averaged {name}-parameters are not strictly increasing")
    return SurfaceParams(u, v)
