"""Synthetic point sets for experiments.

Only ``polar-sin4`` reproduces a published dataset exactly (the curve
``r = sin(theta / 4)`` on ``[0, 8 pi]``). The other generators are labeled
stand-ins with a similar character; they are not the measured datasets.
"""

from __future__ import annotations

import numpy as np

CURVE_EXAMPLES = ("airfoil-like", "incenter-like", "polar-sin4", "gfont-like", "random")
SURFACE_EXAMPLES = ("face-like", "sincos", "random")
EXAMPLES = tuple(dict.fromkeys(CURVE_EXAMPLES + SURFACE_EXAMPLES))

# point counts used by the published examples
DEFAULT_SIZES = {
    "airfoil-like": 205,
    "incenter-like": 305,
    "polar-sin4": 501,
    "gfont-like": 269,
    "random": 100,
    "face-like": (81, 81),
    "sincos": (41, 41),
}


def polar_sin4(m: int = 501) -> np.ndarray:
    theta = np.linspace(0.0, 8.0 * np.pi, m)
    r = np.sin(theta / 4.0)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def airfoil_like(m: int = 205, thickness: float = 0.12) -> np.ndarray:
    """Symmetric NACA 00xx section, trailing edge over the top and back."""
    beta = np.linspace(0.0, 2.0 * np.pi, m)
    x = 0.5 * (1.0 + np.cos(beta))
    yt = 5 * thickness * (0.2969 * np.sqrt(x) - 0.1260 * x - 0.3516 * x**2 + 0.2843 * x**3 - 0.1015 * x**4)
    y = np.where(beta <= np.pi, yt, -yt)
    return np.column_stack([x, y])


def incenter_like(m: int = 305) -> np.ndarray:
    """Smooth closed-ish blob with varying curvature."""
    theta = np.linspace(0.0, 2.0 * np.pi, m, endpoint=False)
    r = 1.0 + 0.3 * np.cos(3 * theta) + 0.1 * np.sin(5 * theta)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def gfont_like(m: int = 269) -> np.ndarray:
    """Letter-G outline: an open arc followed by a bar, sampled by arc length."""
    arc = np.linspace(np.pi / 4, 2.0 * np.pi, 400)
    pts = [np.column_stack([np.cos(arc), np.sin(arc)])]
    pts.append(np.column_stack([np.linspace(1.0, 0.2, 80)[1:], np.zeros(79)]))
    pts.append(np.column_stack([np.full(40, 0.2), np.linspace(0.0, -0.3, 41)[1:]]))
    poly = np.vstack(pts)
    seg = np.linalg.norm(np.diff(poly, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    target = np.linspace(0.0, s[-1], m)
    return np.column_stack([np.interp(target, s, poly[:, 0]), np.interp(target, s, poly[:, 1])])


def face_like(m1: int = 81, m2: int = 81) -> np.ndarray:
    """Height field with a few Gaussian bumps and a ridge on a unit square."""
    x = np.linspace(-1.0, 1.0, m1)
    y = np.linspace(-1.0, 1.0, m2)
    X, Y = np.meshgrid(x, y, indexing="ij")
    Z = (0.6 * np.exp(-(X**2 + (Y + 0.1) ** 2) / 0.08)
         + 0.25 * np.exp(-((X - 0.35) ** 2 + (Y - 0.35) ** 2) / 0.02)
         + 0.25 * np.exp(-((X + 0.35) ** 2 + (Y - 0.35) ** 2) / 0.02)
         - 0.15 * np.exp(-(X**2 + (Y + 0.5) ** 2 * 6) / 0.05)
         + 0.3 * (1 - X**2) * (1 - Y**2))
    return np.stack([X, Y, Z], axis=-1)


def sincos_grid(m1: int = 41, m2: int = 41) -> np.ndarray:
    """``z = sin(x) cos(y)`` over ``[0, pi] x [0, pi]``."""
    x = np.linspace(0.0, np.pi, m1)
    y = np.linspace(0.0, np.pi, m2)
    X, Y = np.meshgrid(x, y, indexing="ij")
    return np.stack([X, Y, np.sin(X) * np.cos(Y)], axis=-1)


def gen_example(name: str, size=None, seed: int = 0, dim: int = 2) -> np.ndarray:
    """Points for a named example; ``size`` is ``m`` or ``(m1, m2)``.

    ``random`` with an integer size gives ``m`` points in ``[-1, 1]^dim``;
    with a pair it gives a ``(m1, m2, 3)`` grid of random heights over a
    regular ``(x, y)`` lattice.
    """
    if name not in EXAMPLES:
        raise ValueError(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}")
    size = DEFAULT_SIZES[name] if size is None else size
    sizes = np.atleast_1d(size)
    if np.any(sizes < 4):
        raise ValueError(f"example sizes must be at least 4, got {size}")
    if name == "random":
        rng = np.random.default_rng(seed)
        if sizes.size == 2:
            m1, m2 = map(int, sizes)
            X, Y = np.meshgrid(np.linspace(-1, 1, m1), np.linspace(-1, 1, m2), indexing="ij")
            return np.stack([X, Y, rng.uniform(-1.0, 1.0, (m1, m2))], axis=-1)
        return rng.uniform(-1.0, 1.0, (int(sizes[0]), dim))
    if name in SURFACE_EXAMPLES:
        m1, m2 = (int(sizes[0]), int(sizes[-1]))
        return face_like(m1, m2) if name == "face-like" else sincos_grid(m1, m2)
    m = int(sizes[0])
    return {
        "airfoil-like": lambda: airfoil_like(m),
        "incenter-like": lambda: incenter_like(m),
        "polar-sin4": lambda: polar_sin4(m),
        "gfont-like": lambda: gfont_like(m),
    }[name]()
