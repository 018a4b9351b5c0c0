"""Smooth cutoff profiles and their quadrature constants.

All constructions and Fourier multipliers share the same C^infty
building blocks: the normalized exponential step ``smooth_step`` and the
plateau cutoff ``phi_cutoff`` (identically 1 on [0,1], 0 beyond 2).
"""

from functools import lru_cache

import numpy as np


def _exp_side(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C^infty step: 0 for t <= 0, 1 for t >= 1, strictly monotone between."""
    t = np.asarray(t, dtype=float)
    a = _exp_side(t)
    b = _exp_side(1.0 - t)
    return a / (a + b + 1e-300)


def phi_cutoff(x):
    """Plateau cutoff: phi = 1 on [0, 1], phi = smooth_step(2 - x) on (1, 2), 0 beyond.

    Nonincreasing and C^infty on [0, inf).
    """
    x = np.asarray(np.abs(x), dtype=float)
    out = np.ones_like(x)
    mid = (x > 1.0) & (x < 2.0)
    out[mid] = smooth_step(2.0 - x[mid])
    out[x >= 2.0] = 0.0
    return out


@lru_cache(maxsize=None)
def step_constants(n_quad: int = 4096):
    """Quadrature constants of the smooth step on [0, 1].

    Returns (c_mis, c_der) with
      c_mis = int (1 - S)^2 dt,   c_der = int (S')^2 dt.
    """
    t = (np.arange(n_quad) + 0.5) / n_quad
    s = smooth_step(t)
    c_mis = float(np.mean((1.0 - s) ** 2))
    ds = np.gradient(s, t)
    c_der = float(np.mean(ds**2))
    return c_mis, c_der


def mollifier_1d(width: float, n: int = 257):
    """Compactly supported even C^infty kernel on [-width, width], unit mass.

    Returns (offsets, weights) suitable for discrete convolution.
    """
    x = np.linspace(-width, width, n)
    t = 1.0 - (x / width) ** 2
    w = np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
    w /= np.trapezoid(w, x)
    return x, w


@lru_cache(maxsize=None)
def mollifier_q_norm(q: float, n: int = 20001):
    """c_q = int psi(t)^q dt for the unit-width 1d mollifier psi.

    The transition profile of a mollified jump has derivative psi_eps, so
    int |psi_eps|^q = c_q * eps^(1-q).
    """
    x, w = mollifier_1d(1.0, n)
    return float(np.trapezoid(w**q, x))
